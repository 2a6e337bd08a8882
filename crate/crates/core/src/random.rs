//! Seeded generators of small random instances, for property checks and the
//! `--seed` option of the command line.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagrams::{Clamp, DiagramBuilder, Source};
use crate::error::Result;
use crate::fstheory::{FsDiagram, FsGen};
use crate::nogo::QuantumSetup;
use crate::optheory::quantum::{CMatrix, QuantumProcess};
use crate::optheory::{qudit, ClassicalModel, OpDiagram, OpGen, PredictionMap, ProcSet, QuantumModel};
use crate::rational::Q;
use crate::substoch::{KnowledgeState, Proposition, SubstochMap};
use crate::tensor::Matrix;
use crate::types::{Carrier, SystemType};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A probability vector of length `n` with denominators dividing a small sum.
pub fn distribution(rng: &mut Rng64, n: usize) -> Vec<Q> {
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=4)).collect();
    let total: i64 = w.iter().sum();
    if total == 0 {
        let mut p = vec![Q::from_integer(0.into()); n];
        p[rng.gen_range(0..n)] = Q::from_integer(1.into());
        return p;
    }
    w.into_iter().map(|x| Q::new(x.into(), total.into())).collect()
}

fn matrix_from_columns(rows: usize, cols: Vec<Vec<Q>>) -> Matrix<Q> {
    let mut m = Matrix::zeros(rows, cols.len());
    for (c, col) in cols.into_iter().enumerate() {
        for (r, v) in col.into_iter().take(rows).enumerate() {
            m.set(r, c, v);
        }
    }
    m
}

pub fn stochastic(rng: &mut Rng64, dom: &Carrier, cod: &Carrier) -> Result<SubstochMap> {
    let (n, m) = (dom.size()?, cod.size()?);
    let cols = (0..n).map(|_| distribution(rng, m)).collect();
    SubstochMap::new(dom.clone(), cod.clone(), matrix_from_columns(m, cols))
}

/// Columns sum to at most one: the dropped last entry is the deficit.
pub fn substochastic(rng: &mut Rng64, dom: &Carrier, cod: &Carrier) -> Result<SubstochMap> {
    let (n, m) = (dom.size()?, cod.size()?);
    let cols = (0..n).map(|_| distribution(rng, m + 1)).collect();
    SubstochMap::new(dom.clone(), cod.clone(), matrix_from_columns(m, cols))
}

pub fn state(rng: &mut Rng64, c: &Carrier) -> Result<KnowledgeState> {
    KnowledgeState::new(c.clone(), distribution(rng, c.size()?))
}

pub fn proposition(rng: &mut Rng64, c: &Carrier) -> Result<Proposition> {
    let n = c.size()?;
    Proposition::new(c.clone(), (0..n).map(|_| rng.gen_bool(0.5)).collect())
}

pub fn carrier(rng: &mut Rng64, max: usize) -> Carrier {
    Carrier::range(rng.gen_range(1..=max.max(1)))
}

/// Budget on the product of open input and output sizes, keeping exact
/// evaluation cheap.
const OPEN_BUDGET: usize = 64;

fn open_size(types: &[SystemType]) -> usize {
    types
        .iter()
        .map(|t| t.carrier.size().unwrap_or(usize::MAX))
        .fold(1usize, |a, b| a.saturating_mul(b))
}

/// A random F-S diagram with at most `max_gens` boxes and carriers of size at
/// most `max_carrier`. Knowledge boxes read at most one causal wire.
pub fn fs_diagram(rng: &mut Rng64, max_gens: usize, max_carrier: usize) -> Result<FsDiagram> {
    loop {
        let d = fs_attempt(rng, max_gens.max(1), max_carrier.max(1))?;
        if open_size(d.inputs()) <= OPEN_BUDGET && open_size(d.outputs()) <= OPEN_BUDGET {
            return Ok(d);
        }
    }
}

fn fs_attempt(rng: &mut Rng64, max_gens: usize, max_carrier: usize) -> Result<FsDiagram> {
    let mut b = DiagramBuilder::new();
    let mut causal: Vec<(Source, Carrier)> = Vec::new();
    let mut inferential: Vec<(Source, Carrier)> = Vec::new();
    if rng.gen_bool(0.3) {
        let c = carrier(rng, max_carrier);
        causal.push((b.input(SystemType::causal(c.clone())), c));
    }
    if rng.gen_bool(0.3) {
        let c = carrier(rng, max_carrier);
        inferential.push((b.input(SystemType::inferential(c.clone())), c));
    }
    let n_gens = rng.gen_range(1..=max_gens);
    let mut used = 0;
    while used < n_gens {
        let id = format!("g{used}");
        match rng.gen_range(0..4) {
            0 => {
                let dom = if !causal.is_empty() && rng.gen_bool(0.5) {
                    vec![causal.remove(rng.gen_range(0..causal.len()))]
                } else {
                    vec![]
                };
                let cod = carrier(rng, max_carrier);
                let dom_c: Vec<Carrier> = dom.iter().map(|(_, c)| c.clone()).collect();
                let hom = FsGen::hom_carrier(&dom_c, std::slice::from_ref(&cod));
                // knowledge comes from an open input or from a random state box
                let k = if used + 1 < n_gens && rng.gen_bool(0.6) {
                    used += 1;
                    let s = state(rng, &hom)?.to_map();
                    b.add(format!("{id}.k"), FsGen::embedded(format!("{id}.k"), s), &[])[0]
                } else {
                    b.input(SystemType::inferential(hom))
                };
                let mut feeds = vec![k];
                feeds.extend(dom.iter().map(|(s, _)| *s));
                let out = b.add(id, FsGen::knowledge(dom_c, vec![cod.clone()]), &feeds);
                causal.push((out[0], cod));
            }
            1 if !causal.is_empty() => {
                let (s, c) = causal.remove(rng.gen_range(0..causal.len()));
                let out = b.add(id, FsGen::gain(c.clone()), &[s]);
                causal.push((out[0], c.clone()));
                inferential.push((out[1], c));
            }
            2 if !causal.is_empty() => {
                let (s, c) = causal.remove(rng.gen_range(0..causal.len()));
                b.add(id, FsGen::ignore(c), &[s]);
            }
            3 => {
                let input = if !inferential.is_empty() && rng.gen_bool(0.7) {
                    Some(inferential.remove(rng.gen_range(0..inferential.len())))
                } else {
                    None
                };
                let dom = input.as_ref().map_or(Carrier::unit(), |(_, c)| c.clone());
                let cod = carrier(rng, max_carrier);
                let map = substochastic(rng, &dom, &cod)?;
                let feeds: Vec<Source> = input.iter().map(|(s, _)| *s).collect();
                let out = b.add(id.clone(), FsGen::embedded(id, map), &feeds);
                inferential.push((out[0], cod));
            }
            _ => continue,
        }
        used += 1;
    }
    let mut outs: Vec<Source> = causal.iter().chain(&inferential).map(|(s, _)| *s).collect();
    outs.shuffle(rng);
    b.finish(&outs)
}

/// A clamp around a hole of the given signature: the inputs are prepared from
/// random knowledge, the outputs are read into one inferential wire together
/// with an auxiliary random state.
pub fn fs_clamp(rng: &mut Rng64, hole_inputs: &[SystemType], hole_outputs: &[SystemType]) -> Result<Clamp<FsGen>> {
    let mut pre = DiagramBuilder::new();
    let mut pre_outs = Vec::new();
    for (i, t) in hole_inputs.iter().enumerate() {
        let c = t.carrier.clone();
        if t.is_causal() {
            let hom = FsGen::hom_carrier(&[], std::slice::from_ref(&c));
            let k = pre.add(format!("pk{i}"), FsGen::embedded(format!("pk{i}"), state(rng, &hom)?.to_map()), &[]);
            pre_outs.push(pre.add(format!("prep{i}"), FsGen::knowledge(vec![], vec![c]), &k)[0]);
        } else {
            let s = state(rng, &c)?.to_map();
            pre_outs.push(pre.add(format!("ps{i}"), FsGen::embedded(format!("ps{i}"), s), &[])[0]);
        }
    }
    let aux_c = carrier(rng, 2);
    let aux = pre.add("aux", FsGen::embedded("aux", state(rng, &aux_c)?.to_map()), &[]);
    pre_outs.push(aux[0]);
    let pre = pre.finish(&pre_outs)?;

    let mut post = DiagramBuilder::new();
    let mut wires = Vec::new();
    for (j, t) in hole_outputs.iter().enumerate() {
        let s = post.input(t.clone());
        if t.is_causal() {
            let g = post.add(format!("read{j}"), FsGen::gain(t.carrier.clone()), &[s]);
            post.add(format!("drop{j}"), FsGen::ignore(t.carrier.clone()), &[g[0]]);
            wires.push((g[1], t.carrier.clone()));
        } else {
            wires.push((s, t.carrier.clone()));
        }
    }
    let a = post.input(SystemType::inferential(aux_c.clone()));
    wires.push((a, aux_c));
    let dom = Carrier::product(wires.iter().map(|(_, c)| c.clone()));
    let cod = carrier(rng, 3);
    let feeds: Vec<Source> = wires.iter().map(|(s, _)| *s).collect();
    let out = post.add("judge", FsGen::embedded_ports("judge", wires.iter().map(|(_, c)| c.clone()).collect(), vec![cod.clone()], substochastic(rng, &dom, &cod)?)?, &feeds);
    let post = post.finish(&out)?;
    Clamp::new(pre, post, hole_inputs.to_vec(), hole_outputs.to_vec())
}

/// Classical systems and procedures: preparations `prep*` of `X`, channels
/// `chan*` from `X` to `X`, and measurements `meas*` from `X` to `Y`.
pub fn classical_model(rng: &mut Rng64) -> Result<(ClassicalModel, SystemType, SystemType)> {
    let x = Carrier::range(rng.gen_range(2..=3));
    let y = Carrier::range(2);
    let mut model = ClassicalModel::default();
    for i in 0..2 {
        model.procedures.insert(format!("prep{i}"), stochastic(rng, &Carrier::unit(), &x)?);
        model.procedures.insert(format!("chan{i}"), stochastic(rng, &x, &x)?);
        model.procedures.insert(format!("meas{i}"), stochastic(rng, &x, &y)?);
    }
    Ok((model, SystemType::classical(x), SystemType::classical(y)))
}

fn complex(rng: &mut Rng64) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn unitary(rng: &mut Rng64, d: usize) -> CMatrix {
    loop {
        let m = CMatrix::from_fn(d, d, |_, _| complex(rng));
        if m.determinant().norm() > 1e-3 {
            return m.qr().q();
        }
    }
}

pub fn pure_state(rng: &mut Rng64, d: usize) -> Vec<Complex64> {
    unitary(rng, d).column(0).iter().copied().collect()
}

/// Qubit procedures with the same names as [`classical_model`].
pub fn quantum_model(rng: &mut Rng64) -> Result<(QuantumModel, SystemType, SystemType)> {
    let mut model = QuantumModel::default();
    for i in 0..2 {
        model.procedures.insert(format!("prep{i}"), QuantumProcess::pure_state(&pure_state(rng, 2))?);
        model.procedures.insert(format!("chan{i}"), QuantumProcess::unitary(unitary(rng, 2))?);
        let u = unitary(rng, 2);
        let basis: Vec<Vec<Complex64>> = (0..2).map(|k| u.column(k).iter().copied().collect()).collect();
        model.procedures.insert(format!("meas{i}"), QuantumProcess::measurement(&basis)?);
    }
    Ok((model, qudit("Q", 2), SystemType::classical(Carrier::range(2))))
}

/// A causally closed prepare-transform-measure diagram over the procedures
/// of [`classical_model`] / [`quantum_model`]. Choices of procedure are open
/// inferential inputs or fixed by random knowledge states.
pub fn op_diagram(rng: &mut Rng64, sys: &SystemType, out: &SystemType) -> Result<OpDiagram> {
    let names = |p: &str| vec![format!("{p}0"), format!("{p}1")];
    let preps = ProcSet::new(vec![], vec![sys.clone()], names("prep"))?;
    let chans = ProcSet::new(vec![sys.clone()], vec![sys.clone()], names("chan"))?;
    let meas = ProcSet::new(vec![sys.clone()], vec![out.clone()], names("meas"))?;
    let mut b = DiagramBuilder::new();
    let mut outs = Vec::new();
    let know = |b: &mut DiagramBuilder<OpGen>, rng: &mut Rng64, id: &str, ps: &ProcSet| -> Result<Source> {
        Ok(if rng.gen_bool(0.5) {
            b.input(SystemType::inferential(ps.carrier()))
        } else {
            let s = state(rng, &ps.carrier())?.to_map();
            b.add(format!("{id}.k"), OpGen::embedded(format!("{id}.k"), s), &[])[0]
        })
    };
    for chain in 0..rng.gen_range(1..=2) {
        let k = know(&mut b, rng, &format!("p{chain}"), &preps)?;
        let mut w = b.add(format!("p{chain}"), OpGen::Knowledge(preps.clone()), &[k])[0];
        for step in 0..rng.gen_range(0..=2) {
            let id = format!("c{chain}.{step}");
            let k = know(&mut b, rng, &id, &chans)?;
            w = b.add(id, OpGen::Knowledge(chans.clone()), &[k, w])[0];
        }
        if rng.gen_bool(0.2) {
            b.add(format!("drop{chain}"), OpGen::Ignore(sys.clone()), &[w]);
            continue;
        }
        let id = format!("m{chain}");
        let k = know(&mut b, rng, &id, &meas)?;
        let r = b.add(id, OpGen::Knowledge(meas.clone()), &[k, w])[0];
        let g = b.add(format!("read{chain}"), OpGen::prop_gain(out.clone())?, &[r]);
        b.add(format!("done{chain}"), OpGen::Ignore(out.clone()), &[g[0]]);
        outs.push(g[1]);
    }
    b.finish(&outs)
}

/// A random operational diagram with its backend.
pub fn op_instance(rng: &mut Rng64, quantum: bool) -> Result<(OpDiagram, PredictionMap)> {
    if quantum {
        let (m, s, o) = quantum_model(rng)?;
        Ok((op_diagram(rng, &s, &o)?, PredictionMap::Quantum(m)))
    } else {
        let (m, s, o) = classical_model(rng)?;
        Ok((op_diagram(rng, &s, &o)?, PredictionMap::Classical(m)))
    }
}

/// A side experiment whose system is discarded: prepare, maybe transform,
/// then ignore, with random knowledge about which procedures ran.
pub fn discarded_branch(rng: &mut Rng64, sys: &SystemType) -> Result<OpDiagram> {
    let names = |p: &str| vec![format!("{p}0"), format!("{p}1")];
    let preps = ProcSet::new(vec![], vec![sys.clone()], names("prep"))?;
    let chans = ProcSet::new(vec![sys.clone()], vec![sys.clone()], names("chan"))?;
    let mut b = DiagramBuilder::new();
    let k = b.add("tau.p", OpGen::embedded("tau.p", state(rng, &preps.carrier())?.to_map()), &[]);
    let mut w = b.add("side.p", OpGen::Knowledge(preps), &k)[0];
    for step in 0..rng.gen_range(0..=2) {
        let id = format!("side.c{step}");
        let k = b.add(format!("{id}.k"), OpGen::embedded("tau.c", state(rng, &chans.carrier())?.to_map()), &[])[0];
        w = b.add(id, OpGen::Knowledge(chans.clone()), &[k, w])[0];
    }
    b.add("side.drop", OpGen::Ignore(sys.clone()), &[w]);
    b.finish(&[])
}

/// Two qubits in a random pure state, each party with `n` random projective
/// measurements.
pub fn bell_setup(rng: &mut Rng64, n: usize) -> Result<QuantumSetup> {
    let state = QuantumProcess::pure_state(&pure_state(rng, 4))?;
    let mut parties = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut ms = Vec::with_capacity(n);
        for _ in 0..n {
            let u = unitary(rng, 2);
            let basis: Vec<Vec<Complex64>> = (0..2).map(|k| u.column(k).iter().copied().collect()).collect();
            ms.push(QuantumProcess::measurement(&basis)?);
        }
        parties.push(ms);
    }
    Ok(QuantumSetup {
        state: Some(state),
        parties,
    })
}
