//! The classical realist theory: functional dynamics on causal wires,
//! substochastic inference on inferential wires, and the three generators that
//! connect them.

mod axioms;
mod rep;

pub use axioms::{verify_fs_axioms, AxiomReport, AxiomResult, AXIOM_NAMES};
pub use rep::{apply_representation, is_leibnizian, RealistRep};

use crate::diagrams::{Diagram, DiagramBuilder, Generator, Source};
use crate::error::{Error, Result};
use crate::funcdyn::{self, unindex, HomIndex};
use crate::rational::{one, Q};
use crate::substoch::{compose_seq, factorize, from_function, recombine, SubstochMap};
use crate::tensor::{evaluate, Matrix};
use crate::types::{cap, Carrier, SystemType};

#[derive(Debug, Clone, PartialEq)]
pub enum FsGen {
    /// Inferential input over `Hom(∏dom, ∏cod)`, then causal `dom` ports, to
    /// causal `cod` ports.
    Knowledge { dom: Vec<Carrier>, cod: Vec<Carrier> },
    /// Causal ports pass through; one extra inferential output over their product.
    PropGain(Vec<Carrier>),
    /// Consumes causal ports.
    Ignore(Vec<Carrier>),
    /// A purely inferential box. Equality of diagrams compares the name only.
    Embedded {
        name: String,
        inputs: Vec<Carrier>,
        outputs: Vec<Carrier>,
        map: SubstochMap,
    },
}

impl FsGen {
    pub fn knowledge(dom: Vec<Carrier>, cod: Vec<Carrier>) -> Self {
        FsGen::Knowledge { dom, cod }
    }

    pub fn gain(c: Carrier) -> Self {
        FsGen::PropGain(vec![c])
    }

    pub fn ignore(c: Carrier) -> Self {
        FsGen::Ignore(vec![c])
    }

    /// Embeds `map` with one port per factor of its domain and codomain.
    pub fn embedded(name: impl Into<String>, map: SubstochMap) -> Self {
        let inputs = if map.dom().is_unit() { vec![] } else { map.dom().factors() };
        let outputs = if map.cod().is_unit() { vec![] } else { map.cod().factors() };
        FsGen::Embedded {
            name: name.into(),
            inputs,
            outputs,
            map,
        }
    }

    /// Embeds `map` with explicit port carriers; only sizes must agree.
    pub fn embedded_ports(
        name: impl Into<String>,
        inputs: Vec<Carrier>,
        outputs: Vec<Carrier>,
        map: SubstochMap,
    ) -> Result<Self> {
        let din = Carrier::product(inputs.clone()).size()?;
        let dout = Carrier::product(outputs.clone()).size()?;
        if din != map.matrix().cols || dout != map.matrix().rows {
            return Err(Error::DimensionMismatch(format!(
                "ports give {dout}x{din}, map is {}x{}",
                map.matrix().rows,
                map.matrix().cols
            )));
        }
        Ok(FsGen::Embedded {
            name: name.into(),
            inputs,
            outputs,
            map,
        })
    }

    /// The hom-set carrier read by a knowledge box.
    pub fn hom_carrier(dom: &[Carrier], cod: &[Carrier]) -> Carrier {
        Carrier::hom(Carrier::product(dom.to_vec()), Carrier::product(cod.to_vec()))
    }
}

impl Generator for FsGen {
    fn label(&self) -> String {
        match self {
            FsGen::Knowledge { .. } => "know".into(),
            FsGen::PropGain(_) => "gain".into(),
            FsGen::Ignore(_) => "ignore".into(),
            FsGen::Embedded { name, .. } => format!("emb:{name}"),
        }
    }

    fn inputs(&self) -> Vec<SystemType> {
        match self {
            FsGen::Knowledge { dom, cod } => std::iter::once(SystemType::inferential(FsGen::hom_carrier(dom, cod)))
                .chain(dom.iter().cloned().map(SystemType::causal))
                .collect(),
            FsGen::PropGain(cs) | FsGen::Ignore(cs) => cs.iter().cloned().map(SystemType::causal).collect(),
            FsGen::Embedded { inputs, .. } => inputs.iter().cloned().map(SystemType::inferential).collect(),
        }
    }

    fn outputs(&self) -> Vec<SystemType> {
        match self {
            FsGen::Knowledge { cod, .. } => cod.iter().cloned().map(SystemType::causal).collect(),
            FsGen::PropGain(cs) => cs
                .iter()
                .cloned()
                .map(SystemType::causal)
                .chain(std::iter::once(SystemType::inferential(Carrier::product(cs.clone()))))
                .collect(),
            FsGen::Ignore(_) => Vec::new(),
            FsGen::Embedded { outputs, .. } => outputs.iter().cloned().map(SystemType::inferential).collect(),
        }
    }
}

pub type FsDiagram = Diagram<FsGen>;

fn check_volume(what: &str, rows: usize, cols: usize) -> Result<()> {
    let limit = cap();
    match rows.checked_mul(cols) {
        Some(v) if v <= limit => Ok(()),
        _ => Err(Error::cap(what, rows as u128 * cols as u128, limit)),
    }
}

/// Matrix of a single generator, outputs as rows and inputs as columns.
pub fn generator_matrix(g: &FsGen) -> Result<Matrix<Q>> {
    match g {
        FsGen::Knowledge { dom, cod } => {
            let d = Carrier::product(dom.clone());
            let c = Carrier::product(cod.clone());
            let (n, m) = (d.size()?, c.size()?);
            let h = funcdyn::homset_size(&d, &c)?;
            check_volume("knowledge box", m, h * n)?;
            let mut mat = Matrix::zeros(m, h * n);
            for fi in 0..h {
                let f = unindex(&HomIndex {
                    dom: d.clone(),
                    cod: c.clone(),
                    index: fi,
                })?;
                for (x, &y) in f.table.iter().enumerate() {
                    mat.set(y, fi * n + x, one());
                }
            }
            Ok(mat)
        }
        FsGen::PropGain(cs) => {
            let n = Carrier::product(cs.clone()).size()?;
            check_volume("proposition gain", n * n, n)?;
            let mut mat = Matrix::zeros(n * n, n);
            for x in 0..n {
                mat.set(x * n + x, x, one());
            }
            Ok(mat)
        }
        FsGen::Ignore(cs) => {
            let n = Carrier::product(cs.clone()).size()?;
            Ok(Matrix {
                rows: 1,
                cols: n,
                data: vec![one(); n],
            })
        }
        FsGen::Embedded { map, .. } => Ok(map.matrix().clone()),
    }
}

fn carriers(types: &[SystemType]) -> Carrier {
    Carrier::product(types.iter().map(|t| t.carrier.clone()))
}

/// The substochastic map of a diagram, open causal wires included as indices.
pub fn denote(d: &FsDiagram) -> Result<SubstochMap> {
    let m = evaluate(d, |t| t.carrier.size(), generator_matrix)?;
    SubstochMap::new(carriers(d.inputs()), carriers(d.outputs()), m)
}

/// The unique prediction map; only defined without open causal wires.
pub fn predict(d: &FsDiagram) -> Result<SubstochMap> {
    if let Some(t) = d.inputs().iter().chain(d.outputs()).find(|t| t.is_causal()) {
        return Err(Error::NotCausallyClosed(format!("open causal port of type {t}")));
    }
    denote(d)
}

pub fn inferentially_equivalent(d1: &FsDiagram, d2: &FsDiagram) -> Result<bool> {
    if d1.inputs() != d2.inputs() || d1.outputs() != d2.outputs() {
        return Err(Error::SignatureMismatch(
            "equivalence needs identical open-port signatures".into(),
        ));
    }
    Ok(denote(d1)? == denote(d2)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    /// Domain: inferential inputs then causal inputs; codomain likewise.
    pub s: SubstochMap,
    /// Original input port of each bundle position.
    pub input_order: Vec<usize>,
    pub output_order: Vec<usize>,
    pub inputs: Vec<SystemType>,
    pub outputs: Vec<SystemType>,
}

fn bundle_order(types: &[SystemType]) -> Vec<usize> {
    let (mut inf, mut causal): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
    for (i, t) in types.iter().enumerate() {
        if t.is_causal() {
            causal.push(i);
        } else {
            inf.push(i);
        }
    }
    inf.extend(causal);
    inf
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &p) in perm.iter().enumerate() {
        inv[p] = j;
    }
    inv
}

pub fn normal_form(d: &FsDiagram) -> Result<NormalForm> {
    let input_order = bundle_order(d.inputs());
    let output_order = bundle_order(d.outputs());
    let bundled_in: Vec<SystemType> = input_order.iter().map(|&i| d.inputs()[i].clone()).collect();
    let pre = Diagram::permutation(bundled_in, &inverse(&input_order))?;
    let post = Diagram::permutation(d.outputs().to_vec(), &output_order)?;
    let s = denote(&pre.then(d)?.then(&post)?)?;
    Ok(NormalForm {
        s,
        input_order,
        output_order,
        inputs: d.inputs().to_vec(),
        outputs: d.outputs().to_vec(),
    })
}

impl NormalForm {
    /// The normal-form diagram: every causal input is gained and ignored, `S`
    /// acts on the inferential bundle, and every causal output is prepared by a
    /// knowledge box with trivial domain.
    pub fn to_diagram(&self) -> Result<FsDiagram> {
        let mut b = DiagramBuilder::new();
        let ins: Vec<Source> = self.inputs.iter().map(|t| b.input(t.clone())).collect();
        let mut feeds = Vec::with_capacity(ins.len());
        let mut s_inputs = Vec::with_capacity(ins.len());
        for &i in &self.input_order {
            let t = &self.inputs[i];
            s_inputs.push(t.carrier.clone());
            if t.is_causal() {
                let g = b.add(format!("gain{i}"), FsGen::gain(t.carrier.clone()), &[ins[i]]);
                b.add(format!("ignore{i}"), FsGen::ignore(t.carrier.clone()), &[g[0]]);
                feeds.push(g[1]);
            } else {
                feeds.push(ins[i]);
            }
        }
        let s_outputs: Vec<Carrier> = self
            .output_order
            .iter()
            .map(|&j| {
                let t = &self.outputs[j];
                if t.is_causal() {
                    Carrier::hom(Carrier::unit(), t.carrier.clone())
                } else {
                    t.carrier.clone()
                }
            })
            .collect();
        let s = FsGen::embedded_ports("S", s_inputs, s_outputs, self.s.clone())?;
        let s_out = b.add("S", s, &feeds);
        let mut outs = vec![None; self.outputs.len()];
        for (k, &j) in self.output_order.iter().enumerate() {
            let t = &self.outputs[j];
            outs[j] = Some(if t.is_causal() {
                b.add(format!("prep{j}"), FsGen::knowledge(vec![], vec![t.carrier.clone()]), &[s_out[k]])[0]
            } else {
                s_out[k]
            });
        }
        let outs: Vec<Source> = outs.into_iter().map(|o| o.expect("every output placed")).collect();
        b.finish(&outs)
    }
}

/// `denote(d) = sigma ∘ pi` with `sigma` stochastic and `pi = diag(weights)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientNormalForm {
    pub sigma: SubstochMap,
    pub weights: Vec<Q>,
    pub pi: SubstochMap,
}

impl QuotientNormalForm {
    pub fn recombine(&self) -> Result<SubstochMap> {
        recombine(&self.sigma, &self.weights)
    }
}

pub fn quotient_normal_form(d: &FsDiagram) -> Result<QuotientNormalForm> {
    let s = denote(d)?;
    let (sigma, weights) = factorize(&s)?;
    let n = weights.len();
    let mut pi = Matrix::zeros(n, n);
    for (i, w) in weights.iter().enumerate() {
        pi.set(i, i, w.clone());
    }
    let pi = SubstochMap::new(s.dom().clone(), s.dom().clone(), pi)?;
    debug_assert_eq!(compose_seq(&sigma, &pi)?, s);
    Ok(QuotientNormalForm { sigma, weights, pi })
}

/// `(f, λ) ↦ f(λ)` as a deterministic map `Hom(dom, cod) × dom -> cod`.
pub fn eval_map(dom: &Carrier, cod: &Carrier) -> Result<SubstochMap> {
    from_function(&funcdyn::universal_control(dom, cod)?)
}

/// `(f, g) ↦ g ∘ f` on `Hom(a, b) × Hom(b, c) -> Hom(a, c)`.
pub fn compose_map(a: &Carrier, b: &Carrier, c: &Carrier) -> Result<SubstochMap> {
    let fs = funcdyn::enumerate(a, b)?;
    let gs = funcdyn::enumerate(b, c)?;
    let target = funcdyn::homset_size(a, c)?;
    check_volume("composition map", target, fs.len() * gs.len())?;
    let mut table = Vec::with_capacity(fs.len() * gs.len());
    for f in &fs {
        for g in &gs {
            table.push(funcdyn::index(&funcdyn::compose(g, f)?)?.index);
        }
    }
    let dom = Carrier::product([Carrier::hom(a.clone(), b.clone()), Carrier::hom(b.clone(), c.clone())]);
    from_function(&funcdyn::Function::new(dom, Carrier::hom(a.clone(), c.clone()), table)?)
}

/// `(f, g) ↦ f × g` on `Hom(a, b) × Hom(c, d) -> Hom(a × c, b × d)`.
pub fn product_map(a: &Carrier, b: &Carrier, c: &Carrier, d: &Carrier) -> Result<SubstochMap> {
    let fs = funcdyn::enumerate(a, b)?;
    let gs = funcdyn::enumerate(c, d)?;
    let ac = Carrier::product([a.clone(), c.clone()]);
    let bd = Carrier::product([b.clone(), d.clone()]);
    let target = funcdyn::homset_size(&ac, &bd)?;
    check_volume("product map", target, fs.len() * gs.len())?;
    let mut table = Vec::with_capacity(fs.len() * gs.len());
    for f in &fs {
        for g in &gs {
            table.push(funcdyn::index(&funcdyn::product(f, g)?)?.index);
        }
    }
    let dom = Carrier::product([Carrier::hom(a.clone(), b.clone()), Carrier::hom(c.clone(), d.clone())]);
    from_function(&funcdyn::Function::new(dom, Carrier::hom(ac, bd), table)?)
}

/// Knowledge state `[f]` as a map from the trivial system.
pub fn point_of(f: &funcdyn::Function) -> Result<SubstochMap> {
    let h = funcdyn::index(f)?;
    Ok(crate::substoch::KnowledgeState::point(h.carrier(), h.index)?.to_map())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcdyn::Function;
    use crate::rational::{q, qi};
    use crate::substoch::{convex_mix, eval_proposition, KnowledgeState, Proposition};

    fn bit() -> Carrier {
        Carrier::bit()
    }

    /// A knowledge state on `Hom(bit, bit)` fed into a knowledge box.
    fn dynamics_box(sigma: SubstochMap) -> FsDiagram {
        let mut b = DiagramBuilder::new();
        let x = b.input(SystemType::causal(bit()));
        let s = b.add("sigma", FsGen::embedded("sigma", sigma), &[]);
        let y = b.add("k", FsGen::knowledge(vec![bit()], vec![bit()]), &[s[0], x]);
        b.finish(&y).unwrap()
    }

    fn mix(fs: [Vec<usize>; 2]) -> SubstochMap {
        let maps: Vec<SubstochMap> = fs
            .into_iter()
            .map(|t| point_of(&Function::new(bit(), bit(), t).unwrap()).unwrap())
            .collect();
        convex_mix(&[q(1, 2), q(1, 2)], &maps).unwrap()
    }

    #[test]
    fn randomizing_channel_two_ways() {
        let c = dynamics_box(mix([vec![0, 0], vec![1, 1]]));
        let d = dynamics_box(mix([vec![0, 1], vec![1, 0]]));
        let s = denote(&c).unwrap();
        assert!(s.matrix().data.iter().all(|v| *v == q(1, 2)));
        assert!(inferentially_equivalent(&c, &d).unwrap());
    }

    #[test]
    fn closed_chain_reads_membership() {
        for f in funcdyn::enumerate(&bit(), &Carrier::range(3)).unwrap() {
            for lambda in 0..2 {
                for bits in 0..8 {
                    let pi = Proposition::from_bits(Carrier::range(3), bits).unwrap();
                    let mut b = DiagramBuilder::new();
                    let point = Function::constant(Carrier::unit(), bit(), lambda).unwrap();
                    let l = b.add("l", FsGen::embedded("l", point_of(&point).unwrap()), &[]);
                    let lam = b.add("prep", FsGen::knowledge(vec![], vec![bit()]), &l);
                    let fk = b.add("f", FsGen::embedded("f", point_of(&f).unwrap()), &[]);
                    let y = b.add("k", FsGen::knowledge(vec![bit()], vec![Carrier::range(3)]), &[fk[0], lam[0]]);
                    let g = b.add("g", FsGen::gain(Carrier::range(3)), &[y[0]]);
                    b.add("i", FsGen::ignore(Carrier::range(3)), &[g[0]]);
                    b.add("pi", FsGen::embedded("pi", pi.effect()), &[g[1]]);
                    let d = b.finish(&[]).unwrap();
                    let p = predict(&d).unwrap();
                    let expected = if pi.contains(f.apply(lambda)) { qi(1) } else { qi(0) };
                    assert_eq!(p.matrix().data, vec![expected]);
                }
            }
        }
    }

    #[test]
    fn embedded_denotes_itself() {
        let s = crate::substoch::map_from_ints(bit(), Carrier::range(3), &[&[1, 0], &[1, 2], &[0, 1]], 4).unwrap();
        let d = Diagram::single("s", FsGen::embedded("s", s.clone()));
        assert_eq!(denote(&d).unwrap(), s);
        assert_eq!(normal_form(&d).unwrap().s, s);
    }

    #[test]
    fn predict_rejects_open_causal() {
        let d = Diagram::single("g", FsGen::gain(bit()));
        assert!(matches!(predict(&d), Err(Error::NotCausallyClosed(_))));
    }

    #[test]
    fn uniform_state_point_proposition() {
        let sigma = KnowledgeState::uniform(bit()).unwrap();
        let pi = Proposition::atom(bit(), 0).unwrap();
        let mut b = DiagramBuilder::new();
        let s = b.add("s", FsGen::embedded("s", sigma.to_map()), &[]);
        b.add("pi", FsGen::embedded("pi", pi.effect()), &s);
        let p = predict(&b.finish(&[]).unwrap()).unwrap();
        assert_eq!(p.matrix().data, vec![q(1, 2)]);
        assert_eq!(eval_proposition(&sigma, &pi).unwrap(), q(1, 2));
    }

    #[test]
    fn different_denotations_are_inequivalent() {
        let a = Diagram::single("s", FsGen::embedded("s", crate::substoch::map_from_ints(bit(), bit(), &[&[1, 0], &[0, 1]], 1).unwrap()));
        let b = Diagram::single("s", FsGen::embedded("s", crate::substoch::map_from_ints(bit(), bit(), &[&[0, 1], &[1, 0]], 1).unwrap()));
        assert!(!inferentially_equivalent(&a, &b).unwrap());
        assert!(inferentially_equivalent(&a, &a).unwrap());
        let c = Diagram::single("g", FsGen::gain(bit()));
        assert!(matches!(inferentially_equivalent(&a, &c), Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn single_generator_normal_forms() {
        let gens = vec![
            FsGen::knowledge(vec![bit()], vec![Carrier::range(3)]),
            FsGen::knowledge(vec![], vec![bit()]),
            FsGen::PropGain(vec![bit(), Carrier::range(3)]),
            FsGen::Ignore(vec![bit(), bit()]),
        ];
        for g in gens {
            let d = Diagram::single("g", g.clone());
            let nf = normal_form(&d).unwrap();
            let direct = denote(&d).unwrap();
            // single generators put inferential ports first except PropGain's output
            if !matches!(g, FsGen::PropGain(_)) {
                assert_eq!(nf.s.matrix(), direct.matrix());
            }
            let back = nf.to_diagram().unwrap();
            assert_eq!(denote(&back).unwrap(), direct);
            assert_eq!(normal_form(&back).unwrap().s, nf.s);
        }
    }

    #[test]
    fn qnf_cases() {
        let st = crate::substoch::map_from_ints(bit(), bit(), &[&[1, 2], &[2, 1]], 3).unwrap();
        let qnf = quotient_normal_form(&Diagram::single("s", FsGen::embedded("s", st.clone()))).unwrap();
        assert_eq!(qnf.sigma, st);
        assert_eq!(qnf.pi, SubstochMap::identity(bit()).unwrap());

        let half = crate::substoch::map_from_ints(bit(), bit(), &[&[2, 1], &[0, 0]], 2).unwrap();
        let qnf = quotient_normal_form(&Diagram::single("s", FsGen::embedded("s", half.clone()))).unwrap();
        assert_eq!(qnf.weights, vec![qi(1), q(1, 2)]);
        assert_eq!(qnf.sigma.matrix().column(1), vec![qi(1), qi(0)]);
        assert_eq!(qnf.recombine().unwrap(), half);
    }

    #[test]
    fn eval_and_compose_maps() {
        let e = eval_map(&bit(), &bit()).unwrap();
        assert!(e.is_stochastic());
        let c = compose_map(&bit(), &Carrier::range(3), &bit()).unwrap();
        assert_eq!(c.matrix().cols, 9 * 8);
        let p = product_map(&bit(), &bit(), &Carrier::unit(), &bit()).unwrap();
        assert!(p.is_deterministic() && p.is_stochastic());
    }
}
