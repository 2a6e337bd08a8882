//! Classical causal-compatibility and noncontextuality tests.
//!
//! Correlation tables are flat: `probs[s * n_outcomes + o]`, where the
//! setting index `s` and outcome index `o` are row-major over the scenario's
//! setting and outcome variables (first variable most significant).

pub mod embed;
pub mod lp;

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::diagrams::{DiagramBuilder, Source};
use crate::error::{Error, Result};
use crate::fstheory::{point_of, FsDiagram, FsGen};
use crate::funcdyn::copy;
use crate::optheory::quantum::{singlet, xz_basis, QuantumProcess};
use crate::optheory::{predict_closed, OpDiagram, OpGen, PredictionMap, ProcSet, QuantumModel};
use crate::rational::{rationalize, to_f64, Q};
use crate::substoch::KnowledgeState;
use crate::types::{cap, Carrier, SystemType};

pub use embed::{simplex_embed, Embedding, EmbedResult, GPTFragment};
pub use lp::LpOutcome;

/// Denominator used when float tables enter the exact LP.
pub const RATIONALIZE_DENOM: u64 = 1_000_000;
/// Tolerance for float no-signalling checks.
pub const SIGNALLING_TOL: f64 = 1e-9;
/// Cardinality of each latent source in the triangle scenario.
pub const TRIANGLE_LATENT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Two parties with settings `x`, `y` and outcomes `a`, `b`.
    Bell { nx: usize, ny: usize, na: usize, nb: usize },
    /// Three parties without settings, pairwise connected by latent sources.
    Triangle { na: usize, nb: usize, nc: usize },
    /// Setting `x` drives `a`, which drives `b`.
    Instrumental { nx: usize, na: usize, nb: usize },
    /// Preparation `x` sends message `a`; measurement `y` reads it and yields `b`.
    PrepareMeasure { nx: usize, na: usize, ny: usize, nb: usize },
}

impl Scenario {
    pub fn chsh() -> Self {
        Scenario::Bell {
            nx: 2,
            ny: 2,
            na: 2,
            nb: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes: Vec<usize> = match *self {
            Scenario::Bell { nx, ny, na, nb } => vec![nx, ny, na, nb],
            Scenario::Triangle { na, nb, nc } => vec![na, nb, nc],
            Scenario::Instrumental { nx, na, nb } => vec![nx, na, nb],
            Scenario::PrepareMeasure { nx, na, ny, nb } => vec![nx, na, ny, nb],
        };
        if sizes.iter().any(|&n| n < 2) {
            return Err(Error::ConfigError(format!("{self:?}: every cardinality must be at least 2")));
        }
        Ok(())
    }

    pub fn is_chsh(&self) -> bool {
        *self == Scenario::chsh()
    }

    /// Cardinalities of the setting variables, most significant first.
    pub fn setting_sizes(&self) -> Vec<usize> {
        match *self {
            Scenario::Bell { nx, ny, .. } => vec![nx, ny],
            Scenario::Triangle { .. } => vec![],
            Scenario::Instrumental { nx, .. } => vec![nx],
            Scenario::PrepareMeasure { nx, ny, .. } => vec![nx, ny],
        }
    }

    /// Cardinalities of the observed outcome variables.
    pub fn outcome_sizes(&self) -> Vec<usize> {
        match *self {
            Scenario::Bell { na, nb, .. } => vec![na, nb],
            Scenario::Triangle { na, nb, nc } => vec![na, nb, nc],
            Scenario::Instrumental { na, nb, .. } => vec![na, nb],
            Scenario::PrepareMeasure { nb, .. } => vec![nb],
        }
    }

    pub fn n_settings(&self) -> usize {
        self.setting_sizes().iter().product()
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcome_sizes().iter().product()
    }

    pub fn table_len(&self) -> usize {
        self.n_settings() * self.n_outcomes()
    }

    /// Number of deterministic strategies, before deduplication.
    pub fn vertex_count(&self) -> u128 {
        let pow = |b: usize, e: usize| (b as u128).checked_pow(e as u32).unwrap_or(u128::MAX);
        let mul = |a: u128, b: u128| a.saturating_mul(b);
        match *self {
            Scenario::Bell { nx, ny, na, nb } => mul(pow(na, nx), pow(nb, ny)),
            Scenario::Triangle { na, nb, nc } => {
                let l2 = TRIANGLE_LATENT * TRIANGLE_LATENT;
                mul(mul(pow(na, l2), pow(nb, l2)), pow(nc, l2))
            }
            Scenario::Instrumental { nx, na, nb } => mul(pow(na, nx), pow(nb, na)),
            Scenario::PrepareMeasure { nx, na, ny, nb } => mul(pow(na, nx), pow(nb, na * ny)),
        }
    }

    /// The F-S diagram whose open inferential inputs are knowledge about the
    /// settings and about each response function, and whose outputs are the
    /// observed outcomes. A common cause is a joint knowledge state over the
    /// response functions.
    pub fn template(&self) -> Result<FsDiagram> {
        self.validate()?;
        let r = Carrier::range;
        let mut b = DiagramBuilder::new();
        let prepare = |b: &mut DiagramBuilder<FsGen>, id: &str, c: Carrier| -> Source {
            let k = b.input(SystemType::inferential(FsGen::hom_carrier(&[], std::slice::from_ref(&c))));
            b.add(id, FsGen::knowledge(vec![], vec![c]), &[k])[0]
        };
        let respond = |b: &mut DiagramBuilder<FsGen>, id: &str, dom: Vec<Carrier>, cod: Carrier, ins: &[Source]| {
            let k = b.input(SystemType::inferential(FsGen::hom_carrier(&dom, std::slice::from_ref(&cod))));
            let mut feeds = vec![k];
            feeds.extend_from_slice(ins);
            b.add(id, FsGen::knowledge(dom, vec![cod]), &feeds)[0]
        };
        let observe = |b: &mut DiagramBuilder<FsGen>, id: &str, c: Carrier, s: Source| -> Source {
            let g = b.add(format!("gain_{id}"), FsGen::gain(c.clone()), &[s]);
            b.add(format!("ign_{id}"), FsGen::ignore(c), &[g[0]]);
            g[1]
        };
        let outs = match *self {
            Scenario::Bell { nx, ny, na, nb } => {
                let x = prepare(&mut b, "x", r(nx));
                let y = prepare(&mut b, "y", r(ny));
                let a = respond(&mut b, "alice", vec![r(nx)], r(na), &[x]);
                let bb = respond(&mut b, "bob", vec![r(ny)], r(nb), &[y]);
                vec![observe(&mut b, "a", r(na), a), observe(&mut b, "b", r(nb), bb)]
            }
            Scenario::Instrumental { nx, na, nb } => {
                let x = prepare(&mut b, "x", r(nx));
                let a = respond(&mut b, "f", vec![r(nx)], r(na), &[x]);
                let g = b.add("gain_a", FsGen::gain(r(na)), &[a]);
                let bb = respond(&mut b, "g", vec![r(na)], r(nb), &[g[0]]);
                vec![g[1], observe(&mut b, "b", r(nb), bb)]
            }
            Scenario::PrepareMeasure { nx, na, ny, nb } => {
                let x = prepare(&mut b, "x", r(nx));
                let y = prepare(&mut b, "y", r(ny));
                let a = respond(&mut b, "prep", vec![r(nx)], r(na), &[x]);
                let bb = respond(&mut b, "meas", vec![r(na), r(ny)], r(nb), &[a, y]);
                vec![observe(&mut b, "b", r(nb), bb)]
            }
            Scenario::Triangle { na, nb, nc } => {
                let l = r(TRIANGLE_LATENT);
                let split = |b: &mut DiagramBuilder<FsGen>, id: &str| -> Result<Vec<Source>> {
                    let s = prepare(b, id, l.clone());
                    let k = b.add(format!("{id}.copy"), FsGen::embedded("copy", point_of(&copy(&l)?)?), &[]);
                    Ok(b.add(format!("{id}.split"), FsGen::knowledge(vec![l.clone()], vec![l.clone(), l.clone()]), &[k[0], s]))
                };
                let alpha = split(&mut b, "alpha")?;
                let beta = split(&mut b, "beta")?;
                let gamma = split(&mut b, "gamma")?;
                let a = respond(&mut b, "f", vec![l.clone(), l.clone()], r(na), &[beta[0], gamma[0]]);
                let bb = respond(&mut b, "g", vec![l.clone(), l.clone()], r(nb), &[gamma[1], alpha[0]]);
                let c = respond(&mut b, "h", vec![l.clone(), l.clone()], r(nc), &[alpha[1], beta[1]]);
                vec![
                    observe(&mut b, "a", r(na), a),
                    observe(&mut b, "b", r(nb), bb),
                    observe(&mut b, "c", r(nc), c),
                ]
            }
        };
        b.finish(&outs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Exact(Vec<Q>),
    Float(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub scenario: Scenario,
    pub table: Table,
}

impl Correlation {
    pub fn exact(scenario: Scenario, probs: Vec<Q>) -> Result<Self> {
        let c = Correlation {
            scenario,
            table: Table::Exact(probs),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn float(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        let c = Correlation {
            scenario,
            table: Table::Float(probs),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let (ns, no) = (self.scenario.n_settings(), self.scenario.n_outcomes());
        let len = match &self.table {
            Table::Exact(p) => p.len(),
            Table::Float(p) => p.len(),
        };
        if len != ns * no {
            return Err(Error::DimensionMismatch(format!(
                "table has {len} entries, scenario needs {}",
                ns * no
            )));
        }
        for s in 0..ns {
            let ok = match &self.table {
                Table::Exact(p) => {
                    let block = &p[s * no..(s + 1) * no];
                    block.iter().all(|v| !v.is_negative()) && block.iter().sum::<Q>() == Q::one()
                }
                Table::Float(p) => {
                    let block = &p[s * no..(s + 1) * no];
                    block.iter().all(|v| v.is_finite() && *v >= -SIGNALLING_TOL)
                        && (block.iter().sum::<f64>() - 1.0).abs() <= 1e-6
                }
            };
            if !ok {
                return Err(Error::WeightError(format!("setting {s} is not a probability distribution")));
            }
        }
        Ok(())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match &self.table {
            Table::Exact(p) => p.iter().map(to_f64).collect(),
            Table::Float(p) => p.clone(),
        }
    }

    /// The exact table, rounding floats to multiples of `1/denom`.
    ///
    /// No-signalling Bell tables are rounded through their marginals and the
    /// joint entries with `a < na-1`, `b < nb-1`; the remaining entries are
    /// filled in so the result is exactly no-signalling. Independent rounding
    /// would leave a signalling table, which is never in the local polytope.
    /// Other tables are rounded per setting, with the largest entry absorbing
    /// the normalization defect.
    pub fn rationalized(&self, denom: u64) -> Result<Vec<Q>> {
        let p = match &self.table {
            Table::Exact(p) => return Ok(p.clone()),
            Table::Float(p) => p,
        };
        if let Scenario::Bell { nx, ny, na, nb } = self.scenario {
            if no_signalling_check(self) {
                if let Some(t) = round_no_signalling(p, (nx, ny, na, nb), denom)? {
                    return Ok(t);
                }
            }
        }
        let no = self.scenario.n_outcomes();
        let mut out = Vec::with_capacity(p.len());
        for block in p.chunks(no) {
            out.extend(round_block(block, denom)?);
        }
        Ok(out)
    }

    pub fn get(&self, s: usize, o: usize) -> f64 {
        let no = self.scenario.n_outcomes();
        match &self.table {
            Table::Exact(p) => to_f64(&p[s * no + o]),
            Table::Float(p) => p[s * no + o],
        }
    }
}

/// Rounds a distribution, restoring normalization on the largest entry.
fn round_block(block: &[f64], denom: u64) -> Result<Vec<Q>> {
    let mut qs = block
        .iter()
        .map(|&v| rationalize(v.max(0.0), denom))
        .collect::<Result<Vec<Q>>>()?;
    let total: Q = qs.iter().sum();
    let big = (0..qs.len()).max_by(|&i, &j| qs[i].cmp(&qs[j]).then(j.cmp(&i))).unwrap_or(0);
    qs[big] += Q::one() - total;
    if qs[big].is_negative() {
        return Err(Error::WeightError("table cannot be renormalized".into()));
    }
    Ok(qs)
}

/// `None` when the filled-in entries would go negative.
fn round_no_signalling(p: &[f64], (nx, ny, na, nb): (usize, usize, usize, usize), denom: u64) -> Result<Option<Vec<Q>>> {
    let no = na * nb;
    let at = |x: usize, y: usize, a: usize, b: usize| p[(x * ny + y) * no + a * nb + b];
    let alice = (0..nx)
        .map(|x| round_block(&(0..na).map(|a| (0..nb).map(|b| at(x, 0, a, b)).sum()).collect::<Vec<f64>>(), denom))
        .collect::<Result<Vec<_>>>()?;
    let bob = (0..ny)
        .map(|y| round_block(&(0..nb).map(|b| (0..na).map(|a| at(0, y, a, b)).sum()).collect::<Vec<f64>>(), denom))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Q::zero(); p.len()];
    for x in 0..nx {
        for y in 0..ny {
            let base = (x * ny + y) * no;
            for a in 0..na - 1 {
                for b in 0..nb - 1 {
                    out[base + a * nb + b] = rationalize(at(x, y, a, b).max(0.0), denom)?;
                }
            }
            for a in 0..na - 1 {
                let rest: Q = (0..nb - 1).map(|b| &out[base + a * nb + b]).sum();
                out[base + a * nb + nb - 1] = &alice[x][a] - rest;
            }
            for b in 0..nb {
                let rest: Q = (0..na - 1).map(|a| &out[base + a * nb + b]).sum();
                out[base + (na - 1) * nb + b] = &bob[y][b] - rest;
            }
        }
    }
    Ok(if out.iter().any(Signed::is_negative) { None } else { Some(out) })
}

fn digits_to_index(digits: &[usize], sizes: &[usize]) -> usize {
    digits.iter().zip(sizes).fold(0, |acc, (d, n)| acc * n + d)
}

/// All base-`n` tables of length `len`, first entry most significant.
fn all_tables(n: usize, len: usize) -> Vec<Vec<usize>> {
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut i| {
            let mut t = vec![0; len];
            for k in (0..len).rev() {
                t[k] = i % n;
                i /= n;
            }
            t
        })
        .collect()
}

/// Deterministic-strategy correlations, in enumeration order, duplicates kept.
pub fn local_vertices(s: &Scenario) -> Result<Vec<Correlation>> {
    s.validate()?;
    let count = s.vertex_count();
    let limit = cap();
    if count > limit as u128 || count.saturating_mul(s.table_len() as u128) > 64 * limit as u128 {
        return Err(Error::cap(format!("vertices of {s:?}"), count, limit));
    }
    let (ns, no) = (s.n_settings(), s.n_outcomes());
    let ssz = s.setting_sizes();
    let osz = s.outcome_sizes();
    let point = |outcome: &dyn Fn(&[usize]) -> Vec<usize>| -> Vec<Q> {
        let mut p = vec![Q::zero(); ns * no];
        for si in 0..ns {
            let sd = crate::optheory::split_index(si, &ssz);
            let o = digits_to_index(&outcome(&sd), &osz);
            p[si * no + o] = Q::one();
        }
        p
    };
    let mut out = Vec::new();
    match *s {
        Scenario::Bell { nx, ny, na, nb } => {
            for f in all_tables(na, nx) {
                for g in all_tables(nb, ny) {
                    out.push(point(&|d| vec![f[d[0]], g[d[1]]]));
                }
            }
        }
        Scenario::Instrumental { nx, na, nb } => {
            for f in all_tables(na, nx) {
                for g in all_tables(nb, na) {
                    out.push(point(&|d| vec![f[d[0]], g[f[d[0]]]]));
                }
            }
        }
        Scenario::PrepareMeasure { nx, na, ny, nb } => {
            for f in all_tables(na, nx) {
                for g in all_tables(nb, na * ny) {
                    out.push(point(&|d| vec![g[f[d[0]] * ny + d[1]]]));
                }
            }
        }
        Scenario::Triangle { na, nb, nc } => {
            let l = TRIANGLE_LATENT;
            let w = Q::new(1.into(), ((l * l * l) as i64).into());
            for f in all_tables(na, l * l) {
                for g in all_tables(nb, l * l) {
                    for h in all_tables(nc, l * l) {
                        let mut p = vec![Q::zero(); no];
                        for al in 0..l {
                            for be in 0..l {
                                for ga in 0..l {
                                    let o = (f[be * l + ga] * nb + g[ga * l + al]) * nc + h[al * l + be];
                                    p[o] += &w;
                                }
                            }
                        }
                        out.push(p);
                    }
                }
            }
        }
    }
    out.into_iter().map(|p| Correlation::exact(*s, p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    /// Convex weights on the listed vertices reproducing the table exactly.
    Member { vertices: Vec<Vec<Q>>, weights: Vec<Q> },
    /// `h·v ≤ bound` on every vertex and `h·p > bound` on the table.
    NonMember { coefficients: Vec<Q>, bound: Q },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub scenario: Scenario,
    /// The exact table the LP ran on.
    pub tested: Vec<Q>,
    /// Set when `tested` was obtained by rounding a float table.
    pub denominator: Option<u64>,
    pub verdict: Membership,
}

impl Certificate {
    pub fn is_member(&self) -> bool {
        matches!(self.verdict, Membership::Member { .. })
    }

    /// Rechecks the certificate against a fresh vertex enumeration.
    pub fn verify(&self) -> Result<bool> {
        let dot = |a: &[Q], b: &[Q]| -> Q { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        match &self.verdict {
            Membership::Member { vertices, weights } => {
                let all: BTreeSet<Vec<Q>> = local_vertices(&self.scenario)?
                    .into_iter()
                    .map(|c| c.rationalized(1).unwrap_or_default())
                    .collect();
                if vertices.len() != weights.len()
                    || weights.iter().any(Signed::is_negative)
                    || weights.iter().sum::<Q>() != Q::one()
                    || vertices.iter().any(|v| !all.contains(v))
                {
                    return Ok(false);
                }
                let mut mix = vec![Q::zero(); self.tested.len()];
                for (v, w) in vertices.iter().zip(weights) {
                    for (m, x) in mix.iter_mut().zip(v) {
                        *m += w * x;
                    }
                }
                Ok(mix == self.tested)
            }
            Membership::NonMember { coefficients, bound } => {
                let side = local_vertices(&self.scenario)?.iter().all(|c| match &c.table {
                    Table::Exact(v) => dot(coefficients, v) <= *bound,
                    Table::Float(_) => false,
                });
                Ok(side && dot(coefficients, &self.tested) > *bound)
            }
        }
    }
}

/// Exact membership of `corr` in the convex hull of the deterministic
/// strategies of its scenario.
pub fn fs_compatible(corr: &Correlation) -> Result<Certificate> {
    corr.validate()?;
    let s = corr.scenario;
    let denominator = match corr.table {
        Table::Exact(_) => None,
        Table::Float(_) => Some(RATIONALIZE_DENOM),
    };
    let tested = corr.rationalized(RATIONALIZE_DENOM)?;
    let vertices: Vec<Vec<Q>> = local_vertices(&s)?
        .into_iter()
        .map(|c| c.rationalized(1))
        .collect::<Result<BTreeSet<_>>>()?
        .into_iter()
        .collect();
    // rows: one per table entry, plus Σw = 1
    let n = tested.len();
    let mut a: Vec<Vec<Q>> = (0..n).map(|i| vertices.iter().map(|v| v[i].clone()).collect()).collect();
    a.push(vec![Q::one(); vertices.len()]);
    let mut b = tested.clone();
    b.push(Q::one());
    let verdict = match lp::feasible(&a, &b)? {
        LpOutcome::Feasible(w) => {
            let (vs, ws): (Vec<_>, Vec<_>) = vertices
                .into_iter()
                .zip(w)
                .filter(|(_, w)| !w.is_zero())
                .unzip();
            Membership::Member { vertices: vs, weights: ws }
        }
        LpOutcome::Infeasible(mut y) => {
            let y0 = y.pop().unwrap_or_default();
            Membership::NonMember {
                coefficients: y,
                bound: -y0,
            }
        }
    };
    Ok(Certificate {
        scenario: s,
        tested,
        denominator,
        verdict,
    })
}

fn chsh_check(s: &Scenario) -> Result<()> {
    if !s.is_chsh() {
        return Err(Error::WrongScenario(format!("CHSH needs a (2,2,2,2) Bell scenario, got {s:?}")));
    }
    Ok(())
}

/// `E₀₀ + E₀₁ + E₁₀ − E₁₁` with `E_xy = Σ (−1)^(a⊕b) P(a,b|x,y)`.
pub fn chsh_value(corr: &Correlation) -> Result<f64> {
    chsh_check(&corr.scenario)?;
    let mut total = 0.0;
    for s in 0..4 {
        let e = corr.get(s, 0) - corr.get(s, 1) - corr.get(s, 2) + corr.get(s, 3);
        total += if s == 3 { -e } else { e };
    }
    Ok(total)
}

pub fn chsh_exact(corr: &Correlation) -> Result<Q> {
    chsh_check(&corr.scenario)?;
    let Table::Exact(p) = &corr.table else {
        return Err(Error::Invalid("exact CHSH value needs an exact table".into()));
    };
    let mut total = Q::zero();
    for s in 0..4 {
        let e = &p[4 * s] - &p[4 * s + 1] - &p[4 * s + 2] + &p[4 * s + 3];
        if s == 3 {
            total -= e;
        } else {
            total += e;
        }
    }
    Ok(total)
}

/// The Popescu-Rohrlich box: `a ⊕ b = x·y`, uniformly.
pub fn pr_box() -> Correlation {
    let half = Q::new(1.into(), 2.into());
    let mut p = vec![Q::zero(); 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    if a ^ b == x & y {
                        p[(x * 2 + y) * 4 + a * 2 + b] = half.clone();
                    }
                }
            }
        }
    }
    Correlation {
        scenario: Scenario::chsh(),
        table: Table::Exact(p),
    }
}

/// Bell scenarios: Alice's marginal does not depend on `y`, Bob's not on `x`.
/// Other scenarios have no spacelike-separated parties and pass trivially.
pub fn no_signalling_check(corr: &Correlation) -> bool {
    let Scenario::Bell { nx, ny, na, nb } = corr.scenario else {
        return true;
    };
    if corr.validate().is_err() {
        return false;
    }
    let no = na * nb;
    match &corr.table {
        Table::Exact(p) => {
            let at = |x: usize, y: usize, a: usize, b: usize| &p[(x * ny + y) * no + a * nb + b];
            let alice = |x, y, a| (0..nb).map(|b| at(x, y, a, b)).sum::<Q>();
            let bob = |x, y, b| (0..na).map(|a| at(x, y, a, b)).sum::<Q>();
            (0..nx).all(|x| (0..na).all(|a| (1..ny).all(|y| alice(x, y, a) == alice(x, 0, a))))
                && (0..ny).all(|y| (0..nb).all(|b| (1..nx).all(|x| bob(x, y, b) == bob(0, y, b))))
        }
        Table::Float(p) => {
            let at = |x: usize, y: usize, a: usize, b: usize| p[(x * ny + y) * no + a * nb + b];
            let alice = |x, y, a| (0..nb).map(|b| at(x, y, a, b)).sum::<f64>();
            let bob = |x, y, b| (0..na).map(|a| at(x, y, a, b)).sum::<f64>();
            let close = |u: f64, v: f64| (u - v).abs() <= SIGNALLING_TOL;
            (0..nx).all(|x| (0..na).all(|a| (1..ny).all(|y| close(alice(x, y, a), alice(x, 0, a)))))
                && (0..ny).all(|y| (0..nb).all(|b| (1..nx).all(|x| close(bob(x, y, b), bob(0, y, b)))))
        }
    }
}

/// A quantum realization: for Bell scenarios a bipartite `state` with
/// `parties = [alice, bob]` measurement lists; for prepare-measure scenarios
/// `state` is unused by the template and `parties = [preparations, measurements]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSetup {
    pub state: Option<QuantumProcess>,
    pub parties: Vec<Vec<QuantumProcess>>,
}

impl QuantumSetup {
    /// Procedure names used in model files: `state`, `alice0..`, `bob0..`
    /// (Bell) or `prep0..`, `meas0..` (prepare-measure).
    pub fn names(s: &Scenario) -> Result<Vec<Vec<String>>> {
        let list = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        match *s {
            Scenario::Bell { nx, ny, .. } => Ok(vec![vec!["state".into()], list("alice", nx), list("bob", ny)]),
            Scenario::PrepareMeasure { nx, ny, .. } => Ok(vec![vec![], list("prep", nx), list("meas", ny)]),
            other => Err(Error::WrongScenario(format!("no quantum template for {other:?}"))),
        }
    }

    pub fn from_model(model: &QuantumModel, s: &Scenario) -> Result<Self> {
        let names = QuantumSetup::names(s)?;
        let get = |n: &String| {
            model
                .procedures
                .get(n)
                .cloned()
                .ok_or_else(|| Error::UnresolvedProcedure(n.clone()))
        };
        let state = names[0].first().map(get).transpose()?;
        let parties = names[1..]
            .iter()
            .map(|ns| ns.iter().map(get).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantumSetup { state, parties })
    }

    pub fn to_model(&self, s: &Scenario) -> Result<QuantumModel> {
        let names = QuantumSetup::names(s)?;
        let mut model = QuantumModel::default();
        if let (Some(n), Some(st)) = (names[0].first(), &self.state) {
            model.procedures.insert(n.clone(), st.clone());
        }
        for (ns, ps) in names[1..].iter().zip(&self.parties) {
            for (n, p) in ns.iter().zip(ps) {
                model.procedures.insert(n.clone(), p.clone());
            }
        }
        Ok(model)
    }
}

/// The operational diagram with open inferential setting inputs and observed
/// outcome outputs; its prediction is the correlation table.
pub fn quantum_template(setup: &QuantumSetup, s: &Scenario) -> Result<OpDiagram> {
    s.validate()?;
    let names = QuantumSetup::names(s)?;
    if setup.parties.len() != 2 || setup.parties.iter().zip(&names[1..]).any(|(p, n)| p.len() != n.len()) {
        return Err(Error::DimensionMismatch("one process per setting of each party is required".into()));
    }
    let qs = |name: &str, d: usize| crate::optheory::qudit(name, d);
    let outcome = |n: usize| SystemType::classical(Carrier::range(n));
    let mut b = DiagramBuilder::new();
    let observe = |b: &mut DiagramBuilder<OpGen>, id: &str, n: usize, src: Source| -> Result<Source> {
        let g = b.add(format!("gain_{id}"), OpGen::prop_gain(outcome(n))?, &[src]);
        b.add(format!("ign_{id}"), OpGen::Ignore(outcome(n)), &[g[0]]);
        Ok(g[1])
    };
    let outs = match *s {
        Scenario::Bell { na, nb, .. } => {
            let state = setup
                .state
                .as_ref()
                .ok_or_else(|| Error::ConfigError("Bell setup needs a shared state".into()))?;
            let (alice, bob) = (&setup.parties[0], &setup.parties[1]);
            let (da, db) = (alice[0].in_dim, bob[0].in_dim);
            if state.in_dim != 1 || state.out_dim != da * db {
                return Err(Error::DimensionMismatch(format!(
                    "state has dimension {}, measurements need {da}x{db}",
                    state.out_dim
                )));
            }
            check_party(alice, da, na)?;
            check_party(bob, db, nb)?;
            let src = ProcSet::new(vec![], vec![qs("A", da), qs("B", db)], names[0].clone())?;
            let kx = b.input(SystemType::inferential(Carrier::finite(&names[1])));
            let ky = b.input(SystemType::inferential(Carrier::finite(&names[2])));
            let point = KnowledgeState::point(src.carrier(), 0)?.to_map();
            let k = b.add("src_k", OpGen::embedded("src_k", point), &[]);
            let ab = b.add("src", OpGen::Knowledge(src), &k);
            let pa = ProcSet::new(vec![qs("A", da)], vec![outcome(na)], names[1].clone())?;
            let pb = ProcSet::new(vec![qs("B", db)], vec![outcome(nb)], names[2].clone())?;
            let a = b.add("alice", OpGen::Knowledge(pa), &[kx, ab[0]]);
            let bb = b.add("bob", OpGen::Knowledge(pb), &[ky, ab[1]]);
            vec![observe(&mut b, "a", na, a[0])?, observe(&mut b, "b", nb, bb[0])?]
        }
        Scenario::PrepareMeasure { nb, .. } => {
            let (preps, meas) = (&setup.parties[0], &setup.parties[1]);
            let d = meas[0].in_dim;
            if preps.iter().any(|p| p.in_dim != 1 || p.out_dim != d) {
                return Err(Error::DimensionMismatch(format!("preparations must output dimension {d}")));
            }
            check_party(meas, d, nb)?;
            let kx = b.input(SystemType::inferential(Carrier::finite(&names[1])));
            let ky = b.input(SystemType::inferential(Carrier::finite(&names[2])));
            let pp = ProcSet::new(vec![], vec![qs("M", d)], names[1].clone())?;
            let pm = ProcSet::new(vec![qs("M", d)], vec![outcome(nb)], names[2].clone())?;
            let m = b.add("prep", OpGen::Knowledge(pp), &[kx]);
            let o = b.add("meas", OpGen::Knowledge(pm), &[ky, m[0]]);
            vec![observe(&mut b, "b", nb, o[0])?]
        }
        other => return Err(Error::WrongScenario(format!("no quantum template for {other:?}"))),
    };
    b.finish(&outs)
}

fn check_party(ps: &[QuantumProcess], d: usize, n: usize) -> Result<()> {
    if let Some(p) = ps.iter().find(|p| p.in_dim != d || p.out_dim != n) {
        return Err(Error::DimensionMismatch(format!(
            "measurement {}→{} does not match {d}→{n}",
            p.in_dim, p.out_dim
        )));
    }
    Ok(())
}

/// Born-rule correlations, computed through the quantum prediction map.
pub fn quantum_correlations(setup: &QuantumSetup, s: &Scenario) -> Result<Correlation> {
    let d = quantum_template(setup, s)?;
    let pred = predict_closed(&d, &PredictionMap::Quantum(setup.to_model(s)?))?;
    let m = pred.to_f64();
    let (ns, no) = (s.n_settings(), s.n_outcomes());
    let mut probs = vec![0.0; ns * no];
    for si in 0..ns {
        for o in 0..no {
            // clamp roundoff below zero
            probs[si * no + o] = m.get(o, si).max(0.0);
        }
    }
    Correlation::float(*s, probs)
}

/// Singlet with Alice measuring at angles `0, π/2` and Bob at `π/4, −π/4` in
/// the x-z plane. Bob's outcome labels are exchanged so the anticorrelated
/// singlet reaches `+2√2`.
pub fn chsh_singlet_setup() -> Result<QuantumSetup> {
    let state = QuantumProcess::pure_state(&singlet())?;
    let alice = [0.0, FRAC_PI_2]
        .iter()
        .map(|&t| QuantumProcess::measurement(&xz_basis(t)))
        .collect::<Result<Vec<_>>>()?;
    let bob = [FRAC_PI_4, -FRAC_PI_4]
        .iter()
        .map(|&t| {
            let mut basis = xz_basis(t);
            basis.swap(0, 1);
            QuantumProcess::measurement(&basis)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantumSetup {
        state: Some(state),
        parties: vec![alice, bob],
    })
}

/// `|00⟩` with the CHSH measurements: a product state.
pub fn chsh_product_setup() -> Result<QuantumSetup> {
    let mut setup = chsh_singlet_setup()?;
    let z = Complex64::new(0.0, 0.0);
    setup.state = Some(QuantumProcess::pure_state(&[Complex64::new(1.0, 0.0), z, z, z])?);
    Ok(setup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictBundle {
    pub correlation: Correlation,
    pub chsh: Option<f64>,
    pub certificate: Certificate,
    pub no_signalling: bool,
}

/// Quantum correlations followed by the CHSH value (when applicable),
/// polytope membership and the no-signalling check.
pub fn verdict_bundle(setup: &QuantumSetup, s: &Scenario) -> Result<VerdictBundle> {
    if setup.parties.iter().all(Vec::is_empty) {
        return Err(Error::ConfigError("no measurements given".into()));
    }
    let correlation = quantum_correlations(setup, s)?;
    bundle_for(correlation)
}

/// The same bundle for an already tabulated correlation.
pub fn bundle_for(correlation: Correlation) -> Result<VerdictBundle> {
    let chsh = if correlation.scenario.is_chsh() {
        Some(chsh_value(&correlation)?)
    } else {
        None
    };
    let certificate = fs_compatible(&correlation)?;
    let no_signalling = no_signalling_check(&correlation);
    Ok(VerdictBundle {
        correlation,
        chsh,
        certificate,
        no_signalling,
    })
}
