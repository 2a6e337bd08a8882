//! The classical inferential theory: exact substochastic maps, with stochastic
//! maps and partial functions (propositions, connectives) as sub-theories.
//!
//! A map `X -> Y` is a `|Y| × |X|` matrix; column `x` is the (sub)distribution
//! produced from the point input `[x]`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::funcdyn::Function;
use crate::rational::{in_unit_interval, one, qi, zero, Q};
use crate::tensor::Matrix;
use crate::types::Carrier;

#[derive(Debug, Clone, PartialEq)]
pub struct SubstochMap {
    dom: Carrier,
    cod: Carrier,
    matrix: Matrix<Q>,
}

impl SubstochMap {
    pub fn new(dom: Carrier, cod: Carrier, matrix: Matrix<Q>) -> Result<Self> {
        let (n, m) = (dom.size()?, cod.size()?);
        if matrix.rows != m || matrix.cols != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, carriers need {m}x{n}",
                matrix.rows, matrix.cols
            )));
        }
        for c in 0..n {
            let mut sum = zero();
            for r in 0..m {
                let v = matrix.get(r, c);
                if !in_unit_interval(v) {
                    return Err(Error::Invalid(format!("entry ({r},{c}) = {v} outside [0,1]")));
                }
                sum += v;
            }
            if sum > one() {
                return Err(Error::Invalid(format!("column {c} sums to {sum} > 1")));
            }
        }
        Ok(SubstochMap { dom, cod, matrix })
    }

    pub fn from_rows(dom: Carrier, cod: Carrier, rows: Vec<Vec<Q>>) -> Result<Self> {
        let m = if rows.is_empty() {
            Matrix::zeros(0, dom.size()?)
        } else {
            Matrix::from_rows(rows)?
        };
        SubstochMap::new(dom, cod, m)
    }

    pub fn identity(c: Carrier) -> Result<Self> {
        let n = c.size()?;
        Ok(SubstochMap {
            dom: c.clone(),
            cod: c,
            matrix: Matrix::identity(n),
        })
    }

    pub fn zero_map(dom: Carrier, cod: Carrier) -> Result<Self> {
        let (n, m) = (dom.size()?, cod.size()?);
        Ok(SubstochMap {
            dom,
            cod,
            matrix: Matrix::zeros(m, n),
        })
    }

    /// The 1×1 scalar `p`.
    pub fn scalar(p: Q) -> Result<Self> {
        SubstochMap::new(Carrier::unit(), Carrier::unit(), Matrix { rows: 1, cols: 1, data: vec![p] })
    }

    pub fn dom(&self) -> &Carrier {
        &self.dom
    }

    pub fn cod(&self) -> &Carrier {
        &self.cod
    }

    pub fn matrix(&self) -> &Matrix<Q> {
        &self.matrix
    }

    pub fn entry(&self, y: usize, x: usize) -> &Q {
        self.matrix.get(y, x)
    }

    pub fn column_sum(&self, x: usize) -> Q {
        (0..self.matrix.rows).fold(zero(), |acc, r| acc + self.matrix.get(r, x))
    }

    pub fn is_stochastic(&self) -> bool {
        (0..self.matrix.cols).all(|c| self.column_sum(c).is_one())
    }

    pub fn is_deterministic(&self) -> bool {
        self.matrix.data.iter().all(|v| v.is_zero() || v.is_one())
    }

    /// Same matrix, carriers replaced by others of equal size.
    pub fn relabel(&self, dom: Carrier, cod: Carrier) -> Result<Self> {
        SubstochMap::new(dom, cod, self.matrix.clone())
    }

    /// Reads back a partial function, if the map is deterministic.
    pub fn to_partial_fn(&self) -> Option<PartialFn> {
        if !self.is_deterministic() {
            return None;
        }
        let map = (0..self.matrix.cols)
            .map(|x| (0..self.matrix.rows).find(|&y| self.matrix.get(y, x).is_one()))
            .collect();
        Some(PartialFn {
            dom: self.dom.clone(),
            cod: self.cod.clone(),
            map,
        })
    }
}

/// `m ∘ n`: apply `n` first.
pub fn compose_seq(m: &SubstochMap, n: &SubstochMap) -> Result<SubstochMap> {
    if n.cod != m.dom {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose {} -> {} after {} -> {}",
            m.dom, m.cod, n.dom, n.cod
        )));
    }
    Ok(SubstochMap {
        dom: n.dom.clone(),
        cod: m.cod.clone(),
        matrix: m.matrix.matmul(&n.matrix)?,
    })
}

/// Kronecker product with row-major pairing of composite carriers.
pub fn compose_par(m: &SubstochMap, n: &SubstochMap) -> Result<SubstochMap> {
    let dom = Carrier::product([m.dom.clone(), n.dom.clone()]);
    let cod = Carrier::product([m.cod.clone(), n.cod.clone()]);
    dom.size()?;
    cod.size()?;
    Ok(SubstochMap {
        dom,
        cod,
        matrix: m.matrix.kron(&n.matrix),
    })
}

/// Entry `(y, x)` is 1 iff `f(x) = y`.
pub fn from_partial_fn(f: &PartialFn) -> Result<SubstochMap> {
    let (n, m) = (f.dom.size()?, f.cod.size()?);
    let mut matrix = Matrix::zeros(m, n);
    for (x, y) in f.map.iter().enumerate() {
        if let Some(y) = y {
            matrix.set(*y, x, one());
        }
    }
    Ok(SubstochMap {
        dom: f.dom.clone(),
        cod: f.cod.clone(),
        matrix,
    })
}

pub fn from_function(f: &Function) -> Result<SubstochMap> {
    from_partial_fn(&PartialFn::total(f))
}

/// Copy dot `X -> X × X`.
pub fn copy(c: &Carrier) -> Result<SubstochMap> {
    from_function(&crate::funcdyn::copy(c)?)
}

/// Marginalization effect `X -> ⋆` (the all-ones row).
pub fn discard(c: &Carrier) -> Result<SubstochMap> {
    from_function(&crate::funcdyn::discard(c)?)
}

/// Splits `s` into a stochastic map and per-column weights, `s = stoch · diag(w)`.
/// A zero column gets weight 0 and the uniform column.
pub fn factorize(s: &SubstochMap) -> Result<(SubstochMap, Vec<Q>)> {
    let (m, n) = (s.matrix.rows, s.matrix.cols);
    if m == 0 && n > 0 {
        return Err(Error::Invalid("no stochastic map into an empty carrier".into()));
    }
    let mut stoch = Matrix::zeros(m, n);
    let mut weights = Vec::with_capacity(n);
    for c in 0..n {
        let w = s.column_sum(c);
        for r in 0..m {
            let v = if w.is_zero() {
                Q::new(1.into(), (m as i64).into())
            } else {
                s.matrix.get(r, c) / &w
            };
            stoch.set(r, c, v);
        }
        weights.push(w);
    }
    Ok((SubstochMap::new(s.dom.clone(), s.cod.clone(), stoch)?, weights))
}

/// Inverse of [`factorize`]: scales column `c` of `stoch` by `weights[c]`.
pub fn recombine(stoch: &SubstochMap, weights: &[Q]) -> Result<SubstochMap> {
    if weights.len() != stoch.matrix.cols {
        return Err(Error::DimensionMismatch("one weight per column".into()));
    }
    let mut m = stoch.matrix.clone();
    for r in 0..m.rows {
        for (c, w) in weights.iter().enumerate() {
            let v = m.get(r, c) * w;
            m.set(r, c, v);
        }
    }
    SubstochMap::new(stoch.dom.clone(), stoch.cod.clone(), m)
}

/// `Σ_i p_i s_i`.
pub fn convex_mix(weights: &[Q], maps: &[SubstochMap]) -> Result<SubstochMap> {
    if weights.len() != maps.len() || maps.is_empty() {
        return Err(Error::WeightError(format!(
            "{} weights for {} maps",
            weights.len(),
            maps.len()
        )));
    }
    if weights.iter().any(Signed::is_negative) {
        return Err(Error::WeightError("negative weight".into()));
    }
    let total: Q = weights.iter().fold(zero(), |a, w| a + w);
    if !total.is_one() {
        return Err(Error::WeightError(format!("weights sum to {total}")));
    }
    let first = &maps[0];
    let mut acc = Matrix::zeros(first.matrix.rows, first.matrix.cols);
    for (w, s) in weights.iter().zip(maps) {
        if s.dom != first.dom || s.cod != first.cod {
            return Err(Error::DimensionMismatch(format!(
                "{} -> {} mixed with {} -> {}",
                s.dom, s.cod, first.dom, first.cod
            )));
        }
        for (a, v) in acc.data.iter_mut().zip(&s.matrix.data) {
            *a += w * v;
        }
    }
    SubstochMap::new(first.dom.clone(), first.cod.clone(), acc)
}

/// A (sub)normalized probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeState {
    carrier: Carrier,
    probs: Vec<Q>,
}

impl KnowledgeState {
    pub fn new(carrier: Carrier, probs: Vec<Q>) -> Result<Self> {
        if probs.len() != carrier.size()? {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for carrier {carrier}",
                probs.len()
            )));
        }
        if probs.iter().any(Signed::is_negative) {
            return Err(Error::Invalid("negative probability".into()));
        }
        let total: Q = probs.iter().fold(zero(), |a, p| a + p);
        if total > one() {
            return Err(Error::Invalid(format!("probabilities sum to {total} > 1")));
        }
        Ok(KnowledgeState { carrier, probs })
    }

    /// The point distribution `[x]`.
    pub fn point(carrier: Carrier, x: usize) -> Result<Self> {
        let n = carrier.size()?;
        if x >= n {
            return Err(Error::Invalid(format!("{x} outside carrier of size {n}")));
        }
        let mut probs = vec![zero(); n];
        probs[x] = one();
        Ok(KnowledgeState { carrier, probs })
    }

    pub fn uniform(carrier: Carrier) -> Result<Self> {
        let n = carrier.size()?;
        let p = Q::new(1.into(), (n as i64).into());
        Ok(KnowledgeState {
            carrier,
            probs: vec![p; n],
        })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn probs(&self) -> &[Q] {
        &self.probs
    }

    pub fn is_normalized(&self) -> bool {
        self.probs.iter().fold(zero(), |a: Q, p| a + p).is_one()
    }

    /// As a map from the trivial system.
    pub fn to_map(&self) -> SubstochMap {
        SubstochMap {
            dom: Carrier::unit(),
            cod: self.carrier.clone(),
            matrix: Matrix {
                rows: self.probs.len(),
                cols: 1,
                data: self.probs.clone(),
            },
        }
    }

    pub fn from_map(m: &SubstochMap) -> Result<Self> {
        if m.matrix.cols != 1 {
            return Err(Error::CarrierMismatch(format!("{} is not a state", m.dom)));
        }
        KnowledgeState::new(m.cod.clone(), m.matrix.data.clone())
    }
}

/// Marginal on factor `keep` of a state over a product carrier.
pub fn marginalize(sigma: &KnowledgeState, keep: usize) -> Result<KnowledgeState> {
    let factors = sigma.carrier.factors();
    if factors.len() < 2 || keep >= factors.len() {
        return Err(Error::CarrierMismatch(format!(
            "cannot keep factor {keep} of {}",
            sigma.carrier
        )));
    }
    let kept = factors[keep].clone();
    let mut probs = vec![zero(); kept.size()?];
    for (i, p) in sigma.probs.iter().enumerate() {
        let digits = sigma.carrier.unrank(i);
        probs[digits[keep]] += p;
    }
    KnowledgeState::new(kept, probs)
}

/// A subset of a finite carrier, viewed as a question `X -> {y, n}` or an
/// effect `X -> ⋆`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proposition {
    carrier: Carrier,
    mask: Vec<bool>,
}

pub const YES: usize = 0;
pub const NO: usize = 1;

/// The answer carrier `{y, n}`.
pub fn answers() -> Carrier {
    Carrier::finite(["y", "n"])
}

impl Proposition {
    pub fn new(carrier: Carrier, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != carrier.size()? {
            return Err(Error::DimensionMismatch(format!(
                "mask of {} for carrier {carrier}",
                mask.len()
            )));
        }
        Ok(Proposition { carrier, mask })
    }

    pub fn from_subset(carrier: Carrier, members: &[usize]) -> Result<Self> {
        let n = carrier.size()?;
        let mut mask = vec![false; n];
        for &x in members {
            *mask
                .get_mut(x)
                .ok_or_else(|| Error::Invalid(format!("{x} outside carrier of size {n}")))? = true;
        }
        Ok(Proposition { carrier, mask })
    }

    /// The `bits`-th subset in binary order (bit `x` set iff `x` is a member).
    pub fn from_bits(carrier: Carrier, bits: u64) -> Result<Self> {
        let n = carrier.size()?;
        Proposition::new(carrier, (0..n).map(|x| bits >> x & 1 == 1).collect())
    }

    pub fn top(carrier: Carrier) -> Result<Self> {
        let n = carrier.size()?;
        Ok(Proposition {
            carrier,
            mask: vec![true; n],
        })
    }

    pub fn bottom(carrier: Carrier) -> Result<Self> {
        let n = carrier.size()?;
        Ok(Proposition {
            carrier,
            mask: vec![false; n],
        })
    }

    /// The atomic proposition `{x}`.
    pub fn atom(carrier: Carrier, x: usize) -> Result<Self> {
        Proposition::from_subset(carrier, &[x])
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask[x]
    }

    /// The propositional question `X -> {y, n}`.
    pub fn question(&self) -> SubstochMap {
        let n = self.mask.len();
        let mut m = Matrix::zeros(2, n);
        for (x, &inside) in self.mask.iter().enumerate() {
            m.set(if inside { YES } else { NO }, x, one());
        }
        SubstochMap {
            dom: self.carrier.clone(),
            cod: answers(),
            matrix: m,
        }
    }

    /// The propositional effect `X -> ⋆`, defined exactly on the subset.
    pub fn effect(&self) -> SubstochMap {
        SubstochMap {
            dom: self.carrier.clone(),
            cod: Carrier::unit(),
            matrix: Matrix {
                rows: 1,
                cols: self.mask.len(),
                data: self.mask.iter().map(|&b| if b { one() } else { zero() }).collect(),
            },
        }
    }

    /// Reads a proposition back from a deterministic total question.
    pub fn from_question(q: &SubstochMap) -> Result<Self> {
        if q.cod != answers() {
            return Err(Error::CarrierMismatch(format!("{} is not {{y,n}}", q.cod)));
        }
        let mut mask = Vec::with_capacity(q.matrix.cols);
        for x in 0..q.matrix.cols {
            let (y, n) = (q.matrix.get(YES, x), q.matrix.get(NO, x));
            match (y.is_one(), n.is_one()) {
                (true, false) if n.is_zero() => mask.push(true),
                (false, true) if y.is_zero() => mask.push(false),
                _ => {
                    return Err(Error::Invalid(format!(
                        "column {x} is not a deterministic answer"
                    )))
                }
            }
        }
        Proposition::new(q.dom.clone(), mask)
    }

    /// Reads a proposition back from a deterministic effect.
    pub fn from_effect(e: &SubstochMap) -> Result<Self> {
        if e.matrix.rows != 1 || !e.is_deterministic() {
            return Err(Error::Invalid("not a propositional effect".into()));
        }
        Proposition::new(e.dom.clone(), e.matrix.data.iter().map(One::is_one).collect())
    }

    /// Lifts `self ⊆ X` and `other ⊆ Y` to the product subset of `X × Y`.
    pub fn product(&self, other: &Proposition) -> Result<Proposition> {
        let carrier = Carrier::product([self.carrier.clone(), other.carrier.clone()]);
        let mut mask = Vec::with_capacity(self.mask.len() * other.mask.len());
        for &a in &self.mask {
            for &b in &other.mask {
                mask.push(a && b);
            }
        }
        Proposition::new(carrier, mask)
    }
}

/// `Prob(π : σ) = Σ_{x∈π} σ(x)`.
pub fn eval_proposition(sigma: &KnowledgeState, pi: &Proposition) -> Result<Q> {
    if sigma.carrier != pi.carrier {
        return Err(Error::CarrierMismatch(format!("{} vs {}", sigma.carrier, pi.carrier)));
    }
    let p = compose_seq(&pi.effect(), &sigma.to_map())?;
    Ok(p.matrix.data[0].clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    And,
    Or,
    Xor,
    Implies,
}

/// Truth-table dots `{y,n} × {y,n} -> {y,n}` and `{y,n} -> {y,n}`, indexed by
/// answer (`YES = 0`, `NO = 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTables {
    pub and: [[usize; 2]; 2],
    pub or: [[usize; 2]; 2],
    pub xor: [[usize; 2]; 2],
    pub implies: [[usize; 2]; 2],
    pub not: [usize; 2],
}

impl Default for TruthTables {
    fn default() -> Self {
        const Y: usize = YES;
        const N: usize = NO;
        TruthTables {
            and: [[Y, N], [N, N]],
            or: [[Y, Y], [Y, N]],
            xor: [[N, Y], [Y, N]],
            implies: [[Y, N], [Y, Y]],
            not: [N, Y],
        }
    }
}

impl TruthTables {
    fn table(&self, op: Connective) -> [[usize; 2]; 2] {
        match op {
            Connective::And => self.and,
            Connective::Or => self.or,
            Connective::Xor => self.xor,
            Connective::Implies => self.implies,
        }
    }

    /// The binary truth-table dot as a deterministic map.
    pub fn binary_dot(&self, op: Connective) -> SubstochMap {
        let t = self.table(op);
        let mut m = Matrix::zeros(2, 4);
        for a in 0..2 {
            for b in 0..2 {
                m.set(t[a][b], a * 2 + b, one());
            }
        }
        SubstochMap {
            dom: Carrier::product([answers(), answers()]),
            cod: answers(),
            matrix: m,
        }
    }

    pub fn not_dot(&self) -> SubstochMap {
        let mut m = Matrix::zeros(2, 2);
        for a in 0..2 {
            m.set(self.not[a], a, one());
        }
        SubstochMap {
            dom: answers(),
            cod: answers(),
            matrix: m,
        }
    }

    /// `π op π′` through copy dot, both questions, then the truth-table dot.
    pub fn connective(&self, op: Connective, p: &Proposition, q: &Proposition) -> Result<Proposition> {
        if p.carrier != q.carrier {
            return Err(Error::CarrierMismatch(format!("{} vs {}", p.carrier, q.carrier)));
        }
        let questions = compose_par(&p.question(), &q.question())?;
        let joint = compose_seq(&questions, &copy(&p.carrier)?)?;
        let answer = compose_seq(&self.binary_dot(op), &joint)?;
        Proposition::from_question(&answer.relabel(p.carrier.clone(), answers())?)
    }

    pub fn negate(&self, p: &Proposition) -> Result<Proposition> {
        Proposition::from_question(&compose_seq(&self.not_dot(), &p.question())?)
    }

    /// Disjunction of propositions about distinct systems: both questions in
    /// parallel, then the OR dot, as a proposition on `X × Y`.
    pub fn composite_or(&self, p: &Proposition, q: &Proposition) -> Result<Proposition> {
        let questions = compose_par(&p.question(), &q.question())?;
        let answer = compose_seq(&self.binary_dot(Connective::Or), &questions)?;
        Proposition::from_question(&answer)
    }
}

pub fn connective(op: Connective, p: &Proposition, q: &Proposition) -> Result<Proposition> {
    TruthTables::default().connective(op, p, q)
}

pub fn negate(p: &Proposition) -> Result<Proposition> {
    TruthTables::default().negate(p)
}

/// Set-level meaning of each connective, kept separate from the diagrammatic route.
pub fn connective_subset(op: Connective, p: &Proposition, q: &Proposition) -> Result<Proposition> {
    if p.carrier != q.carrier {
        return Err(Error::CarrierMismatch(format!("{} vs {}", p.carrier, q.carrier)));
    }
    let mask = p
        .mask
        .iter()
        .zip(&q.mask)
        .map(|(&a, &b)| match op {
            Connective::And => a && b,
            Connective::Or => a || b,
            Connective::Xor => a != b,
            Connective::Implies => !a || b,
        })
        .collect();
    Proposition::new(p.carrier.clone(), mask)
}

/// A function defined on a subset `χ` of its domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialFn {
    pub dom: Carrier,
    pub cod: Carrier,
    pub map: Vec<Option<usize>>,
}

impl PartialFn {
    pub fn new(dom: Carrier, cod: Carrier, map: Vec<Option<usize>>) -> Result<Self> {
        let (n, m) = (dom.size()?, cod.size()?);
        if map.len() != n {
            return Err(Error::DimensionMismatch(format!("{} entries for domain {n}", map.len())));
        }
        if map.iter().flatten().any(|&y| y >= m) {
            return Err(Error::Invalid("image outside codomain".into()));
        }
        Ok(PartialFn { dom, cod, map })
    }

    pub fn total(f: &Function) -> Self {
        PartialFn {
            dom: f.dom.clone(),
            cod: f.cod.clone(),
            map: f.table.iter().map(|&y| Some(y)).collect(),
        }
    }

    /// Domain of definition `χ`.
    pub fn defined(&self) -> Proposition {
        Proposition {
            carrier: self.dom.clone(),
            mask: self.map.iter().map(Option::is_some).collect(),
        }
    }

    /// `(χ, F)` with `f = F` restricted to `χ`; undefined points go to the first
    /// codomain element in `F`.
    pub fn decompose(&self) -> Result<(Proposition, Function)> {
        if self.cod.size()? == 0 && self.map.iter().any(Option::is_none) {
            return Err(Error::Invalid("empty codomain has no total extension".into()));
        }
        let table = self.map.iter().map(|y| y.unwrap_or(0)).collect();
        Ok((self.defined(), Function::new(self.dom.clone(), self.cod.clone(), table)?))
    }
}

/// `f⁻¹(π)`, computed as the effect of `π` precomposed with `f`.
pub fn pullback(f: &Function, pi: &Proposition) -> Result<Proposition> {
    if f.cod != pi.carrier {
        return Err(Error::CarrierMismatch(format!("{} vs {}", f.cod, pi.carrier)));
    }
    Proposition::from_effect(&compose_seq(&pi.effect(), &from_function(f)?)?)
}

/// `χ_f ∩ F⁻¹(π)` for a partial function.
pub fn pullback_effect(f: &PartialFn, pi: &Proposition) -> Result<Proposition> {
    if f.cod != pi.carrier {
        return Err(Error::CarrierMismatch(format!("{} vs {}", f.cod, pi.carrier)));
    }
    Proposition::from_effect(&compose_seq(&pi.effect(), &from_partial_fn(f)?)?)
}

/// Outcome of one law family in [`verify_boolean_laws`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawResult {
    pub family: &'static str,
    pub instances: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl LawResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanLawReport {
    pub max_carrier: usize,
    pub laws: Vec<LawResult>,
}

impl BooleanLawReport {
    pub fn all_passed(&self) -> bool {
        self.laws.iter().all(LawResult::passed)
    }
}

pub const LAW_FAMILIES: [&str; 8] = [
    "associativity",
    "absorption",
    "commutativity",
    "identity",
    "annihilation",
    "idempotence",
    "complements",
    "distributivity",
];

pub fn verify_boolean_laws(max_carrier: usize) -> Result<BooleanLawReport> {
    verify_boolean_laws_with(&TruthTables::default(), max_carrier)
}

/// Checks the eight Boolean-algebra law families on every triple of
/// propositions over carriers of size `1..=max_carrier`, using the
/// truth-table realization of the connectives.
pub fn verify_boolean_laws_with(tables: &TruthTables, max_carrier: usize) -> Result<BooleanLawReport> {
    if max_carrier > 4 {
        return Err(Error::cap("boolean law carrier", max_carrier, 4));
    }
    let mut laws: Vec<LawResult> = LAW_FAMILIES
        .iter()
        .map(|&family| LawResult {
            family,
            instances: 0,
            failures: 0,
            first_failure: None,
        })
        .collect();
    let and = |a: &Proposition, b: &Proposition| tables.connective(Connective::And, a, b);
    let or = |a: &Proposition, b: &Proposition| tables.connective(Connective::Or, a, b);
    let not = |a: &Proposition| tables.negate(a);

    for n in 1..=max_carrier {
        let x = Carrier::range(n);
        let top = Proposition::top(x.clone())?;
        let bot = Proposition::bottom(x.clone())?;
        let all: Vec<Proposition> = (0..1u64 << n)
            .map(|b| Proposition::from_bits(x.clone(), b))
            .collect::<Result<_>>()?;
        for a in &all {
            for b in &all {
                for c in &all {
                    let checks: [(usize, Vec<(Proposition, Proposition)>); 8] = [
                        (0, vec![
                            (and(&and(a, b)?, c)?, and(a, &and(b, c)?)?),
                            (or(&or(a, b)?, c)?, or(a, &or(b, c)?)?),
                        ]),
                        (1, vec![
                            (or(a, &and(a, b)?)?, a.clone()),
                            (and(a, &or(a, b)?)?, a.clone()),
                        ]),
                        (2, vec![(and(a, b)?, and(b, a)?), (or(a, b)?, or(b, a)?)]),
                        (3, vec![(and(a, &top)?, a.clone()), (or(a, &bot)?, a.clone())]),
                        (4, vec![(and(a, &bot)?, bot.clone()), (or(a, &top)?, top.clone())]),
                        (5, vec![(and(a, a)?, a.clone()), (or(a, a)?, a.clone())]),
                        (6, vec![(and(a, &not(a)?)?, bot.clone()), (or(a, &not(a)?)?, top.clone())]),
                        (7, vec![
                            (and(a, &or(b, c)?)?, or(&and(a, b)?, &and(a, c)?)?),
                            (or(a, &and(b, c)?)?, and(&or(a, b)?, &or(a, c)?)?),
                        ]),
                    ];
                    for (k, pairs) in checks {
                        for (lhs, rhs) in pairs {
                            let law = &mut laws[k];
                            law.instances += 1;
                            if lhs != rhs {
                                law.failures += 1;
                                if law.first_failure.is_none() {
                                    law.first_failure = Some(format!(
                                        "|X|={n} π={:?} π′={:?} π″={:?}",
                                        a.mask, b.mask, c.mask
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(BooleanLawReport { max_carrier, laws })
}

/// Integer-valued convenience for tests and fixtures.
pub fn map_from_ints(dom: Carrier, cod: Carrier, rows: &[&[i64]], denom: i64) -> Result<SubstochMap> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|&v| qi(v) / qi(denom)).collect())
        .collect();
    SubstochMap::from_rows(dom, cod, rows)
}
