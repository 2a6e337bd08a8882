//! Simplex embedding of prepare-measure fragments.
//!
//! Response functions are taken from the facets of the cone generated by
//! the effects, their complements and the unit. Any simplex embedding can be
//! rewritten to use these, so infeasibility with the full facet set rules out
//! embeddings of every size. The state map is a linear `M` with `M s ≥ 0`.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use super::lp::{self, LpOutcome};
use crate::error::{Error, Result};
use crate::rational::{rationalize, to_f64, Q};
use crate::types::cap;

/// Largest allowed `lambda_max` and fragment dimension.
pub const MAX_LAMBDA: usize = 16;
/// Denominator for float fragments.
pub const FRAGMENT_DENOM: u64 = 1_000_000_000;
/// Pairing slack allowed on float fragments.
pub const PAIRING_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct GPTFragment {
    pub dim: usize,
    pub states: Vec<Vec<Q>>,
    pub effects: Vec<Vec<Q>>,
    pub unit: Vec<Q>,
    /// Set when the vectors were rounded from floats; pairings then only
    /// need to hold within [`PAIRING_TOL`].
    pub approximate: bool,
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tol() -> Q {
    Q::new(1.into(), 10_000_000.into())
}

impl GPTFragment {
    pub fn new(states: Vec<Vec<Q>>, effects: Vec<Vec<Q>>, unit: Vec<Q>) -> Result<Self> {
        let f = GPTFragment {
            dim: unit.len(),
            states,
            effects,
            unit,
            approximate: false,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn from_f64(states: &[Vec<f64>], effects: &[Vec<f64>], unit: &[f64]) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| rationalize(x, FRAGMENT_DENOM)).collect::<Result<Vec<Q>>>();
        let f = GPTFragment {
            dim: unit.len(),
            states: states.iter().map(|s| conv(s)).collect::<Result<_>>()?,
            effects: effects.iter().map(|e| conv(e)).collect::<Result<_>>()?,
            unit: conv(unit)?,
            approximate: true,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_LAMBDA {
            return Err(Error::ConfigError(format!("fragment dimension {} outside 1..={MAX_LAMBDA}", self.dim)));
        }
        if self.states.is_empty() {
            return Err(Error::ConfigError("fragment has no states".into()));
        }
        if let Some(v) = self.states.iter().chain(&self.effects).find(|v| v.len() != self.dim) {
            return Err(Error::DimensionMismatch(format!("vector of length {} in dimension {}", v.len(), self.dim)));
        }
        let slack = if self.approximate { tol() } else { Q::zero() };
        for (i, s) in self.states.iter().enumerate() {
            let u = dot(&self.unit, s);
            if (&u - Q::one()).abs() > slack {
                return Err(Error::WeightError(format!("state {i} is not normalized")));
            }
            for (j, e) in self.effects.iter().enumerate() {
                let p = dot(e, s);
                if p < -slack.clone() || p > &u + &slack {
                    return Err(Error::WeightError(format!("effect {j} on state {i} is outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// `effects[j] · states[i]`, with the unit appended as the last effect.
    pub fn pairings(&self) -> Vec<Vec<Q>> {
        self.states
            .iter()
            .map(|s| self.effects.iter().chain([&self.unit]).map(|e| dot(e, s)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub lambda: usize,
    /// Probability vector over the ontic set for each state.
    pub states: Vec<Vec<Q>>,
    /// Response vector for each effect.
    pub effects: Vec<Vec<Q>>,
    pub unit: Vec<Q>,
}

impl Embedding {
    /// Checks normalization, response bounds and every pairing.
    pub fn verify(&self, frag: &GPTFragment) -> bool {
        let ok_shape = self.states.len() == frag.states.len()
            && self.effects.len() == frag.effects.len()
            && self.states.iter().chain(&self.effects).chain([&self.unit]).all(|v| v.len() == self.lambda);
        if !ok_shape || self.unit.iter().any(|v| !v.is_one()) {
            return false;
        }
        if self.effects.iter().flatten().any(|v| v.is_negative() || *v > Q::one()) {
            return false;
        }
        if self.states.iter().flatten().any(Signed::is_negative) {
            return false;
        }
        let slack = if frag.approximate { tol() } else { Q::zero() };
        let pairs = frag.pairings();
        self.states.iter().zip(&pairs).all(|(mu, row)| {
            self.effects
                .iter()
                .chain([&self.unit])
                .zip(row)
                .all(|(xi, p)| (dot(xi, mu) - p).abs() <= slack)
        })
    }

    pub fn max_pairing_error(&self, frag: &GPTFragment) -> f64 {
        let pairs = frag.pairings();
        let mut worst = 0.0f64;
        for (mu, row) in self.states.iter().zip(&pairs) {
            for (xi, p) in self.effects.iter().chain([&self.unit]).zip(row) {
                worst = worst.max(to_f64(&(dot(xi, mu) - p)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedResult {
    Feasible(Embedding),
    /// No embedding with at most `lambda_max` ontic states was found.
    /// `universal` means no embedding of any size exists.
    Infeasible { lambda_max: usize, universal: bool },
}

/// Row-reduces in place; returns the pivot columns.
pub(crate) fn rref(rows: &mut Vec<Vec<Q>>) -> Vec<usize> {
    let width = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..width {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let lead = rows[r][c].clone();
        for v in rows[r].iter_mut() {
            *v /= &lead;
        }
        let prow = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k.min(n) {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Facet normals of the cone spanned by `vs` (in coordinates), normalized
/// to 1 on `u`, sorted in decreasing lexicographic order.
fn facets(vs: &[Vec<Q>], u: &[Q]) -> Result<Vec<Vec<Q>>> {
    let k = u.len();
    if k == 1 {
        return Ok(vec![vec![Q::one() / &u[0]]]);
    }
    let needed = binomial(vs.len(), k - 1);
    if needed > cap() as u128 {
        return Err(Error::cap("facet candidates", needed, cap()));
    }
    let mut found = BTreeSet::new();
    combinations(vs.len(), k - 1, &mut |idx| {
        let mut m: Vec<Vec<Q>> = idx.iter().map(|&i| vs[i].clone()).collect();
        let piv = rref(&mut m);
        if piv.len() != k - 1 {
            return;
        }
        let free = (0..k).find(|c| !piv.contains(c)).unwrap_or(0);
        let mut phi = vec![Q::zero(); k];
        phi[free] = Q::one();
        for (r, &p) in piv.iter().enumerate() {
            phi[p] = -m[r][free].clone();
        }
        let signs: Vec<Q> = vs.iter().map(|v| dot(&phi, v)).collect();
        let pos = signs.iter().all(|s| !s.is_negative());
        let neg = signs.iter().all(|s| !s.is_positive());
        if !pos && !neg {
            return;
        }
        let norm = dot(&phi, u);
        if norm.is_zero() {
            return;
        }
        found.insert(phi.iter().map(|x| x / &norm).collect::<Vec<Q>>());
    });
    Ok(found.into_iter().rev().collect())
}

struct Problem {
    d: usize,
    states: Vec<Vec<Q>>,
    /// `responses[e][i]`, unit last.
    responses: Vec<Vec<Q>>,
    pairings: Vec<Vec<Q>>,
    approximate: bool,
}

impl Problem {
    /// Solves for `M` using only the facets in `active`.
    fn solve(&self, active: &[usize]) -> Result<Option<Vec<Vec<Q>>>> {
        let (l, d, ns, ne) = (active.len(), self.d, self.states.len(), self.responses.len());
        let n_m = 2 * l * d;
        let n_t = ns * l;
        let n_r = if self.approximate { 4 * ns * ne } else { 0 };
        let width = n_m + n_t + n_r;
        let mut a = Vec::new();
        let mut b = Vec::new();
        // (M s)_i as a row over the M variables
        let ms = |i: usize, s: &[Q], row: &mut [Q], scale: &Q| {
            for j in 0..d {
                let v = scale * &s[j];
                row[i * d + j] += &v;
                row[l * d + i * d + j] -= &v;
            }
        };
        for (si, s) in self.states.iter().enumerate() {
            for i in 0..l {
                let mut row = vec![Q::zero(); width];
                ms(i, s, &mut row, &Q::one());
                row[n_m + si * l + i] = -Q::one();
                a.push(row);
                b.push(Q::zero());
            }
            for e in 0..ne {
                let mut row = vec![Q::zero(); width];
                for (ii, &i) in active.iter().enumerate() {
                    let xi = &self.responses[e][i];
                    if !xi.is_zero() {
                        ms(ii, s, &mut row, xi);
                    }
                }
                if self.approximate {
                    let base = n_m + n_t + 4 * (si * ne + e);
                    row[base] = Q::one();
                    row[base + 1] = -Q::one();
                    for off in 0..2 {
                        let mut cap_row = vec![Q::zero(); width];
                        cap_row[base + off] = Q::one();
                        cap_row[base + 2 + off] = Q::one();
                        a.push(cap_row);
                        b.push(tol());
                    }
                }
                a.push(row);
                b.push(self.pairings[si][e].clone());
            }
        }
        match lp::feasible(&a, &b)? {
            LpOutcome::Infeasible(_) => Ok(None),
            LpOutcome::Feasible(x) => Ok(Some(
                (0..l)
                    .map(|i| (0..d).map(|j| &x[i * d + j] - &x[l * d + i * d + j]).collect())
                    .collect(),
            )),
        }
    }
}

/// Searches for a simplex embedding with at most `lambda_max` ontic states.
pub fn simplex_embed(frag: &GPTFragment, lambda_max: usize) -> Result<EmbedResult> {
    if lambda_max == 0 || lambda_max > MAX_LAMBDA {
        return Err(Error::ConfigError(format!("lambda_max {lambda_max} outside 1..={MAX_LAMBDA}")));
    }
    frag.validate()?;
    let mut gens: BTreeSet<Vec<Q>> = BTreeSet::new();
    for e in &frag.effects {
        gens.insert(e.clone());
        gens.insert(frag.unit.iter().zip(e).map(|(u, x)| u - x).collect());
    }
    gens.insert(frag.unit.clone());
    gens.retain(|v| v.iter().any(|x| !x.is_zero()));
    let gens: Vec<Vec<Q>> = gens.into_iter().collect();

    let mut basis = gens.clone();
    let pivots = rref(&mut basis);
    let coords = |v: &[Q]| -> Vec<Q> { pivots.iter().map(|&p| v[p].clone()).collect() };
    let cu = coords(&frag.unit);
    let normals = facets(&gens.iter().map(|g| coords(g)).collect::<Vec<_>>(), &cu)?;

    let responses: Vec<Vec<Q>> = frag
        .effects
        .iter()
        .chain([&frag.unit])
        .map(|e| {
            let c = coords(e);
            normals.iter().map(|phi| dot(phi, &c)).collect()
        })
        .collect();
    let problem = Problem {
        d: frag.dim,
        states: frag.states.clone(),
        responses,
        pairings: frag.pairings(),
        approximate: frag.approximate,
    };

    let mut active: Vec<usize> = (0..normals.len()).collect();
    let Some(mut m) = problem.solve(&active)? else {
        return Ok(EmbedResult::Infeasible {
            lambda_max,
            universal: true,
        });
    };
    // greedily drop response functions while the rest still embeds
    for i in (0..normals.len()).rev() {
        let trial: Vec<usize> = active.iter().copied().filter(|&j| j != i).collect();
        if trial.is_empty() {
            continue;
        }
        if let Some(m2) = problem.solve(&trial)? {
            active = trial;
            m = m2;
        }
    }
    if active.len() > lambda_max {
        return Ok(EmbedResult::Infeasible {
            lambda_max,
            universal: false,
        });
    }
    let states = frag
        .states
        .iter()
        .map(|s| m.iter().map(|row| dot(row, s)).collect())
        .collect();
    let pick = |e: &Vec<Q>| active.iter().map(|&i| e[i].clone()).collect::<Vec<Q>>();
    let ne = problem.responses.len();
    Ok(EmbedResult::Feasible(Embedding {
        lambda: active.len(),
        states,
        effects: problem.responses[..ne - 1].iter().map(pick).collect(),
        unit: pick(&problem.responses[ne - 1]),
    }))
}

/// Classical bit: two point states, the two atomic effects, unit.
pub fn classical_bit() -> GPTFragment {
    let v = |a: i64, b: i64| vec![Q::from_integer(a.into()), Q::from_integer(b.into())];
    GPTFragment::new(vec![v(1, 0), v(0, 1)], vec![v(1, 0), v(0, 1)], v(1, 1)).expect("valid fragment")
}

/// Qubit stabilizer states and Pauli measurements in the Pauli basis
/// `(1, x, y, z)`: states `(1, ±n)`, effects `(1 ± n)/2`.
pub fn qubit_stabilizer() -> GPTFragment {
    bloch_fragment(&[
        vec![1, 0, 0],
        vec![0, 1, 0],
        vec![0, 0, 1],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(|x| Q::from_integer(x.into())).collect())
    .collect::<Vec<Vec<Q>>>())
}

/// States `(1, ±n)` and effects `(1 ± n)/2` for each axis `n` in the list.
pub fn bloch_fragment(axes: &[Vec<Q>]) -> GPTFragment {
    let half = Q::new(1.into(), 2.into());
    let mut states = Vec::new();
    let mut effects = Vec::new();
    for n in axes {
        for sign in [Q::one(), -Q::one()] {
            let mut s = vec![Q::one()];
            s.extend(n.iter().map(|x| x * &sign));
            let e: Vec<Q> = s.iter().map(|x| x * &half).collect();
            states.push(s);
            effects.push(e);
        }
    }
    let dim = axes.first().map_or(0, Vec::len) + 1;
    let mut unit = vec![Q::zero(); dim];
    unit[0] = Q::one();
    GPTFragment {
        dim,
        states,
        effects,
        unit,
        approximate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn classical_bit_embeds_identically() {
        let f = classical_bit();
        let EmbedResult::Feasible(e) = simplex_embed(&f, 16).unwrap() else {
            panic!("bit must embed");
        };
        assert_eq!(e.lambda, 2);
        assert!(e.verify(&f));
        assert_eq!(e.states, vec![vec![qi(1), qi(0)], vec![qi(0), qi(1)]]);
        assert_eq!(e.effects, e.states);
    }

    #[test]
    fn single_state_embeds_trivially() {
        let f = GPTFragment::new(vec![vec![qi(1)]], vec![], vec![qi(1)]).unwrap();
        let EmbedResult::Feasible(e) = simplex_embed(&f, 1).unwrap() else {
            panic!("trivial fragment must embed");
        };
        assert_eq!(e.lambda, 1);
        assert!(e.verify(&f));
    }

    #[test]
    fn stabilizer_fragment_matches_the_toy_model() {
        let f = qubit_stabilizer();
        f.validate().unwrap();
        let EmbedResult::Feasible(e) = simplex_embed(&f, 16).unwrap() else {
            panic!("stabilizer fragment embeds");
        };
        assert!(e.verify(&f));
        assert_eq!(e.lambda, 4);
    }

    #[test]
    fn octagon_rebit_is_contextual() {
        let axes = vec![
            vec![qi(1), qi(0)],
            vec![qi(0), qi(1)],
            vec![q(3, 5), q(4, 5)],
            vec![q(4, 5), q(-3, 5)],
        ];
        let f = bloch_fragment(&axes);
        f.validate().unwrap();
        assert_eq!(
            simplex_embed(&f, 16).unwrap(),
            EmbedResult::Infeasible {
                lambda_max: 16,
                universal: true
            }
        );
    }

    #[test]
    fn float_fragment_within_tolerance() {
        let r = 0.5f64.sqrt();
        let f = GPTFragment::from_f64(
            &[vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0], vec![1.0, r, r]],
            &[vec![0.5, 0.5, 0.0]],
            &[1.0, 0.0, 0.0],
        )
        .unwrap();
        match simplex_embed(&f, 16).unwrap() {
            EmbedResult::Feasible(e) => {
                assert!(e.verify(&f));
                assert!(e.max_pairing_error(&f) <= PAIRING_TOL);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounds_rejected() {
        assert!(simplex_embed(&classical_bit(), 0).is_err());
        assert!(simplex_embed(&classical_bit(), 17).is_err());
        let bad = GPTFragment::new(vec![vec![qi(2), qi(0)]], vec![], vec![qi(1), qi(1)]);
        assert!(matches!(bad, Err(Error::WeightError(_))));
    }

    #[test]
    fn rref_rank() {
        let mut m = vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]];
        assert_eq!(rref(&mut m), vec![0]);
        assert_eq!(m.len(), 1);
    }
}
