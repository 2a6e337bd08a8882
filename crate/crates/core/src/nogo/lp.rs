//! Exact rational feasibility LP: find `x ≥ 0` with `A x = b`.
//!
//! Dense-tableau phase-one simplex with Bland's rule. Infeasibility comes
//! with a Farkas certificate `y` such that `yᵀA ≤ 0` and `yᵀb > 0`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;
use crate::types::cap;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vec<Q>),
    Infeasible(Vec<Q>),
}

/// Pivot budget; Bland's rule terminates long before this.
const MAX_PIVOTS: usize = 1_000_000;

pub fn feasible(a: &[Vec<Q>], b: &[Q]) -> Result<LpOutcome> {
    let m = a.len();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!("{m} rows but {} right-hand sides", b.len())));
    }
    let n = a.first().map_or(0, Vec::len);
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("ragged constraint matrix".into()));
    }
    let width = n + m + 1;
    let limit = cap();
    if (m + 1).checked_mul(width).is_none_or(|v| v > limit * 4) {
        return Err(Error::cap("LP tableau", (m + 1) as u128 * width as u128, limit * 4));
    }

    // rows with negative rhs are negated so artificials start feasible
    let sign: Vec<bool> = b.iter().map(Signed::is_negative).collect();
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = Vec::with_capacity(width);
        for v in &a[i] {
            row.push(if sign[i] { -v } else { v.clone() });
        }
        for j in 0..m {
            row.push(if i == j { Q::one() } else { Q::zero() });
        }
        row.push(if sign[i] { -&b[i] } else { b[i].clone() });
        t.push(row);
    }
    // objective row: reduced costs of min Σ artificials, last entry is -w
    let mut obj = vec![Q::zero(); width];
    for row in &t {
        for j in 0..n {
            obj[j] -= &row[j];
        }
        obj[width - 1] -= &row[width - 1];
    }
    t.push(obj);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut pivots = 0;
    loop {
        let Some(enter) = (0..n + m).find(|&j| t[m][j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // the phase-one objective is bounded below by zero
        let (r, _) = leave.ok_or(Error::Degenerate(pivots))?;
        pivot(&mut t, r, enter);
        basis[r] = enter;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::Degenerate(pivots));
        }
    }

    if t[m][width - 1].is_zero() {
        let mut x = vec![Q::zero(); n];
        for (i, &bv) in basis.iter().enumerate() {
            if bv < n {
                x[bv] = t[i][width - 1].clone();
            }
        }
        return Ok(LpOutcome::Feasible(x));
    }
    // duals of the phase-one problem: y_i = 1 - reduced cost of artificial i
    let y: Vec<Q> = (0..m)
        .map(|i| {
            let yi = Q::one() - &t[m][n + i];
            if sign[i] {
                -yi
            } else {
                yi
            }
        })
        .collect();
    if !certifies_infeasible(a, b, &y) {
        return Err(Error::Degenerate(pivots));
    }
    Ok(LpOutcome::Infeasible(y))
}

fn pivot(t: &mut [Vec<Q>], r: usize, c: usize) {
    let p = t[r][c].clone();
    for v in t[r].iter_mut() {
        *v /= &p;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for (v, pv) in row.iter_mut().zip(&prow) {
            if !pv.is_zero() {
                *v -= &f * pv;
            }
        }
    }
}

/// `yᵀA ≤ 0` and `yᵀb > 0`.
pub fn certifies_infeasible(a: &[Vec<Q>], b: &[Q], y: &[Q]) -> bool {
    let n = a.first().map_or(0, Vec::len);
    for j in 0..n {
        let s: Q = a.iter().zip(y).map(|(row, yi)| &row[j] * yi).sum();
        if s.is_positive() {
            return false;
        }
    }
    let s: Q = b.iter().zip(y).map(|(bi, yi)| bi * yi).sum();
    s.is_positive()
}

/// `x ≥ 0` and `A x = b` exactly.
pub fn certifies_feasible(a: &[Vec<Q>], b: &[Q], x: &[Q]) -> bool {
    x.iter().all(|v| !v.is_negative())
        && a.iter().zip(b).all(|(row, bi)| {
            let s: Q = row.iter().zip(x).map(|(r, v)| r * v).sum();
            s == *bi
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn rows(r: &[&[i64]]) -> Vec<Vec<Q>> {
        r.iter().map(|row| row.iter().map(|&v| qi(v)).collect()).collect()
    }

    #[test]
    fn simple_feasible() {
        let a = rows(&[&[1, 1, 0], &[0, 1, 1]]);
        let b = vec![qi(1), q(1, 2)];
        match feasible(&a, &b).unwrap() {
            LpOutcome::Feasible(x) => assert!(certifies_feasible(&a, &b, &x)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simple_infeasible() {
        // x + y = 1 and x + y = 2
        let a = rows(&[&[1, 1], &[1, 1]]);
        let b = vec![qi(1), qi(2)];
        match feasible(&a, &b).unwrap() {
            LpOutcome::Infeasible(y) => assert!(certifies_infeasible(&a, &b, &y)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_rhs_needs_negative_certificate() {
        // -x = -1 feasible, x = -1 infeasible
        let a = rows(&[&[-1]]);
        assert!(matches!(feasible(&a, &[qi(-1)]).unwrap(), LpOutcome::Feasible(_)));
        let a = rows(&[&[1]]);
        match feasible(&a, &[qi(-1)]).unwrap() {
            LpOutcome::Infeasible(y) => assert!(certifies_infeasible(&a, &[qi(-1)], &y)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_redundant_rows() {
        let a = rows(&[&[1, 1, 1], &[1, 1, 1], &[2, 2, 2], &[1, 0, 0]]);
        let b = vec![qi(1), qi(1), qi(2), qi(0)];
        assert!(matches!(feasible(&a, &b).unwrap(), LpOutcome::Feasible(_)));
    }

    #[test]
    fn empty_system_is_feasible() {
        assert_eq!(feasible(&[], &[]).unwrap(), LpOutcome::Feasible(vec![]));
    }
}
