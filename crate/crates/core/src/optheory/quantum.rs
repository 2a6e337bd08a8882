//! Finite-dimensional quantum processes as Kraus lists, plus the
//! Liouville (superoperator) layout used when evaluating diagrams.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for algebraic identities (positivity, trace bounds).
pub const IDENTITY_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A completely positive, trace-nonincreasing map `in_dim -> out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumProcess {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<CMatrix>,
}

impl QuantumProcess {
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        for (i, k) in kraus.iter().enumerate() {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {out_dim}x{in_dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let p = QuantumProcess { in_dim, out_dim, kraus };
        let slack = CMatrix::identity(in_dim, in_dim) - p.kraus_sum();
        let min = min_eigenvalue(&slack);
        if min < -IDENTITY_TOL * (in_dim.max(1) as f64) * 10.0 {
            return Err(Error::NotPositive(format!(
                "Σ K†K exceeds the identity (slack eigenvalue {min:e})"
            )));
        }
        Ok(p)
    }

    /// `Σ K†K`.
    pub fn kraus_sum(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        s
    }

    /// Preparation of the pure state `psi` (need not be normalized below 1).
    pub fn pure_state(psi: &[Complex64]) -> Result<Self> {
        QuantumProcess::new(1, psi.len(), vec![CMatrix::from_column_slice(psi.len(), 1, psi)])
    }

    /// Preparation of a density matrix through its eigendecomposition.
    pub fn mixed_state(rho: &CMatrix) -> Result<Self> {
        check_density(rho)?;
        let eig = rho.clone().symmetric_eigen();
        let mut kraus = Vec::new();
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > IDENTITY_TOL {
                let v = eig.eigenvectors.column(i) * c(lambda.sqrt());
                kraus.push(CMatrix::from_column_slice(rho.nrows(), 1, v.as_slice()));
            }
        }
        QuantumProcess::new(1, rho.nrows(), kraus)
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let n = u.nrows();
        QuantumProcess::new(n, n, vec![u])
    }

    /// Measurement in the orthonormal basis `basis`, outcome `k` on a classical
    /// register of size `basis.len()`.
    pub fn measurement(basis: &[Vec<Complex64>]) -> Result<Self> {
        let n = basis.len();
        let d = basis.first().map_or(0, Vec::len);
        let kraus = basis
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let mut m = CMatrix::zeros(n, d);
                for (j, a) in v.iter().enumerate() {
                    m[(k, j)] = a.conj();
                }
                m
            })
            .collect();
        QuantumProcess::new(d, n, kraus)
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        kraus_apply(rho, &self.kraus)
    }

    /// Superoperator with one leg per wire: each wire of dimension `d`
    /// contributes the index `i·d + j` of `|i⟩⟨j|`.
    pub fn liouville(&self, in_dims: &[usize], out_dims: &[usize]) -> Result<Matrix<Complex64>> {
        let din: usize = in_dims.iter().product();
        let dout: usize = out_dims.iter().product();
        if din != self.in_dim || dout != self.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "process is {}->{}, ports give {din}->{dout}",
                self.in_dim, self.out_dim
            )));
        }
        let row_of = wire_layout(out_dims);
        let col_of = wire_layout(in_dims);
        let mut m = Matrix::zeros(dout * dout, din * din);
        for k in &self.kraus {
            for i in 0..dout {
                for j in 0..dout {
                    let r = row_of(i, j);
                    for a in 0..din {
                        let kia = k[(i, a)];
                        if kia == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for b in 0..din {
                            let v = kia * k[(j, b)].conj();
                            let col = col_of(a, b);
                            let cur = m.data[r * m.cols + col];
                            m.data[r * m.cols + col] = cur + v;
                        }
                    }
                }
            }
        }
        Ok(m)
    }
}

/// Maps a composite `|i⟩⟨j|` to the per-wire Liouville index.
fn wire_layout(dims: &[usize]) -> impl Fn(usize, usize) -> usize + '_ {
    move |i, j| {
        let (mut i, mut j) = (i, j);
        let mut idx = 0;
        let mut scale = 1;
        for &d in dims.iter().rev() {
            let (ii, jj) = (i % d, j % d);
            i /= d;
            j /= d;
            idx += (ii * d + jj) * scale;
            scale *= d * d;
        }
        idx
    }
}

fn min_eigenvalue(h: &CMatrix) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let herm = (h + h.adjoint()) * c(0.5);
    herm.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Hermitian, positive semidefinite, trace at most one.
pub fn check_density(rho: &CMatrix) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::DimensionMismatch("density matrix must be square".into()));
    }
    let asym = (rho - rho.adjoint()).norm();
    if asym > 1e-9 {
        return Err(Error::NotPositive(format!("not Hermitian (deviation {asym:e})")));
    }
    if min_eigenvalue(rho) < -1e-9 {
        return Err(Error::NotPositive("negative eigenvalue".into()));
    }
    if rho.trace().re > 1.0 + 1e-9 {
        return Err(Error::NotPositive("trace exceeds one".into()));
    }
    Ok(())
}

pub fn kraus_apply(rho: &CMatrix, kraus: &[CMatrix]) -> Result<CMatrix> {
    let d = rho.nrows();
    let out = kraus.first().map_or(d, |k| k.nrows());
    let mut acc = CMatrix::zeros(out, out);
    for k in kraus {
        if k.ncols() != d || k.nrows() != out {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator {}x{} on a {d}-dimensional state",
                k.nrows(),
                k.ncols()
            )));
        }
        acc += k * rho * k.adjoint();
    }
    Ok(acc)
}

pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Traces out subsystem `traced` of a register with subsystem dimensions `dims`.
pub fn partial_trace(rho: &CMatrix, dims: &[usize], traced: usize) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total || traced >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot trace subsystem {traced} of {dims:?} from a {}x{} matrix",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let before: usize = dims[..traced].iter().product();
    let d = dims[traced];
    let after: usize = dims[traced + 1..].iter().product();
    let n = before * after;
    let mut out = CMatrix::zeros(n, n);
    for a in 0..before {
        for b in 0..after {
            for a2 in 0..before {
                for b2 in 0..after {
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in 0..d {
                        s += rho[((a * d + k) * after + b, (a2 * d + k) * after + b2)];
                    }
                    out[(a * after + b, a2 * after + b2)] = s;
                }
            }
        }
    }
    Ok(out)
}

/// `Re tr(ρ E)`.
pub fn born(rho: &CMatrix, effect: &CMatrix) -> Result<f64> {
    if rho.shape() != effect.shape() {
        return Err(Error::DimensionMismatch(format!(
            "state {:?} vs effect {:?}",
            rho.shape(),
            effect.shape()
        )));
    }
    Ok((rho * effect).trace().re)
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(psi: &[Complex64]) -> CMatrix {
    let v = CMatrix::from_column_slice(psi.len(), 1, psi);
    &v * v.adjoint()
}

/// The singlet `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![c(0.0), c(s), c(-s), c(0.0)]
}

/// Eigenbasis of `cos θ Z + sin θ X`, the `+1` eigenvector first.
pub fn xz_basis(theta: f64) -> Vec<Vec<Complex64>> {
    let (h, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    vec![vec![c(h), c(s)], vec![c(-s), c(h)]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &CMatrix, b: &CMatrix) -> bool {
        (a - b).norm() < IDENTITY_TOL
    }

    #[test]
    fn identity_channel_preserves_state() {
        let rho = projector(&[c(0.6), Complex64::new(0.0, 0.8)]);
        let id = QuantumProcess::unitary(CMatrix::identity(2, 2)).unwrap();
        assert!(approx(&id.apply(&rho).unwrap(), &rho));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = projector(&[c(1.0), c(0.0)]);
        let b = projector(&[c(0.6), c(0.8)]);
        let ab = tensor(&a, &b);
        assert!(approx(&partial_trace(&ab, &[2, 2], 1).unwrap(), &a));
        assert!(approx(&partial_trace(&ab, &[2, 2], 0).unwrap(), &b));
        let abc = tensor(&ab, &projector(&[c(0.0), c(1.0), c(0.0)]));
        assert!(approx(&partial_trace(&abc, &[2, 2, 3], 2).unwrap(), &ab));
    }

    #[test]
    fn singlet_never_gives_equal_z_outcomes() {
        let rho = projector(&singlet());
        let up = projector(&[c(1.0), c(0.0)]);
        assert!(born(&rho, &tensor(&up, &up)).unwrap().abs() < IDENTITY_TOL);
        let down = projector(&[c(0.0), c(1.0)]);
        assert!((born(&rho, &tensor(&up, &down)).unwrap() - 0.5).abs() < IDENTITY_TOL);
    }

    #[test]
    fn rejects_trace_increasing() {
        let k = CMatrix::identity(2, 2) * c(1.1);
        assert!(matches!(QuantumProcess::new(2, 2, vec![k]), Err(Error::NotPositive(_))));
        assert!(QuantumProcess::new(2, 3, vec![CMatrix::identity(2, 2)]).is_err());
    }

    #[test]
    fn measurement_is_trace_preserving() {
        let m = QuantumProcess::measurement(&xz_basis(0.7)).unwrap();
        assert!(approx(&m.kraus_sum(), &CMatrix::identity(2, 2)));
        let out = m.apply(&projector(&xz_basis(0.7)[0])).unwrap();
        assert!((out[(0, 0)].re - 1.0).abs() < IDENTITY_TOL);
    }

    #[test]
    fn mixed_state_roundtrip() {
        let rho = projector(&[c(0.6), c(0.8)]) * c(0.5) + projector(&[c(1.0), c(0.0)]) * c(0.5);
        let p = QuantumProcess::mixed_state(&rho).unwrap();
        let one = CMatrix::identity(1, 1);
        assert!(approx(&p.apply(&one).unwrap(), &rho));
    }

    #[test]
    fn liouville_matches_direct_application() {
        let u = QuantumProcess::measurement(&xz_basis(1.1)).unwrap();
        let rho = projector(&[c(0.6), Complex64::new(0.0, 0.8)]);
        let s = u.liouville(&[2], &[2]).unwrap();
        let out = u.apply(&rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut v = Complex64::new(0.0, 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        v += s.get(i * 2 + j, a * 2 + b) * rho[(a, b)];
                    }
                }
                assert!((v - out[(i, j)]).norm() < IDENTITY_TOL);
            }
        }
    }

    #[test]
    fn two_wire_layout_splits_composite_indices() {
        let prep = QuantumProcess::pure_state(&singlet()).unwrap();
        let s = prep.liouville(&[], &[2, 2]).unwrap();
        let rho = projector(&singlet());
        // wire 0 carries |a⟩⟨a'|, wire 1 carries |b⟩⟨b'|
        for (a, a2, b, b2) in [(0, 1, 1, 0), (0, 0, 1, 1), (1, 0, 0, 1)] {
            let row = (a * 2 + a2) * 4 + (b * 2 + b2);
            assert!((s.get(row, 0) - rho[(a * 2 + b, a2 * 2 + b2)]).norm() < IDENTITY_TOL);
        }
    }
}
