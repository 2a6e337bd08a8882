//! Dense matrices and tensor-network contraction over a generic scalar.
//!
//! A diagram is evaluated by turning every box into a tensor whose legs are its
//! output wires followed by its input wires, then contracting box by box in
//! topological order. Composite indices are row-major: the first port is the
//! most significant digit.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::diagrams::{Diagram, Generator, Sink, Source};
use crate::error::{Error, Result};
use crate::rational::Q;
use crate::types::{cap, SystemType};

pub trait Scalar:
    Clone + PartialEq + Zero + One + Add<Output = Self> + Mul<Output = Self> + std::fmt::Debug
{
}

impl Scalar for Q {}
impl Scalar for Complex64 {}
impl Scalar for f64 {}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn get(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn row_vec(&self, r: usize) -> Vec<S> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix<S>) -> Result<Matrix<S>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out: Matrix<S> = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * other.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product, `self` indices most significant.
    pub fn kron(&self, other: &Matrix<S>) -> Matrix<S> {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out: Matrix<S> = Matrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let v = a.clone() * other.get(k, l).clone();
                        out.set(i * other.rows + k, j * other.cols + l, v);
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix<S> {
        let mut out: Matrix<S> = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

/// Dense tensor with named legs, row-major over `legs`.
#[derive(Debug, Clone)]
pub struct Tensor<S> {
    pub legs: Vec<usize>,
    pub dims: Vec<usize>,
    pub data: Vec<S>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn checked_volume(dims: &[usize]) -> Result<usize> {
    let limit = cap();
    let mut n: usize = 1;
    for d in dims {
        n = n
            .checked_mul(*d)
            .filter(|v| *v <= limit)
            .ok_or_else(|| Error::cap("tensor volume", format!("{dims:?}"), limit))?;
    }
    Ok(n)
}

impl<S: Scalar> Tensor<S> {
    pub fn scalar(v: S) -> Self {
        Tensor {
            legs: Vec::new(),
            dims: Vec::new(),
            data: vec![v],
        }
    }

    /// Contracts every leg shared by `self` and `other`; the result keeps
    /// `self`'s free legs followed by `other`'s.
    pub fn contract(&self, other: &Tensor<S>) -> Result<Tensor<S>> {
        let a_strides = strides(&self.dims);
        let b_strides = strides(&other.dims);
        let mut shared = Vec::new(); // (dim, stride in a, stride in b)
        let mut a_free = Vec::new(); // (leg, dim, stride)
        for (k, leg) in self.legs.iter().enumerate() {
            match other.legs.iter().position(|l| l == leg) {
                Some(j) => {
                    if self.dims[k] != other.dims[j] {
                        return Err(Error::DimensionMismatch(format!(
                            "leg {leg}: {} vs {}",
                            self.dims[k], other.dims[j]
                        )));
                    }
                    shared.push((self.dims[k], a_strides[k], b_strides[j]));
                }
                None => a_free.push((*leg, self.dims[k], a_strides[k])),
            }
        }
        let b_free: Vec<(usize, usize, usize)> = other
            .legs
            .iter()
            .enumerate()
            .filter(|(_, l)| !self.legs.contains(l))
            .map(|(j, l)| (*l, other.dims[j], b_strides[j]))
            .collect();

        let out_dims: Vec<usize> = a_free.iter().chain(&b_free).map(|x| x.1).collect();
        let out_len = checked_volume(&out_dims)?;
        let a_offsets = offsets(&a_free.iter().map(|x| (x.1, x.2)).collect::<Vec<_>>());
        let b_offsets = offsets(&b_free.iter().map(|x| (x.1, x.2)).collect::<Vec<_>>());
        let sa = offsets(&shared.iter().map(|x| (x.0, x.1)).collect::<Vec<_>>());
        let sb = offsets(&shared.iter().map(|x| (x.0, x.2)).collect::<Vec<_>>());

        let mut data = Vec::with_capacity(out_len);
        for ao in &a_offsets {
            for bo in &b_offsets {
                let mut acc = S::zero();
                for (s_a, s_b) in sa.iter().zip(&sb) {
                    let x = &self.data[ao + s_a];
                    if x.is_zero() {
                        continue;
                    }
                    let y = &other.data[bo + s_b];
                    if y.is_zero() {
                        continue;
                    }
                    acc = acc + x.clone() * y.clone();
                }
                data.push(acc);
            }
        }
        Ok(Tensor {
            legs: a_free.iter().chain(&b_free).map(|x| x.0).collect(),
            dims: out_dims,
            data,
        })
    }

    /// Reorders the legs to `order` (a permutation of the current legs).
    pub fn permute(&self, order: &[usize]) -> Result<Tensor<S>> {
        let st = strides(&self.dims);
        let mut picked = Vec::with_capacity(order.len());
        for leg in order {
            let k = self
                .legs
                .iter()
                .position(|l| l == leg)
                .ok_or_else(|| Error::Invalid(format!("unknown leg {leg}")))?;
            picked.push((self.dims[k], st[k]));
        }
        if picked.len() != self.legs.len() {
            return Err(Error::Invalid("permutation drops legs".into()));
        }
        let data = offsets(&picked)
            .into_iter()
            .map(|o| self.data[o].clone())
            .collect();
        Ok(Tensor {
            legs: order.to_vec(),
            dims: picked.iter().map(|p| p.0).collect(),
            data,
        })
    }
}

/// All linear offsets for a row-major walk over `(dim, stride)` pairs.
fn offsets(axes: &[(usize, usize)]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &(dim, stride) in axes {
        let mut next = Vec::with_capacity(out.len() * dim);
        for base in &out {
            for i in 0..dim {
                next.push(base + i * stride);
            }
        }
        out = next;
    }
    out
}

/// Evaluates a diagram as a matrix from its open inputs (columns) to its open
/// outputs (rows). `dim` gives the index range of each wire type and `boxes`
/// gives each generator's matrix in the same layout.
pub fn evaluate<G, S, D, B>(diagram: &Diagram<G>, dim: D, mut boxes: B) -> Result<Matrix<S>>
where
    G: Generator,
    S: Scalar,
    D: Fn(&SystemType) -> Result<usize>,
    B: FnMut(&G) -> Result<Matrix<S>>,
{
    let wires = diagram.wires();
    let nodes = diagram.nodes();
    // leg id = wire index; passthrough wires get an extra leg for the output side
    let mut out_leg = vec![usize::MAX; diagram.outputs().len()];
    let mut in_leg = vec![usize::MAX; diagram.inputs().len()];
    let mut node_in_legs: Vec<Vec<usize>> = nodes.iter().map(|n| vec![0; n.gen.inputs().len()]).collect();
    let mut node_out_legs: Vec<Vec<usize>> = nodes.iter().map(|n| vec![0; n.gen.outputs().len()]).collect();
    let mut next_leg = wires.len();
    let mut deltas = Vec::new();
    for (w, wire) in wires.iter().enumerate() {
        match wire.from {
            Source::Input(i) => in_leg[i] = w,
            Source::Port { node, port } => node_out_legs[node][port] = w,
        }
        match wire.to {
            Sink::Output(j) => {
                if matches!(wire.from, Source::Input(_)) {
                    out_leg[j] = next_leg;
                    deltas.push((next_leg, w, dim(&diagram.outputs()[j])?));
                    next_leg += 1;
                } else {
                    out_leg[j] = w;
                }
            }
            Sink::Port { node, port } => node_in_legs[node][port] = w,
        }
    }

    let mut acc = Tensor::scalar(S::one());
    for (a, b, n) in deltas {
        let id = Matrix::<S>::identity(n);
        acc = acc.contract(&Tensor {
            legs: vec![a, b],
            dims: vec![n, n],
            data: id.data,
        })?;
    }
    for idx in diagram.topological_order()? {
        let node = &nodes[idx];
        let m = boxes(&node.gen)?;
        let out_types = node.gen.outputs();
        let in_types = node.gen.inputs();
        let mut dims = Vec::with_capacity(out_types.len() + in_types.len());
        for t in out_types.iter().chain(&in_types) {
            dims.push(dim(t)?);
        }
        let rows: usize = dims[..out_types.len()].iter().product();
        let cols: usize = dims[out_types.len()..].iter().product();
        if m.rows != rows || m.cols != cols {
            return Err(Error::DimensionMismatch(format!(
                "box `{}` matrix is {}x{}, ports need {}x{}",
                node.gen.label(),
                m.rows,
                m.cols,
                rows,
                cols
            )));
        }
        let legs: Vec<usize> = node_out_legs[idx]
            .iter()
            .chain(&node_in_legs[idx])
            .copied()
            .collect();
        acc = acc.contract(&Tensor {
            legs,
            dims,
            data: m.data,
        })?;
    }
    let order: Vec<usize> = out_leg.iter().chain(&in_leg).copied().collect();
    let t = acc.permute(&order)?;
    let rows: usize = t.dims[..out_leg.len()].iter().product();
    let cols: usize = t.dims[out_leg.len()..].iter().product();
    Ok(Matrix {
        rows,
        cols,
        data: t.data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn kron_is_row_major() {
        let a = Matrix::from_rows(vec![vec![qi(1), qi(2)]]).unwrap();
        let b = Matrix::from_rows(vec![vec![qi(1)], vec![qi(10)]]).unwrap();
        let k = a.kron(&b);
        assert_eq!((k.rows, k.cols), (2, 2));
        assert_eq!(k.data, vec![qi(1), qi(2), qi(10), qi(20)]);
    }

    #[test]
    fn contraction_matches_matmul() {
        let a = Matrix::from_rows(vec![vec![qi(1), qi(2)], vec![qi(3), qi(4)]]).unwrap();
        let b = Matrix::from_rows(vec![vec![qi(5), qi(6)], vec![qi(7), qi(8)]]).unwrap();
        // a: legs (i, k), b: legs (k, j)
        let ta = Tensor { legs: vec![0, 1], dims: vec![2, 2], data: a.data.clone() };
        let tb = Tensor { legs: vec![1, 2], dims: vec![2, 2], data: b.data.clone() };
        let c = ta.contract(&tb).unwrap();
        assert_eq!(c.legs, vec![0, 2]);
        assert_eq!(c.data, a.matmul(&b).unwrap().data);
    }

    #[test]
    fn permute_transposes() {
        let t = Tensor { legs: vec![0, 1], dims: vec![2, 3], data: (0..6).map(qi).collect() };
        let p = t.permute(&[1, 0]).unwrap();
        assert_eq!(p.data, vec![qi(0), qi(3), qi(1), qi(4), qi(2), qi(5)]);
    }
}
