//! Operational theories: diagrams over declared laboratory procedures, whose
//! statistics come from a pluggable prediction map (classical stochastic maps
//! or quantum Kraus lists).

pub mod quantum;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::diagrams::{Diagram, DiagramBuilder, Generator, Source};
use crate::error::{Error, Result};
use crate::rational::{to_f64, Q};
use crate::substoch::{KnowledgeState, Proposition, SubstochMap};
use crate::tensor::{evaluate, Matrix};
use crate::types::{Carrier, SystemType};
use quantum::QuantumProcess;

/// Entrywise tolerance for operational equivalence on the quantum backend.
pub const EQUIV_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureDecl {
    pub name: String,
    pub inputs: Vec<SystemType>,
    pub outputs: Vec<SystemType>,
}

/// A declared list of procedures sharing one causal signature; knowledge
/// states range over this list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcSet {
    pub inputs: Vec<SystemType>,
    pub outputs: Vec<SystemType>,
    pub procedures: Vec<String>,
}

impl ProcSet {
    pub fn new(inputs: Vec<SystemType>, outputs: Vec<SystemType>, procedures: Vec<String>) -> Result<Self> {
        if procedures.is_empty() {
            return Err(Error::ConfigError("empty procedure list".into()));
        }
        let unique: BTreeSet<&String> = procedures.iter().collect();
        if unique.len() != procedures.len() {
            return Err(Error::ConfigError("duplicate procedure name".into()));
        }
        if let Some(t) = inputs.iter().chain(&outputs).find(|t| !t.is_causal()) {
            return Err(Error::TypeMismatch(format!("procedure port {t} is not causal")));
        }
        Ok(ProcSet {
            inputs,
            outputs,
            procedures,
        })
    }

    /// Groups declarations that share a signature.
    pub fn from_decls(decls: &[&ProcedureDecl]) -> Result<Self> {
        let first = decls.first().ok_or_else(|| Error::ConfigError("empty procedure list".into()))?;
        for d in decls {
            if d.inputs != first.inputs || d.outputs != first.outputs {
                return Err(Error::SignatureMismatch(format!(
                    "procedure `{}` does not share the signature of `{}`",
                    d.name, first.name
                )));
            }
        }
        ProcSet::new(
            first.inputs.clone(),
            first.outputs.clone(),
            decls.iter().map(|d| d.name.clone()).collect(),
        )
    }

    /// The carrier of knowledge about which procedure is run.
    pub fn carrier(&self) -> Carrier {
        Carrier::finite(self.procedures.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpGen {
    Knowledge(ProcSet),
    /// Only for classical systems.
    PropGain(SystemType),
    Ignore(SystemType),
    Embedded {
        name: String,
        inputs: Vec<Carrier>,
        outputs: Vec<Carrier>,
        map: SubstochMap,
    },
}

impl OpGen {
    pub fn prop_gain(t: SystemType) -> Result<Self> {
        check_classical(&t)?;
        Ok(OpGen::PropGain(t))
    }

    pub fn embedded(name: impl Into<String>, map: SubstochMap) -> Self {
        let inputs = if map.dom().is_unit() { vec![] } else { map.dom().factors() };
        let outputs = if map.cod().is_unit() { vec![] } else { map.cod().factors() };
        OpGen::Embedded {
            name: name.into(),
            inputs,
            outputs,
            map,
        }
    }
}

fn check_classical(t: &SystemType) -> Result<()> {
    if !t.is_causal() {
        return Err(Error::TypeMismatch(format!("{t} is not a causal system")));
    }
    if !t.classical || t.carrier.is_abstract() {
        return Err(Error::PropositionOnNonclassical(t.to_string()));
    }
    Ok(())
}

impl Generator for OpGen {
    fn label(&self) -> String {
        match self {
            OpGen::Knowledge(_) => "know".into(),
            OpGen::PropGain(_) => "gain".into(),
            OpGen::Ignore(_) => "ignore".into(),
            OpGen::Embedded { name, .. } => format!("emb:{name}"),
        }
    }

    fn inputs(&self) -> Vec<SystemType> {
        match self {
            OpGen::Knowledge(ps) => std::iter::once(SystemType::inferential(ps.carrier()))
                .chain(ps.inputs.iter().cloned())
                .collect(),
            OpGen::PropGain(t) | OpGen::Ignore(t) => vec![t.clone()],
            OpGen::Embedded { inputs, .. } => inputs.iter().cloned().map(SystemType::inferential).collect(),
        }
    }

    fn outputs(&self) -> Vec<SystemType> {
        match self {
            OpGen::Knowledge(ps) => ps.outputs.clone(),
            OpGen::PropGain(t) => vec![t.clone(), SystemType::inferential(t.carrier.clone())],
            OpGen::Ignore(_) => Vec::new(),
            OpGen::Embedded { outputs, .. } => outputs.iter().cloned().map(SystemType::inferential).collect(),
        }
    }
}

pub type OpDiagram = Diagram<OpGen>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassicalModel {
    pub procedures: BTreeMap<String, SubstochMap>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuantumModel {
    pub procedures: BTreeMap<String, QuantumProcess>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictionMap {
    Classical(ClassicalModel),
    Quantum(QuantumModel),
}

/// A float-valued map between finite carriers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub dom: Carrier,
    pub cod: Carrier,
    pub matrix: Matrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Exact(SubstochMap),
    Approx(FloatMap),
}

impl Prediction {
    pub fn dom(&self) -> &Carrier {
        match self {
            Prediction::Exact(s) => s.dom(),
            Prediction::Approx(f) => &f.dom,
        }
    }

    pub fn cod(&self) -> &Carrier {
        match self {
            Prediction::Exact(s) => s.cod(),
            Prediction::Approx(f) => &f.cod,
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        match self {
            Prediction::Exact(s) => s.matrix().map(to_f64),
            Prediction::Approx(f) => f.matrix.clone(),
        }
    }

    pub fn exact(&self) -> Option<&SubstochMap> {
        match self {
            Prediction::Exact(s) => Some(s),
            Prediction::Approx(_) => None,
        }
    }

    /// Exact equality when both sides are exact, otherwise entrywise within `tol`.
    pub fn approx_eq(&self, other: &Prediction, tol: f64) -> bool {
        if let (Prediction::Exact(a), Prediction::Exact(b)) = (self, other) {
            return a == b;
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        a.rows == b.rows && a.cols == b.cols && a.data.iter().zip(&b.data).all(|(x, y)| (x - y).abs() <= tol)
    }
}

fn quantum_dim(t: &SystemType) -> Result<usize> {
    match &t.carrier {
        Carrier::Abstract { dim: Some(d), .. } => Ok(*d),
        Carrier::Abstract { name, dim: None } => Err(Error::ConfigError(format!(
            "system `{name}` has no quantum dimension"
        ))),
        other => other.size(),
    }
}

fn closed(d: &OpDiagram) -> Result<()> {
    if let Some(t) = d.inputs().iter().chain(d.outputs()).find(|t| t.is_causal()) {
        return Err(Error::NotCausallyClosed(format!("open causal port of type {t}")));
    }
    for n in d.nodes() {
        if let OpGen::PropGain(t) = &n.gen {
            check_classical(t)?;
        }
    }
    Ok(())
}

fn carriers(types: &[SystemType]) -> Carrier {
    Carrier::product(types.iter().map(|t| t.carrier.clone()))
}

impl ClassicalModel {
    fn lookup(&self, name: &str) -> Result<&SubstochMap> {
        self.procedures
            .get(name)
            .ok_or_else(|| Error::UnresolvedProcedure(name.to_string()))
    }

    fn matrix(&self, g: &OpGen) -> Result<Matrix<Q>> {
        match g {
            OpGen::Knowledge(ps) => {
                let din = carriers(&ps.inputs).size()?;
                let dout = carriers(&ps.outputs).size()?;
                let mut m = Matrix::zeros(dout, din * ps.procedures.len());
                for (p, name) in ps.procedures.iter().enumerate() {
                    let s = self.lookup(name)?;
                    if s.matrix().rows != dout || s.matrix().cols != din {
                        return Err(Error::DimensionMismatch(format!(
                            "procedure `{name}` is {}x{}, ports need {dout}x{din}",
                            s.matrix().rows,
                            s.matrix().cols
                        )));
                    }
                    for r in 0..dout {
                        for c in 0..din {
                            m.set(r, p * din + c, s.entry(r, c).clone());
                        }
                    }
                }
                Ok(m)
            }
            OpGen::PropGain(t) => crate::fstheory::generator_matrix(&crate::fstheory::FsGen::gain(t.carrier.clone())),
            OpGen::Ignore(t) => crate::fstheory::generator_matrix(&crate::fstheory::FsGen::ignore(t.carrier.clone())),
            OpGen::Embedded { map, .. } => Ok(map.matrix().clone()),
        }
    }
}

impl QuantumModel {
    fn matrix(&self, g: &OpGen) -> Result<Matrix<Complex64>> {
        match g {
            OpGen::Knowledge(ps) => {
                let in_dims = ps.inputs.iter().map(quantum_dim).collect::<Result<Vec<_>>>()?;
                let out_dims = ps.outputs.iter().map(quantum_dim).collect::<Result<Vec<_>>>()?;
                let blocks = ps
                    .procedures
                    .iter()
                    .map(|name| {
                        self.procedures
                            .get(name)
                            .ok_or_else(|| Error::UnresolvedProcedure(name.clone()))?
                            .liouville(&in_dims, &out_dims)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (rows, cols) = (blocks[0].rows, blocks[0].cols);
                let mut m = Matrix::zeros(rows, cols * blocks.len());
                for (p, b) in blocks.iter().enumerate() {
                    for r in 0..rows {
                        for c in 0..cols {
                            m.set(r, p * cols + c, *b.get(r, c));
                        }
                    }
                }
                Ok(m)
            }
            OpGen::PropGain(t) => {
                let n = quantum_dim(t)?;
                let mut m = Matrix::zeros(n * n * n, n * n);
                for k in 0..n {
                    m.set((k * n + k) * n + k, k * n + k, Complex64::new(1.0, 0.0));
                }
                Ok(m)
            }
            OpGen::Ignore(t) => {
                let d = quantum_dim(t)?;
                let mut m = Matrix::zeros(1, d * d);
                for k in 0..d {
                    m.set(0, k * d + k, Complex64::new(1.0, 0.0));
                }
                Ok(m)
            }
            OpGen::Embedded { map, .. } => Ok(map.matrix().map(|v| Complex64::new(to_f64(v), 0.0))),
        }
    }
}

/// Predictions of a causally closed diagram.
pub fn predict_closed(d: &OpDiagram, p: &PredictionMap) -> Result<Prediction> {
    closed(d)?;
    let (dom, cod) = (carriers(d.inputs()), carriers(d.outputs()));
    match p {
        PredictionMap::Classical(model) => {
            let m = evaluate(d, |t| t.carrier.size(), |g| model.matrix(g))?;
            Ok(Prediction::Exact(SubstochMap::new(dom, cod, m)?))
        }
        PredictionMap::Quantum(model) => {
            let dim = |t: &SystemType| -> Result<usize> {
                if t.is_causal() {
                    let d = quantum_dim(t)?;
                    Ok(d * d)
                } else {
                    t.carrier.size()
                }
            };
            let m = evaluate(d, dim, |g| model.matrix(g))?;
            Ok(Prediction::Approx(FloatMap {
                dom,
                cod,
                matrix: m.map(|z| z.re),
            }))
        }
    }
}

pub fn op_equivalent(d1: &OpDiagram, d2: &OpDiagram, p: &PredictionMap) -> Result<bool> {
    if d1.inputs() != d2.inputs() || d1.outputs() != d2.outputs() {
        return Err(Error::SignatureMismatch(
            "equivalence needs identical open-port signatures".into(),
        ));
    }
    Ok(predict_closed(d1, p)?.approx_eq(&predict_closed(d2, p)?, EQUIV_TOL))
}

/// The class representative in the image of the embedding of SubStoch.
pub fn quotient_representative(d: &OpDiagram, p: &PredictionMap) -> Result<Prediction> {
    predict_closed(d, p)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableEntries {
    Exact(Vec<Vec<Q>>),
    Approx(Vec<Vec<f64>>),
}

/// Probabilities indexed by point input `x` and atomic output `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointAtomicTable {
    pub dom: Carrier,
    pub cod: Carrier,
    pub entries: TableEntries,
}

/// Row-major digits of `i` for ports of the given sizes.
pub(crate) fn split_index(mut i: usize, sizes: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        digits[k] = i % sizes[k].max(1);
        i /= sizes[k].max(1);
    }
    digits
}

/// Plugs every point distribution into the inputs and every atomic
/// proposition onto the outputs, one closed diagram per table entry.
pub fn point_atomic_table(d: &OpDiagram, p: &PredictionMap) -> Result<PointAtomicTable> {
    closed(d)?;
    let (dom, cod) = (carriers(d.inputs()), carriers(d.outputs()));
    let (n, m) = (dom.size()?, cod.size()?);
    let in_sizes = d.inputs().iter().map(|t| t.carrier.size()).collect::<Result<Vec<_>>>()?;
    let out_sizes = d.outputs().iter().map(|t| t.carrier.size()).collect::<Result<Vec<_>>>()?;
    let mut exact = Vec::with_capacity(n);
    let mut approx = Vec::with_capacity(n);
    for x in 0..n {
        let xs = split_index(x, &in_sizes);
        let (mut erow, mut arow) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for y in 0..m {
            let ys = split_index(y, &out_sizes);
            let mut b = DiagramBuilder::new();
            let mut feeds: Vec<Source> = Vec::with_capacity(xs.len());
            for (i, (t, &xi)) in d.inputs().iter().zip(&xs).enumerate() {
                let point = KnowledgeState::point(t.carrier.clone(), xi)?.to_map();
                feeds.push(b.add(format!("point{i}"), OpGen::embedded("point", point), &[])[0]);
            }
            let outs = b.splice(d, &feeds)?;
            for (j, (t, &yj)) in d.outputs().iter().zip(&ys).enumerate() {
                let atom = Proposition::atom(t.carrier.clone(), yj)?.effect();
                b.add(format!("atom{j}"), OpGen::embedded("atom", atom), &[outs[j]]);
            }
            match predict_closed(&b.finish(&[])?, p)? {
                Prediction::Exact(s) => erow.push(s.entry(0, 0).clone()),
                Prediction::Approx(f) => arow.push(*f.matrix.get(0, 0)),
            }
        }
        exact.push(erow);
        approx.push(arow);
    }
    let entries = match p {
        PredictionMap::Classical(_) => TableEntries::Exact(exact),
        PredictionMap::Quantum(_) => TableEntries::Approx(approx),
    };
    Ok(PointAtomicTable { dom, cod, entries })
}

pub fn reconstruct(table: &PointAtomicTable) -> Result<Prediction> {
    let (n, m) = (table.dom.size()?, table.cod.size()?);
    match &table.entries {
        TableEntries::Exact(rows) => {
            let mut mat = Matrix::zeros(m, n);
            for (x, row) in rows.iter().enumerate() {
                for (y, v) in row.iter().enumerate() {
                    mat.set(y, x, v.clone());
                }
            }
            Ok(Prediction::Exact(SubstochMap::new(table.dom.clone(), table.cod.clone(), mat)?))
        }
        TableEntries::Approx(rows) => {
            let mut mat = Matrix::zeros(m, n);
            for (x, row) in rows.iter().enumerate() {
                for (y, v) in row.iter().enumerate() {
                    mat.set(y, x, *v);
                }
            }
            Ok(Prediction::Approx(FloatMap {
                dom: table.dom.clone(),
                cod: table.cod.clone(),
                matrix: mat,
            }))
        }
    }
}

/// A quantum system of dimension `d`.
pub fn qudit(name: &str, d: usize) -> SystemType {
    SystemType::causal(Carrier::Abstract {
        name: name.to_string(),
        dim: Some(d),
    })
}
