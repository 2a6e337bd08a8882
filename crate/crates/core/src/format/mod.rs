//! File formats. Every file starts with the header line `ci-engine/1` and
//! names its `kind`; the body is a tree of maps, lists and text atoms.
//! Rationals are written `p/q`, complex numbers `[re, im]`.
//!
//! Carriers: an integer `n` is `{0, .., n-1}`, a list is a set of labels,
//! `unit` is the trivial system, and `{hom: [A, B]}`, `{product: [..]}`,
//! `{system: name, dim: d}` build the rest. Any other atom refers to an entry
//! of the optional `carriers` map.

pub mod tree;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::diagrams::{Diagram, Generator, Node, Sink, Source, Wire};
use crate::error::Result;
use crate::fstheory::{FsDiagram, FsGen, RealistRep};
use crate::nogo::{Correlation, GPTFragment, Scenario, Table};
use crate::optheory::quantum::{CMatrix, QuantumProcess};
use crate::optheory::{ClassicalModel, OpDiagram, OpGen, PredictionMap, ProcSet, QuantumModel};
use crate::rational::{self, Q};
use crate::substoch::SubstochMap;
use crate::tensor::Matrix;
use crate::types::{Carrier, Kind as WireKind, SystemType};
pub use tree::{parse as parse_tree, serialize as serialize_tree, Kind, Value, HEADER};

type Entries = Vec<(String, Value)>;

fn text(s: impl Into<String>) -> Value {
    Value::text(s)
}

fn entry(k: &str, v: Value) -> (String, Value) {
    (k.to_string(), v)
}

/// Parses a document and checks its `kind`.
pub fn parse_kind(src: &str, expected: &str) -> Result<Value> {
    let doc = parse_tree(src)?;
    let kind = doc.get("kind")?;
    if kind.as_text()? != expected {
        return Err(kind.error(format!("expected a `{expected}` file, found `{}`", kind.as_text()?)));
    }
    Ok(doc)
}

/// The `kind` of a document, for dispatch.
pub fn file_kind(src: &str) -> Result<String> {
    Ok(parse_tree(src)?.get("kind")?.as_text()?.to_string())
}

// ---- scalars ------------------------------------------------------------

pub fn parse_q(v: &Value) -> Result<Q> {
    let s = v.as_text()?;
    rational::parse(s).map_err(|_| v.error(format!("`{s}` is not a rational")))
}

fn is_float_literal(s: &str) -> bool {
    !s.contains('/') && s.contains(['.', 'e', 'E'])
}

pub fn parse_f64(v: &Value) -> Result<f64> {
    let s = v.as_text()?;
    if is_float_literal(s) {
        let x: f64 = s.parse().map_err(|_| v.error(format!("`{s}` is not a number")))?;
        if !x.is_finite() {
            return Err(v.error("number must be finite"));
        }
        Ok(x)
    } else {
        Ok(rational::to_f64(&parse_q(v)?))
    }
}

fn has_float(v: &Value) -> bool {
    match &v.kind {
        Kind::Text(s) => is_float_literal(s),
        Kind::List(items) => items.iter().any(has_float),
        Kind::Map(entries) => entries.iter().any(|(_, v)| has_float(v)),
    }
}

fn q_list(v: &Value) -> Result<Vec<Q>> {
    v.as_list()?.iter().map(parse_q).collect()
}

fn f64_list(v: &Value) -> Result<Vec<f64>> {
    v.as_list()?.iter().map(parse_f64).collect()
}

fn write_q(x: &Q) -> Value {
    text(rational::format(x))
}

fn write_f64(x: f64) -> Value {
    // no negative zeros in files
    text(format!("{:?}", x + 0.0))
}

fn q_row(xs: &[Q]) -> Value {
    Value::list(xs.iter().map(write_q).collect())
}

fn usize_value(n: usize) -> Value {
    text(n.to_string())
}

fn names(v: &Value) -> Result<Vec<String>> {
    v.as_list()?.iter().map(|x| Ok(x.as_text()?.to_string())).collect()
}

// ---- carriers and types -------------------------------------------------

#[derive(Default)]
struct Ctx {
    carriers: BTreeMap<String, Carrier>,
}

impl Ctx {
    fn from_doc(doc: &Value) -> Result<Self> {
        let mut ctx = Ctx::default();
        if let Some(c) = doc.opt("carriers")? {
            for (name, v) in c.as_map()? {
                let parsed = ctx.carrier(v)?;
                if ctx.carriers.insert(name.clone(), parsed).is_some() {
                    return Err(v.error(format!("carrier `{name}` defined twice")));
                }
            }
        }
        Ok(ctx)
    }

    fn carrier(&self, v: &Value) -> Result<Carrier> {
        match &v.kind {
            Kind::Text(s) if s == "unit" => Ok(Carrier::unit()),
            Kind::Text(s) => {
                if let Ok(n) = s.parse::<usize>() {
                    if n == 0 {
                        return Err(v.error("a carrier needs at least one element"));
                    }
                    return Ok(Carrier::range(n));
                }
                self.carriers
                    .get(s)
                    .cloned()
                    .ok_or_else(|| v.error(format!("unknown carrier `{s}`")))
            }
            Kind::List(items) => {
                let labels = items.iter().map(|x| Ok(x.as_text()?.to_string())).collect::<Result<Vec<_>>>()?;
                let unique: BTreeSet<&String> = labels.iter().collect();
                if labels.is_empty() || unique.len() != labels.len() {
                    return Err(v.error("labels must be distinct and non-empty"));
                }
                Ok(Carrier::Finite(labels))
            }
            Kind::Map(entries) => {
                if let Some(h) = v.opt("hom")? {
                    let parts = h.as_list()?;
                    if parts.len() != 2 || entries.len() != 1 {
                        return Err(h.error("`hom` takes exactly [domain, codomain]"));
                    }
                    return Ok(Carrier::hom(self.carrier(&parts[0])?, self.carrier(&parts[1])?));
                }
                if let Some(p) = v.opt("product")? {
                    v.only_keys(&["product"])?;
                    let fs = p.as_list()?.iter().map(|x| self.carrier(x)).collect::<Result<Vec<_>>>()?;
                    return Ok(Carrier::Product(fs));
                }
                if let Some(n) = v.opt("system")? {
                    v.only_keys(&["system", "dim"])?;
                    let dim = v.opt("dim")?.map(Value::as_usize).transpose()?;
                    if dim == Some(0) {
                        return Err(v.error("dimension must be positive"));
                    }
                    return Ok(Carrier::Abstract {
                        name: n.as_text()?.to_string(),
                        dim,
                    });
                }
                Err(v.error("expected `hom`, `product` or `system`"))
            }
        }
    }

    fn carriers(&self, v: &Value) -> Result<Vec<Carrier>> {
        v.as_list()?.iter().map(|x| self.carrier(x)).collect()
    }

    fn system_type(&self, v: &Value) -> Result<SystemType> {
        let entries = v.as_map()?;
        if entries.len() != 1 {
            return Err(v.error("a type is one of {causal: C}, {classical: C}, {inferential: C}"));
        }
        let (k, c) = &entries[0];
        let carrier = self.carrier(c)?;
        let t = match k.as_str() {
            "causal" => SystemType::causal(carrier),
            "classical" => SystemType::classical(carrier),
            "inferential" => SystemType::inferential(carrier),
            other => return Err(v.error(format!("unknown wire kind `{other}`"))),
        };
        t.validate().map_err(|e| v.error(e.to_string()))?;
        Ok(t)
    }

    fn types(&self, v: &Value) -> Result<Vec<SystemType>> {
        v.as_list()?.iter().map(|x| self.system_type(x)).collect()
    }

    fn map(&self, v: &Value) -> Result<SubstochMap> {
        v.only_keys(&["dom", "cod", "matrix"])?;
        let dom = self.carrier(v.get("dom")?)?;
        let cod = self.carrier(v.get("cod")?)?;
        let m = v.get("matrix")?;
        let rows = m.as_list()?.iter().map(q_list).collect::<Result<Vec<_>>>()?;
        let matrix = Matrix::from_rows(rows).map_err(|e| m.error(e.to_string()))?;
        SubstochMap::new(dom, cod, matrix).map_err(|e| m.error(e.to_string()))
    }
}

pub fn write_carrier(c: &Carrier) -> Value {
    match c {
        Carrier::Product(fs) if fs.is_empty() => text("unit"),
        Carrier::Finite(labels) if labels.iter().enumerate().all(|(i, l)| *l == i.to_string()) => {
            usize_value(labels.len())
        }
        Carrier::Finite(labels) => Value::list(labels.iter().map(|l| text(l.clone())).collect()),
        Carrier::Hom(d, c) => Value::map(vec![entry("hom", Value::list(vec![write_carrier(d), write_carrier(c)]))]),
        Carrier::Product(fs) => Value::map(vec![entry("product", Value::list(fs.iter().map(write_carrier).collect()))]),
        Carrier::Abstract { name, dim } => {
            let mut e = vec![entry("system", text(name.clone()))];
            if let Some(d) = dim {
                e.push(entry("dim", usize_value(*d)));
            }
            Value::map(e)
        }
    }
}

fn write_carriers(cs: &[Carrier]) -> Value {
    Value::list(cs.iter().map(write_carrier).collect())
}

pub fn write_type(t: &SystemType) -> Value {
    let k = match (t.kind, t.classical) {
        (WireKind::Inferential, _) => "inferential",
        (WireKind::Causal, true) => "classical",
        (WireKind::Causal, false) => "causal",
    };
    Value::map(vec![entry(k, write_carrier(&t.carrier))])
}

fn write_types(ts: &[SystemType]) -> Value {
    Value::list(ts.iter().map(write_type).collect())
}

fn write_map(m: &SubstochMap) -> Value {
    let rows = (0..m.matrix().rows).map(|r| q_row(&m.matrix().row_vec(r))).collect();
    Value::map(vec![
        entry("dom", write_carrier(m.dom())),
        entry("cod", write_carrier(m.cod())),
        entry("matrix", Value::list(rows)),
    ])
}

// ---- diagrams -----------------------------------------------------------

#[derive(Debug, Clone)]
pub enum AnyDiagram {
    Fs(FsDiagram),
    Op(OpDiagram),
}

/// A diagram with the names of its open ports.
#[derive(Debug, Clone)]
pub struct DiagramFile {
    pub diagram: AnyDiagram,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
}

impl DiagramFile {
    pub fn fs(d: FsDiagram) -> Self {
        let (i, o) = default_names(d.inputs().len(), d.outputs().len());
        DiagramFile {
            diagram: AnyDiagram::Fs(d),
            input_names: i,
            output_names: o,
        }
    }

    pub fn op(d: OpDiagram) -> Self {
        let (i, o) = default_names(d.inputs().len(), d.outputs().len());
        DiagramFile {
            diagram: AnyDiagram::Op(d),
            input_names: i,
            output_names: o,
        }
    }

    pub fn box_count(&self) -> usize {
        match &self.diagram {
            AnyDiagram::Fs(d) => d.nodes().len(),
            AnyDiagram::Op(d) => d.nodes().len(),
        }
    }
}

fn default_names(n: usize, m: usize) -> (Vec<String>, Vec<String>) {
    ((0..n).map(|i| format!("in{i}")).collect(), (0..m).map(|j| format!("out{j}")).collect())
}

trait GenFormat: Generator + Sized {
    const THEORY: &'static str;
    fn parse_gen(ctx: &Ctx, v: &Value) -> Result<Self>;
    fn write_gen(&self, e: &mut Entries);
}

fn embedded_parts(ctx: &Ctx, v: &Value) -> Result<(String, Vec<Carrier>, Vec<Carrier>, SubstochMap)> {
    v.only_keys(&["id", "gen", "name", "inputs", "outputs", "map"])?;
    let name = v.get("name")?.as_text()?.to_string();
    let ins = ctx.carriers(v.get("inputs")?)?;
    let outs = ctx.carriers(v.get("outputs")?)?;
    let map = ctx.map(v.get("map")?)?;
    Ok((name, ins, outs, map))
}

fn write_embedded(e: &mut Entries, name: &str, ins: &[Carrier], outs: &[Carrier], map: &SubstochMap) {
    e.push(entry("gen", text("embedded")));
    e.push(entry("name", text(name)));
    e.push(entry("inputs", write_carriers(ins)));
    e.push(entry("outputs", write_carriers(outs)));
    e.push(entry("map", write_map(map)));
}

impl GenFormat for FsGen {
    const THEORY: &'static str = "fs";

    fn parse_gen(ctx: &Ctx, v: &Value) -> Result<Self> {
        let g = v.get("gen")?;
        match g.as_text()? {
            "knowledge" => {
                v.only_keys(&["id", "gen", "dom", "cod"])?;
                Ok(FsGen::knowledge(ctx.carriers(v.get("dom")?)?, ctx.carriers(v.get("cod")?)?))
            }
            "gain" => {
                v.only_keys(&["id", "gen", "carriers"])?;
                Ok(FsGen::PropGain(ctx.carriers(v.get("carriers")?)?))
            }
            "ignore" => {
                v.only_keys(&["id", "gen", "carriers"])?;
                Ok(FsGen::Ignore(ctx.carriers(v.get("carriers")?)?))
            }
            "embedded" => {
                let (name, ins, outs, map) = embedded_parts(ctx, v)?;
                FsGen::embedded_ports(name, ins, outs, map).map_err(|e| v.error(e.to_string()))
            }
            other => Err(g.error(format!("unknown generator `{other}`"))),
        }
    }

    fn write_gen(&self, e: &mut Entries) {
        match self {
            FsGen::Knowledge { dom, cod } => {
                e.push(entry("gen", text("knowledge")));
                e.push(entry("dom", write_carriers(dom)));
                e.push(entry("cod", write_carriers(cod)));
            }
            FsGen::PropGain(cs) => {
                e.push(entry("gen", text("gain")));
                e.push(entry("carriers", write_carriers(cs)));
            }
            FsGen::Ignore(cs) => {
                e.push(entry("gen", text("ignore")));
                e.push(entry("carriers", write_carriers(cs)));
            }
            FsGen::Embedded {
                name,
                inputs,
                outputs,
                map,
            } => write_embedded(e, name, inputs, outputs, map),
        }
    }
}

impl GenFormat for OpGen {
    const THEORY: &'static str = "op";

    fn parse_gen(ctx: &Ctx, v: &Value) -> Result<Self> {
        let g = v.get("gen")?;
        let located = |r: Result<OpGen>| r.map_err(|e| v.error(e.to_string()));
        match g.as_text()? {
            "knowledge" => {
                v.only_keys(&["id", "gen", "inputs", "outputs", "procedures"])?;
                located(
                    ProcSet::new(ctx.types(v.get("inputs")?)?, ctx.types(v.get("outputs")?)?, names(v.get("procedures")?)?)
                        .map(OpGen::Knowledge),
                )
            }
            "gain" => {
                v.only_keys(&["id", "gen", "system"])?;
                located(OpGen::prop_gain(ctx.system_type(v.get("system")?)?))
            }
            "ignore" => {
                v.only_keys(&["id", "gen", "system"])?;
                let t = ctx.system_type(v.get("system")?)?;
                if !t.is_causal() {
                    return Err(v.error("only causal systems can be ignored"));
                }
                Ok(OpGen::Ignore(t))
            }
            "embedded" => {
                let (name, inputs, outputs, map) = embedded_parts(ctx, v)?;
                // same size check as the F-S side
                FsGen::embedded_ports(name.clone(), inputs.clone(), outputs.clone(), map.clone())
                    .map_err(|e| v.error(e.to_string()))?;
                Ok(OpGen::Embedded {
                    name,
                    inputs,
                    outputs,
                    map,
                })
            }
            other => Err(g.error(format!("unknown generator `{other}`"))),
        }
    }

    fn write_gen(&self, e: &mut Entries) {
        match self {
            OpGen::Knowledge(ps) => {
                e.push(entry("gen", text("knowledge")));
                e.push(entry("inputs", write_types(&ps.inputs)));
                e.push(entry("outputs", write_types(&ps.outputs)));
                e.push(entry("procedures", Value::list(ps.procedures.iter().map(|p| text(p.clone())).collect())));
            }
            OpGen::PropGain(t) => {
                e.push(entry("gen", text("gain")));
                e.push(entry("system", write_type(t)));
            }
            OpGen::Ignore(t) => {
                e.push(entry("gen", text("ignore")));
                e.push(entry("system", write_type(t)));
            }
            OpGen::Embedded {
                name,
                inputs,
                outputs,
                map,
            } => write_embedded(e, name, inputs, outputs, map),
        }
    }
}

struct Endpoints<'a> {
    boxes: &'a BTreeMap<String, usize>,
    inputs: &'a BTreeMap<String, usize>,
}

impl Endpoints<'_> {
    fn boxed(&self, s: &str) -> Option<(usize, usize)> {
        let (b, p) = s.rsplit_once('.')?;
        Some((*self.boxes.get(b)?, p.parse().ok()?))
    }

    fn source(&self, s: &str, at: &Value) -> Result<Source> {
        if let Some((node, port)) = self.boxed(s) {
            return Ok(Source::Port { node, port });
        }
        self.inputs
            .get(s)
            .map(|&i| Source::Input(i))
            .ok_or_else(|| at.error(format!("unknown source `{s}`")))
    }

    fn sink(&self, s: &str, at: &Value) -> Result<Sink> {
        self.boxed(s)
            .map(|(node, port)| Sink::Port { node, port })
            .ok_or_else(|| at.error(format!("unknown sink `{s}`, expected `box.port`")))
    }
}

fn parse_generic<G: GenFormat>(doc: &Value, ctx: &Ctx) -> Result<(Diagram<G>, Vec<String>, Vec<String>)> {
    let mut input_names = Vec::new();
    let mut inputs = Vec::new();
    let mut input_index = BTreeMap::new();
    if let Some(v) = doc.opt("inputs")? {
        for (name, t) in v.as_map()? {
            if input_index.insert(name.clone(), inputs.len()).is_some() {
                return Err(t.error(format!("duplicate input `{name}`")));
            }
            input_names.push(name.clone());
            inputs.push(ctx.system_type(t)?);
        }
    }
    let mut nodes = Vec::new();
    let mut box_index = BTreeMap::new();
    for b in doc.get("boxes")?.as_list()? {
        let idv = b.get("id")?;
        let id = idv.as_text()?.to_string();
        if input_index.contains_key(&id) {
            return Err(idv.error(format!("box id `{id}` clashes with an input name")));
        }
        if box_index.insert(id.clone(), nodes.len()).is_some() {
            return Err(idv.error(format!("duplicate box id `{id}`")));
        }
        nodes.push(Node {
            id,
            gen: G::parse_gen(ctx, b)?,
        });
    }
    let ends = Endpoints {
        boxes: &box_index,
        inputs: &input_index,
    };
    let mut wires = Vec::new();
    if let Some(ws) = doc.opt("wires")? {
        for w in ws.as_list()? {
            let s = w.as_text()?;
            let (from, to) = s
                .split_once("->")
                .ok_or_else(|| w.error(format!("wire `{s}` must read `source -> box.port`")))?;
            wires.push(Wire {
                from: ends.source(from.trim(), w)?,
                to: ends.sink(to.trim(), w)?,
            });
        }
    }
    let mut output_names = Vec::new();
    let mut outputs = Vec::new();
    if let Some(v) = doc.opt("outputs")? {
        for (name, src) in v.as_map()? {
            if output_names.contains(name) {
                return Err(src.error(format!("duplicate output `{name}`")));
            }
            let from = ends.source(src.as_text()?, src)?;
            let t = match from {
                Source::Input(i) => inputs[i].clone(),
                Source::Port { node, port } => nodes[node]
                    .gen
                    .outputs()
                    .get(port)
                    .cloned()
                    .ok_or_else(|| src.error(format!("`{}` has no output {port}", nodes[node].id)))?,
            };
            wires.push(Wire {
                from,
                to: Sink::Output(outputs.len()),
            });
            output_names.push(name.clone());
            outputs.push(t);
        }
    }
    let d = Diagram::build(nodes, wires, inputs, outputs)?;
    Ok((d, input_names, output_names))
}

pub fn parse_diagram(src: &str) -> Result<DiagramFile> {
    let doc = parse_kind(src, "diagram")?;
    doc.only_keys(&["kind", "theory", "carriers", "inputs", "boxes", "wires", "outputs"])?;
    let ctx = Ctx::from_doc(&doc)?;
    let th = doc.get("theory")?;
    match th.as_text()? {
        "fs" => {
            let (d, i, o) = parse_generic::<FsGen>(&doc, &ctx)?;
            Ok(DiagramFile {
                diagram: AnyDiagram::Fs(d),
                input_names: i,
                output_names: o,
            })
        }
        "op" => {
            let (d, i, o) = parse_generic::<OpGen>(&doc, &ctx)?;
            Ok(DiagramFile {
                diagram: AnyDiagram::Op(d),
                input_names: i,
                output_names: o,
            })
        }
        other => Err(th.error(format!("unknown theory `{other}`, expected `fs` or `op`"))),
    }
}

fn write_generic<G: GenFormat>(d: &Diagram<G>, input_names: &[String], output_names: &[String]) -> String {
    let src_name = |s: Source| match s {
        Source::Input(i) => input_names[i].clone(),
        Source::Port { node, port } => format!("{}.{port}", d.nodes()[node].id),
    };
    let mut root = vec![entry("kind", text("diagram")), entry("theory", text(G::THEORY))];
    root.push(entry(
        "inputs",
        Value::map(input_names.iter().cloned().zip(d.inputs().iter().map(write_type)).collect()),
    ));
    let boxes = d
        .nodes()
        .iter()
        .map(|n| {
            let mut e = vec![entry("id", text(n.id.clone()))];
            n.gen.write_gen(&mut e);
            Value::map(e)
        })
        .collect();
    root.push(entry("boxes", Value::list(boxes)));
    let mut feeds: BTreeMap<(usize, usize), Source> = BTreeMap::new();
    let mut outs = vec![None; d.outputs().len()];
    for w in d.wires() {
        match w.to {
            Sink::Port { node, port } => {
                feeds.insert((node, port), w.from);
            }
            Sink::Output(j) => outs[j] = Some(w.from),
        }
    }
    let wires = feeds
        .iter()
        .map(|(&(node, port), &from)| text(format!("{} -> {}.{port}", src_name(from), d.nodes()[node].id)))
        .collect();
    root.push(entry("wires", Value::list(wires)));
    root.push(entry(
        "outputs",
        Value::map(
            output_names
                .iter()
                .zip(outs)
                .map(|(n, s)| (n.clone(), text(s.map(src_name).unwrap_or_default())))
                .collect(),
        ),
    ));
    serialize_tree(&root)
}

pub fn serialize_diagram(f: &DiagramFile) -> String {
    match &f.diagram {
        AnyDiagram::Fs(d) => write_generic(d, &f.input_names, &f.output_names),
        AnyDiagram::Op(d) => write_generic(d, &f.input_names, &f.output_names),
    }
}

/// Parses and re-serializes: normalizes whitespace, comments and shorthands.
pub fn canonicalize_diagram(src: &str) -> Result<String> {
    Ok(serialize_diagram(&parse_diagram(src)?))
}

// ---- models ---------------------------------------------------------------

fn complex(v: &Value) -> Result<Complex64> {
    match &v.kind {
        Kind::Text(_) => Ok(Complex64::new(parse_f64(v)?, 0.0)),
        Kind::List(parts) if parts.len() == 2 => Ok(Complex64::new(parse_f64(&parts[0])?, parse_f64(&parts[1])?)),
        _ => Err(v.error("expected a number or [re, im]")),
    }
}

fn cmatrix(v: &Value, rows: usize, cols: usize) -> Result<CMatrix> {
    let rs = v.as_list()?;
    if rs.len() != rows {
        return Err(v.error(format!("expected {rows} rows, found {}", rs.len())));
    }
    let mut m = CMatrix::zeros(rows, cols);
    for (r, row) in rs.iter().enumerate() {
        let es = row.as_list()?;
        if es.len() != cols {
            return Err(row.error(format!("expected {cols} entries, found {}", es.len())));
        }
        for (c, e) in es.iter().enumerate() {
            m[(r, c)] = complex(e)?;
        }
    }
    Ok(m)
}

pub fn parse_model(src: &str) -> Result<PredictionMap> {
    let doc = parse_kind(src, "model")?;
    doc.only_keys(&["kind", "backend", "carriers", "procedures"])?;
    let ctx = Ctx::from_doc(&doc)?;
    let backend = doc.get("backend")?;
    let procs = doc.get("procedures")?.as_list()?;
    let mut seen = BTreeSet::new();
    let mut name_of = |p: &Value| -> Result<String> {
        let n = p.get("name")?;
        let s = n.as_text()?.to_string();
        if !seen.insert(s.clone()) {
            return Err(n.error(format!("duplicate procedure `{s}`")));
        }
        Ok(s)
    };
    match backend.as_text()? {
        "classical" => {
            let mut m = ClassicalModel::default();
            for p in procs {
                p.only_keys(&["name", "dom", "cod", "matrix"])?;
                let name = name_of(p)?;
                let map = Ctx::map(&ctx, &Value {
                    kind: Kind::Map(
                        p.as_map()?.iter().filter(|(k, _)| k != "name").cloned().collect(),
                    ),
                    line: p.line,
                    column: p.column,
                })?;
                m.procedures.insert(name, map);
            }
            Ok(PredictionMap::Classical(m))
        }
        "quantum" => {
            let mut m = QuantumModel::default();
            for p in procs {
                p.only_keys(&["name", "in", "out", "kraus"])?;
                let name = name_of(p)?;
                let (din, dout) = (p.get("in")?.as_usize()?, p.get("out")?.as_usize()?);
                if din == 0 || dout == 0 || din > 1024 || dout > 1024 {
                    return Err(p.error("dimensions must lie in 1..=1024"));
                }
                let kraus = p
                    .get("kraus")?
                    .as_list()?
                    .iter()
                    .map(|k| cmatrix(k, dout, din))
                    .collect::<Result<Vec<_>>>()?;
                let proc = QuantumProcess::new(din, dout, kraus).map_err(|e| p.error(e.to_string()))?;
                m.procedures.insert(name, proc);
            }
            Ok(PredictionMap::Quantum(m))
        }
        other => Err(backend.error(format!("unknown backend `{other}`"))),
    }
}

pub fn serialize_model(p: &PredictionMap) -> String {
    let mut root = vec![entry("kind", text("model"))];
    match p {
        PredictionMap::Classical(m) => {
            root.push(entry("backend", text("classical")));
            let procs = m
                .procedures
                .iter()
                .map(|(n, s)| {
                    let mut e = vec![entry("name", text(n.clone()))];
                    if let Kind::Map(rest) = write_map(s).kind {
                        e.extend(rest);
                    }
                    Value::map(e)
                })
                .collect();
            root.push(entry("procedures", Value::list(procs)));
        }
        PredictionMap::Quantum(m) => {
            root.push(entry("backend", text("quantum")));
            let procs = m
                .procedures
                .iter()
                .map(|(n, q)| {
                    let kraus = q
                        .kraus
                        .iter()
                        .map(|k| {
                            Value::list(
                                (0..k.nrows())
                                    .map(|r| {
                                        Value::list(
                                            (0..k.ncols())
                                                .map(|c| Value::list(vec![write_f64(k[(r, c)].re), write_f64(k[(r, c)].im)]))
                                                .collect(),
                                        )
                                    })
                                    .collect(),
                            )
                        })
                        .collect();
                    Value::map(vec![
                        entry("name", text(n.clone())),
                        entry("in", usize_value(q.in_dim)),
                        entry("out", usize_value(q.out_dim)),
                        entry("kraus", Value::list(kraus)),
                    ])
                })
                .collect();
            root.push(entry("procedures", Value::list(procs)));
        }
    }
    serialize_tree(&root)
}

// ---- fragments, correlations, representations ------------------------------

pub fn parse_fragment(src: &str) -> Result<GPTFragment> {
    let doc = parse_kind(src, "fragment")?;
    doc.only_keys(&["kind", "states", "effects", "unit", "approximate"])?;
    let (s, e, u) = (doc.get("states")?, doc.get("effects")?, doc.get("unit")?);
    let approximate = match doc.opt("approximate")? {
        Some(v) => match v.as_text()? {
            "true" => true,
            "false" => false,
            _ => return Err(v.error("expected `true` or `false`")),
        },
        None => false,
    };
    let located = |r: Result<GPTFragment>| r.map_err(|err| doc.error(err.to_string()));
    if has_float(s) || has_float(e) || has_float(u) {
        let rows = |v: &Value| v.as_list()?.iter().map(f64_list).collect::<Result<Vec<_>>>();
        return located(GPTFragment::from_f64(&rows(s)?, &rows(e)?, &f64_list(u)?));
    }
    let rows = |v: &Value| v.as_list()?.iter().map(q_list).collect::<Result<Vec<_>>>();
    let mut f = GPTFragment {
        dim: u.as_list()?.len(),
        states: rows(s)?,
        effects: rows(e)?,
        unit: q_list(u)?,
        approximate,
    };
    f.approximate = approximate;
    located(f.validate().map(|_| f))
}

pub fn serialize_fragment(f: &GPTFragment) -> String {
    let rows = |vs: &[Vec<Q>]| Value::list(vs.iter().map(|v| q_row(v)).collect());
    let mut root = vec![
        entry("kind", text("fragment")),
        entry("states", rows(&f.states)),
        entry("effects", rows(&f.effects)),
        entry("unit", q_row(&f.unit)),
    ];
    if f.approximate {
        root.push(entry("approximate", text("true")));
    }
    serialize_tree(&root)
}

pub fn parse_scenario(v: &Value) -> Result<Scenario> {
    if let Kind::Text(s) = &v.kind {
        return match s.as_str() {
            "chsh" => Ok(Scenario::chsh()),
            other => Err(v.error(format!("unknown scenario `{other}`"))),
        };
    }
    let entries = v.as_map()?;
    if entries.len() != 1 {
        return Err(v.error("a scenario map has exactly one entry"));
    }
    let (k, sizes) = &entries[0];
    let n = sizes.as_list()?.iter().map(Value::as_usize).collect::<Result<Vec<_>>>()?;
    let want = |k: usize| -> Result<()> {
        if n.len() != k {
            return Err(sizes.error(format!("expected {k} cardinalities")));
        }
        Ok(())
    };
    let s = match k.as_str() {
        "bell" => {
            want(4)?;
            Scenario::Bell {
                nx: n[0],
                ny: n[1],
                na: n[2],
                nb: n[3],
            }
        }
        "triangle" => {
            want(3)?;
            Scenario::Triangle {
                na: n[0],
                nb: n[1],
                nc: n[2],
            }
        }
        "instrumental" => {
            want(3)?;
            Scenario::Instrumental {
                nx: n[0],
                na: n[1],
                nb: n[2],
            }
        }
        "prepare-measure" => {
            want(4)?;
            Scenario::PrepareMeasure {
                nx: n[0],
                na: n[1],
                ny: n[2],
                nb: n[3],
            }
        }
        other => return Err(v.error(format!("unknown scenario `{other}`"))),
    };
    s.validate().map_err(|e| v.error(e.to_string()))?;
    Ok(s)
}

pub fn write_scenario(s: &Scenario) -> Value {
    let (k, n) = match *s {
        Scenario::Bell { nx, ny, na, nb } => ("bell", vec![nx, ny, na, nb]),
        Scenario::Triangle { na, nb, nc } => ("triangle", vec![na, nb, nc]),
        Scenario::Instrumental { nx, na, nb } => ("instrumental", vec![nx, na, nb]),
        Scenario::PrepareMeasure { nx, na, ny, nb } => ("prepare-measure", vec![nx, na, ny, nb]),
    };
    Value::map(vec![entry(k, Value::list(n.into_iter().map(usize_value).collect()))])
}

/// `probs` may be flat or one row per setting.
pub fn parse_correlation(src: &str) -> Result<Correlation> {
    let doc = parse_kind(src, "correlation")?;
    doc.only_keys(&["kind", "scenario", "probs"])?;
    let scenario = parse_scenario(doc.get("scenario")?)?;
    let pv = doc.get("probs")?;
    let mut flat = Vec::new();
    for item in pv.as_list()? {
        match &item.kind {
            Kind::List(row) => flat.extend(row.iter().cloned()),
            _ => flat.push(item.clone()),
        }
    }
    let located = |r: Result<Correlation>| r.map_err(|e| pv.error(e.to_string()));
    if flat.iter().any(has_float) {
        let p = flat.iter().map(parse_f64).collect::<Result<Vec<_>>>()?;
        located(Correlation::float(scenario, p))
    } else {
        let p = flat.iter().map(parse_q).collect::<Result<Vec<_>>>()?;
        located(Correlation::exact(scenario, p))
    }
}

pub fn serialize_correlation(c: &Correlation) -> String {
    let no = c.scenario.n_outcomes().max(1);
    let rows: Vec<Value> = match &c.table {
        Table::Exact(p) => p.chunks(no).map(q_row).collect(),
        Table::Float(p) => p.chunks(no).map(|r| Value::list(r.iter().map(|&x| write_f64(x)).collect())).collect(),
    };
    serialize_tree(&[
        entry("kind", text("correlation")),
        entry("scenario", write_scenario(&c.scenario)),
        entry("probs", Value::list(rows)),
    ])
}

pub fn parse_rep(src: &str) -> Result<RealistRep> {
    let doc = parse_kind(src, "rep")?;
    doc.only_keys(&["kind", "carriers", "ontic", "xi"])?;
    let ctx = Ctx::from_doc(&doc)?;
    let mut rep = RealistRep::default();
    if let Some(o) = doc.opt("ontic")? {
        for (name, c) in o.as_map()? {
            rep.ontic.insert(name.clone(), ctx.carrier(c)?);
        }
    }
    for (name, dist) in doc.get("xi")?.as_map()? {
        if rep.xi.insert(name.clone(), q_list(dist)?).is_some() {
            return Err(dist.error(format!("duplicate procedure `{name}`")));
        }
    }
    Ok(rep)
}

pub fn serialize_rep(rep: &RealistRep) -> String {
    serialize_tree(&[
        entry("kind", text("rep")),
        entry(
            "ontic",
            Value::map(rep.ontic.iter().map(|(n, c)| (n.clone(), write_carrier(c))).collect()),
        ),
        entry("xi", Value::map(rep.xi.iter().map(|(n, d)| (n.clone(), q_row(d))).collect())),
    ])
}

/// Pairs of diagram paths, relative to the pairs file.
pub fn parse_pairs(src: &str) -> Result<Vec<(String, String)>> {
    let doc = parse_kind(src, "pairs")?;
    doc.only_keys(&["kind", "pairs"])?;
    doc.get("pairs")?
        .as_list()?
        .iter()
        .map(|p| {
            let ab = p.as_list()?;
            if ab.len() != 2 {
                return Err(p.error("each pair lists two diagram files"));
            }
            Ok((ab[0].as_text()?.to_string(), ab[1].as_text()?.to_string()))
        })
        .collect()
}

/// Matrix rows as rational strings.
pub fn matrix_rows(m: &SubstochMap) -> Vec<Vec<String>> {
    (0..m.matrix().rows)
        .map(|r| m.matrix().row_vec(r).iter().map(rational::format).collect())
        .collect()
}
