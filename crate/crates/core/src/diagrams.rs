//! Typed string diagrams: boxes with ordered ports wired acyclically.
//!
//! Every source (an open input or a box output) feeds exactly one sink (a box
//! input or an open output). Identity and swap are wiring, never boxes, so a
//! bare wire from an open input to an open output is a legal diagram.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::types::SystemType;

/// A box kind that can be instantiated in a diagram.
pub trait Generator: Clone + Debug {
    /// Name that, together with the signature, identifies the box.
    fn label(&self) -> String;
    fn inputs(&self) -> Vec<SystemType>;
    fn outputs(&self) -> Vec<SystemType>;
}

/// A box of the free theory: nothing but a name and a signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcBox {
    pub name: String,
    pub inputs: Vec<SystemType>,
    pub outputs: Vec<SystemType>,
}

impl ProcBox {
    pub fn new(name: impl Into<String>, inputs: Vec<SystemType>, outputs: Vec<SystemType>) -> Self {
        ProcBox {
            name: name.into(),
            inputs,
            outputs,
        }
    }
}

impl Generator for ProcBox {
    fn label(&self) -> String {
        self.name.clone()
    }
    fn inputs(&self) -> Vec<SystemType> {
        self.inputs.clone()
    }
    fn outputs(&self) -> Vec<SystemType> {
        self.outputs.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Input(usize),
    Port { node: usize, port: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sink {
    Output(usize),
    Port { node: usize, port: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wire {
    pub from: Source,
    pub to: Sink,
}

#[derive(Debug, Clone)]
pub struct Node<G> {
    /// Instance name; used by the file format, ignored by equality.
    pub id: String,
    pub gen: G,
}

#[derive(Debug, Clone)]
pub struct Diagram<G> {
    nodes: Vec<Node<G>>,
    wires: Vec<Wire>,
    inputs: Vec<SystemType>,
    outputs: Vec<SystemType>,
    order: Vec<usize>,
}

impl<G: Generator> Diagram<G> {
    /// Validates and builds a diagram.
    pub fn build(
        nodes: Vec<Node<G>>,
        wires: Vec<Wire>,
        inputs: Vec<SystemType>,
        outputs: Vec<SystemType>,
    ) -> Result<Self> {
        for t in inputs.iter().chain(&outputs) {
            t.validate()?;
        }
        let sigs: Vec<(Vec<SystemType>, Vec<SystemType>)> = nodes
            .iter()
            .map(|n| (n.gen.inputs(), n.gen.outputs()))
            .collect();
        for (n, (ins, outs)) in nodes.iter().zip(&sigs) {
            for t in ins.iter().chain(outs) {
                t.validate()
                    .map_err(|e| Error::TypeMismatch(format!("box `{}`: {e}", n.id)))?;
            }
        }
        let mut source_used: BTreeMap<Source, usize> = BTreeMap::new();
        let mut sink_used: BTreeMap<Sink, usize> = BTreeMap::new();
        for w in &wires {
            let from_ty = match w.from {
                Source::Input(i) => inputs.get(i),
                Source::Port { node, port } => sigs.get(node).and_then(|s| s.1.get(port)),
            }
            .ok_or_else(|| Error::DanglingPort(format!("no such source {:?}", w.from)))?;
            let to_ty = match w.to {
                Sink::Output(j) => outputs.get(j),
                Sink::Port { node, port } => sigs.get(node).and_then(|s| s.0.get(port)),
            }
            .ok_or_else(|| Error::DanglingPort(format!("no such sink {:?}", w.to)))?;
            if from_ty != to_ty {
                return Err(Error::TypeMismatch(format!(
                    "wire {:?} -> {:?} joins {from_ty} to {to_ty}",
                    w.from, w.to
                )));
            }
            *source_used.entry(w.from).or_default() += 1;
            *sink_used.entry(w.to).or_default() += 1;
        }
        let describe = |n: usize| nodes[n].id.clone();
        let check_source = |s: Source| -> Result<()> {
            match source_used.get(&s).copied().unwrap_or(0) {
                1 => Ok(()),
                0 => Err(Error::DanglingPort(match s {
                    Source::Input(i) => format!("open input {i} is not wired"),
                    Source::Port { node, port } => {
                        format!("output {port} of `{}` is not wired", describe(node))
                    }
                })),
                _ => Err(Error::DanglingPort(format!("source {s:?} used more than once"))),
            }
        };
        for i in 0..inputs.len() {
            check_source(Source::Input(i))?;
        }
        for (n, (_, outs)) in sigs.iter().enumerate() {
            for p in 0..outs.len() {
                check_source(Source::Port { node: n, port: p })?;
            }
        }
        let check_sink = |s: Sink| -> Result<()> {
            match sink_used.get(&s).copied().unwrap_or(0) {
                1 => Ok(()),
                0 => Err(Error::DanglingPort(match s {
                    Sink::Output(j) => format!("open output {j} is not wired"),
                    Sink::Port { node, port } => {
                        format!("input {port} of `{}` is not wired", describe(node))
                    }
                })),
                _ => Err(Error::DanglingPort(format!("sink {s:?} fed more than once"))),
            }
        };
        for j in 0..outputs.len() {
            check_sink(Sink::Output(j))?;
        }
        for (n, (ins, _)) in sigs.iter().enumerate() {
            for p in 0..ins.len() {
                check_sink(Sink::Port { node: n, port: p })?;
            }
        }
        let order = topo_sort(nodes.len(), &wires)?;
        Ok(Diagram {
            nodes,
            wires,
            inputs,
            outputs,
            order,
        })
    }

    pub fn empty() -> Self {
        Diagram {
            nodes: Vec::new(),
            wires: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            order: Vec::new(),
        }
    }

    /// Parallel identity wires.
    pub fn identity(types: Vec<SystemType>) -> Self {
        let perm: Vec<usize> = (0..types.len()).collect();
        Self::permutation(types, &perm).expect("identity permutation is valid")
    }

    /// Wiring that sends input `perm[j]` to output `j`.
    pub fn permutation(types: Vec<SystemType>, perm: &[usize]) -> Result<Self> {
        if perm.len() != types.len() {
            return Err(Error::SignatureMismatch("permutation length".into()));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::SignatureMismatch(format!("{perm:?} is not a permutation")));
            }
        }
        let outputs = perm.iter().map(|&p| types[p].clone()).collect();
        let wires = perm
            .iter()
            .enumerate()
            .map(|(j, &p)| Wire {
                from: Source::Input(p),
                to: Sink::Output(j),
            })
            .collect();
        Self::build(Vec::new(), wires, types, outputs)
    }

    /// The swap `a ⊗ b -> b ⊗ a`.
    pub fn swap(a: SystemType, b: SystemType) -> Self {
        Self::permutation(vec![a, b], &[1, 0]).expect("swap is a valid permutation")
    }

    /// A diagram consisting of one box with all ports open.
    pub fn single(id: impl Into<String>, gen: G) -> Self {
        let ins = gen.inputs();
        let outs = gen.outputs();
        let mut wires = Vec::new();
        for p in 0..ins.len() {
            wires.push(Wire {
                from: Source::Input(p),
                to: Sink::Port { node: 0, port: p },
            });
        }
        for p in 0..outs.len() {
            wires.push(Wire {
                from: Source::Port { node: 0, port: p },
                to: Sink::Output(p),
            });
        }
        Diagram {
            nodes: vec![Node { id: id.into(), gen }],
            wires,
            inputs: ins,
            outputs: outs,
            order: vec![0],
        }
    }

    pub fn nodes(&self) -> &[Node<G>] {
        &self.nodes
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn inputs(&self) -> &[SystemType] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[SystemType] {
        &self.outputs
    }

    pub fn topological_order(&self) -> Result<Vec<usize>> {
        Ok(self.order.clone())
    }

    /// Rewrites every box, keeping the wiring; the result is revalidated.
    pub fn map_boxes<H: Generator>(
        &self,
        mut f: impl FnMut(&Node<G>) -> Result<H>,
        retype: impl Fn(&SystemType) -> Result<SystemType>,
    ) -> Result<Diagram<H>> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                Ok(Node {
                    id: n.id.clone(),
                    gen: f(n)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let inputs = self.inputs.iter().map(&retype).collect::<Result<_>>()?;
        let outputs = self.outputs.iter().map(&retype).collect::<Result<_>>()?;
        Diagram::build(nodes, self.wires.clone(), inputs, outputs)
    }

    /// Replaces every box by a sub-diagram of matching arity and splices the
    /// results along the original wiring.
    pub fn substitute<H: Generator>(
        &self,
        mut f: impl FnMut(&Node<G>) -> Result<Diagram<H>>,
        retype: impl Fn(&SystemType) -> Result<SystemType>,
    ) -> Result<Diagram<H>> {
        let mut b = DiagramBuilder::new();
        let mut map: BTreeMap<Source, Source> = BTreeMap::new();
        for (i, t) in self.inputs.iter().enumerate() {
            map.insert(Source::Input(i), b.input(retype(t)?));
        }
        let mut feeds: Vec<Vec<Option<Source>>> =
            self.nodes.iter().map(|n| vec![None; n.gen.inputs().len()]).collect();
        let mut outs = vec![None; self.outputs.len()];
        for w in &self.wires {
            match w.to {
                Sink::Port { node, port } => feeds[node][port] = Some(w.from),
                Sink::Output(j) => outs[j] = Some(w.from),
            }
        }
        for &idx in &self.order {
            let node = &self.nodes[idx];
            let sub = f(node)?;
            let fed: Vec<Source> = feeds[idx]
                .iter()
                .map(|s| s.and_then(|s| map.get(&s).copied()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::DanglingPort(format!("box `{}` input", node.id)))?;
            let produced = b.splice(&sub, &fed)?;
            if produced.len() != node.gen.outputs().len() {
                return Err(Error::SignatureMismatch(format!(
                    "substitute for `{}` has the wrong arity",
                    node.id
                )));
            }
            for (port, s) in produced.into_iter().enumerate() {
                map.insert(Source::Port { node: idx, port }, s);
            }
        }
        let outs: Vec<Source> = outs
            .into_iter()
            .map(|s| s.and_then(|s| map.get(&s).copied()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::DanglingPort("open output".into()))?;
        b.finish(&outs)
    }

    /// `self` followed by `next`: outputs of `self` feed inputs of `next` in order.
    pub fn then(&self, next: &Diagram<G>) -> Result<Self> {
        compose_sequential(self, next)
    }

    pub fn tensor(&self, other: &Diagram<G>) -> Self {
        compose_parallel(self, other)
    }

    /// Deterministic serialization invariant under box renumbering.
    pub fn canonical_form(&self) -> String {
        canonical::serialize(self)
    }
}

fn topo_sort(n: usize, wires: &[Wire]) -> Result<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for w in wires {
        if let (Source::Port { node: a, .. }, Sink::Port { node: b, .. }) = (w.from, w.to) {
            indeg[b] += 1;
            succ[a].push(b);
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    if order.len() != n {
        return Err(Error::CycleDetected);
    }
    Ok(order)
}

/// `d1` then `d2`.
pub fn compose_sequential<G: Generator>(d1: &Diagram<G>, d2: &Diagram<G>) -> Result<Diagram<G>> {
    if d1.outputs != d2.inputs {
        return Err(Error::TypeMismatch(format!(
            "outputs [{}] do not match inputs [{}]",
            join(&d1.outputs),
            join(&d2.inputs)
        )));
    }
    let offset = d1.nodes.len();
    let shift_src = |s: Source| match s {
        Source::Port { node, port } => Source::Port {
            node: node + offset,
            port,
        },
        other => other,
    };
    let shift_sink = |s: Sink| match s {
        Sink::Port { node, port } => Sink::Port {
            node: node + offset,
            port,
        },
        other => other,
    };
    // what feeds d1's open output j
    let mut feeding = vec![None; d1.outputs.len()];
    let mut wires = Vec::with_capacity(d1.wires.len() + d2.wires.len());
    for w in &d1.wires {
        match w.to {
            Sink::Output(j) => feeding[j] = Some(w.from),
            _ => wires.push(*w),
        }
    }
    for w in &d2.wires {
        let from = match w.from {
            Source::Input(i) => feeding[i].ok_or_else(|| Error::DanglingPort(format!("output {i}")))?,
            other => shift_src(other),
        };
        wires.push(Wire {
            from,
            to: shift_sink(w.to),
        });
    }
    let mut nodes = d1.nodes.clone();
    nodes.extend(d2.nodes.iter().cloned());
    Diagram::build(nodes, wires, d1.inputs.clone(), d2.outputs.clone())
}

/// Disjoint union; ports are concatenated `d1` first.
pub fn compose_parallel<G: Generator>(d1: &Diagram<G>, d2: &Diagram<G>) -> Diagram<G> {
    let n_off = d1.nodes.len();
    let i_off = d1.inputs.len();
    let o_off = d1.outputs.len();
    let mut wires = d1.wires.clone();
    for w in &d2.wires {
        let from = match w.from {
            Source::Input(i) => Source::Input(i + i_off),
            Source::Port { node, port } => Source::Port {
                node: node + n_off,
                port,
            },
        };
        let to = match w.to {
            Sink::Output(j) => Sink::Output(j + o_off),
            Sink::Port { node, port } => Sink::Port {
                node: node + n_off,
                port,
            },
        };
        wires.push(Wire { from, to });
    }
    let mut nodes = d1.nodes.clone();
    nodes.extend(d2.nodes.iter().cloned());
    let mut inputs = d1.inputs.clone();
    inputs.extend(d2.inputs.iter().cloned());
    let mut outputs = d1.outputs.clone();
    outputs.extend(d2.outputs.iter().cloned());
    let mut order = d1.order.clone();
    order.extend(d2.order.iter().map(|i| i + n_off));
    Diagram {
        nodes,
        wires,
        inputs,
        outputs,
        order,
    }
}

/// Connectivity equality: a label- and port-order-preserving isomorphism exists.
pub fn diagrams_equal<G: Generator>(d1: &Diagram<G>, d2: &Diagram<G>) -> Result<bool> {
    if d1.inputs != d2.inputs || d1.outputs != d2.outputs {
        return Err(Error::SignatureMismatch(format!(
            "[{}] -> [{}] vs [{}] -> [{}]",
            join(&d1.inputs),
            join(&d1.outputs),
            join(&d2.inputs),
            join(&d2.outputs)
        )));
    }
    if d1.nodes.len() != d2.nodes.len() || d1.wires.len() != d2.wires.len() {
        return Ok(false);
    }
    Ok(d1.canonical_form() == d2.canonical_form())
}

pub(crate) fn join(ts: &[SystemType]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

/// Imperative construction helper: add boxes by naming the sources that feed them.
#[derive(Debug)]
pub struct DiagramBuilder<G> {
    nodes: Vec<Node<G>>,
    wires: Vec<Wire>,
    inputs: Vec<SystemType>,
}

impl<G: Generator> Default for DiagramBuilder<G> {
    fn default() -> Self {
        Self::new()
    }
}

impl<G: Generator> DiagramBuilder<G> {
    pub fn new() -> Self {
        DiagramBuilder {
            nodes: Vec::new(),
            wires: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn input(&mut self, t: SystemType) -> Source {
        self.inputs.push(t);
        Source::Input(self.inputs.len() - 1)
    }

    /// Adds a box fed by `feeds` (one per input port) and returns its output sources.
    pub fn add(&mut self, id: impl Into<String>, gen: G, feeds: &[Source]) -> Vec<Source> {
        let node = self.nodes.len();
        for (port, &from) in feeds.iter().enumerate() {
            self.wires.push(Wire {
                from,
                to: Sink::Port { node, port },
            });
        }
        let n_out = gen.outputs().len();
        self.nodes.push(Node { id: id.into(), gen });
        (0..n_out).map(|port| Source::Port { node, port }).collect()
    }

    /// Adds a whole sub-diagram, returning the sources of its open outputs.
    pub fn splice(&mut self, d: &Diagram<G>, feeds: &[Source]) -> Result<Vec<Source>> {
        if feeds.len() != d.inputs.len() {
            return Err(Error::SignatureMismatch("splice arity".into()));
        }
        let off = self.nodes.len();
        self.nodes.extend(d.nodes.iter().cloned());
        let mut outs = vec![None; d.outputs.len()];
        for w in &d.wires {
            let from = match w.from {
                Source::Input(i) => feeds[i],
                Source::Port { node, port } => Source::Port {
                    node: node + off,
                    port,
                },
            };
            match w.to {
                Sink::Output(j) => outs[j] = Some(from),
                Sink::Port { node, port } => self.wires.push(Wire {
                    from,
                    to: Sink::Port {
                        node: node + off,
                        port,
                    },
                }),
            }
        }
        outs.into_iter()
            .map(|o| o.ok_or_else(|| Error::DanglingPort("spliced output".into())))
            .collect()
    }

    pub fn source_type(&self, s: Source) -> Option<SystemType> {
        match s {
            Source::Input(i) => self.inputs.get(i).cloned(),
            Source::Port { node, port } => self.nodes.get(node)?.gen.outputs().get(port).cloned(),
        }
    }

    pub fn finish(mut self, outputs: &[Source]) -> Result<Diagram<G>> {
        let mut types = Vec::with_capacity(outputs.len());
        for (j, &from) in outputs.iter().enumerate() {
            let t = self
                .source_type(from)
                .ok_or_else(|| Error::DanglingPort(format!("no such source {from:?}")))?;
            types.push(t);
            self.wires.push(Wire {
                from,
                to: Sink::Output(j),
            });
        }
        Diagram::build(self.nodes, self.wires, self.inputs, types)
    }
}

/// A diagram with one hole of type `hole_inputs -> hole_outputs`, in tester
/// form: `pre` prepares the hole's inputs plus an auxiliary system, `post`
/// consumes the hole's outputs plus that auxiliary system.
#[derive(Debug, Clone)]
pub struct Clamp<G> {
    pub pre: Diagram<G>,
    pub post: Diagram<G>,
    pub hole_inputs: Vec<SystemType>,
    pub hole_outputs: Vec<SystemType>,
    pub aux: Vec<SystemType>,
}

impl<G: Generator> Clamp<G> {
    pub fn new(
        pre: Diagram<G>,
        post: Diagram<G>,
        hole_inputs: Vec<SystemType>,
        hole_outputs: Vec<SystemType>,
    ) -> Result<Self> {
        let n = hole_inputs.len();
        if pre.outputs.len() < n || pre.outputs[..n] != hole_inputs[..] {
            return Err(Error::SignatureMismatch(
                "clamp pre-processing must start with the hole inputs".into(),
            ));
        }
        let aux = pre.outputs[n..].to_vec();
        let mut expected = hole_outputs.clone();
        expected.extend(aux.iter().cloned());
        if post.inputs != expected {
            return Err(Error::SignatureMismatch(format!(
                "clamp post-processing expects [{}], hole gives [{}]",
                join(&post.inputs),
                join(&expected)
            )));
        }
        Ok(Clamp {
            pre,
            post,
            hole_inputs,
            hole_outputs,
            aux,
        })
    }

    /// Outer signature `A′ -> B′`.
    pub fn outer(&self) -> (Vec<SystemType>, Vec<SystemType>) {
        (self.pre.inputs.clone(), self.post.outputs.clone())
    }

    pub fn insert(&self, t: &Diagram<G>) -> Result<Diagram<G>> {
        if t.inputs != self.hole_inputs || t.outputs != self.hole_outputs {
            return Err(Error::SignatureMismatch(format!(
                "hole is [{}] -> [{}], got [{}] -> [{}]",
                join(&self.hole_inputs),
                join(&self.hole_outputs),
                join(&t.inputs),
                join(&t.outputs)
            )));
        }
        let middle = t.tensor(&Diagram::identity(self.aux.clone()));
        self.pre.then(&middle)?.then(&self.post)
    }
}

mod canonical {
    use super::*;
    use std::collections::BTreeSet;

    const BRANCH_BUDGET: usize = 20_000;

    struct Info {
        base: String,
        ins: Vec<Source>,
        outs: Vec<Sink>,
    }

    pub(super) fn serialize<G: Generator>(d: &Diagram<G>) -> String {
        let n = d.nodes.len();
        let mut info: Vec<Info> = d
            .nodes
            .iter()
            .map(|node| Info {
                base: format!(
                    "{}:[{}]->[{}]",
                    escape(&node.gen.label()),
                    join(&node.gen.inputs()),
                    join(&node.gen.outputs())
                ),
                ins: vec![Source::Input(usize::MAX); node.gen.inputs().len()],
                outs: vec![Sink::Output(usize::MAX); node.gen.outputs().len()],
            })
            .collect();
        let mut open_out = vec![Source::Input(usize::MAX); d.outputs.len()];
        for w in &d.wires {
            if let Sink::Port { node, port } = w.to {
                info[node].ins[port] = w.from;
            }
            if let Source::Port { node, port } = w.from {
                info[node].outs[port] = w.to;
            }
            if let Sink::Output(j) = w.to {
                open_out[j] = w.from;
            }
        }
        let colors = refine(&info);

        let mut search = Search {
            info: &info,
            colors: &colors,
            open_out: &open_out,
            best: None,
            leaves: 0,
        };
        let mut cid = vec![usize::MAX; n];
        search.run(&mut cid, &mut Vec::new());
        let body = search.best.unwrap_or_default();
        format!(
            "in [{}]\nout [{}]\n{}",
            join(&d.inputs),
            join(&d.outputs),
            body
        )
    }

    fn escape(s: &str) -> String {
        s.replace('\\', "\\\\").replace('|', "\\|").replace('\n', "\\n")
    }

    /// Iterated colour refinement over predecessors and successors.
    fn refine(info: &[Info]) -> Vec<usize> {
        let mut colors = intern(info.iter().map(|i| i.base.clone()).collect());
        for _ in 0..info.len().max(1) {
            let keys = info
                .iter()
                .enumerate()
                .map(|(k, i)| {
                    let ins: Vec<String> = i
                        .ins
                        .iter()
                        .map(|s| match s {
                            Source::Input(x) => format!("i{x}"),
                            Source::Port { node, port } => format!("c{}.{port}", colors[*node]),
                        })
                        .collect();
                    let outs: Vec<String> = i
                        .outs
                        .iter()
                        .map(|s| match s {
                            Sink::Output(x) => format!("o{x}"),
                            Sink::Port { node, port } => format!("c{}.{port}", colors[*node]),
                        })
                        .collect();
                    format!("{}|{}|{}|{}", colors[k], ins.join(","), outs.join(","), i.base)
                })
                .collect();
            let next = intern(keys);
            let before: BTreeSet<_> = colors.iter().collect();
            let after: BTreeSet<_> = next.iter().collect();
            let stable = before.len() == after.len();
            colors = next;
            if stable {
                break;
            }
        }
        colors
    }

    fn intern(keys: Vec<String>) -> Vec<usize> {
        let sorted: BTreeSet<&String> = keys.iter().collect();
        let index: BTreeMap<&String, usize> = sorted.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        keys.iter().map(|k| index[k]).collect()
    }

    struct Search<'a> {
        info: &'a [Info],
        colors: &'a [usize],
        open_out: &'a [Source],
        best: Option<String>,
        leaves: usize,
    }

    impl Search<'_> {
        fn desc(&self, s: Source, cid: &[usize]) -> Option<String> {
            match s {
                Source::Input(i) => Some(format!("i{i}")),
                Source::Port { node, port } => {
                    (cid[node] != usize::MAX).then(|| format!("n{}.{port}", cid[node]))
                }
            }
        }

        fn key(&self, k: usize, cid: &[usize]) -> Option<String> {
            let ins: Option<Vec<String>> = self.info[k].ins.iter().map(|s| self.desc(*s, cid)).collect();
            Some(format!("{:08}|{}", self.colors[k], ins?.join(",")))
        }

        fn run(&mut self, cid: &mut Vec<usize>, lines: &mut Vec<String>) {
            let assigned = lines.len();
            if assigned == self.info.len() {
                self.leaves += 1;
                let outs: Vec<String> = self
                    .open_out
                    .iter()
                    .map(|s| self.desc(*s, cid).unwrap_or_default())
                    .collect();
                let text = format!("{}\nresult [{}]\n", lines.join("\n"), outs.join(", "));
                if self.best.as_ref().is_none_or(|b| text < *b) {
                    self.best = Some(text);
                }
                return;
            }
            let mut ready: Vec<(String, usize)> = (0..self.info.len())
                .filter(|&k| cid[k] == usize::MAX)
                .filter_map(|k| self.key(k, cid).map(|key| (key, k)))
                .collect();
            ready.sort();
            let Some(min) = ready.first().map(|r| r.0.clone()) else {
                return;
            };
            for (_, k) in ready.into_iter().take_while(|r| r.0 == min) {
                if self.leaves >= BRANCH_BUDGET && self.best.is_some() {
                    return;
                }
                cid[k] = assigned;
                let ins: Vec<String> = self.info[k]
                    .ins
                    .iter()
                    .map(|s| self.desc(*s, cid).unwrap_or_default())
                    .collect();
                lines.push(format!("n{assigned} {} <- [{}]", self.info[k].base, ins.join(", ")));
                self.run(cid, lines);
                lines.pop();
                cid[k] = usize::MAX;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Carrier;

    fn ty(n: usize) -> SystemType {
        SystemType::causal(Carrier::range(n))
    }

    fn bx(name: &str, i: Vec<SystemType>, o: Vec<SystemType>) -> Diagram<ProcBox> {
        Diagram::single(name, ProcBox::new(name, i, o))
    }

    #[test]
    fn single_box_has_open_ports() {
        let d = bx("u", vec![ty(2)], vec![ty(3)]);
        assert_eq!(d.inputs(), &[ty(2)]);
        assert_eq!(d.outputs(), &[ty(3)]);
    }

    #[test]
    fn chain_and_counts() {
        let u = bx("u", vec![ty(1)], vec![ty(2)]);
        let v = bx("v", vec![ty(2)], vec![ty(3)]);
        let c = u.then(&v).unwrap();
        assert_eq!(c.inputs(), &[ty(1)]);
        assert_eq!(c.outputs(), &[ty(3)]);
        assert_eq!(c.nodes().len(), 2);
        let internal = c
            .wires()
            .iter()
            .filter(|w| matches!((w.from, w.to), (Source::Port { .. }, Sink::Port { .. })))
            .count();
        assert_eq!(internal, 1);
    }

    #[test]
    fn mismatched_wire_rejected() {
        let u = ProcBox::new("u", vec![], vec![ty(2)]);
        let v = ProcBox::new("v", vec![ty(3)], vec![]);
        let nodes = vec![Node { id: "u".into(), gen: u }, Node { id: "v".into(), gen: v }];
        let wires = vec![Wire {
            from: Source::Port { node: 0, port: 0 },
            to: Sink::Port { node: 1, port: 0 },
        }];
        assert!(matches!(
            Diagram::build(nodes, wires, vec![], vec![]),
            Err(Error::TypeMismatch(_))
        ));
    }

    #[test]
    fn cycle_rejected() {
        let u = ProcBox::new("u", vec![ty(2)], vec![ty(2)]);
        let nodes = vec![
            Node { id: "a".into(), gen: u.clone() },
            Node { id: "b".into(), gen: u },
        ];
        let wires = vec![
            Wire { from: Source::Port { node: 0, port: 0 }, to: Sink::Port { node: 1, port: 0 } },
            Wire { from: Source::Port { node: 1, port: 0 }, to: Sink::Port { node: 0, port: 0 } },
        ];
        assert_eq!(
            Diagram::build(nodes, wires, vec![], vec![]).unwrap_err(),
            Error::CycleDetected
        );
    }

    #[test]
    fn unwired_port_is_dangling() {
        let u = ProcBox::new("u", vec![], vec![ty(2)]);
        let nodes = vec![Node { id: "u".into(), gen: u }];
        assert!(matches!(
            Diagram::build(nodes, vec![], vec![], vec![]),
            Err(Error::DanglingPort(_))
        ));
    }

    #[test]
    fn identity_and_unit_laws() {
        let d = bx("u", vec![ty(2)], vec![ty(3)]);
        let left = Diagram::identity(vec![ty(2)]).then(&d).unwrap();
        let right = d.then(&Diagram::identity(vec![ty(3)])).unwrap();
        assert!(diagrams_equal(&d, &left).unwrap());
        assert!(diagrams_equal(&d, &right).unwrap());
        assert!(diagrams_equal(&d, &d.tensor(&Diagram::empty())).unwrap());
        assert!(diagrams_equal(&d, &Diagram::empty().tensor(&d)).unwrap());
    }

    #[test]
    fn swap_twice_is_identity() {
        let s = Diagram::<ProcBox>::swap(ty(2), ty(3));
        let back = Diagram::<ProcBox>::swap(ty(3), ty(2));
        let twice = s.then(&back).unwrap();
        assert!(diagrams_equal(&twice, &Diagram::identity(vec![ty(2), ty(3)])).unwrap());
        assert!(!diagrams_equal(
            &Diagram::<ProcBox>::swap(ty(2), ty(2)),
            &Diagram::identity(vec![ty(2), ty(2)])
        )
        .unwrap());
    }

    #[test]
    fn parallel_ports_concatenate() {
        let u = bx("u", vec![ty(1)], vec![ty(2)]);
        let v = bx("v", vec![ty(3)], vec![ty(4)]);
        let p = u.tensor(&v);
        assert_eq!(p.inputs(), &[ty(1), ty(3)]);
        assert_eq!(p.outputs(), &[ty(2), ty(4)]);
    }

    #[test]
    fn associativity_of_wiring() {
        let u = bx("u", vec![ty(1)], vec![ty(2)]);
        let v = bx("v", vec![ty(2)], vec![ty(3)]);
        let w = bx("w", vec![ty(3)], vec![ty(4)]);
        let a = u.then(&v).unwrap().then(&w).unwrap();
        let b = u.then(&v.then(&w).unwrap()).unwrap();
        assert!(diagrams_equal(&a, &b).unwrap());
    }

    #[test]
    fn sliding_boxes_past_each_other() {
        // (u ⊗ 1);(1 ⊗ v) and (1 ⊗ v);(u ⊗ 1) have the same connectivity
        let u = bx("u", vec![ty(1)], vec![ty(2)]);
        let v = bx("v", vec![ty(3)], vec![ty(4)]);
        let a = u
            .tensor(&Diagram::identity(vec![ty(3)]))
            .then(&Diagram::identity(vec![ty(2)]).tensor(&v))
            .unwrap();
        let b = Diagram::identity(vec![ty(1)])
            .tensor(&v)
            .then(&u.tensor(&Diagram::identity(vec![ty(4)])))
            .unwrap();
        assert!(diagrams_equal(&a, &b).unwrap());
    }

    #[test]
    fn rerouted_wire_differs() {
        let f = ProcBox::new("f", vec![], vec![ty(2), ty(2)]);
        let g = ProcBox::new("g", vec![ty(2)], vec![ty(2)]);
        let build = |swap: bool| {
            let mut b = DiagramBuilder::new();
            let o = b.add("f", f.clone(), &[]);
            let (x, y) = if swap { (o[1], o[0]) } else { (o[0], o[1]) };
            let g_out = b.add("g", g.clone(), &[x]);
            b.finish(&[g_out[0], y]).unwrap()
        };
        assert!(diagrams_equal(&build(false), &build(false)).unwrap());
        assert!(!diagrams_equal(&build(false), &build(true)).unwrap());
    }

    #[test]
    fn symmetric_twins_do_not_confuse_canonical_form() {
        // two identical states feeding distinct boxes, built in both orders
        let s = ProcBox::new("s", vec![], vec![ty(2)]);
        let x = ProcBox::new("x", vec![ty(2)], vec![ty(3)]);
        let y = ProcBox::new("y", vec![ty(2)], vec![ty(4)]);
        let mut b1 = DiagramBuilder::new();
        let s1 = b1.add("s1", s.clone(), &[]);
        let s2 = b1.add("s2", s.clone(), &[]);
        let xo = b1.add("x", x.clone(), &[s1[0]]);
        let yo = b1.add("y", y.clone(), &[s2[0]]);
        let d1 = b1.finish(&[xo[0], yo[0]]).unwrap();
        let mut b2 = DiagramBuilder::new();
        let s2 = b2.add("s2", s.clone(), &[]);
        let s1 = b2.add("s1", s, &[]);
        let yo = b2.add("y", y, &[s2[0]]);
        let xo = b2.add("x", x, &[s1[0]]);
        let d2 = b2.finish(&[xo[0], yo[0]]).unwrap();
        assert!(diagrams_equal(&d1, &d2).unwrap());
        assert_eq!(d1.canonical_form(), d2.canonical_form());
    }

    #[test]
    fn renaming_a_box_breaks_equality() {
        let a = bx("u", vec![ty(2)], vec![ty(2)]);
        let b = bx("u2", vec![ty(2)], vec![ty(2)]);
        assert!(!diagrams_equal(&a, &b).unwrap());
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let a = bx("u", vec![ty(2)], vec![ty(2)]);
        let b = bx("u", vec![ty(3)], vec![ty(2)]);
        assert!(matches!(diagrams_equal(&a, &b), Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn tester_clamp_shape() {
        // x_τ : A′ -> A ⊗ W, y_τ : B ⊗ W -> B′
        let x = bx("x_tau", vec![ty(5)], vec![ty(1), ty(7)]);
        let y = bx("y_tau", vec![ty(2), ty(7)], vec![ty(6)]);
        let c = Clamp::new(x, y, vec![ty(1)], vec![ty(2)]).unwrap();
        assert_eq!(c.aux, vec![ty(7)]);
        let t = bx("T", vec![ty(1)], vec![ty(2)]);
        let filled = c.insert(&t).unwrap();
        assert_eq!(filled.nodes().len(), 3);
        assert_eq!(filled.inputs(), &[ty(5)]);
        assert_eq!(filled.outputs(), &[ty(6)]);
        let wrong = bx("T", vec![ty(2)], vec![ty(2)]);
        assert!(matches!(c.insert(&wrong), Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn identity_hole_clamp_splices_box() {
        let c = Clamp::new(
            Diagram::<ProcBox>::identity(vec![ty(2)]),
            Diagram::identity(vec![ty(3)]),
            vec![ty(2)],
            vec![ty(3)],
        )
        .unwrap();
        let t = bx("T", vec![ty(2)], vec![ty(3)]);
        assert!(diagrams_equal(&c.insert(&t).unwrap(), &t).unwrap());
    }
}
