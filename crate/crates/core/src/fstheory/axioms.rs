//! Exhaustive certification of the F-S rewrite rules at the level of denotations.
//!
//! Each rule is instantiated for every choice of carrier sizes up to the
//! requested bound, with knowledge inputs left open, so one matrix equality
//! covers every state of knowledge at once. Instances whose matrices would
//! exceed the enumeration cap are counted as skipped.

use super::{compose_map, denote, eval_map, point_of, product_map, FsDiagram, FsGen};
use crate::diagrams::{Diagram, DiagramBuilder};
use crate::error::{Error, Result};
use crate::funcdyn::{self, Function};
use crate::rational::q;
use crate::substoch::{copy, discard, convex_mix, KnowledgeState, Proposition, SubstochMap};
use crate::types::{Carrier, SystemType};

pub const AXIOM_NAMES: [&str; 12] = [
    "sequential-knowledge",
    "parallel-knowledge",
    "identity-embedding",
    "true-proposition",
    "double-gain",
    "composite-gain",
    "composite-ignore",
    "ignorability",
    "knowledge-propagation",
    "knowledge-propagation-trivial-input",
    "causal-identity-factorization",
    "causal-proposition",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomResult {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    pub skipped: usize,
    pub first_failure: Option<String>,
}

impl AxiomResult {
    fn new(name: &'static str) -> Self {
        AxiomResult {
            name,
            instances: 0,
            failures: 0,
            skipped: 0,
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }

    fn fail(&mut self, why: String) {
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(why);
        }
    }

    /// Runs one instance; a cap overflow counts as skipped.
    fn check(&mut self, desc: impl Fn() -> String, outcome: Result<bool>) {
        match outcome {
            Ok(true) => self.instances += 1,
            Ok(false) => {
                self.instances += 1;
                self.fail(desc());
            }
            Err(Error::CapExceeded { .. }) => self.skipped += 1,
            Err(e) => {
                self.instances += 1;
                self.fail(format!("{}: {e}", desc()));
            }
        }
    }

    fn equal(&mut self, desc: impl Fn() -> String, sides: Result<(FsDiagram, FsDiagram)>) {
        let outcome = sides.and_then(|(l, r)| Ok(denote(&l)? == denote(&r)?));
        self.check(desc, outcome);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub max_carrier: usize,
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(AxiomResult::passed)
    }
}

fn ca(c: &Carrier) -> SystemType {
    SystemType::causal(c.clone())
}

fn inf(c: Carrier) -> SystemType {
    SystemType::inferential(c)
}

fn hom(a: &Carrier, b: &Carrier) -> Carrier {
    Carrier::hom(a.clone(), b.clone())
}

/// `Λ -> Hom(⋆, Λ)`, both indexed by `λ`.
fn star(c: &Carrier) -> Result<FsGen> {
    FsGen::embedded_ports(
        "star",
        vec![c.clone()],
        vec![Carrier::hom(Carrier::unit(), c.clone())],
        SubstochMap::identity(c.clone())?,
    )
}

fn star_inverse(c: &Carrier) -> Result<FsGen> {
    FsGen::embedded_ports(
        "unstar",
        vec![Carrier::hom(Carrier::unit(), c.clone())],
        vec![c.clone()],
        SubstochMap::identity(c.clone())?,
    )
}

fn sequential(a: &Carrier, b: &Carrier, c: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let (h1, h2, x) = (l.input(inf(hom(a, b))), l.input(inf(hom(b, c))), l.input(ca(a)));
    let k1 = l.add("k1", FsGen::knowledge(vec![a.clone()], vec![b.clone()]), &[h1, x]);
    let k2 = l.add("k2", FsGen::knowledge(vec![b.clone()], vec![c.clone()]), &[h2, k1[0]]);
    let lhs = l.finish(&k2)?;

    let mut r = DiagramBuilder::new();
    let (h1, h2, x) = (r.input(inf(hom(a, b))), r.input(inf(hom(b, c))), r.input(ca(a)));
    let m = r.add("compose", FsGen::embedded("compose", compose_map(a, b, c)?), &[h1, h2]);
    let k = r.add("k", FsGen::knowledge(vec![a.clone()], vec![c.clone()]), &[m[0], x]);
    Ok((lhs, r.finish(&k)?))
}

fn parallel(a: &Carrier, b: &Carrier, c: &Carrier, d: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let (h1, h2, x, y) = (l.input(inf(hom(a, b))), l.input(inf(hom(c, d))), l.input(ca(a)), l.input(ca(c)));
    let k1 = l.add("k1", FsGen::knowledge(vec![a.clone()], vec![b.clone()]), &[h1, x]);
    let k2 = l.add("k2", FsGen::knowledge(vec![c.clone()], vec![d.clone()]), &[h2, y]);
    let lhs = l.finish(&[k1[0], k2[0]])?;

    let mut r = DiagramBuilder::new();
    let (h1, h2, x, y) = (r.input(inf(hom(a, b))), r.input(inf(hom(c, d))), r.input(ca(a)), r.input(ca(c)));
    let m = r.add("product", FsGen::embedded("product", product_map(a, b, c, d)?), &[h1, h2]);
    let k = r.add(
        "k",
        FsGen::knowledge(vec![a.clone(), c.clone()], vec![b.clone(), d.clone()]),
        &[m[0], x, y],
    );
    Ok((lhs, r.finish(&k)?))
}

fn identity_embedding(a: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let x = l.input(ca(a));
    let id = l.add("id", FsGen::embedded("id", point_of(&Function::identity(a.clone())?)?), &[]);
    let k = l.add("k", FsGen::knowledge(vec![a.clone()], vec![a.clone()]), &[id[0], x]);
    Ok((l.finish(&k)?, Diagram::identity(vec![ca(a)])))
}

fn swap_embedding(a: &Carrier, b: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let (na, nb) = (a.size()?, b.size()?);
    let table = (0..na * nb).map(|i| (i % nb) * na + i / nb).collect();
    let swap = Function::new(
        Carrier::product([a.clone(), b.clone()]),
        Carrier::product([b.clone(), a.clone()]),
        table,
    )?;
    let mut l = DiagramBuilder::new();
    let (x, y) = (l.input(ca(a)), l.input(ca(b)));
    let s = l.add("swap", FsGen::embedded("swap", point_of(&swap)?), &[]);
    let k = l.add(
        "k",
        FsGen::knowledge(vec![a.clone(), b.clone()], vec![b.clone(), a.clone()]),
        &[s[0], x, y],
    );
    Ok((l.finish(&k)?, Diagram::swap(ca(a), ca(b))))
}

fn true_proposition(a: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let x = l.input(ca(a));
    let g = l.add("g", FsGen::gain(a.clone()), &[x]);
    l.add("top", FsGen::embedded("top", Proposition::top(a.clone())?.effect()), &[g[1]]);
    Ok((l.finish(&g[..1])?, Diagram::identity(vec![ca(a)])))
}

fn double_gain(a: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let x = l.input(ca(a));
    let g1 = l.add("g1", FsGen::gain(a.clone()), &[x]);
    let g2 = l.add("g2", FsGen::gain(a.clone()), &[g1[0]]);
    let lhs = l.finish(&[g2[0], g1[1], g2[1]])?;

    let mut r = DiagramBuilder::new();
    let x = r.input(ca(a));
    let g = r.add("g", FsGen::gain(a.clone()), &[x]);
    let c = r.add("copy", FsGen::embedded("copy", copy(a)?), &[g[1]]);
    Ok((lhs, r.finish(&[g[0], c[0], c[1]])?))
}

fn composite_gain(a: &Carrier, b: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let (x, y) = (l.input(ca(a)), l.input(ca(b)));
    let g = l.add("g", FsGen::PropGain(vec![a.clone(), b.clone()]), &[x, y]);
    let lhs = l.finish(&g)?;

    let ab = Carrier::product([a.clone(), b.clone()]);
    let mut r = DiagramBuilder::new();
    let (x, y) = (r.input(ca(a)), r.input(ca(b)));
    let ga = r.add("ga", FsGen::gain(a.clone()), &[x]);
    let gb = r.add("gb", FsGen::gain(b.clone()), &[y]);
    let merge = FsGen::embedded_ports("merge", vec![a.clone(), b.clone()], vec![ab.clone()], SubstochMap::identity(ab)?)?;
    let m = r.add("merge", merge, &[ga[1], gb[1]]);
    Ok((lhs, r.finish(&[ga[0], gb[0], m[0]])?))
}

fn composite_ignore(a: &Carrier, b: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let lhs = Diagram::single("i", FsGen::Ignore(vec![a.clone(), b.clone()]));
    let rhs = Diagram::single("ia", FsGen::ignore(a.clone())).tensor(&Diagram::single("ib", FsGen::ignore(b.clone())));
    Ok((lhs, rhs))
}

fn ignorability(a: &Carrier, b: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let (h, x) = (l.input(inf(hom(a, b))), l.input(ca(a)));
    let k = l.add("k", FsGen::knowledge(vec![a.clone()], vec![b.clone()]), &[h, x]);
    l.add("i", FsGen::ignore(b.clone()), &k);
    let lhs = l.finish(&[])?;

    let mut r = DiagramBuilder::new();
    let (h, x) = (r.input(inf(hom(a, b))), r.input(ca(a)));
    r.add("marg", FsGen::embedded("marg", discard(&hom(a, b))?), &[h]);
    r.add("i", FsGen::ignore(a.clone()), &[x]);
    Ok((lhs, r.finish(&[])?))
}

fn knowledge_propagation(a: &Carrier, b: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut l = DiagramBuilder::new();
    let (h, x) = (l.input(inf(hom(a, b))), l.input(ca(a)));
    let k = l.add("k", FsGen::knowledge(vec![a.clone()], vec![b.clone()]), &[h, x]);
    let g = l.add("g", FsGen::gain(b.clone()), &k);
    let lhs = l.finish(&g)?;

    let mut r = DiagramBuilder::new();
    let (h, x) = (r.input(inf(hom(a, b))), r.input(ca(a)));
    let gx = r.add("g", FsGen::gain(a.clone()), &[x]);
    let c = r.add("copy", FsGen::embedded("copy", copy(&hom(a, b))?), &[h]);
    let k = r.add("k", FsGen::knowledge(vec![a.clone()], vec![b.clone()]), &[c[0], gx[0]]);
    let e = r.add("eval", FsGen::embedded("eval", eval_map(a, b)?), &[c[1], gx[1]]);
    Ok((lhs, r.finish(&[k[0], e[0]])?))
}

fn trivial_input_propagation(b: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let h = Carrier::hom(Carrier::unit(), b.clone());
    let mut l = DiagramBuilder::new();
    let x = l.input(inf(h.clone()));
    let k = l.add("k", FsGen::knowledge(vec![], vec![b.clone()]), &[x]);
    let g = l.add("g", FsGen::gain(b.clone()), &k);
    let lhs = l.finish(&g)?;

    let mut r = DiagramBuilder::new();
    let x = r.input(inf(h.clone()));
    let c = r.add("copy", FsGen::embedded("copy", copy(&h)?), &[x]);
    let k = r.add("k", FsGen::knowledge(vec![], vec![b.clone()]), &[c[0]]);
    let s = r.add("unstar", star_inverse(b)?, &[c[1]]);
    Ok((lhs, r.finish(&[k[0], s[0]])?))
}

fn causal_identity_factorization(a: &Carrier) -> Result<(FsDiagram, FsDiagram)> {
    let mut r = DiagramBuilder::new();
    let x = r.input(ca(a));
    let g = r.add("g", FsGen::gain(a.clone()), &[x]);
    r.add("i", FsGen::ignore(a.clone()), &[g[0]]);
    let s = r.add("star", star(a)?, &[g[1]]);
    let k = r.add("k", FsGen::knowledge(vec![], vec![a.clone()]), &s);
    Ok((Diagram::identity(vec![ca(a)]), r.finish(&k)?))
}

/// States of knowledge about `Hom(a, b)` used for the causal-proposition lemma:
/// every point mass, neighbouring pairs mixed evenly, the uniform state and a
/// subnormalized uniform state.
fn knowledge_family(a: &Carrier, b: &Carrier) -> Result<Vec<SubstochMap>> {
    let h = hom(a, b);
    let n = h.size()?;
    let mut out = Vec::with_capacity(2 * n + 2);
    for i in 0..n {
        out.push(KnowledgeState::point(h.clone(), i)?.to_map());
    }
    for i in 0..n.saturating_sub(1) {
        out.push(convex_mix(&[q(1, 2), q(1, 2)], &[out[i].clone(), out[i + 1].clone()])?);
    }
    let u = KnowledgeState::uniform(h.clone())?;
    let half: Vec<_> = u.probs().iter().map(|p| p * q(1, 2)).collect();
    out.push(u.to_map());
    out.push(KnowledgeState::new(h, half)?.to_map());
    Ok(out)
}

/// Checks "gaining knowledge that the output lies in π changes nothing" iff
/// "the black diamond applied to σ lands in π with full weight".
fn causal_proposition(a: &Carrier, b: &Carrier, sigma: &SubstochMap, pi: &Proposition) -> Result<bool> {
    let know = || FsGen::knowledge(vec![a.clone()], vec![b.clone()]);
    let mut l = DiagramBuilder::new();
    let x = l.input(ca(a));
    let s = l.add("sigma", FsGen::embedded("sigma", sigma.clone()), &[]);
    let k = l.add("k", know(), &[s[0], x]);
    let g = l.add("g", FsGen::gain(b.clone()), &k);
    l.add("pi", FsGen::embedded("pi", pi.effect()), &[g[1]]);
    let gained = l.finish(&g[..1])?;

    let mut r = DiagramBuilder::new();
    let x = r.input(ca(a));
    let s = r.add("sigma", FsGen::embedded("sigma", sigma.clone()), &[]);
    let k = r.add("k", know(), &[s[0], x]);
    let plain = r.finish(&k)?;

    let mut l = DiagramBuilder::new();
    let x = l.input(inf(a.clone()));
    let s = l.add("sigma", FsGen::embedded("sigma", sigma.clone()), &[]);
    let e = l.add("eval", FsGen::embedded("eval", eval_map(a, b)?), &[s[0], x]);
    l.add("pi", FsGen::embedded("pi", pi.effect()), &e);
    let asked = l.finish(&[])?;

    let mut r = DiagramBuilder::new();
    let x = r.input(inf(a.clone()));
    let s = r.add("sigma", FsGen::embedded("sigma", sigma.clone()), &[]);
    let e = r.add("eval", FsGen::embedded("eval", eval_map(a, b)?), &[s[0], x]);
    r.add("marg", FsGen::embedded("marg", discard(b)?), &e);
    let unasked = r.finish(&[])?;

    let left = denote(&gained)? == denote(&plain)?;
    let right = denote(&asked)? == denote(&unasked)?;
    Ok(left == right)
}

/// Certifies each rewrite rule for all carrier sizes `1..=max_carrier`.
pub fn verify_fs_axioms(max_carrier: usize) -> Result<AxiomReport> {
    if max_carrier == 0 || max_carrier > 4 {
        return Err(Error::ConfigError(format!("max carrier {max_carrier} outside 1..=4")));
    }
    let sizes: Vec<Carrier> = (1..=max_carrier).map(Carrier::range).collect();
    let mut results: Vec<AxiomResult> = AXIOM_NAMES.iter().map(|&n| AxiomResult::new(n)).collect();
    let sz = |c: &Carrier| c.size().unwrap_or(0);

    for a in &sizes {
        results[2].equal(|| format!("|A|={}", sz(a)), identity_embedding(a));
        results[3].equal(|| format!("|A|={}", sz(a)), true_proposition(a));
        results[4].equal(|| format!("|A|={}", sz(a)), double_gain(a));
        results[9].equal(|| format!("|B|={}", sz(a)), trivial_input_propagation(a));
        results[10].equal(|| format!("|A|={}", sz(a)), causal_identity_factorization(a));
        for b in &sizes {
            let d = || format!("|A|={} |B|={}", sz(a), sz(b));
            results[2].equal(d, swap_embedding(a, b));
            results[5].equal(d, composite_gain(a, b));
            results[6].equal(d, composite_ignore(a, b));
            results[7].equal(d, ignorability(a, b));
            results[8].equal(d, knowledge_propagation(a, b));
            match (knowledge_family(a, b), funcdyn::homset_size(a, b)) {
                (Ok(family), Ok(_)) => {
                    for (si, sigma) in family.iter().enumerate() {
                        for bits in 0..1u64 << sz(b) {
                            let pi = Proposition::from_bits(b.clone(), bits)?;
                            let outcome = causal_proposition(a, b, sigma, &pi);
                            results[11].check(|| format!("{} σ#{si} π={bits:b}", d()), outcome);
                        }
                    }
                }
                (Err(Error::CapExceeded { .. }), _) | (_, Err(Error::CapExceeded { .. })) => results[11].skipped += 1,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
            for c in &sizes {
                results[0].equal(|| format!("{} |C|={}", d(), sz(c)), sequential(a, b, c));
                for e in &sizes {
                    results[1].equal(
                        || format!("{} |C|={} |D|={}", d(), sz(c), sz(e)),
                        parallel(a, b, c, e),
                    );
                }
            }
        }
    }
    Ok(AxiomReport { max_carrier, results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_axioms_hold_on_bits() {
        let r = verify_fs_axioms(2).unwrap();
        for a in &r.results {
            assert!(a.passed(), "{a:?}");
        }
    }

    #[test]
    fn a_wrong_rule_is_caught() {
        // forgetting the dynamics on the inferential side is not the same rule
        let a = Carrier::bit();
        let (lhs, _) = knowledge_propagation(&a, &a).unwrap();
        let mut res = AxiomResult::new("probe");
        let mut r = DiagramBuilder::new();
        let (h, x) = (r.input(inf(hom(&a, &a))), r.input(ca(&a)));
        r.add("marg", FsGen::embedded("marg", discard(&hom(&a, &a)).unwrap()), &[h]);
        let g = r.add("g", FsGen::gain(a.clone()), &[x]);
        let bad = r.finish(&g).unwrap();
        res.equal(|| "probe".into(), Ok((lhs, bad)));
        assert!(!res.passed());
    }

    #[test]
    fn oversized_bound_rejected() {
        assert!(verify_fs_axioms(5).is_err());
        assert!(verify_fs_axioms(0).is_err());
    }
}
