//! Randomized checks of the semantics against independent oracles.

use ci_engine::diagrams::{Diagram, DiagramBuilder};
use ci_engine::fstheory::{denote, inferentially_equivalent, normal_form};
use ci_engine::optheory::{point_atomic_table, predict_closed, reconstruct, OpGen, Prediction, PredictionMap};
use ci_engine::random::{self, Rng64};
use ci_engine::rational::{qi, Q};
use ci_engine::substoch::{PartialFn, Proposition};
use ci_engine::types::Carrier;
use ci_engine::{nogo, substoch};

fn carriers() -> Vec<Carrier> {
    (1..=3).map(Carrier::range).collect()
}

/// Every partial function between two carriers.
fn partial_fns(dom: &Carrier, cod: &Carrier) -> Vec<PartialFn> {
    let (n, m) = (dom.size().unwrap(), cod.size().unwrap());
    let mut out = Vec::new();
    let total = (m + 1).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let map = (0..n)
            .map(|_| {
                let v = c % (m + 1);
                c /= m + 1;
                (v < m).then_some(v)
            })
            .collect();
        out.push(PartialFn::new(dom.clone(), cod.clone(), map).unwrap());
    }
    out
}

fn subsets(c: &Carrier) -> Vec<Proposition> {
    let n = c.size().unwrap();
    (0..1u64 << n).map(|b| Proposition::from_bits(c.clone(), b).unwrap()).collect()
}

/// `x ∈ f*(π)` iff `f(x)` is defined and lies in `π`.
fn preimage(f: &PartialFn, pi: &Proposition) -> Vec<bool> {
    f.map.iter().map(|y| y.is_some_and(|y| pi.contains(y))).collect()
}

#[test]
fn pullback_matches_preimage_and_preserves_lattice_operations() {
    use substoch::Connective::{And, Or};
    for dom in carriers() {
        for cod in carriers() {
            let props = subsets(&cod);
            for f in partial_fns(&dom, &cod) {
                for p in &props {
                    let fp = substoch::pullback_effect(&f, p).unwrap();
                    assert_eq!(fp.mask(), preimage(&f, p).as_slice());
                    for q in &props {
                        let fq = substoch::pullback_effect(&f, q).unwrap();
                        for op in [And, Or] {
                            let lhs = substoch::pullback_effect(&f, &substoch::connective(op, p, q).unwrap()).unwrap();
                            let rhs = substoch::connective(op, &fp, &fq).unwrap();
                            assert_eq!(lhs, rhs);
                        }
                    }
                }
                let bottom = Proposition::bottom(cod.clone()).unwrap();
                assert_eq!(substoch::pullback_effect(&f, &bottom).unwrap(), Proposition::bottom(dom.clone()).unwrap());
                // top goes to the domain of definition, which is all of X only for total maps
                let top = substoch::pullback_effect(&f, &Proposition::top(cod.clone()).unwrap()).unwrap();
                assert_eq!(top, f.defined());
                let total = f.map.iter().all(Option::is_some);
                assert_eq!(top == Proposition::top(dom.clone()).unwrap(), total);
            }
        }
    }
}

#[test]
fn embedding_then_prediction_is_identity() {
    let mut rng = random::rng(11);
    let model = PredictionMap::Classical(Default::default());
    for _ in 0..200 {
        let (a, b) = (random::carrier(&mut rng, 3), random::carrier(&mut rng, 3));
        let m = random::substochastic(&mut rng, &a, &b).unwrap();
        let d = Diagram::single("i", OpGen::embedded("i", m.clone()));
        assert_eq!(predict_closed(&d, &model).unwrap(), Prediction::Exact(m));
    }
}

#[test]
fn closed_predictions_match_summation() {
    let mut rng = random::rng(12);
    let model = PredictionMap::Classical(Default::default());
    for _ in 0..100 {
        let c = random::carrier(&mut rng, 4);
        let sigma = random::state(&mut rng, &c).unwrap();
        let pi = random::proposition(&mut rng, &c).unwrap();
        let mut b = DiagramBuilder::new();
        let s = b.add("sigma", OpGen::embedded("sigma", sigma.to_map()), &[]);
        b.add("pi", OpGen::embedded("pi", pi.effect()), &s);
        let d = b.finish(&[]).unwrap();
        let expected: Q = (0..c.size().unwrap()).filter(|&x| pi.contains(x)).map(|x| sigma.probs()[x].clone()).sum();
        let got = predict_closed(&d, &model).unwrap();
        assert_eq!(got.exact().unwrap().entry(0, 0), &expected);
    }
}

#[test]
fn normal_forms_agree_with_semantics() {
    let mut rng = random::rng(13);
    for _ in 0..100 {
        let d = random::fs_diagram(&mut rng, 6, 3).unwrap();
        let s = denote(&d).unwrap();
        let nf = normal_form(&d).unwrap();
        let back = denote(&nf.to_diagram().unwrap()).unwrap();
        assert_eq!(back, s);
        let identity_order = nf.input_order.iter().enumerate().all(|(i, &j)| i == j)
            && nf.output_order.iter().enumerate().all(|(i, &j)| i == j);
        if identity_order {
            assert_eq!(nf.s.matrix(), s.matrix());
        }
    }
}

fn reconstruction(rng: &mut Rng64, quantum: bool) {
    let (d, p) = random::op_instance(rng, quantum).unwrap();
    let rebuilt = reconstruct(&point_atomic_table(&d, &p).unwrap()).unwrap();
    let direct = predict_closed(&d, &p).unwrap();
    if quantum {
        assert!(rebuilt.approx_eq(&direct, 1e-12));
    } else {
        assert_eq!(rebuilt, direct);
    }
}

#[test]
fn point_atomic_tables_reconstruct_predictions() {
    let mut rng = random::rng(14);
    for _ in 0..100 {
        reconstruction(&mut rng, false);
    }
    for _ in 0..20 {
        reconstruction(&mut rng, true);
    }
}

#[test]
fn clamps_preserve_equivalence() {
    let mut rng = random::rng(15);
    for _ in 0..50 {
        let d = random::fs_diagram(&mut rng, 5, 2).unwrap();
        let e = normal_form(&d).unwrap().to_diagram().unwrap();
        assert!(inferentially_equivalent(&d, &e).unwrap());
        let clamp = random::fs_clamp(&mut rng, d.inputs(), d.outputs()).unwrap();
        let (cd, ce) = (clamp.insert(&d).unwrap(), clamp.insert(&e).unwrap());
        assert!(inferentially_equivalent(&cd, &ce).unwrap());
    }
}

#[test]
fn discarded_branches_do_not_change_predictions() {
    for quantum in [false, true] {
        let mut rng = random::rng(16);
        let (d, p) = random::op_instance(&mut rng, quantum).unwrap();
        let base = predict_closed(&d, &p).unwrap();
        let sys = d.nodes().iter().find_map(|n| match &n.gen {
            OpGen::Knowledge(ps) if ps.inputs.is_empty() => Some(ps.outputs[0].clone()),
            _ => None,
        });
        let sys = sys.expect("every instance prepares a system");
        for _ in 0..20 {
            let side = random::discarded_branch(&mut rng, &sys).unwrap();
            let with = predict_closed(&d.tensor(&side), &p).unwrap();
            if quantum {
                assert!(with.approx_eq(&base, 1e-12));
            } else {
                assert_eq!(with, base);
            }
        }
    }
}

#[test]
fn random_quantum_tables_are_no_signalling() {
    let mut rng = random::rng(17);
    let s = nogo::Scenario::chsh();
    for _ in 0..50 {
        let setup = random::bell_setup(&mut rng, 2).unwrap();
        let corr = nogo::quantum_correlations(&setup, &s).unwrap();
        assert!(nogo::no_signalling_check(&corr));
        let p = corr.to_f64();
        assert!(p.iter().all(|&x| x >= -1e-12));
        assert!(nogo::chsh_value(&corr).unwrap().abs() <= 2.0 * 2f64.sqrt() + 1e-9);
    }
}

#[test]
fn mixtures_of_vertices_are_members() {
    let mut rng = random::rng(18);
    let s = nogo::Scenario::chsh();
    let vertices = nogo::local_vertices(&s).unwrap();
    for _ in 0..10 {
        let w = random::distribution(&mut rng, vertices.len());
        let mut p = vec![qi(0); s.table_len()];
        for (wi, v) in w.iter().zip(&vertices) {
            let nogo::Table::Exact(vp) = &v.table else { unreachable!() };
            for (acc, x) in p.iter_mut().zip(vp) {
                *acc += wi * x;
            }
        }
        let cert = nogo::fs_compatible(&nogo::Correlation::exact(s, p).unwrap()).unwrap();
        assert!(cert.is_member());
        assert!(cert.verify().unwrap());
    }
}
