use proptest::prelude::*;

use ci_engine::diagrams::{diagrams_equal, DiagramBuilder};
use ci_engine::format::{self, DiagramFile};
use ci_engine::fstheory::{denote, quotient_normal_form, FsGen};
use ci_engine::funcdyn::{self, Function};
use ci_engine::nogo::{self, embed};
use ci_engine::optheory::{predict_closed, OpGen, PredictionMap};
use ci_engine::random;
use ci_engine::rational::{q, Q};
use ci_engine::substoch::{self, compose_par, compose_seq, from_partial_fn, KnowledgeState, PartialFn};
use ci_engine::types::Carrier;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 32,
        ..ProptestConfig::default()
    }
}

fn partial_fn(dom: usize, cod: usize) -> impl Strategy<Value = PartialFn> {
    prop::collection::vec(prop::option::of(0..cod), dom)
        .prop_map(move |m| PartialFn::new(Carrier::range(dom), Carrier::range(cod), m).unwrap())
}

fn function(dom: usize, cod: usize) -> impl Strategy<Value = Function> {
    prop::collection::vec(0..cod, dom).prop_map(move |t| Function::new(Carrier::range(dom), Carrier::range(cod), t).unwrap())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn canonical_text_is_a_fixed_point(seed in any::<u64>()) {
        let d = random::fs_diagram(&mut random::rng(seed), 6, 3).unwrap();
        let text = format::serialize_diagram(&DiagramFile::fs(d.clone()));
        prop_assert_eq!(&text, &format::serialize_diagram(&DiagramFile::fs(d.clone())));
        let back = format::parse_diagram(&text).unwrap();
        prop_assert_eq!(&format::serialize_diagram(&back), &text);
        let format::AnyDiagram::Fs(e) = back.diagram else { unreachable!() };
        prop_assert!(diagrams_equal(&d, &e).unwrap());
        prop_assert_eq!(denote(&d).unwrap(), denote(&e).unwrap());
    }

    #[test]
    fn parallel_composition_is_valid_and_denotes_the_product(a in any::<u64>(), b in any::<u64>()) {
        let d1 = random::fs_diagram(&mut random::rng(a), 3, 2).unwrap();
        let d2 = random::fs_diagram(&mut random::rng(b), 3, 2).unwrap();
        let t = d1.tensor(&d2);
        t.topological_order().unwrap();
        let (s1, s2) = (denote(&d1).unwrap(), denote(&d2).unwrap());
        let (lhs, rhs) = (denote(&t).unwrap(), compose_par(&s1, &s2).unwrap());
        prop_assert_eq!(lhs.matrix(), rhs.matrix());
    }

    #[test]
    fn diagram_equality_is_reflexive_and_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let d1 = random::fs_diagram(&mut random::rng(a), 4, 2).unwrap();
        let d2 = random::fs_diagram(&mut random::rng(b), 4, 2).unwrap();
        prop_assert!(diagrams_equal(&d1, &d1).unwrap());
        if d1.inputs() == d2.inputs() && d1.outputs() == d2.outputs() {
            prop_assert_eq!(diagrams_equal(&d1, &d2).unwrap(), diagrams_equal(&d2, &d1).unwrap());
        }
    }

    #[test]
    fn factorization_recombines(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (a, b) = (random::carrier(&mut rng, 3), random::carrier(&mut rng, 3));
        let s = random::substochastic(&mut rng, &a, &b).unwrap();
        let (stoch, w) = substoch::factorize(&s).unwrap();
        prop_assert!(stoch.is_stochastic());
        prop_assert_eq!(substoch::recombine(&stoch, &w).unwrap(), s);
    }

    #[test]
    fn quotient_normal_form_recombines(seed in any::<u64>()) {
        let d = random::fs_diagram(&mut random::rng(seed), 5, 3).unwrap();
        let qnf = quotient_normal_form(&d).unwrap();
        prop_assert_eq!(qnf.recombine().unwrap(), denote(&d).unwrap());
        prop_assert_eq!(compose_seq(&qnf.sigma, &qnf.pi).unwrap(), denote(&d).unwrap());
    }

    #[test]
    fn partial_functions_embed_functorially(f in partial_fn(3, 2), g in partial_fn(2, 3), h in partial_fn(2, 2)) {
        let gf = PartialFn::new(
            f.dom.clone(),
            g.cod.clone(),
            f.map.iter().map(|y| y.and_then(|y| g.map[y])).collect(),
        ).unwrap();
        let lhs = from_partial_fn(&gf).unwrap();
        let rhs = compose_seq(&from_partial_fn(&g).unwrap(), &from_partial_fn(&f).unwrap()).unwrap();
        prop_assert_eq!(lhs.matrix(), rhs.matrix());
        let nh = h.cod.size().unwrap();
        let fh = PartialFn::new(
            Carrier::product([f.dom.clone(), h.dom.clone()]),
            Carrier::product([f.cod.clone(), h.cod.clone()]),
            f.map.iter().flat_map(|a| h.map.iter().map(move |b| match (a, b) {
                (Some(a), Some(b)) => Some(a * nh + b),
                _ => None,
            })).collect(),
        ).unwrap();
        let par = compose_par(&from_partial_fn(&f).unwrap(), &from_partial_fn(&h).unwrap()).unwrap();
        let whole = from_partial_fn(&fh).unwrap();
        prop_assert_eq!(whole.matrix(), par.matrix());
    }

    #[test]
    fn common_cause_split_recombines(f in function(3, 6)) {
        let f = Function::new(f.dom.clone(), Carrier::product([Carrier::range(2), Carrier::range(3)]), f.table.clone()).unwrap();
        let (l, r) = funcdyn::common_cause_split(&f).unwrap();
        let copied = funcdyn::compose(&funcdyn::product(&l, &r).unwrap(), &funcdyn::copy(&f.dom).unwrap()).unwrap();
        prop_assert_eq!(copied.table, f.table);
    }

    #[test]
    fn function_diagrams_evaluate_to_composed_tables(f in function(2, 3), g in function(3, 3), h in function(3, 2)) {
        let mut b = DiagramBuilder::new();
        let x = b.input(ci_engine::types::SystemType::inferential(Carrier::range(2)));
        let mut w = x;
        for (i, fun) in [&f, &g, &h].into_iter().enumerate() {
            let m = substoch::from_function(fun).unwrap();
            w = b.add(format!("f{i}"), FsGen::embedded(format!("f{i}"), m), &[w])[0];
        }
        let d = b.finish(&[w]).unwrap();
        let direct = funcdyn::compose(&h, &funcdyn::compose(&g, &f).unwrap()).unwrap();
        prop_assert_eq!(denote(&d).unwrap(), substoch::from_function(&direct).unwrap());
    }

    #[test]
    fn predictions_are_affine_in_knowledge(seed in any::<u64>(), num in 0i64..=4) {
        let mut rng = random::rng(seed);
        let c = random::carrier(&mut rng, 3);
        let (s1, s2) = (random::state(&mut rng, &c).unwrap(), random::state(&mut rng, &c).unwrap());
        let m = random::substochastic(&mut rng, &c, &Carrier::range(2)).unwrap();
        let lambda = q(num, 4);
        let mix: Vec<Q> = s1.probs().iter().zip(s2.probs()).map(|(a, b)| &lambda * a + (Q::from_integer(1.into()) - &lambda) * b).collect();
        let mixed = KnowledgeState::new(c.clone(), mix).unwrap();
        let model = PredictionMap::Classical(Default::default());
        let run = |s: &KnowledgeState| {
            let mut b = DiagramBuilder::new();
            let x = b.add("s", OpGen::embedded("s", s.to_map()), &[]);
            let y = b.add("m", OpGen::embedded("m", m.clone()), &x);
            predict_closed(&b.finish(&y).unwrap(), &model).unwrap().exact().unwrap().clone()
        };
        let (p1, p2, pm) = (run(&s1), run(&s2), run(&mixed));
        for k in 0..2 {
            let expect = &lambda * p1.entry(k, 0) + (Q::from_integer(1.into()) - &lambda) * p2.entry(k, 0);
            prop_assert_eq!(pm.entry(k, 0), &expect);
        }
    }

    #[test]
    fn membership_certificates_verify(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let s = nogo::Scenario::chsh();
        let p = (0..s.n_settings()).flat_map(|_| random::distribution(&mut rng, s.n_outcomes())).collect();
        let cert = nogo::fs_compatible(&nogo::Correlation::exact(s, p).unwrap()).unwrap();
        prop_assert!(cert.verify().unwrap());
    }

    #[test]
    fn rebit_embeddings_reproduce_pairings(a in 0i64..=12, b in 1i64..=12) {
        // a single extra axis at a rational angle
        let (num, den) = (a * a - b * b, a * a + b * b);
        let axes = vec![vec![q(1, 1), q(0, 1)], vec![q(num, den), q(2 * a * b, den)]];
        let frag = embed::bloch_fragment(&axes);
        if let embed::EmbedResult::Feasible(e) = embed::simplex_embed(&frag, 8).unwrap() {
            prop_assert!(e.verify(&frag));
        }
    }
}
