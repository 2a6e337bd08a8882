//! Classical realist representations of operational theories: every procedure
//! is sent to a distribution over functions between ontic carriers.

use std::collections::BTreeMap;

use super::{denote, FsDiagram, FsGen};
use crate::diagrams::Diagram;
use crate::error::{Error, Result};
use crate::optheory::{op_equivalent, OpDiagram, OpGen, PredictionMap};
use crate::rational::Q;
use crate::substoch::SubstochMap;
use crate::tensor::Matrix;
use crate::types::{Carrier, SystemType};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RealistRep {
    /// Ontic carrier of each non-classical system, by name. Classical systems
    /// are represented by their own carrier.
    pub ontic: BTreeMap<String, Carrier>,
    /// Distribution over `Hom(Λ_in, Λ_out)` for each procedure.
    pub xi: BTreeMap<String, Vec<Q>>,
}

impl RealistRep {
    pub fn ontic_carrier(&self, t: &SystemType) -> Result<Carrier> {
        match &t.carrier {
            Carrier::Abstract { name, .. } => self
                .ontic
                .get(name)
                .cloned()
                .ok_or_else(|| Error::MissingXi(format!("ontic carrier for system `{name}`"))),
            Carrier::Product(fs) if fs.iter().any(Carrier::is_abstract) => Err(Error::ConfigError(format!(
                "composite carrier {} must be split into separate wires",
                t.carrier
            ))),
            other => Ok(other.clone()),
        }
    }

    fn retype(&self, t: &SystemType) -> Result<SystemType> {
        if t.is_causal() {
            Ok(SystemType::causal(self.ontic_carrier(t)?))
        } else {
            Ok(t.clone())
        }
    }

    /// `Ξ` restricted to one procedure list, as a stochastic map.
    fn xi_map(&self, procs: &[String], hom: &Carrier, procs_carrier: Carrier) -> Result<SubstochMap> {
        let h = hom.size()?;
        let mut m = Matrix::zeros(h, procs.len());
        for (p, name) in procs.iter().enumerate() {
            let col = self
                .xi
                .get(name)
                .ok_or_else(|| Error::MissingXi(format!("procedure `{name}`")))?;
            if col.len() != h {
                return Err(Error::DimensionMismatch(format!(
                    "Ξ for `{name}` has {} entries, {hom} has {h}",
                    col.len()
                )));
            }
            for (f, v) in col.iter().enumerate() {
                m.set(f, p, v.clone());
            }
        }
        let map = SubstochMap::new(procs_carrier, hom.clone(), m)?;
        if !map.is_stochastic() {
            return Err(Error::WeightError("Ξ columns must be probability distributions".into()));
        }
        Ok(map)
    }
}

/// The image of an operational diagram: knowledge about procedures is pushed
/// through `Ξ` into knowledge about functional dynamics.
pub fn apply_representation(rep: &RealistRep, d: &OpDiagram) -> Result<FsDiagram> {
    d.substitute(
        |node| match &node.gen {
            OpGen::Knowledge(ps) => {
                let dom = ps.inputs.iter().map(|t| rep.ontic_carrier(t)).collect::<Result<Vec<_>>>()?;
                let cod = ps.outputs.iter().map(|t| rep.ontic_carrier(t)).collect::<Result<Vec<_>>>()?;
                let hom = FsGen::hom_carrier(&dom, &cod);
                let xi = rep.xi_map(&ps.procedures, &hom, ps.carrier())?;
                let mut b = crate::diagrams::DiagramBuilder::new();
                let k = b.input(SystemType::inferential(ps.carrier()));
                let ins: Vec<_> = dom.iter().map(|c| b.input(SystemType::causal(c.clone()))).collect();
                let h = b.add(format!("{}.xi", node.id), FsGen::embedded("xi", xi), &[k]);
                let mut feeds = h;
                feeds.extend(ins);
                let outs = b.add(node.id.clone(), FsGen::knowledge(dom, cod), &feeds);
                b.finish(&outs)
            }
            OpGen::PropGain(t) => {
                if !t.classical {
                    return Err(Error::PropositionOnNonclassical(t.to_string()));
                }
                Ok(Diagram::single(node.id.clone(), FsGen::gain(rep.ontic_carrier(t)?)))
            }
            OpGen::Ignore(t) => Ok(Diagram::single(node.id.clone(), FsGen::ignore(rep.ontic_carrier(t)?))),
            OpGen::Embedded {
                name,
                inputs,
                outputs,
                map,
            } => Ok(Diagram::single(
                node.id.clone(),
                FsGen::embedded_ports(name.clone(), inputs.clone(), outputs.clone(), map.clone())?,
            )),
        },
        |t| rep.retype(t),
    )
}

/// Checks that every supplied operationally equivalent pair stays
/// inferentially equivalent under the representation.
pub fn is_leibnizian(rep: &RealistRep, pairs: &[(OpDiagram, OpDiagram)], p: &PredictionMap) -> Result<bool> {
    for (i, (a, b)) in pairs.iter().enumerate() {
        if !op_equivalent(a, b, p)? {
            return Err(Error::PairNotEquivalent(format!("pair {i}")));
        }
    }
    for (a, b) in pairs {
        let (ra, rb) = (apply_representation(rep, a)?, apply_representation(rep, b)?);
        if denote(&ra)? != denote(&rb)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::DiagramBuilder;
    use crate::fstheory::predict;
    use crate::funcdyn::{index, Function};
    use crate::optheory::{predict_closed, ClassicalModel, ProcSet};
    use crate::rational::{q, qi};
    use crate::substoch::{from_function, map_from_ints, KnowledgeState};

    fn bit() -> Carrier {
        Carrier::bit()
    }

    fn cbit() -> SystemType {
        SystemType::classical(bit())
    }

    fn point_xi(f: &Function) -> Vec<Q> {
        let h = index(f).unwrap();
        let mut v = vec![qi(0); h.carrier().size().unwrap()];
        v[h.index] = qi(1);
        v
    }

    /// Procedures on a classical bit: identity, flip, reset to 0, reset to 1.
    fn bit_fragment() -> (ClassicalModel, RealistRep) {
        let mut model = ClassicalModel::default();
        let mut rep = RealistRep::default();
        for (name, table) in [("id", vec![0, 1]), ("flip", vec![1, 0]), ("r0", vec![0, 0]), ("r1", vec![1, 1])] {
            let f = Function::new(bit(), bit(), table).unwrap();
            model.procedures.insert(name.into(), from_function(&f).unwrap());
            rep.xi.insert(name.into(), point_xi(&f));
        }
        for (name, y) in [("prep0", 0), ("prep1", 1)] {
            let f = Function::constant(Carrier::unit(), bit(), y).unwrap();
            model.procedures.insert(name.into(), from_function(&f).unwrap());
            rep.xi.insert(name.into(), point_xi(&f));
        }
        (model, rep)
    }

    /// `σ` over preparations, then `τ` over channels, then read the bit.
    fn experiment(preps: &[Q], chans: &[Q]) -> OpDiagram {
        let prep = ProcSet::new(vec![], vec![cbit()], vec!["prep0".into(), "prep1".into()]).unwrap();
        let chan = ProcSet::new(vec![cbit()], vec![cbit()], ["id", "flip", "r0", "r1"].map(String::from).to_vec()).unwrap();
        let mut b = DiagramBuilder::new();
        let s = b.add("s", OpGen::embedded("s", KnowledgeState::new(prep.carrier(), preps.to_vec()).unwrap().to_map()), &[]);
        let x = b.add("prep", OpGen::Knowledge(prep), &s);
        let t = b.add("t", OpGen::embedded("t", KnowledgeState::new(chan.carrier(), chans.to_vec()).unwrap().to_map()), &[]);
        let y = b.add("chan", OpGen::Knowledge(chan), &[t[0], x[0]]);
        let g = b.add("g", OpGen::prop_gain(cbit()).unwrap(), &y);
        b.add("i", OpGen::Ignore(cbit()), &[g[0]]);
        b.finish(&[g[1]]).unwrap()
    }

    #[test]
    fn identity_procedure_represents_identity_channel() {
        let ps = ProcSet::new(vec![cbit()], vec![cbit()], vec!["id".into()]).unwrap();
        let (_, rep) = bit_fragment();
        let d = Diagram::single("k", OpGen::Knowledge(ps));
        let image = apply_representation(&rep, &d).unwrap();
        let s = denote(&image).unwrap();
        // one procedure, so the knowledge input is trivial in size
        assert_eq!(s.matrix(), SubstochMap::identity(bit()).unwrap().matrix());
    }

    #[test]
    fn representation_reproduces_predictions() {
        let (model, rep) = bit_fragment();
        let p = PredictionMap::Classical(model);
        for (preps, chans) in [
            (vec![q(1, 3), q(2, 3)], vec![q(1, 4), q(1, 4), q(1, 4), q(1, 4)]),
            (vec![qi(1), qi(0)], vec![qi(0), qi(1), qi(0), qi(0)]),
            (vec![q(1, 2), q(1, 2)], vec![q(1, 2), qi(0), q(1, 2), qi(0)]),
        ] {
            let d = experiment(&preps, &chans);
            let op = predict_closed(&d, &p).unwrap();
            let fs = predict(&apply_representation(&rep, &d).unwrap()).unwrap();
            assert_eq!(op.exact().unwrap(), &fs);
        }
    }

    #[test]
    fn ignoring_commutes_with_representation() {
        let (_, rep) = bit_fragment();
        let chan = ProcSet::new(vec![cbit()], vec![cbit()], ["id", "flip", "r0", "r1"].map(String::from).to_vec()).unwrap();
        let mut b = DiagramBuilder::new();
        let (k, x) = (b.input(SystemType::inferential(chan.carrier())), b.input(cbit()));
        let y = b.add("chan", OpGen::Knowledge(chan.clone()), &[k, x]);
        b.add("i", OpGen::Ignore(cbit()), &y);
        let image = apply_representation(&rep, &b.finish(&[]).unwrap()).unwrap();
        let marg = map_from_ints(chan.carrier(), Carrier::unit(), &[&[1, 1, 1, 1]], 1).unwrap();
        let expected = crate::substoch::compose_par(&marg, &crate::substoch::discard(&bit()).unwrap()).unwrap();
        assert_eq!(denote(&image).unwrap().matrix(), expected.matrix());
    }

    #[test]
    fn missing_xi_reported() {
        let (_, mut rep) = bit_fragment();
        rep.xi.remove("flip");
        let d = experiment(&[qi(1), qi(0)], &[qi(1), qi(0), qi(0), qi(0)]);
        assert!(matches!(apply_representation(&rep, &d), Err(Error::MissingXi(_))));
    }

    #[test]
    fn leibnizian_checks() {
        let (model, rep) = bit_fragment();
        let p = PredictionMap::Classical(model);
        assert!(is_leibnizian(&rep, &[], &p).unwrap());
        // the randomizing channel two ways, on a fixed input
        let uniform_a = experiment(&[qi(1), qi(0)], &[qi(0), qi(0), q(1, 2), q(1, 2)]);
        let uniform_b = experiment(&[qi(1), qi(0)], &[q(1, 2), q(1, 2), qi(0), qi(0)]);
        assert!(is_leibnizian(&rep, &[(uniform_a.clone(), uniform_b.clone())], &p).unwrap());

        // reset-to-1 sent to reset-to-0 splits the equivalent pair apart
        let mut skewed = rep.clone();
        skewed.xi.insert("r1".into(), point_xi(&Function::new(bit(), bit(), vec![0, 0]).unwrap()));
        assert!(!is_leibnizian(&skewed, &[(uniform_a.clone(), uniform_b)], &p).unwrap());

        let distinct = experiment(&[qi(0), qi(1)], &[qi(1), qi(0), qi(0), qi(0)]);
        assert!(matches!(
            is_leibnizian(&rep, &[(uniform_a, distinct)], &p),
            Err(Error::PairNotEquivalent(_))
        ));
    }
}
