//! Finite sets and total functions: the classical causal theory.

use crate::error::{Error, Result};
use crate::types::{cap, Carrier};

/// A total function between finite carriers, stored as its table of image indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Function {
    pub dom: Carrier,
    pub cod: Carrier,
    pub table: Vec<usize>,
}

impl Function {
    pub fn new(dom: Carrier, cod: Carrier, table: Vec<usize>) -> Result<Self> {
        let n = dom.size()?;
        let m = cod.size()?;
        if table.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "table has {} entries for a domain of {n}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|&&y| y >= m) {
            return Err(Error::Invalid(format!("image {bad} outside codomain of size {m}")));
        }
        Ok(Function { dom, cod, table })
    }

    pub fn identity(c: Carrier) -> Result<Self> {
        let n = c.size()?;
        Function::new(c.clone(), c, (0..n).collect())
    }

    pub fn constant(dom: Carrier, cod: Carrier, y: usize) -> Result<Self> {
        let n = dom.size()?;
        Function::new(dom, cod, vec![y; n])
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    /// `self` after `inner`.
    pub fn after(&self, inner: &Function) -> Result<Function> {
        compose(self, inner)
    }
}

/// `outer ∘ inner`.
pub fn compose(outer: &Function, inner: &Function) -> Result<Function> {
    if inner.cod != outer.dom {
        return Err(Error::CarrierMismatch(format!(
            "cannot apply a function on {} after one landing in {}",
            outer.dom, inner.cod
        )));
    }
    let table = inner.table.iter().map(|&y| outer.table[y]).collect();
    Ok(Function {
        dom: inner.dom.clone(),
        cod: outer.cod.clone(),
        table,
    })
}

/// Cartesian product `f × g`.
pub fn product(f: &Function, g: &Function) -> Result<Function> {
    let dom = Carrier::product([f.dom.clone(), g.dom.clone()]);
    let cod = Carrier::product([f.cod.clone(), g.cod.clone()]);
    let ng = g.dom.size()?;
    let mg = g.cod.size()?;
    let total = dom.size()?;
    let mut table = Vec::with_capacity(total);
    for x in 0..f.table.len() {
        for y in 0..ng {
            table.push(f.table[x] * mg + g.table[y]);
        }
    }
    Function::new(dom, cod, table)
}

/// `λ ↦ (λ, λ)`.
pub fn copy(c: &Carrier) -> Result<Function> {
    let n = c.size()?;
    Function::new(
        c.clone(),
        Carrier::product([c.clone(), c.clone()]),
        (0..n).map(|x| x * n + x).collect(),
    )
}

/// The unique function to the trivial system.
pub fn discard(c: &Carrier) -> Result<Function> {
    Function::constant(c.clone(), Carrier::unit(), 0)
}

/// `|Hom(dom, cod)| = |cod|^|dom|`, refusing sets above the enumeration cap.
pub fn homset_size(dom: &Carrier, cod: &Carrier) -> Result<usize> {
    Carrier::hom(dom.clone(), cod.clone()).size()
}

/// Position of a function in the enumerated hom-set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HomIndex {
    pub dom: Carrier,
    pub cod: Carrier,
    pub index: usize,
}

impl HomIndex {
    pub fn carrier(&self) -> Carrier {
        Carrier::hom(self.dom.clone(), self.cod.clone())
    }
}

/// Base-`|cod|` positional encoding; the image of the first domain element is
/// the most significant digit.
pub fn index(f: &Function) -> Result<HomIndex> {
    homset_size(&f.dom, &f.cod)?;
    let m = f.cod.size()?;
    let index = f.table.iter().fold(0usize, |acc, &y| acc * m + y);
    Ok(HomIndex {
        dom: f.dom.clone(),
        cod: f.cod.clone(),
        index,
    })
}

pub fn unindex(h: &HomIndex) -> Result<Function> {
    let size = homset_size(&h.dom, &h.cod)?;
    if h.index >= size {
        return Err(Error::Invalid(format!("index {} outside hom-set of size {size}", h.index)));
    }
    let n = h.dom.size()?;
    let m = h.cod.size()?;
    let mut table = vec![0; n];
    let mut rest = h.index;
    for slot in table.iter_mut().rev() {
        *slot = rest % m;
        rest /= m;
    }
    Function::new(h.dom.clone(), h.cod.clone(), table)
}

/// Every function `dom -> cod`, in index order.
pub fn enumerate(dom: &Carrier, cod: &Carrier) -> Result<Vec<Function>> {
    let size = homset_size(dom, cod)?;
    (0..size)
        .map(|index| {
            unindex(&HomIndex {
                dom: dom.clone(),
                cod: cod.clone(),
                index,
            })
        })
        .collect()
}

/// Splits `F: Λ -> Λ′ × Λ″` into its two components, so `F(λ) = (f_l(λ), f_r(λ))`.
/// A codomain with more than two factors is split as first factor and the rest.
pub fn common_cause_split(f: &Function) -> Result<(Function, Function)> {
    let factors = f.cod.factors();
    if factors.len() < 2 {
        return Err(Error::CarrierMismatch(format!(
            "codomain {} is not a product",
            f.cod
        )));
    }
    let left = factors[0].clone();
    let right = Carrier::product(factors[1..].to_vec());
    let nr = right.size()?;
    let lt = f.table.iter().map(|&y| y / nr).collect();
    let rt = f.table.iter().map(|&y| y % nr).collect();
    Ok((
        Function::new(f.dom.clone(), left, lt)?,
        Function::new(f.dom.clone(), right, rt)?,
    ))
}

/// `(f, λ) ↦ f(λ)` on `Hom(dom, cod) × dom`.
pub fn universal_control(dom: &Carrier, cod: &Carrier) -> Result<Function> {
    let hom = Carrier::hom(dom.clone(), cod.clone());
    let h = hom.size()?;
    let n = dom.size()?;
    let limit = cap();
    let total = h
        .checked_mul(n)
        .filter(|t| *t <= limit)
        .ok_or_else(|| Error::cap("universal control table", h as u128 * n as u128, limit))?;
    let mut table = Vec::with_capacity(total);
    for fi in 0..h {
        let f = unindex(&HomIndex {
            dom: dom.clone(),
            cod: cod.clone(),
            index: fi,
        })?;
        table.extend(f.table.iter().copied());
    }
    Function::new(Carrier::product([hom, dom.clone()]), cod.clone(), table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit() -> Carrier {
        Carrier::bit()
    }

    fn flip() -> Function {
        Function::new(bit(), bit(), vec![1, 0]).unwrap()
    }

    #[test]
    fn identity_is_left_unit() {
        let f = Function::new(Carrier::range(3), bit(), vec![1, 0, 1]).unwrap();
        let id = Function::identity(bit()).unwrap();
        assert_eq!(compose(&id, &f).unwrap(), f);
    }

    #[test]
    fn flip_twice_is_identity() {
        assert_eq!(compose(&flip(), &flip()).unwrap(), Function::identity(bit()).unwrap());
    }

    #[test]
    fn compose_checks_carriers() {
        let f = Function::identity(Carrier::range(3)).unwrap();
        assert!(matches!(compose(&flip(), &f), Err(Error::CarrierMismatch(_))));
    }

    #[test]
    fn product_of_constants_is_constant_pair() {
        let a = Function::constant(bit(), Carrier::range(3), 2).unwrap();
        let b = Function::constant(bit(), bit(), 1).unwrap();
        let p = product(&a, &b).unwrap();
        // (2, 1) in a 3x2 product is index 5
        assert!(p.table.iter().all(|&y| y == 5));
        assert_eq!(p.dom.size().unwrap(), 4);
    }

    #[test]
    fn copy_then_discard_left_is_identity() {
        let c = Carrier::range(3);
        let cp = copy(&c).unwrap();
        let left_discard = product(&discard(&c).unwrap(), &Function::identity(c.clone()).unwrap()).unwrap();
        // cod of left_discard is * x c which flattens to c
        let back = compose(&left_discard, &cp).unwrap();
        assert_eq!(back.table, vec![0, 1, 2]);
    }

    #[test]
    fn copy_on_singleton_is_unique_map() {
        let c = Carrier::range(1);
        assert_eq!(copy(&c).unwrap().table, vec![0]);
        assert_eq!(homset_size(&c, &Carrier::product([c.clone(), c.clone()])).unwrap(), 1);
    }

    #[test]
    fn copy_is_coassociative_and_cocommutative() {
        for n in 1..=4 {
            let c = Carrier::range(n);
            let id = Function::identity(c.clone()).unwrap();
            let cp = copy(&c).unwrap();
            let left = compose(&product(&cp, &id).unwrap(), &cp).unwrap();
            let right = compose(&product(&id, &cp).unwrap(), &cp).unwrap();
            assert_eq!(left.table, right.table);
            // swap ∘ copy = copy
            let swapped: Vec<usize> = cp.table.iter().map(|&y| (y % n) * n + y / n).collect();
            assert_eq!(swapped, cp.table);
        }
    }

    #[test]
    fn hom_counting_and_index() {
        assert_eq!(homset_size(&bit(), &bit()).unwrap(), 4);
        for f in enumerate(&bit(), &bit()).unwrap() {
            assert_eq!(unindex(&index(&f).unwrap()).unwrap(), f);
        }
        assert_eq!(index(&flip()).unwrap().index, 2);
        assert_eq!(index(&Function::identity(bit()).unwrap()).unwrap().index, 1);
    }

    #[test]
    fn hom_cap_is_enforced() {
        let big = Carrier::range(8);
        assert!(matches!(homset_size(&big, &big), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn split_copy_and_constants() {
        let c = Carrier::range(3);
        let (l, r) = common_cause_split(&copy(&c).unwrap()).unwrap();
        assert_eq!(l, Function::identity(c.clone()).unwrap());
        assert_eq!(r, Function::identity(c).unwrap());

        let cod = Carrier::product([bit(), Carrier::range(3)]);
        let f = Function::constant(bit(), cod, 3 + 2).unwrap();
        let (l, r) = common_cause_split(&f).unwrap();
        assert_eq!(l.table, vec![1, 1]);
        assert_eq!(r.table, vec![2, 2]);
    }

    #[test]
    fn split_recomposes_exhaustively() {
        let cod = Carrier::product([bit(), bit()]);
        for f in enumerate(&bit(), &cod).unwrap() {
            let (l, r) = common_cause_split(&f).unwrap();
            for x in 0..2 {
                assert_eq!(f.apply(x), l.apply(x) * 2 + r.apply(x));
            }
        }
    }

    #[test]
    fn universal_control_looks_up_tables() {
        let u = universal_control(&bit(), &bit()).unwrap();
        for f in enumerate(&bit(), &bit()).unwrap() {
            let fi = index(&f).unwrap().index;
            for x in 0..2 {
                assert_eq!(u.apply(fi * 2 + x), f.apply(x));
            }
        }
        let id = index(&Function::identity(bit()).unwrap()).unwrap().index;
        assert_eq!((u.apply(id * 2), u.apply(id * 2 + 1)), (0, 1));
        for y in 0..2 {
            let k = index(&Function::constant(bit(), bit(), y).unwrap()).unwrap().index;
            assert_eq!((u.apply(k * 2), u.apply(k * 2 + 1)), (y, y));
        }
    }
}
