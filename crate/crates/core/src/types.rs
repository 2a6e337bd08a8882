//! Wire types: finite carriers, hom-set carriers and the causal/inferential split.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Default limit on enumerated states (hom-sets, composite wires, vertex lists).
pub const DEFAULT_CAP: usize = 1_000_000;

static CAP: AtomicUsize = AtomicUsize::new(DEFAULT_CAP);

/// Current enumeration cap.
pub fn cap() -> usize {
    CAP.load(Ordering::Relaxed)
}

/// Overrides the enumeration cap for the whole process.
pub fn set_cap(value: usize) {
    CAP.store(value, Ordering::Relaxed);
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Carrier {
    /// Ordered finite set of labels.
    Finite(Vec<String>),
    /// The set of functions `dom -> cod`, indexed positionally in base `|cod|`
    /// with the image of the first domain element as the most significant digit.
    Hom(Box<Carrier>, Box<Carrier>),
    /// Cartesian product in declared order; `Product(vec![])` is the trivial system.
    Product(Vec<Carrier>),
    /// Operational system without a concrete carrier; `dim` is its quantum dimension.
    Abstract { name: String, dim: Option<usize> },
}

impl Carrier {
    pub fn finite<S: ToString>(labels: impl IntoIterator<Item = S>) -> Self {
        Carrier::Finite(labels.into_iter().map(|s| s.to_string()).collect())
    }

    /// Carrier `{0, 1, ..., n-1}`.
    pub fn range(n: usize) -> Self {
        Carrier::finite(0..n)
    }

    pub fn bit() -> Self {
        Carrier::range(2)
    }

    pub fn unit() -> Self {
        Carrier::Product(Vec::new())
    }

    pub fn hom(dom: Carrier, cod: Carrier) -> Self {
        Carrier::Hom(Box::new(dom), Box::new(cod))
    }

    /// Flattening product: nested products are spliced and a single factor is unwrapped.
    pub fn product(factors: impl IntoIterator<Item = Carrier>) -> Self {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                Carrier::Product(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Carrier::Product(flat)
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Carrier::Product(v) if v.is_empty())
    }

    pub fn is_abstract(&self) -> bool {
        match self {
            Carrier::Abstract { .. } => true,
            Carrier::Product(fs) => fs.iter().any(Carrier::is_abstract),
            Carrier::Hom(a, b) => a.is_abstract() || b.is_abstract(),
            Carrier::Finite(_) => false,
        }
    }

    /// Factors of a product, or the carrier itself.
    pub fn factors(&self) -> Vec<Carrier> {
        match self {
            Carrier::Product(fs) => fs.clone(),
            other => vec![other.clone()],
        }
    }

    /// Number of states, refusing anything above the enumeration cap.
    pub fn size(&self) -> Result<usize> {
        let limit = cap();
        let n = self.size_u128()?;
        if n > limit as u128 {
            return Err(Error::cap(format!("carrier {self}"), n, limit));
        }
        Ok(n as usize)
    }

    fn size_u128(&self) -> Result<u128> {
        const OVER: u128 = u64::MAX as u128;
        Ok(match self {
            Carrier::Finite(l) => l.len() as u128,
            Carrier::Product(fs) => {
                let mut n: u128 = 1;
                for f in fs {
                    n = n.saturating_mul(f.size_u128()?).min(OVER);
                }
                n
            }
            Carrier::Hom(d, c) => {
                let d = d.size_u128()?;
                let c = c.size_u128()?;
                if d > 64 && c > 1 {
                    OVER
                } else {
                    let mut n: u128 = 1;
                    for _ in 0..d {
                        n = n.saturating_mul(c).min(OVER);
                    }
                    n
                }
            }
            Carrier::Abstract { name, dim } => match dim {
                Some(d) => *d as u128,
                None => {
                    return Err(Error::Invalid(format!(
                        "abstract system `{name}` has no concrete carrier"
                    )))
                }
            },
        })
    }

    /// Human-readable label of state `i`.
    pub fn label(&self, i: usize) -> String {
        match self {
            Carrier::Finite(l) => l.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
            Carrier::Abstract { .. } => format!("{i}"),
            Carrier::Product(fs) => {
                let digits = self.unrank(i);
                let parts: Vec<String> = fs
                    .iter()
                    .zip(digits)
                    .map(|(f, d)| f.label(d))
                    .collect();
                format!("({})", parts.join(","))
            }
            Carrier::Hom(d, c) => {
                let (Ok(dn), Ok(cn)) = (d.size(), c.size()) else {
                    return format!("#{i}");
                };
                let mut rest = i;
                let mut images = vec![String::new(); dn];
                for slot in images.iter_mut().rev() {
                    *slot = c.label(rest % cn.max(1));
                    rest /= cn.max(1);
                }
                format!("[{}]", images.join(" "))
            }
        }
    }

    /// Row-major digits of a product index (first factor most significant).
    pub fn unrank(&self, mut i: usize) -> Vec<usize> {
        let fs = self.factors();
        let sizes: Vec<usize> = fs.iter().map(|f| f.size().unwrap_or(1)).collect();
        let mut digits = vec![0; fs.len()];
        for k in (0..fs.len()).rev() {
            let s = sizes[k].max(1);
            digits[k] = i % s;
            i /= s;
        }
        digits
    }

    pub fn rank(&self, digits: &[usize]) -> usize {
        let fs = self.factors();
        let mut i = 0;
        for (f, d) in fs.iter().zip(digits) {
            i = i * f.size().unwrap_or(1) + d;
        }
        i
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Carrier::Finite(l) => write!(f, "{{{}}}", l.join(",")),
            Carrier::Hom(d, c) => write!(f, "Hom({d},{c})"),
            Carrier::Product(fs) if fs.is_empty() => write!(f, "*"),
            Carrier::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|c| c.to_string()).collect();
                write!(f, "{}", parts.join("x"))
            }
            Carrier::Abstract { name, dim: Some(d) } => write!(f, "{name}[{d}]"),
            Carrier::Abstract { name, dim: None } => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Causal,
    Inferential,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemType {
    pub kind: Kind,
    pub carrier: Carrier,
    /// Only meaningful for causal systems of operational theories.
    pub classical: bool,
}

impl SystemType {
    pub fn causal(carrier: Carrier) -> Self {
        SystemType {
            kind: Kind::Causal,
            carrier,
            classical: false,
        }
    }

    pub fn classical(carrier: Carrier) -> Self {
        SystemType {
            kind: Kind::Causal,
            carrier,
            classical: true,
        }
    }

    pub fn inferential(carrier: Carrier) -> Self {
        SystemType {
            kind: Kind::Inferential,
            carrier,
            classical: false,
        }
    }

    pub fn is_causal(&self) -> bool {
        self.kind == Kind::Causal
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == Kind::Inferential && self.carrier.is_abstract() {
            return Err(Error::TypeMismatch(format!(
                "inferential system {} needs a concrete finite carrier",
                self.carrier
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match (self.kind, self.classical) {
            (Kind::Inferential, _) => "inf",
            (Kind::Causal, true) => "cl",
            (Kind::Causal, false) => "ca",
        };
        write!(f, "{tag}:{}", self.carrier)
    }
}
