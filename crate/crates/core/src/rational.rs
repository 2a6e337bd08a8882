//! Exact rational helpers shared by every exact module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Rounds `x` to the nearest multiple of `1/denom` (ties away from zero).
pub fn rationalize(x: f64, denom: u64) -> Result<Q> {
    if !x.is_finite() {
        return Err(Error::Invalid(format!("cannot rationalize {x}")));
    }
    let scaled = (x * denom as f64).round();
    let n = BigInt::from(scaled as i128);
    Ok(Q::new(n, BigInt::from(denom)))
}

/// Exact value of a binary float.
pub fn from_f64_exact(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::Invalid(format!("cannot represent {x} exactly")))
}

/// `p/q` or `p` form; never a decimal.
pub fn format(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse(s: &str) -> Result<Q> {
    let bad = || Error::Invalid(format!("not a rational: `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() || d.is_negative() {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

pub fn in_unit_interval(x: &Q) -> bool {
    !x.is_negative() && *x <= Q::one()
}
