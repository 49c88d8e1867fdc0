//! Exact rational helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

/// Exact rational number used throughout certification.
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
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

/// Formats as `p/q` in lowest terms, always with a denominator.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed rational {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `p/q` or a bare integer `p`.
pub fn parse_q(s: &str) -> Result<Q, ParseRationalError> {
    let bad = || ParseRationalError(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Q::from_integer(n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for (n, d) in [(1, 2), (-3, 7), (0, 1), (4, 2), (5, -10)] {
            let x = q(n, d);
            assert_eq!(parse_q(&fmt_q(&x)).unwrap(), x);
        }
        assert_eq!(fmt_q(&q(4, 2)), "2/1");
        assert_eq!(parse_q("3").unwrap(), qi(3));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }
}
