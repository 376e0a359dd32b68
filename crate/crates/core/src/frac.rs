//! Fraction strings and small big-integer helpers shared across modules.

use num_bigint::BigInt;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Parses `"p/q"` or `"p"` into a reduced rational. Decimal notation is rejected.
pub fn parse_fraction(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("malformed fraction {s:?}"));
    let int = |t: &str| -> Result<BigInt> {
        let t = t.trim();
        let digits = t.strip_prefix('-').unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        t.parse::<BigInt>().map_err(|_| bad())
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let q = int(q)?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(int(p)?, q))
        }
        None => Ok(BigRational::from_integer(int(s)?)),
    }
}

/// Canonical text of a rational: `"p/q"` in lowest terms, `"p"` for integers.
pub fn format_fraction(r: &BigRational) -> String {
    r.to_string()
}

/// Reduces into `[0, 1)`.
pub fn frac_part(r: &BigRational) -> BigRational {
    r - r.floor()
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn factorial_u64(n: u64) -> u64 {
    (1..=n).product()
}
