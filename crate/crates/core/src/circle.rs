//! Exact points of the circle group.
//!
//! A point is `e^{2πi r} · Π g_i^{e_i}` where `r ∈ Q/Z` and the `g_i` are free
//! generators with no multiplicative relation among them. The free part is
//! what stands in for a point drawn from a continuous measure: two products of
//! generators coincide only when their exponent vectors do.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::frac::{frac_part, parse_fraction};

/// Ordering is lexicographic on the rational part, then on the sorted
/// `(generator, exponent)` support.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CirclePoint {
    rational: BigRational,
    generic: BTreeMap<u32, i64>,
}

impl CirclePoint {
    pub fn identity() -> Self {
        CirclePoint {
            rational: BigRational::zero(),
            generic: BTreeMap::new(),
        }
    }

    /// `e^{2πi r}`; `r` is reduced mod 1.
    pub fn rational(r: BigRational) -> Self {
        CirclePoint {
            rational: frac_part(&r),
            generic: BTreeMap::new(),
        }
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Self::rational(BigRational::new(p.into(), q.into()))
    }

    pub fn generator(index: u32) -> Self {
        CirclePoint {
            rational: BigRational::zero(),
            generic: BTreeMap::from([(index, 1)]),
        }
    }

    /// Builds a point from raw parts, dropping zero exponents.
    pub fn new(rational: BigRational, generic: impl IntoIterator<Item = (u32, i64)>) -> Self {
        let mut map = BTreeMap::new();
        for (g, e) in generic {
            *map.entry(g).or_insert(0) += e;
        }
        map.retain(|_, e| *e != 0);
        CirclePoint {
            rational: frac_part(&rational),
            generic: map,
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn generic_part(&self) -> &BTreeMap<u32, i64> {
        &self.generic
    }

    pub fn is_identity(&self) -> bool {
        self.rational.is_zero() && self.generic.is_empty()
    }

    /// True when the point has no free-generator component (a root of unity).
    pub fn is_torsion(&self) -> bool {
        self.generic.is_empty()
    }

    /// Sum of generator exponents. Multiplicative on products, so points of
    /// `σ^{*k}` for a measure on single generators all have degree `k`.
    pub fn total_degree(&self) -> i64 {
        self.generic.values().sum()
    }

    pub fn mul(&self, other: &CirclePoint) -> CirclePoint {
        let mut generic = self.generic.clone();
        for (&g, &e) in &other.generic {
            let slot = generic.entry(g).or_insert(0);
            *slot += e;
            if *slot == 0 {
                generic.remove(&g);
            }
        }
        let mut rational = &self.rational + &other.rational;
        if rational >= BigRational::one() {
            rational -= BigRational::one();
        }
        CirclePoint { rational, generic }
    }

    pub fn inv(&self) -> CirclePoint {
        let rational = if self.rational.is_zero() {
            BigRational::zero()
        } else {
            BigRational::one() - &self.rational
        };
        CirclePoint {
            rational,
            generic: self.generic.iter().map(|(&g, &e)| (g, -e)).collect(),
        }
    }

    pub fn pow(&self, k: i64) -> CirclePoint {
        if k == 0 {
            return CirclePoint::identity();
        }
        let rational = frac_part(&(&self.rational * BigRational::from_integer(k.into())));
        CirclePoint {
            rational,
            generic: self.generic.iter().map(|(&g, &e)| (g, e * k)).collect(),
        }
    }
}

impl Default for CirclePoint {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn cp_mul(a: &CirclePoint, b: &CirclePoint) -> CirclePoint {
    a.mul(b)
}

pub fn cp_inv(a: &CirclePoint) -> CirclePoint {
    a.inv()
}

pub fn cp_pow(a: &CirclePoint, k: i64) -> CirclePoint {
    a.pow(k)
}

pub fn cp_compare(a: &CirclePoint, b: &CirclePoint) -> std::cmp::Ordering {
    a.cmp(b)
}

pub fn product<'a>(points: impl IntoIterator<Item = &'a CirclePoint>) -> CirclePoint {
    points
        .into_iter()
        .fold(CirclePoint::identity(), |acc, p| acc.mul(p))
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1");
        }
        let mut factors = Vec::with_capacity(self.generic.len() + 1);
        if !self.rational.is_zero() {
            factors.push(self.rational.to_string());
        }
        for (g, e) in &self.generic {
            factors.push(format!("g{g}^{e}"));
        }
        f.write_str(&factors.join(" * "))
    }
}

impl FromStr for CirclePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rational = BigRational::zero();
        let mut generic = Vec::new();
        for token in s.split('*') {
            let token = token.trim();
            if let Some(rest) = token.strip_prefix('g') {
                let (idx, exp) = match rest.split_once('^') {
                    Some((i, e)) => (i, e),
                    None => (rest, "1"),
                };
                let idx: u32 = idx
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad generator index in {token:?}")))?;
                let exp: i64 = exp
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {token:?}")))?;
                generic.push((idx, exp));
            } else {
                rational += parse_fraction(token)?;
            }
        }
        Ok(CirclePoint::new(rational, generic))
    }
}

impl Serialize for CirclePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CirclePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hands out fresh generator indices. Confine one allocator to one
/// construction context; indices are never reused.
#[derive(Debug, Default)]
pub struct GeneratorAllocator {
    next_index: u32,
}

impl GeneratorAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts issuing at `first`, e.g. past the generators of a parsed measure.
    pub fn starting_at(first: u32) -> Self {
        GeneratorAllocator { next_index: first }
    }

    pub fn fresh(&mut self) -> CirclePoint {
        let g = self.next_index;
        self.next_index += 1;
        CirclePoint::generator(g)
    }

    pub fn next_index(&self) -> u32 {
        self.next_index
    }
}
