//! Closed-form multiplicities and the convolution-singularity arithmetic.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::frac::factorial;

fn ser_display<T: std::fmt::Display, S: Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn ser_display_seq<T: std::fmt::Display, S: Serializer>(
    v: &[T],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

/// `(mk)! / (k!)^m`: generic multiplicity of `(V_{σ^{*k}})^{⊗m}`.
pub fn krot_formula(k: u64, m: u64) -> BigUint {
    factorial(m * k) / factorial(k).pow(m as u32)
}

/// `(mk)! / ((k!)^m · m!)`: generic multiplicity of `(V_{σ^{*k}})^{⊙m}`.
pub fn sym_krot_formula(k: u64, m: u64) -> BigUint {
    krot_formula(k, m) / factorial(m)
}

/// Outcome of comparing `(m!)^n · (k!)^m` against `(mk)!`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CsCriterion {
    pub k: u64,
    pub m: u64,
    pub n: u64,
    /// `(m!)^n · (k!)^m`
    #[serde(serialize_with = "ser_display")]
    pub lhs: BigUint,
    /// `(mk)!`
    #[serde(serialize_with = "ser_display")]
    pub rhs: BigUint,
    pub holds: bool,
}

/// Whether `(m!)^n > (mk)!/(k!)^m`, i.e. whether simplicity of
/// `V_σ^{⊙mk}` forces `σ^{*k}` to be singular to every `n`-fold convolution
/// of continuous measures.
pub fn cs_criterion(k: u64, m: u64, n: u64) -> Result<CsCriterion> {
    if k == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidParameter("k, m, n must be at least 1".into()));
    }
    let lhs = factorial(m).pow(n as u32) * factorial(k).pow(m as u32);
    let rhs = factorial(m * k);
    Ok(CsCriterion {
        k,
        m,
        n,
        holds: lhs > rhs,
        lhs,
        rhs,
    })
}

/// `a_m = (m!)^{k+1} · (k!)^m / (mk)!`.
pub fn cs_sequence_term(k: u64, m: u64) -> BigRational {
    let num = factorial(m).pow((k + 1) as u32) * factorial(k).pow(m as u32);
    BigRational::new(num.into(), factorial(m * k).into())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinimalM {
    pub k: u64,
    pub m: u64,
    /// `a_1, .., a_m`.
    #[serde(serialize_with = "ser_display_seq")]
    pub sequence: Vec<BigRational>,
}

/// Smallest `m <= m_cap` with `a_m > 1`, together with `a_1 .. a_m`.
pub fn minimal_m_for_cs(k: u64, m_cap: u64) -> Result<MinimalM> {
    if k == 0 || m_cap == 0 {
        return Err(Error::InvalidParameter(
            "k and m_cap must be at least 1".into(),
        ));
    }
    let mut sequence = Vec::new();
    for m in 1..=m_cap {
        let a = cs_sequence_term(k, m);
        let done = a > BigRational::one();
        sequence.push(a);
        if done {
            return Ok(MinimalM { k, m, sequence });
        }
    }
    Err(Error::SearchExhausted {
        cap: m_cap,
        sequence: sequence.iter().map(ToString::to_string).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn formulas_match_known_values() {
        let krot: Vec<u64> = [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)]
            .iter()
            .map(|&(k, m)| krot_formula(k, m).try_into().unwrap())
            .collect();
        assert_eq!(krot, vec![2, 6, 6, 90, 20]);
        let sym: Vec<u64> = (1..=4)
            .map(|m| sym_krot_formula(2, m).try_into().unwrap())
            .collect();
        assert_eq!(sym, vec![1, 3, 15, 105]);
        assert_eq!(sym_krot_formula(3, 2), BigUint::from(10u32));
    }

    #[test]
    fn cs_criterion_examples() {
        let c = cs_criterion(1, 2, 2).unwrap();
        assert!(c.holds);
        assert_eq!(
            (c.lhs.clone(), c.rhs.clone()),
            (BigUint::from(4u32), BigUint::from(2u32))
        );
        let c = cs_criterion(2, 2, 3).unwrap();
        // (2!)^3 = 8 against 4!/(2!)^2 = 6.
        assert!(c.holds);
        assert_eq!(c.lhs, BigUint::from(32u32));
        assert_eq!(c.rhs, BigUint::from(24u32));
        assert!(!cs_criterion(2, 1, 1).unwrap().holds);
        assert!(cs_criterion(0, 1, 1).is_err());
    }

    #[test]
    fn cs_criterion_monotone_in_n() {
        for k in 1..4 {
            for m in 1..5 {
                let mut prev = false;
                for n in 1..8 {
                    let now = cs_criterion(k, m, n).unwrap().holds;
                    assert!(!prev || now, "k={k} m={m} n={n}");
                    prev = now;
                }
            }
        }
    }

    #[test]
    fn minimal_m_examples() {
        let r = minimal_m_for_cs(1, 10).unwrap();
        assert_eq!(r.m, 2);
        assert_eq!(r.sequence, vec![q(1, 1), q(2, 1)]);
        let r = minimal_m_for_cs(2, 10).unwrap();
        assert_eq!(r.m, 2);
        assert_eq!(r.sequence[1], q(4, 3));
        let r = minimal_m_for_cs(3, 10).unwrap();
        assert_eq!(r.m, 5);
        assert_eq!(r.sequence[0], q(1, 1));
        assert_eq!(r.sequence[1], q(4, 5));
        assert!(r.sequence[3] < q(1, 1));
        assert!(r.sequence[4] > q(1, 1));
        match minimal_m_for_cs(3, 3) {
            Err(Error::SearchExhausted { sequence, .. }) => assert_eq!(sequence.len(), 3),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn serializes_big_values_as_strings() {
        let v = serde_json::to_value(minimal_m_for_cs(2, 4).unwrap()).unwrap();
        assert_eq!(v["sequence"][1], "4/3");
        let v = serde_json::to_value(cs_criterion(1, 2, 2).unwrap()).unwrap();
        assert_eq!(v["lhs"], "4");
    }
}
