//! Finite atomic measures on the circle with exact positive weights.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::circle::{CirclePoint, GeneratorAllocator};
use crate::error::{Error, Result};
use crate::frac::{format_fraction, parse_fraction};

pub const DEFAULT_RELATION_CAP: u64 = 10_000_000;

/// A finite sum of point masses. Weights are strictly positive; iteration
/// follows the canonical order of [`CirclePoint`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AtomicMeasure {
    atoms: BTreeMap<CirclePoint, BigRational>,
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(point: CirclePoint) -> Self {
        Self::weighted_dirac(point, BigRational::one())
    }

    fn weighted_dirac(point: CirclePoint, weight: BigRational) -> Self {
        AtomicMeasure {
            atoms: BTreeMap::from([(point, weight)]),
        }
    }

    /// Collects atoms, merging repeated points. Rejects non-positive weights.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (CirclePoint, BigRational)>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (p, w) in atoms {
            if !w.is_positive() {
                return Err(Error::InvalidParameter(format!(
                    "atom weight must be positive, got {w} at {p}"
                )));
            }
            *out.entry(p).or_insert_with(BigRational::zero) += w;
        }
        Ok(AtomicMeasure { atoms: out })
    }

    /// Unit masses at the given points.
    pub fn uniform_on(points: impl IntoIterator<Item = CirclePoint>) -> Self {
        Self::from_atoms(points.into_iter().map(|p| (p, BigRational::one())))
            .expect("unit weights are positive")
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&CirclePoint, &BigRational)> {
        self.atoms.iter()
    }

    pub fn points(&self) -> Vec<CirclePoint> {
        self.atoms.keys().cloned().collect()
    }

    pub fn support(&self) -> BTreeSet<&CirclePoint> {
        self.atoms.keys().collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self, point: &CirclePoint) -> Option<&BigRational> {
        self.atoms.get(point)
    }

    pub fn contains(&self, point: &CirclePoint) -> bool {
        self.atoms.contains_key(point)
    }

    pub fn total_mass(&self) -> BigRational {
        self.atoms
            .values()
            .fold(BigRational::zero(), |acc, w| acc + w)
    }

    /// Rescales to a probability measure. The zero measure is returned unchanged.
    pub fn normalize(&self) -> Self {
        let mass = self.total_mass();
        if mass.is_zero() {
            return self.clone();
        }
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|(p, w)| (p.clone(), w / &mass))
                .collect(),
        }
    }

    pub fn convolve(&self, other: &AtomicMeasure) -> AtomicMeasure {
        let mut atoms: BTreeMap<CirclePoint, BigRational> = BTreeMap::new();
        for (x, wx) in &self.atoms {
            for (y, wy) in &other.atoms {
                *atoms.entry(x.mul(y)).or_insert_with(BigRational::zero) += wx * wy;
            }
        }
        AtomicMeasure { atoms }
    }

    /// `k`-fold self-convolution, `k >= 1`.
    pub fn convolve_power(&self, k: usize) -> Result<AtomicMeasure> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "convolution power must be at least 1".into(),
            ));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.convolve(self);
        }
        Ok(acc)
    }

    pub fn translate(&self, a: &CirclePoint) -> AtomicMeasure {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|(p, w)| (p.mul(a), w.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &AtomicMeasure) -> AtomicMeasure {
        let mut atoms = self.atoms.clone();
        for (p, w) in &other.atoms {
            *atoms.entry(p.clone()).or_insert_with(BigRational::zero) += w;
        }
        AtomicMeasure { atoms }
    }

    pub fn scale(&self, c: &BigRational) -> Result<AtomicMeasure> {
        if !c.is_positive() {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        Ok(AtomicMeasure {
            atoms: self.atoms.iter().map(|(p, w)| (p.clone(), w * c)).collect(),
        })
    }

    /// Largest generator index used by any atom, if any.
    pub fn max_generator(&self) -> Option<u32> {
        self.atoms
            .keys()
            .filter_map(|p| p.generic_part().keys().next_back().copied())
            .max()
    }

    /// An allocator whose generators are fresh with respect to this measure.
    pub fn fresh_allocator(&self) -> GeneratorAllocator {
        GeneratorAllocator::starting_at(self.max_generator().map_or(0, |g| g + 1))
    }
}

/// Mutual singularity of atomic measures: disjoint supports.
pub fn is_singular(mu: &AtomicMeasure, nu: &AtomicMeasure) -> bool {
    let (small, large) = if mu.len() <= nu.len() {
        (mu, nu)
    } else {
        (nu, mu)
    };
    small.atoms.keys().all(|p| !large.contains(p))
}

/// `mu << nu` for atomic measures: support inclusion.
pub fn is_absolutely_continuous(mu: &AtomicMeasure, nu: &AtomicMeasure) -> bool {
    mu.atoms.keys().all(|p| nu.contains(p))
}

/// Whether `sigma` is singular to `nus[0] * ... * nus[n-1]`.
pub fn cs_witness_check(sigma: &AtomicMeasure, nus: &[AtomicMeasure]) -> Result<bool> {
    let (first, rest) = nus
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("need at least one measure to convolve".into()))?;
    let conv = rest.iter().fold(first.clone(), |acc, nu| acc.convolve(nu));
    Ok(is_singular(sigma, &conv))
}

/// `δ_1 + σ + σ^{*2} + ... + σ^{*n}`.
pub fn product_spectral_type(sigma: &AtomicMeasure, n: usize) -> Result<AtomicMeasure> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut total = AtomicMeasure::dirac(CirclePoint::identity());
    let mut level = sigma.clone();
    for k in 1..=n {
        if k > 1 {
            level = level.convolve(sigma);
        }
        total = total.add(&level);
    }
    Ok(total)
}

/// `d` atoms at fresh generators, each of weight `1/d`.
pub fn generic_measure(d: usize, allocator: &mut GeneratorAllocator) -> Result<AtomicMeasure> {
    if d == 0 {
        return Err(Error::InvalidParameter("need at least one atom".into()));
    }
    let w = BigRational::new(1.into(), (d as i64).into());
    AtomicMeasure::from_atoms((0..d).map(|_| (allocator.fresh(), w.clone())))
}

/// A multiplicative relation `Π atom_i^{ε_i} = constant` with `ε_i = ±1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Relation {
    pub terms: Vec<(CirclePoint, i8)>,
    pub constant: CirclePoint,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |sign: i8| {
            let s: Vec<String> = self
                .terms
                .iter()
                .filter(|(_, e)| *e == sign)
                .map(|(p, _)| format!("({p})"))
                .collect();
            if s.is_empty() {
                "1".to_string()
            } else {
                s.join(" · ")
            }
        };
        if self.constant.is_identity() {
            write!(f, "{} = {}", side(1), side(-1))
        } else {
            write!(f, "{} = ({}) · {}", side(1), self.constant, side(-1))
        }
    }
}

/// Scans for multiplicative relations among the atoms: every set of at most
/// `degree` distinct atoms and signs `±1` whose signed product has no free
/// part. Each relation is reported once (first sign normalized to `+1`).
/// An empty result certifies genericity up to `degree`.
pub fn relation_scan(mu: &AtomicMeasure, degree: usize, cap: u64) -> Result<Vec<Relation>> {
    if degree < 2 {
        return Err(Error::InvalidParameter(
            "relation degree must be at least 2".into(),
        ));
    }
    let d = mu.len();
    let needed = (d as u128).checked_pow(degree as u32).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(Error::TupleCap { needed, cap });
    }
    let points = mu.points();
    let inverses: Vec<CirclePoint> = points.iter().map(CirclePoint::inv).collect();
    let mut found = Vec::new();
    for len in 1..=degree.min(d) {
        for subset in (0..d).combinations(len) {
            for mask in 0..(1u64 << (len - 1)) {
                let mut prod = points[subset[0]].clone();
                let mut terms = vec![(points[subset[0]].clone(), 1i8)];
                for (bit, &idx) in subset[1..].iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        prod = prod.mul(&inverses[idx]);
                        terms.push((points[idx].clone(), -1));
                    } else {
                        prod = prod.mul(&points[idx]);
                        terms.push((points[idx].clone(), 1));
                    }
                }
                if prod.is_torsion() {
                    found.push(Relation {
                        terms,
                        constant: prod,
                    });
                }
            }
        }
    }
    Ok(found)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureJson {
    atoms: Vec<AtomJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomJson {
    weight: String,
    #[serde(default = "zero_string")]
    rational: String,
    #[serde(default)]
    generic: BTreeMap<u32, i64>,
}

fn zero_string() -> String {
    "0".into()
}

impl AtomicMeasure {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MeasureJson = serde_json::from_str(text)?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(|a| {
                let w = parse_fraction(&a.weight)?;
                let r = parse_fraction(&a.rational)?;
                Ok((CirclePoint::new(r, a.generic), w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_atoms(atoms)
    }

    /// Canonical JSON: atoms in point order, fractions in lowest terms.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.raw_json()).expect("measure serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.raw_json()).expect("measure serializes")
    }

    fn raw_json(&self) -> MeasureJson {
        MeasureJson {
            atoms: self
                .atoms
                .iter()
                .map(|(p, w)| AtomJson {
                    weight: format_fraction(w),
                    rational: format_fraction(p.rational_part()),
                    generic: p.generic_part().clone(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for AtomicMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(p, w)| format!("{w}·δ[{p}]"))
            .collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn g(i: u32) -> CirclePoint {
        CirclePoint::generator(i)
    }

    #[test]
    fn convolve_examples() {
        let mu =
            AtomicMeasure::from_atoms([(g(0), q(1, 3)), (CirclePoint::from_ratio(1, 2), q(2, 3))])
                .unwrap();
        assert_eq!(
            AtomicMeasure::dirac(CirclePoint::identity()).convolve(&mu),
            mu
        );
        assert_eq!(
            AtomicMeasure::dirac(g(0)).convolve(&AtomicMeasure::dirac(g(1))),
            AtomicMeasure::dirac(g(0).mul(&g(1)))
        );
        let sigma = AtomicMeasure::uniform_on([g(0), g(1)]);
        let expected = AtomicMeasure::from_atoms([
            (g(0).pow(2), q(1, 1)),
            (g(0).mul(&g(1)), q(2, 1)),
            (g(1).pow(2), q(1, 1)),
        ])
        .unwrap();
        assert_eq!(sigma.convolve(&sigma), expected);
    }

    #[test]
    fn convolve_power_examples() {
        let sigma = AtomicMeasure::uniform_on([g(0), g(1)]);
        assert_eq!(sigma.convolve_power(1).unwrap(), sigma);
        assert_eq!(
            AtomicMeasure::dirac(g(0)).convolve_power(3).unwrap(),
            AtomicMeasure::dirac(g(0).pow(3))
        );
        let sq = sigma.convolve_power(2).unwrap();
        let weights: Vec<_> = sq.atoms().map(|(_, w)| w.clone()).collect();
        assert_eq!(weights.len(), 3);
        let mut sorted = weights.clone();
        sorted.sort();
        assert_eq!(sorted, vec![q(1, 1), q(1, 1), q(2, 1)]);
        assert!(sigma.convolve_power(0).is_err());
    }

    #[test]
    fn translate_examples() {
        let mu = AtomicMeasure::from_atoms([(g(0), q(1, 1)), (g(1), q(2, 1))]).unwrap();
        assert_eq!(mu.translate(&CirclePoint::identity()), mu);
        assert_eq!(
            AtomicMeasure::dirac(g(0)).translate(&g(7)),
            AtomicMeasure::dirac(g(0).mul(&g(7)))
        );
        let shifted = mu.translate(&g(9));
        assert!(is_singular(&mu, &shifted));
    }

    #[test]
    fn add_and_scale() {
        let mu = AtomicMeasure::dirac(g(0));
        assert_eq!(mu.add(&AtomicMeasure::zero()), mu);
        assert_eq!(mu.scale(&q(1, 1)).unwrap(), mu);
        let three = AtomicMeasure::from_atoms([(g(0), q(1, 1))])
            .unwrap()
            .add(&AtomicMeasure::from_atoms([(g(0), q(2, 1))]).unwrap());
        assert_eq!(three.weight(&g(0)), Some(&q(3, 1)));
        assert!(mu.scale(&q(0, 1)).is_err());
        assert!(mu.scale(&q(-1, 2)).is_err());
        assert!(AtomicMeasure::from_atoms([(g(0), q(0, 1))]).is_err());
    }

    #[test]
    fn singularity_examples() {
        let dx = AtomicMeasure::dirac(g(0));
        let dy = AtomicMeasure::dirac(g(1));
        assert!(is_singular(&dx, &dy));
        assert!(!is_singular(&dx, &dx));
        let mut alloc = GeneratorAllocator::new();
        let sigma = generic_measure(3, &mut alloc).unwrap();
        let s2 = sigma.convolve_power(2).unwrap();
        let s3 = sigma.convolve_power(3).unwrap();
        assert!(is_singular(&s2, &s3));
    }

    #[test]
    fn absolute_continuity_examples() {
        let dx = AtomicMeasure::dirac(g(0));
        let both = AtomicMeasure::uniform_on([g(0), g(1)]);
        assert!(is_absolutely_continuous(&both, &both));
        assert!(is_absolutely_continuous(&dx, &both));
        assert!(!is_absolutely_continuous(&both, &dx));
    }

    #[test]
    fn cs_witness_examples() {
        let dy = AtomicMeasure::dirac(g(1));
        let dz = AtomicMeasure::dirac(g(2));
        assert!(cs_witness_check(&AtomicMeasure::dirac(g(0)), &[dy.clone(), dz.clone()]).unwrap());
        assert!(!cs_witness_check(&AtomicMeasure::dirac(g(1).mul(&g(2))), &[dy, dz]).unwrap());
        let sigma = AtomicMeasure::uniform_on([g(0), g(1)]);
        assert!(cs_witness_check(&sigma, &[sigma.clone(), sigma.clone()]).unwrap());
        assert!(cs_witness_check(&sigma, &[]).is_err());
    }

    #[test]
    fn product_spectral_type_examples() {
        let sigma = AtomicMeasure::uniform_on([g(0), g(1)]);
        assert_eq!(
            product_spectral_type(&sigma, 1).unwrap(),
            AtomicMeasure::dirac(CirclePoint::identity()).add(&sigma)
        );
        let dx = AtomicMeasure::dirac(g(0));
        assert_eq!(
            product_spectral_type(&dx, 2).unwrap(),
            AtomicMeasure::uniform_on([CirclePoint::identity(), g(0), g(0).pow(2)])
        );
        assert_eq!(product_spectral_type(&sigma, 2).unwrap().len(), 6);
        assert!(product_spectral_type(&sigma, 0).is_err());
    }

    #[test]
    fn generic_measure_examples() {
        let mut alloc = GeneratorAllocator::new();
        let one = generic_measure(1, &mut alloc).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.total_mass(), q(1, 1));
        let three = generic_measure(3, &mut alloc).unwrap();
        assert_eq!(three.len(), 3);
        assert!(three.atoms().all(|(_, w)| *w == q(1, 3)));
        assert!(is_singular(&one, &three));
        let five = generic_measure(5, &mut alloc).unwrap();
        assert!(relation_scan(&five, 4, DEFAULT_RELATION_CAP)
            .unwrap()
            .is_empty());
        assert!(generic_measure(0, &mut alloc).is_err());
    }

    #[test]
    fn relation_scan_finds_designed_product_relation() {
        let (x, y, z) = (g(0), g(1), g(2));
        let w = x.mul(&y).mul(&z.inv());
        let mu = AtomicMeasure::uniform_on([x.clone(), y.clone(), z.clone(), w.clone()]);
        assert!(relation_scan(&mu, 3, DEFAULT_RELATION_CAP)
            .unwrap()
            .is_empty());
        let rels = relation_scan(&mu, 4, DEFAULT_RELATION_CAP).unwrap();
        assert_eq!(rels.len(), 1);
        let rel = &rels[0];
        assert!(rel.constant.is_identity());
        let mut signs: Vec<(CirclePoint, i8)> = rel.terms.clone();
        signs.sort();
        let mut expected = vec![(x, 1), (y, 1), (z, -1), (w, -1)];
        expected.sort();
        // Relations are reported up to a global sign flip.
        let flipped: Vec<_> = expected.iter().map(|(p, e)| (p.clone(), -e)).collect();
        assert!(signs == expected || signs == flipped);
    }

    #[test]
    fn relation_scan_reports_rational_constant() {
        let x = g(0);
        let xa = x.mul(&CirclePoint::from_ratio(1, 2));
        let mu = AtomicMeasure::uniform_on([x.clone(), xa.clone()]);
        let rels = relation_scan(&mu, 2, DEFAULT_RELATION_CAP).unwrap();
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].constant, CirclePoint::from_ratio(1, 2));
    }

    #[test]
    fn relation_scan_cap_and_degree() {
        let mut alloc = GeneratorAllocator::new();
        let mu = generic_measure(10, &mut alloc).unwrap();
        assert!(matches!(
            relation_scan(&mu, 4, 1000),
            Err(Error::TupleCap { .. })
        ));
        assert!(relation_scan(&mu, 1, 1000).is_err());
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let text = r#"{"atoms":[{"weight":"1/4","rational":"1/3","generic":{"0":1,"3":-2}},{"weight":"3/4","rational":"0","generic":{}}]}"#;
        let mu = AtomicMeasure::from_json(text).unwrap();
        let canonical = mu.to_json();
        assert_eq!(
            AtomicMeasure::from_json(&canonical).unwrap().to_json(),
            canonical
        );
        // The torsion-free atom with rational 0 sorts first.
        assert!(canonical.starts_with(r#"{"atoms":[{"weight":"3/4","rational":"0","generic":{}}"#));
    }

    #[test]
    fn json_rejects_malformed() {
        assert!(AtomicMeasure::from_json(r#"{"atoms":[{"weight":"0.25"}]}"#).is_err());
        assert!(AtomicMeasure::from_json(r#"{"atoms":[{"weight":"-1/4"}]}"#).is_err());
        assert!(AtomicMeasure::from_json(r#"{"atoms":[{"weight":"1/4","extra":1}]}"#).is_err());
        assert!(matches!(AtomicMeasure::from_json("{"), Err(Error::Json(_))));
    }

    fn arb_measure() -> impl Strategy<Value = AtomicMeasure> {
        proptest::collection::vec(((0i64..6, 1i64..6), (0u32..3, -2i64..3), 1i64..5), 0..4)
            .prop_map(|atoms| {
                AtomicMeasure::from_atoms(
                    atoms.into_iter().map(|((p, d), (gi, e), w)| {
                        (CirclePoint::new(q(p, d), [(gi, e)]), q(w, 1))
                    }),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn convolution_algebra(a in arb_measure(), b in arb_measure(), c in arb_measure()) {
            prop_assert_eq!(a.convolve(&b), b.convolve(&a));
            prop_assert_eq!(a.convolve(&b).convolve(&c), a.convolve(&b.convolve(&c)));
            let unit = AtomicMeasure::dirac(CirclePoint::identity());
            prop_assert_eq!(a.convolve(&unit), a.clone());
            prop_assert_eq!(a.convolve(&b).total_mass(), a.total_mass() * b.total_mass());
            prop_assert_eq!(a.add(&b).total_mass(), a.total_mass() + b.total_mass());
        }

        #[test]
        fn json_canonical_round_trip(a in arb_measure()) {
            let text = a.to_json();
            let back = AtomicMeasure::from_json(&text).unwrap();
            prop_assert_eq!(&back, &a);
            prop_assert_eq!(back.to_json(), text);
        }

        #[test]
        fn generic_levels_are_disjoint(d in 1usize..4, k in 1usize..4, l in 1usize..4) {
            prop_assume!(k != l);
            let mut alloc = GeneratorAllocator::new();
            let sigma = generic_measure(d, &mut alloc).unwrap();
            let sk = sigma.convolve_power(k).unwrap();
            let sl = sigma.convolve_power(l).unwrap();
            prop_assert!(is_singular(&sk, &sl));
            prop_assert!(sk.points().iter().all(|p| p.total_degree() == k as i64));
        }

        #[test]
        fn singular_excludes_continuity_on_equal_support(a in arb_measure()) {
            prop_assume!(!a.is_empty());
            let b = a.scale(&q(3, 2)).unwrap();
            prop_assert!(is_absolutely_continuous(&a, &b));
            prop_assert!(!is_singular(&a, &b));
        }
    }
}
