//! Multiplicity engine for tensor powers of atomic spectral models.
//!
//! For an atomic measure `σ` with atoms `a_0, .., a_{d-1}`, the operator
//! `V_σ^{⊗n}` is diagonal in the basis of atom tuples, with eigenvalue the
//! coordinate product. The multiplicity of the restriction to `G`-invariant
//! tensors at an eigenvalue `z` is the number of `G`-orbits on the tuples of
//! the fiber over `z`. [`multiplicity`] counts orbits directly;
//! [`matrix_oracle`] computes the rank of the averaging projection on each
//! fiber block instead.

mod checks;
mod formulas;

pub use checks::*;
pub use formulas::*;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measure::AtomicMeasure;
use crate::permgroup::{next_permutation, PermSubgroup, SubgroupDescriptor, DEFAULT_DEGREE_CAP};

pub const DEFAULT_TUPLE_CAP: u64 = 10_000_000;
pub const DEFAULT_MATRIX_CAP: u64 = 4096;

/// Enumeration limits. Exceeding one is an error, never a truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    pub tuple_cap: u64,
    pub matrix_cap: u64,
    pub degree_cap: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            tuple_cap: DEFAULT_TUPLE_CAP,
            matrix_cap: DEFAULT_MATRIX_CAP,
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }
}

impl Caps {
    pub fn check_tuples(&self, d: usize, n: usize) -> Result<u64> {
        let needed = tuple_count(d, n);
        if needed > self.tuple_cap as u128 {
            return Err(Error::TupleCap {
                needed,
                cap: self.tuple_cap,
            });
        }
        Ok(needed as u64)
    }

    pub fn check_matrix(&self, d: usize, n: usize) -> Result<u64> {
        let needed = tuple_count(d, n);
        if needed > self.matrix_cap as u128 {
            return Err(Error::MatrixCap {
                needed,
                cap: self.matrix_cap,
            });
        }
        Ok(needed as u64)
    }
}

fn tuple_count(d: usize, n: usize) -> u128 {
    u32::try_from(n)
        .ok()
        .and_then(|n| (d as u128).checked_pow(n))
        .unwrap_or(u128::MAX)
}

/// Sorted list of atom indices.
pub type Multiset = Vec<u16>;

/// All atom tuples over one eigenvalue, grouped by underlying multiset.
#[derive(Clone, Debug)]
pub struct FiberClass {
    pub eigenvalue: CirclePoint,
    pub multisets: Vec<Multiset>,
}

impl FiberClass {
    /// Number of ordered tuples in the fiber.
    pub fn tuple_count(&self) -> u64 {
        self.multisets.iter().map(arrangement_count).sum()
    }

    /// Every ordered tuple, multiset by multiset, each in lexicographic order.
    pub fn tuples(&self) -> Vec<Multiset> {
        self.multisets.iter().flat_map(arrangements).collect()
    }

    /// One multiset of `n` pairwise distinct atoms, and no other multiset
    /// with the same product.
    pub fn is_generic(&self) -> bool {
        self.multisets.len() == 1 && self.multisets[0].windows(2).all(|w| w[0] != w[1])
    }

    /// The partition of the fiber's tuples into `G`-orbits.
    pub fn orbits(&self, group: &PermSubgroup) -> Vec<Vec<Multiset>> {
        let mut out = Vec::new();
        for m in &self.multisets {
            let mut seen: HashSet<Multiset> = HashSet::new();
            for t in arrangements(m) {
                if seen.contains(&t) {
                    continue;
                }
                let mut orbit: Vec<Multiset> = group
                    .elements()
                    .iter()
                    .map(|pi| pi.permute(&t))
                    .filter(|u| seen.insert(u.clone()))
                    .collect();
                orbit.sort();
                out.push(orbit);
            }
        }
        out
    }

    pub fn orbit_count(&self, group: &PermSubgroup) -> u64 {
        let n = group.degree();
        let mut buf = vec![0u16; n];
        let mut total = 0;
        for m in &self.multisets {
            let mut seen: HashSet<Multiset> = HashSet::new();
            for t in arrangements(m) {
                if seen.contains(&t) {
                    continue;
                }
                total += 1;
                for pi in group.elements() {
                    pi.permute_into(&t, &mut buf);
                    if !seen.contains(&buf) {
                        seen.insert(buf.clone());
                    }
                }
            }
        }
        total
    }
}

fn arrangements(m: &Multiset) -> Vec<Multiset> {
    let mut cur = m.clone();
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    out
}

fn arrangement_count(m: &Multiset) -> u64 {
    let mut count = crate::frac::factorial_u64(m.len() as u64);
    for (_, group) in &m.iter().chunk_by(|&&x| x) {
        count /= crate::frac::factorial_u64(group.count() as u64);
    }
    count
}

/// The fibers of the coordinate-product map on `supp(σ)^n`.
#[derive(Clone, Debug)]
pub struct FiberSet {
    pub power: usize,
    pub atoms: Vec<CirclePoint>,
    pub fibers: Vec<FiberClass>,
}

impl FiberSet {
    pub fn multiset_points(&self, m: &Multiset) -> Vec<CirclePoint> {
        m.iter().map(|&i| self.atoms[i as usize].clone()).collect()
    }

    pub fn fiber(&self, z: &CirclePoint) -> Option<&FiberClass> {
        self.fibers
            .binary_search_by(|f| f.eigenvalue.cmp(z))
            .ok()
            .map(|i| &self.fibers[i])
    }
}

/// Groups the `n`-tuples of atoms of `σ` by their coordinate product.
/// Fibers come out in eigenvalue order, multisets in lexicographic order.
pub fn fibers(sigma: &AtomicMeasure, n: usize, caps: &Caps) -> Result<FiberSet> {
    caps.check_tuples(sigma.len(), n)?;
    enumerate_fibers(sigma, n)
}

/// [`fibers`] capped by the number of multisets `C(d+n-1, n)` instead of the
/// number of tuples. Only multisets are ever materialized, so this is the
/// bound that matters when no per-tuple work follows.
pub fn multiset_fibers(sigma: &AtomicMeasure, n: usize, caps: &Caps) -> Result<FiberSet> {
    let needed = multiset_count(sigma.len(), n);
    if needed > caps.tuple_cap as u128 {
        return Err(Error::TupleCap {
            needed,
            cap: caps.tuple_cap,
        });
    }
    enumerate_fibers(sigma, n)
}

fn multiset_count(d: usize, n: usize) -> u128 {
    if d == 0 {
        return u128::from(n == 0);
    }
    let mut acc: u128 = 1;
    for i in 0..n as u128 {
        acc = match acc.checked_mul(d as u128 + i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn enumerate_fibers(sigma: &AtomicMeasure, n: usize) -> Result<FiberSet> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "tensor power must be at least 1".into(),
        ));
    }
    let atoms = sigma.points();
    if atoms.len() > u16::MAX as usize {
        return Err(Error::InvalidParameter("too many atoms".into()));
    }
    let mut grouped: BTreeMap<CirclePoint, Vec<Multiset>> = BTreeMap::new();
    // Depth-first over non-decreasing index sequences, carrying prefix products.
    let mut stack: Vec<(Multiset, CirclePoint)> = vec![(Vec::new(), CirclePoint::identity())];
    while let Some((prefix, prod)) = stack.pop() {
        if prefix.len() == n {
            grouped.entry(prod).or_default().push(prefix);
            continue;
        }
        let start = prefix.last().copied().unwrap_or(0);
        for i in (start..atoms.len() as u16).rev() {
            let mut next = prefix.clone();
            next.push(i);
            stack.push((next, prod.mul(&atoms[i as usize])));
        }
    }
    let fibers = grouped
        .into_iter()
        .map(|(eigenvalue, mut multisets)| {
            multisets.sort();
            FiberClass {
                eigenvalue,
                multisets,
            }
        })
        .collect();
    Ok(FiberSet {
        power: n,
        atoms,
        fibers,
    })
}

/// Multiplicity function of a tensor power restricted to invariant tensors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiplicityReport {
    pub power: usize,
    pub subgroup: SubgroupDescriptor,
    pub entries: BTreeMap<CirclePoint, u64>,
    pub generic_value: Option<u64>,
    pub generic_fibers: usize,
    pub homogeneous_on_generic: bool,
    pub degenerate: Vec<(CirclePoint, u64)>,
    pub tuple_total: u64,
}

impl MultiplicityReport {
    fn assemble(fs: &FiberSet, group: &PermSubgroup, counts: Vec<u64>) -> Self {
        let mut entries = BTreeMap::new();
        let mut degenerate = Vec::new();
        let mut generic_values = Vec::new();
        let mut tuple_total = 0;
        for (fiber, count) in fs.fibers.iter().zip(counts) {
            tuple_total += fiber.tuple_count();
            entries.insert(fiber.eigenvalue.clone(), count);
            if fiber.is_generic() {
                generic_values.push(count);
            } else {
                degenerate.push((fiber.eigenvalue.clone(), count));
            }
        }
        let homogeneous = !generic_values.is_empty() && generic_values.iter().all_equal();
        MultiplicityReport {
            power: fs.power,
            subgroup: group.descriptor(),
            entries,
            generic_value: homogeneous.then(|| generic_values[0]),
            generic_fibers: generic_values.len(),
            homogeneous_on_generic: homogeneous,
            degenerate,
            tuple_total,
        }
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.entries.values().copied().max().unwrap_or(0)
    }

    pub fn multiplicity_set(&self) -> std::collections::BTreeSet<u64> {
        self.entries.values().copied().collect()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "power {}  subgroup {} (order {})  tuples {}",
            self.power, self.subgroup.label, self.subgroup.order, self.tuple_total
        );
        let generic = match self.generic_value {
            Some(v) => v.to_string(),
            None => "-".into(),
        };
        let _ = writeln!(
            out,
            "generic fibers {}  generic value {}  homogeneous {}",
            self.generic_fibers, generic, self.homogeneous_on_generic
        );
        let degenerate: HashSet<&CirclePoint> = self.degenerate.iter().map(|(z, _)| z).collect();
        let width = self
            .entries
            .keys()
            .map(|z| z.to_string().len())
            .max()
            .unwrap_or(10)
            .max(10);
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  kind",
            "eigenvalue", "multiplicity"
        );
        for (z, m) in &self.entries {
            let kind = if degenerate.contains(z) {
                "degenerate"
            } else {
                "generic"
            };
            let _ = writeln!(out, "{:<width$}  {:>12}  {kind}", z.to_string(), m);
        }
        out
    }
}

fn check_degree(group: &PermSubgroup, n: usize) -> Result<()> {
    if group.degree() != n {
        return Err(Error::DegreeMismatch {
            expected: n,
            got: group.degree(),
        });
    }
    Ok(())
}

/// Orbit-count multiplicity of `V_σ^{⊗n}` on `G`-invariant tensors.
pub fn multiplicity(
    sigma: &AtomicMeasure,
    n: usize,
    group: &PermSubgroup,
    caps: &Caps,
) -> Result<MultiplicityReport> {
    check_degree(group, n)?;
    let fs = fibers(sigma, n, caps)?;
    Ok(multiplicity_on(&fs, group))
}

/// [`multiplicity`] over precomputed fibers.
pub fn multiplicity_on(fs: &FiberSet, group: &PermSubgroup) -> MultiplicityReport {
    let counts: Vec<u64> = fs.fibers.par_iter().map(|f| f.orbit_count(group)).collect();
    MultiplicityReport::assemble(fs, group, counts)
}

/// Multiplicities as ranks of the averaging projection `(1/#G) Σ U_π`, built
/// exactly in the atom-tuple basis and restricted to each fiber block.
pub fn matrix_oracle(
    sigma: &AtomicMeasure,
    n: usize,
    group: &PermSubgroup,
    caps: &Caps,
) -> Result<MultiplicityReport> {
    check_degree(group, n)?;
    caps.check_matrix(sigma.len(), n)?;
    let fs = fibers(sigma, n, caps)?;
    let ranks = fs
        .fibers
        .par_iter()
        .map(|f| projection_rank(f, group))
        .collect::<Result<Vec<u64>>>()?;
    Ok(MultiplicityReport::assemble(&fs, group, ranks))
}

fn projection_rank(fiber: &FiberClass, group: &PermSubgroup) -> Result<u64> {
    let basis = fiber.tuples();
    let index: HashMap<&Multiset, usize> = basis.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let weight = BigRational::new(1.into(), (group.order() as i64).into());
    let mut block = Matrix::zeros(basis.len(), basis.len());
    for (col, t) in basis.iter().enumerate() {
        for pi in group.elements() {
            let moved = pi.permute(t);
            let row = *index
                .get(&moved)
                .ok_or_else(|| Error::Invariant("coordinate permutation left the fiber".into()))?;
            block[(row, col)] += &weight;
        }
    }
    let square = &block * &block;
    if square != block {
        return Err(Error::Invariant(format!(
            "averaging operator is not idempotent on fiber {}",
            fiber.eigenvalue
        )));
    }
    debug_assert!(block.row_sums().iter().all(|s| !s.is_zero()));
    Ok(block.rank() as u64)
}

/// Whether `V_σ^{⊙n}` has simple spectrum: every product of `n` atoms
/// determines the atom multiset.
pub fn simple_spectrum(sigma: &AtomicMeasure, n: usize, caps: &Caps) -> Result<bool> {
    let fs = fibers(sigma, n, caps)?;
    Ok(fs.fibers.iter().all(|f| f.multisets.len() == 1))
}
