//! Executable forms of the multiplicity statements: block subgroups, symmetric
//! powers of convolution powers, translate singularity, non-simplicity of
//! `σ + σ*δ_a`, amplification `q -> q²`, and monotone simplicity.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use serde::Serialize;

use super::{
    fibers, matrix_oracle, multiplicity, multiplicity_on, multiset_fibers, Caps, FiberSet,
    MultiplicityReport,
};
use crate::circle::{CirclePoint, GeneratorAllocator};
use crate::error::{Error, Result};
use crate::frac::factorial_u64;
use crate::measure::{generic_measure, is_singular, AtomicMeasure};
use crate::permgroup::{krot_subgroup, sym_krot_subgroup, PermSubgroup};

use super::formulas::{krot_formula, sym_krot_formula};

/// Multiplicities of `(V_{σ^{*k}})^{⊗m}` (or its symmetric power) for a
/// generic `σ`, computed by two or three independent routes.
#[derive(Clone, Debug, Serialize)]
pub struct KrotReport {
    pub k: usize,
    pub m: usize,
    pub d: usize,
    pub symmetric: bool,
    /// Closed form: `(mk)!/(k!)^m`, divided by `m!` in the symmetric case.
    pub formula: u64,
    /// Value on generic fibers from counting tuples of `k`-multisets.
    pub generic_value: Option<u64>,
    pub generic_fibers: usize,
    pub homogeneous_on_generic: bool,
    /// From orbit counting of the block subgroup on `σ^{⊗mk}`, when in cap.
    pub subgroup_generic_value: Option<u64>,
    /// From projection ranks, when the dimension is within the matrix cap.
    pub matrix_generic_value: Option<u64>,
    pub subgroup_agrees: Option<bool>,
    pub matrix_agrees: Option<bool>,
    pub degenerate: Vec<(CirclePoint, u64)>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

/// [`check_krot`] with the symmetric power: counts unordered families of
/// `m` blocks.
pub fn check_sym_krot(k: usize, m: usize, d: usize, caps: &Caps) -> Result<KrotReport> {
    krot_check(k, m, d, true, caps)
}

/// Generic multiplicity of `(V_{σ^{*k}})^{⊗m}` for `σ` with `d` generic atoms,
/// against `(mk)!/(k!)^m`, cross-checked through the block subgroup of
/// `S(mk)` and, within the matrix cap, through projection ranks.
pub fn check_krot(k: usize, m: usize, d: usize, caps: &Caps) -> Result<KrotReport> {
    krot_check(k, m, d, false, caps)
}

fn krot_check(k: usize, m: usize, d: usize, symmetric: bool, caps: &Caps) -> Result<KrotReport> {
    if k == 0 || m == 0 || d == 0 {
        return Err(Error::InvalidParameter("k, m, d must be at least 1".into()));
    }
    let mut alloc = GeneratorAllocator::new();
    let sigma = generic_measure(d, &mut alloc)?;
    krot_check_on(&sigma, k, m, symmetric, caps)
}

fn krot_check_on(
    sigma: &AtomicMeasure,
    k: usize,
    m: usize,
    symmetric: bool,
    caps: &Caps,
) -> Result<KrotReport> {
    let d = sigma.len();
    let mk = m * k;
    let mut warnings = Vec::new();
    if d < mk {
        warnings.push(format!(
            "d = {d} < mk = {mk}: no product of mk distinct atoms, so no generic fiber exists"
        ));
    }
    let formula_big = if symmetric {
        sym_krot_formula(k as u64, m as u64)
    } else {
        krot_formula(k as u64, m as u64)
    };
    let formula = formula_big
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("formula value overflows u64".into()))?;

    // Route 1: tuples of points of σ^{*k}.
    let level = sigma.convolve_power(k)?;
    let level_group = if symmetric {
        PermSubgroup::symmetric(m, caps.degree_cap.max(m))?
    } else {
        PermSubgroup::trivial(m)
    };
    let level_report = multiplicity(&level, m, &level_group, caps)?;

    // Generic eigenvalues are the products of mk distinct atoms of σ.
    let base = multiset_fibers(sigma, mk, caps)?;
    let generic: BTreeSet<&CirclePoint> = base
        .fibers
        .iter()
        .filter(|f| f.is_generic())
        .map(|f| &f.eigenvalue)
        .collect();
    let (generic_value, generic_fibers, homogeneous) = generic_summary(&level_report, &generic);
    let degenerate: Vec<(CirclePoint, u64)> = level_report
        .entries
        .iter()
        .filter(|(z, _)| !generic.contains(z))
        .map(|(z, c)| (z.clone(), *c))
        .collect();

    // Route 2: orbits of the block subgroup on mk-tuples of atoms of σ.
    let block_group = if mk <= caps.degree_cap && caps.check_tuples(d, mk).is_ok() {
        Some(if symmetric {
            sym_krot_subgroup(k, m, caps.degree_cap)?
        } else {
            krot_subgroup(k, m, caps.degree_cap)?
        })
    } else {
        None
    };
    let subgroup_report = block_group.as_ref().map(|g| multiplicity_on(&base, g));
    let subgroup_agrees = subgroup_report
        .as_ref()
        .map(|r| r.entries == level_report.entries);

    // Route 3: ranks of the averaging projection.
    let matrix_report = match &block_group {
        Some(g) if caps.check_matrix(d, mk).is_ok() => Some(matrix_oracle(sigma, mk, g, caps)?),
        _ => None,
    };
    let matrix_agrees = match (&matrix_report, &subgroup_report) {
        (Some(a), Some(b)) => Some(a.entries == b.entries),
        _ => None,
    };

    let passed = generic_fibers > 0
        && homogeneous
        && generic_value == Some(formula)
        && subgroup_agrees != Some(false)
        && matrix_agrees != Some(false);
    Ok(KrotReport {
        k,
        m,
        d,
        symmetric,
        formula,
        generic_value,
        generic_fibers,
        homogeneous_on_generic: homogeneous,
        subgroup_generic_value: subgroup_report.as_ref().and_then(|r| r.generic_value),
        matrix_generic_value: matrix_report.as_ref().and_then(|r| r.generic_value),
        subgroup_agrees,
        matrix_agrees,
        degenerate,
        warnings,
        passed,
    })
}

fn generic_summary(
    report: &MultiplicityReport,
    generic: &BTreeSet<&CirclePoint>,
) -> (Option<u64>, usize, bool) {
    let values: Vec<u64> = report
        .entries
        .iter()
        .filter(|(z, _)| generic.contains(z))
        .map(|(_, c)| *c)
        .collect();
    let homogeneous = !values.is_empty() && values.iter().all(|v| *v == values[0]);
    (homogeneous.then(|| values[0]), values.len(), homogeneous)
}

/// Generic multiplicities of `(V_{σ^{*k}})^{⊙m}` for `m = 1..=m_max`.
#[derive(Clone, Debug, Serialize)]
pub struct FockReport {
    pub k: usize,
    pub m_max: usize,
    pub d: usize,
    pub levels: Vec<KrotReport>,
    pub multiplicities: BTreeSet<u64>,
    /// Supports of `σ^{*km}` are pairwise disjoint across `m`.
    pub levels_disjoint: bool,
    pub passed: bool,
}

pub fn fock_multiplicity_set(k: usize, m_max: usize, d: usize, caps: &Caps) -> Result<FockReport> {
    if k == 0 || m_max == 0 {
        return Err(Error::InvalidParameter(
            "k and m_max must be at least 1".into(),
        ));
    }
    if d < k * m_max {
        return Err(Error::InvalidParameter(format!(
            "need d >= k * m_max = {}, got d = {d}",
            k * m_max
        )));
    }
    let mut alloc = GeneratorAllocator::new();
    let sigma = generic_measure(d, &mut alloc)?;
    let levels = (1..=m_max)
        .map(|m| krot_check_on(&sigma, k, m, true, caps))
        .collect::<Result<Vec<_>>>()?;
    let supports = (1..=m_max)
        .map(|m| sigma.convolve_power(k * m))
        .collect::<Result<Vec<_>>>()?;
    let mut levels_disjoint = true;
    for i in 0..supports.len() {
        for j in i + 1..supports.len() {
            levels_disjoint &= is_singular(&supports[i], &supports[j]);
        }
    }
    let multiplicities = levels.iter().filter_map(|l| l.generic_value).collect();
    let passed = levels_disjoint && levels.iter().all(|l| l.passed);
    Ok(FockReport {
        k,
        m_max,
        d,
        levels,
        multiplicities,
        levels_disjoint,
        passed,
    })
}

/// Whether `σ^{*n} ⊥ σ^{*m} * δ_a`.
pub fn check_translate_singularity(
    sigma: &AtomicMeasure,
    n: usize,
    m: usize,
    a: &CirclePoint,
    caps: &Caps,
) -> Result<bool> {
    caps.check_tuples(sigma.len(), n.max(m))?;
    let left = sigma.convolve_power(n)?;
    let right = sigma.convolve_power(m)?.translate(a);
    Ok(is_singular(&left, &right))
}

/// A fiber of the symmetric square with more than one orbit.
#[derive(Clone, Debug, Serialize)]
pub struct FiberWitness {
    pub eigenvalue: CirclePoint,
    pub multisets: Vec<Vec<CirclePoint>>,
}

impl FiberWitness {
    fn from_fiber(fs: &FiberSet, idx: usize) -> Self {
        let f = &fs.fibers[idx];
        FiberWitness {
            eigenvalue: f.eigenvalue.clone(),
            multisets: f
                .multisets
                .iter()
                .map(|ms| fs.multiset_points(ms))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NonsimpleReport {
    pub sigma_atoms: usize,
    pub tau_atoms: usize,
    /// `supp(τ) ∩ supp(τ * δ_a)`.
    pub overlap: Vec<CirclePoint>,
    pub square_simple: bool,
    pub witness: Option<FiberWitness>,
    pub note: Option<String>,
    pub passed: bool,
}

/// Builds `τ = σ + σ*δ_a` and exhibits both obstructions to simplicity of
/// `V_τ^{⊙2}`: `τ*δ_a` is not singular to `τ`, and the symmetric square has a
/// fiber with two orbits (`x·(y·a) = (x·a)·y`).
pub fn nonsimple_counterexample(
    sigma: &AtomicMeasure,
    a: &CirclePoint,
    caps: &Caps,
) -> Result<NonsimpleReport> {
    if sigma.is_empty() {
        return Err(Error::InvalidParameter(
            "σ must have at least one atom".into(),
        ));
    }
    if a.is_identity() {
        return Err(Error::InvalidParameter(
            "translation a must differ from 1".into(),
        ));
    }
    let shifted = sigma.translate(a);
    if !is_singular(sigma, &shifted) {
        return Err(Error::InvalidParameter(
            "a relates atoms of σ: σ and σ*δ_a share an atom".into(),
        ));
    }
    let tau = sigma.add(&shifted);
    let tau_shifted = tau.translate(a);
    let overlap: Vec<CirclePoint> = tau
        .points()
        .into_iter()
        .filter(|p| tau_shifted.contains(p))
        .collect();
    let fs = fibers(&tau, 2, caps)?;
    let witness = fs
        .fibers
        .iter()
        .position(|f| f.multisets.len() >= 2)
        .map(|i| FiberWitness::from_fiber(&fs, i));
    let square_simple = witness.is_none();
    let (note, passed) = if sigma.len() >= 2 {
        (None, !square_simple && !overlap.is_empty())
    } else {
        (
            Some("σ has a single atom; the two-orbit fiber needs at least two σ-atoms".into()),
            square_simple && !overlap.is_empty(),
        )
    };
    Ok(NonsimpleReport {
        sigma_atoms: sigma.len(),
        tau_atoms: tau.len(),
        overlap,
        square_simple,
        witness,
        note,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GirsanovReport {
    pub n: usize,
    /// Largest symmetric multiplicity at level `n`.
    pub q: u64,
    /// Level-`n` fibers the construction starts from.
    pub seeds: Vec<FiberWitness>,
    pub construction: String,
    /// The level-`2n` eigenvalue reached and its symmetric multiplicity.
    pub eigenvalue: Option<CirclePoint>,
    pub orbit_count: u64,
    /// Witness multisets at level `2n` (unions `x_i ∪ y_j` when built from
    /// the product construction).
    pub witnesses: Vec<Vec<CirclePoint>>,
    /// Sets of symmetric multiplicities at levels 1, n and 2n.
    pub level_multiplicities: BTreeMap<usize, BTreeSet<u64>>,
    pub passed: bool,
}

/// From the maximal symmetric multiplicity `q` at level `n`, finds a level-`2n`
/// eigenvalue with at least `q²` orbits. The candidate `s·s'` from the two
/// highest-multiplicity level-`n` eigenvalues is tried first, then a full scan.
pub fn girsanov_step(sigma: &AtomicMeasure, n: usize, caps: &Caps) -> Result<GirsanovReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("level n must be at least 1".into()));
    }
    caps.check_tuples(sigma.len(), 2 * n)?;
    let level1 = fibers(sigma, 1, caps)?;
    let level_n = fibers(sigma, n, caps)?;
    let level_2n = fibers(sigma, 2 * n, caps)?;
    let counts = |fs: &FiberSet| -> BTreeSet<u64> {
        fs.fibers.iter().map(|f| f.multisets.len() as u64).collect()
    };
    let mut level_multiplicities = BTreeMap::new();
    level_multiplicities.insert(1, counts(&level1));
    level_multiplicities.insert(n, counts(&level_n));
    level_multiplicities.insert(2 * n, counts(&level_2n));

    let q = level_n
        .fibers
        .iter()
        .map(|f| f.multisets.len() as u64)
        .max()
        .unwrap_or(0);
    let max_2n = level_2n
        .fibers
        .iter()
        .map(|f| f.multisets.len() as u64)
        .max()
        .unwrap_or(0);
    if q <= 1 {
        return Ok(GirsanovReport {
            n,
            q,
            seeds: Vec::new(),
            construction: "trivial".into(),
            eigenvalue: None,
            orbit_count: max_2n,
            witnesses: Vec::new(),
            level_multiplicities,
            passed: true,
        });
    }
    let target = q * q;

    // Highest multiplicity first; ties in eigenvalue order.
    let mut ranked: Vec<usize> = (0..level_n.fibers.len()).collect();
    ranked.sort_by(|&a, &b| {
        let fa = &level_n.fibers[a];
        let fb = &level_n.fibers[b];
        fb.multisets
            .len()
            .cmp(&fa.multisets.len())
            .then_with(|| fa.eigenvalue.cmp(&fb.eigenvalue))
    });
    if let [i, j, ..] = ranked[..] {
        let (s, t) = (&level_n.fibers[i], &level_n.fibers[j]);
        let product = s.eigenvalue.mul(&t.eigenvalue);
        let mut unions: Vec<Vec<u16>> = Vec::new();
        for x in &s.multisets {
            for y in &t.multisets {
                let mut u: Vec<u16> = x.iter().chain(y).copied().collect();
                u.sort_unstable();
                unions.push(u);
            }
        }
        let distinct: BTreeSet<&Vec<u16>> = unions.iter().collect();
        let reached = level_2n
            .fiber(&product)
            .map_or(0, |f| f.multisets.len() as u64);
        if distinct.len() as u64 >= target && reached >= target {
            return Ok(GirsanovReport {
                n,
                q,
                seeds: vec![
                    FiberWitness::from_fiber(&level_n, i),
                    FiberWitness::from_fiber(&level_n, j),
                ],
                construction: "product".into(),
                eigenvalue: Some(product),
                orbit_count: reached,
                witnesses: unions.iter().map(|u| level_2n.multiset_points(u)).collect(),
                level_multiplicities,
                passed: true,
            });
        }
    }
    let found = level_2n
        .fibers
        .iter()
        .position(|f| f.multisets.len() as u64 >= target);
    let (eigenvalue, orbit_count, witnesses) = match found {
        Some(idx) => {
            let w = FiberWitness::from_fiber(&level_2n, idx);
            (Some(w.eigenvalue), w.multisets.len() as u64, w.multisets)
        }
        None => (None, max_2n, Vec::new()),
    };
    Ok(GirsanovReport {
        n,
        q,
        seeds: Vec::new(),
        construction: "scan".into(),
        passed: eigenvalue.is_some(),
        eigenvalue,
        orbit_count,
        witnesses,
        level_multiplicities,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VprosteLevel {
    pub level: usize,
    pub simple: bool,
    pub witness: Option<FiberWitness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VprosteReport {
    pub k: usize,
    pub levels: Vec<VprosteLevel>,
    /// Pairs `(j, l)` with `j < l`, level `l` simple and level `j` not.
    pub violations: Vec<(usize, usize)>,
    pub passed: bool,
}

/// Level-by-level simplicity of `V_σ^{⊙j}` for `j = 1..=k`; simplicity at a
/// level must propagate to every lower level.
pub fn check_vproste(sigma: &AtomicMeasure, k: usize, caps: &Caps) -> Result<VprosteReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    caps.check_tuples(sigma.len(), k)?;
    let mut levels = Vec::with_capacity(k);
    for j in 1..=k {
        let fs = fibers(sigma, j, caps)?;
        let witness = fs
            .fibers
            .iter()
            .position(|f| f.multisets.len() >= 2)
            .map(|i| FiberWitness::from_fiber(&fs, i));
        levels.push(VprosteLevel {
            level: j,
            simple: witness.is_none(),
            witness,
        });
    }
    let mut violations = Vec::new();
    for hi in &levels {
        for lo in levels.iter().filter(|l| l.level < hi.level) {
            if hi.simple && !lo.simple {
                violations.push((lo.level, hi.level));
            }
        }
    }
    Ok(VprosteReport {
        k,
        passed: violations.is_empty(),
        levels,
        violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionRow {
    pub eigenvalue: CirclePoint,
    pub tensor: u64,
    pub symmetric: u64,
    pub generic: bool,
    /// `tensor == n! · symmetric`.
    pub factorizes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub factor: u64,
    pub rows: Vec<DecompositionRow>,
    /// Degenerate fibers where the tensor count falls short of `n!` copies.
    pub flagged: Vec<CirclePoint>,
    pub passed: bool,
}

/// Compares `V_σ^{⊗n}` with `n!` copies of `V_σ^{⊙n}` fiber by fiber. Generic
/// fibers must factor exactly; degenerate ones are flagged, not asserted.
pub fn tensor_vs_symmetric_decomposition(
    sigma: &AtomicMeasure,
    n: usize,
    caps: &Caps,
) -> Result<DecompositionReport> {
    let fs = fibers(sigma, n, caps)?;
    let tensor = multiplicity_on(&fs, &PermSubgroup::trivial(n));
    let symmetric = multiplicity_on(&fs, &PermSubgroup::symmetric(n, caps.degree_cap)?);
    let factor = factorial_u64(n as u64);
    let rows: Vec<DecompositionRow> = fs
        .fibers
        .iter()
        .map(|f| {
            let t = tensor.entries[&f.eigenvalue];
            let s = symmetric.entries[&f.eigenvalue];
            DecompositionRow {
                eigenvalue: f.eigenvalue.clone(),
                tensor: t,
                symmetric: s,
                generic: f.is_generic(),
                factorizes: t == factor * s,
            }
        })
        .collect();
    let flagged = rows
        .iter()
        .filter(|r| !r.generic && !r.factorizes)
        .map(|r| r.eigenvalue.clone())
        .collect();
    let passed = rows.iter().filter(|r| r.generic).all(|r| r.factorizes);
    Ok(DecompositionReport {
        n,
        factor,
        rows,
        flagged,
        passed,
    })
}
