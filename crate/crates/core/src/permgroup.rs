//! Subgroups of `S(n)` by full enumeration.
//!
//! Degrees are small (capped at 8 by default), so every subgroup is stored as
//! its complete element list. Block-structured subgroups index a pair
//! `(i, j)` with `0 <= i < rows` as position `i + rows * j` (column-major).

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::frac::factorial_u64;

pub const DEFAULT_DEGREE_CAP: usize = 8;

/// A bijection of `{0, .., n-1}`, stored as its image list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    images: Vec<usize>,
}

impl Perm {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::NotAPermutation(images));
            }
            seen[i] = true;
        }
        Ok(Perm { images })
    }

    pub fn identity(n: usize) -> Self {
        Perm {
            images: (0..n).collect(),
        }
    }

    /// Builds a permutation from disjoint cycles on `{0, .., n-1}`.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut touched = HashSet::new();
        for cycle in cycles {
            for (pos, &a) in cycle.iter().enumerate() {
                if a >= n || !touched.insert(a) {
                    return Err(Error::InvalidParameter(format!(
                        "cycles must be disjoint and within degree {n}: {cycles:?}"
                    )));
                }
                images[a] = cycle[(pos + 1) % cycle.len()];
            }
        }
        Perm::new(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Perm { images }
    }

    /// Coordinate permutation `(t_0, .., t_{n-1}) ↦ (t_{π(0)}, .., t_{π(n-1)})`.
    pub fn permute<T: Clone>(&self, tuple: &[T]) -> Vec<T> {
        self.images.iter().map(|&i| tuple[i].clone()).collect()
    }

    pub fn permute_into<T: Copy>(&self, tuple: &[T], out: &mut [T]) {
        for (slot, &i) in out.iter_mut().zip(&self.images) {
            *slot = tuple[i];
        }
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.images.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl Serialize for Perm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.images.serialize(s)
    }
}

/// A subgroup of `S(n)` with its full element list (sorted, identity first).
#[derive(Clone, Debug)]
pub struct PermSubgroup {
    degree: usize,
    generators: Vec<Perm>,
    elements: Vec<Perm>,
    label: String,
}

impl PermSubgroup {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    pub fn trivial(n: usize) -> Self {
        PermSubgroup {
            degree: n,
            generators: Vec::new(),
            elements: vec![Perm::identity(n)],
            label: "trivial".into(),
        }
    }

    pub fn symmetric(n: usize, cap: usize) -> Result<Self> {
        let mut gens = Vec::new();
        if n >= 2 {
            gens.push(Perm::from_cycles(n, &[&[0, 1]])?);
        }
        if n >= 3 {
            let cycle: Vec<usize> = (0..n).collect();
            gens.push(Perm::from_cycles(n, &[&cycle])?);
        }
        Ok(closure(n, &gens, cap)?.with_label(format!("S({n})")))
    }

    pub fn descriptor(&self) -> SubgroupDescriptor {
        SubgroupDescriptor {
            label: self.label.clone(),
            degree: self.degree,
            order: self.order(),
            generators: self.generators.clone(),
        }
    }
}

/// Serialized form of a subgroup: its generators plus bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubgroupDescriptor {
    pub label: String,
    pub degree: usize,
    pub order: u64,
    pub generators: Vec<Perm>,
}

/// The subgroup generated by `gens`, enumerated breadth-first.
pub fn closure(n: usize, gens: &[Perm], cap: usize) -> Result<PermSubgroup> {
    if n > cap {
        return Err(Error::DegreeCap { degree: n, cap });
    }
    for g in gens {
        if g.degree() != n {
            return Err(Error::DegreeMismatch {
                expected: n,
                got: g.degree(),
            });
        }
    }
    let id = Perm::identity(n);
    let mut seen: HashSet<Perm> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(e) = queue.pop_front() {
        for g in gens {
            let next = e.compose(g);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut elements: Vec<Perm> = seen.into_iter().collect();
    elements.sort();
    let label = if gens.is_empty() {
        "trivial".to_string()
    } else {
        let parts: Vec<String> = gens.iter().map(ToString::to_string).collect();
        format!("<{}>", parts.join(", "))
    };
    Ok(PermSubgroup {
        degree: n,
        generators: gens.to_vec(),
        elements,
        label,
    })
}

/// Orbit count of a subgroup on enumerating tuples, by formula and by walking
/// the orbits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitCount {
    pub formula: u64,
    pub enumerated: u64,
}

/// `o_G` both as `n!/#G` and by direct orbit enumeration of `G` acting on the
/// `n!` tuples that enumerate `{0, .., n-1}`. Disagreement is an error.
pub fn orbit_count_free(g: &PermSubgroup) -> Result<OrbitCount> {
    let n = g.degree();
    let formula = factorial_u64(n as u64) / g.order();
    let all = Perm::identity(n);
    let mut tuple: Vec<usize> = all.images().to_vec();
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    let mut orbits = 0u64;
    loop {
        if !visited.contains(&tuple) {
            orbits += 1;
            for pi in g.elements() {
                let moved: Vec<usize> = tuple.iter().map(|&i| pi.image(i)).collect();
                visited.insert(moved);
            }
        }
        if !next_permutation(&mut tuple) {
            break;
        }
    }
    let count = OrbitCount {
        formula,
        enumerated: orbits,
    };
    if count.formula != count.enumerated || !factorial_u64(n as u64).is_multiple_of(g.order()) {
        return Err(Error::Invariant(format!(
            "orbit count mismatch for {}: formula {} vs enumerated {}",
            g.label(),
            count.formula,
            count.enumerated
        )));
    }
    Ok(count)
}

/// Advances to the next lexicographic arrangement; false once exhausted.
/// Repeated entries yield each distinct arrangement once.
pub fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len())
        .rev()
        .find(|&j| v[i] < v[j])
        .expect("pivot exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

fn block_symmetric_generators(rows: usize, cols: usize, within_column: bool) -> Result<Vec<Perm>> {
    // within_column: permute i inside each fixed column j; otherwise permute j
    // inside each fixed row i.
    let n = rows * cols;
    let (blocks, len) = if within_column {
        (cols, rows)
    } else {
        (rows, cols)
    };
    let position = |block: usize, t: usize| {
        if within_column {
            t + rows * block
        } else {
            block + rows * t
        }
    };
    let mut gens = Vec::new();
    for b in 0..blocks {
        if len >= 2 {
            gens.push(Perm::from_cycles(n, &[&[position(b, 0), position(b, 1)]])?);
        }
        if len >= 3 {
            let cycle: Vec<usize> = (0..len).map(|t| position(b, t)).collect();
            gens.push(Perm::from_cycles(n, &[&cycle])?);
        }
    }
    Ok(gens)
}

fn checked_block_group(
    rows: usize,
    cols: usize,
    gens: Vec<Perm>,
    expected: u64,
    cap: usize,
    label: String,
) -> Result<PermSubgroup> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(
            "block sizes must be at least 1".into(),
        ));
    }
    let group = closure(rows * cols, &gens, cap)?.with_label(label);
    if group.order() != expected {
        return Err(Error::Invariant(format!(
            "{} has order {}, expected {}",
            group.label(),
            group.order(),
            expected
        )));
    }
    Ok(group)
}

/// Permutations `(i, j) ↦ (π_j(i), j)` of `{0..k} × {0..m}` with `π_j ∈ S(k)`;
/// order `(k!)^m`.
pub fn krot_subgroup(k: usize, m: usize, cap: usize) -> Result<PermSubgroup> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameter("k and m must be at least 1".into()));
    }
    if k * m > cap {
        return Err(Error::DegreeCap { degree: k * m, cap });
    }
    let gens = block_symmetric_generators(k, m, true)?;
    let expected = factorial_u64(k as u64).pow(m as u32);
    checked_block_group(k, m, gens, expected, cap, format!("krot(k={k},m={m})"))
}

/// Permutations `(i, j) ↦ (i, π_i(j))` of `{0..n} × {0..m}` with `π_i ∈ S(m)`;
/// order `(m!)^n`.
pub fn gltw_subgroup(n: usize, m: usize, cap: usize) -> Result<PermSubgroup> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be at least 1".into()));
    }
    if n * m > cap {
        return Err(Error::DegreeCap { degree: n * m, cap });
    }
    let gens = block_symmetric_generators(n, m, false)?;
    let expected = factorial_u64(m as u64).pow(n as u32);
    checked_block_group(n, m, gens, expected, cap, format!("gltw(n={n},m={m})"))
}

/// [`krot_subgroup`] extended by permutations of whole columns: the wreath
/// product `S(k) ≀ S(m)` of order `(k!)^m · m!`. Its orbits on `mk`-tuples are
/// the unordered families of `m` blocks of size `k`.
pub fn sym_krot_subgroup(k: usize, m: usize, cap: usize) -> Result<PermSubgroup> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameter("k and m must be at least 1".into()));
    }
    if k * m > cap {
        return Err(Error::DegreeCap { degree: k * m, cap });
    }
    let n = k * m;
    let mut gens = block_symmetric_generators(k, m, true)?;
    let swap_columns = |a: usize, b: usize| -> Result<Perm> {
        let mut images: Vec<usize> = (0..n).collect();
        for i in 0..k {
            images.swap(i + k * a, i + k * b);
        }
        Perm::new(images)
    };
    if m >= 2 {
        gens.push(swap_columns(0, 1)?);
    }
    if m >= 3 {
        let mut images = vec![0; n];
        for j in 0..m {
            for i in 0..k {
                images[i + k * j] = i + k * ((j + 1) % m);
            }
        }
        gens.push(Perm::new(images)?);
    }
    let expected = factorial_u64(k as u64).pow(m as u32) * factorial_u64(m as u64);
    checked_block_group(k, m, gens, expected, cap, format!("sym-krot(k={k},m={m})"))
}

/// Partitions the input tuples into `G`-orbits; returns index groups in order
/// of first appearance.
pub fn orbits_on_points(g: &PermSubgroup, points: &[Vec<CirclePoint>]) -> Result<Vec<Vec<usize>>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut canon_index: std::collections::HashMap<Vec<CirclePoint>, usize> = Default::default();
    for (idx, t) in points.iter().enumerate() {
        if t.len() != g.degree() {
            return Err(Error::DegreeMismatch {
                expected: g.degree(),
                got: t.len(),
            });
        }
        let canon = g
            .elements()
            .iter()
            .map(|pi| pi.permute(t))
            .min()
            .expect("group is nonempty");
        let leader = *canon_index.entry(canon).or_insert(idx);
        groups.entry(leader).or_default().push(idx);
    }
    Ok(groups.into_values().collect())
}
