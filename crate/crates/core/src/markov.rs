//! Couplings of finite probability spaces and their Markov operators.
//!
//! A coupling `λ` of `(X, μ)` and `(Y, ν)` is stored as its joint matrix
//! (rows `X`, columns `Y`). The associated operator `Φ_λ : L²(X) → L²(Y)` is
//! the matrix indexed target × source with `Φ[y][x] = λ(x, y) / ν(y)`, so that
//! `∫ Φ(f) g dν = ∫ f(x) g(y) dλ`.

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac::{format_fraction, parse_fraction};
use crate::linalg::Matrix;
use crate::permgroup::Perm;

/// Finitely many labelled points with strictly positive rational masses
/// summing to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSpace {
    labels: Vec<String>,
    probs: Vec<BigRational>,
}

impl FiniteSpace {
    pub fn new(labels: Vec<String>, probs: Vec<BigRational>) -> Result<Self> {
        if labels.len() != probs.len() || probs.is_empty() {
            return Err(Error::InvalidParameter(
                "need one positive probability per label".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_positive()) {
            return Err(Error::InvalidParameter(
                "probabilities must be positive".into(),
            ));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(FiniteSpace { labels, probs })
    }

    /// Normalizes positive weights to probabilities; labels are `0, 1, ..`.
    pub fn from_weights(weights: &[BigRational]) -> Result<Self> {
        let total: BigRational = weights.iter().sum();
        if total.is_zero() {
            return Err(Error::InvalidParameter("weights sum to zero".into()));
        }
        Self::new(
            (0..weights.len()).map(|i| i.to_string()).collect(),
            weights.iter().map(|w| w / &total).collect(),
        )
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(&vec![BigRational::one(); n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Projection onto constants, `(q f)(y) = Σ_{y'} ν(y') f(y')`.
    pub fn mean_projection(&self) -> Matrix {
        Matrix::from_fn(self.len(), self.len(), |_, j| self.probs[j].clone())
    }

    /// Koopman matrix of a point map: `(K f)(x) = f(T x)`.
    fn koopman(&self, t: &Perm) -> Result<Matrix> {
        if t.degree() != self.len() {
            return Err(Error::DegreeMismatch {
                expected: self.len(),
                got: t.degree(),
            });
        }
        if (0..self.len()).any(|x| self.probs[t.image(x)] != self.probs[x]) {
            return Err(Error::InvalidParameter(format!(
                "permutation {t} does not preserve the measure"
            )));
        }
        Ok(Matrix::from_fn(self.len(), self.len(), |x, y| {
            if t.image(x) == y {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        }))
    }
}

/// A joint distribution with prescribed marginals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    left: FiniteSpace,
    right: FiniteSpace,
    joint: Matrix,
}

impl Coupling {
    pub fn new(left: FiniteSpace, right: FiniteSpace, joint: Matrix) -> Result<Self> {
        if joint.rows() != left.len() || joint.cols() != right.len() {
            return Err(Error::InvalidParameter(format!(
                "joint matrix is {}x{}, spaces are {} and {}",
                joint.rows(),
                joint.cols(),
                left.len(),
                right.len()
            )));
        }
        if !joint.is_nonnegative() {
            return Err(Error::InvalidParameter(
                "joint masses must be non-negative".into(),
            ));
        }
        if joint.row_sums() != left.probs || joint.col_sums() != right.probs {
            return Err(Error::InvalidParameter(
                "joint matrix marginals differ from the given spaces".into(),
            ));
        }
        Ok(Coupling { left, right, joint })
    }

    /// Builds the coupling whose marginals are read off a non-negative joint
    /// matrix of total mass one with no empty row or column.
    pub fn from_joint(joint: Matrix) -> Result<Self> {
        let left = FiniteSpace::new(
            (0..joint.rows()).map(|i| i.to_string()).collect(),
            joint.row_sums(),
        )?;
        let right = FiniteSpace::new(
            (0..joint.cols()).map(|i| i.to_string()).collect(),
            joint.col_sums(),
        )?;
        Self::new(left, right, joint)
    }

    pub fn product(left: &FiniteSpace, right: &FiniteSpace) -> Self {
        let joint = Matrix::from_fn(left.len(), right.len(), |i, j| {
            &left.probs[i] * &right.probs[j]
        });
        Coupling {
            left: left.clone(),
            right: right.clone(),
            joint,
        }
    }

    /// `Δ(A × B) = ν(A ∩ B)`.
    pub fn diagonal(space: &FiniteSpace) -> Self {
        let joint = Matrix::from_fn(space.len(), space.len(), |i, j| {
            if i == j {
                space.probs[i].clone()
            } else {
                BigRational::zero()
            }
        });
        Coupling {
            left: space.clone(),
            right: space.clone(),
            joint,
        }
    }

    pub fn left(&self) -> &FiniteSpace {
        &self.left
    }

    pub fn right(&self) -> &FiniteSpace {
        &self.right
    }

    pub fn joint(&self) -> &Matrix {
        &self.joint
    }
}

/// A Markov operator `L²(source) → L²(target)`, matrix indexed target × source.
/// It fixes constants (rows sum to one) and carries the source measure to the
/// target measure (`ν^T Φ = μ`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkovOp {
    source: FiniteSpace,
    target: FiniteSpace,
    matrix: Matrix,
}

impl MarkovOp {
    pub fn new(source: FiniteSpace, target: FiniteSpace, matrix: Matrix) -> Result<Self> {
        if matrix.rows() != target.len() || matrix.cols() != source.len() {
            return Err(Error::InvalidParameter(format!(
                "operator matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                target.len(),
                source.len()
            )));
        }
        if !matrix.is_nonnegative() {
            return Err(Error::InvalidParameter(
                "Markov matrix has a negative entry".into(),
            ));
        }
        if matrix.row_sums().iter().any(|s| !s.is_one()) {
            return Err(Error::InvalidParameter(
                "Markov matrix does not fix constants".into(),
            ));
        }
        if matrix.left_apply(&target.probs) != source.probs {
            return Err(Error::InvalidParameter(
                "Markov matrix does not carry the source measure to the target measure".into(),
            ));
        }
        Ok(MarkovOp {
            source,
            target,
            matrix,
        })
    }

    pub fn identity(space: &FiniteSpace) -> Self {
        MarkovOp {
            source: space.clone(),
            target: space.clone(),
            matrix: Matrix::identity(space.len()),
        }
    }

    /// `f ↦ ∫ f dμ`, the operator of the product coupling.
    pub fn mean(source: &FiniteSpace, target: &FiniteSpace) -> Self {
        MarkovOp {
            source: source.clone(),
            target: target.clone(),
            matrix: Matrix::from_fn(target.len(), source.len(), |_, x| source.probs[x].clone()),
        }
    }

    pub fn source(&self) -> &FiniteSpace {
        &self.source
    }

    pub fn target(&self) -> &FiniteSpace {
        &self.target
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &MarkovOp) -> Result<MarkovOp> {
        if first.target != self.source {
            return Err(Error::InvalidParameter(
                "composition spaces do not match".into(),
            ));
        }
        MarkovOp::new(
            first.source.clone(),
            self.target.clone(),
            &self.matrix * &first.matrix,
        )
    }
}

pub fn markov_from_coupling(lambda: &Coupling) -> MarkovOp {
    let matrix = Matrix::from_fn(lambda.right.len(), lambda.left.len(), |y, x| {
        &lambda.joint[(x, y)] / &lambda.right.probs[y]
    });
    MarkovOp {
        source: lambda.left.clone(),
        target: lambda.right.clone(),
        matrix,
    }
}

pub fn coupling_from_markov(phi: &MarkovOp) -> Coupling {
    let joint = Matrix::from_fn(phi.source.len(), phi.target.len(), |x, y| {
        &phi.target.probs[y] * &phi.matrix[(y, x)]
    });
    Coupling {
        left: phi.source.clone(),
        right: phi.target.clone(),
        joint,
    }
}

/// A product `Y_1 × .. × Y_n`; tuples are indexed in mixed radix with
/// `Y_1` as the most significant digit, matching Kronecker order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorStructure {
    components: Vec<FiniteSpace>,
}

impl FactorStructure {
    pub fn new(components: Vec<FiniteSpace>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one component".into(),
            ));
        }
        Ok(FactorStructure { components })
    }

    pub fn uniform(dims: &[usize]) -> Result<Self> {
        Self::new(
            dims.iter()
                .map(|&d| FiniteSpace::uniform(d))
                .collect::<Result<_>>()?,
        )
    }

    pub fn components(&self) -> &[FiniteSpace] {
        &self.components
    }

    pub fn dims(&self) -> Vec<usize> {
        self.components.iter().map(FiniteSpace::len).collect()
    }

    pub fn size(&self) -> usize {
        self.dims().iter().product()
    }

    fn check_selector(&self, selector: &[usize]) -> Result<()> {
        let n = self.components.len();
        if selector.iter().any(|&i| i >= n) || !selector.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(format!(
                "selector {selector:?} must be strictly increasing indices below {n}"
            )));
        }
        Ok(())
    }

    fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.components.len()];
        for (slot, c) in digits.iter_mut().zip(&self.components).rev() {
            *slot = index % c.len();
            index /= c.len();
        }
        digits
    }

    fn encode_selected(&self, digits: &[usize], selector: &[usize]) -> usize {
        selector
            .iter()
            .fold(0, |acc, &i| acc * self.components[i].len() + digits[i])
    }

    /// The product over the selected components (a one-point space for an
    /// empty selection).
    pub fn sub_product(&self, selector: &[usize]) -> Result<FiniteSpace> {
        self.check_selector(selector)?;
        let mut labels = vec![String::new()];
        let mut probs = vec![BigRational::one()];
        for &i in selector {
            let c = &self.components[i];
            let (mut l2, mut p2) = (Vec::new(), Vec::new());
            for (l, p) in labels.iter().zip(&probs) {
                for (cl, cp) in c.labels.iter().zip(&c.probs) {
                    l2.push(if l.is_empty() {
                        cl.clone()
                    } else {
                        format!("{l},{cl}")
                    });
                    p2.push(p * cp);
                }
            }
            labels = l2;
            probs = p2;
        }
        let labels = labels.into_iter().map(|l| format!("({l})")).collect();
        FiniteSpace::new(labels, probs)
    }

    pub fn product_space(&self) -> FiniteSpace {
        let all: Vec<usize> = (0..self.components.len()).collect();
        self.sub_product(&all).expect("full selector is valid")
    }

    /// Conditional expectation onto functions of the selected coordinates:
    /// `E[y][y'] = [y_A = y'_A] · Π_{i ∉ A} ν_i(y'_i)`.
    pub fn conditional_expectation(&self, selector: &[usize]) -> Result<Matrix> {
        self.check_selector(selector)?;
        let size = self.size();
        let digits: Vec<Vec<usize>> = (0..size).map(|i| self.decode(i)).collect();
        let keys: Vec<usize> = digits
            .iter()
            .map(|d| self.encode_selected(d, selector))
            .collect();
        let rest: Vec<BigRational> = digits
            .iter()
            .map(|d| {
                (0..self.components.len())
                    .filter(|i| !selector.contains(i))
                    .fold(BigRational::one(), |acc, i| {
                        acc * &self.components[i].probs[d[i]]
                    })
            })
            .collect();
        Ok(Matrix::from_fn(size, size, |y, y2| {
            if keys[y] == keys[y2] {
                rest[y2].clone()
            } else {
                BigRational::zero()
            }
        }))
    }

    /// Marginal of a coupling `X × Π Y_i` on `X × Π_{i ∈ A} Y_i`.
    pub fn marginal(&self, lambda: &Coupling, selector: &[usize]) -> Result<Coupling> {
        let sub = self.sub_product(selector)?;
        if lambda.right.len() != self.size() {
            return Err(Error::InvalidParameter(
                "coupling does not target this product".into(),
            ));
        }
        let mut joint = Matrix::zeros(lambda.left.len(), sub.len());
        for y in 0..self.size() {
            let key = self.encode_selected(&self.decode(y), selector);
            for x in 0..lambda.left.len() {
                joint[(x, key)] += &lambda.joint[(x, y)];
            }
        }
        Coupling::new(lambda.left.clone(), sub, joint)
    }
}

/// Extends a coupling of `X` with the selected sub-product to `X × Π Y_i` by
/// conditional independence: `λ̂(x, y) = λ(x, y_A) · Π_{i ∉ A} ν_i(y_i)`.
pub fn rel_indep_extension(
    lambda: &Coupling,
    factor: &FactorStructure,
    selector: &[usize],
) -> Result<Coupling> {
    let sub = factor.sub_product(selector)?;
    if lambda.right.probs != sub.probs {
        return Err(Error::InvalidParameter(
            "coupling's right space is not the selected sub-product".into(),
        ));
    }
    let size = factor.size();
    let mut joint = Matrix::zeros(lambda.left.len(), size);
    for y in 0..size {
        let digits = factor.decode(y);
        let key = factor.encode_selected(&digits, selector);
        let rest = (0..digits.len())
            .filter(|i| !selector.contains(i))
            .fold(BigRational::one(), |acc, i| {
                acc * &factor.components[i].probs[digits[i]]
            });
        for x in 0..lambda.left.len() {
            joint[(x, y)] = &lambda.joint[(x, key)] * &rest;
        }
    }
    Coupling::new(lambda.left.clone(), factor.product_space(), joint)
}

/// Both sides of the factor-projection identity for one selector.
#[derive(Clone, Debug)]
pub struct ProjectionCheck {
    /// `E(· | A) ∘ Φ`.
    pub projected: MarkovOp,
    /// Operator of the relatively independent extension of `λ_Φ|_{X × A}`.
    pub via_extension: MarkovOp,
    pub agree: bool,
}

/// Composes `Φ` with the conditional expectation onto the selected
/// coordinates, and compares with the operator of the relatively independent
/// extension of the restricted coupling.
pub fn project_markov(
    phi: &MarkovOp,
    factor: &FactorStructure,
    selector: &[usize],
) -> Result<ProjectionCheck> {
    if phi.target != factor.product_space() {
        return Err(Error::InvalidParameter(
            "operator target is not the product space".into(),
        ));
    }
    let e = factor.conditional_expectation(selector)?;
    let projected = MarkovOp::new(phi.source.clone(), phi.target.clone(), &e * &phi.matrix)?;
    let restricted = factor.marginal(&coupling_from_markov(phi), selector)?;
    let via_extension = markov_from_coupling(&rel_indep_extension(&restricted, factor, selector)?);
    Ok(ProjectionCheck {
        agree: projected == via_extension,
        projected,
        via_extension,
    })
}

/// Largest product dimension for which the rank cross-check runs.
pub const RANK_ROUTE_LIMIT: usize = 81;

#[derive(Clone, Debug, Serialize)]
pub struct InclusionExclusionReport {
    pub dims: Vec<usize>,
    /// `Id - ⊗(Id - q_i) = Σ_{S≠∅} (-1)^{|S|-1} ⊗_{i∈S} q_i`.
    pub tensor_expansion: bool,
    /// The same operator as the signed sum of factor projections `p_T`.
    pub factor_expansion: bool,
    /// `Π d_i - 1` and `Σ_{S≠∅} Π_{i∈S} (d_i - 1)`.
    pub dimension_lhs: u64,
    pub dimension_rhs: u64,
    /// Ranks of the pieces `⊗_{i∈S}(Id - q_i) ⊗_{i∉S} q_i` add up to
    /// `rank(Id - p_0)`; skipped above [`RANK_ROUTE_LIMIT`].
    pub rank_identity: Option<bool>,
    pub passed: bool,
}

/// Verifies the inclusion–exclusion expansion of `Id - ⊗(Id - q_i)` over a
/// product of finite spaces, and the dimension count of the orthogonal
/// decomposition of `L²_0` of the product.
pub fn inclusion_exclusion_identity(
    factor: &FactorStructure,
    matrix_cap: u64,
) -> Result<InclusionExclusionReport> {
    let size = factor.size();
    if size as u64 > matrix_cap {
        return Err(Error::MatrixCap {
            needed: size as u128,
            cap: matrix_cap,
        });
    }
    let n = factor.components.len();
    let qs: Vec<Matrix> = factor
        .components
        .iter()
        .map(FiniteSpace::mean_projection)
        .collect();
    let ids: Vec<Matrix> = factor
        .components
        .iter()
        .map(|c| Matrix::identity(c.len()))
        .collect();
    let kron_all = |pick: &dyn Fn(usize) -> Matrix| -> Matrix {
        (1..n).fold(pick(0), |acc, i| acc.kron(&pick(i)))
    };
    let identity = Matrix::identity(size);
    let complement = kron_all(&|i| &ids[i] - &qs[i]);
    let lhs = &identity - &complement;

    let mut tensor_sum = Matrix::zeros(size, size);
    for l in 1..=n {
        for subset in (0..n).combinations(l) {
            let term = kron_all(&|i| {
                if subset.contains(&i) {
                    qs[i].clone()
                } else {
                    ids[i].clone()
                }
            });
            tensor_sum = if l % 2 == 1 {
                &tensor_sum + &term
            } else {
                &tensor_sum - &term
            };
        }
    }

    // p_T projects onto functions of the coordinates in T.
    let p0 = factor.conditional_expectation(&[])?;
    let mut factor_sum = if n % 2 == 1 {
        p0.clone()
    } else {
        p0.scale(&-BigRational::one())
    };
    for k in 1..n {
        for subset in (0..n).combinations(k) {
            let p = factor.conditional_expectation(&subset)?;
            factor_sum = if (n - k - 1).is_multiple_of(2) {
                &factor_sum + &p
            } else {
                &factor_sum - &p
            };
        }
    }

    let dims = factor.dims();
    let (dimension_lhs, dimension_rhs) = dimension_identity(&dims);
    let rank_identity = (size <= RANK_ROUTE_LIMIT).then(|| {
        let rank_sum: usize = (1..=n)
            .flat_map(|l| (0..n).combinations(l))
            .map(|subset| {
                kron_all(&|i| {
                    if subset.contains(&i) {
                        &ids[i] - &qs[i]
                    } else {
                        qs[i].clone()
                    }
                })
                .rank()
            })
            .sum();
        rank_sum == (&identity - &p0).rank()
    });
    let tensor_expansion = lhs == tensor_sum;
    let factor_expansion = lhs == factor_sum;
    Ok(InclusionExclusionReport {
        dims,
        tensor_expansion,
        factor_expansion,
        dimension_lhs,
        dimension_rhs,
        rank_identity,
        passed: tensor_expansion
            && factor_expansion
            && rank_identity != Some(false)
            && dimension_lhs == dimension_rhs,
    })
}

/// `Π d_i - 1 == Σ_{S≠∅} Π_{i∈S} (d_i - 1)`, by direct evaluation.
pub fn dimension_identity(dims: &[usize]) -> (u64, u64) {
    let lhs = dims.iter().map(|&d| d as u64).product::<u64>() - 1;
    let rhs = (1..=dims.len())
        .flat_map(|l| (0..dims.len()).combinations(l))
        .map(|s| s.iter().map(|&i| dims[i] as u64 - 1).product::<u64>())
        .sum();
    (lhs, rhs)
}

/// `Φ ∘ T = S ∘ Φ` for measure-preserving point permutations `T` of the
/// source and `S` of the target, acting by composition on functions.
pub fn commutation_check(phi: &MarkovOp, t: &Perm, s: &Perm) -> Result<bool> {
    let kt = phi.source.koopman(t)?;
    let ks = phi.target.koopman(s)?;
    Ok(&phi.matrix * &kt == &ks * &phi.matrix)
}

/// Random coupling with rational entries: a non-negative integer matrix with
/// entries below `max_entry`, every row and column nonempty, normalized.
pub fn random_coupling<R: Rng>(rng: &mut R, rows: usize, cols: usize, max_entry: u32) -> Coupling {
    let mut weights: Vec<Vec<u32>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| rng.gen_range(0..max_entry.max(1)))
                .collect()
        })
        .collect();
    for i in 0..rows.max(cols) {
        weights[i % rows][i % cols] += 1;
    }
    let total: u32 = weights.iter().flatten().sum();
    let joint = Matrix::from_rows(
        weights
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&w| BigRational::new(w.into(), total.into()))
                    .collect()
            })
            .collect(),
    );
    Coupling::from_joint(joint).expect("rows and columns are nonempty")
}

/// Random coupling of a random `X` with the prescribed `Y`: the conditional
/// law of `x` given `y` comes from [`random_coupling`].
pub fn random_coupling_onto<R: Rng>(
    rng: &mut R,
    rows: usize,
    right: &FiniteSpace,
    max_entry: u32,
) -> Coupling {
    let raw = random_coupling(rng, rows, right.len(), max_entry);
    let joint = Matrix::from_fn(rows, right.len(), |x, y| {
        &raw.joint[(x, y)] / &raw.right.probs[y] * &right.probs[y]
    });
    let left = Coupling::from_joint(joint).expect("rescaled columns keep every row nonempty");
    Coupling::new(left.left, right.clone(), left.joint).expect("column sums match the target law")
}

/// Random probability space with masses `w_i / Σ w`, `w_i ∈ [1, max_weight]`.
pub fn random_space<R: Rng>(rng: &mut R, n: usize, max_weight: u32) -> FiniteSpace {
    let weights: Vec<BigRational> = (0..n)
        .map(|_| BigRational::from_integer(rng.gen_range(1..=max_weight.max(1)).into()))
        .collect();
    FiniteSpace::from_weights(&weights).expect("positive weights")
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    labels: Vec<String>,
    probs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CouplingJson {
    left: SpaceJson,
    right: SpaceJson,
    joint: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct MarkovJson {
    source: SpaceJson,
    target: SpaceJson,
    matrix: Vec<Vec<String>>,
}

fn space_json(s: &FiniteSpace) -> SpaceJson {
    SpaceJson {
        labels: s.labels.clone(),
        probs: s.probs.iter().map(format_fraction).collect(),
    }
}

fn space_from_json(s: SpaceJson) -> Result<FiniteSpace> {
    FiniteSpace::new(
        s.labels,
        s.probs
            .iter()
            .map(|p| parse_fraction(p))
            .collect::<Result<_>>()?,
    )
}

fn matrix_json(m: &Matrix) -> Vec<Vec<String>> {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(format_fraction).collect())
        .collect()
}

fn matrix_from_json(rows: Vec<Vec<String>>) -> Result<Matrix> {
    let rows = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| parse_fraction(x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    Ok(Matrix::from_rows(rows))
}

impl Coupling {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(CouplingJson {
            left: space_json(&self.left),
            right: space_json(&self.right),
            joint: matrix_json(&self.joint),
        })
        .expect("coupling serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CouplingJson = serde_json::from_str(text)?;
        Coupling::new(
            space_from_json(raw.left)?,
            space_from_json(raw.right)?,
            matrix_from_json(raw.joint)?,
        )
    }
}

impl MarkovOp {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(MarkovJson {
            source: space_json(&self.source),
            target: space_json(&self.target),
            matrix: matrix_json(&self.matrix),
        })
        .expect("operator serializes")
    }
}
