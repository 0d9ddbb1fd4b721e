//! The ad-operator calculus on matrix space.
//!
//! `ad_A(X) = AX − XA` lifts to the `n² × n²` matrix `I ⊗ A − Aᵀ ⊗ I`, the
//! difference of the lifted left and right multipliers. Centralizers are null
//! spaces of powers of these lifts.
//!
//! For a set `U` (always a linear span here) the k-centralizer
//! `{B : ad_X^k(B) = 0 for all X ∈ U}` is computed exactly by polarization:
//! writing `X = Σ tᵢ Xᵢ`, `ad_X^k(B)` is a homogeneous polynomial of degree k in
//! `t`, and it vanishes identically iff every coefficient does. The coefficient
//! of `t^α` for a multiset `α` is the sum over all distinct orderings of `α` of
//! the composed lifts, so the set centralizer is the joint kernel of one
//! symmetrized operator per multiset.

use std::collections::HashMap;
use std::ops::Sub;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::decomp::random::{complex_normal, seeded_rng};
use crate::error::{Error, Result};
use crate::numlin::{
    check_same_dim, check_square_finite, identity, kernel_basis_with_floor, rounding_floor,
    unvectorize, vectorize, ComplexMatrix, OperatorSubspace, StackedKernel, ToleranceConfig,
};

/// Default cap on the number of symmetrized operators built by polarization.
pub const DEFAULT_POLARIZATION_BUDGET: usize = 200_000;

/// A linear map on `M_n(C)` acting on `vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedOperator {
    n: usize,
    mat: ComplexMatrix,
}

impl LiftedOperator {
    pub fn new(n: usize, mat: ComplexMatrix) -> Result<Self> {
        if mat.shape() != (n * n, n * n) {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: mat.nrows(),
            });
        }
        Ok(Self { n, mat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.n, self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.nrows(),
            });
        }
        let v = &self.mat * vectorize(x);
        Ok(unvectorize(v.as_slice(), self.n))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LiftedOperator) -> Result<LiftedOperator> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(LiftedOperator {
            n: self.n,
            mat: &self.mat * &other.mat,
        })
    }

    /// `s`-fold composition; `s = 0` gives the identity map.
    pub fn pow(&self, s: usize) -> LiftedOperator {
        LiftedOperator {
            n: self.n,
            mat: matrix_power(&self.mat, s),
        }
    }

    /// Null space as a subspace of matrix space.
    pub fn kernel(&self, tol: &ToleranceConfig) -> Result<OperatorSubspace> {
        self.kernel_with_floor(tol, 0.0)
    }

    /// Null space, treating singular values at or below `floor` as zero.
    pub fn kernel_with_floor(&self, tol: &ToleranceConfig, floor: f64) -> Result<OperatorSubspace> {
        OperatorSubspace::from_orthonormal_columns(self.n, kernel_basis_with_floor(&self.mat, tol, floor)?)
    }

    /// Frobenius norm of the lifted matrix.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }
}

impl Sub for &LiftedOperator {
    type Output = LiftedOperator;

    fn sub(self, rhs: &LiftedOperator) -> LiftedOperator {
        assert_eq!(self.n, rhs.n, "lifted operators of different size");
        LiftedOperator {
            n: self.n,
            mat: &self.mat - &rhs.mat,
        }
    }
}

fn matrix_power(m: &ComplexMatrix, s: usize) -> ComplexMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..s {
        out = m * out;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `AX − XA`.
pub fn ad_apply(a: &ComplexMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_same_dim(a, x)?;
    Ok(a * x - x * a)
}

/// `ad_A^s(X)`.
pub fn ad_power_apply(a: &ComplexMatrix, x: &ComplexMatrix, s: usize) -> Result<ComplexMatrix> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be ≥ 1".into()));
    }
    check_same_dim(a, x)?;
    let mut y = x.clone();
    for _ in 0..s {
        y = a * &y - &y * a;
    }
    Ok(y)
}

/// Lifted left (`X ↦ AX`, `I ⊗ A`) or right (`X ↦ XA`, `Aᵀ ⊗ I`) multiplier.
pub fn multiplier_lift(a: &ComplexMatrix, side: Side) -> Result<LiftedOperator> {
    let n = check_square_finite(a)?;
    let id = identity(n);
    let mat = match side {
        Side::Left => id.kronecker(a),
        Side::Right => a.transpose().kronecker(&id),
    };
    LiftedOperator::new(n, mat)
}

/// `ad_A` as an `n² × n²` matrix.
pub fn ad_lift(a: &ComplexMatrix) -> Result<LiftedOperator> {
    let left = multiplier_lift(a, Side::Left)?;
    let right = multiplier_lift(a, Side::Right)?;
    Ok(&left - &right)
}

/// Rounding-noise floor for a product of `k` lifts of matrices of norm at
/// most `norm` in dimension `n`.
fn lift_power_floor(n: usize, k: usize, norm: f64) -> f64 {
    rounding_floor((n * k) as f64 * (2.0 * norm).powi(k as i32))
}

/// `C_s(A) = ker(ad_A^s)`.
pub fn centralizer(a: &ComplexMatrix, s: usize, tol: &ToleranceConfig) -> Result<OperatorSubspace> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be ≥ 1".into()));
    }
    let n = check_square_finite(a)?;
    ad_lift(a)?
        .pow(s)
        .kernel_with_floor(tol, lift_power_floor(n, s, a.norm()))
}

/// Number of multisets of size `k` drawn from `d` symbols, `C(d+k−1, k)`.
pub fn multiset_count(d: usize, k: usize) -> u128 {
    if d == 0 {
        return if k == 0 { 1 } else { 0 };
    }
    let mut acc: u128 = 1;
    // C(d+k-1, k) built incrementally stays integral at every step.
    for i in 1..=k as u128 {
        acc = acc * (d as u128 - 1 + i) / i;
    }
    acc
}

/// Lexicographic enumeration of sorted index tuples of length `k` over `0..d`.
#[derive(Debug, Clone)]
pub struct Multisets {
    d: usize,
    current: Option<Vec<usize>>,
}

impl Multisets {
    pub fn new(d: usize, k: usize) -> Self {
        let current = if d == 0 && k > 0 { None } else { Some(vec![0; k]) };
        Self { d, current }
    }
}

impl Iterator for Multisets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        let mut advanced = false;
        for i in (0..next.len()).rev() {
            if next[i] + 1 < self.d {
                let v = next[i] + 1;
                for slot in next.iter_mut().skip(i) {
                    *slot = v;
                }
                advanced = true;
                break;
            }
        }
        self.current = if advanced { Some(next) } else { None };
        Some(out)
    }
}

fn remove_one(alpha: &[usize], value: usize) -> Vec<usize> {
    let mut rest = alpha.to_vec();
    let pos = rest.iter().position(|&v| v == value).expect("value present");
    rest.remove(pos);
    rest
}

fn distinct(alpha: &[usize]) -> Vec<usize> {
    let mut d = alpha.to_vec();
    d.dedup();
    d
}

/// `{B : ad_X^k(B) = 0 for every X in span}` by polarization.
///
/// The pure powers `ad_{Xᵢ}^k` are stacked first; every mixed symmetrized
/// operator is then evaluated only on that joint kernel, which carries the
/// same final null space at a fraction of the cost. Symmetrized operators of
/// degree j are built from degree j−1 via `Sym(α) = Σ_{v ∈ α} L_v Sym(α∖v)`,
/// summing over distinct values `v`.
pub fn symmetrized_ad_kernel(
    span: &OperatorSubspace,
    k: usize,
    tol: &ToleranceConfig,
    budget: usize,
) -> Result<OperatorSubspace> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    let n = span.n();
    let dim = n * n;
    let d = span.dim();
    if d == 0 {
        return Ok(OperatorSubspace::full(n));
    }
    let required = multiset_count(d, k);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let lifts: Vec<ComplexMatrix> = span
        .basis()
        .iter()
        .map(|x| ad_lift(x).map(LiftedOperator::into_matrix))
        .collect::<Result<_>>()?;

    // basis elements have unit norm
    let mut pure = StackedKernel::with_floor(dim, lift_power_floor(n, k, 1.0));
    for l in &lifts {
        pure.push(&matrix_power(l, k))?;
    }
    let w = pure.kernel(tol)?;
    if k == 1 || w.ncols() == 0 {
        return OperatorSubspace::from_orthonormal_columns(n, w);
    }

    // Sym(α)·W for all multisets of size j, starting from Sym(∅)·W = W.
    let mut level: HashMap<Vec<usize>, ComplexMatrix> = HashMap::new();
    level.insert(Vec::new(), w.clone());
    for j in 1..k {
        let mut next = HashMap::with_capacity(multiset_count(d, j) as usize);
        for alpha in Multisets::new(d, j) {
            next.insert(alpha.clone(), symmetrized_step(&lifts, &level, &alpha));
        }
        level = next;
    }

    let orderings: f64 = (1..=k).map(|i| i as f64).product();
    let mut mixed = StackedKernel::with_floor(w.ncols(), orderings * lift_power_floor(n, k, 1.0));
    for alpha in Multisets::new(d, k) {
        if alpha[0] == alpha[k - 1] {
            continue;
        }
        mixed.push(&symmetrized_step(&lifts, &level, &alpha))?;
    }
    let z = mixed.kernel(tol)?;
    OperatorSubspace::from_orthonormal_columns(n, &w * z)
}

fn symmetrized_step(
    lifts: &[ComplexMatrix],
    prev: &HashMap<Vec<usize>, ComplexMatrix>,
    alpha: &[usize],
) -> ComplexMatrix {
    let mut total: Option<ComplexMatrix> = None;
    for v in distinct(alpha) {
        let rest = remove_one(alpha, v);
        let term = &lifts[v] * &prev[&rest];
        total = Some(match total {
            Some(t) => t + term,
            None => term,
        });
    }
    total.expect("non-empty multiset")
}

/// `C_k(C_l(A))`.
pub fn double_centralizer(
    a: &ComplexMatrix,
    k: usize,
    l: usize,
    tol: &ToleranceConfig,
) -> Result<OperatorSubspace> {
    double_centralizer_with_budget(a, k, l, tol, DEFAULT_POLARIZATION_BUDGET)
}

pub fn double_centralizer_with_budget(
    a: &ComplexMatrix,
    k: usize,
    l: usize,
    tol: &ToleranceConfig,
    budget: usize,
) -> Result<OperatorSubspace> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    if l == 0 {
        return Err(Error::InvalidArgument("l must be ≥ 1".into()));
    }
    let inner = centralizer(a, l, tol)?;
    symmetrized_ad_kernel(&inner, k, tol, budget)
}

/// Monte-Carlo set centralizer: intersects kernels of `ad_X^k` for random
/// `X ∈ span` until the dimension is unchanged for two consecutive rounds.
///
/// Always a superset of [`symmetrized_ad_kernel`]; used to cross-check it.
pub fn randomized_set_centralizer(
    span: &OperatorSubspace,
    k: usize,
    tol: &ToleranceConfig,
    samples: usize,
    seed: u64,
) -> Result<OperatorSubspace> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be ≥ 1".into()));
    }
    let n = span.n();
    let dim = n * n;
    let basis = span.basis();
    if basis.is_empty() {
        return Ok(OperatorSubspace::full(n));
    }
    let mut rng = seeded_rng(seed);
    let mut w = identity(dim);
    let mut stable_rounds = 0;
    let max_rounds = dim + 3;
    for _ in 0..max_rounds {
        let before = w.ncols();
        if before == 0 {
            break;
        }
        let mut acc = StackedKernel::new(before);
        for _ in 0..samples {
            let mut x = ComplexMatrix::zeros(n, n);
            for b in &basis {
                let c: Complex64 = complex_normal(&mut rng);
                x += b * c;
            }
            // vary the scale too so no sample is special
            let scale = 0.5 + rng.gen::<f64>();
            x *= Complex64::new(scale, 0.0);
            acc.raise_floor(lift_power_floor(n, k, x.norm()));
            let lift = ad_lift(&x)?.into_matrix();
            let mut img: DMatrix<Complex64> = w.clone();
            for _ in 0..k {
                img = &lift * img;
            }
            acc.push(&img)?;
        }
        let z = acc.kernel(tol)?;
        w = &w * z;
        if w.ncols() == before {
            stable_rounds += 1;
            if stable_rounds >= 2 {
                break;
            }
        } else {
            stable_rounds = 0;
        }
    }
    OperatorSubspace::from_orthonormal_columns(n, w)
}
