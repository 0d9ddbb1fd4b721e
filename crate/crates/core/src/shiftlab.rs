//! Finite truncations of the unilateral shift.
//!
//! `J_n` is the compression of the shift `e_i ↦ e_{i+1}` to the first `n`
//! basis vectors. For `X ∈ M_n(C)` (1-based indices, entries outside the
//! matrix read as zero)
//!
//! ```text
//! ad_{J_n}²(X)_{ij} = x_{i−2,j} − 2x_{i−1,j+1} + x_{i,j+2}.
//! ```
//!
//! On the infinite shift the same formula holds with no column cut-off, so
//! the truncated and infinite conditions coincide exactly on the rows whose
//! column references stay inside the matrix. That window is found by
//! comparing the two linear functionals entry by entry rather than assumed.
//!
//! Nothing here asserts the infinite-dimensional value of `C_2(C_2(shift))`;
//! finite truncations only carry the structural conditions and the classical
//! containment in `Pol(J_n)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::adcalc::{ad_apply, ad_lift, centralizer, double_centralizer};
use crate::certify::{certify_smiley, SmileyCertificate};
use crate::error::{Error, Result};
use crate::numlin::{c64, real_diag, vectorize, ComplexMatrix, ToleranceConfig, ONE};

/// Residual bound for the interior second-difference conditions.
pub const STRUCTURE_TOL: f64 = 1e-8;

/// The `n × n` Jordan block with ones on the first subdiagonal.
pub fn shift_truncation(n: usize) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("shift truncation needs n ≥ 2, got {n}")));
    }
    let mut j = ComplexMatrix::zeros(n, n);
    for i in 0..n - 1 {
        j[(i + 1, i)] = ONE;
    }
    Ok(j)
}

/// Coefficients of the infinite-shift condition at `(i, j)` (1-based) as
/// `((row, col), weight)` triples; indices below 1 are dropped, indices above
/// `n` are kept.
fn entry_condition(i: usize, j: usize) -> Vec<((usize, usize), f64)> {
    let mut out = Vec::with_capacity(3);
    if i >= 3 {
        out.push(((i - 2, j), 1.0));
    }
    if i >= 2 {
        out.push(((i - 1, j + 1), -2.0));
    }
    out.push(((i, j + 2), 1.0));
    out
}

fn evaluate(cond: &[((usize, usize), f64)], x: &ComplexMatrix) -> num_complex::Complex64 {
    cond.iter()
        .map(|&((r, c), w)| x[(r - 1, c - 1)] * w)
        .sum()
}

/// Structure of `C_2(J_n)` against the second-difference conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C2StructureReport {
    pub n: usize,
    pub dim_c2: usize,
    /// Largest 1-based column index `j` for which the infinite condition at
    /// every `(i, j)` coincides with the truncated one.
    pub interior_max_col: usize,
    /// Number of `(i, j)` positions where the two conditions coincide.
    pub interior_positions: usize,
    /// Largest interior condition residual over the basis of `C_2(J_n)`.
    pub interior_residual: f64,
    /// Largest `|x₂₃ − 2x₁₂|` over the basis.
    pub entry_23_residual: f64,
    /// Largest `|x₃₃ − (2x₂₂ − x₁₁)|` over the basis.
    pub entry_33_residual: f64,
    pub holds: bool,
}

/// Checks every basis element of `C_2(J_n)` against the interior conditions.
///
/// Accepts `n ≥ 3`, the smallest size with a nonempty interior window.
pub fn c2_structure_check(n: usize, tol: &ToleranceConfig) -> Result<C2StructureReport> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("structure check needs n ≥ 3, got {n}")));
    }
    let j = shift_truncation(n)?;
    let c2 = centralizer(&j, 2, tol)?;
    let lift2 = ad_lift(&j)?.pow(2);
    let basis = c2.basis();

    let mut interior = vec![vec![false; n + 1]; n + 1];
    for (col, column) in interior.iter_mut().enumerate().skip(1) {
        for (row, slot) in column.iter_mut().enumerate().skip(1) {
            let cond = entry_condition(row, col);
            if cond.iter().any(|&((r, c), _)| r > n || c > n) {
                continue;
            }
            // row of the lifted operator for vec position (row, col)
            let lifted = lift2.matrix().row((col - 1) * n + (row - 1));
            let mut functional = ComplexMatrix::zeros(n, n);
            for &((r, c), w) in &cond {
                functional[(r - 1, c - 1)] += c64(w, 0.0);
            }
            let diff = (lifted.transpose() - vectorize(&functional)).norm();
            *slot = diff == 0.0;
        }
    }
    let interior_max_col = (1..=n)
        .take_while(|&c| (1..=n).all(|r| interior[c][r]))
        .last()
        .unwrap_or(0);
    let interior_positions = interior.iter().flatten().filter(|&&b| b).count();

    let mut interior_residual: f64 = 0.0;
    let mut entry_23_residual: f64 = 0.0;
    let mut entry_33_residual: f64 = 0.0;
    for x in &basis {
        for (col, flags) in interior.iter().enumerate().skip(1) {
            for (row, _) in flags.iter().enumerate().skip(1).filter(|(_, &inside)| inside) {
                interior_residual = interior_residual.max(evaluate(&entry_condition(row, col), x).norm());
            }
        }
        entry_23_residual = entry_23_residual.max((x[(1, 2)] - x[(0, 1)] * 2.0).norm());
        entry_33_residual = entry_33_residual.max((x[(2, 2)] - (x[(1, 1)] * 2.0 - x[(0, 0)])).norm());
    }
    let holds = interior_residual <= STRUCTURE_TOL
        && entry_23_residual <= STRUCTURE_TOL
        && entry_33_residual <= STRUCTURE_TOL;
    Ok(C2StructureReport {
        n,
        dim_c2: c2.dim(),
        interior_max_col,
        interior_positions,
        interior_residual,
        entry_23_residual,
        entry_33_residual,
        holds,
    })
}

/// `diag(1, 0, −1, −2, …)`: the `C_2(J_n)` element with `x₁₁ = 1` and all
/// other free parameters zero.
pub fn diagonal_constraint(n: usize) -> ComplexMatrix {
    let values: Vec<f64> = (0..n).map(|i| 1.0 - i as f64).collect();
    real_diag(&values)
}

/// Superdiagonal `(1, 2, …, n−1)`: the element with `x₁₂ = 1`, truncated.
pub fn superdiagonal_constraint(n: usize) -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        x[(i, i + 1)] = c64((i + 1) as f64, 0.0);
    }
    x
}

/// Outcome for one diagonal `B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalVerdict {
    /// `[X, [X, B]]` vanishes for both constraint matrices.
    pub conditions_hold: bool,
    /// The diagonal is an arithmetic progression.
    pub arithmetic: bool,
    pub residual: f64,
}

fn second_commutator(x: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    ad_apply(x, &ad_apply(x, b)?)
}

/// Tests a diagonal against the two constraint matrices.
pub fn diagonal_verdict(diagonal: &[f64], tol: &ToleranceConfig) -> Result<DiagonalVerdict> {
    let n = diagonal.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("diagonal check needs n ≥ 4, got {n}")));
    }
    let b = real_diag(diagonal);
    let scale = 1.0 + b.norm();
    let mut residual: f64 = 0.0;
    for x in [diagonal_constraint(n), superdiagonal_constraint(n)] {
        let r = second_commutator(&x, &b)?.norm() / (scale * x.norm().powi(2));
        residual = residual.max(r);
    }
    let step = diagonal[1] - diagonal[0];
    let width = diagonal.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let arithmetic = diagonal
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= tol.zero_tol * width);
    Ok(DiagonalVerdict {
        conditions_hold: residual <= tol.zero_tol,
        arithmetic,
        residual,
    })
}

/// Report for the diagonal recurrence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressionReport {
    pub n: usize,
    /// Interior residual of `ad²` on the superdiagonal constraint matrix.
    pub superdiagonal_residual: f64,
    /// Distance of the diagonal constraint matrix from `C_2(J_n)` (exact).
    pub diagonal_in_c2: bool,
    pub identity: DiagonalVerdict,
    pub linear: DiagonalVerdict,
    pub squares: DiagonalVerdict,
    pub holds: bool,
}

/// Checks that a diagonal satisfies the constraint commutator conditions iff
/// it is an arithmetic progression, on `I`, `diag(1..n)` and `diag(1, 4, 9, …)`
/// plus a few perturbed progressions.
pub fn diag_progression_check(n: usize, tol: &ToleranceConfig) -> Result<ProgressionReport> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("progression check needs n ≥ 4, got {n}")));
    }
    let j = shift_truncation(n)?;
    let x1 = diagonal_constraint(n);
    let x2 = superdiagonal_constraint(n);
    let diagonal_in_c2 = second_commutator(&j, &x1)?.norm() == 0.0;
    // the truncation only spoils ad² in the last two columns
    let d2 = second_commutator(&j, &x2)?;
    let superdiagonal_residual = d2.columns(0, n - 2).norm();

    let identity = diagonal_verdict(&vec![1.0; n], tol)?;
    let linear = diagonal_verdict(&(1..=n).map(|i| i as f64).collect::<Vec<_>>(), tol)?;
    let squares = diagonal_verdict(&(1..=n).map(|i| (i * i) as f64).collect::<Vec<_>>(), tol)?;
    let mut holds = diagonal_in_c2
        && superdiagonal_residual <= STRUCTURE_TOL
        && identity.conditions_hold
        && linear.conditions_hold
        && !squares.conditions_hold;
    for bump in 0..n {
        let mut values: Vec<f64> = (0..n).map(|i| 0.5 - 1.5 * i as f64).collect();
        let progression = diagonal_verdict(&values, tol)?;
        values[bump] += 0.25;
        let bumped = diagonal_verdict(&values, tol)?;
        holds &= progression.conditions_hold == progression.arithmetic;
        holds &= bumped.conditions_hold == bumped.arithmetic;
    }
    for v in [&identity, &linear, &squares] {
        holds &= v.conditions_hold == v.arithmetic;
    }
    Ok(ProgressionReport {
        n,
        superdiagonal_residual,
        diagonal_in_c2,
        identity,
        linear,
        squares,
        holds,
    })
}

/// `certify_smiley(J_n, k, l)` with `k ∈ {1, 2}` and `k ≤ l`.
pub fn truncated_smiley(n: usize, k: usize, l: usize, tol: &ToleranceConfig) -> Result<SmileyCertificate> {
    if !(k == 1 || k == 2) {
        return Err(Error::InvalidArgument(format!("k must be 1 or 2, got {k}")));
    }
    if k > l {
        return Err(Error::InvalidArgument(format!("need k ≤ l, got k = {k}, l = {l}")));
    }
    certify_smiley(&shift_truncation(n)?, k, l, tol)
}

/// `dim C_2(J_n)` for each `n`.
pub fn c2_dimension_table(sizes: &[usize], tol: &ToleranceConfig) -> Result<Vec<(usize, usize)>> {
    sizes
        .par_iter()
        .map(|&n| Ok((n, centralizer(&shift_truncation(n)?, 2, tol)?.dim())))
        .collect()
}

/// `dim C_2(C_2(J_n))` for each `n`; recorded, not asserted.
pub fn c2c2_dimension_table(sizes: &[usize], tol: &ToleranceConfig) -> Result<Vec<(usize, usize)>> {
    sizes
        .par_iter()
        .map(|&n| Ok((n, double_centralizer(&shift_truncation(n)?, 2, 2, tol)?.dim())))
        .collect()
}
