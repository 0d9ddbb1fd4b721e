//! Dense complex linear algebra on matrix space.
//!
//! Matrix space `M_n(C)` carries the Hilbert–Schmidt inner product
//! `<X, Y> = trace(Y* X)`. Under column stacking this is the ordinary
//! Euclidean inner product of `vec(X)` and `vec(Y)`, so every subspace is kept
//! as an `n² × d` matrix with orthonormal columns.
//!
//! Numerical rank is always decided relative to the largest singular value of
//! the system at hand, which keeps every decision invariant under rescaling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Thresholds used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff for numerical rank.
    pub rank_rel_tol: f64,
    /// Largest residual accepted for a subspace containment.
    pub containment_tol: f64,
    /// Norm threshold for "is zero".
    pub zero_tol: f64,
    /// Minimum eigenvalue clustering radius.
    pub cluster_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-10,
            containment_tol: 1e-7,
            zero_tol: 1e-9,
            cluster_tol: 1e-7,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rank_rel_tol", self.rank_rel_tol),
            ("containment_tol", self.containment_tol),
            ("zero_tol", self.zero_tol),
            ("cluster_tol", self.cluster_tol),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a positive finite number, got {value}"
                )));
            }
        }
        Ok(())
    }
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Matrix unit `E_ij` (zero based indices).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(i, j)] = ONE;
    e
}

pub fn diag(values: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    let v: Vec<Complex64> = values.iter().map(|&x| c64(x, 0.0)).collect();
    diag(&v)
}

/// Frobenius (Hilbert–Schmidt) norm.
pub fn hs_norm(x: &ComplexMatrix) -> f64 {
    x.norm()
}

/// Checks squareness and finiteness; returns the dimension.
pub fn check_square_finite(m: &ComplexMatrix) -> Result<usize> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(Error::Empty);
    }
    check_finite(m)?;
    Ok(rows)
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn check_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<usize> {
    let n = check_square_finite(a)?;
    let m = check_square_finite(b)?;
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m,
        });
    }
    Ok(n)
}

/// Column-stacking vectorization.
pub fn vectorize(x: &ComplexMatrix) -> DVector<Complex64> {
    // nalgebra storage is column major, which is exactly vec(X).
    DVector::from_column_slice(x.as_slice())
}

pub fn unvectorize(v: &[Complex64], n: usize) -> ComplexMatrix {
    debug_assert_eq!(v.len(), n * n);
    ComplexMatrix::from_column_slice(n, n, v)
}

/// Hilbert–Schmidt pairing `trace(Y* X)`.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<Complex64> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    Ok(y.iter().zip(x.iter()).map(|(b, a)| b.conj() * a).sum())
}

/// Singular value decomposition `M = U Σ Vᴴ`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × min(rows, cols)`, when requested.
    pub u: Option<ComplexMatrix>,
    pub singular_values: Vec<f64>,
    /// `cols × cols`, when requested.
    pub v_t: Option<ComplexMatrix>,
}

pub(crate) fn single_threaded_blas() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    extern "C" {
        fn openblas_set_num_threads(n: std::os::raw::c_int);
    }
    // results must not depend on how BLAS splits work
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// LAPACK `zgesvd`. The nalgebra SVD was not used because it returns wrong
/// factors for some rank-deficient complex inputs.
pub fn svd(m: ComplexMatrix, want_u: bool, want_v: bool) -> Result<Svd> {
    check_finite(&m)?;
    single_threaded_blas();
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: want_u.then(|| ComplexMatrix::zeros(rows, 0)),
            singular_values: Vec::new(),
            v_t: want_v.then(|| ComplexMatrix::identity(cols, cols)),
        });
    }
    let mut a = m;
    let mut s = vec![0.0; k];
    let (jobu, ldu, ucols) = if want_u { (b'S', rows, k) } else { (b'N', 1, 1) };
    let (jobvt, ldvt, vtcols) = if want_v { (b'A', cols, cols) } else { (b'N', 1, 1) };
    let mut u = ComplexMatrix::zeros(ldu, ucols);
    let mut vt = ComplexMatrix::zeros(ldvt, vtcols);
    let mut rwork = vec![0.0; 5 * k];
    let mut info = 0;
    let lda = rows as i32;
    let mut query = [ZERO];
    // SAFETY: every buffer is column major with the leading dimensions given.
    unsafe {
        lapack::zgesvd(
            jobu, jobvt, rows as i32, cols as i32, a.as_mut_slice(), lda, &mut s, u.as_mut_slice(), ldu as i32,
            vt.as_mut_slice(), ldvt as i32, &mut query, -1, &mut rwork, &mut info,
        );
    }
    let lwork = (query[0].re as usize).max(1);
    let mut work = vec![ZERO; lwork];
    unsafe {
        lapack::zgesvd(
            jobu, jobvt, rows as i32, cols as i32, a.as_mut_slice(), lda, &mut s, u.as_mut_slice(), ldu as i32,
            vt.as_mut_slice(), ldvt as i32, &mut work, lwork as i32, &mut rwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Decomposition(format!("zgesvd failed with info = {info}")));
    }
    Ok(Svd {
        u: want_u.then_some(u),
        singular_values: s,
        v_t: want_v.then_some(vt),
    })
}

/// Orthonormal basis (as columns) of the numerical null space of `m`.
///
/// A right singular direction belongs to the kernel when its singular value is
/// at most `rank_rel_tol · σ_max`; a zero matrix has a full kernel.
pub fn kernel_basis(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    kernel_basis_with_floor(m, tol, 0.0)
}

/// Rounding-noise level of a computed quantity of magnitude `scale`.
pub fn rounding_floor(scale: f64) -> f64 {
    64.0 * f64::EPSILON * scale
}

/// Like [`kernel_basis`], but singular values at or below `floor` also count
/// as zero. Callers pass the rounding-noise level of `m`, so that an operator
/// which is zero up to rounding gets a full kernel instead of a spurious rank.
pub fn kernel_basis_with_floor(
    m: &ComplexMatrix,
    tol: &ToleranceConfig,
    floor: f64,
) -> Result<ComplexMatrix> {
    let cols = m.ncols();
    if cols == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let dec = svd(m.clone(), false, true)?;
    let v_t = dec.v_t.expect("requested right singular vectors");
    let sigma = &dec.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = (tol.rank_rel_tol * sigma_max).max(floor);

    let mut picked: Vec<DVector<Complex64>> = Vec::new();
    for i in 0..cols {
        // rows of Vᴴ past min(rows, cols) span directions with σ = 0
        let s = sigma.get(i).copied().unwrap_or(0.0);
        if sigma_max == 0.0 || s <= cutoff {
            picked.push(v_t.row(i).adjoint());
        }
    }
    Ok(columns_to_matrix(cols, &picked))
}

fn columns_to_matrix(rows: usize, cols: &[DVector<Complex64>]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Streaming null-space accumulator for tall stacked systems.
///
/// Blocks of rows are folded into a running triangular factor `R` with
/// `Mᴴ M = Rᴴ R`, so the final kernel equals the kernel of the whole stack
/// while memory stays at `cols × cols`.
#[derive(Debug, Clone)]
pub struct StackedKernel {
    cols: usize,
    r: ComplexMatrix,
    floor: f64,
}

impl StackedKernel {
    pub fn new(cols: usize) -> Self {
        Self::with_floor(cols, 0.0)
    }

    /// Accumulator whose kernel also treats singular values `≤ floor` as zero.
    pub fn with_floor(cols: usize, floor: f64) -> Self {
        Self {
            cols,
            r: ComplexMatrix::zeros(0, cols),
            floor,
        }
    }

    /// Raises the noise floor; used when later blocks are larger.
    pub fn raise_floor(&mut self, floor: f64) {
        self.floor = self.floor.max(floor);
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn push(&mut self, block: &ComplexMatrix) -> Result<()> {
        if block.ncols() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: block.ncols(),
            });
        }
        if block.nrows() == 0 {
            return Ok(());
        }
        check_finite(block)?;
        let rows = self.r.nrows() + block.nrows();
        let mut stacked = ComplexMatrix::zeros(rows, self.cols);
        stacked
            .view_mut((0, 0), (self.r.nrows(), self.cols))
            .copy_from(&self.r);
        stacked
            .view_mut((self.r.nrows(), 0), (block.nrows(), self.cols))
            .copy_from(block);
        self.r = if rows > self.cols {
            nalgebra::linalg::QR::new(stacked).r()
        } else {
            stacked
        };
        Ok(())
    }

    pub fn kernel(&self, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
        if self.r.nrows() == 0 {
            return Ok(identity(self.cols));
        }
        kernel_basis_with_floor(&self.r, tol, self.floor)
    }
}

/// A linear subspace of `M_n(C)` with a Hilbert–Schmidt orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSubspace {
    n: usize,
    /// `n² × dim`, orthonormal columns holding `vec` of the basis matrices.
    columns: ComplexMatrix,
}

impl OperatorSubspace {
    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal_columns(n: usize, columns: ComplexMatrix) -> Result<Self> {
        if columns.nrows() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: columns.nrows(),
            });
        }
        Ok(Self { n, columns })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            columns: ComplexMatrix::zeros(n * n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            columns: identity(n * n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn columns(&self) -> &ComplexMatrix {
        &self.columns
    }

    pub fn element(&self, i: usize) -> ComplexMatrix {
        unvectorize(self.columns.column(i).as_slice(), self.n)
    }

    pub fn basis(&self) -> Vec<ComplexMatrix> {
        (0..self.dim()).map(|i| self.element(i)).collect()
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = vectorize(x);
        let coeffs = self.columns.adjoint() * &v;
        let p = &self.columns * coeffs;
        unvectorize(p.as_slice(), self.n)
    }

    /// Hilbert–Schmidt distance from `x` to the subspace.
    pub fn distance(&self, x: &ComplexMatrix) -> f64 {
        (x - self.project(x)).norm()
    }

    /// Matrix of the orthogonal projector `I − P` on `C^{n²}`.
    pub fn complement_projector(&self) -> ComplexMatrix {
        identity(self.n * self.n) - &self.columns * self.columns.adjoint()
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.columns.adjoint() * &self.columns;
        let d = g - identity(self.dim());
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Orthonormal basis of `span(mats)`.
pub fn orthonormalize(
    n: usize,
    mats: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Result<OperatorSubspace> {
    for m in mats {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
    }
    if mats.is_empty() {
        return Ok(OperatorSubspace::zero(n));
    }
    let mut stacked = ComplexMatrix::zeros(n * n, mats.len());
    for (j, m) in mats.iter().enumerate() {
        stacked.set_column(j, &vectorize(m));
    }
    orthonormalize_columns(n, stacked, tol)
}

/// Orthonormal basis of the column span of an `n² × m` matrix.
pub fn orthonormalize_columns(
    n: usize,
    stacked: ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<OperatorSubspace> {
    if stacked.nrows() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: stacked.nrows(),
        });
    }
    if stacked.ncols() == 0 {
        return Ok(OperatorSubspace::zero(n));
    }
    let dec = svd(stacked, true, false)?;
    let u = dec.u.expect("requested left singular vectors");
    let sigma = &dec.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return Ok(OperatorSubspace::zero(n));
    }
    let cutoff = tol.rank_rel_tol * sigma_max;
    let picked: Vec<DVector<Complex64>> = sigma
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cutoff)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    OperatorSubspace::from_orthonormal_columns(n, columns_to_matrix(n * n, &picked))
}

fn check_ambient(u: &OperatorSubspace, v: &OperatorSubspace) -> Result<()> {
    if u.n != v.n {
        return Err(Error::DimensionMismatch {
            expected: u.n,
            found: v.n,
        });
    }
    Ok(())
}

/// `U ∩ V`, computed as the joint null space of the complement projectors.
pub fn subspace_intersect(
    u: &OperatorSubspace,
    v: &OperatorSubspace,
    tol: &ToleranceConfig,
) -> Result<OperatorSubspace> {
    check_ambient(u, v)?;
    let n = u.n;
    if u.is_zero() || v.is_zero() {
        return Ok(OperatorSubspace::zero(n));
    }
    let mut acc = StackedKernel::with_floor(n * n, rounding_floor((n * n) as f64));
    acc.push(&u.complement_projector())?;
    acc.push(&v.complement_projector())?;
    OperatorSubspace::from_orthonormal_columns(n, acc.kernel(tol)?)
}

/// Outcome of a containment test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub holds: bool,
    pub residual: f64,
}

/// Tests `V ⊆ U`: the residual is the largest distance from a basis element of
/// `V` to `U`.
pub fn subspace_contains(
    u: &OperatorSubspace,
    v: &OperatorSubspace,
    tol: &ToleranceConfig,
) -> Result<Containment> {
    check_ambient(u, v)?;
    let residual = if v.is_zero() {
        0.0
    } else {
        let proj = &u.columns * (u.columns.adjoint() * &v.columns);
        let diff = &v.columns - proj;
        diff.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    };
    Ok(Containment {
        holds: residual <= tol.containment_tol,
        residual,
    })
}

/// Both containments, returning the larger residual.
pub fn subspace_equal(
    u: &OperatorSubspace,
    v: &OperatorSubspace,
    tol: &ToleranceConfig,
) -> Result<Containment> {
    let a = subspace_contains(u, v, tol)?;
    let b = subspace_contains(v, u, tol)?;
    let residual = a.residual.max(b.residual);
    Ok(Containment {
        holds: a.holds && b.holds && u.dim() == v.dim(),
        residual,
    })
}
