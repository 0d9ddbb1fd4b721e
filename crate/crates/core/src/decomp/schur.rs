//! Complex Schur form, reordering by Givens swaps, and triangular Sylvester
//! solves used to build spectral projectors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numlin::{check_finite, identity, single_threaded_blas, ComplexMatrix, ZERO};

/// `A = Q T Qᴴ` with `Q` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: ComplexMatrix,
    pub t: ComplexMatrix,
}

impl SchurForm {
    /// LAPACK `zgees`; the nalgebra iteration fails to converge on some
    /// structured inputs.
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::Decomposition("Schur form needs a nonempty square matrix".into()));
        }
        check_finite(a)?;
        single_threaded_blas();
        let mut t = a.clone();
        let mut q = ComplexMatrix::zeros(n, n);
        let mut w = vec![ZERO; n];
        let mut rwork = vec![0.0; n];
        let mut bwork = vec![0i32; n];
        let mut sdim = 0;
        let mut info = 0;
        let ni = n as i32;
        let mut query = [ZERO];
        // SAFETY: column-major buffers with leading dimension n.
        unsafe {
            lapack::zgees(
                b'V', b'N', None, ni, t.as_mut_slice(), ni, &mut sdim, &mut w, q.as_mut_slice(), ni, &mut query, -1,
                &mut rwork, &mut bwork, &mut info,
            );
        }
        let lwork = (query[0].re as usize).max(2 * n);
        let mut work = vec![ZERO; lwork];
        unsafe {
            lapack::zgees(
                b'V', b'N', None, ni, t.as_mut_slice(), ni, &mut sdim, &mut w, q.as_mut_slice(), ni, &mut work,
                lwork as i32, &mut rwork, &mut bwork, &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Decomposition(format!("zgees failed with info = {info}")));
        }
        for j in 0..n {
            for i in (j + 1)..n {
                t[(i, j)] = ZERO;
            }
        }
        Ok(Self { q, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.t.diagonal().iter().cloned().collect()
    }

    /// Swaps diagonal entries `k` and `k+1` with a unitary rotation.
    pub fn swap_adjacent(&mut self, k: usize) {
        let n = self.t.nrows();
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let c = self.t[(k, k + 1)];
        // first column of G spans the eigenvector of the 2×2 block for b
        let x1 = c;
        let x2 = b - a;
        let r = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
        if r == 0.0 {
            return;
        }
        let g11 = x1 / r;
        let g21 = x2 / r;
        let g12 = -g21.conj();
        let g22 = g11.conj();

        for i in 0..n {
            let u = self.t[(i, k)];
            let v = self.t[(i, k + 1)];
            self.t[(i, k)] = u * g11 + v * g21;
            self.t[(i, k + 1)] = u * g12 + v * g22;
            let u = self.q[(i, k)];
            let v = self.q[(i, k + 1)];
            self.q[(i, k)] = u * g11 + v * g21;
            self.q[(i, k + 1)] = u * g12 + v * g22;
        }
        for j in 0..n {
            let u = self.t[(k, j)];
            let v = self.t[(k + 1, j)];
            self.t[(k, j)] = g11.conj() * u + g21.conj() * v;
            self.t[(k + 1, j)] = g12.conj() * u + g22.conj() * v;
        }
        self.t[(k, k)] = b;
        self.t[(k + 1, k + 1)] = a;
        self.t[(k + 1, k)] = ZERO;
    }

    /// Moves the diagonal positions flagged in `front` to the leading block,
    /// keeping relative order inside both groups. Returns the block size.
    pub fn reorder_to_front(&mut self, front: &[bool]) -> usize {
        let n = front.len();
        let mut flags = front.to_vec();
        // bubble each flagged entry left past unflagged neighbours
        for _ in 0..n {
            let mut moved = false;
            for k in 0..n.saturating_sub(1) {
                if !flags[k] && flags[k + 1] {
                    self.swap_adjacent(k);
                    flags.swap(k, k + 1);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        flags.iter().filter(|&&f| f).count()
    }
}

/// Solves `T11 R − R T22 = C` for upper triangular `T11` (p×p) and `T22`
/// (q×q) with disjoint diagonals.
pub fn triangular_sylvester(
    t11: &ComplexMatrix,
    t22: &ComplexMatrix,
    c: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let p = t11.nrows();
    let q = t22.nrows();
    let mut r = ComplexMatrix::zeros(p, q);
    for j in 0..q {
        let mut rhs: Vec<Complex64> = (0..p).map(|i| c[(i, j)]).collect();
        for l in 0..j {
            let coeff = t22[(l, j)];
            if coeff != ZERO {
                for (i, value) in rhs.iter_mut().enumerate() {
                    *value += r[(i, l)] * coeff;
                }
            }
        }
        let shift = t22[(j, j)];
        for i in (0..p).rev() {
            let mut acc = rhs[i];
            for l in (i + 1)..p {
                acc -= t11[(i, l)] * r[(l, j)];
            }
            let pivot = t11[(i, i)] - shift;
            if pivot.norm() == 0.0 {
                return Err(Error::Decomposition(
                    "Sylvester system is singular: clusters share an eigenvalue".into(),
                ));
            }
            r[(i, j)] = acc / pivot;
        }
    }
    Ok(r)
}

/// Spectral projector onto the invariant subspace of the flagged eigenvalues,
/// along the invariant subspace of the others.
pub fn spectral_projector(schur: &SchurForm, members: &[bool]) -> Result<ComplexMatrix> {
    let n = members.len();
    let mut work = schur.clone();
    let p = work.reorder_to_front(members);
    if p == n {
        return Ok(identity(n));
    }
    if p == 0 {
        return Ok(ComplexMatrix::zeros(n, n));
    }
    let q = n - p;
    let t11 = work.t.view((0, 0), (p, p)).into_owned();
    let t12 = work.t.view((0, p), (p, q)).into_owned();
    let t22 = work.t.view((p, p), (q, q)).into_owned();
    let r = triangular_sylvester(&t11, &t22, &t12)?;
    let mut block = ComplexMatrix::zeros(n, n);
    block.view_mut((0, 0), (p, p)).copy_from(&identity(p));
    block.view_mut((0, p), (p, q)).copy_from(&r);
    Ok(&work.q * block * work.q.adjoint())
}
