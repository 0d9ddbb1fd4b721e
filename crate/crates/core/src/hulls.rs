//! Polynomial hull, generated *-algebra and commutants.
//!
//! In finite dimensions the von Neumann algebra generated by `A` and `I` is
//! the unital *-algebra generated by `A` and `A*`. It is computed twice, once
//! by product closure and once as the double commutant of `{I, A, A*}`, and
//! the two answers are required to agree.
//!
//! For non-normal `A`, `VN(A)` is *-closed and can be strictly larger than the
//! double commutant `{A}''` (for `J₂` it is all of `M₂` while `{J₂}''` is
//! `span{I, J₂}`). Certification targets `VN(A)`.

use num_complex::Complex64;

use crate::adcalc::ad_lift;
use crate::error::{Error, Result};
use crate::numlin::{
    check_square_finite, hs_inner, identity, orthonormalize, rounding_floor, subspace_equal, ComplexMatrix,
    OperatorSubspace, StackedKernel, ToleranceConfig,
};

/// `Pol(A) = span{I, A, A², …}`, built by Arnoldi iteration in matrix space.
///
/// A new power is accepted while its component orthogonal to the current span
/// exceeds `rank_rel_tol` times its own norm.
pub fn pol_hull(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<OperatorSubspace> {
    let n = check_square_finite(a)?;
    let mut basis: Vec<ComplexMatrix> = vec![identity(n) / Complex64::new((n as f64).sqrt(), 0.0)];
    for _ in 1..n {
        let last = basis.last().expect("non-empty");
        let mut w = a * last;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        // two passes of Gram–Schmidt
        for _ in 0..2 {
            for b in &basis {
                let coeff = hs_inner(&w, b)?;
                w -= b * coeff;
            }
        }
        let rest = w.norm();
        if rest <= tol.rank_rel_tol * norm {
            break;
        }
        basis.push(w / Complex64::new(rest, 0.0));
    }
    orthonormalize(n, &basis, tol)
}

/// Unital *-algebra generated by `generators`.
pub fn star_algebra_hull(generators: &[ComplexMatrix], tol: &ToleranceConfig) -> Result<OperatorSubspace> {
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("star_algebra_hull needs at least one generator".into()))?;
    let n = check_square_finite(first)?;
    let mut seeds = vec![identity(n)];
    for g in generators {
        if check_square_finite(g)? != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.nrows(),
            });
        }
        seeds.push(g.clone());
        seeds.push(g.adjoint());
    }
    let mut hull = orthonormalize(n, &seeds, tol)?;
    let cap = n * n + 2;
    for _ in 0..cap {
        let basis = hull.basis();
        let mut mats = basis.clone();
        for x in &basis {
            for y in &basis {
                mats.push(x * y);
            }
        }
        let next = orthonormalize(n, &mats, tol)?;
        if next.dim() == hull.dim() {
            return Ok(next);
        }
        hull = next;
    }
    Err(Error::Integrity(format!(
        "product closure did not stabilize within {cap} rounds"
    )))
}

/// `S' = {X : XY = YX for all Y ∈ S}`.
pub fn commutant(s: &OperatorSubspace, tol: &ToleranceConfig) -> Result<OperatorSubspace> {
    let n = s.n();
    // basis elements have unit norm
    let mut acc = StackedKernel::with_floor(n * n, rounding_floor(2.0 * n as f64));
    for y in s.basis() {
        acc.push(ad_lift(&y)?.matrix())?;
    }
    OperatorSubspace::from_orthonormal_columns(n, acc.kernel(tol)?)
}

/// Both routes to `VN(A)` and their agreement residual.
#[derive(Debug, Clone)]
pub struct VonNeumannRoutes {
    pub generated: OperatorSubspace,
    pub double_commutant: OperatorSubspace,
    pub residual: f64,
    pub agree: bool,
}

pub fn vn_routes(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<VonNeumannRoutes> {
    let n = check_square_finite(a)?;
    let generated = star_algebra_hull(std::slice::from_ref(a), tol)?;
    let star_set = orthonormalize(n, &[identity(n), a.clone(), a.adjoint()], tol)?;
    let double_commutant = commutant(&commutant(&star_set, tol)?, tol)?;
    let agreement = subspace_equal(&generated, &double_commutant, tol)?;
    Ok(VonNeumannRoutes {
        generated,
        double_commutant,
        residual: agreement.residual,
        agree: agreement.holds,
    })
}

/// `VN(A)`: the generated *-algebra, cross-checked against the double
/// commutant of `{I, A, A*}`.
pub fn vn_hull(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<OperatorSubspace> {
    let routes = vn_routes(a, tol)?;
    if !routes.agree {
        return Err(Error::Integrity(format!(
            "generated *-algebra (dim {}) and double commutant (dim {}) disagree, residual {:.3e}",
            routes.generated.dim(),
            routes.double_commutant.dim(),
            routes.residual
        )));
    }
    Ok(routes.generated)
}

/// Largest distance from `x*` to the subspace over its basis elements.
pub fn adjoint_closure_defect(s: &OperatorSubspace) -> f64 {
    s.basis()
        .iter()
        .map(|b| s.distance(&b.adjoint()))
        .fold(0.0, f64::max)
}

/// Largest distance from a pairwise product of basis elements to the subspace.
pub fn product_closure_defect(s: &OperatorSubspace) -> f64 {
    let basis = s.basis();
    let mut worst: f64 = 0.0;
    for x in &basis {
        for y in &basis {
            worst = worst.max(s.distance(&(x * y)));
        }
    }
    worst
}
