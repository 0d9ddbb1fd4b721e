//! Canonical decomposition `A = S + N` with spectral projectors.
//!
//! `S` is diagonalizable, `N` nilpotent and `SN = NS`. The algorithm is:
//! complex Schur form, clustering of the Schur diagonal, one spectral
//! projector per cluster (reorder the cluster to the leading block and solve a
//! triangular Sylvester equation), `S = Σ λ̄ᵢ Pᵢ` with `λ̄ᵢ` the cluster mean,
//! and `N = A − S`.
//!
//! Eigenvalue clustering is single linkage with a size-aware radius. Rounding
//! splits a defective eigenvalue whose longest Jordan chain has length `p`
//! into a ring of radius about `‖A‖·ε^{1/p}`, far above any fixed absolute
//! threshold, so a group of `p` eigenvalues is accepted as one cluster when its
//! single-linkage height stays below `max(cluster_tol, 2‖A‖(10⁴ε)^{1/p})`.

pub mod random;
pub mod schur;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numlin::{c64, check_square_finite, identity, ComplexMatrix, ToleranceConfig};
use schur::{spectral_projector, SchurForm};

pub use random::{
    from_structure, random_derogatory, random_generic, random_nilpotent, random_normal,
    random_scalar, random_selfadjoint, random_spectral_of_type, EigenBlock,
};

const DEFECT_SLACK: f64 = 1e4;

/// Eigenprojection for one eigenvalue cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProjector {
    pub eigenvalue: Complex64,
    pub projector: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDecomposition {
    /// Diagonalizable part.
    pub s: ComplexMatrix,
    /// Nilpotent part.
    pub n: ComplexMatrix,
    /// Type: `N^(m+1) = 0` and `N^m ≠ 0`.
    pub m: usize,
    pub projectors: Vec<SpectralProjector>,
    pub warnings: Vec<String>,
}

/// Residuals of the decomposition invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionResiduals {
    pub reconstruction: f64,
    pub commutator: f64,
    pub resolution_of_identity: f64,
    pub idempotence: f64,
    pub orthogonality: f64,
    pub spectral_sum: f64,
    pub nilpotent_power: f64,
}

impl CanonicalDecomposition {
    pub fn residuals(&self, a: &ComplexMatrix) -> DecompositionResiduals {
        let dim = a.nrows();
        let reconstruction = (&self.s + &self.n - a).norm();
        let commutator = (&self.s * &self.n - &self.n * &self.s).norm();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut spectral = ComplexMatrix::zeros(dim, dim);
        let mut idempotence: f64 = 0.0;
        let mut orthogonality: f64 = 0.0;
        for (i, p) in self.projectors.iter().enumerate() {
            sum += &p.projector;
            spectral += &p.projector * p.eigenvalue;
            idempotence = idempotence.max((&p.projector * &p.projector - &p.projector).norm());
            for (j, q) in self.projectors.iter().enumerate() {
                if i != j {
                    orthogonality = orthogonality.max((&p.projector * &q.projector).norm());
                }
            }
        }
        let mut power = identity(dim);
        for _ in 0..=self.m {
            power = &self.n * power;
        }
        DecompositionResiduals {
            reconstruction,
            commutator,
            resolution_of_identity: (sum - identity(dim)).norm(),
            idempotence,
            orthogonality,
            spectral_sum: (spectral - &self.s).norm(),
            nilpotent_power: power.norm(),
        }
    }
}

/// Clustering radius for a group of `size` eigenvalues of a matrix of norm
/// `scale`.
pub fn cluster_radius(size: usize, scale: f64, tol: &ToleranceConfig) -> f64 {
    let defect = 2.0 * scale * (DEFECT_SLACK * f64::EPSILON).powf(1.0 / size.max(1) as f64);
    tol.cluster_tol.max(defect)
}

#[derive(Debug, Clone)]
struct Node {
    members: Vec<usize>,
    height: f64,
    children: Option<(usize, usize)>,
}

/// Groups eigenvalues into clusters; returns member index lists ordered by
/// smallest member, plus borderline warnings.
pub fn cluster_eigenvalues(
    values: &[Complex64],
    scale: f64,
    tol: &ToleranceConfig,
) -> (Vec<Vec<usize>>, Vec<String>) {
    let n = values.len();
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            members: vec![i],
            height: 0.0,
            children: None,
        })
        .collect();
    let mut owner: Vec<usize> = (0..n).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push(((values[i] - values[j]).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    for (dist, i, j) in pairs {
        let (a, b) = (owner[i], owner[j]);
        if a == b {
            continue;
        }
        let mut members = nodes[a].members.clone();
        members.extend_from_slice(&nodes[b].members);
        members.sort_unstable();
        let id = nodes.len();
        for &mbr in &members {
            owner[mbr] = id;
        }
        nodes.push(Node {
            members,
            height: dist,
            children: Some((a, b)),
        });
    }

    let mut roots: Vec<usize> = owner.clone();
    roots.sort_unstable();
    roots.dedup();
    let mut clusters = Vec::new();
    let mut stack = roots;
    while let Some(id) = stack.pop() {
        let node = &nodes[id];
        let valid = node.height <= cluster_radius(node.members.len(), scale, tol);
        match (valid, node.children) {
            (false, Some((a, b))) => {
                stack.push(a);
                stack.push(b);
            }
            _ => clusters.push(node.members.clone()),
        }
    }
    clusters.sort_by_key(|c| c[0]);

    let mut warnings = Vec::new();
    for x in 0..clusters.len() {
        for y in (x + 1)..clusters.len() {
            let gap = clusters[x]
                .iter()
                .flat_map(|&i| clusters[y].iter().map(move |&j| (values[i] - values[j]).norm()))
                .fold(f64::INFINITY, f64::min);
            let radius = cluster_radius(clusters[x].len() + clusters[y].len(), scale, tol);
            if gap <= 2.0 * radius {
                warnings.push(format!(
                    "borderline eigenvalue clusters: gap {gap:.3e} within twice the clustering radius {radius:.3e}"
                ));
            }
        }
    }
    (clusters, warnings)
}

fn order_by_norm(nil: &ComplexMatrix, tol: &ToleranceConfig) -> Option<usize> {
    let dim = nil.nrows();
    let base = 1.0 + nil.norm();
    let mut power = identity(dim);
    for j in 1..=dim.max(1) {
        power = nil * power;
        if power.norm() <= tol.zero_tol * base.powi(j as i32) {
            return Some(j);
        }
    }
    None
}

/// Smallest `j` with `‖N^j‖ ≤ zero_tol·(1+‖N‖)^j`.
pub fn nilpotency_order(nil: &ComplexMatrix, tol: &ToleranceConfig) -> Result<usize> {
    let dim = check_square_finite(nil)?;
    let scale = nil.norm();
    if scale == 0.0 {
        return Ok(1);
    }
    let schur = SchurForm::new(nil)?;
    let largest = schur
        .eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if largest > cluster_radius(dim, scale, tol) {
        return Err(Error::NotNilpotent(largest));
    }
    order_by_norm(nil, tol).ok_or(Error::NotNilpotent(largest))
}

/// Canonical decomposition `A = S + N`.
pub fn jordan_chevalley(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<CanonicalDecomposition> {
    let dim = check_square_finite(a)?;
    let schur = SchurForm::new(a)?;
    let values = schur.eigenvalues();
    let (clusters, mut warnings) = cluster_eigenvalues(&values, a.norm(), tol);

    let mut projectors = Vec::with_capacity(clusters.len());
    let mut s = ComplexMatrix::zeros(dim, dim);
    for cluster in &clusters {
        let mut flags = vec![false; dim];
        for &i in cluster {
            flags[i] = true;
        }
        let mean = cluster.iter().map(|&i| values[i]).sum::<Complex64>() / cluster.len() as f64;
        let p = spectral_projector(&schur, &flags)?;
        s += &p * mean;
        projectors.push(SpectralProjector {
            eigenvalue: mean,
            projector: p,
        });
    }
    let n = a - &s;
    let m = match order_by_norm(&n, tol) {
        Some(order) => order - 1,
        None => {
            warnings.push("nilpotent part does not vanish to zero_tol within n powers".into());
            dim - 1
        }
    };
    Ok(CanonicalDecomposition {
        s,
        n,
        m,
        projectors,
        warnings,
    })
}

pub fn is_normal(a: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
    let adj = a.adjoint();
    let defect = (a * &adj - &adj * a).norm();
    defect <= tol.zero_tol * a.norm_squared()
}

pub fn is_selfadjoint(a: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
    (a - a.adjoint()).norm() <= tol.zero_tol * a.norm()
}

/// `(Re X, Im X) = ((X + X*)/2, (X − X*)/(2i))`.
pub fn re_im_parts(x: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let adj = x.adjoint();
    let re = (x + &adj) * c64(0.5, 0.0);
    let im = (x - &adj) * c64(0.0, -0.5);
    (re, im)
}
