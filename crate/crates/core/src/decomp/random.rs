//! Seeded instance generators with known structure.
//!
//! Every generator is a pure function of its parameters and seed.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CanonicalDecomposition, SpectralProjector};
use crate::error::{Error, Result};
use crate::numlin::{c64, identity, ComplexMatrix, ZERO};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian (unit variance in each of the real and
/// imaginary parts, divided by √2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) / std::f64::consts::SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n);
    let qr = nalgebra::linalg::QR::new(g);
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Eigenvalues in the disk of radius 3 with pairwise separation at least
/// `min_sep`, excluding the points in `avoid` by the same margin.
fn separated_points<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    min_sep: f64,
    avoid: &[Complex64],
) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        let z = if attempts < 10_000 {
            let r = 3.0 * rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            Complex64::from_polar(r, theta)
        } else {
            // deterministic fallback along a widening spiral
            let k = (out.len() + avoid.len() + attempts) as f64;
            Complex64::from_polar(3.0 + k * min_sep, k)
        };
        let ok = out
            .iter()
            .chain(avoid.iter())
            .all(|w| (z - w).norm() >= min_sep);
        if ok {
            out.push(z);
        }
    }
    out
}

/// Random invertible `P = U Σ Vᴴ` with singular values spread geometrically
/// over `[1, c]`, `c ≤ cond_bound`. Returns `(P, P⁻¹)`.
fn conditioned_similarity<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    cond_bound: f64,
) -> (ComplexMatrix, ComplexMatrix) {
    let u = haar_unitary(rng, n);
    let v = haar_unitary(rng, n);
    let cond = 1.0 + (cond_bound - 1.0) * rng.gen::<f64>();
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                cond.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let s = ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64(sigma[i], 0.0) } else { ZERO });
    let s_inv = ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64(1.0 / sigma[i], 0.0) } else { ZERO });
    let p = &u * s * v.adjoint();
    let p_inv = &v * s_inv * u.adjoint();
    (p, p_inv)
}

/// A Jordan-type block structure: eigenvalue plus the sizes of its nilpotent
/// Jordan chains.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBlock {
    pub eigenvalue: Complex64,
    pub chains: Vec<usize>,
}

impl EigenBlock {
    fn size(&self) -> usize {
        self.chains.iter().sum()
    }
}

/// `A = P (D + N₀) P⁻¹` for the given block structure together with the exact
/// decomposition. Chain superdiagonals get random nonzero weights.
pub fn from_structure(
    blocks: &[EigenBlock],
    seed: u64,
    cond_bound: f64,
) -> Result<(ComplexMatrix, CanonicalDecomposition)> {
    if !(cond_bound >= 1.0 && cond_bound.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cond_bound must be ≥ 1, got {cond_bound}"
        )));
    }
    let n: usize = blocks.iter().map(EigenBlock::size).sum();
    if n == 0 {
        return Err(Error::InvalidArgument("empty block structure".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut d = ComplexMatrix::zeros(n, n);
    let mut nil = ComplexMatrix::zeros(n, n);
    let mut offset = 0;
    let mut ranges = Vec::new();
    let mut order = 1usize;
    for block in blocks {
        let start = offset;
        for &chain in &block.chains {
            order = order.max(chain);
            for i in 0..chain {
                d[(offset + i, offset + i)] = block.eigenvalue;
                if i + 1 < chain {
                    let w = 0.5 + rng.gen::<f64>();
                    nil[(offset + i, offset + i + 1)] = c64(w, 0.0);
                }
            }
            offset += chain;
        }
        ranges.push((block.eigenvalue, start, offset));
    }
    let (p, p_inv) = conditioned_similarity(&mut rng, n, cond_bound);
    let s = &p * &d * &p_inv;
    let nn = &p * &nil * &p_inv;
    let a = &s + &nn;
    let projectors = ranges
        .iter()
        .map(|&(eigenvalue, lo, hi)| {
            let mut e = ComplexMatrix::zeros(n, n);
            for i in lo..hi {
                e[(i, i)] = c64(1.0, 0.0);
            }
            SpectralProjector {
                eigenvalue,
                projector: &p * e * &p_inv,
            }
        })
        .collect();
    let truth = CanonicalDecomposition {
        s,
        n: nn,
        m: order - 1,
        projectors,
        warnings: Vec::new(),
    };
    Ok((a, truth))
}

/// Spectral matrix of type `m`: one eigenvalue of multiplicity `m+1` or
/// `m+2` carrying a nilpotent chain of length `m+1`, all other eigenvalues
/// simple and separated by at least 1.
pub fn random_spectral_of_type(
    n: usize,
    m: usize,
    seed: u64,
    cond_bound: f64,
) -> Result<(ComplexMatrix, CanonicalDecomposition)> {
    if n < m + 1 {
        return Err(Error::InvalidArgument(format!(
            "type {m} needs n ≥ {}, got n = {n}",
            m + 1
        )));
    }
    let mut rng = seeded_rng(seed ^ 0x5eed0f7e);
    let mult = if n > m + 1 && rng.gen::<bool>() { m + 2 } else { m + 1 };
    let points = separated_points(&mut rng, 1 + n - mult, 1.0, &[]);
    let mut chains = vec![m + 1];
    if mult > m + 1 {
        chains.push(1);
    }
    let mut blocks = vec![EigenBlock {
        eigenvalue: points[0],
        chains,
    }];
    for &z in &points[1..] {
        blocks.push(EigenBlock {
            eigenvalue: z,
            chains: vec![1],
        });
    }
    from_structure(&blocks, rng.gen(), cond_bound)
}

/// `U D Uᴴ` with Haar `U`; eigenvalues separated by at least 0.5 except for
/// occasional exact repeats.
pub fn random_normal(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    let mut rng = seeded_rng(seed ^ 0x000a_0a11);
    let u = haar_unitary(&mut rng, n);
    let distinct = separated_points(&mut rng, n, 0.5, &[]);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.gen::<f64>() < 0.25 {
            values.push(values[rng.gen_range(0..i)]);
        } else {
            values.push(distinct[i]);
        }
    }
    let d = crate::numlin::diag(&values);
    Ok(&u * d * u.adjoint())
}

/// Random Hermitian matrix `(G + Gᴴ)/2`.
pub fn random_selfadjoint(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = seeded_rng(seed ^ 0x5a5a);
    let g = ginibre(&mut rng, n);
    (&g + g.adjoint()) * c64(0.5, 0.0)
}

/// Complex Ginibre matrix.
pub fn random_generic(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = seeded_rng(seed ^ 0x6e6e);
    ginibre(&mut rng, n)
}

/// Diagonalizable matrix with at least one repeated eigenvalue and cond ≤ 20
/// similarity, or a non-diagonalizable one with a repeated eigenvalue carrying
/// two chains, chosen by the seed.
pub fn random_derogatory(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument("derogatory needs n ≥ 2".into()));
    }
    let mut rng = seeded_rng(seed ^ 0xde70);
    let mult = rng.gen_range(2..=n);
    let points = separated_points(&mut rng, 1 + n - mult, 1.0, &[]);
    let chains = if mult >= 3 && rng.gen::<bool>() {
        vec![mult - 1, 1]
    } else {
        vec![1; mult]
    };
    let mut blocks = vec![EigenBlock {
        eigenvalue: points[0],
        chains,
    }];
    for &z in &points[1..] {
        blocks.push(EigenBlock {
            eigenvalue: z,
            chains: vec![1],
        });
    }
    Ok(from_structure(&blocks, rng.gen(), 20.0)?.0)
}

/// Nilpotent matrix with a random Jordan partition of `n`, conjugated by a
/// similarity of condition number at most 20.
pub fn random_nilpotent(n: usize, seed: u64) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    let mut rng = seeded_rng(seed ^ 0x0e11);
    let mut chains = Vec::new();
    let mut left = n;
    while left > 0 {
        let c = rng.gen_range(1..=left);
        chains.push(c);
        left -= c;
    }
    chains.sort_unstable_by(|a, b| b.cmp(a));
    let blocks = [EigenBlock {
        eigenvalue: ZERO,
        chains,
    }];
    Ok(from_structure(&blocks, rng.gen(), 20.0)?.0)
}

/// `n×n` identity scaled by a random complex number; convenient degenerate
/// instance.
pub fn random_scalar(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = seeded_rng(seed ^ 0x5c);
    identity(n) * complex_normal(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::is_normal;
    use crate::numlin::ToleranceConfig;

    #[test]
    fn haar_is_unitary() {
        let mut rng = seeded_rng(1);
        let u = haar_unitary(&mut rng, 5);
        assert!((u.adjoint() * &u - identity(5)).norm() < 1e-12);
    }

    #[test]
    fn normal_generator() {
        let tol = ToleranceConfig::default();
        for seed in 0..20 {
            let a = random_normal(4, seed).unwrap();
            assert!(is_normal(&a, &tol));
        }
        assert_eq!(random_normal(3, 9).unwrap(), random_normal(3, 9).unwrap());
        assert!(random_normal(0, 1).is_err());
    }

    #[test]
    fn type_m_generator_truth() {
        let (a, truth) = random_spectral_of_type(3, 2, 4, 20.0).unwrap();
        let n3 = &truth.n * &truth.n * &truth.n;
        let n2 = &truth.n * &truth.n;
        assert!(n3.norm() < 1e-9);
        assert!(n2.norm() > 1e-3);
        assert_eq!(truth.m, 2);
        assert!((&truth.s + &truth.n - &a).norm() < 1e-12);

        let (_, t0) = random_spectral_of_type(4, 0, 2, 5.0).unwrap();
        assert!(t0.n.norm() == 0.0);
        assert_eq!(t0.m, 0);
        assert!(random_spectral_of_type(2, 2, 0, 20.0).is_err());
        assert!(random_spectral_of_type(3, 1, 0, 0.5).is_err());
    }

    #[test]
    fn similarity_condition_is_bounded() {
        let mut rng = seeded_rng(3);
        let (p, p_inv) = conditioned_similarity(&mut rng, 5, 20.0);
        assert!((&p * &p_inv - identity(5)).norm() < 1e-12);
        let sv = p.singular_values();
        let cond = sv.max() / sv.min();
        assert!(cond <= 20.0 + 1e-9);
    }

    #[test]
    fn derogatory_and_nilpotent() {
        for seed in 0..5 {
            let a = random_nilpotent(4, seed).unwrap();
            let a4 = &a * &a * &a * &a;
            assert!(a4.norm() < 1e-9 * (1.0 + a.norm()).powi(4));
            let d = random_derogatory(4, seed).unwrap();
            assert_eq!(d.shape(), (4, 4));
        }
    }
}
