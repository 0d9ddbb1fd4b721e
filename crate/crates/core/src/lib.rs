//! Computational toolkit for s-centralizers of complex matrices.
//!
//! The crate computes centralizers `C_s(A) = {X : ad_A^s(X) = 0}`, double
//! centralizers `C_k(C_l(A))`, the canonical decomposition `A = S + N`, the
//! polynomial hull `Pol(A)` and the generated von Neumann algebra `VN(A)`, and
//! certifies containments of the form `C_k(C_l(A)) ⊆ VN(A)` / `⊆ Pol(A)`.
//!
//! Matrix space `M_n(C)` is identified with `C^{n²}` by column stacking, so
//! `vec(AXB) = (Bᵀ ⊗ A) vec(X)`. All subspaces of matrix space are stored as
//! Hilbert–Schmidt orthonormal bases.

// links the system LAPACK/OpenBLAS used by `numlin::svd`
extern crate lapack_src;
extern crate openblas_src;

pub mod adcalc;
pub mod certify;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod hulls;
pub mod numlin;
pub mod shiftlab;

pub use error::{Error, Result};
pub use numlin::{ComplexMatrix, OperatorSubspace, ToleranceConfig};

/// Tool version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
