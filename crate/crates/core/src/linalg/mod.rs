//! Dense complex linear algebra: matrices, Hermitian operators, states, and the
//! spectral operations built on a deterministic Jacobi eigensolver.

mod eigen;
mod matrix;
mod operator;
mod ops;

pub use eigen::{jacobi_eigh, Eigen};
pub use matrix::{inner, norm, ComplexMatrix, C64, ONE, ZERO};
pub use operator::{
    DensityOperator, HermitianOperator, SubnormalizedOperator, HERMITIAN_TOL, NEGATIVE_EIG_LIMIT,
    PSD_TOL, TRACE_TOL,
};
pub use ops::{
    fidelity, matrix_sqrt, partial_trace, permute_systems, polar_decomposition, pseudo_inverse,
    pseudo_inverse_sqrt, purified_distance, purify, reduce_first, tensor, tensor_all,
    trace_norm_distance, uhlmann_partner, SystemLayout,
};

/// Eigendecomposition of a general matrix that must be Hermitian.
pub fn eigh(m: &ComplexMatrix) -> crate::Result<Eigen> {
    let op = HermitianOperator::new(m.clone())?;
    Ok(op.eigh())
}
