use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::eigen::{jacobi_eigh, Eigen};
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues below this bound make square roots fail outright.
pub const NEGATIVE_EIG_LIMIT: f64 = -1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self::hermitize(matrix))
    }

    /// Symmetrise (M + M†)/2 without validation; for operators Hermitian by construction.
    pub fn hermitize(matrix: ComplexMatrix) -> Self {
        let n = matrix.rows();
        assert!(matrix.is_square(), "Hermitian operator must be square");
        let mut m = matrix;
        for i in 0..n {
            m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
            for j in i + 1..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self { matrix: m }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
        }
    }

    pub fn diag(d: &[f64]) -> Self {
        Self {
            matrix: ComplexMatrix::from_real_diag(d),
        }
    }

    pub fn pure(psi: &[C64]) -> Self {
        Self::hermitize(ComplexMatrix::outer(psi, psi))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace_re(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigh(&self) -> Eigen {
        jacobi_eigh(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix - &other.matrix,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale(s),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.matrix.data_mut().iter_mut().zip(other.matrix.data()) {
            *a += b * s;
        }
    }

    /// Re Tr[self · other].
    pub fn inner(&self, other: &Self) -> f64 {
        self.matrix.trace_product(&other.matrix).re
    }

    /// K · self · K†.
    pub fn congruence(&self, k: &ComplexMatrix) -> Self {
        Self::hermitize(self.matrix.conjugate_by(k))
    }

    /// Apply a real function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::hermitize(self.eigh().reconstruct_with(f))
    }

    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.abs()).sum()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Projector onto eigenvectors with eigenvalue above `tol`.
    pub fn support_projector(&self, tol: f64) -> Self {
        let e = self.eigh();
        let sel: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > tol).collect();
        Self::hermitize(e.projector(sel.into_iter()))
    }

    /// Orthonormal basis (as columns) of the eigenspace with eigenvalues above `tol`.
    pub fn support_basis(&self, tol: f64) -> ComplexMatrix {
        let e = self.eigh();
        let cols: Vec<Vec<C64>> = (0..e.dim())
            .filter(|&k| e.values[k] > tol)
            .map(|k| e.vector(k))
            .collect();
        ComplexMatrix::from_columns(self.dim(), &cols)
    }
}

impl Deref for HermitianOperator {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

fn check_psd(op: &HermitianOperator) -> Result<()> {
    let min = op.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Unit-trace positive semidefinite operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace_re();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        check_psd(&op)?;
        Ok(Self { op })
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    /// Normalise a nonzero PSD operator to unit trace.
    pub fn normalized(op: &HermitianOperator) -> Result<Self> {
        let tr = op.trace_re();
        if tr <= 0.0 {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(op.scale(1.0 / tr))
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n = super::matrix::norm(psi);
        if n == 0.0 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / n).collect();
        Ok(Self {
            op: HermitianOperator::pure(&v),
        })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            op: HermitianOperator::identity(n).scale(1.0 / n as f64),
        }
    }

    pub fn diag(p: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::diag(p))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }
}

impl Deref for DensityOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

/// Positive semidefinite operator with trace in (0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubnormalizedOperator {
    op: HermitianOperator,
}

impl SubnormalizedOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace_re();
        if tr <= 0.0 || tr > 1.0 + TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        check_psd(&op)?;
        Ok(Self { op })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }
}

impl Deref for SubnormalizedOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

impl From<DensityOperator> for HermitianOperator {
    fn from(d: DensityOperator) -> Self {
        d.op
    }
}

impl From<SubnormalizedOperator> for HermitianOperator {
    fn from(d: SubnormalizedOperator) -> Self {
        d.op
    }
}
