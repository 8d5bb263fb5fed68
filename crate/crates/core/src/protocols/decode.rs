use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{polar_decomposition, ComplexMatrix, HermitianOperator};

/// Candidate order and tests for one bucket, with the corrected Kraus operator of every branch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequentialDecoder {
    pub bucket_order: Vec<usize>,
    pub tests: Vec<HermitianOperator>,
    /// U†K for the branch that stops at each candidate, K = U√(K†K).
    pub branch_operators: Vec<ComplexMatrix>,
}

impl SequentialDecoder {
    /// Tests are applied in the given order; the last candidate takes the residual branch.
    pub fn new(bucket_order: Vec<usize>, tests: Vec<HermitianOperator>) -> Result<Self> {
        let d = tests.first().map(|t| t.dim()).unwrap_or(1);
        let n = tests.len();
        let mut residual = ComplexMatrix::identity(d);
        let mut branch_operators = Vec::with_capacity(n);
        for (m, t) in tests.iter().enumerate() {
            let k = if m + 1 == n {
                residual.clone()
            } else {
                let pass = crate::linalg::matrix_sqrt(&t.map_spectrum(|l| l.clamp(0.0, 1.0)))?;
                let fail = crate::linalg::matrix_sqrt(&t.map_spectrum(|l| 1.0 - l.clamp(0.0, 1.0)))?;
                let k = pass.matrix().matmul(&residual);
                residual = fail.matrix().matmul(&residual);
                k
            };
            let (u, _) = polar_decomposition(&k)?;
            branch_operators.push(u.adjoint().matmul(&k));
        }
        Ok(Self {
            bucket_order,
            tests,
            branch_operators,
        })
    }

    /// Unnormalised post-measurement state of each branch.
    pub fn branches(&self, state: &HermitianOperator) -> Vec<HermitianOperator> {
        self.branch_operators
            .iter()
            .map(|k| state.congruence(k))
            .collect()
    }
}

/// Branch states of a sequential test measurement on `state`; see [`SequentialDecoder`].
pub fn sequential_decode(
    state: &HermitianOperator,
    tests: &[HermitianOperator],
) -> Result<Vec<HermitianOperator>> {
    let dec = SequentialDecoder::new((0..tests.len()).collect(), tests.to_vec())?;
    Ok(dec.branches(state))
}
