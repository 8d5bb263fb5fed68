use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse_sqrt, HermitianOperator};

/// Relative tolerance for deciding that ρ leaks outside supp σ.
const LEAK_TOL: f64 = 1e-10;

/// Max divergence log2 min{λ : ρ ≤ 2^λ σ}; +∞ when supp ρ ⊄ supp σ.
pub fn d_max(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    d_max_blocks(&[(rho.clone(), sigma.clone())])
}

/// Max divergence of a direct sum: the largest ratio over blocks.
pub fn d_max_blocks(blocks: &[(HermitianOperator, HermitianOperator)]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for (rho, sigma) in blocks {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(
                "max divergence operands differ in dimension".into(),
            ));
        }
        let r = max_ratio(rho, sigma)?;
        if r.is_infinite() {
            return Ok(f64::INFINITY);
        }
        best = best.max(r);
    }
    Ok(if best > 0.0 {
        best.log2()
    } else {
        f64::NEG_INFINITY
    })
}

fn max_ratio(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    let scale = sigma.max_eigenvalue().max(1e-300);
    let basis = sigma.support_basis(1e-12 * scale);
    let tr = rho.trace_re();
    if basis.cols() == 0 {
        return Ok(if tr > LEAK_TOL { f64::INFINITY } else { 0.0 });
    }
    let r = rho.congruence(&basis.adjoint());
    if tr - r.trace_re() > LEAK_TOL * tr.max(1.0) {
        return Ok(f64::INFINITY);
    }
    let s = sigma.congruence(&basis.adjoint());
    let inv = pseudo_inverse_sqrt(&s)?;
    Ok(r.congruence(inv.matrix()).max_eigenvalue().max(0.0))
}
