use super::{product_of_marginals, xlog2x};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, HermitianOperator, SystemLayout};
use crate::objects::CQState;

pub fn von_neumann_entropy(op: &HermitianOperator) -> f64 {
    -op.eigenvalues().into_iter().map(xlog2x).sum::<f64>()
}

/// D(ρ‖σ) = Tr ρ(log ρ − log σ); +∞ when supp ρ ⊄ supp σ.
pub fn relative_entropy(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "relative entropy operands differ in dimension".into(),
        ));
    }
    let e = sigma.eigh();
    let scale = e.values.first().copied().unwrap_or(0.0).max(1e-300);
    let mut cross = 0.0;
    for k in 0..e.dim() {
        let v = e.vector(k);
        let w = rho
            .matvec(&v)
            .iter()
            .zip(&v)
            .map(|(a, b)| (b.conj() * a).re)
            .sum::<f64>();
        if e.values[k] > 1e-12 * scale {
            cross += w * e.values[k].log2();
        } else if w > 1e-10 {
            return Ok(f64::INFINITY);
        }
    }
    let own: f64 = rho.eigenvalues().into_iter().map(xlog2x).sum();
    Ok(own - cross)
}

/// I(L:R) for the factors in `left` against the remaining factors.
pub fn mutual_information(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    left: &[&str],
) -> Result<f64> {
    let right: Vec<&str> = layout
        .factors()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| !left.contains(l))
        .collect();
    let hl = von_neumann_entropy(&partial_trace(rho, layout, left)?);
    let hr = von_neumann_entropy(&partial_trace(rho, layout, &right)?);
    Ok(hl + hr - von_neumann_entropy(rho))
}

/// H(rest | cond) = H(all) − H(cond).
pub fn conditional_entropy(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    cond: &[&str],
) -> Result<f64> {
    Ok(von_neumann_entropy(rho) - von_neumann_entropy(&partial_trace(rho, layout, cond)?))
}

/// Entropy of a classical-quantum state: H(label) + Σ w S(ρ_w).
pub fn cq_entropy(cq: &CQState) -> f64 {
    let total: f64 = cq.weights().iter().sum();
    (0..cq.len())
        .map(|i| {
            -xlog2x(cq.weight(i) / total) + cq.weight(i) / total * von_neumann_entropy(cq.block(i))
        })
        .sum()
}

/// I(L:R) where each side is a set of classical registers plus quantum factors.
pub fn cq_mutual_information(
    cq: &CQState,
    left: (&[&str], &[&str]),
    right: (&[&str], &[&str]),
) -> Result<f64> {
    let regs: Vec<&str> = left.0.iter().chain(right.0).copied().collect();
    let quantum: Vec<&str> = left.1.iter().chain(right.1).copied().collect();
    let h = |r: &[&str], q: &[&str]| -> Result<f64> { Ok(cq_entropy(&cq.marginal(r, q)?)) };
    Ok(h(left.0, left.1)? + h(right.0, right.1)? - h(&regs, &quantum)?)
}

/// D(ρ‖ρ_L ⊗ ρ_R), which equals the mutual information.
pub fn mutual_information_as_divergence(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    left: &[&str],
) -> Result<f64> {
    relative_entropy(rho, &product_of_marginals(rho, layout, left)?)
}
