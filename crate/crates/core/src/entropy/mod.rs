//! Entropic quantities in bits: smooth max entropy, hypothesis-testing
//! divergence, max divergence and its smoothed forms, and the von Neumann
//! suite.

mod dmax;
mod hmax;
mod hyp;
mod iid;
mod smooth;
mod vn;

pub use dmax::{d_max, d_max_blocks};
pub use hmax::{h_max_smooth, HmaxSolution};
pub use iid::{h_max_smooth_grouped, h_max_smooth_iid, i_hyp_cq_iid, type_classes};
pub use hyp::{d_hyp, i_hyp, i_hyp_cq, np_test_blocks, CqTest, NPTest, NpBlock};
pub use smooth::{
    d_max_smooth, i_max_smooth, i_max_smooth_cq, i_max_tilde, i_max_tilde_cq, tilde_cq_labels,
    SmoothingConfig, SmoothingOutcome, TildeCell, TildeLayout,
};
pub use vn::{
    conditional_entropy, cq_entropy, cq_mutual_information, mutual_information,
    mutual_information_as_divergence, relative_entropy, von_neumann_entropy,
};

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, permute_systems, tensor, HermitianOperator, SystemLayout};

/// Smoothing parameter in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SmoothingBudget(f64);

impl SmoothingBudget {
    pub fn new(eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self(eps))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The derived budget ε^{1/10} used when composing with side information.
    pub fn composed(self) -> Self {
        Self(self.0.powf(0.1))
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) || eps.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "smoothing parameter {eps} outside [0, 1)"
        )));
    }
    Ok(())
}

pub(crate) fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// ρ_L ⊗ ρ_R with the factors returned to the layout order.
pub fn product_of_marginals(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    left: &[&str],
) -> Result<HermitianOperator> {
    let factors = layout.factors();
    for l in left {
        layout.position(l)?;
    }
    let lpos: Vec<usize> = (0..factors.len())
        .filter(|&p| left.contains(&factors[p].0.as_str()))
        .collect();
    let rpos: Vec<usize> = (0..factors.len()).filter(|p| !lpos.contains(p)).collect();
    let names = |ps: &[usize]| -> Vec<&str> { ps.iter().map(|&p| factors[p].0.as_str()).collect() };
    let rl = partial_trace(rho, layout, &names(&lpos))?;
    let rr = partial_trace(rho, layout, &names(&rpos))?;
    let prod = tensor(&rl, &rr);
    let order: Vec<usize> = lpos.iter().chain(&rpos).copied().collect();
    let grouped_dims: Vec<usize> = order.iter().map(|&p| factors[p].1).collect();
    let mut inverse = vec![0; order.len()];
    for (i, &p) in order.iter().enumerate() {
        inverse[p] = i;
    }
    permute_systems(&prod, &grouped_dims, &inverse)
}
