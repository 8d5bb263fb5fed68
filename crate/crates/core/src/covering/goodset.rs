use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    purify, reduce_first, trace_norm_distance, uhlmann_partner, HermitianOperator, C64,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodSetCertificate {
    pub good: Vec<usize>,
    /// Primed states for the GOOD indices, in the order of `good`.
    pub primed: Vec<HermitianOperator>,
    /// Index weights that the certificate refers to.
    pub weights: Vec<f64>,
    /// Right-hand factor: Σ_{GOOD} weights(i)·ρ′_i ≤ bound_factor · target.
    pub bound_factor: f64,
    /// Weight of GOOD under the distribution the extraction ran with.
    pub prob_good: f64,
    /// Smallest eigenvalue of bound_factor·target − Σ_{GOOD} weights(i)·ρ′_i.
    pub op_slack: f64,
    /// Smoothing parameter the sets were formed with.
    pub smoothing: f64,
    /// (1 − prob_good)/smoothing^{1/4}.
    pub measured_constant: f64,
}

const MEMBERSHIP_SLACK: f64 = 1e-7;
const HYPOTHESIS_SLACK: f64 = 1e-9;

fn weighted_sum(ops: &[HermitianOperator], w: &[f64], dim: usize) -> HermitianOperator {
    let mut acc = HermitianOperator::zeros(dim);
    for (o, &x) in ops.iter().zip(w) {
        acc.add_scaled(o, x);
    }
    acc
}

/// Operator-inequality extraction for a mixture Σ P(i) ρ_i that is ε-close to `target`.
pub fn extract_good_set(
    parts: &[HermitianOperator],
    weights: &[f64],
    target: &HermitianOperator,
    eps: f64,
) -> Result<GoodSetCertificate> {
    if parts.is_empty() || parts.len() != weights.len() {
        return Err(Error::DimensionMismatch(
            "parts and weights differ in length".into(),
        ));
    }
    let d = target.dim();
    if parts.iter().any(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch(
            "parts and target differ in dimension".into(),
        ));
    }
    let avg = weighted_sum(parts, weights, d);
    let dist = trace_norm_distance(&avg, target)?;
    if dist > eps + HYPOTHESIS_SLACK {
        return Err(Error::InvalidArgument(format!(
            "mixture is {dist:e} from the target, above {eps:e}"
        )));
    }
    let n = parts.len();
    let m = d * n;
    // |ψ⟩ = Σ_i √P(i) |ρ_i⟩|i⟩ on system ⊗ (mirror ⊗ index).
    let mut psi = vec![C64::new(0.0, 0.0); d * m];
    for (i, (rho, &p)) in parts.iter().zip(weights).enumerate() {
        if p <= 0.0 {
            continue;
        }
        let v = purify(rho)?;
        let s = p.sqrt();
        for a in 0..d {
            for b in 0..d {
                psi[a * m + b * n + i] = v[a * d + b] * s;
            }
        }
    }
    let phi = uhlmann_partner(&psi, d, target)?;
    let quarter = eps.powf(0.25);
    let mut good = Vec::new();
    let mut primed = Vec::new();
    for i in 0..n {
        let mut vi = vec![C64::new(0.0, 0.0); d * d];
        for a in 0..d {
            for b in 0..d {
                vi[a * d + b] = phi[a * m + b * n + i];
            }
        }
        let q: f64 = vi.iter().map(|z| z.norm_sqr()).sum();
        let p = weights[i];
        if q <= 1e-300 || p <= 0.0 {
            continue;
        }
        let rho_p = reduce_first(&vi, d).scale(1.0 / q);
        let in_index = (1.0 - p / q).abs() <= quarter + MEMBERSHIP_SLACK;
        let in_close = trace_norm_distance(&rho_p, &parts[i].scale(p / q))? <= quarter + MEMBERSHIP_SLACK;
        if in_index && in_close {
            good.push(i);
            primed.push(rho_p);
        }
    }
    let bound_factor = 1.0 + quarter;
    let prob_good: f64 =
        good.iter().map(|&i| weights[i]).sum::<f64>() / weights.iter().sum::<f64>();
    let gw: Vec<f64> = good.iter().map(|&i| weights[i]).collect();
    let op_slack = target
        .scale(bound_factor)
        .sub(&weighted_sum(&primed, &gw, d))
        .min_eigenvalue();
    Ok(GoodSetCertificate {
        good,
        primed,
        weights: weights.to_vec(),
        bound_factor,
        prob_good,
        op_slack,
        smoothing: eps,
        measured_constant: if quarter > 0.0 {
            (1.0 - prob_good) / quarter
        } else {
            0.0
        },
    })
}

/// Extraction for PSD operators σ_i with Σ P(i) σ_i ε-close to `target`.
///
/// The certificate weights are P(i)·Tr σ_i and the bound factor is
/// S(1 + (2ε)^{1/4}) with S = Σ P(i) Tr σ_i; prob_good is measured under the
/// reweighted distribution P(i) Tr σ_i / S.
pub fn extract_good_set_transformed(
    sigmas: &[HermitianOperator],
    weights: &[f64],
    target: &HermitianOperator,
    eps: f64,
) -> Result<GoodSetCertificate> {
    if sigmas.is_empty() || sigmas.len() != weights.len() {
        return Err(Error::DimensionMismatch(
            "operators and weights differ in length".into(),
        ));
    }
    let d = target.dim();
    let avg = weighted_sum(sigmas, weights, d);
    let dist = trace_norm_distance(&avg, target)?;
    if dist > eps + HYPOTHESIS_SLACK {
        return Err(Error::InvalidArgument(format!(
            "mixture is {dist:e} from the target, above {eps:e}"
        )));
    }
    let traces: Vec<f64> = sigmas.iter().map(|s| s.trace_re()).collect();
    let scaled: Vec<f64> = weights
        .iter()
        .zip(&traces)
        .map(|(p, t)| if *t > 0.0 { p * t } else { 0.0 })
        .collect();
    let s: f64 = scaled.iter().sum();
    if s <= 0.0 {
        return Err(Error::InvalidArgument(
            "all operators have zero trace".into(),
        ));
    }
    let reweighted: Vec<f64> = scaled.iter().map(|w| w / s).collect();
    let normalized: Vec<HermitianOperator> = sigmas
        .iter()
        .zip(&traces)
        .map(|(o, &t)| {
            if t > 0.0 {
                o.scale(1.0 / t)
            } else {
                HermitianOperator::identity(d).scale(1.0 / d as f64)
            }
        })
        .collect();
    let inner = extract_good_set(&normalized, &reweighted, target, 2.0 * eps)?;
    let bound_factor = s * inner.bound_factor;
    let gw: Vec<f64> = inner.good.iter().map(|&i| scaled[i]).collect();
    let op_slack = target
        .scale(bound_factor)
        .sub(&weighted_sum(&inner.primed, &gw, d))
        .min_eigenvalue();
    Ok(GoodSetCertificate {
        weights: scaled,
        bound_factor,
        op_slack,
        ..inner
    })
}
