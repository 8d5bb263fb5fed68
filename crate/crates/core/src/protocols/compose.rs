use serde::{Deserialize, Serialize};

use super::cdc::{cdc_qsi, CdcConfig, CdcOutcome};
use super::compress::{
    build_compressed_povm, ideal_output, scenario_marginal, simulated_output, CompressionConfig,
};
use super::{apply_effect, cq_trace_distance, AdversaryScenario, CqAccumulator, OneShotBudget};
use crate::entropy::{i_hyp_cq, SmoothingBudget};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, DensityOperator, SystemLayout};
use crate::objects::{CQState, JointPOVM};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComposeOutcome {
    /// Hash bits actually sent on the X link.
    pub net_rate_x: u32,
    /// H_max^ε(KL) − (log2 K + I_H^{ε0/2}(X:B) − 1) + log2(1/ε).
    pub predicted_rate_x: f64,
    /// Message bits the compressed measurement needs without side information.
    pub unassisted_rate_x: f64,
    /// Compression deviation plus the decoder's output distance.
    pub deviation: f64,
    pub compression_deviation: f64,
    /// I_H^{ε0}(KL:K′B) − log2 K − I_H^{ε0/2}(X:B).
    pub composition_check: f64,
    pub eps0: f64,
    pub i_hyp_kl: f64,
    pub i_hyp_x: f64,
    pub log_k: f64,
    pub cdc: CdcOutcome,
}

/// Measurement compression on the X axis followed by compression of the
/// transcript (K, L) with side information (K′, B) at the receiver.
pub fn compose_with_side_information(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    budget: &OneShotBudget,
    seed: u64,
    config: &CompressionConfig,
    cdc_config: &CdcConfig,
) -> Result<ComposeOutcome> {
    layout.position("B")?;
    let px = povm.x_only();
    let rho_a = DensityOperator::new(partial_trace(rho, layout, &["A"])?)?;
    let b = OneShotBudget {
        rate_y: 0.0,
        coin_y: 0.0,
        ..*budget
    };
    let comp = build_compressed_povm(&px, &rho_a, &b, seed, config)?;
    let sizes = comp.sizes();
    let sim = scenario_marginal(&simulated_output(&px, &comp, rho, layout)?, AdversaryScenario::XOnly)?;
    let ideal_full = ideal_output(&px, rho, layout)?;
    let ideal = scenario_marginal(&ideal_full, AdversaryScenario::XOnly)?;
    let compression_deviation = cq_trace_distance(&sim, &ideal)?;

    let rest = super::compress::rest_layout(layout)?;
    let rest_names: Vec<&str> = rest.factors().iter().map(|(l, _)| l.as_str()).collect();
    let b_layout = layout.restrict(&["B"])?;
    let mut acc = CqAccumulator::new(b_layout.dim());
    let mut total = 0.0;
    let mut parts = Vec::new();
    for k in 0..sizes.k1 {
        let Some(c) = comp.povm(k, 0) else { continue };
        for (&(l, _), g) in c.good.iter().zip(&c.elements) {
            let on_rest = apply_effect(g, rho, layout)?;
            let on_b = if rest_names == ["B"] {
                on_rest
            } else {
                partial_trace(&on_rest, &rest, &["B"])?
            };
            total += on_b.trace_re() / sizes.k1 as f64;
            parts.push((vec![k, l, k], on_b));
        }
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument("compressed measurement never succeeds".into()));
    }
    for (label, op) in parts {
        acc.add(label, &op, 1.0 / (sizes.k1 as f64 * total));
    }
    let names = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
    let sigma: CQState = acc.build(
        vec!["K".into(), "L".into(), "K'".into()],
        vec![names(sizes.k1), names(sizes.l1), names(sizes.k1)],
        b_layout,
    )?;
    let eps = budget.eps;
    let cdc = cdc_qsi(&sigma, &["K", "L"], eps, seed, cdc_config)?;
    let eps0 = SmoothingBudget::new(eps)?.composed().value();
    let i_hyp_kl = i_hyp_cq(&sigma, &["K", "L"], eps0)?.value;
    let xb = ideal_full.marginal(&["X"], &["B"])?;
    let i_hyp_x = i_hyp_cq(&xb, &["X"], eps0 / 2.0)?.value;
    let log_k = (sizes.k1 as f64).log2();
    Ok(ComposeOutcome {
        net_rate_x: cdc.rate,
        predicted_rate_x: cdc.h_max - (log_k + i_hyp_x - 1.0) + (1.0 / eps).log2(),
        unassisted_rate_x: (sizes.l1 as f64).log2(),
        deviation: compression_deviation + cdc.output_distance,
        compression_deviation,
        composition_check: i_hyp_kl - log_k - i_hyp_x,
        eps0,
        i_hyp_kl,
        i_hyp_x,
        log_k,
        cdc,
    })
}
