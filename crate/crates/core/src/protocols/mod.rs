//! End-to-end protocol simulators and rate-region evaluation.

mod centralised;
mod cdc;
mod compose;
mod compress;
mod decode;
mod hash;
mod region;

pub use centralised::{
    centralised_protocol, CentralisedConfig, CentralisedOutcome, LinkPlan, ScenarioResult,
    Transcript,
};
pub use cdc::{cdc_qsi, CdcConfig, CdcOutcome};
pub use compose::{compose_with_side_information, ComposeOutcome};
pub use compress::{
    build_compressed_povm, canonical_control_state, ideal_output, compression_thresholds,
    build_with_sizes, scenario_marginal, simulate_unassisted, simulated_output, CodebookSizes, Codebooks, CompressedPOVM,
    CompressionConfig, CompressionOutcome, NiceBlockReport, CompressionThresholds, SimulationOutcome,
};
pub use decode::{sequential_decode, SequentialDecoder};
pub use hash::HashScheme;
pub use region::{
    block_trend, iid_region, one_shot_region, unsplit_region, HalfSpace, RateRegion,
    RegionConfig, RegionPiece, SplitAxis, TrendRow,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, HermitianOperator, SystemLayout};
use crate::objects::{embed, CQState, BOTTOM};

/// Rates in bits: messages R, public coins C, and an optional split parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneShotBudget {
    pub eps: f64,
    pub rate_x: f64,
    pub rate_y: f64,
    pub coin_x: f64,
    pub coin_y: f64,
    pub theta: Option<f64>,
}

impl OneShotBudget {
    pub fn new(eps: f64, rate_x: f64, rate_y: f64, coin_x: f64, coin_y: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("ε = {eps} outside (0, 1)")));
        }
        if [rate_x, rate_y, coin_x, coin_y].iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidArgument("rates must be finite and non-negative".into()));
        }
        Ok(Self {
            eps,
            rate_x,
            rate_y,
            coin_x,
            coin_y,
            theta: None,
        })
    }
}

/// c(ε) = 2·log2(2/√ε) + log2(48/ε).
pub fn log_constant(eps: f64) -> f64 {
    2.0 * (2.0 / eps.sqrt()).log2() + (48.0 / eps).log2()
}

/// ⌈2^bits⌉, robust to round-off at integer exponents.
pub fn size_from_bits(bits: f64) -> usize {
    let v = bits.exp2();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

/// Which links the adversary leaves on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdversaryScenario {
    Both,
    XOnly,
    YOnly,
}

impl AdversaryScenario {
    pub const ALL: [AdversaryScenario; 3] = [Self::Both, Self::XOnly, Self::YOnly];

    pub fn x_link_on(self) -> bool {
        matches!(self, Self::Both | Self::XOnly)
    }

    pub fn y_link_on(self) -> bool {
        matches!(self, Self::Both | Self::YOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Both => "both",
            Self::XOnly => "x-only",
            Self::YOnly => "y-only",
        }
    }

    /// Registers of the two-register output that survive in this scenario.
    pub fn kept_registers(self) -> &'static [&'static str] {
        match self {
            Self::Both => &["X", "Y"],
            Self::XOnly => &["X"],
            Self::YOnly => &["Y"],
        }
    }
}

/// Tr_A[(E ⊗ I) ρ], returned on the remaining factors in layout order.
pub fn apply_effect(
    effect: &HermitianOperator,
    rho: &HermitianOperator,
    layout: &SystemLayout,
) -> Result<HermitianOperator> {
    let root = crate::linalg::matrix_sqrt(effect)?;
    let k = embed(root.matrix(), layout, "A")?;
    let post = rho.congruence(&k);
    let rest: Vec<&str> = layout
        .factors()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| *l != "A")
        .collect();
    partial_trace(&post, layout, &rest)
}

/// Alphabet with the abort symbol appended.
pub fn with_abort(alphabet: &[String]) -> Vec<String> {
    let mut a = alphabet.to_vec();
    a.push(BOTTOM.to_string());
    a
}

/// Σ_labels ‖a_label − b_label‖₁ for two states over identical registers and alphabets.
pub fn cq_trace_distance(a: &CQState, b: &CQState) -> Result<f64> {
    if a.registers() != b.registers() || a.alphabets() != b.alphabets() {
        return Err(Error::DimensionMismatch(
            "states have different classical registers".into(),
        ));
    }
    if a.quantum_dim() != b.quantum_dim() {
        return Err(Error::DimensionMismatch("quantum parts differ".into()));
    }
    let mut diff: BTreeMap<Vec<usize>, HermitianOperator> = BTreeMap::new();
    for i in 0..a.len() {
        diff.entry(a.label(i).to_vec())
            .or_insert_with(|| HermitianOperator::zeros(a.quantum_dim()))
            .add_scaled(&a.unnormalized(i), 1.0);
    }
    for i in 0..b.len() {
        diff.entry(b.label(i).to_vec())
            .or_insert_with(|| HermitianOperator::zeros(a.quantum_dim()))
            .add_scaled(&b.unnormalized(i), -1.0);
    }
    Ok(diff.values().map(|d| d.trace_norm()).sum())
}

/// Accumulates unnormalised labelled blocks and builds a state from them.
#[derive(Clone, Debug)]
pub(crate) struct CqAccumulator {
    entries: BTreeMap<Vec<usize>, HermitianOperator>,
    dim: usize,
}

impl CqAccumulator {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            entries: BTreeMap::new(),
            dim,
        }
    }

    pub(crate) fn add(&mut self, label: Vec<usize>, op: &HermitianOperator, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.entries
            .entry(label)
            .or_insert_with(|| HermitianOperator::zeros(self.dim))
            .add_scaled(op, scale);
    }

    pub(crate) fn build(
        self,
        registers: Vec<String>,
        alphabets: Vec<Vec<String>>,
        quantum: SystemLayout,
    ) -> Result<CQState> {
        CQState::from_unnormalized(registers, alphabets, self.entries.into_iter().collect(), quantum)
    }
}
