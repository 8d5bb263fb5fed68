use rand::distributions::{Distribution as _, WeightedIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_effect, log_constant, size_from_bits, with_abort, AdversaryScenario, CqAccumulator, OneShotBudget};
use crate::covering::{extract_good_set_transformed, trial_rng, CoveringInstance};
use crate::entropy::{h_max_smooth, i_max_smooth_cq, SmoothingConfig};
use crate::error::{Error, Result};
use crate::linalg::{
    matrix_sqrt, partial_trace, pseudo_inverse_sqrt, DensityOperator, HermitianOperator, SystemLayout,
    PSD_TOL,
};
use crate::objects::{CQState, JointPOVM};

#[derive(Clone, Debug)]
pub struct CompressionConfig {
    /// Additive constant on the covering constraints; c(ε) when unset.
    pub log_const: Option<f64>,
    pub retry_budget: usize,
    pub check_rates: bool,
    pub smoothing: SmoothingConfig,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self {
            log_const: None,
            retry_budget: 50,
            check_rates: true,
            smoothing: SmoothingConfig::default(),
        }
    }
}

impl CompressionConfig {
    pub fn constant(&self, eps: f64) -> f64 {
        self.log_const.unwrap_or_else(|| log_constant(eps))
    }
}

/// Σ_{x,y} |x,y⟩⟨x,y| ⊗ √ρ Λ_{x,y} √ρ on a reference system "R" of the same dimension as A.
pub fn canonical_control_state(povm: &JointPOVM, rho_a: &HermitianOperator) -> Result<CQState> {
    if povm.dim() != rho_a.dim() {
        return Err(Error::DimensionMismatch("POVM and state act on different spaces".into()));
    }
    let s = matrix_sqrt(rho_a)?;
    let mut entries = Vec::new();
    for ix in 0..povm.nx() {
        for iy in 0..povm.ny() {
            entries.push((vec![ix, iy], povm.element(ix, iy).congruence(s.matrix())));
        }
    }
    CQState::from_unnormalized(
        vec!["X".into(), "Y".into()],
        vec![povm.alphabet_x().to_vec(), povm.alphabet_y().to_vec()],
        entries,
        SystemLayout::new([("R", rho_a.dim())])?,
    )
}

/// Entropic right-hand sides of the unassisted corner point, on the canonical control state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionThresholds {
    pub h_max_x: f64,
    pub h_max_y: f64,
    /// I_max^ε(X:R).
    pub i_max_x: f64,
    /// I_max^ε(Y:RX).
    pub i_max_y: f64,
    pub log_const: f64,
    /// Axes whose alphabet has a single symbol carry no constraint.
    pub x_trivial: bool,
    pub y_trivial: bool,
}

impl CompressionThresholds {
    pub fn check(&self, budget: &OneShotBudget) -> Result<()> {
        let rows = [
            ("R_X + C_X > H_max(X)", budget.rate_x + budget.coin_x, self.h_max_x),
            ("R_Y + C_Y > H_max(Y)", budget.rate_y + budget.coin_y, self.h_max_y),
            ("R_X > I_max(X:R) + c", budget.rate_x, self.i_max_x + self.log_const),
            ("R_Y > I_max(Y:RX) + c", budget.rate_y, self.i_max_y + self.log_const),
        ];
        for (i, (name, lhs, rhs)) in rows.into_iter().enumerate() {
            let trivial = if i % 2 == 0 { self.x_trivial } else { self.y_trivial };
            if !trivial && lhs <= rhs {
                return Err(Error::RateInfeasible(format!("{name}: {lhs} ≤ {rhs}")));
            }
        }
        Ok(())
    }
}

pub fn compression_thresholds(
    povm: &JointPOVM,
    rho_a: &HermitianOperator,
    eps: f64,
    config: &CompressionConfig,
) -> Result<CompressionThresholds> {
    let cq = canonical_control_state(povm, rho_a)?;
    let hx = h_max_smooth(&cq.marginal(&["X"], &[])?.full_distribution(), eps)?.value;
    let hy = h_max_smooth(&cq.marginal(&["Y"], &[])?.full_distribution(), eps)?.value;
    let ix = i_max_smooth_cq(&cq.marginal(&["X"], &["R"])?, &["X"], eps, &config.smoothing)?.value;
    let iy = i_max_smooth_cq(&cq, &["Y"], eps, &config.smoothing)?.value;
    Ok(CompressionThresholds {
        h_max_x: hx,
        h_max_y: hy,
        i_max_x: ix,
        i_max_y: iy,
        log_const: config.constant(eps),
        x_trivial: povm.nx() == 1,
        y_trivial: povm.ny() == 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookSizes {
    pub k1: usize,
    pub l1: usize,
    pub k2: usize,
    pub l2: usize,
}

impl CodebookSizes {
    pub fn from_budget(b: &OneShotBudget) -> Self {
        Self {
            k1: size_from_bits(b.coin_x),
            l1: size_from_bits(b.rate_x),
            k2: size_from_bits(b.coin_y),
            l2: size_from_bits(b.rate_y),
        }
    }
}

/// Codeword symbols, row-major in (coin, message).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebooks {
    pub sizes: CodebookSizes,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

impl Codebooks {
    pub fn x(&self, k1: usize, l1: usize) -> usize {
        self.x[k1 * self.sizes.l1 + l1]
    }

    pub fn y(&self, k2: usize, l2: usize) -> usize {
        self.y[k2 * self.sizes.l2 + l2]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiceBlockReport {
    /// Measure-transformed sample-average deviation per block, row-major in (k1, k2).
    pub deviations: Vec<f64>,
    pub nice_flags: Vec<bool>,
    pub fraction_nice: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompressedPOVM {
    pub block: (usize, usize),
    /// Message pairs (ℓ1, ℓ2) that carry an element, in the order of `elements`.
    pub good: Vec<(usize, usize)>,
    pub elements: Vec<HermitianOperator>,
    /// Abort element: projector onto supp ρ minus the sum of `elements`.
    pub zero_element: HermitianOperator,
    /// Likelihood ratios t(ℓ1, ℓ2), row-major.
    pub t: Vec<f64>,
    /// Divisor applied to every element.
    pub normalization: f64,
    pub prob_good: f64,
    /// Tr[γ_0 ρ].
    pub zero_weight: f64,
}

impl CompressedPOVM {
    /// Largest deviation of Σγ + γ_0 from the support projector, and smallest eigenvalue
    /// over all elements.
    pub fn check(&self, support: &HermitianOperator) -> (f64, f64) {
        let mut sum = self.zero_element.clone();
        let mut min = self.zero_element.min_eigenvalue();
        for g in &self.elements {
            sum.add_scaled(g, 1.0);
            min = min.min(g.min_eigenvalue());
        }
        (sum.max_abs_diff(support), min)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompressionOutcome {
    pub eps: f64,
    pub seed_used: u64,
    pub attempts: usize,
    pub codebooks: Codebooks,
    pub nice: NiceBlockReport,
    /// One entry per block, row-major in (k1, k2); `None` for blocks that are not nice.
    pub povms: Vec<Option<CompressedPOVM>>,
    pub thresholds: Option<CompressionThresholds>,
    pub support: HermitianOperator,
}

impl CompressionOutcome {
    pub fn sizes(&self) -> CodebookSizes {
        self.codebooks.sizes
    }

    pub fn povm(&self, k1: usize, k2: usize) -> Option<&CompressedPOVM> {
        self.povms[k1 * self.sizes().k2 + k2].as_ref()
    }
}

pub fn build_compressed_povm(
    povm: &JointPOVM,
    rho_a: &DensityOperator,
    budget: &OneShotBudget,
    seed: u64,
    config: &CompressionConfig,
) -> Result<CompressionOutcome> {
    let thresholds = if config.check_rates {
        let t = compression_thresholds(povm, rho_a, budget.eps, config)?;
        t.check(budget)?;
        Some(t)
    } else {
        None
    };
    let mut out = build_with_sizes(
        povm,
        rho_a,
        budget.eps,
        CodebookSizes::from_budget(budget),
        seed,
        config.retry_budget,
    )?;
    out.thresholds = thresholds;
    Ok(out)
}

/// Codebook draw, nice-block test and per-block POVM assembly for explicit sizes.
pub fn build_with_sizes(
    povm: &JointPOVM,
    rho_a: &HermitianOperator,
    eps: f64,
    sizes: CodebookSizes,
    seed: u64,
    retry_budget: usize,
) -> Result<CompressionOutcome> {
    if sizes.k1 == 0 || sizes.l1 == 0 || sizes.k2 == 0 || sizes.l2 == 0 {
        return Err(Error::InvalidArgument("codebook sizes must be positive".into()));
    }
    let cq = canonical_control_state(povm, rho_a)?;
    let inst = CoveringInstance::from_cq(&cq, "X", "Y")?;
    let (nx, ny) = (povm.nx(), povm.ny());
    let d = rho_a.dim();
    let mut table: Vec<Option<HermitianOperator>> = vec![None; nx * ny];
    for (x, y, op) in &inst.terms {
        table[x * ny + y] = Some(op.clone());
    }
    let wx = WeightedIndex::new(&inst.px).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let wy = WeightedIndex::new(&inst.py).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let threshold = eps.sqrt();
    let quarter = eps.powf(0.25);
    let inv_sqrt = pseudo_inverse_sqrt(rho_a)?;
    let support = rho_a.support_projector(PSD_TOL);
    for attempt in 0..retry_budget.max(1) {
        let s = seed.wrapping_add(attempt as u64);
        let mut rx = trial_rng(s, 0);
        let mut ry = trial_rng(s, 1);
        let cx: Vec<usize> = (0..sizes.k1 * sizes.l1).map(|_| wx.sample(&mut rx)).collect();
        let cy: Vec<usize> = (0..sizes.k2 * sizes.l2).map(|_| wy.sample(&mut ry)).collect();
        let count = |book: &[usize], k: usize, l: usize, n: usize| {
            let mut c = vec![0u64; n];
            for &sym in &book[k * l..(k + 1) * l] {
                c[sym] += 1;
            }
            c
        };
        let counts_x: Vec<Vec<u64>> = (0..sizes.k1).map(|k| count(&cx, k, sizes.l1, nx)).collect();
        let counts_y: Vec<Vec<u64>> = (0..sizes.k2).map(|k| count(&cy, k, sizes.l2, ny)).collect();
        let deviations: Vec<f64> = (0..sizes.k1 * sizes.k2)
            .into_par_iter()
            .map(|b| inst.deviation(&counts_x[b / sizes.k2], &counts_y[b % sizes.k2]))
            .collect();
        let nice_flags: Vec<bool> = deviations.iter().map(|&v| v <= threshold + 1e-12).collect();
        let fraction_nice =
            nice_flags.iter().filter(|&&f| f).count() as f64 / nice_flags.len() as f64;
        if fraction_nice < 1.0 - quarter {
            continue;
        }
        let codebooks = Codebooks { sizes, x: cx, y: cy };
        let povms: Vec<Option<CompressedPOVM>> = (0..sizes.k1 * sizes.k2)
            .into_par_iter()
            .map(|b| {
                if !nice_flags[b] {
                    return Ok(None);
                }
                let (k1, k2) = (b / sizes.k2, b % sizes.k2);
                block_povm(
                    &codebooks, &table, ny, d, rho_a, &inv_sqrt, &support, k1, k2, deviations[b],
                )
                .map(Some)
            })
            .collect::<Result<_>>()?;
        return Ok(CompressionOutcome {
            eps,
            seed_used: s,
            attempts: attempt + 1,
            codebooks,
            nice: NiceBlockReport {
                deviations,
                nice_flags,
                fraction_nice,
            },
            povms,
            thresholds: None,
            support,
        });
    }
    Err(Error::RetriesExhausted {
        retries: retry_budget.max(1),
    })
}

#[allow(clippy::too_many_arguments)]
fn block_povm(
    books: &Codebooks,
    table: &[Option<HermitianOperator>],
    ny: usize,
    d: usize,
    rho: &HermitianOperator,
    inv_sqrt: &HermitianOperator,
    support: &HermitianOperator,
    k1: usize,
    k2: usize,
    deviation: f64,
) -> Result<CompressedPOVM> {
    let CodebookSizes { l1, l2, .. } = books.sizes;
    let n = l1 * l2;
    let mut sigmas = Vec::with_capacity(n);
    for a in 0..l1 {
        for b in 0..l2 {
            let (x, y) = (books.x(k1, a), books.y(k2, b));
            sigmas.push(table[x * ny + y].clone().unwrap_or_else(|| HermitianOperator::zeros(d)));
        }
    }
    let t: Vec<f64> = sigmas.iter().map(|s| s.trace_re()).collect();
    let weights = vec![1.0 / n as f64; n];
    let cert = extract_good_set_transformed(&sigmas, &weights, rho, deviation)?;
    let mut bases = Vec::with_capacity(cert.good.len());
    let mut total = HermitianOperator::zeros(d);
    for (g, primed) in cert.good.iter().zip(&cert.primed) {
        let base = primed.congruence(inv_sqrt.matrix());
        total.add_scaled(&base, cert.weights[*g]);
        bases.push(base);
    }
    let normalization = total.max_eigenvalue().max(1.0);
    let mut elements = Vec::with_capacity(bases.len());
    let mut zero = support.clone();
    for (g, base) in cert.good.iter().zip(bases) {
        let e = base.scale(cert.weights[*g] / normalization);
        zero.add_scaled(&e, -1.0);
        elements.push(e);
    }
    let zero_weight = zero.inner(rho);
    Ok(CompressedPOVM {
        block: (k1, k2),
        good: cert.good.iter().map(|&g| (g / l2, g % l2)).collect(),
        elements,
        zero_element: zero,
        t,
        normalization,
        prob_good: cert.prob_good,
        zero_weight,
    })
}

/// Σ_{x,y} |x,y⟩⟨x,y| ⊗ Tr_A[(Λ_{x,y} ⊗ I)ρ] with abort symbols in both alphabets.
pub fn ideal_output(
    povm: &JointPOVM,
    rho: &HermitianOperator,
    layout: &SystemLayout,
) -> Result<CQState> {
    let rest = rest_layout(layout)?;
    let mut acc = CqAccumulator::new(rest.dim());
    for ix in 0..povm.nx() {
        for iy in 0..povm.ny() {
            acc.add(vec![ix, iy], &apply_effect(povm.element(ix, iy), rho, layout)?, 1.0);
        }
    }
    acc.build(
        vec!["X".into(), "Y".into()],
        vec![with_abort(povm.alphabet_x()), with_abort(povm.alphabet_y())],
        rest,
    )
}

pub(crate) fn rest_layout(layout: &SystemLayout) -> Result<SystemLayout> {
    let rest: Vec<&str> = layout
        .factors()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| *l != "A")
        .collect();
    layout.restrict(&rest)
}

/// Completion of the abort element to the whole input space.
pub(crate) fn full_abort(c: &CompressedPOVM, support: &HermitianOperator) -> HermitianOperator {
    let d = support.dim();
    c.zero_element.add(&HermitianOperator::identity(d).sub(support))
}

/// Exact coin-averaged output of the compressed measurement, both links on.
pub fn simulated_output(
    povm: &JointPOVM,
    compression: &CompressionOutcome,
    rho: &HermitianOperator,
    layout: &SystemLayout,
) -> Result<CQState> {
    let rest = rest_layout(layout)?;
    let sizes = compression.sizes();
    let (bx, by) = (povm.nx(), povm.ny());
    let blocks = sizes.k1 * sizes.k2;
    let scale = 1.0 / blocks as f64;
    let rho_rest = apply_effect(&HermitianOperator::identity(povm.dim()), rho, layout)?;
    let parts: Vec<Vec<(Vec<usize>, HermitianOperator)>> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Vec<(Vec<usize>, HermitianOperator)>> {
            let (k1, k2) = (b / sizes.k2, b % sizes.k2);
            let Some(c) = compression.povm(k1, k2) else {
                return Ok(vec![(vec![bx, by], rho_rest.clone())]);
            };
            let mut v = Vec::with_capacity(c.good.len() + 1);
            for (&(l1, l2), g) in c.good.iter().zip(&c.elements) {
                let label = vec![compression.codebooks.x(k1, l1), compression.codebooks.y(k2, l2)];
                v.push((label, apply_effect(g, rho, layout)?));
            }
            v.push((vec![bx, by], apply_effect(&full_abort(c, &compression.support), rho, layout)?));
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut acc = CqAccumulator::new(rest.dim());
    for part in parts {
        for (label, op) in part {
            acc.add(label, &op, scale);
        }
    }
    acc.build(
        vec!["X".into(), "Y".into()],
        vec![with_abort(povm.alphabet_x()), with_abort(povm.alphabet_y())],
        rest,
    )
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub scenario: AdversaryScenario,
    pub deviation: f64,
    pub output: CQState,
    pub ideal: CQState,
    pub compression: CompressionOutcome,
}

/// Restriction of a two-register output to the registers a scenario delivers.
pub fn scenario_marginal(state: &CQState, scenario: AdversaryScenario) -> Result<CQState> {
    if scenario == AdversaryScenario::Both {
        return Ok(state.clone());
    }
    let q: Vec<&str> = state
        .quantum_layout()
        .factors()
        .iter()
        .map(|(l, _)| l.as_str())
        .collect();
    state.marginal(scenario.kept_registers(), &q)
}

pub fn simulate_unassisted(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    budget: &OneShotBudget,
    seed: u64,
    scenario: AdversaryScenario,
    config: &CompressionConfig,
) -> Result<SimulationOutcome> {
    let rho_a = DensityOperator::new(partial_trace(rho, layout, &["A"])?)?;
    let compression = build_compressed_povm(povm, &rho_a, budget, seed, config)?;
    let out = scenario_marginal(&simulated_output(povm, &compression, rho, layout)?, scenario)?;
    let ideal = scenario_marginal(&ideal_output(povm, rho, layout)?, scenario)?;
    let deviation = super::cq_trace_distance(&out, &ideal)?;
    Ok(SimulationOutcome {
        scenario,
        deviation,
        output: out,
        ideal,
        compression,
    })
}
