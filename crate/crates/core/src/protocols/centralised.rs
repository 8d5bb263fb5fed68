use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compress::{
    build_compressed_povm, full_abort, ideal_output, rest_layout, scenario_marginal,
    CompressionConfig, CompressionOutcome,
};
use super::decode::SequentialDecoder;
use super::hash::{index_bits, HashScheme};
use super::{apply_effect, cq_trace_distance, with_abort, AdversaryScenario, CqAccumulator, OneShotBudget};
use crate::covering::trial_rng;
use crate::entropy::{i_hyp_cq, CqTest};
use crate::error::Result;
use crate::linalg::{partial_trace, DensityOperator, HermitianOperator, SystemLayout};
use crate::objects::{embed, CQState, JointPOVM};

#[derive(Clone, Debug, Default)]
pub struct CentralisedConfig {
    pub compression: CompressionConfig,
    /// Bits subtracted from I_H^ε(·:B) before it is spent on shortening messages;
    /// log2(1/ε) when unset.
    pub side_info_overhead: Option<f64>,
}

/// How one link turns its message index into transmitted bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPlan {
    pub coins: usize,
    pub messages: usize,
    /// Bits saved by decoding against B.
    pub saving: u32,
    pub hash: HashScheme,
}

impl LinkPlan {
    pub fn sent_bits(&self) -> u32 {
        self.hash.output_bits
    }
}

/// What the encoder emits for one run; identical for every scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub coin_x: usize,
    pub coin_y: usize,
    /// `None` encodes the abort flag.
    pub message_x: Option<u64>,
    pub message_y: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: AdversaryScenario,
    pub deviation: f64,
    pub transcript: Transcript,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CentralisedOutcome {
    pub seed_used: u64,
    pub attempts: usize,
    pub fraction_nice: f64,
    pub plan_x: LinkPlan,
    pub plan_y: LinkPlan,
    pub results: Vec<ScenarioResult>,
    pub transcripts_identical: bool,
}

struct Tests {
    x: Option<CqTest>,
    y_given_x: Option<CqTest>,
    y: Option<CqTest>,
}

fn test_on(t: &Option<CqTest>, label: &[usize], rest: &SystemLayout) -> Result<HermitianOperator> {
    let d = rest.dim();
    match t.as_ref().and_then(|t| t.test_for(label)) {
        Some(op) => Ok(HermitianOperator::hermitize(embed(op.matrix(), rest, "B")?)),
        None => Ok(HermitianOperator::zeros(d)),
    }
}

struct Bob<'a> {
    comp: &'a CompressionOutcome,
    plan_x: &'a LinkPlan,
    plan_y: &'a LinkPlan,
    tests: &'a Tests,
    rest: &'a SystemLayout,
}

impl Bob<'_> {
    /// Branches (decoded symbol, state) of one sequential stage.
    fn stage(
        &self,
        plan: &LinkPlan,
        message: u64,
        symbol_of: impl Fn(usize) -> usize,
        test_label: impl Fn(usize) -> Vec<usize>,
        which: &Option<CqTest>,
        state: &HermitianOperator,
    ) -> Result<Vec<(usize, HermitianOperator)>> {
        let cands: Vec<usize> = (0..plan.messages)
            .filter(|&l| plan.hash.apply(l as u64) == message)
            .collect();
        if cands.len() == 1 {
            return Ok(vec![(symbol_of(cands[0]), state.clone())]);
        }
        let tests: Vec<HermitianOperator> = cands
            .iter()
            .map(|&l| test_on(which, &test_label(symbol_of(l)), self.rest))
            .collect::<Result<_>>()?;
        let dec = SequentialDecoder::new(cands.clone(), tests)?;
        Ok(cands
            .iter()
            .zip(dec.branches(state))
            .map(|(&l, s)| (symbol_of(l), s))
            .collect())
    }

    fn decode_x(&self, k1: usize, l1: usize, state: &HermitianOperator) -> Result<Vec<(usize, HermitianOperator)>> {
        let books = &self.comp.codebooks;
        self.stage(
            self.plan_x,
            self.plan_x.hash.apply(l1 as u64),
            |l| books.x(k1, l),
            |x| vec![x],
            &self.tests.x,
            state,
        )
    }

    fn decode_y(
        &self,
        k2: usize,
        l2: usize,
        x_hat: Option<usize>,
        state: &HermitianOperator,
    ) -> Result<Vec<(usize, HermitianOperator)>> {
        let books = &self.comp.codebooks;
        let which = if x_hat.is_some() { &self.tests.y_given_x } else { &self.tests.y };
        self.stage(
            self.plan_y,
            self.plan_y.hash.apply(l2 as u64),
            |l| books.y(k2, l),
            |y| match x_hat {
                Some(x) => vec![x, y],
                None => vec![y],
            },
            which,
            state,
        )
    }
}

/// Message rate after the side-information saving, and the hash for a given message count.
fn plan(
    rate: f64,
    i_hyp: f64,
    overhead: f64,
    draw_seed: u64,
) -> (f64, impl FnOnce(usize) -> (u32, HashScheme)) {
    let saving = (i_hyp - overhead).floor().max(0.0) as u32;
    let f = move |messages: usize| {
        let bits = index_bits(messages);
        let saving = saving.min(bits);
        let hash = if saving == 0 {
            HashScheme::identity(bits)
        } else {
            HashScheme::draw(&mut trial_rng(draw_seed, 0), bits, bits - saving)
        };
        (saving, hash)
    };
    (rate + saving as f64, f)
}

/// Runs the encoder once and evaluates every adversary scenario exactly from the same encoding.
pub fn centralised_protocol(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    budget: &OneShotBudget,
    seed: u64,
    config: &CentralisedConfig,
) -> Result<CentralisedOutcome> {
    let eps = budget.eps;
    let rest = rest_layout(layout)?;
    let ideal = ideal_output(povm, rho, layout)?;
    let has_b = layout.position("B").is_ok() && layout.factor_dim("B")? > 1;
    let tests = if has_b {
        let xb = ideal.marginal(&["X"], &["B"])?;
        let yb = ideal.marginal(&["Y"], &["B"])?;
        let xyb = ideal.marginal(&["X", "Y"], &["B"])?;
        Tests {
            x: Some(i_hyp_cq(&xb, &["X"], eps)?),
            y_given_x: Some(i_hyp_cq(&xyb, &["Y"], eps)?),
            y: Some(i_hyp_cq(&yb, &["Y"], eps)?),
        }
    } else {
        Tests {
            x: None,
            y_given_x: None,
            y: None,
        }
    };
    let overhead = config.side_info_overhead.unwrap_or_else(|| (1.0 / eps).log2());
    let value = |t: &Option<CqTest>| t.as_ref().map(|t| t.value).unwrap_or(0.0);
    let mut plan_rng = trial_rng(seed, 2);
    let (rx, fx) = plan(budget.rate_x, value(&tests.x), overhead, plan_rng.gen());
    let (ry, fy) = plan(budget.rate_y, value(&tests.y), overhead, plan_rng.gen());
    let derived = OneShotBudget {
        rate_x: rx,
        rate_y: ry,
        ..*budget
    };
    let rho_a = DensityOperator::new(partial_trace(rho, layout, &["A"])?)?;
    let comp = build_compressed_povm(povm, &rho_a, &derived, seed, &config.compression)?;
    let sizes = comp.sizes();
    let (sx, hx) = fx(sizes.l1);
    let (sy, hy) = fy(sizes.l2);
    let plan_x = LinkPlan {
        coins: sizes.k1,
        messages: sizes.l1,
        saving: sx,
        hash: hx,
    };
    let plan_y = LinkPlan {
        coins: sizes.k2,
        messages: sizes.l2,
        saving: sy,
        hash: hy,
    };
    let transcript = encode(&comp, &plan_x, &plan_y, &rho_a)?;

    let bob = Bob {
        comp: &comp,
        plan_x: &plan_x,
        plan_y: &plan_y,
        tests: &tests,
        rest: &rest,
    };
    let (nx, ny) = (povm.nx(), povm.ny());
    let rho_rest = apply_effect(&HermitianOperator::identity(povm.dim()), rho, layout)?;
    let blocks = sizes.k1 * sizes.k2;
    type Parts = Vec<Vec<(Vec<usize>, HermitianOperator)>>;
    let per_block: Vec<Parts> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Parts> {
            let (k1, k2) = (b / sizes.k2, b % sizes.k2);
            let mut out: Parts = vec![Vec::new(), Vec::new(), Vec::new()];
            let Some(c) = comp.povm(k1, k2) else {
                out[0].push((vec![nx, ny], rho_rest.clone()));
                out[1].push((vec![nx], rho_rest.clone()));
                out[2].push((vec![ny], rho_rest.clone()));
                return Ok(out);
            };
            for (&(l1, l2), g) in c.good.iter().zip(&c.elements) {
                let omega = apply_effect(g, rho, layout)?;
                for (x_hat, after_x) in bob.decode_x(k1, l1, &omega)? {
                    out[1].push((vec![x_hat], after_x.clone()));
                    for (y_hat, after_y) in bob.decode_y(k2, l2, Some(x_hat), &after_x)? {
                        out[0].push((vec![x_hat, y_hat], after_y));
                    }
                }
                for (y_hat, after_y) in bob.decode_y(k2, l2, None, &omega)? {
                    out[2].push((vec![y_hat], after_y));
                }
            }
            let abort = apply_effect(&full_abort(c, &comp.support), rho, layout)?;
            out[0].push((vec![nx, ny], abort.clone()));
            out[1].push((vec![nx], abort.clone()));
            out[2].push((vec![ny], abort));
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / blocks as f64;
    let ax = with_abort(povm.alphabet_x());
    let ay = with_abort(povm.alphabet_y());
    let mut results = Vec::with_capacity(3);
    for (i, scenario) in AdversaryScenario::ALL.into_iter().enumerate() {
        let mut acc = CqAccumulator::new(rest.dim());
        for parts in &per_block {
            for (label, op) in &parts[i] {
                acc.add(label.clone(), op, scale);
            }
        }
        let (regs, alphs) = match scenario {
            AdversaryScenario::Both => (vec!["X".into(), "Y".into()], vec![ax.clone(), ay.clone()]),
            AdversaryScenario::XOnly => (vec!["X".into()], vec![ax.clone()]),
            AdversaryScenario::YOnly => (vec!["Y".into()], vec![ay.clone()]),
        };
        let out: CQState = acc.build(regs, alphs, rest.clone())?;
        let target = scenario_marginal(&ideal, scenario)?;
        results.push(ScenarioResult {
            scenario,
            deviation: cq_trace_distance(&out, &target)?,
            transcript: transcript.clone(),
        });
    }
    let transcripts_identical = results.windows(2).all(|w| w[0].transcript == w[1].transcript);
    Ok(CentralisedOutcome {
        seed_used: comp.seed_used,
        attempts: comp.attempts,
        fraction_nice: comp.nice.fraction_nice,
        plan_x,
        plan_y,
        results,
        transcripts_identical,
    })
}

/// One sampled run of the encoder: public coins, measurement outcome, hashed messages.
fn encode(
    comp: &CompressionOutcome,
    plan_x: &LinkPlan,
    plan_y: &LinkPlan,
    rho_a: &HermitianOperator,
) -> Result<Transcript> {
    let sizes = comp.sizes();
    let mut rng = trial_rng(comp.seed_used, 4);
    let coin_x = rng.gen_range(0..sizes.k1);
    let coin_y = rng.gen_range(0..sizes.k2);
    let mut t = Transcript {
        seed: comp.seed_used,
        coin_x,
        coin_y,
        message_x: None,
        message_y: None,
    };
    let Some(c) = comp.povm(coin_x, coin_y) else {
        return Ok(t);
    };
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (&(l1, l2), g) in c.good.iter().zip(&c.elements) {
        acc += g.inner(rho_a);
        if u < acc {
            t.message_x = Some(plan_x.hash.apply(l1 as u64));
            t.message_y = Some(plan_y.hash.apply(l2 as u64));
            break;
        }
    }
    Ok(t)
}
