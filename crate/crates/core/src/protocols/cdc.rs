use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decode::SequentialDecoder;
use super::hash::{index_bits, HashScheme};
use super::{cq_trace_distance, with_abort, CqAccumulator};
use crate::covering::trial_rng;
use crate::entropy::{h_max_smooth, i_hyp_cq};
use crate::error::{Error, Result};
use crate::linalg::HermitianOperator;
use crate::objects::{joint_symbol, CQState, Distribution};

#[derive(Clone, Debug)]
pub struct CdcConfig {
    pub hash_draws: usize,
    /// A bucket may hold at most 2^(I_H + slack) symbols before the hash is redrawn.
    pub bucket_slack_bits: f64,
    pub max_redraws: usize,
    /// Overrides the rate ⌈H_max − I_H + log2(1/ε)⌉.
    pub rate_override: Option<u32>,
}

impl Default for CdcConfig {
    fn default() -> Self {
        Self {
            hash_draws: 100,
            bucket_slack_bits: 5.0,
            max_redraws: 1000,
            rate_override: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CdcOutcome {
    pub rate: u32,
    pub h_max: f64,
    pub i_hyp: f64,
    pub input_bits: u32,
    pub support_size: usize,
    /// Mean over hash draws of Σ_x P(x)·Pr[x̂ ≠ x].
    pub avg_error: f64,
    pub max_error: f64,
    /// √(2ε) + ε.
    pub error_bound: f64,
    /// Mean over hash draws of the trace distance to the ideal output.
    pub output_distance: f64,
    pub max_output_distance: f64,
    /// 2√(√(2ε)+ε) + 2ε.
    pub eps_prime: f64,
    pub hash_draws: usize,
    pub redraws: usize,
    #[serde(skip)]
    pub output_state: Option<CQState>,
}

/// Symbols of the joint source register, with side labels and blocks for every entry of the state.
struct SourceView {
    source_alphabet: Vec<String>,
    side_regs: Vec<usize>,
    /// (source index, side label, unnormalised block) per entry.
    entries: Vec<(usize, Vec<usize>, HermitianOperator)>,
    /// Full state label of each entry, for looking up tests.
    full_labels: Vec<Vec<usize>>,
}

fn view(cq: &CQState, source: &[&str]) -> Result<SourceView> {
    if source.is_empty() {
        return Err(Error::InvalidArgument("no source registers".into()));
    }
    let source_regs: Vec<usize> = source
        .iter()
        .map(|r| cq.register_index(r))
        .collect::<Result<_>>()?;
    let side_regs: Vec<usize> = (0..cq.registers().len())
        .filter(|r| !source_regs.contains(r))
        .collect();
    let sizes: Vec<usize> = source_regs.iter().map(|&r| cq.alphabets()[r].len()).collect();
    let n: usize = sizes.iter().product();
    let source_alphabet = (0..n)
        .map(|k| {
            let mut rem = k;
            let mut parts = vec![""; sizes.len()];
            for (i, &s) in sizes.iter().enumerate().rev() {
                parts[i] = cq.alphabets()[source_regs[i]][rem % s].as_str();
                rem /= s;
            }
            joint_symbol(&parts)
        })
        .collect();
    let mut entries = Vec::with_capacity(cq.len());
    for i in 0..cq.len() {
        let l = cq.label(i);
        let s = source_regs
            .iter()
            .zip(&sizes)
            .fold(0, |acc, (&r, &sz)| acc * sz + l[r]);
        let side = side_regs.iter().map(|&r| l[r]).collect();
        entries.push((s, side, cq.unnormalized(i)));
    }
    Ok(SourceView {
        source_alphabet,
        side_regs,
        entries,
        full_labels: cq.labels().to_vec(),
    })
}

/// Classical data compression with quantum side information, evaluated exactly over
/// `hash_draws` random hashes.
///
/// The output state has registers [source, "Xhat", side registers…]; the source
/// register carries joint symbols of `source` and "Xhat" adds the abort symbol.
pub fn cdc_qsi(
    cq: &CQState,
    source: &[&str],
    eps: f64,
    seed: u64,
    config: &CdcConfig,
) -> Result<CdcOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} outside (0, 1)")));
    }
    let v = view(cq, source)?;
    let n = v.source_alphabet.len();
    let mut p = vec![0.0; n];
    for (s, _, op) in &v.entries {
        p[*s] += op.trace_re();
    }
    let dist = Distribution::new(v.source_alphabet.clone(), p.clone())?;
    let hm = h_max_smooth(&dist, eps)?;
    let survivors = hm.survivors();
    let test = i_hyp_cq(cq, source, eps)?;
    let input_bits = index_bits(survivors.len());
    let rate = config.rate_override.unwrap_or_else(|| {
        let formula = (hm.value - test.value + (1.0 / eps).log2()).ceil().max(0.0) as u32;
        formula.min(input_bits)
    });
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in survivors.iter().enumerate() {
        pos[s] = i;
    }
    let mut tests: HashMap<(usize, Vec<usize>), HermitianOperator> = HashMap::new();
    for (i, (s, side, _)) in v.entries.iter().enumerate() {
        if let Some(t) = test.test_for(&v.full_labels[i]) {
            tests.insert((*s, side.clone()), t.clone());
        }
    }
    let dq = cq.quantum_dim();
    let zero = HermitianOperator::zeros(dq);
    let cap = if test.value.is_finite() {
        (test.value + config.bucket_slack_bits).exp2()
    } else {
        f64::INFINITY
    };
    let mut rng = trial_rng(seed, 0);
    let mut schemes = Vec::with_capacity(config.hash_draws);
    let mut redraws = 0usize;
    while schemes.len() < config.hash_draws.max(1) {
        let h = HashScheme::draw(&mut rng, input_bits, rate);
        let over = h.buckets(survivors.len()).values().any(|b| b.len() as f64 > cap);
        if over && redraws < config.max_redraws {
            redraws += 1;
            continue;
        }
        schemes.push(h);
    }
    let mut registers = vec![source.join("")];
    let mut alphabets = vec![v.source_alphabet.clone(), with_abort(&v.source_alphabet)];
    registers.push("Xhat".into());
    for &r in &v.side_regs {
        registers.push(cq.registers()[r].clone());
        alphabets.push(cq.alphabets()[r].clone());
    }
    let ideal = {
        let mut acc = CqAccumulator::new(dq);
        for (s, side, op) in &v.entries {
            let mut label = vec![*s, *s];
            label.extend(side);
            acc.add(label, op, 1.0);
        }
        acc.build(registers.clone(), alphabets.clone(), cq.quantum_layout().clone())?
    };
    let runs: Vec<(f64, f64, CQState)> = schemes
        .par_iter()
        .map(|h| -> Result<(f64, f64, CQState)> {
            let buckets = h.buckets(survivors.len());
            let mut acc = CqAccumulator::new(dq);
            let mut err = 0.0;
            for (s, side, op) in &v.entries {
                let mut label = vec![*s, n];
                label.extend(side);
                if pos[*s] == usize::MAX {
                    err += op.trace_re();
                    acc.add(label, op, 1.0);
                    continue;
                }
                let bucket = &buckets[&h.apply(pos[*s] as u64)];
                let cands: Vec<usize> = bucket.iter().map(|&i| survivors[i]).collect();
                let ts: Vec<HermitianOperator> = cands
                    .iter()
                    .map(|c| tests.get(&(*c, side.clone())).cloned().unwrap_or_else(|| zero.clone()))
                    .collect();
                let dec = SequentialDecoder::new(cands.clone(), ts)?;
                for (c, branch) in cands.iter().zip(dec.branches(op)) {
                    if c != s {
                        err += branch.trace_re();
                    }
                    label[1] = *c;
                    acc.add(label.clone(), &branch, 1.0);
                }
            }
            let out = acc.build(registers.clone(), alphabets.clone(), cq.quantum_layout().clone())?;
            let dist = cq_trace_distance(&out, &ideal)?;
            Ok((err, dist, out))
        })
        .collect::<Result<_>>()?;
    let m = runs.len() as f64;
    let avg_error = runs.iter().map(|r| r.0).sum::<f64>() / m;
    let max_error = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    let output_distance = runs.iter().map(|r| r.1).sum::<f64>() / m;
    let max_output_distance = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut avg = CqAccumulator::new(dq);
    for (_, _, st) in &runs {
        for i in 0..st.len() {
            avg.add(st.label(i).to_vec(), &st.unnormalized(i), 1.0 / m);
        }
    }
    let output_state = avg.build(registers, alphabets, cq.quantum_layout().clone())?;
    let error_bound = (2.0 * eps).sqrt() + eps;
    Ok(CdcOutcome {
        rate,
        h_max: hm.value,
        i_hyp: test.value,
        input_bits,
        support_size: survivors.len(),
        avg_error,
        max_error,
        error_bound,
        output_distance,
        max_output_distance,
        eps_prime: 2.0 * error_bound.sqrt() + 2.0 * eps,
        hash_draws: runs.len(),
        redraws,
        output_state: Some(output_state),
    })
}
