use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::HermitianOperator;
use crate::objects::CQState;

/// Likelihood-weighted blocks of a joint classical-quantum state over two registers.
#[derive(Clone, Debug)]
pub struct CoveringInstance {
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    /// (x, y, [P_XY/(P_X P_Y)] ρ_{x,y}) for pairs with positive weight.
    pub terms: Vec<(usize, usize, HermitianOperator)>,
    /// σ = Σ P_XY ρ_{x,y}.
    pub target: HermitianOperator,
}

impl CoveringInstance {
    pub fn from_cq(cq: &CQState, x_register: &str, y_register: &str) -> Result<Self> {
        let rx = cq.register_index(x_register)?;
        let ry = cq.register_index(y_register)?;
        let nx = cq.alphabets()[rx].len();
        let ny = cq.alphabets()[ry].len();
        let mut px = vec![0.0; nx];
        let mut py = vec![0.0; ny];
        let mut joint: Vec<(usize, usize, HermitianOperator)> = Vec::new();
        for i in 0..cq.len() {
            let (x, y) = (cq.label(i)[rx], cq.label(i)[ry]);
            px[x] += cq.weight(i);
            py[y] += cq.weight(i);
            match joint.iter_mut().find(|(a, b, _)| *a == x && *b == y) {
                Some((_, _, op)) => op.add_scaled(&cq.unnormalized(i), 1.0),
                None => joint.push((x, y, cq.unnormalized(i))),
            }
        }
        let mut target = HermitianOperator::zeros(cq.quantum_dim());
        let mut terms = Vec::with_capacity(joint.len());
        for (x, y, op) in joint {
            target.add_scaled(&op, 1.0);
            terms.push((x, y, op.scale(1.0 / (px[x] * py[y]))));
        }
        Ok(Self {
            px,
            py,
            terms,
            target,
        })
    }

    /// ‖(1/KL) Σ_{x,y} n_x m_y [P_XY/(P_X P_Y)] ρ_{x,y} − σ‖₁ for codeword counts n, m.
    pub fn deviation(&self, counts_x: &[u64], counts_y: &[u64]) -> f64 {
        let k: u64 = counts_x.iter().sum();
        let l: u64 = counts_y.iter().sum();
        let mut avg = self.target.scale(-1.0);
        let norm = 1.0 / (k as f64 * l as f64);
        for (x, y, op) in &self.terms {
            let c = (counts_x[*x] * counts_y[*y]) as f64;
            if c > 0.0 {
                avg.add_scaled(op, c * norm);
            }
        }
        avg.trace_norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Independent stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

fn multinomial(rng: &mut ChaCha8Rng, n: u64, p: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; p.len()];
    let mut rem_n = n;
    let mut rem_p: f64 = p.iter().sum();
    for (i, &pi) in p.iter().enumerate() {
        if rem_n == 0 {
            break;
        }
        if i == p.len() - 1 {
            out[i] = rem_n;
            break;
        }
        let q = if rem_p > 0.0 {
            (pi / rem_p).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = if q >= 1.0 {
            rem_n
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(rem_n, q).expect("valid binomial").sample(rng)
        };
        out[i] = c;
        rem_n -= c;
        rem_p -= pi;
    }
    out
}

/// Monte Carlo estimate of the expected deviation over independent codebooks of sizes K and L.
///
/// Only codeword counts enter the deviation, so each trial samples the two count vectors.
pub fn covering_error(
    inst: &CoveringInstance,
    k: u64,
    l: u64,
    trials: usize,
    seed: u64,
) -> Result<CoveringEstimate> {
    if k == 0 || l == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "codebook sizes and trial count must be positive".into(),
        ));
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = trial_rng(seed, t as u64);
            let nx = multinomial(&mut r, k, &inst.px);
            let my = multinomial(&mut r, l, &inst.py);
            inst.deviation(&nx, &my)
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(CoveringEstimate {
        mean,
        stderr: (var / n).sqrt(),
        trials,
    })
}

fn binom(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of (count-vector pair) terms the exact expectation needs.
pub fn enumeration_size(nx: usize, ny: usize, k: u64, l: u64) -> f64 {
    binom(k + nx as u64 - 1, nx as u64 - 1) * binom(l + ny as u64 - 1, ny as u64 - 1)
}

fn compositions(n: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn multinomial_pmf(counts: &[u64], p: &[f64], ln_fact: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut lp = ln_fact[n as usize];
    for (&c, &pi) in counts.iter().zip(p) {
        if c > 0 {
            if pi <= 0.0 {
                return 0.0;
            }
            lp += c as f64 * pi.ln() - ln_fact[c as usize];
        }
    }
    lp.exp()
}

/// Exact expectation of the deviation by enumerating all count vectors.
pub fn covering_error_exact(inst: &CoveringInstance, k: u64, l: u64) -> Result<f64> {
    let size = enumeration_size(inst.px.len(), inst.py.len(), k, l);
    if size > 1e6 {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration needs {size} terms"
        )));
    }
    let top = k.max(l) as usize;
    let mut ln_fact = vec![0.0; top + 1];
    for i in 1..=top {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let xs: Vec<(Vec<u64>, f64)> = compositions(k, inst.px.len())
        .into_iter()
        .map(|c| {
            let p = multinomial_pmf(&c, &inst.px, &ln_fact);
            (c, p)
        })
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let ys: Vec<(Vec<u64>, f64)> = compositions(l, inst.py.len())
        .into_iter()
        .map(|c| {
            let p = multinomial_pmf(&c, &inst.py, &ln_fact);
            (c, p)
        })
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let mut total = 0.0;
    for (cx, pxw) in &xs {
        for (cy, pyw) in &ys {
            total += pxw * pyw * inst.deviation(cx, cy);
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverRow {
    #[serde(rename = "logK")]
    pub log_k: u32,
    #[serde(rename = "logL")]
    pub log_l: u32,
    #[serde(rename = "meanError")]
    pub mean_error: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Estimates at K = 2^logK, L = 2^logL for each grid point, all with the same seed.
pub fn covering_sweep(
    inst: &CoveringInstance,
    grid: &[(u32, u32)],
    trials: usize,
    seed: u64,
) -> Result<Vec<CoverRow>> {
    grid.iter()
        .map(|&(a, b)| {
            let e = covering_error(inst, 1u64 << a, 1u64 << b, trials, seed)?;
            Ok(CoverRow {
                log_k: a,
                log_l: b,
                mean_error: e.mean,
                stderr: e.stderr,
                trials,
                seed,
            })
        })
        .collect()
}
