//! Rate splitting of a classical variable into two independent parts whose
//! maximum (in alphabet order) reproduces the original law.

use crate::error::{Error, Result};
use crate::linalg::{DensityOperator, SystemLayout};
use crate::objects::{post_measurement_cq, CQState, Distribution, JointPOVM, KeptSystems};

#[derive(Clone, Debug, PartialEq)]
pub struct SplitPair {
    pub theta: f64,
    pub p_u: Distribution,
    pub p_v: Distribution,
}

impl SplitPair {
    /// Law of max(U, V) over the shared alphabet.
    pub fn max_law(&self) -> Vec<f64> {
        let pu = self.p_u.probs();
        let pv = self.p_v.probs();
        let mut out = vec![0.0; pu.len()];
        for (i, a) in pu.iter().enumerate() {
            for (j, b) in pv.iter().enumerate() {
                out[i.max(j)] += a * b;
            }
        }
        out
    }

    pub fn cdf_u(&self) -> Vec<f64> {
        cumulative(self.p_u.probs())
    }

    pub fn cdf_v(&self) -> Vec<f64> {
        cumulative(self.p_v.probs())
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn powered_law(cdf: &[f64], exponent: f64) -> Vec<f64> {
    let mut prev = 0.0;
    cdf.iter()
        .map(|&f| {
            let g = f.max(0.0).powf(exponent);
            let g = g.max(prev);
            let q = g - prev;
            prev = g;
            q
        })
        .collect()
}

/// Split with CDF_U = CDF^{1−θ} and CDF_V = CDF^θ, so CDF_U · CDF_V = CDF.
pub fn split(p: &Distribution, theta: f64) -> Result<SplitPair> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "split parameter {theta} outside [0, 1]"
        )));
    }
    let alphabet = p.alphabet().to_vec();
    let n = alphabet.len();
    let point = {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v
    };
    let (pu, pv) = if theta == 0.0 {
        (p.probs().to_vec(), point)
    } else if theta == 1.0 {
        (point, p.probs().to_vec())
    } else {
        let cdf = cumulative(p.probs());
        (powered_law(&cdf, 1.0 - theta), powered_law(&cdf, theta))
    };
    let renorm = |v: Vec<f64>| -> Result<Distribution> {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() <= 1e-10 {
            Distribution::new(alphabet.clone(), v)
        } else {
            Distribution::new(alphabet.clone(), v.iter().map(|x| x / s).collect())
        }
    };
    Ok(SplitPair {
        theta,
        p_u: renorm(pu)?,
        p_v: renorm(pv)?,
    })
}

/// Replace the register `split_register` of a control state by two independent
/// registers "U", "V" with max(U, V) distributed as the original register.
///
/// The result has registers ["U", "V", rest…]; the conditional law of the rest
/// and the quantum blocks given (u, v) are those of the original symbol max(u, v).
pub fn split_control_state(cq: &CQState, split_register: &str, theta: f64) -> Result<CQState> {
    let r = cq.register_index(split_register)?;
    let marginal = cq.marginal(&[split_register], &[])?;
    let nx = cq.alphabets()[r].len();
    let mut px = vec![0.0; nx];
    for i in 0..marginal.len() {
        px[marginal.label(i)[0]] = marginal.weight(i);
    }
    let total: f64 = px.iter().sum();
    let dist = Distribution::new(
        cq.alphabets()[r].clone(),
        px.iter().map(|p| p / total).collect(),
    )?;
    let pair = split(&dist, theta)?;
    let others: Vec<usize> = (0..cq.registers().len()).filter(|&k| k != r).collect();
    let mut registers = vec!["U".to_string(), "V".to_string()];
    let mut alphabets = vec![cq.alphabets()[r].clone(), cq.alphabets()[r].clone()];
    for &k in &others {
        registers.push(cq.registers()[k].clone());
        alphabets.push(cq.alphabets()[k].clone());
    }
    let pu = pair.p_u.probs();
    let pv = pair.p_v.probs();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    let mut blocks = Vec::new();
    for u in 0..nx {
        for v in 0..nx {
            if pu[u] == 0.0 || pv[v] == 0.0 {
                continue;
            }
            let x = u.max(v);
            let ratio = pu[u] * pv[v] / dist.probs()[x];
            for i in 0..cq.len() {
                if cq.label(i)[r] != x {
                    continue;
                }
                let mut label = vec![u, v];
                label.extend(others.iter().map(|&k| cq.label(i)[k]));
                labels.push(label);
                weights.push(cq.weight(i) * ratio);
                blocks.push(cq.block(i).clone());
            }
        }
    }
    CQState::new(
        registers,
        alphabets,
        labels,
        weights,
        blocks,
        cq.quantum_layout().clone(),
    )
}

/// The split control state of a measured tripartite state, with the "X" register split
/// and blocks on the B and R factors.
pub fn split_measurement_state(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    theta: f64,
) -> Result<CQState> {
    let cq = post_measurement_cq(povm, rho, layout, KeptSystems::Br)?;
    split_control_state(&cq, "X", theta)
}
