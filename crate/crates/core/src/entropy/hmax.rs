use super::check_eps;
use crate::error::Result;
use crate::objects::Distribution;

#[derive(Clone, Debug, PartialEq)]
pub struct HmaxSolution {
    /// log2 of the optimal Σλ.
    pub value: f64,
    /// Optimal weights, aligned with the input alphabet.
    pub lambda: Vec<f64>,
    /// The input restricted to symbols with positive weight.
    pub subdistribution: Distribution,
}

impl HmaxSolution {
    pub fn lambda_sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn survivors(&self) -> Vec<usize> {
        (0..self.lambda.len())
            .filter(|&i| self.lambda[i] > 0.0)
            .collect()
    }
}

/// Solve min Σλ subject to Σ P(x)λ(x) ≥ 1−ε, 0 ≤ λ ≤ 1, greedily.
///
/// Symbols are admitted by decreasing probability; ties go to the earlier
/// symbol. The boundary symbol receives the fractional weight.
pub fn h_max_smooth(p: &Distribution, eps: f64) -> Result<HmaxSolution> {
    check_eps(eps)?;
    let probs = p.probs();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .expect("finite probabilities")
            .then(a.cmp(&b))
    });
    let target = 1.0 - eps;
    let mut lambda = vec![0.0; probs.len()];
    let mut acc = 0.0;
    for &i in &order {
        let pi = probs[i];
        if pi <= 0.0 || acc >= target {
            continue;
        }
        let need = (target - acc) / pi;
        if need >= 1.0 - 1e-12 {
            lambda[i] = 1.0;
            acc += pi;
        } else {
            lambda[i] = need;
            acc = target;
        }
    }
    let total: f64 = lambda.iter().sum();
    let sub: Vec<f64> = probs
        .iter()
        .zip(&lambda)
        .map(|(&q, &l)| if l > 0.0 { q } else { 0.0 })
        .collect();
    Ok(HmaxSolution {
        value: total.log2(),
        lambda,
        subdistribution: Distribution::subnormalized(p.alphabet().to_vec(), sub)?,
    })
}
