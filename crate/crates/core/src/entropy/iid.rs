//! Block (n-fold product) versions of the one-shot quantities, evaluated
//! through type classes so the cost grows with the number of types rather
//! than with |X|^n.

use super::hyp::{np_test_blocks, NpBlock};
use super::check_eps;
use crate::error::{Error, Result};
use crate::linalg::{tensor_all, HermitianOperator};
use crate::objects::{CQState, Distribution};

/// Occupation numbers of every length-n sequence type over `k` symbols, with
/// the size of each class.
pub fn type_classes(k: usize, n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == k {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            rec(k, left - c, prefix, out);
            prefix.pop();
        }
    }
    if k == 0 {
        return Vec::new();
    }
    let mut all = Vec::new();
    rec(k, n, &mut Vec::new(), &mut all);
    let ln_fact = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    all.into_iter()
        .map(|c| {
            let ln = ln_fact(n) - c.iter().map(|&m| ln_fact(m)).sum::<f64>();
            (c, ln.exp().round())
        })
        .collect()
}

/// Smooth max entropy of a distribution given as (probability, multiplicity)
/// groups of equiprobable symbols.
pub fn h_max_smooth_grouped(groups: &[(f64, f64)], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let mut order: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].0 > 0.0).collect();
    order.sort_by(|&a, &b| groups[b].0.total_cmp(&groups[a].0).then(a.cmp(&b)));
    let target = 1.0 - eps;
    let mut acc = 0.0;
    let mut count = 0.0;
    for i in order {
        let (q, m) = groups[i];
        if acc >= target {
            break;
        }
        let need = (target - acc) / q;
        if need >= m - 1e-12 {
            count += m;
            acc += q * m;
        } else {
            count += need;
            acc = target;
        }
    }
    Ok(count.log2())
}

/// H_max^ε of n i.i.d. copies of `p`.
pub fn h_max_smooth_iid(p: &Distribution, n: usize, eps: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    let probs = p.probs();
    let groups: Vec<(f64, f64)> = type_classes(probs.len(), n)
        .into_iter()
        .map(|(c, m)| {
            let q = c
                .iter()
                .zip(probs)
                .map(|(&k, &pi)| if k == 0 { 1.0 } else { pi.powi(k as i32) })
                .product::<f64>();
            (q, m)
        })
        .collect();
    h_max_smooth_grouped(&groups, eps)
}

/// I_H^ε(X^n : E^n) for a state with a single classical register X.
pub fn i_hyp_cq_iid(cq: &CQState, n: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if cq.registers().len() != 1 {
        return Err(Error::InvalidArgument(
            "block hypothesis testing needs exactly one classical register".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    let k = cq.len();
    let d = cq.quantum_dim();
    if d == 1 {
        return Ok(0.0);
    }
    let mut marginal = HermitianOperator::zeros(d);
    for i in 0..k {
        marginal.add_scaled(&cq.unnormalized(i), 1.0);
    }
    let sigma_n = tensor_all(&vec![&marginal; n]);
    let mut blocks = Vec::new();
    for (counts, mult) in type_classes(k, n) {
        let mut factors: Vec<&HermitianOperator> = Vec::with_capacity(n);
        let mut q = 1.0;
        for (i, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                factors.push(cq.block(i));
                q *= cq.weight(i);
            }
        }
        if q <= 0.0 {
            continue;
        }
        let rho = tensor_all(&factors).scale(q);
        blocks.push(NpBlock {
            rho,
            sigma: sigma_n.scale(q),
            multiplicity: mult,
        });
    }
    Ok(np_test_blocks(&blocks, eps)?.value())
}
