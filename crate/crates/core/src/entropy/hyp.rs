use super::{check_eps, product_of_marginals};
use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, SystemLayout};
use crate::objects::CQState;

/// One block of a block-diagonal test problem, repeated `multiplicity` times.
#[derive(Clone, Debug)]
pub struct NpBlock {
    pub rho: HermitianOperator,
    pub sigma: HermitianOperator,
    pub multiplicity: f64,
}

impl NpBlock {
    pub fn new(rho: HermitianOperator, sigma: HermitianOperator) -> Self {
        Self {
            rho,
            sigma,
            multiplicity: 1.0,
        }
    }
}

/// Optimal test, one operator per block.
#[derive(Clone, Debug)]
pub struct NPTest {
    pub tests: Vec<HermitianOperator>,
    /// Σ m Tr[Π ρ], equal to 1−ε at the optimum.
    pub alpha: f64,
    /// Σ m Tr[Π σ].
    pub beta: f64,
    /// Lagrange multiplier at which the test was formed.
    pub multiplier: f64,
}

impl NPTest {
    pub fn value(&self) -> f64 {
        if self.beta <= 0.0 {
            f64::INFINITY
        } else {
            -self.beta.log2()
        }
    }
}

const MAX_BISECTIONS: usize = 200;

fn positive_part_projector(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    mu: f64,
) -> HermitianOperator {
    let diff = rho.sub(&sigma.scale(mu));
    let e = diff.eigh();
    let scale = e
        .values
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(rho.max_eigenvalue().abs());
    let tol = 1e-13 * scale.max(1e-300);
    let sel: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > tol).collect();
    HermitianOperator::hermitize(e.projector(sel.into_iter()))
}

fn stats(blocks: &[NpBlock], tests: &[HermitianOperator]) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for (bl, t) in blocks.iter().zip(tests) {
        a += bl.multiplicity * t.inner(&bl.rho);
        b += bl.multiplicity * t.inner(&bl.sigma);
    }
    (a, b)
}

fn projectors_at(blocks: &[NpBlock], mu: f64) -> Vec<HermitianOperator> {
    blocks
        .iter()
        .map(|b| positive_part_projector(&b.rho, &b.sigma, mu))
        .collect()
}

/// Minimise Σ m Tr[Π σ] over tests 0 ≤ Π ≤ I with Σ m Tr[Π ρ] ≥ 1−ε,
/// sharing one multiplier across all blocks.
pub fn np_test_blocks(blocks: &[NpBlock], eps: f64) -> Result<NPTest> {
    check_eps(eps)?;
    for b in blocks {
        if b.rho.dim() != b.sigma.dim() {
            return Err(Error::DimensionMismatch(
                "test block operators differ in dimension".into(),
            ));
        }
        if !(b.multiplicity >= 0.0) {
            return Err(Error::InvalidArgument("negative block multiplicity".into()));
        }
    }
    let target = 1.0 - eps;
    if eps == 0.0 {
        let tests: Vec<HermitianOperator> = blocks
            .iter()
            .map(|b| b.rho.support_projector(1e-12))
            .collect();
        let (alpha, beta) = stats(blocks, &tests);
        return Ok(NPTest {
            tests,
            alpha,
            beta,
            multiplier: 0.0,
        });
    }

    let kernels: Vec<HermitianOperator> = blocks
        .iter()
        .map(|b| {
            let s = b
                .sigma
                .support_projector(1e-12 * b.sigma.max_eigenvalue().max(1e-300));
            HermitianOperator::identity(b.sigma.dim()).sub(&s)
        })
        .collect();
    let (outside, _) = stats(blocks, &kernels);
    if outside >= target {
        let c = target / outside;
        let tests: Vec<HermitianOperator> = kernels.iter().map(|k| k.scale(c)).collect();
        let (alpha, _) = stats(blocks, &tests);
        return Ok(NPTest {
            tests,
            alpha,
            beta: 0.0,
            multiplier: f64::INFINITY,
        });
    }

    let alpha_at = |mu: f64| {
        let t = projectors_at(blocks, mu);
        let (a, _) = stats(blocks, &t);
        (a, t)
    };
    let mut lo_log = 0.0_f64;
    let mut hi_log = 0.0_f64;
    let (mut a_lo, mut t_lo) = alpha_at(1.0);
    let (mut a_hi, mut t_hi) = (a_lo, t_lo.clone());
    while a_lo < target && lo_log > -1000.0 {
        lo_log -= 4.0;
        let r = alpha_at(lo_log.exp2());
        a_lo = r.0;
        t_lo = r.1;
    }
    while a_hi > target && hi_log < 1000.0 {
        hi_log += 4.0;
        let r = alpha_at(hi_log.exp2());
        a_hi = r.0;
        t_hi = r.1;
    }
    if a_lo < target {
        // Numerically the full support test falls short; fall back to it.
        let tests: Vec<HermitianOperator> = blocks
            .iter()
            .map(|b| b.rho.support_projector(1e-12))
            .collect();
        let (alpha, beta) = stats(blocks, &tests);
        return Ok(NPTest {
            tests,
            alpha,
            beta,
            multiplier: 0.0,
        });
    }
    if lo_log == hi_log {
        lo_log = hi_log - 4.0;
        let r = alpha_at(lo_log.exp2());
        a_lo = r.0;
        t_lo = r.1;
    }
    for _ in 0..MAX_BISECTIONS {
        if hi_log - lo_log <= 1e-13 * (1.0 + hi_log.abs()) {
            break;
        }
        let mid = 0.5 * (lo_log + hi_log);
        let (a, t) = alpha_at(mid.exp2());
        if a >= target {
            lo_log = mid;
            a_lo = a;
            t_lo = t;
        } else {
            hi_log = mid;
            a_hi = a;
            t_hi = t;
        }
    }
    let c = if a_lo - a_hi > 0.0 {
        ((target - a_hi) / (a_lo - a_hi)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let tests: Vec<HermitianOperator> = t_lo
        .iter()
        .zip(&t_hi)
        .map(|(l, h)| l.scale(c).add(&h.scale(1.0 - c)))
        .collect();
    let (alpha, beta) = stats(blocks, &tests);
    Ok(NPTest {
        tests,
        alpha,
        beta,
        multiplier: (0.5 * (lo_log + hi_log)).exp2(),
    })
}

/// Hypothesis-testing divergence −log2 min{Tr Πσ : Tr Πρ ≥ 1−ε}.
pub fn d_hyp(rho: &HermitianOperator, sigma: &HermitianOperator, eps: f64) -> Result<f64> {
    Ok(np_test_blocks(&[NpBlock::new(rho.clone(), sigma.clone())], eps)?.value())
}

/// Hypothesis-testing mutual information between the factors in `left` and the rest.
pub fn i_hyp(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    left: &[&str],
    eps: f64,
) -> Result<f64> {
    let sigma = product_of_marginals(rho, layout, left)?;
    d_hyp(rho, &sigma, eps)
}

/// Per-label tests of a classical-quantum hypothesis-testing problem.
#[derive(Clone, Debug)]
pub struct CqTest {
    pub value: f64,
    /// Full classical label of each test, in the order of the state's blocks.
    pub labels: Vec<Vec<usize>>,
    /// Test on the quantum part for each label.
    pub tests: Vec<HermitianOperator>,
    pub alpha: f64,
    pub beta: f64,
}

impl CqTest {
    pub fn test_for(&self, label: &[usize]) -> Option<&HermitianOperator> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| &self.tests[i])
    }
}

/// Hypothesis-testing mutual information between the classical registers
/// `left` and everything else (remaining registers plus the quantum part).
///
/// When nothing remains on the right the value is zero.
pub fn i_hyp_cq(cq: &CQState, left: &[&str], eps: f64) -> Result<CqTest> {
    check_eps(eps)?;
    let (blocks, _) = cq_product_blocks(cq, left)?;
    let right_regs: Vec<usize> = right_register_indices(cq, left)?;
    if right_regs.is_empty() && cq.quantum_dim() == 1 {
        let tests = vec![HermitianOperator::identity(1); cq.len()];
        return Ok(CqTest {
            value: 0.0,
            labels: cq.labels().to_vec(),
            tests,
            alpha: 1.0,
            beta: 1.0,
        });
    }
    let t = np_test_blocks(&blocks, eps)?;
    Ok(CqTest {
        value: t.value(),
        labels: cq.labels().to_vec(),
        tests: t.tests,
        alpha: t.alpha,
        beta: t.beta,
    })
}

pub(crate) fn right_register_indices(cq: &CQState, left: &[&str]) -> Result<Vec<usize>> {
    for l in left {
        cq.register_index(l)?;
    }
    Ok((0..cq.registers().len())
        .filter(|&r| !left.contains(&cq.registers()[r].as_str()))
        .collect())
}

/// Blocks (w_c ρ_c, P_left(a_c) ρ_right(b_c)) for every label present in the state,
/// with the index of the right-label group of each block.
pub(crate) fn cq_product_blocks(cq: &CQState, left: &[&str]) -> Result<(Vec<NpBlock>, Vec<usize>)> {
    let left_idx: Vec<usize> = left
        .iter()
        .map(|l| cq.register_index(l))
        .collect::<Result<_>>()?;
    let right_idx = right_register_indices(cq, left)?;
    let mut left_p: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    let mut right_ops: Vec<(Vec<usize>, HermitianOperator)> = Vec::new();
    for i in 0..cq.len() {
        let a: Vec<usize> = left_idx.iter().map(|&r| cq.label(i)[r]).collect();
        *left_p.entry(a).or_insert(0.0) += cq.weight(i);
        let b: Vec<usize> = right_idx.iter().map(|&r| cq.label(i)[r]).collect();
        let op = cq.unnormalized(i);
        match right_ops.iter_mut().find(|(k, _)| *k == b) {
            Some((_, acc)) => acc.add_scaled(&op, 1.0),
            None => right_ops.push((b, op)),
        }
    }
    let mut blocks = Vec::with_capacity(cq.len());
    let mut groups = Vec::with_capacity(cq.len());
    for i in 0..cq.len() {
        let a: Vec<usize> = left_idx.iter().map(|&r| cq.label(i)[r]).collect();
        let b: Vec<usize> = right_idx.iter().map(|&r| cq.label(i)[r]).collect();
        let g = right_ops
            .iter()
            .position(|(k, _)| *k == b)
            .expect("group recorded");
        blocks.push(NpBlock::new(
            cq.unnormalized(i),
            right_ops[g].1.scale(left_p[&a]),
        ));
        groups.push(g);
    }
    Ok((blocks, groups))
}
