//! Smoothed max divergences by bisection over semidefinite feasibility
//! problems. Each problem asks for a subnormalised ρ′ within purified
//! distance ε of ρ satisfying ρ′ ≤ 2^λ σ, where σ is either fixed or
//! built linearly from ρ′ itself.

use super::hyp::cq_product_blocks;
use super::{check_eps, d_max, d_max_blocks, product_of_marginals};
use crate::error::{Error, Result};
use crate::linalg::{
    partial_trace, permute_systems, tensor, ComplexMatrix, HermitianOperator, SystemLayout, C64,
};
use crate::objects::CQState;
use crate::sdp::{
    solve_warm, MatrixExpr, ScalarExpr, SdProblem, SdpStatus, SolverConfig, Term, WarmStart,
};

#[derive(Clone, Debug)]
pub struct SmoothingConfig {
    /// Width of the final bracket in bits.
    pub bisection_tol: f64,
    pub solver: SolverConfig,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            bisection_tol: 2.5e-4,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SmoothingOutcome {
    /// Smallest λ certified feasible.
    pub value: f64,
    /// Largest λ known infeasible.
    pub lower: f64,
    /// Feasible ρ′ at `value`, one operator per block in the input space.
    pub optimizer: Vec<HermitianOperator>,
    pub sdp_solves: usize,
}

struct Block {
    /// Isometry from the working subspace into the block space.
    basis: ComplexMatrix,
    /// Nonzero spectrum of ρ restricted to the working subspace.
    rho_hat: Vec<f64>,
    /// Eigenvectors of the restricted ρ (working dim × rank).
    rho_vectors: ComplexMatrix,
    sigma_fixed: Option<HermitianOperator>,
    /// σ contributions Σ coeff · K ρ′_j K†.
    sigma_terms: Vec<(usize, f64, Vec<ComplexMatrix>)>,
}

impl Block {
    fn work_dim(&self) -> usize {
        self.basis.cols()
    }
}

struct Engine {
    blocks: Vec<Block>,
    eps: f64,
}

impl Engine {
    fn problem(&self, lambda: f64) -> SdProblem {
        let scale = lambda.exp2();
        let mut p = SdProblem::new();
        let vars: Vec<_> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| p.hermitian(format!("rho{i}"), b.work_dim()))
            .collect();
        let mut trace = ScalarExpr::constant(1.0);
        let mut fid = ScalarExpr::constant(-(1.0 - self.eps * self.eps).sqrt());
        for (i, b) in self.blocks.iter().enumerate() {
            let r = b.work_dim();
            let s = b.rho_hat.len();
            let constant = match &b.sigma_fixed {
                Some(sig) => sig.scale(scale),
                None => HermitianOperator::zeros(r),
            };
            let mut dom = MatrixExpr::constant(constant).place(vars[i], -1.0, r, 0);
            for (j, c, kraus) in &b.sigma_terms {
                dom = dom.with(Term::Congruence {
                    var: vars[*j],
                    coeff: scale * c,
                    kraus: kraus.clone(),
                    offset: 0,
                });
            }
            p.psd(dom);
            trace = trace.plus(vars[i], -1.0, ComplexMatrix::identity(r));
            if s == 0 {
                p.psd(MatrixExpr::zeros(r).place(vars[i], 1.0, r, 0));
                continue;
            }
            let z = p.complex(format!("z{i}"), s, r);
            let mut head = vec![0.0; s + r];
            head[..s].copy_from_slice(&b.rho_hat);
            let joint = MatrixExpr::constant(HermitianOperator::diag(&head))
                .with(Term::OffDiagonal {
                    var: z,
                    coeff: 1.0,
                    row: 0,
                    col: s,
                })
                .place(vars[i], 1.0, r, s);
            p.psd(joint);
            fid = fid.plus(z, 1.0, b.rho_vectors.clone());
        }
        p.nonneg(trace);
        p.nonneg(fid);
        p
    }

    fn bisect(
        &self,
        mut lo: f64,
        mut hi: f64,
        config: &SmoothingConfig,
    ) -> Result<SmoothingOutcome> {
        let mut warm: Option<WarmStart> = None;
        let mut solves = 0;
        let mut best: Option<Vec<HermitianOperator>> = None;
        let mut attempt = |lambda: f64,
                           warm: &mut Option<WarmStart>|
         -> Result<Option<Vec<HermitianOperator>>> {
            let (res, w) = solve_warm(&self.problem(lambda), &config.solver, warm.as_ref())?;
            if res.status == SdpStatus::Feasible {
                *warm = Some(w);
            }
            solves += 1;
            if config
                .solver
                .cancel
                .as_ref()
                .is_some_and(|c| c.is_cancelled())
            {
                return Err(Error::Cancelled);
            }
            Ok(match res.status {
                SdpStatus::Feasible => Some(
                    self.blocks
                        .iter()
                        .enumerate()
                        .map(|(i, b)| {
                            let x = res.hermitian(&format!("rho{i}")).expect("variable present");
                            x.congruence(&b.basis)
                        })
                        .collect(),
                ),
                _ => None,
            })
        };
        if !hi.is_finite() {
            let mut step = 1.0;
            hi = lo + step;
            loop {
                if let Some(x) = attempt(hi, &mut warm)? {
                    best = Some(x);
                    break;
                }
                lo = hi;
                step *= 2.0;
                hi = lo + step;
                if step > 256.0 {
                    return Err(Error::Solver {
                        message: "no feasible smoothing level found".into(),
                        primal: f64::NAN,
                        dual: f64::NAN,
                    });
                }
            }
        }
        while hi - lo > config.bisection_tol {
            let mid = 0.5 * (lo + hi);
            match attempt(mid, &mut warm)? {
                Some(x) => {
                    hi = mid;
                    best = Some(x);
                }
                None => lo = mid,
            }
        }
        let optimizer = match best {
            Some(x) => x,
            None => self.identity_candidate(),
        };
        Ok(SmoothingOutcome {
            value: hi,
            lower: lo,
            optimizer,
            sdp_solves: solves,
        })
    }

    /// ρ itself, restricted to the working subspaces.
    fn identity_candidate(&self) -> Vec<HermitianOperator> {
        self.blocks
            .iter()
            .map(|b| {
                let s = b.rho_hat.len();
                let r = b.work_dim();
                let d = HermitianOperator::diag(&b.rho_hat);
                let m = if s == 0 {
                    HermitianOperator::zeros(r)
                } else {
                    d.congruence(&b.rho_vectors)
                };
                m.congruence(&b.basis)
            })
            .collect()
    }
}

fn make_block(rho: &HermitianOperator, basis: ComplexMatrix) -> Block {
    let reduced = rho.congruence(&basis.adjoint());
    let e = reduced.eigh();
    let scale = e.values.first().copied().unwrap_or(0.0).max(1e-300);
    let keep: Vec<usize> = (0..e.dim())
        .filter(|&k| e.values[k] > 1e-12 * scale.max(1.0) && e.values[k] > 1e-14)
        .collect();
    let cols: Vec<Vec<C64>> = keep.iter().map(|&k| e.vector(k)).collect();
    Block {
        rho_vectors: ComplexMatrix::from_columns(basis.cols(), &cols),
        rho_hat: keep.iter().map(|&k| e.values[k]).collect(),
        basis,
        sigma_fixed: None,
        sigma_terms: Vec::new(),
    }
}

fn support_basis(op: &HermitianOperator) -> ComplexMatrix {
    op.support_basis(1e-12 * op.max_eigenvalue().max(1e-300))
}

fn fixed_sigma_engine(pairs: &[(HermitianOperator, HermitianOperator)], eps: f64) -> Engine {
    let blocks = pairs
        .iter()
        .map(|(rho, sigma)| {
            let basis = support_basis(sigma);
            let mut b = make_block(rho, basis.clone());
            b.sigma_fixed = Some(sigma.congruence(&basis.adjoint()));
            b
        })
        .collect();
    Engine { blocks, eps }
}

fn fixed_sigma_smoothing(
    pairs: &[(HermitianOperator, HermitianOperator)],
    eps: f64,
    config: &SmoothingConfig,
) -> Result<SmoothingOutcome> {
    check_eps(eps)?;
    let hi = d_max_blocks(pairs)?;
    if eps == 0.0 {
        return Ok(SmoothingOutcome {
            value: hi,
            lower: hi,
            optimizer: pairs.iter().map(|(r, _)| r.clone()).collect(),
            sdp_solves: 0,
        });
    }
    let tr_sigma: f64 = pairs.iter().map(|(_, s)| s.trace_re()).sum();
    let lo = ((1.0 - eps * eps) / tr_sigma).log2() - 1e-9;
    if hi.is_finite() && hi <= lo + config.bisection_tol {
        return Ok(SmoothingOutcome {
            value: hi,
            lower: lo,
            optimizer: pairs.iter().map(|(r, _)| r.clone()).collect(),
            sdp_solves: 0,
        });
    }
    fixed_sigma_engine(pairs, eps).bisect(lo, hi, config)
}

/// Smooth max divergence min over ρ′ ∈ B^ε(ρ) of D_max(ρ′‖σ).
pub fn d_max_smooth(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    eps: f64,
    config: &SmoothingConfig,
) -> Result<SmoothingOutcome> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "smoothing operands differ in dimension".into(),
        ));
    }
    fixed_sigma_smoothing(&[(rho.clone(), sigma.clone())], eps, config)
}

/// Smooth max mutual information against the product of the unsmoothed marginals.
pub fn i_max_smooth(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    left: &[&str],
    eps: f64,
    config: &SmoothingConfig,
) -> Result<SmoothingOutcome> {
    let sigma = product_of_marginals(rho, layout, left)?;
    d_max_smooth(rho, &sigma, eps, config)
}

/// Classical-quantum form of [`i_max_smooth`]: `left` names classical registers.
/// The returned optimizer has one block per label of the state.
pub fn i_max_smooth_cq(
    cq: &CQState,
    left: &[&str],
    eps: f64,
    config: &SmoothingConfig,
) -> Result<SmoothingOutcome> {
    let (blocks, _) = cq_product_blocks(cq, left)?;
    let pairs: Vec<_> = blocks.into_iter().map(|b| (b.rho, b.sigma)).collect();
    fixed_sigma_smoothing(&pairs, eps, config)
}

/// Smoothed max information with the right marginal taken from ρ′:
/// min over ρ′ ∈ B^ε(ρ) of D_max(ρ′‖ρ_L ⊗ ρ′_R).
pub fn i_max_tilde(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    left: &[&str],
    eps: f64,
    config: &SmoothingConfig,
) -> Result<SmoothingOutcome> {
    check_eps(eps)?;
    let factors = layout.factors();
    let lpos: Vec<usize> = (0..factors.len())
        .filter(|&p| left.contains(&factors[p].0.as_str()))
        .collect();
    let rpos: Vec<usize> = (0..factors.len()).filter(|p| !lpos.contains(p)).collect();
    for l in left {
        layout.position(l)?;
    }
    let names = |ps: &[usize]| -> Vec<&str> { ps.iter().map(|&p| factors[p].0.as_str()).collect() };
    let order: Vec<usize> = lpos.iter().chain(&rpos).copied().collect();
    let grouped = permute_systems(rho, &layout.dims(), &order)?;
    let rho_l = partial_trace(rho, layout, &names(&lpos))?;
    let rho_r = partial_trace(rho, layout, &names(&rpos))?;
    let hi = d_max(&grouped, &tensor(&rho_l, &rho_r))?;
    let mut out = if eps == 0.0 || hi <= config.bisection_tol {
        SmoothingOutcome {
            value: hi,
            lower: hi,
            optimizer: vec![grouped.clone()],
            sdp_solves: 0,
        }
    } else {
        let va = support_basis(&rho_l);
        let vb = support_basis(&rho_r);
        let basis = va.kron(&vb);
        let mut block = make_block(&grouped, basis.clone());
        let (da, db) = (rho_l.dim(), rho_r.dim());
        let el = rho_l.eigh();
        let mut kraus = Vec::new();
        for k in 0..da {
            if el.values[k] <= 1e-12 * el.values[0].max(1e-300) {
                continue;
            }
            let a: Vec<C64> = el
                .vector(k)
                .iter()
                .map(|z| z * el.values[k].sqrt())
                .collect();
            for i in 0..da {
                let mut e = vec![C64::new(0.0, 0.0); da];
                e[i] = C64::new(1.0, 0.0);
                let op = ComplexMatrix::outer(&a, &e).kron(&ComplexMatrix::identity(db));
                kraus.push(basis.adjoint().matmul(&op).matmul(&basis));
            }
        }
        block.sigma_terms.push((0, 1.0, kraus));
        Engine {
            blocks: vec![block],
            eps,
        }
        .bisect(-1e-9, hi, config)?
    };
    let dims: Vec<usize> = order.iter().map(|&p| factors[p].1).collect();
    let mut inverse = vec![0; order.len()];
    for (i, &p) in order.iter().enumerate() {
        inverse[p] = i;
    }
    out.optimizer = out
        .optimizer
        .iter()
        .map(|x| permute_systems(x, &dims, &inverse))
        .collect::<Result<_>>()?;
    Ok(out)
}

/// Classical-quantum form of [`i_max_tilde`] with classical registers on the left.
///
/// The optimizer holds one block per (left label, right label) pair with
/// positive marginals, listed as in [`tilde_cq_labels`].
pub fn i_max_tilde_cq(
    cq: &CQState,
    left: &[&str],
    eps: f64,
    config: &SmoothingConfig,
) -> Result<SmoothingOutcome> {
    check_eps(eps)?;
    let (present, _) = cq_product_blocks(cq, left)?;
    let pairs: Vec<_> = present
        .iter()
        .map(|b| (b.rho.clone(), b.sigma.clone()))
        .collect();
    let hi = d_max_blocks(&pairs)?;
    let layout = tilde_cq_labels(cq, left)?;
    if eps == 0.0 || hi <= config.bisection_tol {
        let optimizer = layout
            .cells
            .iter()
            .map(|c| match c.present {
                Some(i) => cq.unnormalized(i),
                None => HermitianOperator::zeros(cq.quantum_dim()),
            })
            .collect();
        return Ok(SmoothingOutcome {
            value: hi,
            lower: hi,
            optimizer,
            sdp_solves: 0,
        });
    }
    let group_bases: Vec<ComplexMatrix> = layout.right_ops.iter().map(support_basis).collect();
    let mut blocks = Vec::with_capacity(layout.cells.len());
    for cell in &layout.cells {
        let basis = group_bases[cell.group].clone();
        let rho = match cell.present {
            Some(i) => cq.unnormalized(i),
            None => HermitianOperator::zeros(cq.quantum_dim()),
        };
        let mut b = make_block(&rho, basis.clone());
        let r = basis.cols();
        for (j, other) in layout.cells.iter().enumerate() {
            if other.group == cell.group {
                b.sigma_terms
                    .push((j, cell.left_prob, vec![ComplexMatrix::identity(r)]));
            }
        }
        blocks.push(b);
    }
    Engine { blocks, eps }.bisect(-1e-9, hi, config)
}

#[derive(Clone, Debug)]
pub struct TildeCell {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub group: usize,
    pub left_prob: f64,
    /// Index of the matching block of the state, if the label has weight.
    pub present: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TildeLayout {
    pub cells: Vec<TildeCell>,
    pub right_ops: Vec<HermitianOperator>,
}

/// Cells of the classical-quantum tilde problem: every left label with
/// positive probability paired with every right label with nonzero block.
pub fn tilde_cq_labels(cq: &CQState, left: &[&str]) -> Result<TildeLayout> {
    let left_idx: Vec<usize> = left
        .iter()
        .map(|l| cq.register_index(l))
        .collect::<Result<_>>()?;
    let right_idx = super::hyp::right_register_indices(cq, left)?;
    let mut lefts: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut rights: Vec<(Vec<usize>, HermitianOperator)> = Vec::new();
    for i in 0..cq.len() {
        let a: Vec<usize> = left_idx.iter().map(|&r| cq.label(i)[r]).collect();
        let b: Vec<usize> = right_idx.iter().map(|&r| cq.label(i)[r]).collect();
        match lefts.iter_mut().find(|(k, _)| *k == a) {
            Some((_, p)) => *p += cq.weight(i),
            None => lefts.push((a, cq.weight(i))),
        }
        let op = cq.unnormalized(i);
        match rights.iter_mut().find(|(k, _)| *k == b) {
            Some((_, acc)) => acc.add_scaled(&op, 1.0),
            None => rights.push((b, op)),
        }
    }
    let mut cells = Vec::new();
    for (g, (b, _)) in rights.iter().enumerate() {
        for (a, p) in &lefts {
            let present = (0..cq.len()).find(|&i| {
                left_idx.iter().zip(a).all(|(&r, &v)| cq.label(i)[r] == v)
                    && right_idx.iter().zip(b).all(|(&r, &v)| cq.label(i)[r] == v)
            });
            cells.push(TildeCell {
                left: a.clone(),
                right: b.clone(),
                group: g,
                left_prob: *p,
                present,
            });
        }
    }
    Ok(TildeLayout {
        cells,
        right_ops: rights.into_iter().map(|(_, o)| o).collect(),
    })
}
