use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::log_constant;
use crate::entropy::{
    cq_entropy, cq_mutual_information, h_max_smooth, h_max_smooth_iid, i_hyp_cq, i_hyp_cq_iid,
    i_max_smooth_cq, SmoothingConfig,
};
use crate::error::Result;
use crate::linalg::{DensityOperator, SystemLayout};
use crate::objects::{post_measurement_cq, CQState, JointPOVM, KeptSystems};
use crate::split::split_control_state;

/// Which register is split into (U, V).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitAxis {
    X,
    Y,
}

/// coeffs · (R_X, R_Y, C_X, C_Y) > rhs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub coeffs: [f64; 4],
    pub rhs: f64,
    pub provenance: String,
}

impl HalfSpace {
    fn new(coeffs: [f64; 4], rhs: f64, provenance: impl Into<String>) -> Self {
        Self {
            coeffs,
            rhs,
            provenance: provenance.into(),
        }
    }

    pub fn holds(&self, point: [f64; 4]) -> bool {
        self.coeffs.iter().zip(point).map(|(c, p)| c * p).sum::<f64>() > self.rhs
    }

    fn swapped(&self) -> Self {
        let c = self.coeffs;
        Self {
            coeffs: [c[1], c[0], c[3], c[2]],
            rhs: self.rhs,
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionPiece {
    pub label: String,
    pub axis: Option<SplitAxis>,
    pub theta: Option<f64>,
    pub constraints: Vec<HalfSpace>,
    pub quantities: BTreeMap<String, f64>,
}

impl RegionPiece {
    pub fn contains(&self, point: [f64; 4]) -> bool {
        self.constraints.iter().all(|h| h.holds(point))
    }

    /// The constraint with the given coefficient vector, if present.
    pub fn constraint(&self, coeffs: [f64; 4]) -> Option<&HalfSpace> {
        self.constraints.iter().find(|h| h.coeffs == coeffs)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateRegion {
    pub eps: Option<f64>,
    pub pieces: Vec<RegionPiece>,
}

impl RateRegion {
    /// Membership in the union of the pieces.
    pub fn contains(&self, point: [f64; 4]) -> bool {
        self.pieces.iter().any(|p| p.contains(point))
    }
}

#[derive(Clone, Debug, Default)]
pub struct RegionConfig {
    /// Additive constant on every I_max row; c(ε) when unset.
    pub log_const: Option<f64>,
    pub smoothing: SmoothingConfig,
}

/// Removes vacuous half-spaces and those implied by another one under non-negative rates.
fn prune(mut hs: Vec<HalfSpace>) -> Vec<HalfSpace> {
    hs.retain(|h| h.rhs > 0.0);
    let implied = |a: &HalfSpace, b: &HalfSpace| {
        b.coeffs.iter().zip(&a.coeffs).all(|(x, y)| x <= y) && b.rhs >= a.rhs
    };
    let mut keep = Vec::new();
    for (i, h) in hs.iter().enumerate() {
        let dominated = hs.iter().enumerate().any(|(j, g)| {
            j != i && implied(h, g) && (!implied(g, h) || j < i)
        });
        if !dominated {
            keep.push(h.clone());
        }
    }
    keep
}

struct Evaluator<'a> {
    cq: &'a CQState,
    quantum: Vec<String>,
    has_b: bool,
    eps: f64,
    c: f64,
    smoothing: &'a SmoothingConfig,
}

impl<'a> Evaluator<'a> {
    fn new(cq: &'a CQState, eps: f64, config: &'a RegionConfig) -> Self {
        let quantum: Vec<String> = cq.quantum_layout().factors().iter().map(|(l, _)| l.clone()).collect();
        let has_b = quantum.iter().any(|l| l == "B");
        Self {
            cq,
            quantum,
            has_b,
            eps,
            c: config.log_const.unwrap_or_else(|| log_constant(eps)),
            smoothing: &config.smoothing,
        }
    }

    fn deterministic(&self, reg: &str) -> Result<bool> {
        Ok(self.cq.marginal(&[reg], &[])?.len() <= 1)
    }

    fn q(&self) -> Vec<&str> {
        self.quantum.iter().map(|s| s.as_str()).collect()
    }

    /// I_max^ε(reg : quantum ⊗ others) on the marginal over `keep`.
    fn i_max(&self, reg: &str, keep: &[&str]) -> Result<f64> {
        let m = self.cq.marginal(keep, &self.q())?;
        Ok(i_max_smooth_cq(&m, &[reg], self.eps, self.smoothing)?.value)
    }

    fn i_hyp(&self, reg: &str) -> Result<f64> {
        if !self.has_b {
            return Ok(0.0);
        }
        Ok(i_hyp_cq(&self.cq.marginal(&[reg], &["B"])?, &[reg], self.eps)?.value)
    }

    fn h_max(&self, reg: &str) -> Result<f64> {
        Ok(h_max_smooth(&self.cq.marginal(&[reg], &[])?.full_distribution(), self.eps)?.value)
    }

    /// (message term, coin+message term) for `reg` decoded after the registers in `prior`.
    fn terms(&self, reg: &str, prior: &[&str], q: &mut BTreeMap<String, f64>) -> Result<(f64, f64)> {
        if self.deterministic(reg)? {
            return Ok((0.0, 0.0));
        }
        let mut keep = prior.to_vec();
        keep.push(reg);
        let im = self.i_max(reg, &keep)?;
        let ih = self.i_hyp(reg)?;
        let hm = self.h_max(reg)?;
        let tag = if prior.is_empty() { reg.to_string() } else { format!("{reg}|{}", prior.join("")) };
        q.insert(format!("I_max({tag})"), im);
        q.insert(format!("I_H({reg}:B)"), ih);
        q.insert(format!("H_max({reg})"), hm);
        Ok((im - ih + self.c, hm - ih))
    }
}

fn control_state(povm: &JointPOVM, rho: &DensityOperator, layout: &SystemLayout) -> Result<CQState> {
    post_measurement_cq(povm, rho, layout, KeptSystems::Br)
}

fn split_piece(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    eps: f64,
    theta: f64,
    axis: SplitAxis,
    config: &RegionConfig,
) -> Result<RegionPiece> {
    let p = if axis == SplitAxis::X { povm.clone() } else { povm.swapped() };
    let split = split_control_state(&control_state(&p, rho, layout)?, "X", theta)?;
    let ev = Evaluator::new(&split, eps, config);
    let mut q = BTreeMap::new();
    let (a_u, h_u) = ev.terms("U", &[], &mut q)?;
    let (a_y, h_y) = ev.terms("Y", &["U"], &mut q)?;
    let (a_v, h_v) = ev.terms("V", &["U", "Y"], &mut q)?;
    q.insert("c".into(), ev.c);
    let hs = vec![
        HalfSpace::new([1.0, 0.0, 0.0, 0.0], a_u + a_v, "R_U + R_V"),
        HalfSpace::new([1.0, 0.0, 1.0, 0.0], h_u + h_v, "C_U+R_U + C_V+R_V"),
        HalfSpace::new([1.0, 0.0, 1.0, 0.0], a_u + h_v, "R_U + C_V+R_V"),
        HalfSpace::new([1.0, 0.0, 1.0, 0.0], h_u + a_v, "C_U+R_U + R_V"),
        HalfSpace::new([0.0, 1.0, 0.0, 0.0], a_y, "R_Y"),
        HalfSpace::new([0.0, 1.0, 0.0, 1.0], h_y, "C_Y+R_Y"),
    ];
    let hs = if axis == SplitAxis::X { hs } else { hs.iter().map(HalfSpace::swapped).collect() };
    Ok(RegionPiece {
        label: format!("{axis:?}-split θ={theta}"),
        axis: Some(axis),
        theta: Some(theta),
        constraints: prune(hs),
        quantities: q,
    })
}

/// Union over θ and both split axes of the one-shot regions.
pub fn one_shot_region(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    eps: f64,
    theta_grid: &[f64],
    config: &RegionConfig,
) -> Result<RateRegion> {
    let mut pieces = Vec::new();
    for axis in [SplitAxis::X, SplitAxis::Y] {
        for &theta in theta_grid {
            pieces.push(split_piece(povm, rho, layout, eps, theta, axis, config)?);
        }
    }
    Ok(RateRegion {
        eps: Some(eps),
        pieces,
    })
}

/// Corner region without splitting; `first` is decoded without conditioning on the other register.
pub fn unsplit_region(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    eps: f64,
    first: SplitAxis,
    config: &RegionConfig,
) -> Result<RegionPiece> {
    let p = if first == SplitAxis::X { povm.clone() } else { povm.swapped() };
    let cq = control_state(&p, rho, layout)?;
    let ev = Evaluator::new(&cq, eps, config);
    let mut q = BTreeMap::new();
    let (a_x, h_x) = ev.terms("X", &[], &mut q)?;
    let (a_y, h_y) = ev.terms("Y", &["X"], &mut q)?;
    q.insert("c".into(), ev.c);
    let hs = vec![
        HalfSpace::new([1.0, 0.0, 0.0, 0.0], a_x, "R_X"),
        HalfSpace::new([1.0, 0.0, 1.0, 0.0], h_x, "C_X+R_X"),
        HalfSpace::new([0.0, 1.0, 0.0, 0.0], a_y, "R_Y"),
        HalfSpace::new([0.0, 1.0, 0.0, 1.0], h_y, "C_Y+R_Y"),
    ];
    let hs = if first == SplitAxis::X { hs } else { hs.iter().map(HalfSpace::swapped).collect() };
    Ok(RegionPiece {
        label: format!("unsplit, {first:?} first"),
        axis: None,
        theta: None,
        constraints: prune(hs),
        quantities: q,
    })
}

/// The five asymptotic half-spaces from von Neumann quantities of the control state.
pub fn iid_region(povm: &JointPOVM, rho: &DensityOperator, layout: &SystemLayout) -> Result<RateRegion> {
    let cq = control_state(povm, rho, layout)?;
    let q: Vec<&str> = cq.quantum_layout().factors().iter().map(|(l, _)| l.as_str()).collect();
    let b: &[&str] = if q.contains(&"B") { &["B"] } else { &[] };
    let mi = |l: &[&str], r: (&[&str], &[&str])| cq_mutual_information(&cq, (l, &[]), r);
    let ix_br = mi(&["X"], (&[], &q))?;
    let iy_br = mi(&["Y"], (&[], &q))?;
    let ixy_br = mi(&["X", "Y"], (&[], &q))?;
    let ix_b = mi(&["X"], (&[], b))?;
    let iy_b = mi(&["Y"], (&[], b))?;
    let ix_y = mi(&["X"], (&["Y"], &[]))?;
    let hx = cq_entropy(&cq.marginal(&["X"], &[])?);
    let hy = cq_entropy(&cq.marginal(&["Y"], &[])?);
    let quantities: BTreeMap<String, f64> = [
        ("I(X:BR)", ix_br),
        ("I(Y:BR)", iy_br),
        ("I(XY:BR)", ixy_br),
        ("I(X:B)", ix_b),
        ("I(Y:B)", iy_b),
        ("I(X:Y)", ix_y),
        ("H(X)", hx),
        ("H(Y)", hy),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let constraints = vec![
        HalfSpace::new([1.0, 0.0, 0.0, 0.0], ix_br - ix_b, "I(X:BR) − I(X:B)"),
        HalfSpace::new([0.0, 1.0, 0.0, 0.0], iy_br - iy_b, "I(Y:BR) − I(Y:B)"),
        HalfSpace::new(
            [1.0, 1.0, 0.0, 0.0],
            ixy_br + ix_y - ix_b - iy_b,
            "I(XY:BR) + I(X:Y) − I(X:B) − I(Y:B)",
        ),
        HalfSpace::new([1.0, 0.0, 1.0, 0.0], hx - ix_b, "H(X) − I(X:B)"),
        HalfSpace::new([0.0, 1.0, 0.0, 1.0], hy - iy_b, "H(Y) − I(Y:B)"),
    ];
    Ok(RateRegion {
        eps: None,
        pieces: vec![RegionPiece {
            label: "iid".into(),
            axis: None,
            theta: None,
            constraints,
            quantities,
        }],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n: usize,
    /// H_max^ε(X^n)/n.
    pub h_max_rate: f64,
    /// I_H^ε(X^n:B^n)/n.
    pub i_hyp_rate: f64,
    pub entropy: f64,
    pub mutual_information: f64,
}

/// Normalised block quantities of the X register against B for n = 1..=n_max.
pub fn block_trend(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    n_max: usize,
    eps: f64,
) -> Result<Vec<TrendRow>> {
    let cq = control_state(povm, rho, layout)?;
    let q: Vec<&str> = cq.quantum_layout().factors().iter().map(|(l, _)| l.as_str()).collect();
    let b: &[&str] = if q.contains(&"B") { &["B"] } else { &[] };
    let xb = cq.marginal(&["X"], b)?;
    let px = cq.marginal(&["X"], &[])?.full_distribution();
    let entropy = px.entropy();
    let mutual_information = cq_mutual_information(&xb, (&["X"], &[]), (&[], b))?;
    (1..=n_max)
        .map(|n| {
            Ok(TrendRow {
                n,
                h_max_rate: h_max_smooth_iid(&px, n, eps)? / n as f64,
                i_hyp_rate: i_hyp_cq_iid(&xb, n, eps)? / n as f64,
                entropy,
                mutual_information,
            })
        })
        .collect()
}
