//! POVMs, instruments, classical-quantum states and induced distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    matrix_sqrt, partial_trace, ComplexMatrix, DensityOperator, HermitianOperator, SystemLayout,
    PSD_TOL,
};

pub const COMPLETENESS_TOL: f64 = 1e-8;
pub const DISTRIBUTION_TOL: f64 = 1e-10;
/// Label used for the completion element of an instrument and for abort outcomes.
pub const BOTTOM: &str = "⊥";

/// Canonical serialisation of a multi-register symbol.
pub fn joint_symbol(parts: &[&str]) -> String {
    parts.join("|")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(alphabet: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        let d = Self::subnormalized(alphabet, probs)?;
        let total: f64 = d.probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(d)
    }

    /// Nonnegative weights with total at most one (up to tolerance).
    pub fn subnormalized(alphabet: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if alphabet.len() != probs.len() {
            return Err(Error::DimensionMismatch(
                "alphabet and probabilities differ in length".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(
                "negative or non-finite probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + DISTRIBUTION_TOL {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { alphabet, probs })
    }

    /// Distribution over the symbols "0", "1", ….
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Self::new((0..probs.len()).map(|i| i.to_string()).collect(), probs)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            alphabet: (0..n).map(|i| i.to_string()).collect(),
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }

    pub fn prob_of(&self, symbol: &str) -> Option<f64> {
        self.alphabet
            .iter()
            .position(|s| s == symbol)
            .map(|i| self.probs[i])
    }
}

/// Joint measurement {Λ_{x,y}} stored x-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPOVM {
    alphabet_x: Vec<String>,
    alphabet_y: Vec<String>,
    elements: Vec<HermitianOperator>,
}

impl JointPOVM {
    pub fn new(
        alphabet_x: Vec<String>,
        alphabet_y: Vec<String>,
        elements: Vec<HermitianOperator>,
    ) -> Result<Self> {
        if alphabet_x.is_empty() || alphabet_y.is_empty() {
            return Err(Error::InvalidArgument("empty alphabet".into()));
        }
        if elements.len() != alphabet_x.len() * alphabet_y.len() {
            return Err(Error::DimensionMismatch(
                "element count does not match alphabets".into(),
            ));
        }
        let d = elements[0].dim();
        let mut sum = HermitianOperator::zeros(d);
        for (i, e) in elements.iter().enumerate() {
            if e.dim() != d {
                return Err(Error::DimensionMismatch(
                    "POVM elements differ in dimension".into(),
                ));
            }
            let min = e.min_eigenvalue();
            if min < -PSD_TOL {
                return Err(Error::InvalidInstance(format!(
                    "POVM element {i} has eigenvalue {min:e}"
                )));
            }
            sum.add_scaled(e, 1.0);
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidInstance(format!(
                "POVM elements sum to identity only within {defect:e}"
            )));
        }
        Ok(Self {
            alphabet_x,
            alphabet_y,
            elements,
        })
    }

    /// Measurement with a single-symbol Y alphabet.
    pub fn single_axis(alphabet_x: Vec<String>, elements: Vec<HermitianOperator>) -> Result<Self> {
        Self::new(alphabet_x, vec!["0".into()], elements)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn alphabet_x(&self) -> &[String] {
        &self.alphabet_x
    }

    pub fn alphabet_y(&self) -> &[String] {
        &self.alphabet_y
    }

    pub fn nx(&self) -> usize {
        self.alphabet_x.len()
    }

    pub fn ny(&self) -> usize {
        self.alphabet_y.len()
    }

    pub fn element(&self, ix: usize, iy: usize) -> &HermitianOperator {
        &self.elements[ix * self.ny() + iy]
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn label(&self, ix: usize, iy: usize) -> String {
        joint_symbol(&[&self.alphabet_x[ix], &self.alphabet_y[iy]])
    }

    /// Λ_x = Σ_y Λ_{x,y}.
    pub fn marginal_x(&self) -> Vec<HermitianOperator> {
        (0..self.nx())
            .map(|ix| {
                let mut acc = HermitianOperator::zeros(self.dim());
                for iy in 0..self.ny() {
                    acc.add_scaled(self.element(ix, iy), 1.0);
                }
                acc
            })
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<HermitianOperator> {
        (0..self.ny())
            .map(|iy| {
                let mut acc = HermitianOperator::zeros(self.dim());
                for ix in 0..self.nx() {
                    acc.add_scaled(self.element(ix, iy), 1.0);
                }
                acc
            })
            .collect()
    }

    /// The same measurement with the roles of X and Y exchanged.
    pub fn swapped(&self) -> Self {
        let elements = (0..self.ny())
            .flat_map(|iy| (0..self.nx()).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| self.element(ix, iy).clone())
            .collect();
        Self {
            alphabet_x: self.alphabet_y.clone(),
            alphabet_y: self.alphabet_x.clone(),
            elements,
        }
    }

    /// The X-marginal measurement with a trivial Y alphabet.
    pub fn x_only(&self) -> Self {
        Self {
            alphabet_x: self.alphabet_x.clone(),
            alphabet_y: vec!["0".into()],
            elements: self.marginal_x(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    alphabet_x: Vec<String>,
    alphabet_y: Vec<String>,
    kraus: Vec<ComplexMatrix>,
}

impl Instrument {
    pub fn new(
        alphabet_x: Vec<String>,
        alphabet_y: Vec<String>,
        kraus: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if kraus.len() != alphabet_x.len() * alphabet_y.len() || kraus.is_empty() {
            return Err(Error::DimensionMismatch(
                "Kraus count does not match alphabets".into(),
            ));
        }
        let d = kraus[0].cols();
        if kraus.iter().any(|k| k.cols() != d) {
            return Err(Error::DimensionMismatch(
                "Kraus operators differ in input dimension".into(),
            ));
        }
        Ok(Self {
            alphabet_x,
            alphabet_y,
            kraus,
        })
    }

    pub fn kraus(&self, ix: usize, iy: usize) -> &ComplexMatrix {
        &self.kraus[ix * self.alphabet_y.len() + iy]
    }
}

/// Effects N†N of an instrument, completed by a (⊥,⊥) element when they fall short of the identity.
pub fn instrument_to_povm(inst: &Instrument) -> Result<JointPOVM> {
    let d = inst.kraus[0].cols();
    let effects: Vec<HermitianOperator> = inst
        .kraus
        .iter()
        .map(|k| HermitianOperator::hermitize(k.adjoint().matmul(k)))
        .collect();
    let mut sum = HermitianOperator::zeros(d);
    for e in &effects {
        sum.add_scaled(e, 1.0);
    }
    let deficit = HermitianOperator::identity(d).sub(&sum);
    let min = deficit.min_eigenvalue();
    if min < -COMPLETENESS_TOL {
        return Err(Error::InvalidInstance(format!(
            "Kraus effects exceed the identity by {:e}",
            -min
        )));
    }
    if deficit.max_eigenvalue() <= COMPLETENESS_TOL {
        return JointPOVM::new(inst.alphabet_x.clone(), inst.alphabet_y.clone(), effects);
    }
    let mut ax = inst.alphabet_x.clone();
    let mut ay = inst.alphabet_y.clone();
    ax.push(BOTTOM.into());
    ay.push(BOTTOM.into());
    let ny = ay.len();
    let mut elements = Vec::with_capacity(ax.len() * ny);
    for ix in 0..ax.len() {
        for iy in 0..ny {
            if ix < inst.alphabet_x.len() && iy < inst.alphabet_y.len() {
                elements.push(effects[ix * inst.alphabet_y.len() + iy].clone());
            } else if ix == ax.len() - 1 && iy == ny - 1 {
                elements.push(deficit.clone());
            } else {
                elements.push(HermitianOperator::zeros(d));
            }
        }
    }
    JointPOVM::new(ax, ay, elements)
}

/// p(x,y) = Tr[Λ_{x,y} ρ] over "x|y" symbols in x-major order.
pub fn induced_distribution(povm: &JointPOVM, rho: &DensityOperator) -> Result<Distribution> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let mut alphabet = Vec::new();
    let mut probs = Vec::new();
    for ix in 0..povm.nx() {
        for iy in 0..povm.ny() {
            alphabet.push(povm.label(ix, iy));
            probs.push(povm.element(ix, iy).inner(rho).max(0.0));
        }
    }
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Distribution::new(alphabet, probs)
}

/// Classical-quantum state Σ_c w_c |c⟩⟨c| ⊗ ρ_c over named classical registers.
///
/// Blocks are stored with unit trace; zero-weight labels are omitted.
#[derive(Clone, Debug, PartialEq)]
pub struct CQState {
    registers: Vec<String>,
    alphabets: Vec<Vec<String>>,
    labels: Vec<Vec<usize>>,
    weights: Vec<f64>,
    blocks: Vec<HermitianOperator>,
    quantum: SystemLayout,
}

/// Weight below which a classical label is dropped.
pub const ZERO_WEIGHT: f64 = 1e-15;

impl CQState {
    /// Build from unnormalised blocks; the weights are their traces.
    pub fn from_unnormalized(
        registers: Vec<String>,
        alphabets: Vec<Vec<String>>,
        entries: Vec<(Vec<usize>, HermitianOperator)>,
        quantum: SystemLayout,
    ) -> Result<Self> {
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        let mut blocks = Vec::new();
        for (label, op) in entries {
            let w = op.trace_re();
            if w <= ZERO_WEIGHT {
                continue;
            }
            labels.push(label);
            weights.push(w);
            blocks.push(op.scale(1.0 / w));
        }
        Self::new(registers, alphabets, labels, weights, blocks, quantum)
    }

    pub fn new(
        registers: Vec<String>,
        alphabets: Vec<Vec<String>>,
        labels: Vec<Vec<usize>>,
        weights: Vec<f64>,
        blocks: Vec<HermitianOperator>,
        quantum: SystemLayout,
    ) -> Result<Self> {
        if registers.len() != alphabets.len() {
            return Err(Error::DimensionMismatch(
                "register and alphabet lists differ".into(),
            ));
        }
        if labels.len() != weights.len() || labels.len() != blocks.len() {
            return Err(Error::DimensionMismatch(
                "labels, weights and blocks differ in length".into(),
            ));
        }
        for l in &labels {
            if l.len() != registers.len() || l.iter().zip(&alphabets).any(|(&i, a)| i >= a.len()) {
                return Err(Error::InvalidArgument(
                    "label outside the register alphabets".into(),
                ));
            }
        }
        for b in &blocks {
            if b.dim() != quantum.dim() {
                return Err(Error::DimensionMismatch(
                    "block dimension does not match quantum layout".into(),
                ));
            }
        }
        let total: f64 = weights
            .iter()
            .zip(&blocks)
            .map(|(w, b)| w * b.trace_re())
            .sum();
        if (total - 1.0).abs() > COMPLETENESS_TOL {
            return Err(Error::InvalidTrace(total));
        }
        Ok(Self {
            registers,
            alphabets,
            labels,
            weights,
            blocks,
            quantum,
        })
    }

    pub fn registers(&self) -> &[String] {
        &self.registers
    }

    pub fn alphabets(&self) -> &[Vec<String>] {
        &self.alphabets
    }

    pub fn register_index(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r == name)
            .ok_or_else(|| Error::UnknownLabel(name.into()))
    }

    pub fn quantum_layout(&self) -> &SystemLayout {
        &self.quantum
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum.dim()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &[usize] {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn block(&self, i: usize) -> &HermitianOperator {
        &self.blocks[i]
    }

    pub fn unnormalized(&self, i: usize) -> HermitianOperator {
        self.blocks[i].scale(self.weights[i])
    }

    pub fn symbol(&self, i: usize) -> String {
        let parts: Vec<&str> = self.labels[i]
            .iter()
            .zip(&self.alphabets)
            .map(|(&k, a)| a[k].as_str())
            .collect();
        joint_symbol(&parts)
    }

    /// Marginal on a subset of classical registers and quantum factors.
    ///
    /// Output labels are sorted; contributions are summed in input order.
    pub fn marginal(&self, keep_registers: &[&str], keep_quantum: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = keep_registers
            .iter()
            .map(|r| self.register_index(r))
            .collect::<Result<_>>()?;
        let quantum = self.quantum.restrict(keep_quantum)?;
        let mut grouped: BTreeMap<Vec<usize>, HermitianOperator> = BTreeMap::new();
        for i in 0..self.len() {
            let key: Vec<usize> = idx.iter().map(|&r| self.labels[i][r]).collect();
            let reduced = if keep_quantum.len() == self.quantum.factors().len() {
                self.unnormalized(i)
            } else {
                partial_trace(&self.unnormalized(i), &self.quantum, keep_quantum)?
            };
            match grouped.get_mut(&key) {
                Some(acc) => acc.add_scaled(&reduced, 1.0),
                None => {
                    grouped.insert(key, reduced);
                }
            }
        }
        Self::from_unnormalized(
            idx.iter().map(|&r| self.registers[r].clone()).collect(),
            idx.iter().map(|&r| self.alphabets[r].clone()).collect(),
            grouped.into_iter().collect(),
            quantum,
        )
    }

    /// Distribution of the full classical label.
    pub fn classical_distribution(&self) -> Distribution {
        let total: f64 = self.weights.iter().sum();
        Distribution {
            alphabet: (0..self.len()).map(|i| self.symbol(i)).collect(),
            probs: self.weights.iter().map(|w| w / total).collect(),
        }
    }

    /// Distribution of the full classical label over the whole product alphabet, zeros included.
    pub fn full_distribution(&self) -> Distribution {
        let sizes: Vec<usize> = self.alphabets.iter().map(|a| a.len()).collect();
        let n: usize = sizes.iter().product();
        let mut probs = vec![0.0; n];
        for i in 0..self.len() {
            probs[self.flat_index(&self.labels[i])] += self.weights[i];
        }
        let alphabet = (0..n)
            .map(|k| {
                let label = unflatten(k, &sizes);
                let parts: Vec<&str> = label
                    .iter()
                    .zip(&self.alphabets)
                    .map(|(&j, a)| a[j].as_str())
                    .collect();
                joint_symbol(&parts)
            })
            .collect();
        Distribution { alphabet, probs }
    }

    pub fn flat_index(&self, label: &[usize]) -> usize {
        label
            .iter()
            .zip(&self.alphabets)
            .fold(0, |acc, (&i, a)| acc * a.len() + i)
    }

    /// Dense operator on (classical registers) ⊗ (quantum part).
    pub fn to_density(&self) -> HermitianOperator {
        let nc: usize = self.alphabets.iter().map(|a| a.len()).product();
        let dq = self.quantum.dim();
        let mut m = ComplexMatrix::zeros(nc * dq, nc * dq);
        for i in 0..self.len() {
            let off = self.flat_index(&self.labels[i]) * dq;
            let b = self.unnormalized(i);
            for r in 0..dq {
                for c in 0..dq {
                    m[(off + r, off + c)] += b[(r, c)];
                }
            }
        }
        HermitianOperator::hermitize(m)
    }

    /// Layout matching [`CQState::to_density`].
    pub fn dense_layout(&self) -> SystemLayout {
        let mut f: Vec<(String, usize)> = self
            .registers
            .iter()
            .zip(&self.alphabets)
            .map(|(r, a)| (r.clone(), a.len()))
            .collect();
        f.extend(self.quantum.factors().iter().cloned());
        SystemLayout::new(f).expect("register and quantum labels are distinct")
    }
}

pub(crate) fn unflatten(mut k: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (i, &s) in sizes.iter().enumerate().rev() {
        out[i] = k % s;
        k /= s;
    }
    out
}

/// Which systems survive the measurement in [`post_measurement_cq`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeptSystems {
    /// Lüders update on A; A, B and R are all retained.
    Abr,
    /// A is consumed: blocks are Tr_A[(Λ ⊗ I)ρ].
    Br,
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on the factor `label`.
pub fn embed(op: &ComplexMatrix, layout: &SystemLayout, label: &str) -> Result<ComplexMatrix> {
    let pos = layout.position(label)?;
    let dims = layout.dims();
    if dims[pos] != op.rows() {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {} vs factor `{label}` dim {}",
            op.rows(),
            dims[pos]
        )));
    }
    let before: usize = dims[..pos].iter().product();
    let after: usize = dims[pos + 1..].iter().product();
    Ok(ComplexMatrix::identity(before)
        .kron(op)
        .kron(&ComplexMatrix::identity(after)))
}

/// Control state Σ |x,y⟩⟨x,y| ⊗ (Λ_{x,y} ⊗ I)(ρ) with registers "X", "Y".
pub fn post_measurement_cq(
    povm: &JointPOVM,
    rho: &DensityOperator,
    layout: &SystemLayout,
    kept: KeptSystems,
) -> Result<CQState> {
    if layout.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(
            "layout does not match state".into(),
        ));
    }
    if layout.factor_dim("A")? != povm.dim() {
        return Err(Error::DimensionMismatch(
            "POVM does not act on factor A".into(),
        ));
    }
    let rest: Vec<&str> = layout
        .factors()
        .iter()
        .map(|(l, _)| l.as_str())
        .filter(|l| *l != "A")
        .collect();
    let quantum = match kept {
        KeptSystems::Abr => layout.clone(),
        KeptSystems::Br => layout.restrict(&rest)?,
    };
    let mut entries = Vec::new();
    for ix in 0..povm.nx() {
        for iy in 0..povm.ny() {
            let root = matrix_sqrt(povm.element(ix, iy))?;
            let k = embed(root.matrix(), layout, "A")?;
            let post = rho.congruence(&k);
            let block = match kept {
                KeptSystems::Abr => post,
                KeptSystems::Br => partial_trace(&post, layout, &rest)?,
            };
            entries.push((vec![ix, iy], block));
        }
    }
    CQState::from_unnormalized(
        vec!["X".into(), "Y".into()],
        vec![povm.alphabet_x().to_vec(), povm.alphabet_y().to_vec()],
        entries,
        quantum,
    )
}
