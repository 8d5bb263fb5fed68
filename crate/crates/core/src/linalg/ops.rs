use serde::{Deserialize, Serialize};

use super::matrix::{norm, ComplexMatrix, C64, ZERO};
use super::operator::{HermitianOperator, NEGATIVE_EIG_LIMIT, PSD_TOL};
use crate::error::{Error, Result};

/// Ordered tensor factors with labels, first factor most significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemLayout {
    factors: Vec<(String, usize)>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (l, d)) in factors.iter().enumerate() {
            if *d == 0 {
                return Err(Error::InvalidArgument(format!(
                    "factor `{l}` has dimension 0"
                )));
            }
            if factors[..i].iter().any(|(m, _)| m == l) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate factor label `{l}`"
                )));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.into()))
    }

    pub fn factor_dim(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    /// Layout restricted to `keep`, preserving the original factor order.
    pub fn restrict(&self, keep: &[&str]) -> Result<Self> {
        for k in keep {
            self.position(k)?;
        }
        Ok(Self {
            factors: self
                .factors
                .iter()
                .filter(|(l, _)| keep.contains(&l.as_str()))
                .cloned()
                .collect(),
        })
    }
}

pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::hermitize(a.matrix().kron(b.matrix()))
}

pub fn tensor_all(ops: &[&HermitianOperator]) -> HermitianOperator {
    let mut acc = HermitianOperator::identity(1);
    for op in ops {
        acc = tensor(&acc, op);
    }
    acc
}

fn mixed_radix(index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    let mut rem = index;
    for (k, &d) in dims.iter().enumerate().rev() {
        digits[k] = rem % d;
        rem /= d;
    }
    digits
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Partial trace over every factor not listed in `keep`.
pub fn partial_trace(
    op: &HermitianOperator,
    layout: &SystemLayout,
    keep: &[&str],
) -> Result<HermitianOperator> {
    if layout.dim() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "layout dim {} vs operator dim {}",
            layout.dim(),
            op.dim()
        )));
    }
    let kept_pos: Vec<usize> = {
        let mut v = Vec::new();
        for k in keep {
            v.push(layout.position(k)?);
        }
        v.sort_unstable();
        v.dedup();
        v
    };
    let dims = layout.dims();
    let traced_pos: Vec<usize> = (0..dims.len()).filter(|p| !kept_pos.contains(p)).collect();
    let kdims: Vec<usize> = kept_pos.iter().map(|&p| dims[p]).collect();
    let tdims: Vec<usize> = traced_pos.iter().map(|&p| dims[p]).collect();
    let dk: usize = kdims.iter().product();
    let dt: usize = tdims.iter().product();
    let mut full = vec![0usize; dk * dt];
    let mut digits = vec![0usize; dims.len()];
    for k in 0..dk {
        let kd = mixed_radix(k, &kdims);
        for t in 0..dt {
            let td = mixed_radix(t, &tdims);
            for (i, &p) in kept_pos.iter().enumerate() {
                digits[p] = kd[i];
            }
            for (i, &p) in traced_pos.iter().enumerate() {
                digits[p] = td[i];
            }
            full[k * dt + t] = compose(&digits, &dims);
        }
    }
    let m = op.matrix();
    let out = ComplexMatrix::from_fn(dk, dk, |r, c| {
        let mut acc = ZERO;
        for t in 0..dt {
            acc += m[(full[r * dt + t], full[c * dt + t])];
        }
        acc
    });
    Ok(HermitianOperator::hermitize(out))
}

/// Reorder tensor factors: output factor `i` is input factor `perm[i]`.
pub fn permute_systems(
    op: &HermitianOperator,
    dims: &[usize],
    perm: &[usize],
) -> Result<HermitianOperator> {
    let total: usize = dims.iter().product();
    if total != op.dim() || perm.len() != dims.len() {
        return Err(Error::DimensionMismatch(
            "permutation does not match operator".into(),
        ));
    }
    let mut seen = vec![false; dims.len()];
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        seen[p] = true;
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map: Vec<usize> = (0..total)
        .map(|new_idx| {
            let nd = mixed_radix(new_idx, &new_dims);
            let mut od = vec![0; dims.len()];
            for (i, &p) in perm.iter().enumerate() {
                od[p] = nd[i];
            }
            compose(&od, dims)
        })
        .collect();
    let m = op.matrix();
    Ok(HermitianOperator::hermitize(ComplexMatrix::from_fn(
        total,
        total,
        |r, c| m[(map[r], map[c])],
    )))
}

pub fn trace_norm_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.sub(b).trace_norm())
}

fn clamp_psd_spectrum(op: &HermitianOperator) -> Result<super::eigen::Eigen> {
    let e = op.eigh();
    if let Some(&min) = e.values.last() {
        if min < NEGATIVE_EIG_LIMIT {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(e)
}

pub fn matrix_sqrt(op: &HermitianOperator) -> Result<HermitianOperator> {
    let e = clamp_psd_spectrum(op)?;
    Ok(HermitianOperator::hermitize(e.reconstruct_with(|l| {
        if l > PSD_TOL {
            l.sqrt()
        } else {
            0.0
        }
    })))
}

pub fn pseudo_inverse_sqrt(op: &HermitianOperator) -> Result<HermitianOperator> {
    let e = clamp_psd_spectrum(op)?;
    Ok(HermitianOperator::hermitize(e.reconstruct_with(|l| {
        if l > PSD_TOL {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    })))
}

pub fn pseudo_inverse(op: &HermitianOperator) -> Result<HermitianOperator> {
    let e = clamp_psd_spectrum(op)?;
    Ok(HermitianOperator::hermitize(e.reconstruct_with(|l| {
        if l > PSD_TOL {
            1.0 / l
        } else {
            0.0
        }
    })))
}

/// ‖√a √b‖₁ for positive semidefinite a, b (trace need not be one).
pub fn fidelity(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let sa = matrix_sqrt(a)?;
    let inner = b.congruence(sa.matrix());
    Ok(inner.eigenvalues().iter().map(|&l| l.max(0.0).sqrt()).sum())
}

pub fn purified_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    let f = fidelity(a, b)?.min(1.0);
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// (√ρ ⊗ I)|Ω⟩ with |Ω⟩ = Σ_j |j⟩|j⟩, on system ⊗ mirror (system index most significant).
pub fn purify(rho: &HermitianOperator) -> Result<Vec<C64>> {
    let s = matrix_sqrt(rho)?;
    let d = rho.dim();
    let mut psi = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            psi[i * d + j] = s[(i, j)];
        }
    }
    Ok(psi)
}

/// Reduced operator on the first factor of a vector on C^d ⊗ C^m.
pub fn reduce_first(psi: &[C64], d: usize) -> HermitianOperator {
    let m = psi.len() / d;
    HermitianOperator::hermitize(ComplexMatrix::from_fn(d, d, |i, j| {
        (0..m).map(|k| psi[i * m + k] * psi[j * m + k].conj()).sum()
    }))
}

/// Complete `vecs` (orthonormal, in C^n) with standard-basis Gram–Schmidt until `count` vectors.
fn complete_orthonormal(mut vecs: Vec<Vec<C64>>, n: usize, count: usize) -> Vec<Vec<C64>> {
    let mut e = 0;
    while vecs.len() < count && e < n {
        let mut cand = vec![ZERO; n];
        cand[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for v in &vecs {
                let ov: C64 = v.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                for (c, a) in cand.iter_mut().zip(v) {
                    *c -= ov * a;
                }
            }
        }
        let nn = norm(&cand);
        if nn > 1e-6 {
            vecs.push(cand.iter().map(|z| z / nn).collect());
        }
        e += 1;
    }
    vecs
}

/// Purification of `target` in the same space as `psi` (system dim `d` first) that maximises the overlap;
/// the overlap ⟨φ|ψ⟩ is real and nonnegative and equals the fidelity of the reduced states.
pub fn uhlmann_partner(psi: &[C64], d: usize, target: &HermitianOperator) -> Result<Vec<C64>> {
    if target.dim() != d || psi.len() % d != 0 {
        return Err(Error::DimensionMismatch(
            "target does not act on the primary system of psi".into(),
        ));
    }
    let m = psi.len() / d;
    let support = target.support_basis(PSD_TOL);
    let rank = support.cols();
    if m < rank {
        return Err(Error::InvalidArgument(format!(
            "purifying dimension {m} is smaller than target rank {rank}"
        )));
    }
    let sqrt_t = matrix_sqrt(target)?;
    let psi_mat = ComplexMatrix::from_vec(d, m, psi.to_vec())?;
    let mmat = sqrt_t.matmul(&psi_mat);
    let gram = HermitianOperator::hermitize(mmat.matmul(&mmat.adjoint()));
    let e = gram.eigh();
    let scale = e.values.first().copied().unwrap_or(0.0).max(1e-300);
    let mut left: Vec<Vec<C64>> = Vec::new();
    let mut right: Vec<Vec<C64>> = Vec::new();
    let madj = mmat.adjoint();
    for k in 0..d {
        let sv2 = e.values[k];
        if sv2 <= 1e-24_f64.max(1e-22 * scale) {
            continue;
        }
        let u = e.vector(k);
        let mut v = madj.matvec(&u);
        let s = sv2.sqrt();
        for z in v.iter_mut() {
            *z /= s;
        }
        left.push(u);
        right.push(v);
    }
    // Complete the left vectors to cover supp(target); pair with fresh orthonormal right vectors.
    let mut extra_left: Vec<Vec<C64>> = Vec::new();
    if left.len() < rank {
        let mut residual = support.matmul(&support.adjoint());
        for u in &left {
            residual = &residual - &ComplexMatrix::outer(u, u);
        }
        let re = HermitianOperator::hermitize(residual).eigh();
        for k in 0..d {
            if extra_left.len() + left.len() >= rank {
                break;
            }
            if re.values[k] > 0.5 {
                extra_left.push(re.vector(k));
            }
        }
    }
    let base = right.len();
    let right = complete_orthonormal(right, m, base + extra_left.len());
    left.extend(extra_left);
    let mut w = ComplexMatrix::zeros(d, m);
    for (u, v) in left.iter().zip(&right) {
        w = &w + &ComplexMatrix::outer(u, v);
    }
    Ok(sqrt_t.matmul(&w).into_data())
}

/// Left polar decomposition K = U √(K†K), returning (U, √(K†K)). U is completed to a unitary.
pub fn polar_decomposition(k: &ComplexMatrix) -> Result<(ComplexMatrix, HermitianOperator)> {
    if !k.is_square() {
        return Err(Error::DimensionMismatch(
            "polar decomposition needs a square operator".into(),
        ));
    }
    let n = k.rows();
    let theta = HermitianOperator::hermitize(k.adjoint().matmul(k));
    let e = theta.eigh();
    let scale = e.values.first().copied().unwrap_or(0.0).max(1e-300);
    let mut right = Vec::new();
    let mut left = Vec::new();
    for idx in 0..n {
        let s2 = e.values[idx];
        if s2 <= 1e-26_f64.max(1e-24 * scale) {
            continue;
        }
        let v = e.vector(idx);
        let mut u = k.matvec(&v);
        let s = s2.sqrt();
        for z in u.iter_mut() {
            *z /= s;
        }
        right.push(v);
        left.push(u);
    }
    let r = right.len();
    let right = complete_orthonormal(right, n, n);
    let left = complete_orthonormal(left, n, n);
    debug_assert!(r <= n);
    let mut u = ComplexMatrix::zeros(n, n);
    for (a, b) in left.iter().zip(&right) {
        u = &u + &ComplexMatrix::outer(a, b);
    }
    let root = HermitianOperator::hermitize(e.reconstruct_with(|l| l.max(0.0).sqrt()));
    Ok((u, root))
}
