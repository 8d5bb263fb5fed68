use crate::error::{Error, Result};
use crate::linalg::{
    partial_trace, permute_systems, tensor_all, trace_norm_distance, HermitianOperator,
    SystemLayout,
};

pub const MAX_CONVEX_SPLIT_DIM: usize = 4096;

#[derive(Clone, Debug)]
pub struct ConvexSplit {
    pub state: HermitianOperator,
    /// Factors A1…AK, B1…BL, R.
    pub layout: SystemLayout,
}

fn copies(prefix: &str, n: usize, d: usize) -> Vec<(String, usize)> {
    (1..=n).map(|i| (format!("{prefix}{i}"), d)).collect()
}

/// τ = (1/KL) Σ_{k,ℓ} ρ^{A_k B_ℓ R} ⊗ ρ_A^{⊗ other A copies} ⊗ ρ_B^{⊗ other B copies}.
pub fn convex_split_state(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    k: usize,
    l: usize,
) -> Result<ConvexSplit> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidArgument(
            "convex split needs at least one copy of each system".into(),
        ));
    }
    let (da, db, dr) = (
        layout.factor_dim("A")?,
        layout.factor_dim("B")?,
        layout.factor_dim("R")?,
    );
    if layout.factors().len() != 3 {
        return Err(Error::InvalidArgument(
            "convex split expects exactly the factors A, B, R".into(),
        ));
    }
    let total = (da as u128).pow(k as u32) * (db as u128).pow(l as u32) * dr as u128;
    if total > MAX_CONVEX_SPLIT_DIM as u128 {
        return Err(Error::InvalidArgument(format!(
            "convex split dimension {total} exceeds {MAX_CONVEX_SPLIT_DIM}"
        )));
    }
    let ordered = to_abr(rho, layout)?;
    let abr = SystemLayout::new([("A", da), ("B", db), ("R", dr)])?;
    let ra = partial_trace(&ordered, &abr, &["A"])?;
    let rb = partial_trace(&ordered, &abr, &["B"])?;
    let mut factors = copies("A", k, da);
    factors.extend(copies("B", l, db));
    factors.push(("R".into(), dr));
    let out_layout = SystemLayout::new(factors)?;
    let n = out_layout.dim();
    let mut acc = HermitianOperator::zeros(n);
    // Base ordering of each term: A_k, B_ℓ, R, then the remaining A copies, then the remaining B copies.
    let mut parts: Vec<&HermitianOperator> = vec![&ordered];
    parts.extend(std::iter::repeat(&ra).take(k - 1));
    parts.extend(std::iter::repeat(&rb).take(l - 1));
    let base = tensor_all(&parts);
    let mut base_dims = vec![da, db, dr];
    base_dims.extend(std::iter::repeat(da).take(k - 1));
    base_dims.extend(std::iter::repeat(db).take(l - 1));
    for kk in 0..k {
        for ll in 0..l {
            // perm[out] = position in the base ordering.
            let mut perm = Vec::with_capacity(k + l + 1);
            let mut other_a = 3;
            for a in 0..k {
                if a == kk {
                    perm.push(0);
                } else {
                    perm.push(other_a);
                    other_a += 1;
                }
            }
            let mut other_b = 3 + k - 1;
            for b in 0..l {
                if b == ll {
                    perm.push(1);
                } else {
                    perm.push(other_b);
                    other_b += 1;
                }
            }
            perm.push(2);
            acc.add_scaled(&permute_systems(&base, &base_dims, &perm)?, 1.0);
        }
    }
    Ok(ConvexSplit {
        state: acc.scale(1.0 / (k * l) as f64),
        layout: out_layout,
    })
}

fn to_abr(rho: &HermitianOperator, layout: &SystemLayout) -> Result<HermitianOperator> {
    let perm = vec![
        layout.position("A")?,
        layout.position("B")?,
        layout.position("R")?,
    ];
    permute_systems(rho, &layout.dims(), &perm)
}

/// Trace distance between τ and ρ_A^{⊗K} ⊗ ρ_B^{⊗L} ⊗ ρ_R.
pub fn convex_split_distance(
    rho: &HermitianOperator,
    layout: &SystemLayout,
    k: usize,
    l: usize,
) -> Result<f64> {
    let split = convex_split_state(rho, layout, k, l)?;
    let ra = partial_trace(rho, layout, &["A"])?;
    let rb = partial_trace(rho, layout, &["B"])?;
    let rr = partial_trace(rho, layout, &["R"])?;
    let mut parts: Vec<&HermitianOperator> = std::iter::repeat(&ra).take(k).collect();
    parts.extend(std::iter::repeat(&rb).take(l));
    parts.push(&rr);
    trace_norm_distance(&split.state, &tensor_all(&parts))
}
