#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use oneshot_core::linalg::{ComplexMatrix, DensityOperator, HermitianOperator, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianOperator {
    let g = gaussian_matrix(rng, n, n);
    HermitianOperator::hermitize(&g + &g.adjoint())
}

pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityOperator {
    random_density_rank(rng, n, n)
}

pub fn random_density_rank(rng: &mut impl Rng, n: usize, rank: usize) -> DensityOperator {
    let g = gaussian_matrix(rng, n, rank);
    let m = HermitianOperator::hermitize(g.matmul(&g.adjoint()));
    DensityOperator::normalized(&m).unwrap()
}

pub fn random_pure(rng: &mut impl Rng, n: usize) -> DensityOperator {
    random_density_rank(rng, n, 1)
}

pub fn random_probs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

pub fn to_na(m: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let z = m[(i, j)];
        Complex::new(z.re, z.im)
    })
}

/// Eigenvalues from nalgebra's Hermitian solver, sorted descending.
pub fn na_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let e = nalgebra::SymmetricEigen::new(to_na(m));
    let mut v: Vec<f64> = e.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn na_min_eigenvalue(m: &ComplexMatrix) -> f64 {
    *na_eigenvalues(m).last().unwrap()
}

pub fn na_trace_norm(m: &ComplexMatrix) -> f64 {
    na_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// Matrix square root through nalgebra's solver.
pub fn na_sqrt(m: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    let e = nalgebra::SymmetricEigen::new(to_na(m));
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex::new(l.max(0.0).sqrt(), 0.0)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// Fidelity ‖√a √b‖₁ via nalgebra singular values.
pub fn na_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let p = na_sqrt(a) * na_sqrt(b);
    p.singular_values().iter().sum()
}
