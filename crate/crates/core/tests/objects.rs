mod common;

use common::*;
use oneshot_core::linalg::{
    partial_trace, tensor, ComplexMatrix, DensityOperator, HermitianOperator, SystemLayout, C64,
};
use oneshot_core::objects::*;
use proptest::prelude::*;
use rand::Rng;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Random joint POVM with nx·ny outcomes: G_k = S^{-1/2} W_k S^{-1/2} for random PSD W_k.
fn random_povm(r: &mut impl Rng, d: usize, nx: usize, ny: usize) -> JointPOVM {
    let ws: Vec<HermitianOperator> = (0..nx * ny)
        .map(|_| random_density(r, d).into_op())
        .collect();
    let mut s = HermitianOperator::zeros(d);
    for w in &ws {
        s.add_scaled(w, 1.0);
    }
    let root = oneshot_core::linalg::pseudo_inverse_sqrt(&s).unwrap();
    let els = ws.iter().map(|w| w.congruence(root.matrix())).collect();
    JointPOVM::new(names(nx), names(ny), els).unwrap()
}

fn direct_sum_check(povm: &JointPOVM) -> f64 {
    let mut s = HermitianOperator::zeros(povm.dim());
    for e in povm.elements() {
        s.add_scaled(e, 1.0);
    }
    s.max_abs_diff(&ComplexMatrix::identity(povm.dim()))
}

#[test]
fn unitary_instrument_gives_identity_element() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = ComplexMatrix::from_fn(2, 2, |i, j| {
        C64::new(if i == 1 && j == 1 { -h } else { h }, 0.0)
    });
    let povm = instrument_to_povm(&Instrument::new(names(1), names(1), vec![u]).unwrap()).unwrap();
    assert_eq!(povm.elements().len(), 1);
    assert!(povm.element(0, 0).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
}

#[test]
fn projective_instrument_gives_projectors() {
    let k0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
    let k1 = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
    let povm = instrument_to_povm(
        &Instrument::new(names(2), names(1), vec![k0.clone(), k1.clone()]).unwrap(),
    )
    .unwrap();
    assert_eq!(povm.alphabet_x(), &names(2)[..]);
    assert!(povm.element(0, 0).max_abs_diff(&k0) < 1e-15);
    assert!(povm.element(1, 0).max_abs_diff(&k1) < 1e-15);
}

#[test]
fn deficient_instrument_is_completed_by_bottom_element() {
    let mut r = rng(5);
    for _ in 0..20 {
        let k: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(&mut r, 2, 2)).collect();
        let mut sum = HermitianOperator::zeros(2);
        for m in &k {
            sum.add_scaled(&HermitianOperator::hermitize(m.adjoint().matmul(m)), 1.0);
        }
        let scale = 0.9 / sum.max_eigenvalue().sqrt();
        let k: Vec<ComplexMatrix> = k.iter().map(|m| m.scale(scale)).collect();
        let povm = instrument_to_povm(&Instrument::new(names(2), names(1), k).unwrap()).unwrap();
        assert_eq!(povm.alphabet_x().last().unwrap(), BOTTOM);
        assert_eq!(povm.alphabet_y().last().unwrap(), BOTTOM);
        assert!(direct_sum_check(&povm) < 1e-8);
    }
}

#[test]
fn overfull_instrument_is_rejected() {
    let k = ComplexMatrix::identity(2).scale(1.1);
    assert!(instrument_to_povm(&Instrument::new(names(1), names(1), vec![k]).unwrap()).is_err());
}

#[test]
fn incomplete_or_negative_povms_are_rejected() {
    let half = HermitianOperator::identity(2).scale(0.5);
    assert!(JointPOVM::new(names(1), names(1), vec![half.clone()]).is_err());
    let neg = HermitianOperator::diag(&[1.5, 1.0]);
    let comp = HermitianOperator::diag(&[-0.5, 0.0]);
    assert!(JointPOVM::new(names(2), names(1), vec![neg, comp]).is_err());
}

#[test]
fn trivial_measurement_gives_point_mass() {
    let povm = JointPOVM::single_axis(names(1), vec![HermitianOperator::identity(3)]).unwrap();
    let rho = random_density(&mut rng(1), 3);
    let d = induced_distribution(&povm, &rho).unwrap();
    assert_eq!(d.probs(), &[1.0]);
}

#[test]
fn basis_measurement_reads_diagonal() {
    let povm = JointPOVM::single_axis(
        names(2),
        vec![
            HermitianOperator::diag(&[1.0, 0.0]),
            HermitianOperator::diag(&[0.0, 1.0]),
        ],
    )
    .unwrap();
    let d = induced_distribution(&povm, &DensityOperator::diag(&[0.3, 0.7]).unwrap()).unwrap();
    assert!((d.probs()[0] - 0.3).abs() < 1e-15 && (d.probs()[1] - 0.7).abs() < 1e-15);
    assert_eq!(d.alphabet(), &["0|0".to_string(), "1|0".to_string()]);
}

#[test]
fn single_outcome_post_measurement_is_the_state() {
    let mut r = rng(2);
    let rho = random_density(&mut r, 8);
    let layout = SystemLayout::new([("A", 2), ("B", 2), ("R", 2)]).unwrap();
    let povm = JointPOVM::single_axis(names(1), vec![HermitianOperator::identity(2)]).unwrap();
    let cq = post_measurement_cq(&povm, &rho, &layout, KeptSystems::Abr).unwrap();
    assert_eq!(cq.len(), 1);
    assert!(cq.unnormalized(0).max_abs_diff(rho.op()) < 1e-12);
}

#[test]
fn basis_measurement_on_diagonal_state_gives_projector_blocks() {
    let rho = DensityOperator::diag(&[0.2, 0.8]).unwrap();
    let layout = SystemLayout::new([("A", 2)]).unwrap();
    let povm = JointPOVM::single_axis(
        names(2),
        vec![
            HermitianOperator::diag(&[1.0, 0.0]),
            HermitianOperator::diag(&[0.0, 1.0]),
        ],
    )
    .unwrap();
    let cq = post_measurement_cq(&povm, &rho, &layout, KeptSystems::Abr).unwrap();
    assert!(
        cq.unnormalized(0)
            .max_abs_diff(&HermitianOperator::diag(&[0.2, 0.0]))
            < 1e-15
    );
    assert!(
        cq.unnormalized(1)
            .max_abs_diff(&HermitianOperator::diag(&[0.0, 0.8]))
            < 1e-15
    );
}

#[test]
fn post_measurement_br_equals_partial_trace_of_abr() {
    let mut r = rng(3);
    let rho = random_density(&mut r, 8);
    let layout = SystemLayout::new([("B", 2), ("A", 2), ("R", 2)]).unwrap();
    let povm = random_povm(&mut r, 2, 2, 2);
    let abr = post_measurement_cq(&povm, &rho, &layout, KeptSystems::Abr).unwrap();
    let br = post_measurement_cq(&povm, &rho, &layout, KeptSystems::Br).unwrap();
    for i in 0..abr.len() {
        let reduced = partial_trace(&abr.unnormalized(i), &layout, &["B", "R"]).unwrap();
        assert!(reduced.max_abs_diff(&br.unnormalized(i)) < 1e-12);
    }
}

#[test]
fn marginal_orders_labels_and_sums_weights() {
    let blocks = vec![
        HermitianOperator::diag(&[1.0, 0.0]),
        HermitianOperator::diag(&[0.0, 1.0]),
        HermitianOperator::diag(&[0.5, 0.5]),
    ];
    let cq = CQState::new(
        vec!["X".into(), "Y".into()],
        vec![names(2), names(2)],
        vec![vec![1, 0], vec![0, 1], vec![1, 1]],
        vec![0.2, 0.3, 0.5],
        blocks,
        SystemLayout::new([("B", 2)]).unwrap(),
    )
    .unwrap();
    let mx = cq.marginal(&["X"], &["B"]).unwrap();
    assert_eq!(mx.labels(), &[vec![0], vec![1]]);
    assert!((mx.weight(1) - 0.7).abs() < 1e-15);
    let none = cq.marginal(&["Y"], &[]).unwrap();
    assert_eq!(none.quantum_dim(), 1);
    assert!((none.weight(1) - 0.8).abs() < 1e-15);
    assert_eq!(cq.full_distribution().probs(), &[0.0, 0.3, 0.2, 0.5]);
    assert_eq!(cq.symbol(0), "1|0");
}

#[test]
fn dense_form_has_unit_trace_and_block_structure() {
    let mut r = rng(8);
    let povm = random_povm(&mut r, 2, 2, 3);
    let rho = random_density(&mut r, 4);
    let layout = SystemLayout::new([("A", 2), ("B", 2)]).unwrap();
    let cq = post_measurement_cq(&povm, &rho, &layout, KeptSystems::Br).unwrap();
    let dense = cq.to_density();
    assert!((dense.trace_re() - 1.0).abs() < 1e-10);
    let b = partial_trace(&dense, &cq.dense_layout(), &["B"]).unwrap();
    let direct = partial_trace(rho.op(), &layout, &["B"]).unwrap();
    assert!(b.max_abs_diff(&direct) < 1e-10);
    let _ = tensor(&b, &b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_povms_are_complete(seed in 0u64..10_000, d in 1usize..4, nx in 1usize..4, ny in 1usize..3) {
        let povm = random_povm(&mut rng(seed), d, nx, ny);
        prop_assert!(direct_sum_check(&povm) < 1e-8);
        prop_assert!(povm.elements().iter().all(|e| e.min_eigenvalue() > -1e-10));
    }

    #[test]
    fn marginal_measurement_matches_marginal_distribution(seed in 0u64..10_000, nx in 1usize..4, ny in 1usize..4) {
        let mut r = rng(seed);
        let povm = random_povm(&mut r, 3, nx, ny);
        let rho = random_density(&mut r, 3);
        let joint = induced_distribution(&povm, &rho).unwrap();
        let mx = induced_distribution(&povm.x_only(), &rho).unwrap();
        for ix in 0..nx {
            let s: f64 = (0..ny).map(|iy| joint.probs()[ix * ny + iy]).sum();
            prop_assert!((s - mx.probs()[ix]).abs() < 1e-12);
        }
        let direct: Vec<f64> = povm.elements().iter().map(|e| e.inner(&rho)).collect();
        for (a, b) in joint.probs().iter().zip(&direct) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn post_measurement_weights_reproduce_distribution(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let povm = random_povm(&mut r, 2, 2, 2);
        let rho = random_density(&mut r, 8);
        let layout = SystemLayout::new([("A", 2), ("B", 2), ("R", 2)]).unwrap();
        let cq = post_measurement_cq(&povm, &rho, &layout, KeptSystems::Br).unwrap();
        let ra = DensityOperator::normalized(&partial_trace(rho.op(), &layout, &["A"]).unwrap()).unwrap();
        let p = induced_distribution(&povm, &ra).unwrap();
        let full = cq.full_distribution();
        for (a, b) in full.probs().iter().zip(p.probs()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!((cq.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
