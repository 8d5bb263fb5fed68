mod common;

use common::{na_min_eigenvalue, rng, to_na};
use oneshot_core::instance::{fixtures, Instance};
use oneshot_core::linalg::{partial_trace, DensityOperator, HermitianOperator, SystemLayout};
use oneshot_core::objects::{post_measurement_cq, CQState, JointPOVM, KeptSystems};
use oneshot_core::protocols::*;
use oneshot_core::Error;
use rand::Rng;

fn fixture(name: &str) -> Instance {
    fixtures().into_iter().find(|(n, _)| *n == name).unwrap().1
}

fn rho_a(inst: &Instance) -> DensityOperator {
    DensityOperator::new(partial_trace(&inst.state, &inst.layout(), &["A"]).unwrap()).unwrap()
}

fn no_constant() -> CompressionConfig {
    CompressionConfig {
        log_const: Some(0.0),
        ..Default::default()
    }
}

/// Message rates two bits above the I_max rows; coins make up the remaining H_max slack.
fn generous_budget(inst: &Instance, eps: f64, cfg: &CompressionConfig) -> OneShotBudget {
    let t = compression_thresholds(&inst.povm, &rho_a(inst), eps, cfg).unwrap();
    let rx = t.i_max_x + t.log_const + 2.0;
    let ry = t.i_max_y + t.log_const + 2.0;
    OneShotBudget::new(
        eps,
        rx,
        ry,
        (t.h_max_x + 2.0 - rx).max(0.0),
        (t.h_max_y + 2.0 - ry).max(0.0),
    )
    .unwrap()
}

fn single_outcome_instance() -> Instance {
    let inst = fixture("qubit-cq");
    let povm = JointPOVM::new(vec!["*".into()], vec!["*".into()], vec![HermitianOperator::identity(2)]).unwrap();
    Instance::new(inst.dims, inst.state, povm).unwrap()
}

#[test]
fn size_from_bits_handles_integer_exponents() {
    assert_eq!(size_from_bits(0.0), 1);
    assert_eq!(size_from_bits(3.0), 8);
    assert_eq!(size_from_bits(3.0000000000001), 8);
    assert_eq!(size_from_bits(2.5), 6);
}

#[test]
fn budget_rejects_bad_inputs() {
    assert!(OneShotBudget::new(0.0, 1.0, 1.0, 0.0, 0.0).is_err());
    assert!(OneShotBudget::new(0.1, -1.0, 1.0, 0.0, 0.0).is_err());
    assert!(OneShotBudget::new(0.1, f64::NAN, 1.0, 0.0, 0.0).is_err());
}

#[test]
fn single_outcome_measurement_compresses_to_identity() {
    let inst = single_outcome_instance();
    let b = OneShotBudget::new(0.01, 0.0, 0.0, 0.0, 0.0).unwrap();
    let out = build_compressed_povm(&inst.povm, &rho_a(&inst), &b, 3, &CompressionConfig::default()).unwrap();
    let c = out.povm(0, 0).unwrap();
    assert_eq!(c.elements.len(), 1);
    assert!(c.elements[0].max_abs_diff(&HermitianOperator::identity(2)) < 1e-10);
    assert!(c.zero_element.trace_norm() < 1e-10);
    let sim = simulate_unassisted(&inst.povm, &inst.state, &inst.layout(), &b, 3, AdversaryScenario::Both, &CompressionConfig::default()).unwrap();
    assert!(sim.deviation < 1e-10);
    let cen = centralised_protocol(&inst.povm, &inst.state, &inst.layout(), &b, 3, &CentralisedConfig::default()).unwrap();
    for r in &cen.results {
        assert!(r.deviation < 1e-10, "{:?} {}", r.scenario, r.deviation);
    }
}

#[test]
fn infeasible_rates_are_reported() {
    let inst = fixture("qubit-cq");
    let b = OneShotBudget::new(0.01, 0.5, 0.5, 0.0, 0.0).unwrap();
    let err = build_compressed_povm(&inst.povm, &rho_a(&inst), &b, 0, &no_constant()).unwrap_err();
    assert!(matches!(err, Error::RateInfeasible(_)), "{err}");
}

#[test]
fn retry_budget_exhaustion_is_reported() {
    let inst = fixture("qubit-entangled");
    let sizes = CodebookSizes { k1: 16, l1: 2, k2: 16, l2: 2 };
    let err = build_with_sizes(&inst.povm, &rho_a(&inst), 0.01, sizes, 0, 3).unwrap_err();
    assert_eq!(err, Error::RetriesExhausted { retries: 3 });
}

#[test]
fn compressed_povms_pass_an_independent_check() {
    let eps: f64 = 0.01;
    let quarter = eps.powf(0.25);
    for name in ["qubit-cq", "qubit-entangled", "instrument-derived"] {
        let inst = fixture(name);
        let ra = rho_a(&inst);
        let b = generous_budget(&inst, eps, &no_constant());
        for seed in 0..3 {
            let out = build_compressed_povm(&inst.povm, &ra, &b, seed, &no_constant()).unwrap();
            assert!(out.nice.fraction_nice >= 1.0 - quarter);
            let support = to_na(out.support.matrix());
            for c in out.povms.iter().flatten() {
                let mut sum = to_na(c.zero_element.matrix());
                for g in &c.elements {
                    assert!(na_min_eigenvalue(g.matrix()) >= -1e-8, "{name}: γ not PSD");
                    sum += to_na(g.matrix());
                }
                assert!(na_min_eigenvalue(c.zero_element.matrix()) >= -1e-8);
                let defect = (sum - &support).map(|z| z.norm()).max();
                assert!(defect < 1e-8, "{name}: completeness defect {defect}");
                let w = (to_na(c.zero_element.matrix()) * to_na(ra.matrix())).trace().re;
                assert!((w - c.zero_weight).abs() < 1e-9);
                assert!(w <= 10.0 * quarter);
                assert!(c.normalization >= 1.0);
            }
        }
    }
}

#[test]
fn scenario_outputs_are_marginals_of_the_joint_output() {
    let inst = fixture("qubit-cq");
    let b = generous_budget(&inst, 0.01, &no_constant());
    let both = simulate_unassisted(&inst.povm, &inst.state, &inst.layout(), &b, 5, AdversaryScenario::Both, &no_constant()).unwrap();
    for s in [AdversaryScenario::XOnly, AdversaryScenario::YOnly] {
        let one = simulate_unassisted(&inst.povm, &inst.state, &inst.layout(), &b, 5, s, &no_constant()).unwrap();
        let m = scenario_marginal(&both.output, s).unwrap();
        assert_eq!(one.output.registers(), m.registers());
        assert!(oneshot_core::protocols::cq_trace_distance(&one.output, &m).unwrap() < 1e-12);
        assert!(one.deviation <= both.deviation + 1e-12);
    }
    assert!(both.deviation <= 10.0 * 0.01f64.powf(0.25));
}

#[test]
fn hash_family_is_two_universal() {
    let mut r = rng(11);
    let (n_in, n_out) = (6u32, 3u32);
    let draws = 20_000;
    let pairs: Vec<(u64, u64)> = (0..8).map(|_| loop {
        let a = r.gen_range(0..64u64);
        let b = r.gen_range(0..64u64);
        if a != b {
            break (a, b);
        }
    }).collect();
    let mut coll = vec![0usize; pairs.len()];
    let mut first_bucket = [0usize; 8];
    for _ in 0..draws {
        let h = HashScheme::draw(&mut r, n_in, n_out);
        for (c, &(a, b)) in coll.iter_mut().zip(&pairs) {
            if h.apply(a) == h.apply(b) {
                *c += 1;
            }
        }
        first_bucket[h.apply(pairs[0].0) as usize] += 1;
    }
    let target = draws as f64 / 8.0;
    let tol = 5.0 * (target * (1.0 - 1.0 / 8.0)).sqrt();
    for c in coll {
        assert!((c as f64 - target).abs() < tol, "collisions {c} vs {target}");
    }
    for c in first_bucket {
        assert!((c as f64 - target).abs() < tol, "bucket count {c} vs {target}");
    }
}

#[test]
fn identity_hash_gives_singleton_buckets() {
    let h = HashScheme::identity(4);
    let b = h.buckets(13);
    assert_eq!(b.len(), 13);
    assert!(b.values().all(|v| v.len() == 1));
}

#[test]
fn sequential_decoder_is_a_valid_instrument() {
    let mut r = rng(4);
    let tests: Vec<HermitianOperator> = (0..4)
        .map(|_| {
            let h = common::random_density(&mut r, 3);
            h.scale(1.0 / h.max_eigenvalue())
        })
        .collect();
    let dec = SequentialDecoder::new((0..4).collect(), tests).unwrap();
    let mut sum = nalgebra::DMatrix::<nalgebra::Complex<f64>>::zeros(3, 3);
    for k in &dec.branch_operators {
        let k = to_na(k);
        sum += k.adjoint() * k;
    }
    let defect = (sum - nalgebra::DMatrix::identity(3, 3)).map(|z| z.norm()).max();
    assert!(defect < 1e-9, "Σ K†K deviates by {defect}");
}

#[test]
fn sequential_decoder_separates_orthogonal_states() {
    let tests: Vec<HermitianOperator> = (0..3)
        .map(|i| {
            let mut p = vec![0.0; 3];
            p[i] = 1.0;
            HermitianOperator::diag(&p)
        })
        .collect();
    for (i, t) in tests.iter().enumerate() {
        let br = sequential_decode(t, &tests).unwrap();
        for (j, b) in br.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((b.trace_re() - expect).abs() < 1e-12);
        }
    }
}

fn cq_from(inst: &Instance) -> CQState {
    post_measurement_cq(&inst.povm, &inst.state, &inst.layout(), KeptSystems::Br).unwrap()
}

#[test]
fn cdc_single_symbol_source_needs_no_bits() {
    let inst = single_outcome_instance();
    let o = cdc_qsi(&cq_from(&inst), &["X"], 0.1, 0, &CdcConfig::default()).unwrap();
    assert_eq!(o.rate, 0);
    assert!(o.avg_error < 1e-12);
    assert!(o.output_distance < 1e-12);
}

#[test]
fn cdc_orthogonal_side_information_decodes_within_bound() {
    let inst = fixture("classical-commuting");
    let eps = 0.1;
    let o = cdc_qsi(&cq_from(&inst), &["X", "Y"], eps, 2, &CdcConfig::default()).unwrap();
    let bound = (2.0 * eps).sqrt() + eps;
    assert!((o.error_bound - bound).abs() < 1e-12);
    assert!(o.avg_error <= bound);
    let eps_prime = 2.0 * bound.sqrt() + 2.0 * eps;
    assert!((o.eps_prime - eps_prime).abs() < 1e-12);
    assert!(o.output_distance <= 2.0 * eps_prime);
    assert_eq!(o.hash_draws, 100);
}

#[test]
fn cdc_without_side_information_stays_within_bound() {
    let inst = fixture("trivial");
    let eps = 0.1;
    let cq = cq_from(&inst).marginal(&["X", "Y"], &["B"]).unwrap();
    let o = cdc_qsi(&cq, &["X"], eps, 9, &CdcConfig::default()).unwrap();
    // The only side information is the constant Y register, so I_H is D_H(p‖p) = −log2(1−ε).
    assert!((o.i_hyp + (1.0 - eps).log2()).abs() < 1e-9, "{}", o.i_hyp);
    let formula = (o.h_max - o.i_hyp + (1.0 / eps).log2()).ceil() as u32;
    assert_eq!(o.rate, formula.min(o.input_bits));
    assert!(o.avg_error <= (2.0 * eps).sqrt() + eps);
}

#[test]
fn cdc_is_reproducible() {
    let inst = fixture("qubit-cq");
    let cq = cq_from(&inst);
    let a = cdc_qsi(&cq, &["X"], 0.1, 5, &CdcConfig::default()).unwrap();
    let b = cdc_qsi(&cq, &["X"], 0.1, 5, &CdcConfig::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn composition_check_on_trivial_side_information() {
    // A qubit measured in the computational basis with a one-dimensional B.
    let inst = fixture("trivial");
    let eps = 0.01;
    let b = generous_budget(&inst, eps, &no_constant());
    let o = compose_with_side_information(&inst.povm, &inst.state, &inst.layout(), &b, 1, &no_constant(), &CdcConfig::default()).unwrap();
    assert!(o.composition_check >= -1.0, "check {}", o.composition_check);
    assert!(o.i_hyp_x.abs() < 1e-12);
    assert!(o.deviation >= o.compression_deviation);
}

#[test]
fn centralised_transcripts_agree_and_runs_repeat() {
    let inst = fixture("qubit-entangled");
    let eps = 0.01;
    let cfg = CentralisedConfig {
        compression: no_constant(),
        ..Default::default()
    };
    let b = generous_budget(&inst, eps, &cfg.compression);
    for seed in 0..3 {
        let o = centralised_protocol(&inst.povm, &inst.state, &inst.layout(), &b, seed, &cfg).unwrap();
        assert!(o.transcripts_identical);
        let t0 = &o.results[0].transcript;
        assert!(o.results.iter().all(|r| &r.transcript == t0));
        assert_eq!(o.results.len(), 3);
        for r in &o.results {
            assert!((0.0..=2.0 + 1e-12).contains(&r.deviation));
        }
        let again = centralised_protocol(&inst.povm, &inst.state, &inst.layout(), &b, seed, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&o).unwrap(), serde_json::to_string(&again).unwrap());
    }
}

fn region_cfg() -> RegionConfig {
    RegionConfig {
        log_const: Some(0.0),
        ..Default::default()
    }
}

fn same_constraints(a: &RegionPiece, b: &RegionPiece, tol: f64) -> bool {
    a.constraints.len() == b.constraints.len()
        && a.constraints.iter().all(|h| {
            b.constraint(h.coeffs)
                .map_or(false, |g| (g.rhs - h.rhs).abs() <= tol)
        })
}

#[test]
fn split_endpoints_reproduce_unsplit_corners() {
    let eps = 0.1;
    for name in ["qubit-cq", "qubit-entangled", "instrument-derived"] {
        let inst = fixture(name);
        let l = inst.layout();
        let r = one_shot_region(&inst.povm, &inst.state, &l, eps, &[0.0, 1.0], &region_cfg()).unwrap();
        let ux = unsplit_region(&inst.povm, &inst.state, &l, eps, SplitAxis::X, &region_cfg()).unwrap();
        let uy = unsplit_region(&inst.povm, &inst.state, &l, eps, SplitAxis::Y, &region_cfg()).unwrap();
        let piece = |axis, theta: f64| {
            r.pieces
                .iter()
                .find(|p| p.axis == Some(axis) && p.theta == Some(theta))
                .unwrap()
        };
        assert!(same_constraints(piece(SplitAxis::X, 0.0), &ux, 1e-6), "{name}");
        assert!(same_constraints(piece(SplitAxis::X, 1.0), &uy, 1e-6), "{name}");
        assert!(same_constraints(piece(SplitAxis::Y, 0.0), &uy, 1e-6), "{name}");
        assert!(same_constraints(piece(SplitAxis::Y, 1.0), &ux, 1e-6), "{name}");
    }
}

#[test]
fn regions_are_upward_closed() {
    let inst = fixture("qubit-cq");
    let r = one_shot_region(&inst.povm, &inst.state, &inst.layout(), 0.1, &[0.0, 0.5, 1.0], &region_cfg()).unwrap();
    let mut g = rng(8);
    for _ in 0..200 {
        let p: [f64; 4] = std::array::from_fn(|_| g.gen_range(0.0..2.0));
        if r.contains(p) {
            let q: [f64; 4] = std::array::from_fn(|i| p[i] + g.gen_range(0.0..0.5));
            assert!(r.contains(q));
        }
    }
    assert!(r.contains([5.0, 5.0, 5.0, 5.0]));
    assert!(!r.contains([0.0, 0.0, 0.0, 0.0]));
}

#[test]
fn default_constant_dominates_the_trivial_region() {
    let inst = fixture("trivial");
    let r = one_shot_region(&inst.povm, &inst.state, &inst.layout(), 0.1, &[0.0], &RegionConfig::default()).unwrap();
    let p = &r.pieces[0];
    // The message row exceeds the H_max row, which is then implied and pruned.
    assert_eq!(p.constraints.len(), 1);
    let c = p.constraint([1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(c.rhs > log_constant(0.1) - 0.5);
    let cheap = one_shot_region(&inst.povm, &inst.state, &inst.layout(), 0.1, &[0.0], &region_cfg()).unwrap();
    let q = &cheap.pieces[0];
    assert_eq!(q.constraints.len(), 2);
    let m = q.constraint([1.0, 0.0, 0.0, 0.0]).unwrap();
    let s = q.constraint([1.0, 0.0, 1.0, 0.0]).unwrap();
    assert!(m.rhs < s.rhs);
}

fn h(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// Entropy of a marginal of a joint table indexed [x][y][b][r].
fn h_marg(t: &[[[[f64; 2]; 2]; 2]; 3], keep: [bool; 4]) -> f64 {
    let mut m = std::collections::BTreeMap::<[usize; 4], f64>::new();
    for x in 0..3 {
        for y in 0..2 {
            for b in 0..2 {
                for r in 0..2 {
                    let idx = [x, y, b, r];
                    let key: [usize; 4] = std::array::from_fn(|i| if keep[i] { idx[i] } else { 0 });
                    *m.entry(key).or_default() += t[x][y][b][r];
                }
            }
        }
    }
    h(&m.values().copied().collect::<Vec<_>>())
}

#[test]
fn classical_iid_region_matches_shannon_values() {
    let p = [[0.30, 0.05], [0.10, 0.25], [0.05, 0.25]];
    let to_b = [[0.8, 0.2], [0.5, 0.5], [0.15, 0.85]];
    let to_r = [[0.9, 0.1], [0.2, 0.8]];
    let mut t = [[[[0.0; 2]; 2]; 2]; 3];
    for x in 0..3 {
        for y in 0..2 {
            for b in 0..2 {
                for r in 0..2 {
                    t[x][y][b][r] = p[x][y] * to_b[x][b] * to_r[y][r];
                }
            }
        }
    }
    let hm = |k: [bool; 4]| h_marg(&t, k);
    let (f, tr) = (false, true);
    let mi = |a: [bool; 4], b: [bool; 4]| {
        let ab: [bool; 4] = std::array::from_fn(|i| a[i] || b[i]);
        hm(a) + hm(b) - hm(ab)
    };
    let ix_br = mi([tr, f, f, f], [f, f, tr, tr]);
    let iy_br = mi([f, tr, f, f], [f, f, tr, tr]);
    let ixy_br = mi([tr, tr, f, f], [f, f, tr, tr]);
    let ix_b = mi([tr, f, f, f], [f, f, tr, f]);
    let iy_b = mi([f, tr, f, f], [f, f, tr, f]);
    let ix_y = mi([tr, f, f, f], [f, tr, f, f]);
    let expected = [
        ix_br - ix_b,
        iy_br - iy_b,
        ixy_br + ix_y - ix_b - iy_b,
        hm([tr, f, f, f]) - ix_b,
        hm([f, tr, f, f]) - iy_b,
    ];
    let inst = fixture("rate-split-showcase");
    let r = iid_region(&inst.povm, &inst.state, &inst.layout()).unwrap();
    let got: Vec<f64> = r.pieces[0].constraints.iter().map(|c| c.rhs).collect();
    assert_eq!(got.len(), 5);
    for (g, e) in got.iter().zip(expected) {
        assert!((g - e).abs() < 1e-9, "{g} vs {e}");
    }
}

#[test]
fn block_quantities_approach_iid_values() {
    for name in ["qubit-cq", "qubit-entangled", "rate-split-showcase"] {
        let inst = fixture(name);
        let rows = block_trend(&inst.povm, &inst.state, &inst.layout(), 4, 0.1).unwrap();
        for w in rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!((b.h_max_rate - b.entropy).abs() <= (a.h_max_rate - a.entropy).abs() + 1e-9, "{name}");
            assert!(
                (b.i_hyp_rate - b.mutual_information).abs()
                    <= (a.i_hyp_rate - a.mutual_information).abs() + 1e-9,
                "{name}"
            );
        }
    }
}

#[test]
fn fixtures_round_trip_through_json() {
    for (name, inst) in fixtures() {
        let text = inst.to_json();
        let back = Instance::from_canonical_json(&text).unwrap();
        assert_eq!(back.to_json(), text, "{name}");
        assert_eq!(back, inst, "{name}");
    }
}

#[test]
fn malformed_instances_are_rejected() {
    let text = fixture("qubit-cq").to_json();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["state"][0][0] = (v["state"][0][0].as_f64().unwrap() + 0.1).into();
    assert!(matches!(Instance::from_json(&v.to_string()), Err(Error::InvalidInstance(_))));
    let bad_key = text.replacen("\"1|0\"", "\"0|1\"", 1);
    assert!(matches!(Instance::from_json(&bad_key), Err(Error::InvalidInstance(_))));
    assert!(matches!(Instance::from_json("{}"), Err(Error::InvalidInstance(_))));
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["dims"]["A"] = 3.into();
    assert!(Instance::from_json(&v.to_string()).is_err());
}

#[test]
fn apply_effect_matches_partial_trace() {
    let inst = fixture("qubit-entangled");
    let l: SystemLayout = inst.layout();
    let e = inst.povm.element(0, 1);
    let out = apply_effect(e, &inst.state, &l).unwrap();
    let mut g = HermitianOperator::zeros(8);
    let ea = oneshot_core::objects::embed(e.matrix(), &l, "A").unwrap();
    g.add_scaled(&HermitianOperator::hermitize(ea.matmul(inst.state.matrix())), 1.0);
    let expect = partial_trace(&g, &l, &["B", "R"]).unwrap();
    assert!(out.max_abs_diff(&expect) < 1e-12);
}
