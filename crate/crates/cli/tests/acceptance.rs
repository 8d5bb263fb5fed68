//! Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use oneshot_cli::{run_with_threads, RunConfig};
use oneshot_core::covering::{
    convex_split_distance, covering_error, extract_good_set, extract_good_set_transformed,
    CoveringInstance, GoodSetCertificate,
};
use oneshot_core::entropy::{d_hyp, d_max_smooth, h_max_smooth, i_max_smooth_cq, i_max_tilde_cq, SmoothingConfig};
use oneshot_core::instance::{fixtures, Instance};
use oneshot_core::linalg::{partial_trace, tensor_all, ComplexMatrix, DensityOperator, HermitianOperator, SystemLayout, C64};
use oneshot_core::objects::{post_measurement_cq, CQState, Distribution, KeptSystems};
use oneshot_core::protocols::{
    block_trend, cdc_qsi, centralised_protocol, iid_region, one_shot_region, compression_thresholds,
    unsplit_region, CdcConfig, CentralisedConfig, CompressionConfig, OneShotBudget, RegionConfig,
    RegionPiece, SplitAxis,
};

type Verdict = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_density(r: &mut impl Rng, n: usize) -> HermitianOperator {
    let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
    let m = HermitianOperator::hermitize(g.matmul(&g.adjoint()));
    DensityOperator::normalized(&m).unwrap().into_op()
}

fn random_probs(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -r.gen::<f64>().max(1e-12).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn to_na(m: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let z = m[(i, j)];
        Complex::new(z.re, z.im)
    })
}

fn na_eigenvalues(m: DMatrix<Complex<f64>>) -> Vec<f64> {
    SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
}

fn fixture(name: &str) -> Instance {
    fixtures().into_iter().find(|(n, _)| *n == name).unwrap().1
}

fn rho_a(inst: &Instance) -> DensityOperator {
    DensityOperator::new(partial_trace(&inst.state, &inst.layout(), &["A"]).unwrap()).unwrap()
}

fn lp_h_max(p: &[f64], eps: f64) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = p.iter().map(|_| lp.add_var(1.0, (0.0, 1.0))).collect();
    let row: Vec<_> = vars.iter().zip(p).map(|(&v, &q)| (v, q)).collect();
    lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 1.0 - eps);
    lp.solve().unwrap().objective().log2()
}

fn lp_d_hyp(p: &[f64], s: &[f64], eps: f64) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = s.iter().map(|&c| lp.add_var(c, (0.0, 1.0))).collect();
    let row: Vec<_> = vars.iter().zip(p).map(|(&v, &q)| (v, q)).collect();
    lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 1.0 - eps);
    -lp.solve().unwrap().objective().log2()
}

fn criterion_1() -> Verdict {
    let mut r = rng(101);
    let mut worst_h: f64 = 0.0;
    for i in 0..200 {
        let n = r.gen_range(1..=12);
        let p = random_probs(&mut r, n);
        let eps = [0.0, 0.05, 0.1][i % 3];
        let got = h_max_smooth(&Distribution::from_probs(p.clone()).unwrap(), eps).unwrap().value;
        worst_h = worst_h.max((got - lp_h_max(&p, eps)).abs());
    }
    let mut worst_d: f64 = 0.0;
    for _ in 0..200 {
        let n = r.gen_range(1..=10);
        let p = random_probs(&mut r, n);
        let s = random_probs(&mut r, n);
        let eps = r.gen_range(0.01..0.9);
        let got = d_hyp(&HermitianOperator::diag(&p), &HermitianOperator::diag(&s), eps).unwrap();
        worst_d = worst_d.max((got - lp_d_hyp(&p, &s, eps)).abs());
    }
    let detail = format!("max |H_max - LP| = {worst_h:.2e}, max |D_H - LP| = {worst_d:.2e}");
    if worst_h < 1e-9 && worst_d < 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Largest Σ√(p q) over q ≤ cap with Σ q ≤ 1.
fn capped_fidelity(p: &[f64], cap: &[f64]) -> f64 {
    let fid = |q: &[f64]| p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>();
    if cap.iter().sum::<f64>() <= 1.0 {
        return fid(cap);
    }
    let q_at = |t: f64| -> Vec<f64> { p.iter().zip(cap).map(|(&a, &c)| c.min(t * a)).collect() };
    let (mut lo, mut hi) = (0.0, 1.0);
    while q_at(hi).iter().sum::<f64>() < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_at(mid).iter().sum::<f64>() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    fid(&q_at(lo))
}

/// Classical smooth D_max: smallest λ with some q ≤ 2^λ s, Σ q ≤ 1, within purified distance ε of p.
fn classical_d_max_smooth(p: &[f64], s: &[f64], eps: f64) -> f64 {
    let need = (1.0 - eps * eps).sqrt();
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let cap: Vec<f64> = s.iter().map(|x| f64::exp2(mid) * x).collect();
        if capped_fidelity(p, &cap) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn qubit_cq(weights: &[f64], blocks: &[HermitianOperator]) -> CQState {
    let alphabet: Vec<String> = (0..weights.len()).map(|i| i.to_string()).collect();
    CQState::new(
        vec!["X".into()],
        vec![alphabet],
        (0..weights.len()).map(|i| vec![i]).collect(),
        weights.to_vec(),
        blocks.to_vec(),
        SystemLayout::new([("B", blocks[0].dim())]).unwrap(),
    )
    .unwrap()
}

fn criterion_2() -> Verdict {
    let cfg = SmoothingConfig::default();
    let mut r = rng(202);
    let mut worst_d: f64 = 0.0;
    for _ in 0..10 {
        let n = r.gen_range(2..=6);
        let p = random_probs(&mut r, n);
        let s = random_probs(&mut r, n);
        let eps = r.gen_range(0.02..0.3);
        let got = d_max_smooth(&HermitianOperator::diag(&p), &HermitianOperator::diag(&s), eps, &cfg).unwrap().value;
        worst_d = worst_d.max((got - classical_d_max_smooth(&p, &s, eps)).abs());
    }
    let mut worst_i: f64 = 0.0;
    for _ in 0..10 {
        let nx = r.gen_range(2..=3);
        let nb = r.gen_range(2..=2);
        let joint = random_probs(&mut r, nx * nb);
        let weights: Vec<f64> = (0..nx).map(|x| joint[x * nb..(x + 1) * nb].iter().sum()).collect();
        let blocks: Vec<HermitianOperator> = (0..nx)
            .map(|x| {
                let row: Vec<f64> = joint[x * nb..(x + 1) * nb].iter().map(|v| v / weights[x]).collect();
                HermitianOperator::diag(&row)
            })
            .collect();
        let eps = r.gen_range(0.02..0.3);
        let got = i_max_smooth_cq(&qubit_cq(&weights, &blocks), &["X"], eps, &cfg).unwrap().value;
        let pb: Vec<f64> = (0..nb).map(|b| (0..nx).map(|x| joint[x * nb + b]).sum()).collect();
        let prod: Vec<f64> = (0..nx * nb).map(|i| weights[i / nb] * pb[i % nb]).collect();
        worst_i = worst_i.max((got - classical_d_max_smooth(&joint, &prod, eps)).abs());
    }
    let (eps, gamma) = (0.2, 0.1);
    let slack = (3.0 / (gamma * gamma) as f64).log2();
    let mut min_margin = f64::INFINITY;
    for _ in 0..50 {
        let w = random_probs(&mut r, 2);
        let blocks = [random_density(&mut r, 2), random_density(&mut r, 2)];
        let cq = qubit_cq(&w, &blocks);
        let tilde = i_max_tilde_cq(&cq, &["X"], eps, &cfg).unwrap().value;
        let plain = i_max_smooth_cq(&cq, &["X"], eps - gamma, &cfg).unwrap().value;
        min_margin = min_margin.min(plain + slack - tilde);
    }
    let detail = format!(
        "max D_max gap {worst_d:.1e}, max I_max gap {worst_i:.1e}, min cross-check margin {min_margin:.3} bits"
    );
    if worst_d < 1e-3 && worst_i < 1e-3 && min_margin >= -1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn joint_xy(p: &[f64], blocks: &[HermitianOperator]) -> CQState {
    let bits = vec!["0".to_string(), "1".to_string()];
    CQState::new(
        vec!["X".into(), "Y".into()],
        vec![bits.clone(), bits],
        vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        p.to_vec(),
        blocks.to_vec(),
        SystemLayout::new([("E", 2)]).unwrap(),
    )
    .unwrap()
}

fn criterion_3() -> Verdict {
    let eps: f64 = 0.04;
    let trials = 400;
    let envelope = 6.0 * eps.sqrt();
    let cfg = SmoothingConfig::default();
    let mut r = rng(303);
    let mut notes = Vec::new();
    let mut ok = true;
    for i in 0..5u64 {
        let q = r.gen_range(0.75..0.95);
        let p = [q / 2.0, (1.0 - q) / 2.0, (1.0 - q) / 2.0, q / 2.0];
        let blocks: Vec<HermitianOperator> = (0..4).map(|_| random_density(&mut r, 2)).collect();
        let cq = joint_xy(&p, &blocks);
        let ix = i_max_smooth_cq(&cq.marginal(&["X"], &["E"]).unwrap(), &["X"], eps, &cfg).unwrap().value;
        let iy = i_max_smooth_cq(&cq, &["Y"], eps, &cfg).unwrap().value;
        let (ka, lb) = (ix.max(0.0).ceil() as u32 + 2, iy.max(0.0).ceil() as u32 + 2);
        let inst = CoveringInstance::from_cq(&cq, "X", "Y").unwrap();
        let mut grid = vec![vec![(0.0, 0.0); lb as usize + 1]; ka as usize + 1];
        for a in 0..=ka {
            for b in 0..=lb {
                let e = covering_error(&inst, 1 << a, 1 << b, trials, 1000 + i).unwrap();
                grid[a as usize][b as usize] = (e.mean, e.stderr);
            }
        }
        let mut violations = 0;
        let noisy_le = |x: (f64, f64), y: (f64, f64)| x.0 <= y.0 + 3.0 * (x.1.hypot(y.1)) + 1e-12;
        for a in 0..=ka as usize {
            for b in 0..=lb as usize {
                if a > 0 && !noisy_le(grid[a][b], grid[a - 1][b]) {
                    violations += 1;
                }
                if b > 0 && !noisy_le(grid[a][b], grid[a][b - 1]) {
                    violations += 1;
                }
            }
        }
        let at_rates = grid[ka as usize][lb as usize].0;
        let start = grid[0][0].0;
        ok &= violations == 0 && at_rates < envelope && at_rates < start;
        notes.push(format!("#{i}: ({ka},{lb}) err {at_rates:.3} from {start:.3}, {violations} rises"));
    }
    let detail = format!("envelope {envelope:.2}; {}", notes.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Verdict {
    let lay = SystemLayout::new([("A", 2), ("B", 2), ("R", 2)]).unwrap();
    let mut r = rng(404);
    let mut shrunk = 0;
    for _ in 0..20 {
        let rho = random_density(&mut r, 8);
        let d11 = convex_split_distance(&rho, &lay, 1, 1).unwrap();
        let d22 = convex_split_distance(&rho, &lay, 2, 2).unwrap();
        if d22 < d11 {
            shrunk += 1;
        }
    }
    let mut worst_product: f64 = 0.0;
    for _ in 0..5 {
        let parts: Vec<HermitianOperator> = (0..3).map(|_| random_density(&mut r, 2)).collect();
        let rho = tensor_all(&[&parts[0], &parts[1], &parts[2]]);
        for (k, l) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            worst_product = worst_product.max(convex_split_distance(&rho, &lay, k, l).unwrap());
        }
    }
    let detail = format!("{shrunk}/20 shrink from (1,1) to (2,2); product inputs max distance {worst_product:.1e}");
    if shrunk == 20 && worst_product < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Independent check of a certificate: operator inequality and trace-norm closeness of primed states.
fn certificate_holds(c: &GoodSetCertificate, parts: &[HermitianOperator], target: &HermitianOperator, eps: f64) -> bool {
    let q = eps.powf(0.25);
    let d = target.dim();
    let mut sum = DMatrix::<Complex<f64>>::zeros(d, d);
    for (g, rp) in c.good.iter().zip(&c.primed) {
        let tn: f64 = na_eigenvalues(to_na(rp.matrix()) - to_na(parts[*g].matrix())).iter().map(|x| x.abs()).sum();
        if tn > 2.0 * q + 1e-9 {
            return false;
        }
        sum += to_na(rp.matrix()) * Complex::new(c.weights[*g], 0.0);
    }
    let gap = to_na(target.matrix()) * Complex::new(c.bound_factor, 0.0) - sum;
    na_eigenvalues(gap).iter().all(|&e| e >= -1e-8)
}

fn perturbed(r: &mut impl Rng, avg: &HermitianOperator, eps: f64) -> HermitianOperator {
    let omega = random_density(r, avg.dim());
    avg.scale(1.0 - 0.4 * eps).add(&omega.scale(0.4 * eps))
}

fn criterion_5() -> Verdict {
    let eps: f64 = 0.05;
    let floor = 1.0 - 10.0 * eps.powf(0.25);
    let mut r = rng(505);
    let (mut passed, mut min_good) = (0, f64::INFINITY);
    for call in 0..100 {
        let n = r.gen_range(2..5);
        let d = r.gen_range(2..4);
        let parts: Vec<HermitianOperator> = (0..n).map(|_| random_density(&mut r, d)).collect();
        let w = random_probs(&mut r, n);
        let (c, check_parts, check_eps) = if call % 2 == 0 {
            let mut avg = HermitianOperator::zeros(d);
            for (p, x) in parts.iter().zip(&w) {
                avg.add_scaled(p, *x);
            }
            let target = perturbed(&mut r, &avg, eps);
            let c = extract_good_set(&parts, &w, &target, eps).unwrap();
            (c, parts.clone(), (eps, target))
        } else {
            let raw: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..1.5)).collect();
            let norm: f64 = raw.iter().zip(&w).map(|(a, b)| a * b).sum();
            let sig: Vec<HermitianOperator> = parts.iter().zip(&raw).map(|(p, c)| p.scale(c / norm)).collect();
            let mut avg = HermitianOperator::zeros(d);
            for (s, x) in sig.iter().zip(&w) {
                avg.add_scaled(s, *x);
            }
            let target = perturbed(&mut r, &avg, eps);
            let c = extract_good_set_transformed(&sig, &w, &target, eps).unwrap();
            let normalized: Vec<HermitianOperator> = sig.iter().map(|s| s.scale(1.0 / s.trace_re())).collect();
            (c, normalized, (2.0 * eps, target))
        };
        min_good = min_good.min(c.prob_good);
        if certificate_holds(&c, &check_parts, &check_eps.1, check_eps.0) && c.prob_good >= floor {
            passed += 1;
        }
    }
    let detail = format!("{passed}/100 certificates verified; min probGood {min_good:.4} (floor {floor:.3})");
    if passed == 100 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn control_state(inst: &Instance) -> CQState {
    post_measurement_cq(&inst.povm, &inst.state, &inst.layout(), KeptSystems::Br).unwrap()
}

fn criterion_6() -> Verdict {
    let eps: f64 = 0.1;
    let inst = fixture("classical-commuting");
    let cq = control_state(&inst);
    let o = cdc_qsi(&cq, &["X", "Y"], eps, 6, &CdcConfig::default()).unwrap();
    let bound = (2.0 * eps).sqrt() + eps;
    let eps_prime = 2.0 * bound.sqrt() + 2.0 * eps;
    let formula = (o.h_max - o.i_hyp + (1.0 / eps).log2()).ceil() as u32;
    let literal = cdc_qsi(
        &cq,
        &["X", "Y"],
        eps,
        6,
        &CdcConfig {
            rate_override: Some(formula),
            ..Default::default()
        },
    )
    .unwrap();
    let detail = format!(
        "rate {} (formula {formula}, {} input bits): avg error {:.4}, output distance {:.4}; at the formula rate: {:.4}, {:.4}; bounds {bound:.3}, {:.3}; {} hashes",
        o.rate,
        o.input_bits,
        o.avg_error,
        o.output_distance,
        literal.avg_error,
        literal.output_distance,
        2.0 * eps_prime,
        o.hash_draws
    );
    let within = |c: &oneshot_core::protocols::CdcOutcome| {
        c.hash_draws == 100 && c.avg_error <= bound && c.max_output_distance <= 2.0 * eps_prime
    };
    if o.rate == formula.min(o.input_bits) && literal.rate == formula && within(&o) && within(&literal) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Verdict {
    let eps = 0.01;
    let inst = fixture("qubit-entangled");
    let comp = CompressionConfig {
        log_const: Some(0.0),
        ..Default::default()
    };
    let t = compression_thresholds(&inst.povm, &rho_a(&inst), eps, &comp).unwrap();
    let rx = t.i_max_x + t.log_const + 2.0;
    let ry = t.i_max_y + t.log_const + 2.0;
    let budget = OneShotBudget::new(eps, rx, ry, (t.h_max_x + 2.0 - rx).max(0.0), (t.h_max_y + 2.0 - ry).max(0.0)).unwrap();
    let cfg = CentralisedConfig {
        compression: comp,
        ..Default::default()
    };
    let mut sums = [0.0; 3];
    let mut identical = 0;
    for seed in 0..50 {
        let o = centralised_protocol(&inst.povm, &inst.state, &inst.layout(), &budget, seed, &cfg).unwrap();
        let same = o.results.windows(2).all(|w| w[0].transcript == w[1].transcript);
        if same && o.transcripts_identical {
            identical += 1;
        }
        for (s, res) in sums.iter_mut().zip(&o.results) {
            *s += res.deviation;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 50.0).collect();
    let detail = format!(
        "mean deviation both/x-only/y-only = {:.3}/{:.3}/{:.3}, identical transcripts {identical}/50",
        means[0], means[1], means[2]
    );
    if means.iter().all(|&m| m <= 0.3) && identical == 50 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn same_constraints(a: &RegionPiece, b: &RegionPiece, tol: f64) -> bool {
    a.constraints.len() == b.constraints.len()
        && a.constraints.iter().all(|h| b.constraint(h.coeffs).map_or(false, |g| (g.rhs - h.rhs).abs() <= tol))
}

fn entropy_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter().filter(|&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// Shannon values of the five asymptotic rows for the classical showcase law.
fn showcase_shannon_rows() -> [f64; 5] {
    let p = [[0.30, 0.05], [0.10, 0.25], [0.05, 0.25]];
    let to_b = [[0.8, 0.2], [0.5, 0.5], [0.15, 0.85]];
    let to_r = [[0.9, 0.1], [0.2, 0.8]];
    let mut cells = Vec::new();
    for (x, row) in p.iter().enumerate() {
        for (y, &pxy) in row.iter().enumerate() {
            for (b, &pb) in to_b[x].iter().enumerate() {
                for (rr, &pr) in to_r[y].iter().enumerate() {
                    cells.push(([x, y, b, rr], pxy * pb * pr));
                }
            }
        }
    }
    let h = |keep: [bool; 4]| {
        let mut m = std::collections::BTreeMap::<[usize; 4], f64>::new();
        for (idx, v) in &cells {
            let key: [usize; 4] = std::array::from_fn(|i| if keep[i] { idx[i] } else { 9 });
            *m.entry(key).or_default() += v;
        }
        entropy_bits(m.into_values())
    };
    let mi = |a: [bool; 4], b: [bool; 4]| h(a) + h(b) - h(std::array::from_fn(|i| a[i] || b[i]));
    let (x, y, b, br, xy) = (
        [true, false, false, false],
        [false, true, false, false],
        [false, false, true, false],
        [false, false, true, true],
        [true, true, false, false],
    );
    [
        mi(x, br) - mi(x, b),
        mi(y, br) - mi(y, b),
        mi(xy, br) + mi(x, y) - mi(x, b) - mi(y, b),
        h(x) - mi(x, b),
        h(y) - mi(y, b),
    ]
}

fn criterion_8() -> Verdict {
    let eps = 0.1;
    let cfg = RegionConfig {
        log_const: Some(0.0),
        ..Default::default()
    };
    let mut endpoint_failures = Vec::new();
    for name in ["qubit-cq", "qubit-entangled", "instrument-derived"] {
        let inst = fixture(name);
        let l = inst.layout();
        let r = one_shot_region(&inst.povm, &inst.state, &l, eps, &[0.0, 1.0], &cfg).unwrap();
        let ux = unsplit_region(&inst.povm, &inst.state, &l, eps, SplitAxis::X, &cfg).unwrap();
        let uy = unsplit_region(&inst.povm, &inst.state, &l, eps, SplitAxis::Y, &cfg).unwrap();
        let piece = |axis, theta: f64| r.pieces.iter().find(|p| p.axis == Some(axis) && p.theta == Some(theta)).unwrap();
        let ok = same_constraints(piece(SplitAxis::X, 0.0), &ux, 1e-6)
            && same_constraints(piece(SplitAxis::X, 1.0), &uy, 1e-6)
            && same_constraints(piece(SplitAxis::Y, 0.0), &uy, 1e-6)
            && same_constraints(piece(SplitAxis::Y, 1.0), &ux, 1e-6);
        if !ok {
            endpoint_failures.push(name);
        }
    }
    let inst = fixture("rate-split-showcase");
    let iid = iid_region(&inst.povm, &inst.state, &inst.layout()).unwrap();
    let got: Vec<f64> = iid.pieces[0].constraints.iter().map(|c| c.rhs).collect();
    let shannon_gap = if got.len() == 5 {
        got.iter().zip(showcase_shannon_rows()).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let mut trend_failures = Vec::new();
    for name in ["qubit-cq", "qubit-entangled", "rate-split-showcase"] {
        let inst = fixture(name);
        let rows = block_trend(&inst.povm, &inst.state, &inst.layout(), 4, eps).unwrap();
        let monotone = rows.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            (b.h_max_rate - b.entropy).abs() <= (a.h_max_rate - a.entropy).abs() + 1e-9
                && (b.i_hyp_rate - b.mutual_information).abs() <= (a.i_hyp_rate - a.mutual_information).abs() + 1e-9
        });
        if !monotone {
            trend_failures.push(name);
        }
    }
    let detail = format!(
        "endpoint mismatches {endpoint_failures:?}, iid Shannon gap {shannon_gap:.1e}, non-monotone trends {trend_failures:?}"
    );
    if endpoint_failures.is_empty() && shannon_gap < 1e-9 && trend_failures.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn instance_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn criterion_9() -> Verdict {
    let qcq = instance_path("qubit-cq");
    let runs: Vec<Vec<&str>> = vec![
        vec!["--command", "entropy", "--instance", &qcq],
        vec!["--command", "split", "--instance", &qcq, "--theta", "0.3"],
        vec!["--command", "cover", "--instance", &qcq, "--trials", "50", "--format", "csv"],
        vec!["--command", "convexsplit", "--instance", &qcq],
        vec!["--command", "povm", "--instance", &qcq, "--log-const-override", "0"],
        vec!["--command", "cdcqsi", "--instance", &qcq],
        vec!["--command", "simulate", "--instance", &qcq, "--trials", "2", "--log-const-override", "0"],
        vec!["--command", "region", "--instance", &qcq],
        vec!["--command", "iidregion", "--instance", &qcq],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        let mut outputs = Vec::new();
        for threads in [1, 2, 8, 1] {
            let dir = tempfile::tempdir().unwrap();
            let out: PathBuf = dir.path().join("out");
            let mut full = vec!["oneshot"];
            full.extend(args.iter().copied());
            full.extend(["--out", out.to_str().unwrap()]);
            let cfg = RunConfig::try_parse_from(full).unwrap();
            run_with_threads(&cfg, Some(threads)).map_err(|e| e.message).unwrap();
            outputs.push(std::fs::read(&out).unwrap());
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            differing.push(args[1]);
        }
    }
    let detail = format!("{} commands, 1/2/8/1 threads, differing: {differing:?}", runs.len());
    if differing.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("entropy oracles", criterion_1),
        ("smoothing SDPs", criterion_2),
        ("covering estimates", criterion_3),
        ("convex split", criterion_4),
        ("GOOD-set certificates", criterion_5),
        ("CDC with side information", criterion_6),
        ("centralised protocol", criterion_7),
        ("rate regions", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {tag} {name} [{secs:.1}s] {detail}", i + 1);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
