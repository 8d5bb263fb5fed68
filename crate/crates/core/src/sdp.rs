//! Dense semidefinite feasibility and optimisation by operator splitting.
//!
//! Variables are Hermitian or general complex matrices, parameterised by real
//! coordinates in an orthonormal basis. Each PSD constraint is an affine
//! Hermitian expression in the variables. The solver alternates a
//! least-squares step onto the affine set with eigenvalue clipping onto the
//! cone (an over-relaxed alternating-direction scheme).

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

#[derive(Clone, Debug, PartialEq)]
pub enum VarKind {
    Hermitian(usize),
    Complex { rows: usize, cols: usize },
}

impl VarKind {
    fn real_dim(&self) -> usize {
        match *self {
            VarKind::Hermitian(d) => d * d,
            VarKind::Complex { rows, cols } => 2 * rows * cols,
        }
    }
}

/// One linear contribution to a matrix expression.
#[derive(Clone, Debug)]
pub enum Term {
    /// `coeff · Σ_k K_k X K_k†` placed on the diagonal block starting at `offset`.
    Congruence {
        var: VarId,
        coeff: f64,
        kraus: Vec<ComplexMatrix>,
        offset: usize,
    },
    /// `coeff · Z` at (`row`, `col`) and its adjoint at (`col`, `row`).
    OffDiagonal {
        var: VarId,
        coeff: f64,
        row: usize,
        col: usize,
    },
    /// `coeff · Re Tr[W X]` added to the diagonal entry `offset`.
    Scalar {
        var: VarId,
        coeff: f64,
        weight: ComplexMatrix,
        offset: usize,
    },
}

impl Term {
    fn var(&self) -> VarId {
        match self {
            Term::Congruence { var, .. }
            | Term::OffDiagonal { var, .. }
            | Term::Scalar { var, .. } => *var,
        }
    }
}

/// Affine Hermitian expression `constant + Σ terms`.
#[derive(Clone, Debug)]
pub struct MatrixExpr {
    pub constant: HermitianOperator,
    pub terms: Vec<Term>,
}

impl MatrixExpr {
    pub fn constant(c: HermitianOperator) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::constant(HermitianOperator::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }

    /// Add `coeff · X` on the diagonal block at `offset`.
    pub fn place(mut self, var: VarId, coeff: f64, dim: usize, offset: usize) -> Self {
        self.terms.push(Term::Congruence {
            var,
            coeff,
            kraus: vec![ComplexMatrix::identity(dim)],
            offset,
        });
        self
    }

    pub fn with(mut self, term: Term) -> Self {
        self.terms.push(term);
        self
    }
}

/// Affine real expression `constant + Σ coeff · Re Tr[W X]`.
#[derive(Clone, Debug, Default)]
pub struct ScalarExpr {
    pub constant: f64,
    pub terms: Vec<(VarId, f64, ComplexMatrix)>,
}

impl ScalarExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn plus(mut self, var: VarId, coeff: f64, weight: ComplexMatrix) -> Self {
        self.terms.push((var, coeff, weight));
        self
    }

    fn as_matrix(&self) -> MatrixExpr {
        let mut e = MatrixExpr::constant(HermitianOperator::diag(&[self.constant]));
        for (var, coeff, weight) in &self.terms {
            e.terms.push(Term::Scalar {
                var: *var,
                coeff: *coeff,
                weight: weight.clone(),
                offset: 0,
            });
        }
        e
    }
}

#[derive(Clone, Debug, Default)]
pub struct SdProblem {
    variables: Vec<(String, VarKind)>,
    psd: Vec<MatrixExpr>,
    equalities: Vec<ScalarExpr>,
    objective: Option<ScalarExpr>,
}

impl SdProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hermitian(&mut self, label: impl Into<String>, dim: usize) -> VarId {
        self.variables.push((label.into(), VarKind::Hermitian(dim)));
        VarId(self.variables.len() - 1)
    }

    pub fn complex(&mut self, label: impl Into<String>, rows: usize, cols: usize) -> VarId {
        self.variables
            .push((label.into(), VarKind::Complex { rows, cols }));
        VarId(self.variables.len() - 1)
    }

    pub fn psd(&mut self, expr: MatrixExpr) {
        self.psd.push(expr);
    }

    /// Scalar constraint `expr ≥ 0`.
    pub fn nonneg(&mut self, expr: ScalarExpr) {
        self.psd.push(expr.as_matrix());
    }

    /// Scalar constraint `expr == 0`.
    pub fn equal(&mut self, expr: ScalarExpr) {
        self.equalities.push(expr);
    }

    pub fn minimize(&mut self, expr: ScalarExpr) {
        self.objective = Some(expr);
    }

    pub fn variables(&self) -> &[(String, VarKind)] {
        &self.variables
    }

    fn validate(&self) -> Result<()> {
        for (i, e) in self.psd.iter().enumerate() {
            for t in &e.terms {
                let kind = self.variables.get(t.var().0).map(|v| &v.1).ok_or_else(|| {
                    Error::InvalidArgument(format!("constraint {i} references an unknown variable"))
                })?;
                let ok = match (t, kind) {
                    (Term::Congruence { kraus, offset, .. }, VarKind::Hermitian(d)) => kraus
                        .iter()
                        .all(|k| k.cols() == *d && offset + k.rows() <= e.dim()),
                    (Term::OffDiagonal { row, col, .. }, VarKind::Complex { rows, cols }) => {
                        row + rows <= e.dim()
                            && col + cols <= e.dim()
                            && (row + rows <= *col || col + cols <= *row)
                    }
                    (Term::Scalar { weight, offset, .. }, k) => {
                        let (r, c) = match *k {
                            VarKind::Hermitian(d) => (d, d),
                            VarKind::Complex { rows, cols } => (cols, rows),
                        };
                        weight.rows() == r && weight.cols() == c && *offset < e.dim()
                    }
                    _ => false,
                };
                if !ok {
                    return Err(Error::DimensionMismatch(format!(
                        "constraint {i} has an inconsistent term"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Cooperative cancellation flag shared with long-running evaluations.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub penalty: f64,
    pub relaxation: f64,
    pub stagnation_window: usize,
    pub stagnation_threshold: f64,
    pub cancel: Option<CancelToken>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol: 1e-7,
            penalty: 1.0,
            relaxation: 1.6,
            stagnation_window: 500,
            stagnation_threshold: 1e-12,
            cancel: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

#[derive(Clone, Debug)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub assignment: Vec<(String, ComplexMatrix)>,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Smallest eigenvalue over all PSD constraints at the returned point.
    pub min_constraint_eigenvalue: f64,
    pub max_equality_violation: f64,
    pub objective: Option<f64>,
}

impl SdpResult {
    pub fn value(&self, label: &str) -> Option<&ComplexMatrix> {
        self.assignment
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, m)| m)
    }

    pub fn hermitian(&self, label: &str) -> Option<HermitianOperator> {
        self.value(label)
            .map(|m| HermitianOperator::hermitize(m.clone()))
    }
}

/// Orthonormal real basis element `k` of a variable kind.
fn basis_element(kind: &VarKind, k: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match *kind {
        VarKind::Hermitian(d) => {
            let mut m = ComplexMatrix::zeros(d, d);
            if k < d {
                m[(k, k)] = C64::new(1.0, 0.0);
                return m;
            }
            let mut idx = k - d;
            for i in 0..d {
                for j in i + 1..d {
                    if idx == 0 {
                        m[(i, j)] = C64::new(s, 0.0);
                        m[(j, i)] = C64::new(s, 0.0);
                        return m;
                    }
                    if idx == 1 {
                        m[(i, j)] = C64::new(0.0, -s);
                        m[(j, i)] = C64::new(0.0, s);
                        return m;
                    }
                    idx -= 2;
                }
            }
            unreachable!("basis index out of range")
        }
        VarKind::Complex { rows, cols } => {
            let mut m = ComplexMatrix::zeros(rows, cols);
            let (entry, imag) = (k / 2, k % 2 == 1);
            m[(entry / cols, entry % cols)] = if imag {
                C64::new(0.0, 1.0)
            } else {
                C64::new(1.0, 0.0)
            };
            m
        }
    }
}

fn assemble(kind: &VarKind, x: &[f64]) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match *kind {
        VarKind::Hermitian(d) => {
            let mut m = ComplexMatrix::zeros(d, d);
            for i in 0..d {
                m[(i, i)] = C64::new(x[i], 0.0);
            }
            let mut idx = d;
            for i in 0..d {
                for j in i + 1..d {
                    let z = C64::new(x[idx] * s, -x[idx + 1] * s);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                    idx += 2;
                }
            }
            m
        }
        VarKind::Complex { rows, cols } => ComplexMatrix::from_fn(rows, cols, |i, j| {
            C64::new(x[2 * (i * cols + j)], x[2 * (i * cols + j) + 1])
        }),
    }
}

/// Coordinates of a Hermitian matrix in the orthonormal basis (diagonal, then √2·Re, √2·Im pairs).
fn svec(m: &ComplexMatrix, out: &mut [f64]) {
    let d = m.rows();
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        out[i] = m[(i, i)].re;
    }
    let mut idx = d;
    for i in 0..d {
        for j in i + 1..d {
            out[idx] = r2 * m[(i, j)].re;
            out[idx + 1] = -r2 * m[(i, j)].im;
            idx += 2;
        }
    }
}

fn smat(v: &[f64], d: usize) -> ComplexMatrix {
    assemble(&VarKind::Hermitian(d), v)
}

fn apply_term(term: &Term, x: &ComplexMatrix, out: &mut ComplexMatrix) {
    match term {
        Term::Congruence {
            coeff,
            kraus,
            offset,
            ..
        } => {
            for k in kraus {
                let y = k.matmul(x).matmul(&k.adjoint());
                for i in 0..y.rows() {
                    for j in 0..y.cols() {
                        out[(offset + i, offset + j)] += y[(i, j)] * *coeff;
                    }
                }
            }
        }
        Term::OffDiagonal {
            coeff, row, col, ..
        } => {
            for i in 0..x.rows() {
                for j in 0..x.cols() {
                    let z = x[(i, j)] * *coeff;
                    out[(row + i, col + j)] += z;
                    out[(col + j, row + i)] += z.conj();
                }
            }
        }
        Term::Scalar {
            coeff,
            weight,
            offset,
            ..
        } => {
            let v = weight.trace_product(x).re * coeff;
            out[(*offset, *offset)] += C64::new(v, 0.0);
        }
    }
}

/// Dense lower-triangular Cholesky factor of a symmetric positive definite matrix.
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn new(a: &[f64], n: usize) -> Result<Self> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 {
                return Err(Error::Solver {
                    message: "normal matrix is not positive definite".into(),
                    primal: f64::NAN,
                    dual: f64::NAN,
                });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

struct Compiled {
    n: usize,
    offsets: Vec<usize>,
    /// Per cone: (dimension, row offset into the stacked vector).
    cones: Vec<(usize, usize)>,
    m: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    e: Vec<f64>,
    f: Vec<f64>,
    q: Vec<f64>,
}

fn compile(p: &SdProblem) -> Compiled {
    let mut offsets = Vec::with_capacity(p.variables.len());
    let mut n = 0;
    for (_, k) in &p.variables {
        offsets.push(n);
        n += k.real_dim();
    }
    let mut cones = Vec::new();
    let mut m = 0;
    for e in &p.psd {
        cones.push((e.dim(), m));
        m += e.dim() * e.dim();
    }
    let mut a = vec![0.0; m * n];
    let mut c = vec![0.0; m];
    let mut col = vec![0.0; 0];
    for (ci, expr) in p.psd.iter().enumerate() {
        let (d, row0) = cones[ci];
        svec(expr.constant.matrix(), &mut c[row0..row0 + d * d]);
        col.resize(d * d, 0.0);
        for (vi, (_, kind)) in p.variables.iter().enumerate() {
            let terms: Vec<&Term> = expr.terms.iter().filter(|t| t.var().0 == vi).collect();
            if terms.is_empty() {
                continue;
            }
            for k in 0..kind.real_dim() {
                let b = basis_element(kind, k);
                let mut img = ComplexMatrix::zeros(d, d);
                for t in &terms {
                    apply_term(t, &b, &mut img);
                }
                svec(&img, &mut col);
                for (r, v) in col.iter().enumerate() {
                    a[(row0 + r) * n + offsets[vi] + k] = *v;
                }
            }
        }
    }
    let scalar_row = |s: &ScalarExpr| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; n];
        for (var, coeff, weight) in &s.terms {
            let kind = &p.variables[var.0].1;
            for k in 0..kind.real_dim() {
                row[offsets[var.0] + k] += coeff * weight.trace_product(&basis_element(kind, k)).re;
            }
        }
        (row, s.constant)
    };
    let mut e = Vec::new();
    let mut f = Vec::new();
    for s in &p.equalities {
        let (row, c0) = scalar_row(s);
        e.extend(row);
        f.push(-c0);
    }
    let q = p
        .objective
        .as_ref()
        .map(|o| scalar_row(o).0)
        .unwrap_or_else(|| vec![0.0; n]);
    Compiled {
        n,
        offsets,
        cones,
        m,
        a,
        c,
        e,
        f,
        q,
    }
}

fn project_psd(v: &mut [f64], d: usize) -> f64 {
    let mat = HermitianOperator::hermitize(smat(v, d));
    let e = mat.eigh();
    let min = e.values.last().copied().unwrap_or(0.0);
    if min >= 0.0 {
        return min;
    }
    let clipped = e.reconstruct_with(|l| l.max(0.0));
    svec(&clipped, v);
    min
}

fn min_eig(v: &[f64], d: usize) -> f64 {
    HermitianOperator::hermitize(smat(v, d)).min_eigenvalue()
}

/// Starting point for a warm-started solve.
#[derive(Clone, Debug)]
pub struct WarmStart {
    x: Vec<f64>,
    s: Vec<f64>,
    u: Vec<f64>,
}

pub fn solve(problem: &SdProblem, config: &SolverConfig) -> Result<SdpResult> {
    solve_warm(problem, config, None).map(|(r, _)| r)
}

/// Solve, optionally from a previous iterate of a problem with identical structure.
pub fn solve_warm(
    problem: &SdProblem,
    config: &SolverConfig,
    warm: Option<&WarmStart>,
) -> Result<(SdpResult, WarmStart)> {
    problem.validate()?;
    let cp = compile(problem);
    let (n, m) = (cp.n, cp.m);
    let rho = config.penalty;
    let sigma = 1e-6;
    let neq = cp.f.len();

    // H = ρ AᵀA + σ I
    let mut h = vec![0.0; n * n];
    for r in 0..m {
        let row = &cp.a[r * n..(r + 1) * n];
        for (i, &ai) in row.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &aj) in row.iter().enumerate().skip(i) {
                h[i * n + j] += rho * ai * aj;
            }
        }
    }
    for i in 0..n {
        h[i * n + i] += sigma;
        for j in 0..i {
            h[i * n + j] = h[j * n + i];
        }
    }
    let chol = Cholesky::new(&h, n)?;
    // Schur complement E H⁻¹ Eᵀ for the equality multipliers.
    let mut hinv_et = vec![0.0; neq * n];
    for k in 0..neq {
        let mut col = cp.e[k * n..(k + 1) * n].to_vec();
        chol.solve(&mut col);
        hinv_et[k * n..(k + 1) * n].copy_from_slice(&col);
    }
    let schur = if neq > 0 {
        let mut s = vec![0.0; neq * neq];
        for i in 0..neq {
            for j in 0..neq {
                s[i * neq + j] = (0..n)
                    .map(|t| cp.e[i * n + t] * hinv_et[j * n + t])
                    .sum::<f64>();
            }
            s[i * neq + i] += 1e-14;
        }
        Some(Cholesky::new(&s, neq)?)
    } else {
        None
    };

    let (mut x, mut s, mut u) = match warm {
        Some(w) if w.x.len() == n && w.s.len() == m => (w.x.clone(), w.s.clone(), w.u.clone()),
        _ => (vec![0.0; n], cp.c.clone(), vec![0.0; m]),
    };
    let mut v = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut best_primal = f64::INFINITY;
    let mut since_best = 0usize;
    let mut displacement_history: Vec<f64> = Vec::new();
    let mut status = SdpStatus::MaxIterations;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let feasibility_only = problem.objective.is_none();

    for it in 0..config.max_iter {
        iterations = it + 1;
        if let Some(tok) = &config.cancel {
            if tok.is_cancelled() {
                return Err(Error::Cancelled);
            }
        }
        // x-update: minimise q·x + ρ/2‖c + Ax − s + u‖² + σ/2‖x − x_k‖² subject to Ex = f.
        for r in 0..m {
            v[r] = s[r] - u[r] - cp.c[r];
        }
        for (i, rh) in rhs.iter_mut().enumerate() {
            *rh = sigma * x[i] - cp.q[i];
        }
        for r in 0..m {
            let w = rho * v[r];
            if w == 0.0 {
                continue;
            }
            let row = &cp.a[r * n..(r + 1) * n];
            for (rh, &ai) in rhs.iter_mut().zip(row) {
                *rh += ai * w;
            }
        }
        chol.solve(&mut rhs);
        if let Some(sch) = &schur {
            let mut nu: Vec<f64> = (0..neq)
                .map(|k| (0..n).map(|t| cp.e[k * n + t] * rhs[t]).sum::<f64>() - cp.f[k])
                .collect();
            sch.solve(&mut nu);
            for k in 0..neq {
                for t in 0..n {
                    rhs[t] -= hinv_et[k * n + t] * nu[k];
                }
            }
        }
        x.copy_from_slice(&rhs);
        // Affine image and relaxation.
        for r in 0..m {
            let row = &cp.a[r * n..(r + 1) * n];
            v[r] = cp.c[r] + row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        }
        let s_old = s.clone();
        let alpha = config.relaxation;
        for r in 0..m {
            s[r] = alpha * v[r] + (1.0 - alpha) * s_old[r] + u[r];
        }
        for &(d, row0) in &cp.cones {
            project_psd(&mut s[row0..row0 + d * d], d);
        }
        let mut disp = 0.0;
        for r in 0..m {
            let step = alpha * v[r] + (1.0 - alpha) * s_old[r] - s[r];
            u[r] += step;
            disp += step * step;
        }
        primal = v
            .iter()
            .zip(&s)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        dual = {
            let mut g = vec![0.0; n];
            for r in 0..m {
                let ds = s[r] - s_old[r];
                if ds == 0.0 {
                    continue;
                }
                for (gi, &ai) in g.iter_mut().zip(&cp.a[r * n..(r + 1) * n]) {
                    *gi += ai * ds;
                }
            }
            rho * g.iter().map(|z| z * z).sum::<f64>().sqrt()
        };

        if it < config.stagnation_window {
            since_best = 0;
        } else if primal < best_primal - config.stagnation_threshold {
            best_primal = primal;
            since_best = 0;
        } else {
            since_best += 1;
        }
        displacement_history.push(disp.sqrt());

        let check = primal < config.tol && (feasibility_only || dual < config.tol);
        if check || (feasibility_only && it % 10 == 0 && primal < 1e3 * config.tol) {
            let (min_e, eq_v) = certify(&cp, &x);
            if min_e >= -config.tol && eq_v <= config.tol && (feasibility_only || dual < config.tol)
            {
                status = SdpStatus::Feasible;
                break;
            }
        }
        let w = config.stagnation_window;
        let mut stalled = since_best >= w && primal > config.tol;
        if feasibility_only && it >= 2 * w {
            let now = displacement_history[it];
            let before = displacement_history[it - w];
            stalled |= now > 10.0 * config.tol && (now - before).abs() <= 1e-3 * now && primal > config.tol;
        }
        if stalled {
            let (min_e, eq_v) = certify(&cp, &x);
            status = if feasibility_only && min_e >= -config.tol && eq_v <= config.tol {
                SdpStatus::Feasible
            } else {
                SdpStatus::Infeasible
            };
            break;
        }
    }
    let (min_e, eq_v) = certify(&cp, &x);
    let assignment = problem
        .variables
        .iter()
        .enumerate()
        .map(|(i, (label, kind))| {
            (
                label.clone(),
                assemble(kind, &x[cp.offsets[i]..cp.offsets[i] + kind.real_dim()]),
            )
        })
        .collect();
    let objective = problem
        .objective
        .as_ref()
        .map(|o| o.constant + cp.q.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>());
    let result = SdpResult {
        status,
        assignment,
        residuals: Residuals { primal, dual },
        iterations,
        min_constraint_eigenvalue: min_e,
        max_equality_violation: eq_v,
        objective,
    };
    Ok((result, WarmStart { x, s, u }))
}

fn certify(cp: &Compiled, x: &[f64]) -> (f64, f64) {
    let n = cp.n;
    let mut min_e = f64::INFINITY;
    for &(d, row0) in &cp.cones {
        let v: Vec<f64> = (0..d * d)
            .map(|r| {
                cp.c[row0 + r]
                    + cp.a[(row0 + r) * n..(row0 + r + 1) * n]
                        .iter()
                        .zip(x)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        min_e = min_e.min(min_eig(&v, d));
    }
    let eq_v = (0..cp.f.len())
        .map(|k| ((0..n).map(|t| cp.e[k * n + t] * x[t]).sum::<f64>() - cp.f[k]).abs())
        .fold(0.0, f64::max);
    (if min_e.is_finite() { min_e } else { 0.0 }, eq_v)
}

/// Evaluate a matrix expression at an assignment, for independent re-checking.
pub fn evaluate(expr: &MatrixExpr, result: &SdpResult) -> HermitianOperator {
    let mut out = expr.constant.matrix().clone();
    for t in &expr.terms {
        let x = &result.assignment[t.var().0].1;
        apply_term(t, x, &mut out);
    }
    HermitianOperator::hermitize(out)
}

/// Convenience accessor used by callers that keep the expressions around.
pub fn constraint_expressions(problem: &SdProblem) -> &[MatrixExpr] {
    &problem.psd
}
