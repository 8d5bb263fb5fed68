//! Batch front end: reads an instance file, runs one command and writes a JSON or
//! CSV result. Wall-clock time goes to a `<out>.timing.json` sidecar so the result
//! file itself depends only on the configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use oneshot_core::covering::{convex_split_distance, covering_sweep, CoveringInstance};
use oneshot_core::entropy::{cq_entropy, cq_mutual_information, h_max_smooth, i_hyp_cq, i_max_smooth_cq, SmoothingConfig};
use oneshot_core::instance::Instance;
use oneshot_core::linalg::{partial_trace, DensityOperator};
use oneshot_core::objects::{post_measurement_cq, CQState, KeptSystems};
use oneshot_core::protocols::{
    block_trend, build_compressed_povm, canonical_control_state, cdc_qsi, centralised_protocol,
    iid_region, one_shot_region, compression_thresholds, simulate_unassisted, AdversaryScenario,
    CdcConfig, CentralisedConfig, CompressionConfig, OneShotBudget, RateRegion, RegionConfig,
};
use oneshot_core::split::split;
use oneshot_core::Error;

pub const THREADS_ENV: &str = "ONESHOT_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Entropy,
    Split,
    Cover,
    Convexsplit,
    Povm,
    Cdcqsi,
    Simulate,
    Region,
    Iidregion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "oneshot", version, about = "One-shot measurement compression experiments")]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub command: Command,
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Split parameter for `split`.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Comma-separated split parameters for `region`.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.5, 1.0])]
    pub theta_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials per grid point for `cover`; seeds averaged over for `simulate`.
    #[arg(long, default_value_t = 400)]
    pub trials: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Explicit budget "Rx,Ry,Cx,Cy" in bits.
    #[arg(long)]
    pub rates: Option<String>,
    /// Replaces the additive constant c(ε) on the I_max rows.
    #[arg(long, allow_hyphen_values = true)]
    pub log_const_override: Option<f64>,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 5,
            kind: "usage",
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: 6,
            kind: "io",
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message, "exitCode": self.code}).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidInstance(_) => (1, "invalid-instance"),
            Error::RateInfeasible(_) => (2, "rate-infeasible"),
            Error::Solver { .. } => (3, "solver"),
            Error::RetriesExhausted { .. } => (4, "retries-exhausted"),
            _ => (5, "invalid-argument"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Result rows for the commands that have a tabular form.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

struct Output {
    json: Value,
    table: Option<Table>,
}

fn num(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| "null".into())
}

fn validate(cfg: &RunConfig) -> CliResult<()> {
    let lower_ok = if cfg.command == Command::Entropy { cfg.eps >= 0.0 } else { cfg.eps > 0.0 };
    if !(lower_ok && cfg.eps < 1.0) {
        return Err(CliError::usage(format!("--eps {} outside the allowed range", cfg.eps)));
    }
    if cfg.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.theta) || cfg.theta_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(CliError::usage("split parameters must lie in [0, 1]"));
    }
    if cfg.theta_grid.is_empty() {
        return Err(CliError::usage("--theta-grid is empty"));
    }
    Ok(())
}

fn parse_rates(s: &str, eps: f64) -> CliResult<OneShotBudget> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(format!("--rates: {e}")))?;
    if v.len() != 4 {
        return Err(CliError::usage("--rates needs four values Rx,Ry,Cx,Cy"));
    }
    Ok(OneShotBudget::new(eps, v[0], v[1], v[2], v[3])?)
}

fn compression_config(cfg: &RunConfig) -> CompressionConfig {
    CompressionConfig {
        log_const: cfg.log_const_override,
        ..Default::default()
    }
}

fn rho_a(inst: &Instance) -> CliResult<DensityOperator> {
    Ok(DensityOperator::new(partial_trace(&inst.state, &inst.layout(), &["A"])?)?)
}

/// The explicit budget, or message rates two bits above the I_max rows with coins
/// covering the rest of the H_max rows.
pub fn budget_for(inst: &Instance, eps: f64, rates: Option<&str>, comp: &CompressionConfig) -> Result<OneShotBudget, CliError> {
    if let Some(r) = rates {
        return parse_rates(r, eps);
    }
    let t = compression_thresholds(&inst.povm, &*rho_a(inst)?, eps, comp)?;
    let rx = if t.x_trivial { 0.0 } else { t.i_max_x + t.log_const + 2.0 };
    let ry = if t.y_trivial { 0.0 } else { t.i_max_y + t.log_const + 2.0 };
    let cx = if t.x_trivial { 0.0 } else { (t.h_max_x + 2.0 - rx).max(0.0) };
    let cy = if t.y_trivial { 0.0 } else { (t.h_max_y + 2.0 - ry).max(0.0) };
    Ok(OneShotBudget::new(eps, rx.max(0.0), ry.max(0.0), cx, cy)?)
}

fn control_state(inst: &Instance) -> CliResult<CQState> {
    Ok(post_measurement_cq(&inst.povm, &inst.state, &inst.layout(), KeptSystems::Br)?)
}

fn entropy(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let eps = cfg.eps;
    let cq = control_state(inst)?;
    let smoothing = SmoothingConfig::default();
    let mut rows = Vec::new();
    for regs in [&["X"][..], &["Y"], &["X", "Y"]] {
        let name = regs.join("");
        let m = cq.marginal(regs, &[])?;
        rows.push((format!("H_max({name})"), h_max_smooth(&m.full_distribution(), eps)?.value));
        rows.push((format!("H({name})"), cq_entropy(&m)));
        let mb = cq.marginal(regs, &["B"])?;
        rows.push((format!("I_H({name}:B)"), i_hyp_cq(&mb, regs, eps)?.value));
        rows.push((
            format!("I({name}:B)"),
            cq_mutual_information(&mb, (regs, &[]), (&[], &["B"]))?,
        ));
        rows.push((
            format!("I_max({name}:BR)"),
            i_max_smooth_cq(&cq.marginal(regs, &["B", "R"])?, regs, eps, &smoothing)?.value,
        ));
    }
    let canonical = canonical_control_state(&inst.povm, &*rho_a(inst)?)?;
    rows.push((
        "I_max(X:R')".into(),
        i_max_smooth_cq(&canonical.marginal(&["X"], &["R"])?, &["X"], eps, &smoothing)?.value,
    ));
    rows.push((
        "I_max(Y:R'X)".into(),
        i_max_smooth_cq(&canonical, &["Y"], eps, &smoothing)?.value,
    ));
    let json = json!({
        "eps": eps,
        "quantities": rows.iter().map(|(k, v)| json!({"name": k, "value": v})).collect::<Vec<_>>(),
    });
    Ok(Output {
        json,
        table: Some(Table {
            header: vec!["quantity", "value"],
            rows: rows.iter().map(|(k, v)| vec![k.clone(), num(*v)]).collect(),
        }),
    })
}

fn split_cmd(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let cq = control_state(inst)?;
    let px = cq.marginal(&["X"], &[])?.full_distribution();
    let pair = split(&px, cfg.theta)?;
    let max_law = pair.max_law();
    let gap = max_law
        .iter()
        .zip(px.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let symbols = px.alphabet().to_vec();
    let rows: Vec<Vec<String>> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                s.clone(),
                num(px.probs()[i]),
                num(pair.p_u.probs()[i]),
                num(pair.p_v.probs()[i]),
                num(max_law[i]),
            ]
        })
        .collect();
    let json = json!({
        "theta": cfg.theta,
        "symbols": symbols,
        "p": px.probs(),
        "pU": pair.p_u.probs(),
        "pV": pair.p_v.probs(),
        "maxLaw": max_law,
        "maxLawGap": gap,
    });
    Ok(Output {
        json,
        table: Some(Table {
            header: vec!["symbol", "p", "pU", "pV", "maxLaw"],
            rows,
        }),
    })
}

const COVER_GRID_MAX: u32 = 4;

fn cover(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let canonical = canonical_control_state(&inst.povm, &*rho_a(inst)?)?;
    let ci = CoveringInstance::from_cq(&canonical, "X", "Y")?;
    let grid: Vec<(u32, u32)> = (0..=COVER_GRID_MAX)
        .flat_map(|a| (0..=COVER_GRID_MAX).map(move |b| (a, b)))
        .collect();
    let rows = covering_sweep(&ci, &grid, cfg.trials, cfg.seed)?;
    let table = rows
        .iter()
        .map(|r| {
            vec![
                r.log_k.to_string(),
                r.log_l.to_string(),
                num(r.mean_error),
                num(r.stderr),
                r.trials.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect();
    Ok(Output {
        json: json!({ "rows": rows }),
        table: Some(Table {
            header: vec!["logK", "logL", "meanError", "stderr", "trials", "seed"],
            rows: table,
        }),
    })
}

fn convexsplit(inst: &Instance, _cfg: &RunConfig) -> CliResult<Output> {
    let layout = inst.layout();
    let mut rows = Vec::new();
    for k in 1..=2 {
        for l in 1..=2 {
            rows.push((k, l, convex_split_distance(&inst.state, &layout, k, l)?));
        }
    }
    Ok(Output {
        json: json!({
            "rows": rows.iter().map(|(k, l, d)| json!({"K": k, "L": l, "distance": d})).collect::<Vec<_>>()
        }),
        table: Some(Table {
            header: vec!["K", "L", "distance"],
            rows: rows
                .iter()
                .map(|(k, l, d)| vec![k.to_string(), l.to_string(), num(*d)])
                .collect(),
        }),
    })
}

fn povm(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let comp = compression_config(cfg);
    let budget = budget_for(inst, cfg.eps, cfg.rates.as_deref(), &comp)?;
    let out = build_compressed_povm(&inst.povm, &rho_a(inst)?, &budget, cfg.seed, &comp)?;
    let blocks: Vec<Value> = out
        .povms
        .iter()
        .enumerate()
        .map(|(b, c)| match c {
            None => json!({"block": b, "nice": false}),
            Some(c) => {
                let (defect, min_eig) = c.check(&out.support);
                json!({
                    "block": [c.block.0, c.block.1],
                    "nice": true,
                    "goodSize": c.good.len(),
                    "normalization": c.normalization,
                    "probGood": c.prob_good,
                    "abortWeight": c.zero_weight,
                    "completenessDefect": defect,
                    "minEigenvalue": min_eig,
                })
            }
        })
        .collect();
    Ok(Output {
        json: json!({
            "budget": budget,
            "sizes": out.sizes(),
            "seedUsed": out.seed_used,
            "attempts": out.attempts,
            "fractionNice": out.nice.fraction_nice,
            "deviations": out.nice.deviations,
            "thresholds": out.thresholds,
            "blocks": blocks,
        }),
        table: None,
    })
}

fn cdcqsi(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let cq = control_state(inst)?.marginal(&["X"], &["B"])?;
    let o = cdc_qsi(&cq, &["X"], cfg.eps, cfg.seed, &CdcConfig::default())?;
    Ok(Output {
        json: serde_json::to_value(&o).expect("serialisable"),
        table: None,
    })
}

fn simulate(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let comp = compression_config(cfg);
    let budget = budget_for(inst, cfg.eps, cfg.rates.as_deref(), &comp)?;
    let layout = inst.layout();
    let cen_cfg = CentralisedConfig {
        compression: comp.clone(),
        ..Default::default()
    };
    let mut runs = Vec::with_capacity(cfg.trials);
    let mut sums = [0.0; 3];
    for t in 0..cfg.trials as u64 {
        let seed = cfg.seed.wrapping_add(t);
        let o = centralised_protocol(&inst.povm, &inst.state, &layout, &budget, seed, &cen_cfg)?;
        for (s, r) in sums.iter_mut().zip(&o.results) {
            *s += r.deviation;
        }
        runs.push(json!({
            "seed": seed,
            "seedUsed": o.seed_used,
            "attempts": o.attempts,
            "fractionNice": o.fraction_nice,
            "transcriptsIdentical": o.transcripts_identical,
            "results": o.results,
        }));
    }
    let unassisted = simulate_unassisted(&inst.povm, &inst.state, &layout, &budget, cfg.seed, AdversaryScenario::Both, &comp)?;
    let n = cfg.trials as f64;
    let means: serde_json::Map<String, Value> = AdversaryScenario::ALL
        .iter()
        .zip(sums)
        .map(|(s, v)| (s.name().to_string(), json!(v / n)))
        .collect();
    Ok(Output {
        json: json!({
            "budget": budget,
            "meanDeviation": means,
            "unassistedDeviation": unassisted.deviation,
            "runs": runs,
        }),
        table: None,
    })
}

fn region_table(r: &RateRegion) -> Table {
    let mut rows = Vec::new();
    for p in &r.pieces {
        for h in &p.constraints {
            let mut row = vec![
                p.label.clone(),
                p.axis.map(|a| format!("{a:?}")).unwrap_or_default(),
                p.theta.map(num).unwrap_or_default(),
            ];
            row.extend(h.coeffs.iter().map(|c| num(*c)));
            row.push(num(h.rhs));
            row.push(h.provenance.clone());
            rows.push(row);
        }
    }
    Table {
        header: vec!["piece", "axis", "theta", "cRX", "cRY", "cCX", "cCY", "rhs", "provenance"],
        rows,
    }
}

fn region(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let rc = RegionConfig {
        log_const: cfg.log_const_override,
        ..Default::default()
    };
    let r = one_shot_region(&inst.povm, &inst.state, &inst.layout(), cfg.eps, &cfg.theta_grid, &rc)?;
    Ok(Output {
        json: serde_json::to_value(&r).expect("serialisable"),
        table: Some(region_table(&r)),
    })
}

const TREND_BLOCKS: usize = 4;

fn iidregion(inst: &Instance, cfg: &RunConfig) -> CliResult<Output> {
    let r = iid_region(&inst.povm, &inst.state, &inst.layout())?;
    let trend = block_trend(&inst.povm, &inst.state, &inst.layout(), TREND_BLOCKS, cfg.eps)?;
    Ok(Output {
        json: json!({ "region": r, "trend": trend }),
        table: Some(region_table(&r)),
    })
}

fn read_instance(path: &Path) -> CliResult<Instance> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(Instance::from_json(&text)?)
}

fn render(out: &Output, cfg: &RunConfig) -> CliResult<Vec<u8>> {
    match cfg.format {
        Format::Json => {
            let doc = json!({
                "manifest": {
                    "tool": env!("CARGO_PKG_NAME"),
                    "version": env!("CARGO_PKG_VERSION"),
                    "config": cfg,
                },
                "result": out.json,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serialisable");
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let table = out
                .table
                .as_ref()
                .ok_or_else(|| CliError::usage("this command has no CSV form; use --format json"))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.header).map_err(|e| CliError::io(e.to_string()))?;
            for row in &table.rows {
                w.write_record(row).map_err(|e| CliError::io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::io(e.to_string()))
        }
    }
}

fn execute(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    validate(cfg)?;
    let inst = read_instance(&cfg.instance)?;
    let out = match cfg.command {
        Command::Entropy => entropy(&inst, cfg)?,
        Command::Split => split_cmd(&inst, cfg)?,
        Command::Cover => cover(&inst, cfg)?,
        Command::Convexsplit => convexsplit(&inst, cfg)?,
        Command::Povm => povm(&inst, cfg)?,
        Command::Cdcqsi => cdcqsi(&inst, cfg)?,
        Command::Simulate => simulate(&inst, cfg)?,
        Command::Region => region(&inst, cfg)?,
        Command::Iidregion => iidregion(&inst, cfg)?,
    };
    render(&out, cfg)
}

/// Thread count from ONESHOT_THREADS; `None` lets rayon use every core.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::usage(format!("{THREADS_ENV}={v} is not a positive integer"))),
        },
    }
}

/// Runs one command on a pool of the given size and writes the result and timing files.
pub fn run_with_threads(cfg: &RunConfig, threads: Option<usize>) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::usage(e.to_string()))?;
    let start = Instant::now();
    let bytes = pool.install(|| execute(cfg))?;
    let elapsed = start.elapsed().as_secs_f64();
    fs::write(&cfg.out, bytes).map_err(|e| CliError::io(format!("{}: {e}", cfg.out.display())))?;
    let timing = json!({
        "wallSeconds": elapsed,
        "threads": pool.current_num_threads(),
    });
    fs::write(timing_path(&cfg.out), format!("{timing}\n"))
        .map_err(|e| CliError::io(e.to_string()))?;
    Ok(())
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    run_with_threads(cfg, threads_from_env()?)
}

pub fn timing_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".timing.json");
    PathBuf::from(s)
}

/// Parses arguments, runs, and reports failures as JSON on stderr. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", CliError::usage(e.to_string().trim_end()).to_json());
            return 5;
        }
    };
    match run(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}
