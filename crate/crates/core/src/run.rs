//! Run orchestration: one directory per run holding the resolved config, the
//! numeric outputs and a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compare::{compare_with_simulation, density, Check};
use crate::config::{parse_config_str, ConfigFileError, KernelConfig, ParsedConfig, Problem, RunConfig};
use crate::hierarchy::GridTruncation;
use crate::io::{self, EstimateRow, IoError};
use crate::scale::norm_alpha;
use crate::sim::{estimate_k1, estimate_k2, run_replicas, snapshots_at, ReplicaOutput, SimError};
use crate::solver::{cross_validate, solve_rk4_with_estimate, solve_series, SeriesSolution, SolverError};
use crate::suites::{all_suites, SuiteResult};

pub const MANIFEST_VERSION: u32 = 1;

/// Instances per randomized suite in `validate`.
pub const VALIDATE_INSTANCES: usize = 100;

/// Closed-form tolerance for pure-death comparisons.
pub const CLOSED_FORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    SolveSeries,
    SolveRk4,
    Compare,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::SolveSeries => "solve-series",
            Mode::SolveRk4 => "solve-rk4",
            Mode::Compare => "compare",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub mode: Mode,
    pub config: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub emit_plots: bool,
    pub out: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(mode: Mode, config: Option<PathBuf>) -> Self {
        Self { mode, config, jobs: None, seed: None, emit_plots: false, out: None }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigFileError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("cannot start the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// One line of the pass/fail table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Line {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Line {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub mode: Mode,
    pub dir: Option<PathBuf>,
    pub lines: Vec<Line>,
    pub passed: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn table(&self) -> String {
        let width = self.lines.iter().map(|l| l.name.len()).max().unwrap_or(0);
        self.lines
            .iter()
            .map(|l| format!("{}  {:width$}  {}\n", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail))
            .collect()
    }
}

/// Reads a config file, or the `config` member of a manifest written by a
/// previous run.
pub fn load_config(path: &Path) -> Result<ParsedConfig, ConfigFileError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io { path: path.to_path_buf(), source })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| ConfigFileError::Json(e.to_string()))?;
    match value.get("manifest_version") {
        Some(_) => {
            let config = value.get("config").ok_or_else(|| ConfigFileError::Missing("config".into()))?;
            parse_config_str(&config.to_string())
        }
        None => parse_config_str(&text),
    }
}

/// Phase timings and listed outputs, collected while a run proceeds.
struct Recorder {
    dir: PathBuf,
    timings: Vec<(String, f64)>,
    outputs: Vec<String>,
    emit_plots: bool,
}

impl Recorder {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        log::info!("{phase}: {secs:.3} s");
        self.timings.push((phase.to_string(), secs));
        out
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), IoError> {
        let path = self.path(name);
        io::write_json(&path, value)
    }

    fn truncation(&mut self, name: &str, k: &GridTruncation) -> Result<(), IoError> {
        let dir = self.dir.join(name);
        for p in io::write_truncation(&dir, k)? {
            let rel = p.strip_prefix(&self.dir).unwrap_or(&p).to_string_lossy().into_owned();
            self.outputs.push(rel);
        }
        Ok(())
    }

    fn plot(
        &mut self,
        name: &str,
        csv: &str,
        title: &str,
        x: (usize, &str),
        y: (usize, &str),
        filter: Option<(usize, &str)>,
    ) -> Result<(), IoError> {
        if !self.emit_plots {
            return Ok(());
        }
        let path = self.path(name);
        io::write_plot_script(&path, csv, title, x, y, filter)
    }
}

fn short_hash(mode: Mode, content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(mode.name().as_bytes());
    h.update(content);
    h.finalize().iter().take(4).map(|b| format!("{b:02x}")).collect()
}

/// `<base>/<mode>-<UTC timestamp>-<content hash>`, suffixed if it already exists.
fn create_run_dir(base: &Path, mode: Mode, content: &[u8]) -> Result<PathBuf, IoError> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let stem = format!("{}-{stamp}-{}", mode.name(), short_hash(mode, content));
    std::fs::create_dir_all(base).map_err(|source| IoError::File { path: base.to_path_buf(), source })?;
    let mut dir = base.join(&stem);
    let mut n = 1;
    loop {
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                n += 1;
                dir = base.join(format!("{stem}-{n}"));
            }
            Err(source) => return Err(IoError::File { path: dir, source }),
        }
    }
}

/// Parses, applies overrides and runs one mode. Numeric failures that still
/// produce outputs come back as `Ok` with `passed = false`.
pub fn run(opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        if j == 0 {
            return Err(RunError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    pool.install(|| run_in_pool(opts))
}

fn run_in_pool(opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let parsed = match &opts.config {
        Some(path) => Some(load_config(path)?),
        None if opts.mode == Mode::Validate => None,
        None => return Err(RunError::Usage(format!("{} needs --config <path>", opts.mode.name()))),
    };
    let Some(ParsedConfig { mut config, defaults_applied }) = parsed else {
        return run_validate_only(opts);
    };
    let mut overrides = Vec::new();
    if let Some(seed) = opts.seed {
        config.seed = seed;
        overrides.push(format!("seed = {seed}"));
    }
    if let Some(out) = &opts.out {
        config.output = out.clone();
        overrides.push(format!("output = {}", out.display()));
    }

    let resolved = serde_json::to_vec(&config).expect("config serializes");
    let dir = create_run_dir(&config.output, opts.mode, &resolved)?;
    log::info!("writing to {}", dir.display());
    let mut rec = Recorder { dir: dir.clone(), timings: Vec::new(), outputs: Vec::new(), emit_plots: opts.emit_plots };
    rec.json("config.resolved.json", &config)?;
    let started = chrono::Utc::now().to_rfc3339();

    let (lines, results) = match opts.mode {
        Mode::Simulate => simulate(&config, &mut rec)?,
        Mode::SolveSeries => series_mode(&config, &mut rec)?,
        Mode::SolveRk4 => rk4_mode(&config, &mut rec)?,
        Mode::Compare => compare_mode(&config, &mut rec)?,
        Mode::Validate => validate_mode(config.seed, &mut rec)?,
    };
    let passed = lines.iter().all(|l| l.passed);

    rec.outputs.push("manifest.json".into());
    let manifest = json!({
        "manifest_version": MANIFEST_VERSION,
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": opts.mode,
        "config_path": opts.config,
        "config": config,
        "defaults_applied": defaults_applied,
        "overrides": overrides,
        "seed": config.seed,
        "rng": "ChaCha8 seeded from `seed`; replica r uses stream r",
        "jobs": rayon::current_num_threads(),
        "started_utc": started,
        "timings_s": rec.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "results": results,
        "checks": lines,
        "passed": passed,
        "outputs": rec.outputs,
    });
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { mode: opts.mode, dir: Some(dir), lines, passed })
}

fn run_validate_only(opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let seed = opts.seed.unwrap_or(0);
    let Some(out) = &opts.out else {
        let lines = suite_lines(&all_suites(seed, VALIDATE_INSTANCES));
        let passed = lines.iter().all(|l| l.passed);
        return Ok(RunOutcome { mode: Mode::Validate, dir: None, lines, passed });
    };
    let dir = create_run_dir(out, Mode::Validate, &seed.to_le_bytes())?;
    let mut rec = Recorder { dir: dir.clone(), timings: Vec::new(), outputs: Vec::new(), emit_plots: false };
    let (lines, results) = validate_mode(seed, &mut rec)?;
    let passed = lines.iter().all(|l| l.passed);
    rec.outputs.push("manifest.json".into());
    let manifest = json!({
        "manifest_version": MANIFEST_VERSION,
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": Mode::Validate,
        "seed": seed,
        "instances": VALIDATE_INSTANCES,
        "jobs": rayon::current_num_threads(),
        "timings_s": rec.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "results": results,
        "passed": passed,
        "outputs": rec.outputs,
    });
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { mode: Mode::Validate, dir: Some(dir), lines, passed })
}

fn suite_lines(results: &[SuiteResult]) -> Vec<Line> {
    results
        .iter()
        .map(|r| {
            Line::new(
                r.name.clone(),
                r.passed,
                format!("{} instances, max error {:.3e} (tol {:.0e})", r.instances, r.max_error, r.tolerance),
            )
        })
        .collect()
}

fn validate_mode(seed: u64, rec: &mut Recorder) -> Result<(Vec<Line>, Value), RunError> {
    let results = rec.time("suites", || all_suites(seed, VALIDATE_INSTANCES));
    rec.json("suites.json", &results)?;
    Ok((suite_lines(&results), json!({ "suites": results })))
}

fn simulate_and_estimate(
    config: &RunConfig,
    t_end: f64,
    rec: &mut Recorder,
) -> Result<(Vec<ReplicaOutput>, Vec<f64>, Vec<EstimateRow>), RunError> {
    let sim = config.sim_config(t_end);
    let outputs = rec.time("simulation", || run_replicas(&sim))?;
    let times = sim.snapshot_times();
    let mut rows = Vec::new();
    for (k, &time) in times.iter().enumerate() {
        let snaps = snapshots_at(&outputs, k);
        let k1 = estimate_k1(&snaps, sim.length)?;
        rows.push(EstimateRow {
            time,
            estimator: "k1".into(),
            bin_lo: None,
            bin_hi: None,
            value: k1.value,
            stderr: k1.stderr,
            n_replicas: snaps.len(),
        });
        for b in estimate_k2(&snaps, &config.sim.bins, sim.length)? {
            rows.push(EstimateRow {
                time,
                estimator: "k2".into(),
                bin_lo: Some(b.lo),
                bin_hi: Some(b.hi),
                value: b.value,
                stderr: b.stderr,
                n_replicas: snaps.len(),
            });
        }
    }
    let path = rec.path("snapshots.csv");
    io::write_snapshots(&path, &outputs, sim.dim)?;
    let path = rec.path("estimates.csv");
    io::write_estimates(&path, &rows)?;
    rec.plot("density.gp", "estimates.csv", "density estimate", (1, "time"), (5, "k1"), Some((2, "k1")))?;
    rec.plot(
        "pair_correlation.gp",
        "estimates.csv",
        "pair correlation by shell",
        (3, "r"),
        (5, "k2"),
        Some((2, "k2")),
    )?;
    Ok((outputs, times, rows))
}

fn replica_summary(outputs: &[ReplicaOutput]) -> Value {
    let (mut deaths, mut frags, mut offspring) = (0u64, 0u64, 0u64);
    for o in outputs {
        deaths += o.events.deaths;
        frags += o.events.fragmentations;
        offspring += o.events.offspring;
    }
    json!({
        "replicas": outputs.len(),
        "truncated_replicas": outputs.iter().filter(|o| o.truncated).count(),
        "deaths": deaths,
        "fragmentations": frags,
        "offspring": offspring,
    })
}

fn simulate(config: &RunConfig, rec: &mut Recorder) -> Result<(Vec<Line>, Value), RunError> {
    let t_end = config.end_time()?;
    let (outputs, times, rows) = simulate_and_estimate(config, t_end, rec)?;
    let summary = replica_summary(&outputs);
    let truncated = summary["truncated_replicas"].as_u64().unwrap_or(0);
    let report = json!({ "t_end": t_end, "snapshot_times": times, "events": summary, "estimates": rows });
    rec.json("report.json", &report)?;
    let final_k1 = rows.iter().rev().find(|r| r.estimator == "k1").expect("one row per snapshot");
    let mut lines = vec![Line::new(
        "simulation",
        true,
        format!("{} replicas to t = {t_end}; density {:.6} ± {:.2e}", outputs.len(), final_k1.value, final_k1.stderr),
    )];
    if truncated > 0 {
        lines.push(Line::new("population cap", false, format!("{truncated} replicas hit n_cap and were frozen")));
    }
    Ok((lines, report))
}

fn series_report(s: &SeriesSolution) -> Value {
    json!({
        "t": s.t,
        "terms_used": s.terms_used,
        "certified_remainder": s.certified_remainder,
        "quadrature_estimate": s.quadrature_estimate,
        "time_nodes": s.time_nodes,
        "horizon": s.scale.horizon(),
        "certified_time": s.scale.certified_time(),
        "ratio_qt_over_T": s.ratio,
        "k0_norm_alpha0": s.k0_norm,
        "partition": s.partition,
        "scale": s.scale,
        "bound_violations": s.bound_violations(),
    })
}

fn write_terms(rec: &mut Recorder, s: &SeriesSolution) -> Result<(), RunError> {
    let path = rec.path("terms.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|source| IoError::Csv { path: path.clone(), source })?;
    let csv_err = |source| IoError::Csv { path: path.clone(), source };
    w.write_record(["n", "increment_norm", "bound"]).map_err(csv_err)?;
    for (n, (norm, bound)) in s.term_norms.iter().zip(&s.term_bounds).enumerate() {
        w.write_record([n.to_string(), format!("{norm}"), format!("{bound}")]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| IoError::File { path: path.clone(), source })?;
    rec.plot("terms.gp", "terms.csv", "series increments", (1, "n"), (2, "increment norm"), None)?;
    Ok(())
}

fn series_lines(s: &SeriesSolution, tol: f64) -> Vec<Line> {
    let violations = s.bound_violations();
    vec![
        Line::new(
            "certified remainder",
            s.certified_remainder <= tol,
            format!("{} terms, remainder {:.3e} <= tol {tol:.0e}", s.terms_used, s.certified_remainder),
        ),
        Line::new(
            "increment bounds",
            violations.is_empty(),
            format!("{} of {} increments above their bound", violations.len(), s.term_norms.len()),
        ),
    ]
}

fn series_mode(config: &RunConfig, rec: &mut Recorder) -> Result<(Vec<Line>, Value), RunError> {
    let p = config.problem()?;
    let s = rec.time("series", || {
        solve_series(&p.kernel, &p.k0, p.t_end, &p.scale, config.scale.tol, config.scale.time_nodes)
    })?;
    rec.truncation("solution", &s.k_t)?;
    write_terms(rec, &s)?;
    let report = series_report(&s);
    rec.json("report.json", &report)?;
    Ok((series_lines(&s, config.scale.tol), report))
}

fn rk4_mode(config: &RunConfig, rec: &mut Recorder) -> Result<(Vec<Line>, Value), RunError> {
    let p = config.problem()?;
    let (k, estimate) =
        rec.time("rk4", || solve_rk4_with_estimate(&p.kernel, &p.k0, p.t_end, config.rk4.dt, p.scale.alpha_star))?;
    rec.truncation("solution", &k)?;
    let report = json!({
        "t": p.t_end,
        "dt": config.rk4.dt,
        "error_estimate_alpha_star": estimate,
        "density": density(&k),
        "norm_alpha_star": norm_alpha(&k, p.scale.alpha_star),
        "horizon": p.scale.horizon(),
        "scale": p.scale,
    });
    rec.json("report.json", &report)?;
    let line = Line::new("rk4", k.is_finite(), format!("t = {}, step-doubling error estimate {estimate:.3e}", p.t_end));
    Ok((vec![line], report))
}

/// Largest deviation of `k` from `e^{−nmt} k₀` over every stored entry.
fn closed_form_error(k: &GridTruncation, k0: &GridTruncation, mortality: f64, t: f64) -> f64 {
    (0..=k.max_order())
        .flat_map(|n| {
            let decay = (-(n as f64) * mortality * t).exp();
            k.order(n).iter().zip(k0.order(n)).map(move |(a, b)| (a - decay * b).abs())
        })
        .fold(0.0, f64::max)
}

/// Reference solution at `t`: the series where it is certified, RK4 otherwise.
fn reference(p: &Problem, config: &RunConfig) -> Result<GridTruncation, RunError> {
    if p.t_end < p.scale.certified_time() {
        Ok(solve_series(&p.kernel, &p.k0, p.t_end, &p.scale, config.scale.tol, config.scale.time_nodes)?.k_t)
    } else {
        Ok(solve_rk4_with_estimate(&p.kernel, &p.k0, p.t_end, config.rk4.dt, p.scale.alpha_star)?.0)
    }
}

fn compare_mode(config: &RunConfig, rec: &mut Recorder) -> Result<(Vec<Line>, Value), RunError> {
    let p = config.problem()?;
    let t = p.t_end;
    let mut lines = Vec::new();
    let mut results = serde_json::Map::new();
    results.insert("t".into(), json!(t));
    results.insert("horizon".into(), json!(p.scale.horizon()));
    results.insert("certified_time".into(), json!(p.scale.certified_time()));

    let (series, rk4) = if t < p.scale.certified_time() {
        let (cv, series, rk4) = rec.time("series+rk4", || {
            cross_validate(&p.kernel, &p.k0, t, &p.scale, config.scale.tol, config.scale.time_nodes, config.rk4.dt)
        })?;
        lines.push(Line::new(
            "series vs rk4",
            cv.passed,
            format!("discrepancy {:.3e} <= allowed {:.3e}", cv.discrepancy, cv.allowed),
        ));
        lines.extend(series_lines(&series, config.scale.tol));
        results.insert("cross_validation".into(), json!(cv));
        results.insert("series".into(), series_report(&series));
        (Some(series), rk4)
    } else {
        log::warn!("t = {t} is beyond the certified range T/q = {}; comparing RK4 only", p.scale.certified_time());
        results.insert("series".into(), json!({ "skipped": "t outside the certified range [0, T/q)" }));
        let (rk4, est) =
            rec.time("rk4", || solve_rk4_with_estimate(&p.kernel, &p.k0, t, config.rk4.dt, p.scale.alpha_star))?;
        results.insert("rk4_error_estimate".into(), json!(est));
        (None, rk4)
    };

    if let KernelConfig::PureDeath { mortality } = config.kernel {
        let mut closed = serde_json::Map::new();
        let rk4_err = closed_form_error(&rk4, &p.k0, mortality, t);
        lines.push(Line::new("rk4 vs closed form", rk4_err <= CLOSED_FORM_TOL, format!("max error {rk4_err:.3e}")));
        closed.insert("rk4_max_error".into(), json!(rk4_err));
        if let Some(s) = &series {
            let err = closed_form_error(&s.k_t, &p.k0, mortality, t);
            lines.push(Line::new("series vs closed form", err <= CLOSED_FORM_TOL, format!("max error {err:.3e}")));
            closed.insert("series_max_error".into(), json!(err));
        }
        results.insert("closed_form".into(), Value::Object(closed));
    }

    let fine = series.as_ref().map(|s| s.k_t.clone()).unwrap_or_else(|| rk4.clone());
    rec.truncation("solution", &fine)?;
    let coarse = match config.coarsened() {
        Some(c) => {
            let cp = c.problem()?;
            Some(rec.time("coarse solve", || reference(&cp, &c))?)
        }
        None => {
            log::warn!("grid cannot be coarsened; comparing without a grid-error estimate");
            None
        }
    };

    let (outputs, times, _) = simulate_and_estimate(config, t, rec)?;
    let last = times.len() - 1;
    let snaps = snapshots_at(&outputs, last);
    let k1 = estimate_k1(&snaps, config.grid.length)?;
    let k2 = estimate_k2(&snaps, &config.sim.bins, config.grid.length)?;
    let checks = compare_with_simulation(t, &fine, coarse.as_ref(), k1, &k2);
    write_checks(rec, &checks)?;
    for c in &checks {
        let name = match (c.bin_lo, c.bin_hi) {
            (Some(lo), Some(hi)) => format!("simulation {} [{lo}, {hi})", c.quantity),
            _ => format!("simulation {}", c.quantity),
        };
        lines.push(Line::new(
            name,
            c.passed,
            format!("|{:.5} - {:.5}| <= {:.3e}", c.simulation, c.solver, c.tolerance),
        ));
    }
    results.insert("events".into(), replica_summary(&outputs));
    results.insert("checks".into(), json!(checks));
    let report = Value::Object(results);
    rec.json("report.json", &report)?;
    Ok((lines, report))
}

fn write_checks(rec: &mut Recorder, checks: &[Check]) -> Result<(), RunError> {
    let path = rec.path("comparison.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|source| IoError::Csv { path: path.clone(), source })?;
    let csv_err = |source| IoError::Csv { path: path.clone(), source };
    w.write_record([
        "quantity",
        "time",
        "bin_lo",
        "bin_hi",
        "simulation",
        "stderr",
        "solver",
        "grid_estimate",
        "tolerance",
        "passed",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for c in checks {
        w.write_record([
            c.quantity.clone(),
            format!("{}", c.time),
            opt(c.bin_lo),
            opt(c.bin_hi),
            format!("{}", c.simulation),
            format!("{}", c.stderr),
            format!("{}", c.solver),
            format!("{}", c.grid_estimate),
            format!("{}", c.tolerance),
            c.passed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| IoError::File { path: path.clone(), source })?;
    rec.plot(
        "comparison.gp",
        "comparison.csv",
        "simulated vs solved pair correlation",
        (3, "r"),
        (5, "simulation"),
        Some((1, "k2")),
    )?;
    Ok(())
}
