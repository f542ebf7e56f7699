//! Library side of the `arlda` command: configuration, trace files and the
//! `solve`, `sweep` and `audit` commands.

pub mod config;
pub mod trace;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use arlda::solver::{feasibility_check, FeasibilityWarning};
use arlda::{audit_run, AlgoConstants, ArldaError, AuditFinding, ExitStatus, IterationRecord, RunOutput};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, FloorConfig, OutputFormat};
pub use trace::{read_csv, write_csv, CsvRow, TraceRow, CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Solver(#[from] ArldaError),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_STALLED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_AUDIT_FAILED: i32 = 4;

/// Process exit code for a finished run.
pub fn exit_code(status: ExitStatus) -> i32 {
    match status {
        ExitStatus::Exit1 | ExitStatus::Exit2 => EXIT_OK,
        ExitStatus::AccuracyStalled(_) => EXIT_STALLED,
        ExitStatus::MaxIterations | ExitStatus::TargetUnreachable => EXIT_BUDGET,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub h: String,
    pub l_h: f64,
    pub l_g: Option<f64>,
    pub l_j: Option<f64>,
    pub psi_low: Option<f64>,
}

/// Everything about a solve that the CSV trace does not carry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub epsilon: f64,
    pub constants: AlgoConstants<f64>,
    pub problem: ProblemInfo,
    pub oracle: String,
    pub status: String,
    pub warnings: Vec<String>,
    pub report: serde_json::Value,
    pub trace: Vec<TraceRow>,
}

/// Path of the JSON file written next to a CSV trace.
pub fn sidecar_path(trace: &Path) -> PathBuf {
    trace.with_extension("summary.json")
}

/// One solve at a single accuracy.
pub struct Solved {
    pub output: RunOutput<f64>,
    pub summary: RunSummary,
}

pub fn solve_one(cfg: &ExperimentConfig, epsilon: f64) -> Result<Solved, CliError> {
    cfg.validate()?;
    let consts = cfg.constants_for(epsilon)?;
    let problem = cfg.problem()?;
    let floors = cfg.floors();
    let warnings: Vec<FeasibilityWarning> = feasibility_check(&problem.spec, &consts, &floors);
    let evaluator = problem.evaluator(cfg.oracle, cfg.seed, floors)?;
    let oracle = evaluator.oracle_name().to_string();
    let output = arlda::run(&problem.spec, &consts, evaluator)?;
    info!(
        "{} eps={epsilon:e}: {} after {} iterations",
        problem.spec.name,
        output.report.status.as_str(),
        output.report.iterations
    );
    let spec = &problem.spec;
    let summary = RunSummary {
        config: cfg.clone(),
        epsilon,
        constants: consts,
        problem: ProblemInfo {
            name: spec.name.clone(),
            n: spec.n,
            m: spec.m,
            h: spec.h.kind().as_str().to_string(),
            l_h: spec.l_h,
            l_g: spec.l_g,
            l_j: spec.l_j,
            psi_low: spec.psi_low,
        },
        oracle,
        status: output.report.status.as_str().to_string(),
        warnings: warnings.iter().map(|w| w.to_string()).collect(),
        report: serde_json::to_value(&output.report).map_err(|e| CliError::Io(e.to_string()))?,
        trace: output.records.iter().map(TraceRow::from).collect(),
    };
    Ok(Solved { output, summary })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs one solve and writes its trace. Returns the process exit code.
pub fn solve_command(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let eps = cfg.epsilons();
    if eps.len() != 1 {
        return Err(CliError::Config(format!("solve takes exactly one epsilon, got {}", eps.len())));
    }
    let solved = solve_one(cfg, eps[0])?;
    match (&cfg.out, cfg.format) {
        (Some(path), OutputFormat::Csv) => {
            let file =
                File::create(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            write_csv(&solved.summary.trace, BufWriter::new(file))?;
            write_json(&solved.summary, &sidecar_path(path))?;
        }
        (Some(path), OutputFormat::Json) => write_json(&solved.summary, path)?,
        (None, OutputFormat::Csv) => write_csv(&solved.summary.trace, io::stdout().lock())?,
        (None, OutputFormat::Json) => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &solved.summary).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out)?;
        }
    }
    let r = &solved.output.report;
    eprintln!(
        "status={} iterations={} successful={} phi_bar={:e}",
        r.status.as_str(),
        r.iterations,
        r.successful,
        r.phi_bar
    );
    Ok(exit_code(r.status))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub status: String,
    pub iterations: usize,
    pub successful: u64,
    pub evaluations: [u64; 4],
    pub shrinks: u64,
    pub phi_bar: f64,
    pub tau: Option<f64>,
    pub tau_ok: Option<bool>,
    pub sigma_max_ok: Option<bool>,
    pub nu_ok: bool,
    pub nu_global_ok: Option<bool>,
}

impl SweepRow {
    pub fn bounds_ok(&self) -> bool {
        self.nu_ok && [self.tau_ok, self.sigma_max_ok, self.nu_global_ok].iter().all(|b| b.unwrap_or(true))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln(successful)` against `ln(1/ε)` over rows
    /// that met the target.
    pub slope: Option<f64>,
    pub bounds_ok: bool,
}

/// Least-squares slope of `y` on `x`; `None` with fewer than two distinct `x`.
pub fn fitted_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    let eps = cfg.epsilons();
    if eps.len() < 3 {
        return Err(CliError::Config(format!("sweep needs at least 3 epsilon values, got {}", eps.len())));
    }
    let rows = eps
        .par_iter()
        .map(|&e| {
            let s = solve_one(cfg, e)?;
            let r = &s.output.report;
            Ok(SweepRow {
                epsilon: e,
                status: r.status.as_str().to_string(),
                iterations: r.iterations,
                successful: r.successful,
                evaluations: r.ledger.total,
                shrinks: r.ledger.shrink_events,
                phi_bar: r.phi_bar,
                tau: r.audits.tau,
                tau_ok: r.audits.tau_ok,
                sigma_max_ok: r.audits.sigma_max_ok,
                nu_ok: r.audits.nu_ok,
                nu_global_ok: r.audits.nu_global_ok,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == ExitStatus::Exit1.as_str() || r.status == ExitStatus::Exit2.as_str())
        .map(|r| ((1.0 / r.epsilon).ln(), (r.successful.max(1) as f64).ln()))
        .collect();
    let bounds_ok = rows.iter().all(SweepRow::bounds_ok);
    Ok(SweepReport { config: cfg.clone(), slope: fitted_slope(&points), bounds_ok, rows })
}

fn write_sweep_csv<W: Write>(report: &SweepReport, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epsilon",
        "status",
        "iterations",
        "successful",
        "nf",
        "ng",
        "nc",
        "nJ",
        "shrinks",
        "phibar",
        "tau",
        "tau_ok",
    ])?;
    let flag = |b: Option<bool>| b.map_or(String::new(), |b| u8::from(b).to_string());
    for r in &report.rows {
        w.write_record([
            trace::fmt_num(r.epsilon),
            r.status.clone(),
            r.iterations.to_string(),
            r.successful.to_string(),
            r.evaluations[0].to_string(),
            r.evaluations[1].to_string(),
            r.evaluations[2].to_string(),
            r.evaluations[3].to_string(),
            r.shrinks.to_string(),
            trace::fmt_num(r.phi_bar),
            r.tau.map_or(String::new(), trace::fmt_num),
            flag(r.tau_ok),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a sweep over the configured accuracies. With `out` set, writes the
/// JSON report there and a CSV table next to it.
pub fn sweep_command(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let report = sweep(cfg)?;
    match &cfg.out {
        Some(path) => {
            let (json, table) = match cfg.format {
                OutputFormat::Json => (path.clone(), path.with_extension("csv")),
                OutputFormat::Csv => (path.with_extension("json"), path.clone()),
            };
            write_json(&report, &json)?;
            let file =
                File::create(&table).map_err(|e| CliError::Io(format!("cannot create {}: {e}", table.display())))?;
            write_sweep_csv(&report, BufWriter::new(file))?;
        }
        None => match cfg.format {
            OutputFormat::Csv => write_sweep_csv(&report, io::stdout().lock())?,
            OutputFormat::Json => {
                let mut out = io::stdout().lock();
                serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(out)?;
            }
        },
    }
    match report.slope {
        Some(s) => eprintln!("slope={s:.4} bounds_ok={}", report.bounds_ok),
        None => eprintln!("slope=n/a bounds_ok={}", report.bounds_ok),
    }
    Ok(if report.bounds_ok { EXIT_OK } else { EXIT_AUDIT_FAILED })
}

#[derive(Debug, Clone, Deserialize)]
struct SidecarView {
    config: ExperimentConfig,
    epsilon: f64,
    trace: Vec<TraceRow>,
}

/// Loads a run written by `solve`: a JSON summary, or a CSV trace plus its
/// sidecar. CSV columns take precedence over the sidecar copy.
pub fn load_run(path: &Path) -> Result<(ExperimentConfig, f64, Vec<IterationRecord<f64>>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let is_json = text.trim_start().starts_with('{');
    let (view, csv_rows) = if is_json {
        let v: SidecarView =
            serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        (v, None)
    } else {
        let rows = read_csv(text.as_bytes())?;
        let side = sidecar_path(path);
        let side_text = fs::read_to_string(&side)
            .map_err(|e| CliError::Io(format!("cannot read summary {}: {e}", side.display())))?;
        let v: SidecarView =
            serde_json::from_str(&side_text).map_err(|e| CliError::Parse(format!("{}: {e}", side.display())))?;
        (v, Some(rows))
    };
    let mut trace = view.trace;
    if let Some(rows) = csv_rows {
        if rows.len() != trace.len() {
            return Err(CliError::Parse(format!("trace has {} rows but its summary has {}", rows.len(), trace.len())));
        }
        for c in &rows {
            let t = trace
                .iter_mut()
                .find(|t| t.k == c.k)
                .ok_or_else(|| CliError::Parse(format!("iteration {} missing from the summary", c.k)))?;
            trace::apply_csv(t, c);
        }
    }
    Ok((view.config, view.epsilon, trace.iter().map(IterationRecord::from).collect()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub run: PathBuf,
    pub checks: usize,
    pub failures: usize,
    pub findings: Vec<AuditFinding>,
}

pub fn audit(path: &Path) -> Result<AuditReport, CliError> {
    let (cfg, epsilon, records) = load_run(path)?;
    let consts = cfg.constants_for(epsilon)?;
    let problem = cfg.problem()?;
    let findings = audit_run(&problem.spec, &consts, &records);
    let failures = findings.iter().filter(|f| !f.pass).count();
    Ok(AuditReport { run: path.to_path_buf(), checks: findings.len(), failures, findings })
}

/// Audits a stored run. Writes the findings to `out` (or stdout) and returns
/// 4 when any check fails.
pub fn audit_command(run: &Path, out: Option<&Path>) -> Result<i32, CliError> {
    let report = audit(run)?;
    match out {
        Some(p) => write_json(&report, p)?,
        None => {
            let mut o = io::stdout().lock();
            serde_json::to_writer_pretty(&mut o, &report).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(o)?;
        }
    }
    for f in report.findings.iter().filter(|f| !f.pass) {
        eprintln!(
            "FAIL {} at {}: measured {:e} > bound {:e}",
            f.check,
            f.iteration.map_or("run".to_string(), |k| k.to_string()),
            f.measured,
            f.bound
        );
    }
    eprintln!("audit: {} checks, {} failures", report.checks, report.failures);
    Ok(if report.failures == 0 { EXIT_OK } else { EXIT_AUDIT_FAILED })
}
