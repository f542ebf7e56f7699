use std::io::{Read, Write};

use arlda::IterationRecord;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CSV_HEADER: [&str; 17] = [
    "k", "sigma", "omega", "eps_f", "eps_g", "eps_c", "eps_J", "phibar", "dellbar", "snorm", "rho", "accepted",
    "shrinks", "nf", "ng", "nc", "nJ",
];

/// A run-trace row in serializable form. NaN fields become `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRow {
    pub k: usize,
    pub sigma: f64,
    pub omega: f64,
    pub eps_f: f64,
    pub eps_g: f64,
    pub eps_c: f64,
    #[serde(rename = "eps_J")]
    pub eps_j: f64,
    pub eps_start: [f64; 4],
    pub phibar: Option<f64>,
    pub phi_upper: Option<f64>,
    pub dellbar: f64,
    pub dmbar: f64,
    pub snorm: f64,
    pub rho: Option<f64>,
    pub accepted: bool,
    pub shrinks: usize,
    pub f_shrinks: usize,
    pub nf: u64,
    pub ng: u64,
    pub nc: u64,
    #[serde(rename = "nJ")]
    pub nj: u64,
    pub nf_iterate: u64,
    pub nf_trial: u64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub psi_bar: Option<f64>,
    pub psi_bar_trial: Option<f64>,
    pub terminal: bool,
}

fn finite(v: f64) -> Option<f64> {
    if v.is_nan() {
        None
    } else {
        Some(v)
    }
}

impl From<&IterationRecord<f64>> for TraceRow {
    fn from(r: &IterationRecord<f64>) -> Self {
        Self {
            k: r.k,
            sigma: r.sigma,
            omega: r.omega,
            eps_f: r.eps_f,
            eps_g: r.eps_g,
            eps_c: r.eps_c,
            eps_j: r.eps_j,
            eps_start: r.eps_start,
            phibar: finite(r.phibar),
            phi_upper: finite(r.phi_upper),
            dellbar: r.dellbar,
            dmbar: r.dmbar,
            snorm: r.snorm,
            rho: finite(r.rho),
            accepted: r.accepted,
            shrinks: r.shrinks,
            f_shrinks: r.f_shrinks,
            nf: r.nf,
            ng: r.ng,
            nc: r.nc,
            nj: r.nj,
            nf_iterate: r.nf_iterate,
            nf_trial: r.nf_trial,
            x: r.x.clone(),
            s: r.s.clone(),
            psi_bar: finite(r.psi_bar),
            psi_bar_trial: finite(r.psi_bar_trial),
            terminal: r.terminal,
        }
    }
}

impl From<&TraceRow> for IterationRecord<f64> {
    fn from(t: &TraceRow) -> Self {
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        IterationRecord {
            k: t.k,
            sigma: t.sigma,
            omega: t.omega,
            eps_f: t.eps_f,
            eps_g: t.eps_g,
            eps_c: t.eps_c,
            eps_j: t.eps_j,
            eps_start: t.eps_start,
            phibar: nan(t.phibar),
            phi_upper: nan(t.phi_upper),
            dellbar: t.dellbar,
            dmbar: t.dmbar,
            snorm: t.snorm,
            rho: nan(t.rho),
            accepted: t.accepted,
            shrinks: t.shrinks,
            f_shrinks: t.f_shrinks,
            nf: t.nf,
            ng: t.ng,
            nc: t.nc,
            nj: t.nj,
            nf_iterate: t.nf_iterate,
            nf_trial: t.nf_trial,
            x: t.x.clone(),
            s: t.s.clone(),
            psi_bar: nan(t.psi_bar),
            psi_bar_trial: nan(t.psi_bar_trial),
            terminal: t.terminal,
        }
    }
}

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let nan = |v: Option<f64>| fmt_num(v.unwrap_or(f64::NAN));
        w.write_record([
            r.k.to_string(),
            fmt_num(r.sigma),
            fmt_num(r.omega),
            fmt_num(r.eps_f),
            fmt_num(r.eps_g),
            fmt_num(r.eps_c),
            fmt_num(r.eps_j),
            nan(r.phibar),
            fmt_num(r.dellbar),
            fmt_num(r.snorm),
            nan(r.rho),
            u8::from(r.accepted).to_string(),
            r.shrinks.to_string(),
            r.nf.to_string(),
            r.ng.to_string(),
            r.nc.to_string(),
            r.nj.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// The CSV columns of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub k: usize,
    pub sigma: f64,
    pub omega: f64,
    pub eps: [f64; 4],
    pub phibar: f64,
    pub dellbar: f64,
    pub snorm: f64,
    pub rho: f64,
    pub accepted: bool,
    pub shrinks: usize,
    pub counts: [u64; 4],
}

fn parse<T: std::str::FromStr>(field: &str, col: &str, line: u64) -> Result<T, CliError> {
    field.trim().parse().map_err(|_| CliError::Parse(format!("line {line}: cannot parse {col} from '{field}'")))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, CliError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| CliError::Parse(format!("unreadable CSV header: {e}")))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(CliError::Parse(format!(
            "unexpected CSV header '{}', expected '{}'",
            header.iter().collect::<Vec<_>>().join(","),
            CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| CliError::Parse(format!("malformed CSV: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != CSV_HEADER.len() {
            return Err(CliError::Parse(format!(
                "line {line}: expected {} fields, got {}",
                CSV_HEADER.len(),
                rec.len()
            )));
        }
        let f = |i: usize| -> Result<f64, CliError> { parse(&rec[i], CSV_HEADER[i], line) };
        let u = |i: usize| -> Result<u64, CliError> { parse(&rec[i], CSV_HEADER[i], line) };
        let accepted = match rec[11].trim() {
            "1" => true,
            "0" => false,
            other => return Err(CliError::Parse(format!("line {line}: cannot parse accepted from '{other}'"))),
        };
        rows.push(CsvRow {
            k: parse(&rec[0], "k", line)?,
            sigma: f(1)?,
            omega: f(2)?,
            eps: [f(3)?, f(4)?, f(5)?, f(6)?],
            phibar: f(7)?,
            dellbar: f(8)?,
            snorm: f(9)?,
            rho: f(10)?,
            accepted,
            shrinks: parse(&rec[12], "shrinks", line)?,
            counts: [u(13)?, u(14)?, u(15)?, u(16)?],
        });
    }
    Ok(rows)
}

/// Overwrites the CSV-owned columns of `row`; the CSV is authoritative for
/// the columns it carries.
pub fn apply_csv(row: &mut TraceRow, c: &CsvRow) {
    let opt = |v: f64| if v.is_nan() { None } else { Some(v) };
    row.sigma = c.sigma;
    row.omega = c.omega;
    [row.eps_f, row.eps_g, row.eps_c, row.eps_j] = c.eps;
    row.phibar = opt(c.phibar);
    row.dellbar = c.dellbar;
    row.snorm = c.snorm;
    row.rho = opt(c.rho);
    row.accepted = c.accepted;
    row.shrinks = c.shrinks;
    [row.nf, row.ng, row.nc, row.nj] = c.counts;
}
