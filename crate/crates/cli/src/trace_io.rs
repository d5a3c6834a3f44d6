//! Trace CSV and summary TOML, both directions.
//!
//! Floats in the CSV are written with 17 significant digits and the summary
//! uses shortest round-trip formatting, so a trace read back from disk is
//! bit-identical in every column `verify_trace` looks at.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use specdo_core::{
    CertificateBlock, CheckStatus, ProtocolKind, SimulationTrace, StateSample, Trace, TraceContext,
    TraceRecord, VerifyReport,
};
use thiserror::Error;

use crate::scenario_file::{ProtocolName, ScheduleSection};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const PSI_FILE: &str = "psi.csv";

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("missing file {0}")]
    Missing(PathBuf),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceIoError + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            TraceIoError::Missing(path.to_path_buf())
        } else {
            TraceIoError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

fn corrupt(path: &Path, message: impl ToString) -> TraceIoError {
    TraceIoError::Corrupt {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

pub fn trace_header(n: usize) -> Vec<String> {
    let mut h = vec!["k".to_string(), "t".into(), "T_k".into()];
    h.extend((1..=n).map(|i| format!("x_{i}")));
    h.extend(["f", "constraint_residual", "V", "e_psi_norm"].map(String::from));
    h
}

pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<(), TraceIoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| corrupt(path, e);
    w.write_record(trace_header(trace.context.n))
        .map_err(csv_err)?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string(), fmt_f(r.time), fmt_f(r.interval)];
        row.extend(r.x.iter().map(|&v| fmt_f(v)));
        row.push(fmt_f(r.f));
        row.push(fmt_f(r.constraint_residual));
        row.push(fmt_opt(r.v));
        row.push(fmt_opt(r.e_psi_norm));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// `k, t, psi_i_m...` for records that carry the observer vector.
pub fn write_psi_csv(path: &Path, trace: &Trace) -> Result<(), TraceIoError> {
    let n = trace.context.n;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| corrupt(path, e);
    let mut header = vec!["k".to_string(), "t".into()];
    for i in 1..=n {
        header.extend((1..=n).map(|m| format!("psi_{i}_{m}")));
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in &trace.records {
        if let Some(psi) = &r.psi {
            let mut row = vec![r.k.to_string(), fmt_f(r.time)];
            row.extend(psi.iter().map(|&v| fmt_f(v)));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn read_trace_csv(path: &Path, n: usize) -> Result<Vec<TraceRecord<f64>>, TraceIoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| corrupt(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != trace_header(n) {
        return Err(corrupt(
            path,
            format!("unexpected header for n = {n}: {}", header.join(",")),
        ));
    }
    let mut records = Vec::new();
    for (row_idx, row) in rdr.records().enumerate() {
        let line = row_idx + 2;
        let row = row.map_err(|e| corrupt(path, e))?;
        let field = |i: usize| -> Result<f64, TraceIoError> {
            let s = row.get(i).unwrap_or_default();
            s.parse::<f64>().map_err(|_| {
                corrupt(
                    path,
                    format!("line {line}, column {}: bad number `{s}`", header[i]),
                )
            })
        };
        let opt_field = |i: usize| -> Result<Option<f64>, TraceIoError> {
            if row.get(i).unwrap_or_default().is_empty() {
                Ok(None)
            } else {
                field(i).map(Some)
            }
        };
        let k = row
            .get(0)
            .unwrap_or_default()
            .parse::<usize>()
            .map_err(|_| corrupt(path, format!("line {line}: bad step index")))?;
        let x = (0..n)
            .map(|i| field(3 + i))
            .collect::<Result<Vec<_>, _>>()?;
        records.push(TraceRecord {
            k,
            time: field(1)?,
            interval: field(2)?,
            x,
            xi: None,
            f: field(3 + n)?,
            constraint_residual: field(4 + n)?,
            v: opt_field(5 + n)?,
            e_psi_norm: opt_field(6 + n)?,
            psi: None,
        });
    }
    if records.is_empty() {
        return Err(corrupt(path, "no data rows"));
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSection {
    pub protocol: ProtocolName,
    pub n: usize,
    #[serde(rename = "C")]
    pub total: f64,
    pub horizon: f64,
    pub steps: usize,
    pub schedule: ScheduleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSection {
    pub beta: f64,
    pub beta_max: f64,
    pub unsafe_beta: bool,
    pub l0: f64,
    pub l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_bound: Option<f64>,
    pub f_star: f64,
    pub nu_star: f64,
    pub x_star: Vec<f64>,
    #[serde(rename = "V0", default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub t: f64,
    pub x: Vec<f64>,
    pub f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer_error_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub status: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub context: ContextSection,
    pub certificate: CertificateSection,
    pub terminal: SampleEntry,
    #[serde(default)]
    pub samples: Vec<SampleEntry>,
    #[serde(default)]
    pub checks: Vec<CheckEntry>,
}

impl Summary {
    pub fn new(
        trace: &Trace,
        terminal: SampleEntry,
        samples: Vec<SampleEntry>,
        report: &VerifyReport,
    ) -> Self {
        let c = &trace.certificate;
        Self {
            context: ContextSection {
                protocol: trace.context.protocol.into(),
                n: trace.context.n,
                total: trace.context.total,
                horizon: trace.context.horizon,
                steps: trace.records.len(),
                schedule: ScheduleSection::from_schedule(&trace.context.schedule),
            },
            certificate: CertificateSection {
                beta: c.beta,
                beta_max: c.beta_max,
                unsafe_beta: c.unsafe_beta,
                l0: c.l0,
                l: c.l,
                epsilon: c.epsilon,
                rate_factor: c.rate_factor,
                accuracy_bound: c.accuracy_bound,
                f_star: c.f_star,
                nu_star: c.nu_star,
                x_star: c.x_star.clone(),
                v0: trace.records.first().and_then(|r| r.v),
            },
            terminal,
            samples,
            checks: report
                .checks
                .iter()
                .map(|ch| CheckEntry {
                    name: ch.name.to_string(),
                    status: ch.status.as_str().to_string(),
                    detail: ch.detail.clone(),
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary is always representable")
    }
}

/// Builds a summary sample entry, including the observer error when `ψ` is known.
pub fn sample_entry(
    trace: &Trace,
    spec: &specdo_core::Objective,
    s: &StateSample<f64>,
) -> SampleEntry {
    let observer_error_max = s.psi.as_ref().map(|psi| {
        let n = trace.context.n;
        let g = spec.gradient(&s.x);
        psi.iter()
            .enumerate()
            .map(|(idx, p)| (p - g[idx % n]).abs())
            .fold(0.0, f64::max)
    });
    SampleEntry {
        t: s.t,
        f: spec.value(&s.x),
        x: s.x.clone(),
        observer_error_max,
    }
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), TraceIoError> {
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(summary.to_toml().as_bytes())
        .map_err(io_err(path))
}

pub fn read_summary(path: &Path) -> Result<Summary, TraceIoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|e| corrupt(path, e))
}

/// Reassembles a trace from `trace.csv` and `summary.txt` in `dir`.
pub fn read_trace_dir(dir: &Path) -> Result<(Trace, Summary), TraceIoError> {
    let summary_path = dir.join(SUMMARY_FILE);
    let trace_path = dir.join(TRACE_FILE);
    for p in [&trace_path, &summary_path] {
        if !p.is_file() {
            return Err(TraceIoError::Missing(p.clone()));
        }
    }
    let summary = read_summary(&summary_path)?;
    let ctx = &summary.context;
    let schedule = ctx
        .schedule
        .to_schedule()
        .map_err(|e| corrupt(&summary_path, e))?;
    let records = read_trace_csv(&trace_path, ctx.n)?;
    let c = &summary.certificate;
    let trace = SimulationTrace {
        context: TraceContext {
            n: ctx.n,
            protocol: ProtocolKind::from(ctx.protocol),
            total: ctx.total,
            schedule,
            horizon: ctx.horizon,
        },
        certificate: CertificateBlock {
            beta: c.beta,
            beta_max: c.beta_max,
            unsafe_beta: c.unsafe_beta,
            l0: c.l0,
            l: c.l,
            epsilon: c.epsilon,
            rate_factor: c.rate_factor,
            accuracy_bound: c.accuracy_bound,
            f_star: c.f_star,
            nu_star: c.nu_star,
            x_star: c.x_star.clone(),
        },
        records,
        lookahead: None,
    };
    Ok((trace, summary))
}

pub fn status_of(entry: &CheckEntry) -> Option<CheckStatus> {
    match entry.status.as_str() {
        "pass" => Some(CheckStatus::Pass),
        "fail" => Some(CheckStatus::Fail),
        "skipped" => Some(CheckStatus::Skipped),
        _ => None,
    }
}
