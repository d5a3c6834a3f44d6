use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use specdo_core::{run, verify_trace, SimError, Trace, TraceOptions, VerifyReport};
use thiserror::Error;

use crate::builtin::{builtin, UnknownBuiltin};
use crate::scenario_file::{read_scenario_file, ScenarioFileError};
use crate::trace_io::{
    read_trace_dir, sample_entry, write_psi_csv, write_summary, write_trace_csv, Summary,
    TraceIoError, PSI_FILE, SUMMARY_FILE, TRACE_FILE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Unknown(#[from] UnknownBuiltin),
    #[error("scenario rejected: {0}")]
    Scenario(ScenarioFileError),
    #[error("{0}")]
    Simulation(SimError),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error(transparent)]
    TraceIo(#[from] TraceIoError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Unknown(_) => EXIT_USAGE,
            Self::Scenario(e) if e.is_io() => EXIT_IO,
            Self::Scenario(_) | Self::VerifyFailed(_) => EXIT_REJECTED,
            Self::Simulation(SimError::Rejected(_)) => EXIT_REJECTED,
            Self::Simulation(SimError::Diverged { .. } | SimError::InvariantBreach { .. }) => {
                EXIT_DIVERGED
            }
            Self::Simulation(_) => EXIT_USAGE,
            Self::TraceIo(_) | Self::Io { .. } => EXIT_IO,
        }
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> Self {
        Self::Scenario(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        Self::Simulation(e)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub verbose_psi: bool,
    pub sample_at: Vec<f64>,
    pub beta: Option<f64>,
    pub unsafe_beta: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trace: Trace,
    pub summary: Summary,
    pub report: VerifyReport,
}

/// Runs one scenario file and writes `trace.csv`, `summary.txt` and optionally `psi.csv`.
pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let mut file = read_scenario_file(&args.scenario)?;
    if args.beta.is_some() {
        file.beta = args.beta;
    }
    file.unsafe_beta |= args.unsafe_beta;
    let scenario = file.to_scenario()?;
    if let Some(t) = args
        .sample_at
        .iter()
        .find(|t| !(**t >= 0.0 && **t <= scenario.horizon))
    {
        return Err(CliError::Usage(format!(
            "--sample-at {t} is outside [0, {}]",
            scenario.horizon
        )));
    }

    // ψ is always kept in memory so samples can report the observer error.
    let trace = run(&scenario, TraceOptions { record_psi: true })?;
    let report = verify_trace(&trace);
    for check in report
        .checks
        .iter()
        .filter(|c| c.status == specdo_core::CheckStatus::Fail)
    {
        warn!("check {} failed: {}", check.name, check.detail);
    }

    let terminal = sample_entry(
        &trace,
        &scenario.objective,
        &trace.sample_at(scenario.horizon)?,
    );
    let samples = args
        .sample_at
        .iter()
        .map(|&t| {
            Ok(sample_entry(
                &trace,
                &scenario.objective,
                &trace.sample_at(t)?,
            ))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let summary = Summary::new(&trace, terminal, samples, &report);

    fs::create_dir_all(&args.out).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    write_trace_csv(&args.out.join(TRACE_FILE), &trace)?;
    write_summary(&args.out.join(SUMMARY_FILE), &summary)?;
    if args.verbose_psi {
        write_psi_csv(&args.out.join(PSI_FILE), &trace)?;
    }
    info!(
        "{} records written to {}",
        trace.records.len(),
        args.out.display()
    );
    Ok(RunOutcome {
        trace,
        summary,
        report,
    })
}

pub fn cmd_builtin(name: &str) -> Result<&'static str, CliError> {
    Ok(builtin(name)?)
}

/// Re-checks a trace directory from its files; errors when any check fails.
pub fn cmd_verify(dir: &Path) -> Result<VerifyReport, CliError> {
    let (trace, _) = read_trace_dir(dir)?;
    let report = verify_trace(&trace);
    if report.all_passed() {
        Ok(report)
    } else {
        let failed: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.status == specdo_core::CheckStatus::Fail)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        Err(CliError::VerifyFailed(failed.join("; ")))
    }
}

/// Runs each scenario on its own thread into `out/<index>-<file stem>`.
pub fn cmd_batch(
    files: &[PathBuf],
    out: &Path,
    verbose_psi: bool,
) -> Vec<(PathBuf, Result<RunOutcome, CliError>)> {
    std::thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .enumerate()
            .map(|(i, file)| {
                let stem = file
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("scenario{i}"));
                let args = RunArgs {
                    scenario: file.clone(),
                    out: out.join(format!("{i:03}-{stem}")),
                    verbose_psi,
                    ..RunArgs::default()
                };
                s.spawn(move || cmd_run(&args))
            })
            .collect();
        files
            .iter()
            .cloned()
            .zip(
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked")),
            )
            .collect()
    })
}
