use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use specdo_cli::commands::{EXIT_OK, EXIT_USAGE};
use specdo_cli::{cmd_batch, cmd_builtin, cmd_run, cmd_verify, CliError, RunArgs};

/// Distributed resource allocation with a specified settling time.
#[derive(Debug, Parser)]
#[command(name = "specdo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario file and write trace.csv and summary.txt.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full observer state to psi.csv.
        #[arg(long)]
        verbose_psi: bool,
        /// Comma-separated times to sample the continuous-time state at.
        #[arg(long, value_delimiter = ',')]
        sample_at: Vec<f64>,
        /// Override the step size from the file.
        #[arg(long)]
        beta: Option<f64>,
        /// Allow a step size above the certified bound.
        #[arg(long = "unsafe")]
        unsafe_beta: bool,
    },
    /// Print a builtin scenario file.
    Builtin { name: String },
    /// Re-check a run directory from its files.
    Verify { dir: PathBuf },
    /// Run several scenario files concurrently, one output directory each.
    Batch {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        verbose_psi: bool,
    },
}

fn report(e: &CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_USAGE as u8
            } else {
                EXIT_OK as u8
            });
        }
    };
    let code = match cli.command {
        Command::Run {
            scenario,
            out,
            verbose_psi,
            sample_at,
            beta,
            unsafe_beta,
        } => {
            let args = RunArgs {
                scenario,
                out,
                verbose_psi,
                sample_at,
                beta,
                unsafe_beta,
            };
            match cmd_run(&args) {
                Ok(o) => {
                    let last = &o.summary.terminal;
                    println!("x({}) = {:?}", last.t, last.x);
                    println!("f = {}  (f* = {})", last.f, o.summary.certificate.f_star);
                    for s in &o.summary.samples {
                        println!("f({}) = {}", s.t, s.f);
                    }
                    EXIT_OK
                }
                Err(e) => report(&e),
            }
        }
        Command::Builtin { name } => match cmd_builtin(&name) {
            Ok(text) => {
                print!("{text}");
                EXIT_OK
            }
            Err(e) => report(&e),
        },
        Command::Verify { dir } => match cmd_verify(&dir) {
            Ok(r) => {
                for c in &r.checks {
                    println!("{:<28} {:<8} {}", c.name, c.status.as_str(), c.detail);
                }
                EXIT_OK
            }
            Err(e) => report(&e),
        },
        Command::Batch {
            scenarios,
            out,
            verbose_psi,
        } => {
            let mut worst = EXIT_OK;
            for (file, result) in cmd_batch(&scenarios, &out, verbose_psi) {
                match result {
                    Ok(o) => println!("{}: ok, f = {}", file.display(), o.summary.terminal.f),
                    Err(e) => {
                        println!("{}: {e}", file.display());
                        worst = worst.max(e.exit_code());
                    }
                }
            }
            worst
        }
    };
    ExitCode::from(code as u8)
}
