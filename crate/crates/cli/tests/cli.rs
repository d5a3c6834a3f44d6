use std::fs;
use std::path::Path;
use std::process::Command;

use specdo_cli::builtin::{builtin, NAMES};
use specdo_cli::commands::{EXIT_DIVERGED, EXIT_IO, EXIT_REJECTED, EXIT_USAGE};
use specdo_cli::trace_io::{read_trace_dir, TRACE_FILE};
use specdo_cli::{
    cmd_run, cmd_verify, emit_scenario, parse_scenario, CliError, RunArgs, ScenarioFileError,
};
use specdo_core::{verify_trace, Objective};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specdo"))
}

fn write_builtin(dir: &Path, name: &str) -> std::path::PathBuf {
    let p = dir.join(format!("{name}.toml"));
    fs::write(&p, builtin(name).unwrap()).unwrap();
    p
}

#[test]
fn builtins_parse_and_round_trip() {
    for name in NAMES {
        let sc = parse_scenario(builtin(name).unwrap()).unwrap();
        let again = parse_scenario(&emit_scenario(&sc).unwrap()).unwrap();
        assert_eq!(sc, again, "{name}");
    }
    let sc = parse_scenario(builtin("dispatch3-directed").unwrap()).unwrap();
    assert_eq!(sc.total, 420.0);
    let Objective::Quadratic(q) = &sc.objective else {
        panic!("quadratic expected")
    };
    let coeffs: Vec<_> = q.iter().map(|q| (q.a, q.b, q.c)).collect();
    assert_eq!(
        coeffs,
        vec![
            (0.096, 1.22, 51.0),
            (0.072, 3.41, 31.0),
            (0.105, 2.53, 78.0)
        ]
    );
    assert_eq!(
        sc.schedule,
        specdo_core::Schedule::truncated(2.0, 80, 0.01).unwrap()
    );
    assert_eq!(sc.horizon, 5.0);
}

#[test]
fn weighted_edges_round_trip() {
    let text = r#"
protocol = "directed"
horizon = 1.0
x0 = [1.0, 2.0]
[graph]
n = 2
edges = [[1, 2, 0.5], [2, 1]]
[objective]
quadratic = [{ a = 1.0, b = 0.0, c = 0.0 }, { a = 2.0, b = 1.0, c = 0.0 }]
[schedule]
kind = "power"
T_c = 2.0
b = 0.5
"#;
    let sc = parse_scenario(text).unwrap();
    assert_eq!(sc.topology.adjacency()[(1, 0)], 0.5);
    assert_eq!(parse_scenario(&emit_scenario(&sc).unwrap()).unwrap(), sc);
}

#[test]
fn semantic_errors_name_the_field() {
    let base = builtin("dispatch3-directed").unwrap();
    let err = parse_scenario(&base.replace("C = 420.0", "C = 400.0")).unwrap_err();
    assert!(
        matches!(err, ScenarioFileError::Semantic { field: "C", .. }),
        "{err}"
    );

    let undirected = base.replace("protocol = \"directed\"", "protocol = \"undirected\"");
    let err = parse_scenario(&undirected).unwrap_err();
    assert!(err.to_string().contains("symmetric"), "{err}");

    let chain = base.replace(
        "[[1, 2], [2, 1], [2, 3], [3, 2], [3, 1]]",
        "[[1, 2], [2, 3]]",
    );
    let err = parse_scenario(&chain).unwrap_err();
    assert!(err.to_string().contains("strongly connected"), "{err}");

    let err = parse_scenario(&base.replace("k_eps = 80\n", "")).unwrap_err();
    assert!(err.to_string().contains("schedule.k_eps"), "{err}");

    let err = parse_scenario(&base.replace("horizon = 5.0", "horizon = \"five\"")).unwrap_err();
    assert!(matches!(err, ScenarioFileError::Syntax(_)));
    assert!(err.to_string().contains("line"), "{err}");
}

#[test]
fn verify_from_files_matches_in_memory_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for name in NAMES {
        let out = dir.path().join(name);
        let outcome = cmd_run(&RunArgs {
            scenario: write_builtin(dir.path(), name),
            out: out.clone(),
            sample_at: vec![1.0],
            ..RunArgs::default()
        })
        .unwrap();
        let (reloaded, summary) = read_trace_dir(&out).unwrap();
        assert_eq!(verify_trace(&reloaded), outcome.report, "{name}");
        assert_eq!(summary, outcome.summary);
        for (a, b) in reloaded.records.iter().zip(&outcome.trace.records) {
            assert_eq!((a.time, &a.x, a.f, a.v), (b.time, &b.x, b.f, b.v));
        }
        assert!(cmd_verify(&out).is_ok(), "{name}");
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_builtin(dir.path(), "dispatch3-directed");
    let mut bytes = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}"));
        cmd_run(&RunArgs {
            scenario: scenario.clone(),
            out: out.clone(),
            verbose_psi: true,
            sample_at: vec![2.0, 5.0],
            ..RunArgs::default()
        })
        .unwrap();
        bytes.push(["trace.csv", "summary.txt", "psi.csv"].map(|f| fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn tampered_and_missing_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    cmd_run(&RunArgs {
        scenario: write_builtin(dir.path(), "dispatch3-directed"),
        out: out.clone(),
        ..RunArgs::default()
    })
    .unwrap();
    let path = out.join(TRACE_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[100].split(',').map(String::from).collect();
    cols[7] = "1.0e-3".into(); // constraint_residual for n = 3
    lines[100] = cols.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let err = cmd_verify(&out).unwrap_err();
    assert!(matches!(err, CliError::VerifyFailed(_)));
    assert_eq!(err.exit_code(), EXIT_REJECTED);

    lines[50] = "garbage".into();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert_eq!(cmd_verify(&out).unwrap_err().exit_code(), EXIT_IO);

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let err = cmd_verify(&empty).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_IO);
    assert!(err.to_string().contains("missing"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_builtin(dir.path(), "dispatch3-directed");
    let out = dir.path().join("out");

    let ok = bin()
        .args([
            "run",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--sample-at",
            "2.0,5.0",
        ])
        .output()
        .unwrap();
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("f = 6412.1873"), "{summary}");
    assert_eq!(
        bin()
            .args(["verify", out.to_str().unwrap()])
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );

    let diverge = bin()
        .args([
            "run",
            scenario.to_str().unwrap(),
            "--out",
            dir.path().join("d").to_str().unwrap(),
        ])
        .args(["--beta", "100", "--unsafe"])
        .output()
        .unwrap();
    assert_eq!(diverge.status.code(), Some(EXIT_DIVERGED));

    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        builtin("dispatch3-directed").unwrap().replace(
            "[[1, 2], [2, 1], [2, 3], [3, 2], [3, 1]]",
            "[[1, 2], [2, 1]]",
        ),
    )
    .unwrap();
    let rejected = bin()
        .args([
            "run",
            bad.to_str().unwrap(),
            "--out",
            dir.path().join("b").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(rejected.status.code(), Some(EXIT_REJECTED));
    assert!(String::from_utf8_lossy(&rejected.stderr).contains("strongly connected"));

    let unknown = bin().args(["builtin", "nope"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("dispatch3-directed"));

    let printed = bin()
        .args(["builtin", "two-agent-undirected"])
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8(printed.stdout).unwrap(),
        builtin("two-agent-undirected").unwrap()
    );

    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(
        bin().arg("run").output().unwrap().status.code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(
        bin()
            .args(["verify", dir.path().join("nowhere").to_str().unwrap()])
            .output()
            .unwrap()
            .status
            .code(),
        Some(EXIT_IO)
    );
}

#[test]
fn batch_runs_each_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = NAMES.iter().map(|n| write_builtin(dir.path(), n)).collect();
    let results = specdo_cli::cmd_batch(&files, &dir.path().join("batch"), false);
    assert_eq!(results.len(), 3);
    for (file, r) in results {
        assert!(r.is_ok(), "{}", file.display());
    }
    assert!(dir
        .path()
        .join("batch/000-dispatch3-directed/trace.csv")
        .is_file());
}
