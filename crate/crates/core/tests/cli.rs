//! End-to-end tests of the command-line interface: exit codes, output
//! files and override handling.

use std::path::Path;
use std::process::Command;

fn chemotax() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chemotax"))
}

const SMALL_RUN: &str = "\
[params]
n = 2
chi = 5
xi = 0
c = 1e-3
gamma = 1.75

[mesh]
kind = ball
radius = 1
h = 0.1

[time]
dt = 1e-4
t_end = 2e-3

[initial]
u0 = gauss2d

[output]
snapshot_every = 10
";

#[test]
fn regime_exit_codes_follow_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL_RUN).unwrap();

    // In-regime parameters: gamma = 1.75 > theta_cap = 1.5 (n=2? no:
    // theta_cap(n=2, m2=1, alpha=1) = 4/3), exit 0.
    let ok = chemotax().args(["regime", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("theta_cap = "));
    assert!(text.contains("gamma_ok = true"));

    // Out of regime: gamma below the threshold, exit 2.
    let bad = chemotax()
        .args(["regime", "--config"])
        .arg(&cfg)
        .args(["--override", "params.gamma=1.2"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));

    // Malformed config: exit 1 with a line number.
    let broken = dir.path().join("broken.cfg");
    std::fs::write(&broken, "[params]\nn = 2\ngamma = not-a-number\n").unwrap();
    let err = chemotax().args(["regime", "--config"]).arg(&broken).output().unwrap();
    assert_eq!(err.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&err.stderr).contains("line 3"));
}

#[test]
fn regime_preset_matches_stated_bounds() {
    // fig2a parameters have theta_cap = 1.5 and gamma = 1.75.
    let out = chemotax().args(["regime", "--preset", "fig2a"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("theta_cap = 1.5"));

    let out = chemotax()
        .args(["regime", "--preset", "fig2a", "--override", "params.gamma=1.4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_the_full_output_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL_RUN).unwrap();
    let out_dir = dir.path().join("out");

    let out = chemotax()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    for file in ["series.csv", "runlog.csv", "verdict.txt", "maxu.svg", "config.echo", "run.log"] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let snapshots: Vec<_> = std::fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("snapshot_"))
        .collect();
    assert!(!snapshots.is_empty(), "no VTK snapshots written");

    // The series re-parses and the verdict mentions the detector knobs.
    let series_text = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    let series = chemotax::diagnostics::TimeSeries::from_csv(&series_text).unwrap();
    assert!(series.len() > 10);
    assert_eq!(series.to_csv(), series_text);
    let verdict = std::fs::read_to_string(out_dir.join("verdict.txt")).unwrap();
    assert!(verdict.contains("blew_up = "));
    assert!(verdict.contains("growth_factor = "));
}

#[test]
fn run_rejects_sweep_configs_and_bad_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = chemotax()
        .args(["run", "--preset", "fig4", "--out"])
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep"));

    let out = chemotax()
        .args(["run", "--preset", "nope", "--out"])
        .arg(dir.path().join("y"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}

#[test]
fn sweep_produces_rows_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        format!("{SMALL_RUN}\n[sweep]\nchi = 0, 5\n"),
    )
    .unwrap();
    let out_dir = dir.path().join("sweep-out");

    let out = chemotax()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .args(["--workers", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("index,chi,blew_up"));
    assert_eq!(csv.lines().count(), 3);
    assert!(out_dir.join("maxu_overlay.svg").exists());
    // Each run received its own directory with the standard file set.
    assert!(Path::new(&out_dir).join("run_000_chi=0").join("series.csv").exists());
    assert!(Path::new(&out_dir).join("run_001_chi=5").join("config.echo").exists());
}

#[test]
fn presets_lists_builtins() {
    let out = chemotax().arg("presets").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["fig1", "fig2a", "fig2b", "fig2c", "fig3", "fig4", "fig5", "equilibrium", "purediff"] {
        assert!(text.contains(name), "missing preset {name}");
    }
}

#[test]
fn overrides_change_run_behavior() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = chemotax()
        .args(["run", "--preset", "equilibrium", "--out"])
        .arg(&out_dir)
        .args(["--override", "time.t_end=5e-3", "--override", "output.record_every=5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let echo = std::fs::read_to_string(out_dir.join("config.echo")).unwrap();
    assert!(echo.contains("t_end = 0.005"));
    assert!(echo.contains("record_every = 5"));
    let series = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    // 5 steps of dt=1e-3 recorded every 5 steps: rows at steps 0 and 5.
    assert_eq!(series.lines().count(), 3);
}
