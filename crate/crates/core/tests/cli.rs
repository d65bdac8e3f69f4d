//! End-to-end checks of the `ceprecode` binary: exit codes, file outputs,
//! seed precedence and the plot/selftest subcommands.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ceprecode"))
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

#[test]
fn run_writes_results_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    write(
        &cfg,
        "experiment = ser_vs_snr\nN = 8\nM = 2\nsnr_range = 4, 8\nn_symbols = 20\nsolvers = rcg-ci, gd-ir\n",
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("manifest.txt").exists());
    assert!(out.join("ser_vs_snr.csv").exists());
    assert!(out.join("ser_vs_snr_times.csv").exists());
    let csv = std::fs::read_to_string(out.join("ser_vs_snr.csv")).unwrap();
    assert!(csv.contains("solver,snr_db,n_symbols,errors,ser,ci_feasible_fraction,mean_iters"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("rcg-ci")).count(), 2);
}

#[test]
fn config_errors_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, "solvers = rcg-ci, nosuch\n");
    let output = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nosuch"), "stderr was: {stderr}");
}

#[test]
fn missing_config_exits_with_code_2() {
    let output = bin().args(["run", "/nonexistent/path.cfg"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn seed_flag_beats_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    write(
        &cfg,
        "experiment = single_solve\nN = 4\nM = 2\nsolvers = rcg-ci\nmaster_seed = 1\n",
    );
    let out_env = dir.path().join("env");
    let out_flag = dir.path().join("flag");
    let out_base = dir.path().join("base");
    // Environment variable overrides the config seed…
    let status = bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_env)
        .arg("--quiet")
        .env("CEPRECODE_SEED", "7")
        .status()
        .unwrap();
    assert!(status.success());
    // …and the flag wins over the environment.
    let status = bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_flag)
        .arg("--seed")
        .arg("1")
        .arg("--quiet")
        .env("CEPRECODE_SEED", "7")
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_base)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(status.success());

    let read = |p: &Path| std::fs::read_to_string(p.join("single_solve.csv")).unwrap();
    assert_eq!(read(&out_flag), read(&out_base), "--seed 1 must match the config seed");
    assert_ne!(read(&out_env), read(&out_base), "env seed must change the run");

    let manifest = std::fs::read_to_string(out_env.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed = 7"));
    let output = bin()
        .args(["run"])
        .arg(&cfg)
        .env("CEPRECODE_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn plot_emits_gnuplot_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    write(
        &cfg,
        "experiment = ser_vs_snr\nN = 8\nM = 2\nsnr_range = 4, 8\nn_symbols = 10\nsolvers = rcg-ci\n",
    );
    let out = dir.path().join("out");
    assert!(bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap()
        .success());
    let status = bin()
        .args(["plot"])
        .arg(out.join("ser_vs_snr.csv"))
        .args(["--kind", "ser"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("ser_vs_snr.dat").exists());
    assert!(out.join("ser_vs_snr.gp").exists());

    // Schema mismatch is a config-class error (exit 1).
    let bad = dir.path().join("bad.csv");
    write(&bad, "a,b\n1,2\n");
    let output = bin()
        .args(["plot"])
        .arg(&bad)
        .args(["--kind", "ser"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let output = bin().args(["selftest"]).output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("all checks passed"), "stdout: {stdout}");
}
