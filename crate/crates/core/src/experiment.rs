//! Experiment execution: runs the configured protocol, writes result CSVs
//! and a re-runnable manifest.
//!
//! Determinism contract: the primary CSVs contain only seed-determined
//! quantities and re-running from the manifest reproduces them byte for
//! byte. Measured wall-clock times go to `*_times.csv` sidecars, which are
//! outside that contract.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{render, ExperimentKind, ExperimentSpec};
use crate::error::Result;
use crate::objective::{evaluate_objective_precoder, rotate_channel};
use crate::sim::{
    draw_symbols, generate_channel, run_ser, run_timing, solve_with_tag, SolverTag,
};
use crate::streams::{self, Purpose};

/// Paths written by a run.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn progress(quiet: bool, start: Instant, msg: &str) {
    if !quiet {
        eprintln!("[{:7.1}s] {msg}", start.elapsed().as_secs_f64());
    }
}

/// Execute the experiment described by `spec`, writing all outputs under
/// `out_dir` (created if needed). Returns the manifest and result files.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path, quiet: bool) -> Result<RunOutputs> {
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let settings = spec.solver_settings();

    if spec.users.iter().any(|&m| m > spec.n_antennas) && !quiet {
        eprintln!(
            "warning: more users than antennas (N = {}, M up to {})",
            spec.n_antennas,
            spec.users.iter().max().unwrap()
        );
    }

    let manifest_path = out_dir.join("manifest.txt");
    let mut manifest = String::new();
    let _ = writeln!(manifest, "# ceprecode run manifest (library version {})", crate::VERSION);
    let _ = writeln!(manifest, "# rerun with: ceprecode run manifest.txt --out <dir>");
    manifest.push_str(&render(spec));
    write_file(&manifest_path, &manifest)?;

    let mut files = vec![manifest_path.clone()];
    match spec.experiment {
        ExperimentKind::SingleSolve => {
            let m = spec.users[0];
            let mut summary = String::from(
                "# ceprecode single_solve schema v1\nsolver,iterations,converged,stalled,exact_objective,smoothed_objective,grad_norm,ci_feasible,flops_estimate\n",
            );
            let ch_seed = streams::mix(&[spec.master_seed, 0, Purpose::Channel as u64]);
            let h = generate_channel(spec.n_antennas, m, ch_seed)?;
            let sym_seed = streams::mix(&[spec.master_seed, 0, Purpose::Symbols as u64]);
            let s = draw_symbols(m, spec.psk_order, spec.amplitude, sym_seed)?;
            let rotated = rotate_channel(&h, &s, spec.power_budget)?;
            for &tag in &spec.solvers {
                let solver_seed =
                    streams::mix(&[spec.master_seed, 0, Purpose::Solver as u64, tag.stream_id()]);
                let report =
                    solve_with_tag(tag, &h, &s, spec.power_budget, &settings, solver_seed)?;
                let eval = evaluate_objective_precoder(
                    &report.x,
                    &rotated,
                    settings.rcg.epsilon.max(1e-12),
                )?;
                let trace_path = out_dir.join(format!("trace_{}.csv", tag.tag()));
                let mut trace = String::from(
                    "# ceprecode single_solve trace schema v1\niter,exact_objective,smoothed_objective,grad_norm\n",
                );
                for i in 0..report.exact_trace.len() {
                    let gn = report
                        .grad_norm_trace
                        .get(i)
                        .map(|g| g.to_string())
                        .unwrap_or_else(|| "nan".to_string());
                    let _ = writeln!(
                        trace,
                        "{},{},{},{}",
                        i, report.exact_trace[i], report.smoothed_trace[i], gn
                    );
                }
                write_file(&trace_path, &trace)?;
                files.push(trace_path);
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{},{},{},{},{}",
                    tag.tag(),
                    report.iterations,
                    report.converged,
                    report.stalled,
                    report.exact_trace.last().unwrap(),
                    report.smoothed_trace.last().unwrap(),
                    report
                        .grad_norm_trace
                        .last()
                        .map(|g| g.to_string())
                        .unwrap_or_else(|| "nan".to_string()),
                    eval.is_ci_feasible(),
                    report.flops_estimate,
                );
                progress(
                    quiet,
                    start,
                    &format!(
                        "single_solve {}: exact {:.6}, {} iterations",
                        tag.display_name(),
                        report.exact_trace.last().unwrap(),
                        report.iterations
                    ),
                );
            }
            let summary_path = out_dir.join("single_solve.csv");
            write_file(&summary_path, &summary)?;
            files.push(summary_path);
        }
        ExperimentKind::SerVsSnr | ExperimentKind::SerVsUsers => {
            let vs_snr = spec.experiment == ExperimentKind::SerVsSnr;
            let name = if vs_snr { "ser_vs_snr" } else { "ser_vs_users" };
            let mut csv = format!(
                "# ceprecode {name} schema v1\nsolver,{},n_symbols,errors,ser,ci_feasible_fraction,mean_iters\n",
                if vs_snr { "snr_db" } else { "users" }
            );
            let mut times = format!(
                "# ceprecode {name} wall-clock sidecar (not covered by the reproducibility contract)\nsolver,{},mean_time_s\n",
                if vs_snr { "snr_db" } else { "users" }
            );
            let points: Vec<(usize, f64)> = if vs_snr {
                spec.snr_db.iter().map(|&snr| (spec.users[0], snr)).collect()
            } else {
                spec.users.iter().map(|&m| (m, spec.snr_db[0])).collect()
            };
            for &tag in &spec.solvers {
                for &(m, snr) in &points {
                    let report = run_ser(
                        tag,
                        spec.n_antennas,
                        m,
                        spec.psk_order,
                        spec.power_budget,
                        snr,
                        spec.n_symbols,
                        spec.master_seed,
                        &settings,
                    )?;
                    let x = if vs_snr { snr.to_string() } else { m.to_string() };
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{}",
                        tag.tag(),
                        x,
                        report.symbols_sent,
                        report.symbol_errors,
                        report.ser(),
                        report.ci_feasible_fraction(),
                        report.mean_iterations,
                    );
                    let _ = writeln!(times, "{},{},{}", tag.tag(), x, report.mean_solve_time_s());
                    progress(
                        quiet,
                        start,
                        &format!(
                            "{name} {} at {}: ser {:.3e} ({} errors)",
                            tag.display_name(),
                            if vs_snr {
                                format!("{snr} dB")
                            } else {
                                format!("M = {m}")
                            },
                            report.ser(),
                            report.symbol_errors
                        ),
                    );
                }
            }
            let csv_path = out_dir.join(format!("{name}.csv"));
            write_file(&csv_path, &csv)?;
            files.push(csv_path);
            let times_path = out_dir.join(format!("{name}_times.csv"));
            write_file(&times_path, &times)?;
            files.push(times_path);
        }
        ExperimentKind::Timing => {
            let mut csv = String::from(
                "# ceprecode timing schema v1\nsolver,users,n_antennas,trials,mean_iters,model_flops\n",
            );
            let mut times = String::from(
                "# ceprecode timing wall-clock sidecar (not covered by the reproducibility contract)\nsolver,users,mean_time_s,std_time_s,mean_per_iteration_s\n",
            );
            for &tag in &spec.solvers {
                let rows = run_timing(
                    tag,
                    spec.n_antennas,
                    &spec.users,
                    spec.trials,
                    spec.master_seed,
                    &settings,
                )?;
                for row in rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        tag.tag(),
                        row.n_users,
                        row.n_antennas,
                        row.trials,
                        row.mean_iterations,
                        row.mean_flops,
                    );
                    let _ = writeln!(
                        times,
                        "{},{},{},{},{}",
                        tag.tag(),
                        row.n_users,
                        row.mean_time_s,
                        row.std_time_s,
                        row.mean_per_iteration_s,
                    );
                    progress(
                        quiet,
                        start,
                        &format!(
                            "timing {} M = {}: {:.3} ms/solve",
                            tag.display_name(),
                            row.n_users,
                            row.mean_time_s * 1e3
                        ),
                    );
                }
            }
            let csv_path = out_dir.join("timing.csv");
            write_file(&csv_path, &csv)?;
            files.push(csv_path);
            let times_path = out_dir.join("timing_times.csv");
            write_file(&times_path, &times)?;
            files.push(times_path);
        }
    }

    Ok(RunOutputs {
        manifest: manifest_path,
        files,
    })
}

/// The six canonical tags, for CLI help text.
pub fn solver_tag_list() -> String {
    SolverTag::ALL
        .iter()
        .map(|t| t.tag())
        .collect::<Vec<_>>()
        .join(", ")
}
