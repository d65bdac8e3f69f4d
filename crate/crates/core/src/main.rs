//! `ceprecode` — batch experiment runner for constant-envelope precoding.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 internal
//! numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ceprecode::config::parse_config;
use ceprecode::error::Error;
use ceprecode::experiment::run_experiment;
use ceprecode::plot::{emit_plot_data, PlotKind};

#[derive(Parser)]
#[command(
    name = "ceprecode",
    version,
    about = "Constant-envelope precoding experiments (SER sweeps, timing, single solves)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file (or a run manifest).
    Run {
        /// Config file: `key = value` lines, `#` comments.
        config: PathBuf,
        /// Output directory (default: the config's output_path, else `ceprecode-out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override (wins over the CEPRECODE_SEED environment variable).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the Monte-Carlo loops (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Suppress progress output.
        #[arg(long)]
        quiet: bool,
    },
    /// Emit gnuplot data and a script for a result CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Run the built-in invariant suite.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ser,
    Time,
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
            quiet,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(Error::Io(e)),
            };
            let mut spec = match parse_config(&text) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            // Seed precedence: --seed flag, then CEPRECODE_SEED, then config.
            let env_seed = match std::env::var("CEPRECODE_SEED") {
                Ok(v) => match v.parse::<u64>() {
                    Ok(s) => Some(s),
                    Err(_) => {
                        return fail(Error::Config {
                            line: 0,
                            msg: format!("CEPRECODE_SEED is not an integer: `{v}`"),
                        })
                    }
                },
                Err(_) => None,
            };
            if let Some(s) = seed.or(env_seed) {
                spec.master_seed = s;
            }
            if let Some(t) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                    return fail(Error::InvalidArgument(format!("thread pool: {e}")));
                }
            }
            let out_dir = out
                .or_else(|| spec.output_path.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("ceprecode-out"));
            match run_experiment(&spec, &out_dir, quiet) {
                Ok(outputs) => {
                    for f in outputs.files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Plot { csv, kind } => {
            let kind = match kind {
                KindArg::Ser => PlotKind::Ser,
                KindArg::Time => PlotKind::Time,
            };
            match emit_plot_data(&csv, kind) {
                Ok((dat, gp)) => {
                    println!("{}", dat.display());
                    println!("{}", gp.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Selftest => match selftest::run() {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("selftest failed: {e}");
                ExitCode::from(3)
            }
        },
    }
}

mod selftest {
    //! Fast invariant battery behind `ceprecode selftest`.

    use ceprecode::error::{Error, Result};
    use ceprecode::manifold::{
        oblique_random, retract, tangent_project, MEMBERSHIP_TOL, TANGENCY_TOL,
    };
    use ceprecode::objective::{
        eval_g_precoder, euclidean_gradient, evaluate_objective, rotate_channel,
        smoothed_objective_ambient,
    };
    use ceprecode::sim::{draw_symbols, generate_channel};
    use ceprecode::solver::{flop_model, rcg_solve, FlopStage, SolverConfig};
    use ceprecode::streams;
    use rand_distr::{Distribution, StandardNormal};

    fn check(name: &str, ok: bool, detail: String) -> Result<()> {
        if ok {
            println!("selftest {name}: ok");
            Ok(())
        } else {
            println!("selftest {name}: FAILED ({detail})");
            Err(Error::InvalidArgument(format!("{name}: {detail}")))
        }
    }

    pub fn run() -> Result<()> {
        manifold_invariants()?;
        margin_identity()?;
        sandwich()?;
        gradient_check()?;
        scalar_solve()?;
        flops()?;
        println!("selftest: all checks passed");
        Ok(())
    }

    fn random_ambient(n: usize, seed: u64) -> ndarray::Array2<f64> {
        let mut rng = streams::rng_from(&[seed, 0x3e1f]);
        let mut g = ndarray::Array2::zeros((2, n));
        for v in g.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        g
    }

    fn manifold_invariants() -> Result<()> {
        let mut worst_membership: f64 = 0.0;
        let mut worst_tangency: f64 = 0.0;
        for seed in 0..1000u64 {
            let x = oblique_random(8, 1.0, seed)?;
            let g = random_ambient(8, seed ^ 0xa5);
            let t = tangent_project(&x, g.view())?;
            let y = retract(&x, &t, 0.25)?;
            for n in 0..8 {
                let col = y.data().column(n);
                worst_membership =
                    worst_membership.max(((col[0] * col[0] + col[1] * col[1]).sqrt() - 1.0).abs());
                let d = x.data()[[0, n]] * t.data()[[0, n] ] + x.data()[[1, n]] * t.data()[[1, n]];
                worst_tangency = worst_tangency.max(d.abs());
            }
            let z = retract(&x, &t, 0.0)?;
            if z.data() != x.data() {
                return check("manifold", false, "retract at 0 moved the point".into());
            }
        }
        check(
            "manifold",
            worst_membership < MEMBERSHIP_TOL && worst_tangency < TANGENCY_TOL,
            format!("membership {worst_membership:.2e}, tangency {worst_tangency:.2e}"),
        )
    }

    fn margin_identity() -> Result<()> {
        let mut worst: f64 = 0.0;
        for seed in 0..100u64 {
            let h = generate_channel(6, 4, seed)?;
            let s = draw_symbols(4, 4, 1.0, seed ^ 0x11)?;
            let ch = rotate_channel(&h, &s, 1.0)?;
            let x = oblique_random(6, 1.0, seed ^ 0x22)?.to_precoder();
            let g = eval_g_precoder(&x, &ch)?;
            let t = ch.residuals(&x)?;
            for m in 0..4 {
                let lhs = t[m].im.abs() - ch.beta() * t[m].re;
                let rhs = g[2 * m].max(g[2 * m + 1]) + ch.amplitude() * ch.beta();
                worst = worst.max((lhs - rhs).abs());
            }
        }
        check("margin-identity", worst < 1e-10, format!("max deviation {worst:.2e}"))
    }

    fn sandwich() -> Result<()> {
        for seed in 0..100u64 {
            let h = generate_channel(5, 3, seed)?;
            let s = draw_symbols(3, 4, 1.0, seed ^ 0x33)?;
            let ch = rotate_channel(&h, &s, 1.0)?;
            let x = oblique_random(5, 1.0, seed ^ 0x44)?;
            for &eps in &[1.0, 0.1, 0.01] {
                let ev = evaluate_objective(&x, &ch, eps)?;
                let gap = ev.smoothed_value - ev.exact_value;
                if !(gap >= -1e-12 && gap <= eps * 6f64.ln() + 1e-12) {
                    return check("sandwich", false, format!("gap {gap} at ε {eps}"));
                }
            }
        }
        check("sandwich", true, String::new())
    }

    fn gradient_check() -> Result<()> {
        let mut worst: f64 = 0.0;
        for seed in 0..5u64 {
            let h = generate_channel(4, 3, seed)?;
            let s = draw_symbols(3, 4, 1.0, seed ^ 0x55)?;
            let ch = rotate_channel(&h, &s, 1.0)?;
            let x = oblique_random(4, 1.0, seed ^ 0x66)?;
            let grad = euclidean_gradient(&x, &ch, 0.05)?;
            let mut fd = ndarray::Array2::zeros((2, 4));
            let mut pert = x.data().clone();
            let hstep = 1e-6;
            for i in 0..2 {
                for n in 0..4 {
                    let orig = pert[[i, n]];
                    pert[[i, n]] = orig + hstep;
                    let fp = smoothed_objective_ambient(pert.view(), &ch, 0.05)?;
                    pert[[i, n]] = orig - hstep;
                    let fm = smoothed_objective_ambient(pert.view(), &ch, 0.05)?;
                    pert[[i, n]] = orig;
                    fd[[i, n]] = (fp - fm) / (2.0 * hstep);
                }
            }
            let num = (&grad - &fd).iter().map(|d| d * d).sum::<f64>().sqrt();
            let den = fd.iter().map(|d| d * d).sum::<f64>().sqrt();
            worst = worst.max(num / den);
        }
        check("gradient-fd", worst < 1e-5, format!("relative error {worst:.2e}"))
    }

    fn scalar_solve() -> Result<()> {
        let h = ceprecode::sim::ChannelMatrix::new(ndarray::array![[num_complex::Complex64::new(
            1.0, 0.0
        )]])?;
        let s = ceprecode::objective::SymbolVector::from_indices(vec![0], 4, 1.0)?;
        let mut best = f64::INFINITY;
        for seed in 0..5 {
            let cfg = SolverConfig {
                seed,
                grad_tol: 1e-8,
                ..SolverConfig::default()
            };
            let report = rcg_solve(&h, &s, 1.0, &cfg)?;
            best = best.min(*report.exact_trace.last().unwrap());
        }
        check("scalar-solve", (best - (-1.0)).abs() < 1e-3, format!("best exact {best}"))
    }

    fn flops() -> Result<()> {
        let ok = flop_model(64, 20, FlopStage::Gradient)? == 84_840
            && flop_model(64, 20, FlopStage::Direction)? == 16_768
            && flop_model(1, 1, FlopStage::Gradient)? == 64;
        check("flop-model", ok, "reference values".into())
    }
}
