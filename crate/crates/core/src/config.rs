//! Plain-text experiment configuration: one `key = value` per line, `#`
//! comments, comma-separated lists, `a:step:b` ranges. An empty file yields
//! the default operating point (N = 64, P_T = 1, QPSK, u = 1).
//!
//! `render` emits every key explicitly; `parse_config(render(spec))` returns
//! the spec unchanged, which is what makes run manifests re-runnable.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::sim::SolverTag;

/// Which experiment the runner executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SingleSolve,
    SerVsSnr,
    SerVsUsers,
    Timing,
}

impl ExperimentKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentKind::SingleSolve => "single_solve",
            ExperimentKind::SerVsSnr => "ser_vs_snr",
            ExperimentKind::SerVsUsers => "ser_vs_users",
            ExperimentKind::Timing => "timing",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "single_solve" => Some(ExperimentKind::SingleSolve),
            "ser_vs_snr" => Some(ExperimentKind::SerVsSnr),
            "ser_vs_users" => Some(ExperimentKind::SerVsUsers),
            "timing" => Some(ExperimentKind::Timing),
            _ => None,
        }
    }
}

/// Solver-tuning overrides carried by a config file. `None` members fall
/// back to the library defaults (including the dimension-scaled gradient
/// tolerance and the u·β-scaled smoothing parameter).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverOverrides {
    pub epsilon: Option<f64>,
    pub grad_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub armijo_initial: Option<f64>,
    pub armijo_contraction: Option<f64>,
    pub armijo_slope: Option<f64>,
    pub max_backtracks: Option<usize>,
    pub pr_plus: Option<bool>,
    pub restart_on_nondescent: Option<bool>,
    pub continuation: Option<bool>,
    pub ceo_iterations: Option<usize>,
    pub ceo_samples: Option<usize>,
    pub ceo_quantile: Option<f64>,
    pub ceo_smoothing: Option<f64>,
    pub gd_iterations: Option<usize>,
    pub relaxed_iterations: Option<usize>,
    pub relaxed_step0: Option<f64>,
    pub restarts: Option<usize>,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub solvers: Vec<SolverTag>,
    pub n_antennas: usize,
    /// User counts; a single entry for everything but `ser_vs_users`.
    pub users: Vec<usize>,
    pub psk_order: usize,
    pub power_budget: f64,
    pub amplitude: f64,
    /// SNR grid in dB; a single entry for everything but `ser_vs_snr`.
    pub snr_db: Vec<f64>,
    /// Monte-Carlo slots per operating point.
    pub n_symbols: u64,
    /// Solves per timing cell.
    pub trials: u64,
    pub master_seed: u64,
    /// Channel coherence in slots.
    pub coherence: usize,
    pub output_path: Option<String>,
    pub solver: SolverOverrides,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::SingleSolve,
            solvers: vec![SolverTag::RcgCi],
            n_antennas: 64,
            users: vec![20],
            psk_order: 4,
            power_budget: 1.0,
            amplitude: 1.0,
            snr_db: vec![8.0],
            n_symbols: 1000,
            trials: 20,
            master_seed: 1,
            coherence: 1,
            output_path: None,
            solver: SolverOverrides::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config {
        line,
        msg: format!("key `{key}`: cannot parse `{v}`"),
    })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(Error::Config {
            line,
            msg: format!("key `{key}`: expected a boolean, got `{other}`"),
        }),
    }
}

/// Comma list or `a:step:b` range of numbers.
fn parse_f64_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    let v = v.trim();
    if let Some((first, rest)) = v.split_once(':') {
        let (step, last) = rest.split_once(':').ok_or_else(|| Error::Config {
            line,
            msg: format!("key `{key}`: range must be start:step:end"),
        })?;
        let (a, s, b): (f64, f64, f64) = (
            parse_num(line, key, first)?,
            parse_num(line, key, step)?,
            parse_num(line, key, last)?,
        );
        if !(s > 0.0) || b < a {
            return Err(Error::Config {
                line,
                msg: format!("key `{key}`: inconsistent range {a}:{s}:{b}"),
            });
        }
        let mut out = Vec::new();
        let mut x = a;
        while x <= b + 1e-9 {
            out.push(x);
            x += s;
        }
        return Ok(out);
    }
    v.split(',')
        .map(|p| parse_num(line, key, p))
        .collect::<Result<Vec<f64>>>()
        .and_then(|list| {
            if list.is_empty() {
                Err(Error::Config {
                    line,
                    msg: format!("key `{key}`: empty list"),
                })
            } else {
                Ok(list)
            }
        })
}

fn parse_usize_list(line: usize, key: &str, v: &str) -> Result<Vec<usize>> {
    parse_f64_list(line, key, v)?
        .into_iter()
        .map(|x| {
            if x.fract() != 0.0 || x < 0.0 {
                Err(Error::Config {
                    line,
                    msg: format!("key `{key}`: expected integers, got {x}"),
                })
            } else {
                Ok(x as usize)
            }
        })
        .collect()
}

/// Parse a configuration (or manifest) into a validated spec.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(Error::Config {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
        match key {
            "experiment" => {
                spec.experiment = ExperimentKind::parse(value).ok_or_else(|| Error::Config {
                    line,
                    msg: format!(
                        "unknown experiment `{value}` (expected single_solve, ser_vs_snr, ser_vs_users or timing)"
                    ),
                })?;
            }
            "solvers" => {
                spec.solvers = value
                    .split(',')
                    .map(|t| {
                        SolverTag::parse(t).map_err(|_| Error::Config {
                            line,
                            msg: format!("unknown solver tag `{}`", t.trim()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if spec.solvers.is_empty() {
                    return Err(Error::Config {
                        line,
                        msg: "solvers list is empty".into(),
                    });
                }
            }
            "N" => spec.n_antennas = parse_num(line, key, value)?,
            "M" => spec.users = vec![parse_num(line, key, value)?],
            "M_range" => spec.users = parse_usize_list(line, key, value)?,
            "L" => spec.psk_order = parse_num(line, key, value)?,
            "P_T" => spec.power_budget = parse_num(line, key, value)?,
            "u" => spec.amplitude = parse_num(line, key, value)?,
            "snr_db" => spec.snr_db = vec![parse_num(line, key, value)?],
            "snr_range" => spec.snr_db = parse_f64_list(line, key, value)?,
            "n_symbols" => spec.n_symbols = parse_num(line, key, value)?,
            "trials" => spec.trials = parse_num(line, key, value)?,
            "master_seed" => spec.master_seed = parse_num(line, key, value)?,
            "coherence" => spec.coherence = parse_num(line, key, value)?,
            "output_path" => spec.output_path = Some(value.to_string()),
            "epsilon" => spec.solver.epsilon = Some(parse_num(line, key, value)?),
            "grad_tol" => {
                spec.solver.grad_tol = if value == "auto" {
                    None
                } else {
                    Some(parse_num(line, key, value)?)
                }
            }
            "max_iters" => spec.solver.max_iters = Some(parse_num(line, key, value)?),
            "armijo_initial" => spec.solver.armijo_initial = Some(parse_num(line, key, value)?),
            "armijo_contraction" => {
                spec.solver.armijo_contraction = Some(parse_num(line, key, value)?)
            }
            "armijo_slope" => spec.solver.armijo_slope = Some(parse_num(line, key, value)?),
            "max_backtracks" => spec.solver.max_backtracks = Some(parse_num(line, key, value)?),
            "pr_plus" => spec.solver.pr_plus = Some(parse_bool(line, key, value)?),
            "restart_on_nondescent" => {
                spec.solver.restart_on_nondescent = Some(parse_bool(line, key, value)?)
            }
            "continuation" => spec.solver.continuation = Some(parse_bool(line, key, value)?),
            "ceo_iterations" => spec.solver.ceo_iterations = Some(parse_num(line, key, value)?),
            "ceo_samples" => spec.solver.ceo_samples = Some(parse_num(line, key, value)?),
            "ceo_quantile" => spec.solver.ceo_quantile = Some(parse_num(line, key, value)?),
            "ceo_smoothing" => spec.solver.ceo_smoothing = Some(parse_num(line, key, value)?),
            "gd_iterations" => spec.solver.gd_iterations = Some(parse_num(line, key, value)?),
            "relaxed_iterations" => {
                spec.solver.relaxed_iterations = Some(parse_num(line, key, value)?)
            }
            "relaxed_step0" => spec.solver.relaxed_step0 = Some(parse_num(line, key, value)?),
            "restarts" => spec.solver.restarts = Some(parse_num(line, key, value)?),
            other => {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }
    validate(&spec)?;
    Ok(spec)
}

fn validate(spec: &ExperimentSpec) -> Result<()> {
    let bad = |msg: String| Error::Config { line: 0, msg };
    if spec.n_antennas == 0 {
        return Err(bad("N must be at least 1".into()));
    }
    if spec.users.is_empty() || spec.users.contains(&0) {
        return Err(bad("user counts must be positive".into()));
    }
    if spec.psk_order < 2 {
        return Err(bad(format!("L must be at least 2, got {}", spec.psk_order)));
    }
    if !(spec.power_budget > 0.0) {
        return Err(bad("P_T must be positive".into()));
    }
    if !(spec.amplitude > 0.0) {
        return Err(bad("u must be positive".into()));
    }
    if spec.snr_db.is_empty() {
        return Err(bad("SNR grid is empty".into()));
    }
    if spec.n_symbols == 0 {
        return Err(bad("n_symbols must be at least 1".into()));
    }
    if spec.trials == 0 {
        return Err(bad("trials must be at least 1".into()));
    }
    if spec.coherence == 0 {
        return Err(bad("coherence must be at least 1".into()));
    }
    if spec.solvers.is_empty() {
        return Err(bad("solvers list is empty".into()));
    }
    Ok(())
}

fn fmt_f64_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn fmt_usize_list(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Emit a config file that parses back to exactly this spec. Every key is
/// written out, so rendered manifests are self-contained.
pub fn render(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("experiment", spec.experiment.tag().to_string());
    kv(
        "solvers",
        spec.solvers
            .iter()
            .map(|t| t.tag().to_string())
            .collect::<Vec<_>>()
            .join(", "),
    );
    kv("N", spec.n_antennas.to_string());
    if spec.users.len() == 1 {
        kv("M", spec.users[0].to_string());
    } else {
        kv("M_range", fmt_usize_list(&spec.users));
    }
    kv("L", spec.psk_order.to_string());
    kv("P_T", spec.power_budget.to_string());
    kv("u", spec.amplitude.to_string());
    if spec.snr_db.len() == 1 {
        kv("snr_db", spec.snr_db[0].to_string());
    } else {
        kv("snr_range", fmt_f64_list(&spec.snr_db));
    }
    kv("n_symbols", spec.n_symbols.to_string());
    kv("trials", spec.trials.to_string());
    kv("master_seed", spec.master_seed.to_string());
    kv("coherence", spec.coherence.to_string());
    if let Some(path) = &spec.output_path {
        kv("output_path", path.clone());
    }
    let s = &spec.solver;
    if let Some(v) = s.epsilon {
        kv("epsilon", v.to_string());
    }
    if let Some(v) = s.grad_tol {
        kv("grad_tol", v.to_string());
    }
    if let Some(v) = s.max_iters {
        kv("max_iters", v.to_string());
    }
    if let Some(v) = s.armijo_initial {
        kv("armijo_initial", v.to_string());
    }
    if let Some(v) = s.armijo_contraction {
        kv("armijo_contraction", v.to_string());
    }
    if let Some(v) = s.armijo_slope {
        kv("armijo_slope", v.to_string());
    }
    if let Some(v) = s.max_backtracks {
        kv("max_backtracks", v.to_string());
    }
    if let Some(v) = s.pr_plus {
        kv("pr_plus", v.to_string());
    }
    if let Some(v) = s.restart_on_nondescent {
        kv("restart_on_nondescent", v.to_string());
    }
    if let Some(v) = s.continuation {
        kv("continuation", v.to_string());
    }
    if let Some(v) = s.ceo_iterations {
        kv("ceo_iterations", v.to_string());
    }
    if let Some(v) = s.ceo_samples {
        kv("ceo_samples", v.to_string());
    }
    if let Some(v) = s.ceo_quantile {
        kv("ceo_quantile", v.to_string());
    }
    if let Some(v) = s.ceo_smoothing {
        kv("ceo_smoothing", v.to_string());
    }
    if let Some(v) = s.gd_iterations {
        kv("gd_iterations", v.to_string());
    }
    if let Some(v) = s.relaxed_iterations {
        kv("relaxed_iterations", v.to_string());
    }
    if let Some(v) = s.relaxed_step0 {
        kv("relaxed_step0", v.to_string());
    }
    if let Some(v) = s.restarts {
        kv("restarts", v.to_string());
    }
    out
}

impl ExperimentSpec {
    /// Resolve the overrides into a concrete solver-settings bundle.
    pub fn solver_settings(&self) -> crate::sim::SolverSettings {
        let mut settings = crate::sim::SolverSettings::default();
        let o = &self.solver;
        if let Some(v) = o.epsilon {
            settings.rcg.epsilon = v;
            settings.relaxed.epsilon = v;
            settings.auto_epsilon = false;
        }
        if let Some(v) = o.grad_tol {
            settings.rcg.grad_tol = v;
            settings.auto_grad_tol = false;
        }
        if let Some(v) = o.max_iters {
            settings.rcg.max_iters = v;
        }
        if let Some(v) = o.armijo_initial {
            settings.rcg.armijo_initial = v;
        }
        if let Some(v) = o.armijo_contraction {
            settings.rcg.armijo_contraction = v;
        }
        if let Some(v) = o.armijo_slope {
            settings.rcg.armijo_slope = v;
        }
        if let Some(v) = o.max_backtracks {
            settings.rcg.max_backtracks = v;
        }
        if let Some(v) = o.pr_plus {
            settings.rcg.pr_plus = v;
        }
        if let Some(v) = o.restart_on_nondescent {
            settings.rcg.restart_on_nondescent = v;
        }
        if let Some(v) = o.continuation {
            settings.rcg.continuation = v;
        }
        if let Some(v) = o.ceo_iterations {
            settings.ceo.iterations = v;
        }
        if let Some(v) = o.ceo_samples {
            settings.ceo.samples = v;
        }
        if let Some(v) = o.ceo_quantile {
            settings.ceo.quantile = v;
        }
        if let Some(v) = o.ceo_smoothing {
            settings.ceo.smoothing = v;
        }
        if let Some(v) = o.gd_iterations {
            settings.gd_iterations = v;
        }
        if let Some(v) = o.relaxed_iterations {
            settings.relaxed.iterations = v;
        }
        if let Some(v) = o.relaxed_step0 {
            settings.relaxed.step0 = v;
        }
        if let Some(v) = o.restarts {
            settings.restarts = v;
        }
        settings.coherence = self.coherence;
        settings
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_yields_the_default_operating_point() {
        let spec = parse_config("").unwrap();
        assert_eq!(spec.n_antennas, 64);
        assert_eq!(spec.power_budget, 1.0);
        assert_eq!(spec.psk_order, 4);
        assert_eq!(spec.amplitude, 1.0);
        assert_eq!(spec, ExperimentSpec::default());
    }

    #[test]
    fn snr_range_expands() {
        let spec = parse_config("snr_range = 0:2:12").unwrap();
        assert_eq!(spec.snr_db, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
    }

    #[test]
    fn unknown_solver_is_named_in_the_error() {
        let err = parse_config("solvers = rcg-ci, nosuch").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains("nosuch"), "message was `{msg}`");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_line() {
        let err = parse_config("N = 64\nbogus_key = 3").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus_key"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_config("N = sixty-four").is_err());
        assert!(parse_config("snr_range = 12:2:0").is_err());
        assert!(parse_config("M = 0").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let spec = parse_config("# a comment\n\nM = 12  # trailing comment\n").unwrap();
        assert_eq!(spec.users, vec![12]);
    }

    #[test]
    fn render_round_trips() {
        let mut spec = ExperimentSpec::default();
        spec.experiment = ExperimentKind::SerVsUsers;
        spec.solvers = vec![SolverTag::RcgCi, SolverTag::GdIr, SolverTag::RelaxedCi];
        spec.users = vec![12, 16, 20, 24];
        spec.snr_db = vec![8.0];
        spec.n_symbols = 500;
        spec.master_seed = 99;
        spec.solver.epsilon = Some(0.02);
        spec.solver.ceo_iterations = Some(300);
        spec.solver.pr_plus = Some(false);
        spec.output_path = Some("out".to_string());
        let text = render(&spec);
        let parsed = parse_config(&text).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn render_round_trips_randomized_specs() {
        use crate::streams;
        use rand::Rng;
        for seed in 0..200u64 {
            let mut rng = streams::rng_from(&[seed, 0xcf9]);
            let mut spec = ExperimentSpec::default();
            spec.experiment = [
                ExperimentKind::SingleSolve,
                ExperimentKind::SerVsSnr,
                ExperimentKind::SerVsUsers,
                ExperimentKind::Timing,
            ][rng.random_range(0..4)];
            let n_solvers = rng.random_range(1..=6);
            spec.solvers = SolverTag::ALL[..n_solvers].to_vec();
            spec.n_antennas = rng.random_range(1..256);
            spec.users = (0..rng.random_range(1..4))
                .map(|_| rng.random_range(1..32))
                .collect();
            spec.psk_order = [2, 3, 4, 8][rng.random_range(0..4)];
            spec.power_budget = rng.random_range(0.1..8.0);
            spec.amplitude = rng.random_range(0.1..3.0);
            spec.snr_db = (0..rng.random_range(1..5))
                .map(|_| rng.random_range(-5.0..20.0))
                .collect();
            spec.n_symbols = rng.random_range(1..100_000);
            spec.master_seed = rng.random();
            spec.coherence = rng.random_range(1..10);
            if rng.random_bool(0.5) {
                spec.output_path = Some(format!("dir{seed}"));
            }
            if rng.random_bool(0.5) {
                spec.solver.epsilon = Some(rng.random_range(1e-4..1.0));
            }
            if rng.random_bool(0.5) {
                spec.solver.grad_tol = Some(rng.random_range(1e-9..1e-3));
            }
            if rng.random_bool(0.5) {
                spec.solver.pr_plus = Some(rng.random_bool(0.5));
            }
            if rng.random_bool(0.5) {
                spec.solver.ceo_samples = Some(rng.random_range(1..1000));
            }
            if rng.random_bool(0.5) {
                spec.solver.restarts = Some(rng.random_range(1..8));
            }
            let parsed = parse_config(&render(&spec)).unwrap();
            assert_eq!(parsed, spec, "round trip failed for seed {seed}");
        }
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_config("N = 8\nN = 16\n").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("duplicate"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn users_sweep_protocol_parses() {
        let text = "experiment = ser_vs_users\nN = 64\nsnr_db = 8\nM_range = 12:4:24\n";
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.users, vec![12, 16, 20, 24]);
        assert_eq!(spec.snr_db, vec![8.0]);
        assert_eq!(spec.n_antennas, 64);
    }
}
