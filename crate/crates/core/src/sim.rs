//! MU-MISO downlink simulation: channel and symbol sourcing, transmission,
//! PSK detection, and the Monte-Carlo SER/timing loops behind the
//! experiment runner.
//!
//! Reproducibility contract: every slot derives its channel, symbol and
//! noise streams from `(master_seed, slot, purpose)` — independent of the
//! solver tag — so paired comparisons between solvers see identical
//! realizations. Solver-internal randomness additionally mixes the tag.
//! Slots run in parallel; aggregation is by integer sums and is therefore
//! independent of scheduling.

use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::baselines::{self, CeoObjective};
use crate::error::{Error, Result};
use crate::objective::{self, SymbolVector};
use crate::solver::{self, SolveReport, SolverConfig};
use crate::streams::{self, Purpose};

/// Complex N×M downlink channel; column m is user m's channel vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    data: Array2<Complex64>,
}

impl ChannelMatrix {
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidDimension(format!(
                "channel must be N×M with N, M ≥ 1, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("channel has non-finite entries".into()));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn n_antennas(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.data.ncols()
    }

    /// More users than antennas is allowed but worth flagging.
    pub fn is_overloaded(&self) -> bool {
        self.n_users() > self.n_antennas()
    }

    /// y = Hᵀx (noiseless part of the downlink).
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n_antennas() {
            return Err(Error::InvalidDimension(format!(
                "precoder has length {}, channel has {} antennas",
                x.len(),
                self.n_antennas()
            )));
        }
        Ok((0..self.n_users())
            .map(|m| {
                (0..self.n_antennas())
                    .map(|n| self.data[[n, m]] * x[n])
                    .sum()
            })
            .collect())
    }
}

/// Per-user complex Gaussian noise of power N₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    n0: f64,
}

impl NoiseModel {
    pub fn new(n0: f64) -> Result<Self> {
        if !(n0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise power must be positive, got {n0}"
            )));
        }
        Ok(Self { n0 })
    }

    /// N₀ from SNR = P_T/N₀.
    pub fn from_snr_db(power_budget: f64, snr_db: f64) -> Result<Self> {
        Self::new(power_budget / 10f64.powf(snr_db / 10.0))
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn snr_db(&self, power_budget: f64) -> f64 {
        10.0 * (power_budget / self.n0).log10()
    }
}

/// i.i.d. CN(0,1) channel: real and imaginary parts each N(0, 1/2).
pub fn generate_channel(n: usize, m: usize, seed: u64) -> Result<ChannelMatrix> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidDimension(format!(
            "channel must be N×M with N, M ≥ 1, got {n}×{m}"
        )));
    }
    let mut rng = streams::rng_from(&[seed, 0xc4a7]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut data = Array2::zeros((n, m));
    for v in data.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v = Complex64::new(re * s, im * s);
    }
    ChannelMatrix::new(data)
}

/// Uniform L-PSK symbols with amplitude u for M users.
pub fn draw_symbols(m: usize, l: usize, u: f64, seed: u64) -> Result<SymbolVector> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "PSK order must be at least 2, got {l}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidDimension("no users".into()));
    }
    let mut rng = streams::rng_from(&[seed, 0x5b01]);
    let indices = (0..m).map(|_| rng.random_range(0..l)).collect();
    SymbolVector::from_indices(indices, l, u)
}

pub(crate) fn draw_noise(m: usize, n0: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = streams::rng_from(&[seed, 0x0153]);
    let s = (n0 / 2.0).sqrt();
    (0..m)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// y = Hᵀx + w with w ~ CN(0, N₀I); `None` disables the noise entirely.
pub fn transmit(
    h: &ChannelMatrix,
    x: &[Complex64],
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let mut y = h.apply(x)?;
    if let Some(nm) = noise {
        for (ym, wm) in y.iter_mut().zip(draw_noise(h.n_users(), nm.n0, seed)) {
            *ym += wm;
        }
    }
    Ok(y)
}

/// Tie handling for PSK detection at sector boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Prefer the smaller constellation index.
    #[default]
    SmallerIndex,
    /// Prefer the larger constellation index.
    LargerIndex,
}

/// Result of detecting one received symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    pub index: usize,
    /// Set when the received sample was exactly zero (no meaningful angle).
    pub degenerate: bool,
}

/// Minimum-angular-distance L-PSK detection.
pub fn detect_psk(y: Complex64, l: usize, tie: TieRule) -> Detection {
    if y.re == 0.0 && y.im == 0.0 {
        return Detection {
            index: 0,
            degenerate: true,
        };
    }
    let angle = y.im.atan2(y.re).rem_euclid(std::f64::consts::TAU);
    let step = std::f64::consts::TAU / l as f64;
    let mut best = f64::INFINITY;
    let mut index = 0;
    for k in 0..l {
        let diff = (angle - k as f64 * step).abs();
        let dist = diff.min(std::f64::consts::TAU - diff);
        let better = match tie {
            TieRule::SmallerIndex => dist < best,
            TieRule::LargerIndex => dist <= best,
        };
        if better {
            best = dist;
            index = k;
        }
    }
    Detection {
        index,
        degenerate: false,
    }
}

/// Identifies one of the six solvers the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverTag {
    RcgCi,
    RelaxedCi,
    CeoCi,
    RcgIr,
    GdIr,
    CeoIr,
}

impl SolverTag {
    pub const ALL: [SolverTag; 6] = [
        SolverTag::RcgCi,
        SolverTag::RelaxedCi,
        SolverTag::CeoCi,
        SolverTag::RcgIr,
        SolverTag::GdIr,
        SolverTag::CeoIr,
    ];

    /// Canonical machine-readable tag (config files, CSV columns).
    pub fn tag(&self) -> &'static str {
        match self {
            SolverTag::RcgCi => "rcg-ci",
            SolverTag::RelaxedCi => "relaxed-ci",
            SolverTag::CeoCi => "ceo-ci",
            SolverTag::RcgIr => "rcg-ir",
            SolverTag::GdIr => "gd-ir",
            SolverTag::CeoIr => "ceo-ir",
        }
    }

    /// Human-readable label used in plot titles and logs.
    pub fn display_name(&self) -> &'static str {
        match self {
            SolverTag::RcgCi => "RCG-CI",
            SolverTag::RelaxedCi => "relaxed-CI (surrogate)",
            SolverTag::CeoCi => "CEO-CI",
            SolverTag::RcgIr => "RCG-IR",
            SolverTag::GdIr => "GD-IR",
            SolverTag::CeoIr => "CEO-IR",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "rcg-ci" => Ok(SolverTag::RcgCi),
            // `cvx-ci` is accepted as an alias for the surrogate.
            "relaxed-ci" | "cvx-ci" => Ok(SolverTag::RelaxedCi),
            "ceo-ci" => Ok(SolverTag::CeoCi),
            "rcg-ir" => Ok(SolverTag::RcgIr),
            "gd-ir" => Ok(SolverTag::GdIr),
            "ceo-ir" => Ok(SolverTag::CeoIr),
            other => Err(Error::UnknownSolver(other.to_string())),
        }
    }

    pub fn is_ci(&self) -> bool {
        matches!(self, SolverTag::RcgCi | SolverTag::RelaxedCi | SolverTag::CeoCi)
    }

    pub(crate) fn stream_id(&self) -> u64 {
        match self {
            SolverTag::RcgCi => 1,
            SolverTag::RelaxedCi => 2,
            SolverTag::CeoCi => 3,
            SolverTag::RcgIr => 4,
            SolverTag::GdIr => 5,
            SolverTag::CeoIr => 6,
        }
    }
}

impl std::fmt::Display for SolverTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Per-solver configuration bundle used by the Monte-Carlo loops.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Template for the RCG solvers; the per-slot seed is filled in by the
    /// harness.
    pub rcg: SolverConfig,
    /// When set, the RCG stopping threshold is Δ = 1e-6·√N instead of the
    /// template value.
    pub auto_grad_tol: bool,
    /// When set, the smoothing parameter is ε = 0.01·u·β instead of the
    /// template value.
    pub auto_epsilon: bool,
    pub ceo: baselines::CeoConfig,
    pub gd_iterations: usize,
    pub relaxed: baselines::RelaxedCiConfig,
    /// Channel coherence in slots (a fresh channel every `coherence` slots).
    pub coherence: usize,
    /// Seeded solver restarts per slot; the best final objective wins.
    /// Mainly useful for tiny instances whose landscapes have coarse local
    /// minima.
    pub restarts: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rcg: SolverConfig::default(),
            auto_grad_tol: true,
            auto_epsilon: true,
            ceo: baselines::CeoConfig::default(),
            gd_iterations: 50,
            relaxed: baselines::RelaxedCiConfig::default(),
            coherence: 1,
            restarts: 1,
        }
    }
}

impl SolverSettings {
    fn resolve_rcg(&self, n: usize, s: &SymbolVector, seed: u64) -> SolverConfig {
        let mut cfg = self.rcg.clone();
        cfg.seed = seed;
        if self.auto_grad_tol {
            cfg.grad_tol = 1e-6 * (n as f64).sqrt();
        }
        if self.auto_epsilon {
            cfg.epsilon = 0.01 * s.amplitude() * s.beta();
        }
        cfg
    }
}

/// Run one solver on one instance, deterministically in `seed`.
pub fn solve_with_tag(
    tag: SolverTag,
    h: &ChannelMatrix,
    s: &SymbolVector,
    power_budget: f64,
    settings: &SolverSettings,
    seed: u64,
) -> Result<SolveReport> {
    match tag {
        SolverTag::RcgCi => {
            let cfg = settings.resolve_rcg(h.n_antennas(), s, seed);
            solver::rcg_solve(h, s, power_budget, &cfg)
        }
        SolverTag::RcgIr => {
            let cfg = settings.resolve_rcg(h.n_antennas(), s, seed);
            baselines::rcg_ir_solve(h, s, power_budget, &cfg)
        }
        SolverTag::GdIr => baselines::gd_ir_solve(h, s, power_budget, settings.gd_iterations, seed),
        SolverTag::CeoCi | SolverTag::CeoIr => {
            let mut cfg = settings.ceo.clone();
            cfg.seed = seed;
            let objective = if tag == SolverTag::CeoCi {
                CeoObjective::Ci
            } else {
                CeoObjective::Ir
            };
            baselines::ceo_solve(h, s, power_budget, objective, &cfg)
        }
        SolverTag::RelaxedCi => {
            let mut cfg = settings.relaxed.clone();
            cfg.seed = seed;
            if settings.auto_epsilon {
                cfg.epsilon = 0.01 * s.amplitude() * s.beta();
            }
            baselines::relaxed_ci_solve(h, s, power_budget, &cfg)
        }
    }
}

/// One Monte-Carlo slot: solve, transmit, detect.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub symbol_errors: u64,
    pub symbols_sent: u64,
    pub per_user_errors: Vec<u64>,
    pub solver_iterations: usize,
    pub wall_time: Duration,
    /// Exact CI objective ≤ 0: all users inside their constructive sector.
    pub ci_feasible: bool,
    pub stalled: bool,
    pub degenerate_detections: u64,
    /// max_n ||x_n| − √(P_T/N)| of the emitted precoder.
    pub envelope_deviation: f64,
}

/// Aggregate over all slots of one (solver, operating point) run.
#[derive(Debug, Clone)]
pub struct SerReport {
    pub solver: SolverTag,
    pub n_antennas: usize,
    pub n_users: usize,
    pub psk_order: usize,
    pub snr_db: f64,
    pub slots: u64,
    pub symbols_sent: u64,
    pub symbol_errors: u64,
    pub per_user_errors: Vec<u64>,
    pub ci_feasible_slots: u64,
    pub stalled_slots: u64,
    pub degenerate_detections: u64,
    pub mean_iterations: f64,
    pub max_envelope_deviation: f64,
    pub total_solve_time: Duration,
}

impl SerReport {
    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols_sent as f64
    }

    pub fn ci_feasible_fraction(&self) -> f64 {
        self.ci_feasible_slots as f64 / self.slots as f64
    }

    pub fn mean_solve_time_s(&self) -> f64 {
        self.total_solve_time.as_secs_f64() / self.slots as f64
    }
}

/// Knobs for [`run_ser_with`] that the plain [`run_ser`] leaves at defaults.
#[derive(Debug, Clone)]
pub struct RunSerOptions {
    /// Disable the additive noise (the N₀ → 0 limit).
    pub noiseless: bool,
    /// Use this channel for every slot instead of drawing fresh ones.
    pub fixed_channel: Option<ChannelMatrix>,
    /// PSK amplitude u.
    pub amplitude: f64,
}

impl Default for RunSerOptions {
    fn default() -> Self {
        Self {
            noiseless: false,
            fixed_channel: None,
            amplitude: 1.0,
        }
    }
}

/// Channel and symbols of one slot. Keyed only by (seed, slot) — never by
/// the solver — so paired solver comparisons see identical instances.
pub(crate) fn slot_instance(
    seed: u64,
    slot: u64,
    coherence: u64,
    n: usize,
    m: usize,
    l: usize,
    amplitude: f64,
) -> Result<(ChannelMatrix, SymbolVector)> {
    let ch_seed = streams::mix(&[seed, slot / coherence, Purpose::Channel as u64]);
    let h = generate_channel(n, m, ch_seed)?;
    let sym_seed = streams::mix(&[seed, slot, Purpose::Symbols as u64]);
    let s = draw_symbols(m, l, amplitude, sym_seed)?;
    Ok((h, s))
}

fn run_slot(
    tag: SolverTag,
    slot: u64,
    n: usize,
    m: usize,
    l: usize,
    power_budget: f64,
    noise: Option<&NoiseModel>,
    seed: u64,
    settings: &SolverSettings,
    opts: &RunSerOptions,
) -> Result<TrialResult> {
    let coherence = settings.coherence.max(1) as u64;
    let (generated, s) = slot_instance(seed, slot, coherence, n, m, l, opts.amplitude)?;
    let h = opts.fixed_channel.as_ref().unwrap_or(&generated);

    let start = Instant::now();
    let mut report: Option<SolveReport> = None;
    let mut iterations_total = 0usize;
    for restart in 0..settings.restarts.max(1) as u64 {
        // Restart 0 keeps the plain (seed, slot, purpose, tag) key so that
        // single-start runs are unaffected by the restart machinery.
        let solver_seed = if restart == 0 {
            streams::mix(&[seed, slot, Purpose::Solver as u64, tag.stream_id()])
        } else {
            streams::mix(&[seed, slot, Purpose::Solver as u64, tag.stream_id(), restart])
        };
        let candidate = solve_with_tag(tag, h, &s, power_budget, settings, solver_seed)?;
        iterations_total += candidate.iterations;
        let better = match &report {
            None => true,
            Some(best) => candidate.exact_trace.last() < best.exact_trace.last(),
        };
        if better {
            report = Some(candidate);
        }
    }
    let report = report.expect("at least one restart");
    let wall_time = start.elapsed();

    let radius = (power_budget / n as f64).sqrt();
    let envelope_deviation = report
        .x
        .iter()
        .map(|z| (z.norm() - radius).abs())
        .fold(0.0, f64::max);

    // CI feasibility of the emitted precoder, whatever the solver was.
    let ch = objective::rotate_channel(h, &s, power_budget)?;
    let g = objective::eval_g_precoder(&report.x, &ch)?;
    let exact = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ci_feasible = exact <= 0.0;

    let noise_seed = streams::mix(&[seed, slot, Purpose::Noise as u64]);
    let y = transmit(h, &report.x, noise, noise_seed)?;

    let mut per_user_errors = vec![0u64; m];
    let mut degenerate_detections = 0;
    for (u, (&ym, &sent)) in y.iter().zip(s.indices()).enumerate() {
        let det = detect_psk(ym, l, TieRule::SmallerIndex);
        if det.degenerate {
            degenerate_detections += 1;
        }
        if det.index != sent {
            per_user_errors[u] += 1;
        }
    }
    let symbol_errors = per_user_errors.iter().sum();
    Ok(TrialResult {
        symbol_errors,
        symbols_sent: m as u64,
        per_user_errors,
        solver_iterations: iterations_total,
        wall_time,
        ci_feasible,
        stalled: report.stalled,
        degenerate_detections,
        envelope_deviation,
    })
}

/// SER Monte-Carlo: `n_symbols` slots, each with a fresh symbol draw (and a
/// fresh channel every `coherence` slots), solved, transmitted and detected
/// for all M users. SER = symbol_errors/(n_symbols·M).
pub fn run_ser(
    tag: SolverTag,
    n: usize,
    m: usize,
    l: usize,
    power_budget: f64,
    snr_db: f64,
    n_symbols: u64,
    seed: u64,
    settings: &SolverSettings,
) -> Result<SerReport> {
    run_ser_with(
        tag,
        n,
        m,
        l,
        power_budget,
        snr_db,
        n_symbols,
        seed,
        settings,
        &RunSerOptions::default(),
    )
}

/// [`run_ser`] with explicit options (noise off, pinned channel, amplitude).
#[allow(clippy::too_many_arguments)]
pub fn run_ser_with(
    tag: SolverTag,
    n: usize,
    m: usize,
    l: usize,
    power_budget: f64,
    snr_db: f64,
    n_symbols: u64,
    seed: u64,
    settings: &SolverSettings,
    opts: &RunSerOptions,
) -> Result<SerReport> {
    if n_symbols == 0 {
        return Err(Error::InvalidArgument("n_symbols must be at least 1".into()));
    }
    let noise = if opts.noiseless {
        None
    } else {
        Some(NoiseModel::from_snr_db(power_budget, snr_db)?)
    };
    let trials: Vec<TrialResult> = (0..n_symbols)
        .into_par_iter()
        .map(|slot| {
            run_slot(
                tag,
                slot,
                n,
                m,
                l,
                power_budget,
                noise.as_ref(),
                seed,
                settings,
                opts,
            )
        })
        .collect::<Result<_>>()?;

    let mut report = SerReport {
        solver: tag,
        n_antennas: n,
        n_users: m,
        psk_order: l,
        snr_db,
        slots: n_symbols,
        symbols_sent: 0,
        symbol_errors: 0,
        per_user_errors: vec![0; m],
        ci_feasible_slots: 0,
        stalled_slots: 0,
        degenerate_detections: 0,
        mean_iterations: 0.0,
        max_envelope_deviation: 0.0,
        total_solve_time: Duration::ZERO,
    };
    let mut iter_sum = 0u64;
    for t in &trials {
        report.symbols_sent += t.symbols_sent;
        report.symbol_errors += t.symbol_errors;
        for (acc, e) in report.per_user_errors.iter_mut().zip(&t.per_user_errors) {
            *acc += e;
        }
        report.ci_feasible_slots += t.ci_feasible as u64;
        report.stalled_slots += t.stalled as u64;
        report.degenerate_detections += t.degenerate_detections;
        iter_sum += t.solver_iterations as u64;
        report.max_envelope_deviation = report.max_envelope_deviation.max(t.envelope_deviation);
        report.total_solve_time += t.wall_time;
    }
    report.mean_iterations = iter_sum as f64 / n_symbols as f64;
    Ok(report)
}

/// Mean/stddev of solve time plus modeled flops for one (solver, M) cell.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub solver: SolverTag,
    pub n_antennas: usize,
    pub n_users: usize,
    pub trials: u64,
    pub mean_iterations: f64,
    /// Mean of the per-solve modeled flop counts (deterministic).
    pub mean_flops: f64,
    pub mean_time_s: f64,
    pub std_time_s: f64,
    pub mean_per_iteration_s: f64,
}

/// Timing sweep over user counts. Trials run sequentially so wall-clock
/// measurements do not contend with each other.
pub fn run_timing(
    tag: SolverTag,
    n: usize,
    m_list: &[usize],
    trials: u64,
    seed: u64,
    settings: &SolverSettings,
) -> Result<Vec<TimingRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let mut times = Vec::with_capacity(trials as usize);
        let mut iter_sum = 0u64;
        let mut flop_sum = 0f64;
        let mut total_iter_time = 0f64;
        for trial in 0..trials {
            let ch_seed = streams::mix(&[seed, trial, m as u64, Purpose::Channel as u64]);
            let h = generate_channel(n, m, ch_seed)?;
            let sym_seed = streams::mix(&[seed, trial, m as u64, Purpose::Symbols as u64]);
            let s = draw_symbols(m, 4, 1.0, sym_seed)?;
            let solver_seed =
                streams::mix(&[seed, trial, m as u64, Purpose::Solver as u64, tag.stream_id()]);
            let start = Instant::now();
            let report = solve_with_tag(tag, &h, &s, 1.0, settings, solver_seed)?;
            let dt = start.elapsed().as_secs_f64();
            times.push(dt);
            iter_sum += report.iterations as u64;
            flop_sum += report.flops_estimate as f64;
            total_iter_time += dt;
        }
        let mean = times.iter().sum::<f64>() / trials as f64;
        let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / trials as f64;
        rows.push(TimingRow {
            solver: tag,
            n_antennas: n,
            n_users: m,
            trials,
            mean_iterations: iter_sum as f64 / trials as f64,
            mean_flops: flop_sum / trials as f64,
            mean_time_s: mean,
            std_time_s: var.sqrt(),
            mean_per_iteration_s: if iter_sum > 0 {
                total_iter_time / iter_sum as f64
            } else {
                0.0
            },
        });
    }
    Ok(rows)
}
