//! Riemannian conjugate gradient on the oblique manifold.
//!
//! One iteration evaluates the Riemannian gradient of the smoothed objective,
//! mixes in the transported previous direction with the Polak-Ribière
//! coefficient, finds an Armijo step, and retracts. Safeguards beyond the
//! plain recursion — clamping the coefficient at zero and restarting on a
//! non-descent direction — are on by default and can be switched off.
//!
//! The gradient is evaluated once per iteration at the current iterate and
//! the stopping guard (‖grad f‖_F < Δ or the iteration cap) is tested before
//! stepping, so a stationary initialization returns after zero iterations.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::manifold::{
    metric, oblique_random, retract, transport, RealPoint, TangentVector,
};
use crate::objective::{
    evaluate_objective, riemannian_gradient, rotate_channel, smoothed_objective, RotatedChannel,
    SymbolVector,
};
use crate::sim::ChannelMatrix;

/// Tuning knobs for the conjugate-gradient loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stopping threshold Δ on ‖grad f‖_F.
    pub grad_tol: f64,
    /// Iteration cap k_max.
    pub max_iters: usize,
    /// Smoothing parameter ε of the log-sum-exp objective.
    pub epsilon: f64,
    /// First trial step of the backtracking line search.
    pub armijo_initial: f64,
    /// Step shrink factor per backtrack, in (0,1).
    pub armijo_contraction: f64,
    /// Sufficient-decrease constant, in (0,1).
    pub armijo_slope: f64,
    /// Backtracking budget per line search.
    pub max_backtracks: usize,
    /// Clamp the Polak-Ribière coefficient at zero.
    pub pr_plus: bool,
    /// Replace a non-descent direction by the steepest descent direction.
    pub restart_on_nondescent: bool,
    /// Two-stage smoothing continuation (solve at ε, warm-start at ε/4).
    pub continuation: bool,
    /// Seed of the random initialization.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        // grad_tol is the dimension-scaled default for N = 64; use
        // `for_dimensions` (or the harness auto setting) for other N.
        Self {
            grad_tol: 1e-6 * 8.0,
            max_iters: 500,
            epsilon: 0.01,
            armijo_initial: 1.0,
            armijo_contraction: 0.5,
            armijo_slope: 1e-4,
            max_backtracks: 50,
            pr_plus: true,
            restart_on_nondescent: true,
            continuation: false,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Defaults with the stopping threshold scaled as Δ = 1e-6·√N.
    pub fn for_dimensions(n: usize) -> Self {
        Self {
            grad_tol: 1e-6 * (n as f64).sqrt(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.armijo_initial > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "armijo_initial must be positive, got {}",
                self.armijo_initial
            )));
        }
        if !(self.armijo_contraction > 0.0 && self.armijo_contraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "armijo_contraction must be in (0,1), got {}",
                self.armijo_contraction
            )));
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "armijo_slope must be in (0,1), got {}",
                self.armijo_slope
            )));
        }
        if self.max_backtracks == 0 {
            return Err(Error::InvalidArgument(
                "max_backtracks must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Output of a solver run. Baselines emit the same shape; fields that have
/// no meaning for a given method (e.g. `x_final` off the oblique manifold,
/// gradient norms for sampling methods) stay `None`/empty.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// The constant-envelope precoder, |x_n| = √(P_T/N).
    pub x: Vec<Complex64>,
    /// Final iterate on the oblique manifold (RCG-CI only).
    pub x_final: Option<RealPoint>,
    /// Exact objective at each recorded iterate.
    pub exact_trace: Vec<f64>,
    /// Smoothed (or method-native) objective at each recorded iterate;
    /// non-increasing over accepted iterations.
    pub smoothed_trace: Vec<f64>,
    /// ‖grad‖ at each recorded iterate (empty for sampling methods).
    pub grad_norm_trace: Vec<f64>,
    /// Accepted iterations.
    pub iterations: usize,
    /// Stopping threshold reached before the iteration cap.
    pub converged: bool,
    /// Line search failed twice (after a steepest-descent restart); the best
    /// iterate so far was returned.
    pub stalled: bool,
    /// Modeled flop count for the whole run.
    pub flops_estimate: u64,
    pub wall_time: Duration,
}

/// Stage of one RCG iteration in the flop model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopStage {
    /// Gradient and Polak-Ribière coefficient: 16N² + 14MN + 18M + 16N.
    Gradient,
    /// Direction update and retraction: 4N² + 6N.
    Direction,
    /// Both stages of one iteration.
    FullIteration,
}

impl std::str::FromStr for FlopStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gradient" | "gradient-stage" => Ok(FlopStage::Gradient),
            "direction" | "direction-stage" => Ok(FlopStage::Direction),
            "full" | "full-iteration" => Ok(FlopStage::FullIteration),
            other => Err(Error::InvalidArgument(format!(
                "unknown flop stage tag `{other}`"
            ))),
        }
    }
}

/// Per-iteration flop counts of the RCG-CI iteration.
pub fn flop_model(n: usize, m: usize, stage: FlopStage) -> Result<u64> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "flop model needs N, M ≥ 1, got N={n}, M={m}"
        )));
    }
    let (n, m) = (n as u64, m as u64);
    let gradient = 16 * n * n + 14 * m * n + 18 * m + 16 * n;
    let direction = 4 * n * n + 6 * n;
    Ok(match stage {
        FlopStage::Gradient => gradient,
        FlopStage::Direction => direction,
        FlopStage::FullIteration => gradient + direction,
    })
}

/// Riemannian Polak-Ribière coefficient
/// μ = ⟨g_new, g_new − P_{X_new}(g_old)⟩ / ⟨g_old, g_old⟩,
/// clamped at zero when `pr_plus` is set. A stationary previous point
/// (zero denominator) yields 0.
pub fn polak_ribiere(
    g_new: &TangentVector,
    g_old: &TangentVector,
    x_new: &RealPoint,
    pr_plus: bool,
) -> Result<f64> {
    let denominator = metric(g_old, g_old)?;
    if denominator == 0.0 {
        return Ok(0.0);
    }
    let transported = transport(x_new, g_old)?;
    let numerator = metric(g_new, g_new)? - metric(g_new, &transported)?;
    let mu = numerator / denominator;
    Ok(if pr_plus { mu.max(0.0) } else { mu })
}

/// Conjugate direction Π = −grad + μ·P_X(prev_dir). When the result fails
/// ⟨Π, grad⟩ < 0 and `restart_on_nondescent` is set, falls back to −grad.
pub fn descent_direction(
    grad: &TangentVector,
    prev_dir: &TangentVector,
    mu: f64,
    x: &RealPoint,
    restart_on_nondescent: bool,
) -> Result<TangentVector> {
    let transported = transport(x, prev_dir)?;
    let dir = grad.lin_comb(-1.0, &transported, mu)?;
    if restart_on_nondescent && metric(&dir, grad)? >= 0.0 {
        return Ok(grad.scaled(-1.0));
    }
    Ok(dir)
}

/// Backtracking line search: the largest step δ = δ₀·cᵗ, t ≤ max_backtracks,
/// with f(R_X(δ·dir)) ≤ f(X) + slope·δ·⟨grad, dir⟩. Returns the step, the
/// retracted point and its smoothed objective. A degenerate retraction at
/// some trial step counts as a failed trial and backtracking continues.
pub fn armijo_step(
    x: &RealPoint,
    dir: &TangentVector,
    grad: &TangentVector,
    f0: f64,
    ch: &RotatedChannel,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<(f64, RealPoint, f64)> {
    let slope_term = metric(grad, dir)?;
    if slope_term >= 0.0 {
        return Err(Error::InvalidArgument(
            "armijo_step requires a descent direction".into(),
        ));
    }
    let mut step = cfg.armijo_initial;
    for _ in 0..=cfg.max_backtracks {
        match retract(x, dir, step) {
            Ok(candidate) => {
                let f_trial = smoothed_objective(&candidate, ch, epsilon)?;
                if f_trial <= f0 + cfg.armijo_slope * step * slope_term {
                    return Ok((step, candidate, f_trial));
                }
            }
            Err(Error::DegenerateRetraction { .. }) => {}
            Err(e) => return Err(e),
        }
        step *= cfg.armijo_contraction;
    }
    Err(Error::LineSearchFailure {
        backtracks: cfg.max_backtracks,
    })
}

/// Riemannian conjugate gradient for constructive-interference CE precoding.
///
/// Minimizes the smoothed objective over the oblique manifold from a seeded
/// random start. Every iterate is exactly constant-envelope, the smoothed
/// objective trace is non-increasing over accepted iterations, and a
/// converged run satisfies ‖grad f(X̃*)‖_F < Δ. A failed line search is
/// retried once from the steepest-descent direction; failing again ends the
/// run at the best iterate with `stalled` set (no error).
pub fn rcg_solve(
    h: &ChannelMatrix,
    s: &SymbolVector,
    power_budget: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let start = Instant::now();
    let ch = rotate_channel(h, s, power_budget)?;
    let n = h.n_antennas();

    let stages = if cfg.continuation {
        vec![cfg.epsilon, cfg.epsilon / 4.0]
    } else {
        vec![cfg.epsilon]
    };

    let mut x = oblique_random(n, power_budget, cfg.seed)?;
    let mut exact_trace = Vec::new();
    let mut smoothed_trace = Vec::new();
    let mut grad_norm_trace = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;
    let mut stalled = false;

    'stages: for &eps in &stages {
        // CG memory does not carry across smoothing stages.
        let mut prev_grad: Option<TangentVector> = None;
        let mut prev_dir: Option<TangentVector> = None;
        loop {
            let grad = riemannian_gradient(&x, &ch, eps)?;
            let grad_norm = metric(&grad, &grad)?.sqrt();
            let eval = evaluate_objective(&x, &ch, eps)?;
            exact_trace.push(eval.exact_value);
            smoothed_trace.push(eval.smoothed_value);
            grad_norm_trace.push(grad_norm);

            converged = grad_norm < cfg.grad_tol;
            if converged || iterations >= cfg.max_iters {
                continue 'stages;
            }

            let mut dir = match (&prev_grad, &prev_dir) {
                (Some(pg), Some(pd)) => {
                    let mu = polak_ribiere(&grad, pg, &x, cfg.pr_plus)?;
                    descent_direction(&grad, pd, mu, &x, cfg.restart_on_nondescent)?
                }
                _ => grad.scaled(-1.0),
            };
            // A non-descent direction with the restart safeguard off cannot
            // feed the line search; fall back to steepest descent.
            if metric(&dir, &grad)? >= 0.0 {
                dir = grad.scaled(-1.0);
            }

            let step_result = match armijo_step(&x, &dir, &grad, eval.smoothed_value, &ch, eps, cfg)
            {
                Ok(ok) => Ok(ok),
                Err(Error::LineSearchFailure { .. }) => {
                    let steepest = grad.scaled(-1.0);
                    armijo_step(&x, &steepest, &grad, eval.smoothed_value, &ch, eps, cfg)
                }
                Err(e) => return Err(e),
            };
            match step_result {
                Ok((_step, x_next, _f_next)) => {
                    x = x_next;
                    iterations += 1;
                    prev_grad = Some(grad);
                    prev_dir = Some(dir);
                }
                Err(Error::LineSearchFailure { .. }) => {
                    stalled = true;
                    break 'stages;
                }
                Err(e) => return Err(e),
            }
        }
    }

    let flops = flop_model(n, s.n_users(), FlopStage::FullIteration)? * iterations as u64;
    Ok(SolveReport {
        x: x.to_precoder(),
        x_final: Some(x),
        exact_trace,
        smoothed_trace,
        grad_norm_trace,
        iterations,
        converged,
        stalled,
        flops_estimate: flops,
        wall_time: start.elapsed(),
    })
}
