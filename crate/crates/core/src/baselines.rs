//! The five comparison solvers: gradient descent and Riemannian conjugate
//! gradient on the interference-reduction objective, cross-entropy
//! optimization for both objectives, and a relax-then-normalize surrogate
//! for the convex relaxation of the CI problem.
//!
//! All of them emit [`SolveReport`]s with exactly constant-envelope
//! precoders and are deterministic functions of (H, s, config, seed).

use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::manifold::{circle_project, circle_retract, CirclePoint};
use crate::objective::{
    evaluate_objective_precoder, rotate_channel, smoothed_gradient_precoder, SymbolVector,
};
use crate::sim::ChannelMatrix;
use crate::solver::{SolveReport, SolverConfig};
use crate::streams;

/// Transmit phases θ ∈ [0, 2π)^N; the precoder built from them satisfies
/// |x_n| = √(P_T/N) exactly by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub theta: Vec<f64>,
}

impl PhaseVector {
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = streams::rng_from(&[seed, 0x7e7a]);
        PhaseVector {
            theta: (0..n)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect(),
        }
    }

    pub fn to_precoder(&self, power_budget: f64) -> Vec<Complex64> {
        let r = (power_budget / self.theta.len() as f64).sqrt();
        self.theta.iter().map(|&t| Complex64::from_polar(r, t)).collect()
    }
}

/// Total multi-user interference power ‖Hᵀx − s‖².
pub fn ir_objective(x: &[Complex64], h: &ChannelMatrix, s: &SymbolVector) -> Result<f64> {
    if s.n_users() != h.n_users() {
        return Err(Error::InvalidDimension(format!(
            "channel has {} users, symbol vector has {}",
            h.n_users(),
            s.n_users()
        )));
    }
    let y = h.apply(x)?;
    Ok(y.iter()
        .zip(s.symbols())
        .map(|(ym, sm)| (ym - sm).norm_sqr())
        .sum())
}

/// Residual r = Hᵀx − s and the conjugate-channel image c = conj(H)·r, the
/// two ingredients of the IR gradient 2c.
fn ir_residual_and_pullback(
    h: &ChannelMatrix,
    s: &SymbolVector,
    x: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>, f64)> {
    let y = h.apply(x)?;
    let symbols = s.symbols();
    let res: Vec<Complex64> = y.iter().zip(&symbols).map(|(ym, sm)| ym - sm).collect();
    let value = res.iter().map(|r| r.norm_sqr()).sum();
    let n = h.n_antennas();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for (m, rm) in res.iter().enumerate() {
        for i in 0..n {
            c[i] += h.data()[[i, m]].conj() * rm;
        }
    }
    Ok((res, c, value))
}

/// Full-vector gradient descent on the transmit phases for the IR objective,
/// with Armijo backtracking on each step. `iters = 0` returns the seeded
/// initialization unchanged.
pub fn gd_ir_solve(
    h: &ChannelMatrix,
    s: &SymbolVector,
    power_budget: f64,
    iters: usize,
    seed: u64,
) -> Result<SolveReport> {
    let start = Instant::now();
    let n = h.n_antennas();
    if s.n_users() != h.n_users() {
        return Err(Error::InvalidDimension(format!(
            "channel has {} users, symbol vector has {}",
            h.n_users(),
            s.n_users()
        )));
    }
    let mut phases = PhaseVector::random(n, seed);
    let mut x = phases.to_precoder(power_budget);
    let (_, mut c, mut value) = ir_residual_and_pullback(h, s, &x)?;

    let mut trace = vec![value];
    let mut grad_trace = Vec::new();
    let mut evals = 1u64;
    let mut accepted = 0usize;
    let mut stalled = false;
    let mut prev_step = 1.0f64;

    for _ in 0..iters {
        // dF/dθ_n = 2·Im(conj(x_n)·c_n).
        let grad: Vec<f64> = x
            .iter()
            .zip(&c)
            .map(|(xn, cn)| 2.0 * (xn.conj() * cn).im)
            .collect();
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        grad_trace.push(gnorm2.sqrt());
        if gnorm2 == 0.0 {
            break;
        }
        // Warm-started backtracking with a firm sufficient-decrease constant
        // (0.25): weak constants accept near-reflecting steps on this
        // objective and stall the descent.
        let mut step = (2.0 * prev_step).min(1.0);
        let mut moved = false;
        for _ in 0..50 {
            let candidate = PhaseVector {
                theta: phases
                    .theta
                    .iter()
                    .zip(&grad)
                    .map(|(t, g)| (t - step * g).rem_euclid(std::f64::consts::TAU))
                    .collect(),
            };
            let cx = candidate.to_precoder(power_budget);
            let f_trial = ir_objective(&cx, h, s)?;
            evals += 1;
            if f_trial <= value - 0.25 * step * gnorm2 {
                phases = candidate;
                x = cx;
                let (_, c_new, v_new) = ir_residual_and_pullback(h, s, &x)?;
                evals += 1;
                c = c_new;
                value = v_new.min(f_trial);
                moved = true;
                prev_step = step;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            stalled = true;
            break;
        }
        accepted += 1;
        trace.push(value);
    }

    // ~8MN flops per objective/pullback evaluation.
    let flops = evals * 8 * (h.n_users() as u64) * (n as u64);
    Ok(SolveReport {
        x,
        x_final: None,
        exact_trace: trace.clone(),
        smoothed_trace: trace,
        grad_norm_trace: grad_trace,
        iterations: accepted,
        converged: !stalled,
        stalled,
        flops_estimate: flops,
        wall_time: start.elapsed(),
    })
}

fn circle_metric(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Riemannian conjugate gradient on the complex circle manifold, minimizing
/// the IR objective ‖Hᵀx − s‖² with Euclidean gradient 2·conj(H)(Hᵀx − s).
/// Shares the Armijo/Polak-Ribière machinery of the CI solver, expressed in
/// the circle geometry.
pub fn rcg_ir_solve(
    h: &ChannelMatrix,
    s: &SymbolVector,
    power_budget: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = h.n_antennas();
    if s.n_users() != h.n_users() {
        return Err(Error::InvalidDimension(format!(
            "channel has {} users, symbol vector has {}",
            h.n_users(),
            s.n_users()
        )));
    }
    let radius = (power_budget / n as f64).sqrt();
    let mut x = CirclePoint::random(n, radius, cfg.seed)?;

    let riemannian_grad = |p: &CirclePoint| -> Result<(Vec<Complex64>, f64)> {
        let (_, c, value) = ir_residual_and_pullback(h, s, p.data())?;
        let egrad: Vec<Complex64> = c.iter().map(|cn| 2.0 * cn).collect();
        Ok((circle_project(p, &egrad)?, value))
    };

    let mut exact_trace = Vec::new();
    let mut grad_norm_trace = Vec::new();
    let mut iterations = 0usize;
    let mut converged;
    let mut stalled = false;
    let mut prev_grad: Option<Vec<Complex64>> = None;
    let mut prev_dir: Option<Vec<Complex64>> = None;
    let mut evals = 1u64;

    loop {
        let (grad, value) = riemannian_grad(&x)?;
        let grad_norm = circle_metric(&grad, &grad).sqrt();
        exact_trace.push(value);
        grad_norm_trace.push(grad_norm);
        converged = grad_norm < cfg.grad_tol;
        if converged || iterations >= cfg.max_iters {
            break;
        }

        let mut dir: Vec<Complex64> = match (&prev_grad, &prev_dir) {
            (Some(pg), Some(pd)) => {
                let denom = circle_metric(pg, pg);
                let mu = if denom == 0.0 {
                    0.0
                } else {
                    let transported = circle_project(&x, pg)?;
                    let num = circle_metric(&grad, &grad) - circle_metric(&grad, &transported);
                    let raw = num / denom;
                    if cfg.pr_plus {
                        raw.max(0.0)
                    } else {
                        raw
                    }
                };
                let transported_dir = circle_project(&x, pd)?;
                grad.iter()
                    .zip(&transported_dir)
                    .map(|(g, t)| -g + mu * t)
                    .collect()
            }
            _ => grad.iter().map(|g| -g).collect(),
        };
        if circle_metric(&dir, &grad) >= 0.0 {
            dir = grad.iter().map(|g| -g).collect();
        }

        // Armijo backtracking with the circle retraction.
        let slope_term = circle_metric(&grad, &dir);
        let mut step = cfg.armijo_initial;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            match circle_retract(&x, &dir, step) {
                Ok(candidate) => {
                    let f_trial = ir_objective(candidate.data(), h, s)?;
                    evals += 1;
                    if f_trial <= value + cfg.armijo_slope * step * slope_term {
                        accepted = Some(candidate);
                        break;
                    }
                }
                Err(Error::DegenerateRetraction { .. }) => {}
                Err(e) => return Err(e),
            }
            step *= cfg.armijo_contraction;
        }
        match accepted {
            Some(next) => {
                x = next;
                iterations += 1;
                prev_grad = Some(grad);
                prev_dir = Some(dir);
            }
            None => {
                stalled = true;
                break;
            }
        }
    }

    let flops = (evals + iterations as u64) * 8 * (h.n_users() as u64) * (n as u64);
    Ok(SolveReport {
        x: x.data().to_vec(),
        x_final: None,
        exact_trace: exact_trace.clone(),
        smoothed_trace: exact_trace,
        grad_norm_trace,
        iterations,
        converged,
        stalled,
        flops_estimate: flops,
        wall_time: start.elapsed(),
    })
}

/// Which objective a cross-entropy run scores samples with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CeoObjective {
    /// Exact CI objective max_i g_i (no gradient involved).
    Ci,
    /// IR objective ‖Hᵀx − s‖².
    Ir,
}

/// Cross-entropy optimizer parameters: T iterations of K samples, elite
/// quantile ρ, smoothing α.
#[derive(Debug, Clone, PartialEq)]
pub struct CeoConfig {
    pub iterations: usize,
    pub samples: usize,
    pub quantile: f64,
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for CeoConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            samples: 500,
            quantile: 0.05,
            smoothing: 0.08,
            seed: 0,
        }
    }
}

impl CeoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.samples == 0 {
            return Err(Error::InvalidArgument(
                "CEO needs at least one iteration and one sample".into(),
            ));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "CEO quantile must be in (0,1), got {}",
                self.quantile
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "CEO smoothing must be in (0,1], got {}",
                self.smoothing
            )));
        }
        Ok(())
    }

    /// ⌈ρK⌉, at least one sample.
    pub fn elite_count(&self) -> usize {
        ((self.quantile * self.samples as f64).ceil() as usize).clamp(1, self.samples)
    }
}

fn wrap_to_pi(a: f64) -> f64 {
    let mut v = a.rem_euclid(std::f64::consts::TAU);
    if v > std::f64::consts::PI {
        v -= std::f64::consts::TAU;
    }
    v
}

/// Cross-entropy optimization over the transmit phases.
///
/// Samples K phase vectors per iteration from independent per-antenna
/// wrapped Gaussians, scores them with the chosen objective, refits the
/// circular mean/spread to the ⌈ρK⌉ elites with smoothing α, and returns the
/// best sample seen anywhere in the run. The recorded best-so-far trace is
/// non-increasing by construction.
pub fn ceo_solve(
    h: &ChannelMatrix,
    s: &SymbolVector,
    power_budget: f64,
    objective: CeoObjective,
    cfg: &CeoConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = h.n_antennas();
    let m = h.n_users();
    if s.n_users() != m {
        return Err(Error::InvalidDimension(format!(
            "channel has {m} users, symbol vector has {}",
            s.n_users()
        )));
    }
    let radius = (power_budget / n as f64).sqrt();
    let k = cfg.samples;
    let elite = cfg.elite_count();
    let alpha = cfg.smoothing;

    // Scoring machinery, batched over the K samples of one iteration.
    let rotated = match objective {
        CeoObjective::Ci => Some(rotate_channel(h, s, power_budget)?),
        CeoObjective::Ir => None,
    };
    let (h_re, h_im): (Array2<f64>, Array2<f64>) = {
        let mut re = Array2::zeros((n, m));
        let mut im = Array2::zeros((n, m));
        for i in 0..n {
            for j in 0..m {
                re[[i, j]] = h.data()[[i, j]].re;
                im[[i, j]] = h.data()[[i, j]].im;
            }
        }
        (re, im)
    };
    let symbols = s.symbols();

    let mut rng = streams::rng_from(&[cfg.seed, 0xce0]);
    let mut mu: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let mut sigma = vec![std::f64::consts::PI; n];

    let mut best_theta: Vec<f64> = mu.clone();
    let mut best_score = f64::INFINITY;
    let mut trace = Vec::with_capacity(cfg.iterations);

    let mut thetas = Array2::<f64>::zeros((n, k));
    for _ in 0..cfg.iterations {
        for i in 0..n {
            for j in 0..k {
                let z: f64 = StandardNormal.sample(&mut rng);
                thetas[[i, j]] = (mu[i] + sigma[i] * z).rem_euclid(std::f64::consts::TAU);
            }
        }
        let xr = thetas.mapv(|t| radius * t.cos());
        let xi = thetas.mapv(|t| radius * t.sin());

        let scores: Vec<f64> = match objective {
            CeoObjective::Ci => {
                let ch = rotated.as_ref().unwrap();
                let g_odd = ch.mat_a().t().dot(&xr) + ch.mat_c().t().dot(&xi);
                let g_even = ch.mat_b().t().dot(&xr) - ch.mat_d().t().dot(&xi);
                (0..k)
                    .map(|j| {
                        let mut worst = f64::NEG_INFINITY;
                        for mm in 0..m {
                            worst = worst.max(g_odd[[mm, j]]).max(g_even[[mm, j]]);
                        }
                        worst
                    })
                    .collect()
            }
            CeoObjective::Ir => {
                let y_re = h_re.t().dot(&xr) - h_im.t().dot(&xi);
                let y_im = h_re.t().dot(&xi) + h_im.t().dot(&xr);
                (0..k)
                    .map(|j| {
                        let mut acc = 0.0;
                        for mm in 0..m {
                            let dre = y_re[[mm, j]] - symbols[mm].re;
                            let dim = y_im[[mm, j]] - symbols[mm].im;
                            acc += dre * dre + dim * dim;
                        }
                        acc
                    })
                    .collect()
            }
        };

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

        if scores[order[0]] < best_score {
            best_score = scores[order[0]];
            best_theta = thetas.column(order[0]).to_vec();
        }
        trace.push(best_score);

        // Refit the wrapped Gaussian to the elites (circular statistics).
        for i in 0..n {
            let mut cs = 0.0;
            let mut sn = 0.0;
            for &j in order.iter().take(elite) {
                cs += thetas[[i, j]].cos();
                sn += thetas[[i, j]].sin();
            }
            let rbar = (cs * cs + sn * sn).sqrt() / elite as f64;
            let elite_mean = sn.atan2(cs).rem_euclid(std::f64::consts::TAU);
            let elite_sigma = if rbar < 1e-12 {
                std::f64::consts::PI
            } else {
                (-2.0 * rbar.min(1.0).ln()).sqrt().clamp(1e-3, std::f64::consts::PI)
            };
            mu[i] = (mu[i] + alpha * wrap_to_pi(elite_mean - mu[i]))
                .rem_euclid(std::f64::consts::TAU);
            sigma[i] = alpha * elite_sigma + (1.0 - alpha) * sigma[i];
        }
    }

    let x = PhaseVector { theta: best_theta }.to_precoder(power_budget);
    // 8MNK score flops plus ~12NK sampling/trig per iteration.
    let flops = (cfg.iterations as u64)
        * ((8 * m as u64 * n as u64 + 12 * n as u64) * k as u64);
    Ok(SolveReport {
        x,
        x_final: None,
        exact_trace: trace.clone(),
        smoothed_trace: trace,
        grad_norm_trace: Vec::new(),
        iterations: cfg.iterations,
        converged: true,
        stalled: false,
        flops_estimate: flops,
        wall_time: start.elapsed(),
    })
}

/// Parameters of the relaxed-CI surrogate solver.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedCiConfig {
    /// Projected-subgradient iterations.
    pub iterations: usize,
    /// Initial step of the diminishing schedule δ_k = δ₀/√k.
    pub step0: f64,
    /// Smoothing parameter of the objective.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for RelaxedCiConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            step0: 0.5,
            epsilon: 0.01,
            seed: 0,
        }
    }
}

fn clip_to_polydisc(x: &mut [Complex64], radius: f64) {
    for z in x.iter_mut() {
        let norm = z.norm();
        if norm > radius {
            *z *= radius / norm;
        }
    }
}

/// Relax-then-normalize surrogate for the convex CI relaxation.
///
/// The equality constraints |x_n| = √(P_T/N) are relaxed to the polydisc
/// |x_n| ≤ √(P_T/N); the smoothed CI objective is minimized over it with
/// normalized projected subgradient steps δ_k = δ₀/√k, and the best iterate
/// found is then normalized entrywise to exact constant envelope.
pub fn relaxed_ci_solve(
    h: &ChannelMatrix,
    s: &SymbolVector,
    power_budget: f64,
    cfg: &RelaxedCiConfig,
) -> Result<SolveReport> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1".into()));
    }
    if !(cfg.step0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step0 must be positive, got {}",
            cfg.step0
        )));
    }
    let start = Instant::now();
    let n = h.n_antennas();
    let radius = (power_budget / n as f64).sqrt();
    let ch = rotate_channel(h, s, power_budget)?;

    let mut x = CirclePoint::random(n, radius, cfg.seed)?.data().to_vec();
    let mut exact_trace = Vec::with_capacity(cfg.iterations + 1);
    let mut smoothed_trace = Vec::with_capacity(cfg.iterations + 1);

    let mut best_x = x.clone();
    let mut best_value = f64::INFINITY;

    for k in 0..=cfg.iterations {
        let eval = evaluate_objective_precoder(&x, &ch, cfg.epsilon)?;
        exact_trace.push(eval.exact_value);
        smoothed_trace.push(eval.smoothed_value);
        if eval.smoothed_value < best_value {
            best_value = eval.smoothed_value;
            best_x.copy_from_slice(&x);
        }
        if k == cfg.iterations {
            break;
        }
        let grad = smoothed_gradient_precoder(&x, &ch, cfg.epsilon)?;
        let gnorm = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        if gnorm < 1e-15 {
            break;
        }
        let step = cfg.step0 / ((k + 1) as f64).sqrt() / gnorm;
        for (xn, gn) in x.iter_mut().zip(&grad) {
            *xn -= step * gn;
        }
        clip_to_polydisc(&mut x, radius);
    }

    // Normalization step: push every entry out to the constant envelope.
    let x_ce: Vec<Complex64> = best_x
        .iter()
        .map(|z| {
            let norm = z.norm();
            if norm < 1e-300 {
                Complex64::new(radius, 0.0)
            } else {
                z * (radius / norm)
            }
        })
        .collect();

    let m = h.n_users() as u64;
    let flops = (exact_trace.len() as u64) * 16 * m * n as u64;
    Ok(SolveReport {
        x: x_ce,
        x_final: None,
        exact_trace,
        smoothed_trace,
        grad_norm_trace: Vec::new(),
        iterations: cfg.iterations,
        converged: true,
        stalled: false,
        flops_estimate: flops,
        wall_time: start.elapsed(),
    })
}
