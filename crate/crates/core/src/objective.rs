//! The constructive-interference objective in real representation.
//!
//! For PSK symbols s_m = u·e^{jφ_m} the per-user margin is
//! |Im t_m| − β·Re t_m with t_m = (h_mᵀx − s_m)e^{−jφ_m} and β = tan(π/L).
//! Rotating the channel columns by e^{−jφ_m} and splitting real/imaginary
//! parts turns each margin into the max of two linear forms g_{2m−1}, g_{2m}
//! of (x_R, x_I), giving the compact problem min max_i g_i. The max is
//! smoothed by the log-sum-exp upper bound
//! f = ε·log Σ_i exp(g_i/ε), which satisfies
//! g_max ≤ f ≤ g_max + ε·ln(2M), and has the closed-form gradient assembled
//! from four precomputed N×M matrices.
//!
//! Everything here is a pure function over immutable inputs; a
//! [`RotatedChannel`] is built once per channel realization and shared
//! read-only across solver runs.

use ndarray::linalg::general_mat_vec_mul;
use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::manifold::{tangent_project, RealPoint, TangentVector};
use crate::sim::ChannelMatrix;

/// Desired L-PSK symbols for the M users: phases on the constellation grid
/// {2πk/L}, common amplitude u, and the derived sector geometry
/// ψ = π/L, β = tan ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    indices: Vec<usize>,
    phases: Vec<f64>,
    amplitude: f64,
    order: usize,
    half_angle: f64,
    beta: f64,
}

impl SymbolVector {
    /// Build from constellation indices (each in 0..L).
    pub fn from_indices(indices: Vec<usize>, order: usize, amplitude: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!(
                "PSK order must be at least 2, got {order}"
            )));
        }
        if !(amplitude > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "symbol amplitude must be positive, got {amplitude}"
            )));
        }
        if indices.is_empty() {
            return Err(Error::InvalidDimension("no users".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= order) {
            return Err(Error::InvalidArgument(format!(
                "constellation index {bad} out of range for order {order}"
            )));
        }
        let step = std::f64::consts::TAU / order as f64;
        let phases = indices.iter().map(|&k| k as f64 * step).collect();
        let half_angle = std::f64::consts::PI / order as f64;
        Ok(Self {
            indices,
            phases,
            amplitude,
            order,
            half_angle,
            beta: half_angle.tan(),
        })
    }

    /// Build from raw phases, which must sit on the constellation grid.
    pub fn from_phases(phases: &[f64], order: usize, amplitude: f64) -> Result<Self> {
        let step = std::f64::consts::TAU / order.max(1) as f64;
        let indices = phases
            .iter()
            .map(|&p| {
                let k = (p.rem_euclid(std::f64::consts::TAU) / step).round() as usize % order.max(1);
                let snapped = k as f64 * step;
                let diff = (p.rem_euclid(std::f64::consts::TAU) - snapped).abs();
                if diff.min(std::f64::consts::TAU - diff) > 1e-9 {
                    Err(Error::InvalidArgument(format!(
                        "phase {p} is not a {order}-PSK constellation point"
                    )))
                } else {
                    Ok(k)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(indices, order, amplitude)
    }

    pub fn n_users(&self) -> usize {
        self.phases.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Per-user symbol energy u².
    pub fn symbol_energy(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    /// The complex symbols u·e^{jφ_m}.
    pub fn symbols(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&p| Complex64::from_polar(self.amplitude, p))
            .collect()
    }
}

/// Phase-rotated channel with the four gradient matrices precomputed.
///
/// With h̃_m = h_m·e^{−jφ_m} split into H̃ = H̃_R + j·H̃_I:
/// A = H̃_I − βH̃_R, B = −H̃_I − βH̃_R, C = H̃_R + βH̃_I, D = H̃_R − βH̃_I.
/// The linear forms, with column m of each matrix, are
/// g_{2m−1} = a_mᵀx_R + c_mᵀx_I and g_{2m} = b_mᵀx_R − d_mᵀx_I.
#[derive(Debug, Clone)]
pub struct RotatedChannel {
    h_tilde_re: Array2<f64>,
    h_tilde_im: Array2<f64>,
    a: Array2<f64>,
    b: Array2<f64>,
    c: Array2<f64>,
    d: Array2<f64>,
    beta: f64,
    amplitude: f64,
    n_antennas: usize,
    n_users: usize,
    /// √(N/P_T): row r of a manifold point is `scale`·(x_R, x_I) row r.
    scale: f64,
}

/// Rotate each channel column by its user's symbol phase and precompute the
/// gradient matrices. Rotation preserves entry moduli.
pub fn rotate_channel(
    h: &ChannelMatrix,
    s: &SymbolVector,
    power_budget: f64,
) -> Result<RotatedChannel> {
    let (n, m) = (h.n_antennas(), h.n_users());
    if m != s.n_users() {
        return Err(Error::InvalidDimension(format!(
            "channel has {m} users, symbol vector has {}",
            s.n_users()
        )));
    }
    if !(power_budget > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power budget must be positive, got {power_budget}"
        )));
    }
    let beta = s.beta();
    let mut h_tilde_re = Array2::zeros((n, m));
    let mut h_tilde_im = Array2::zeros((n, m));
    for (j, &phase) in s.phases().iter().enumerate() {
        let rot = Complex64::from_polar(1.0, -phase);
        for i in 0..n {
            let ht = h.data()[[i, j]] * rot;
            h_tilde_re[[i, j]] = ht.re;
            h_tilde_im[[i, j]] = ht.im;
        }
    }
    let a = &h_tilde_im - &(beta * &h_tilde_re);
    let b = -&h_tilde_im - &(beta * &h_tilde_re);
    let c = &h_tilde_re + &(beta * &h_tilde_im);
    let d = &h_tilde_re - &(beta * &h_tilde_im);
    Ok(RotatedChannel {
        h_tilde_re,
        h_tilde_im,
        a,
        b,
        c,
        d,
        beta,
        amplitude: s.amplitude(),
        n_antennas: n,
        n_users: m,
        scale: (n as f64 / power_budget).sqrt(),
    })
}

impl RotatedChannel {
    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn h_tilde_re(&self) -> &Array2<f64> {
        &self.h_tilde_re
    }

    pub fn h_tilde_im(&self) -> &Array2<f64> {
        &self.h_tilde_im
    }

    pub fn mat_a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn mat_b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn mat_c(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn mat_d(&self) -> &Array2<f64> {
        &self.d
    }

    /// The rotated residuals t_m = h̃_mᵀx − u for a physical precoder.
    pub fn residuals(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n_antennas {
            return Err(Error::InvalidDimension(format!(
                "precoder has length {}, channel has {} antennas",
                x.len(),
                self.n_antennas
            )));
        }
        let mut t = Vec::with_capacity(self.n_users);
        for j in 0..self.n_users {
            let mut acc = Complex64::new(-self.amplitude, 0.0);
            for i in 0..self.n_antennas {
                let ht = Complex64::new(self.h_tilde_re[[i, j]], self.h_tilde_im[[i, j]]);
                acc += ht * x[i];
            }
            t.push(acc);
        }
        Ok(t)
    }
}

/// g evaluated at the physical split (x_R, x_I); 2M entries, user m at
/// positions 2m and 2m+1.
fn eval_g_xy(ch: &RotatedChannel, xr: &Array1<f64>, xi: &Array1<f64>) -> Array1<f64> {
    let m = ch.n_users;
    let mut g = Array1::zeros(2 * m);
    let mut odd = Array1::zeros(m);
    let mut even = Array1::zeros(m);
    // g_odd = Aᵀx_R + Cᵀx_I, g_even = Bᵀx_R − Dᵀx_I
    general_mat_vec_mul(1.0, &ch.a.t(), xr, 0.0, &mut odd);
    general_mat_vec_mul(1.0, &ch.c.t(), xi, 1.0, &mut odd);
    general_mat_vec_mul(1.0, &ch.b.t(), xr, 0.0, &mut even);
    general_mat_vec_mul(-1.0, &ch.d.t(), xi, 1.0, &mut even);
    for j in 0..m {
        g[2 * j] = odd[j];
        g[2 * j + 1] = even[j];
    }
    g
}

/// The 2M linear forms at an ambient 2×N matrix in the manifold
/// parametrization (rows are √(N/P_T)·x_R, √(N/P_T)·x_I).
pub fn eval_g_ambient(x: ArrayView2<f64>, ch: &RotatedChannel) -> Result<Array1<f64>> {
    if x.nrows() != 2 || x.ncols() != ch.n_antennas {
        return Err(Error::InvalidDimension(format!(
            "point is {}×{}, channel has {} antennas",
            x.nrows(),
            x.ncols(),
            ch.n_antennas
        )));
    }
    let inv_scale = 1.0 / ch.scale;
    let xr = x.row(0).mapv(|v| v * inv_scale);
    let xi = x.row(1).mapv(|v| v * inv_scale);
    Ok(eval_g_xy(ch, &xr, &xi))
}

/// The 2M linear forms at a manifold point.
pub fn eval_g(x: &RealPoint, ch: &RotatedChannel) -> Result<Array1<f64>> {
    eval_g_ambient(x.data().view(), ch)
}

/// The 2M linear forms at a physical complex precoder.
pub fn eval_g_precoder(x: &[Complex64], ch: &RotatedChannel) -> Result<Array1<f64>> {
    if x.len() != ch.n_antennas {
        return Err(Error::InvalidDimension(format!(
            "precoder has length {}, channel has {} antennas",
            x.len(),
            ch.n_antennas
        )));
    }
    let xr = Array1::from_iter(x.iter().map(|z| z.re));
    let xi = Array1::from_iter(x.iter().map(|z| z.im));
    Ok(eval_g_xy(ch, &xr, &xi))
}

fn max_with_index(g: &Array1<f64>) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, &v) in g.iter().enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    (best, idx)
}

fn log_sum_exp(g: &Array1<f64>, epsilon: f64) -> f64 {
    let (gmax, _) = max_with_index(g);
    let sum: f64 = g.iter().map(|&v| ((v - gmax) / epsilon).exp()).sum();
    gmax + epsilon * sum.ln()
}

/// Joint evaluation of the exact and smoothed objectives.
///
/// `max_index` is the smallest (0-based) index attaining the max, and the
/// sandwich 0 ≤ smoothed − exact ≤ ε·ln(2M) holds by construction.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub g: Array1<f64>,
    pub max_index: usize,
    pub exact_value: f64,
    pub smoothed_value: f64,
    pub epsilon: f64,
}

impl ObjectiveEval {
    fn from_g(g: Array1<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing parameter must be positive, got {epsilon}"
            )));
        }
        let (exact_value, max_index) = max_with_index(&g);
        let smoothed_value = log_sum_exp(&g, epsilon);
        debug_assert!(smoothed_value >= exact_value - 1e-12);
        debug_assert!(smoothed_value <= exact_value + epsilon * (g.len() as f64).ln() + 1e-12);
        Ok(Self {
            g,
            max_index,
            exact_value,
            smoothed_value,
            epsilon,
        })
    }

    /// Every noiseless received symbol lies inside its constructive sector
    /// iff the exact objective is non-positive.
    pub fn is_ci_feasible(&self) -> bool {
        self.exact_value <= 0.0
    }
}

/// Full objective evaluation at a manifold point.
pub fn evaluate_objective(x: &RealPoint, ch: &RotatedChannel, epsilon: f64) -> Result<ObjectiveEval> {
    ObjectiveEval::from_g(eval_g(x, ch)?, epsilon)
}

/// Full objective evaluation at a physical precoder.
pub fn evaluate_objective_precoder(
    x: &[Complex64],
    ch: &RotatedChannel,
    epsilon: f64,
) -> Result<ObjectiveEval> {
    ObjectiveEval::from_g(eval_g_precoder(x, ch)?, epsilon)
}

/// Exact max objective and its (smallest) attaining index.
pub fn exact_objective(x: &RealPoint, ch: &RotatedChannel) -> Result<(f64, usize)> {
    Ok(max_with_index(&eval_g(x, ch)?))
}

/// Smoothed objective f = ε·log Σ exp(g_i/ε), computed with max subtraction.
pub fn smoothed_objective(x: &RealPoint, ch: &RotatedChannel, epsilon: f64) -> Result<f64> {
    smoothed_objective_ambient(x.data().view(), ch, epsilon)
}

/// Smoothed objective at an ambient 2×N matrix.
pub fn smoothed_objective_ambient(
    x: ArrayView2<f64>,
    ch: &RotatedChannel,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothing parameter must be positive, got {epsilon}"
        )));
    }
    Ok(log_sum_exp(&eval_g_ambient(x, ch)?, epsilon))
}

/// Softmax weights exp(g_i/ε)/Σ_j exp(g_j/ε), max-shifted. They sum to 1.
pub fn softmax_weights(g: &Array1<f64>, epsilon: f64) -> Result<Array1<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothing parameter must be positive, got {epsilon}"
        )));
    }
    let (gmax, _) = max_with_index(g);
    let mut w = g.mapv(|v| ((v - gmax) / epsilon).exp());
    let sum = w.sum();
    w.mapv_inplace(|v| v / sum);
    Ok(w)
}

/// Gradient of the smoothed objective with respect to the 2×N manifold
/// parametrization. Column n is √(P_T/N)·Σ_m (a_{nm}w_{2m−1} + b_{nm}w_{2m},
/// c_{nm}w_{2m−1} − d_{nm}w_{2m}) with softmax weights w.
pub fn euclidean_gradient_ambient(
    x: ArrayView2<f64>,
    ch: &RotatedChannel,
    epsilon: f64,
) -> Result<Array2<f64>> {
    let g = eval_g_ambient(x, ch)?;
    let w = softmax_weights(&g, epsilon)?;
    let m = ch.n_users;
    let mut w_odd = Array1::zeros(m);
    let mut w_even = Array1::zeros(m);
    for j in 0..m {
        w_odd[j] = w[2 * j];
        w_even[j] = w[2 * j + 1];
    }
    let inv_scale = 1.0 / ch.scale;
    let mut row0 = Array1::zeros(ch.n_antennas);
    let mut row1 = Array1::zeros(ch.n_antennas);
    general_mat_vec_mul(inv_scale, &ch.a, &w_odd, 0.0, &mut row0);
    general_mat_vec_mul(inv_scale, &ch.b, &w_even, 1.0, &mut row0);
    general_mat_vec_mul(inv_scale, &ch.c, &w_odd, 0.0, &mut row1);
    general_mat_vec_mul(-inv_scale, &ch.d, &w_even, 1.0, &mut row1);
    let mut grad = Array2::zeros((2, ch.n_antennas));
    grad.row_mut(0).assign(&row0);
    grad.row_mut(1).assign(&row1);
    Ok(grad)
}

/// Euclidean gradient at a manifold point.
pub fn euclidean_gradient(x: &RealPoint, ch: &RotatedChannel, epsilon: f64) -> Result<Array2<f64>> {
    euclidean_gradient_ambient(x.data().view(), ch, epsilon)
}

/// Gradient of the smoothed objective with respect to the physical
/// (x_R, x_I) coordinates — the parametrization-free version used by the
/// relaxed (polydisc) solver.
pub fn smoothed_gradient_precoder(
    x: &[Complex64],
    ch: &RotatedChannel,
    epsilon: f64,
) -> Result<Vec<Complex64>> {
    let g = eval_g_precoder(x, ch)?;
    let w = softmax_weights(&g, epsilon)?;
    let m = ch.n_users;
    let mut w_odd = Array1::zeros(m);
    let mut w_even = Array1::zeros(m);
    for j in 0..m {
        w_odd[j] = w[2 * j];
        w_even[j] = w[2 * j + 1];
    }
    let mut gr = Array1::zeros(ch.n_antennas);
    let mut gi = Array1::zeros(ch.n_antennas);
    general_mat_vec_mul(1.0, &ch.a, &w_odd, 0.0, &mut gr);
    general_mat_vec_mul(1.0, &ch.b, &w_even, 1.0, &mut gr);
    general_mat_vec_mul(1.0, &ch.c, &w_odd, 0.0, &mut gi);
    general_mat_vec_mul(-1.0, &ch.d, &w_even, 1.0, &mut gi);
    Ok((0..ch.n_antennas)
        .map(|i| Complex64::new(gr[i], gi[i]))
        .collect())
}

/// Riemannian gradient: the tangent projection of the Euclidean gradient,
/// grad f = ∇f − X̃·diag(X̃ᵀ∇f).
pub fn riemannian_gradient(
    x: &RealPoint,
    ch: &RotatedChannel,
    epsilon: f64,
) -> Result<TangentVector> {
    let egrad = euclidean_gradient(x, ch, epsilon)?;
    tangent_project(x, egrad.view())
}
