//! Geometry of the two manifolds the solvers run on.
//!
//! The CI solver works on the oblique manifold of 2×N real matrices with
//! unit-norm columns: column n holds the direction (cos θ_n, sin θ_n) of the
//! n-th transmit phase, so every point corresponds to an exactly
//! constant-envelope precoder. The IR baseline works on the complex circle
//! manifold {x ∈ ℂ^N : |x_n| = radius}. Both use the Euclidean metric,
//! per-column orthogonal projection onto the tangent space, column-wise
//! renormalization as retraction, and projection as vector transport.
//!
//! All types are immutable values; all operations are pure functions, safe to
//! call from concurrently running solver instances.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::streams;

/// Column norms after construction/retraction stay within this of 1.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
/// |diag(X̃ᵀU)| entries of a tangent vector stay below this.
pub const TANGENCY_TOL: f64 = 1e-10;
/// A retraction column with norm below this is treated as degenerate.
const DEGENERATE_NORM: f64 = 1e-14;

/// A point on the oblique manifold: a 2×N real matrix with unit-norm columns.
///
/// Row 0 carries √(N/P_T)·x_R and row 1 carries √(N/P_T)·x_I of the complex
/// precoder x, so the manifold membership constraint is exactly the
/// constant-envelope constraint |x_n| = √(P_T/N).
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoint {
    data: Array2<f64>,
    power_budget: f64,
}

impl RealPoint {
    /// Wrap a 2×N matrix, validating membership.
    pub fn new(data: Array2<f64>, power_budget: f64) -> Result<Self> {
        if data.nrows() != 2 || data.ncols() == 0 {
            return Err(Error::InvalidDimension(format!(
                "expected a 2×N matrix with N ≥ 1, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if !(power_budget > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "power budget must be positive, got {power_budget}"
            )));
        }
        for (n, col) in data.columns().into_iter().enumerate() {
            let norm = (col[0] * col[0] + col[1] * col[1]).sqrt();
            if (norm - 1.0).abs() > MEMBERSHIP_TOL {
                return Err(Error::InvalidArgument(format!(
                    "column {n} has norm {norm}, off the manifold"
                )));
            }
        }
        Ok(Self { data, power_budget })
    }

    /// Normalize the columns of an arbitrary 2×N matrix onto the manifold.
    pub fn project(mut data: Array2<f64>, power_budget: f64) -> Result<Self> {
        if data.nrows() != 2 || data.ncols() == 0 {
            return Err(Error::InvalidDimension(format!(
                "expected a 2×N matrix with N ≥ 1, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for (n, mut col) in data.columns_mut().into_iter().enumerate() {
            let norm = (col[0] * col[0] + col[1] * col[1]).sqrt();
            if norm < DEGENERATE_NORM {
                return Err(Error::DegenerateRetraction { column: n });
            }
            col[0] /= norm;
            col[1] /= norm;
        }
        Self::new(data, power_budget)
    }

    /// Rebuild the point from a constant-envelope complex precoder.
    pub fn from_precoder(x: &[Complex64], power_budget: f64) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::InvalidDimension("empty precoder".into()));
        }
        let scale = (n as f64 / power_budget).sqrt();
        let mut data = Array2::zeros((2, n));
        for (i, z) in x.iter().enumerate() {
            data[[0, i]] = scale * z.re;
            data[[1, i]] = scale * z.im;
        }
        Self::new(data, power_budget)
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn n_antennas(&self) -> usize {
        self.data.ncols()
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    /// Recover the complex precoder x = √(P_T/N)·(row0 + j·row1).
    pub fn to_precoder(&self) -> Vec<Complex64> {
        let scale = (self.power_budget / self.n_antennas() as f64).sqrt();
        (0..self.n_antennas())
            .map(|n| Complex64::new(scale * self.data[[0, n]], scale * self.data[[1, n]]))
            .collect()
    }
}

/// A tangent vector at a point of the oblique manifold: a 2×N matrix U with
/// diag(X̃ᵀU) = 0. Carries a copy of its base point so that cross-base
/// metric evaluations can be rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    data: Array2<f64>,
    base: Array2<f64>,
}

impl TangentVector {
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn base_data(&self) -> &Array2<f64> {
        &self.base
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// a·self + b·other, tangent at the shared base point.
    pub fn lin_comb(&self, a: f64, other: &TangentVector, b: f64) -> Result<TangentVector> {
        if self.base != other.base {
            return Err(Error::InvalidArgument(
                "tangent vectors live at different base points".into(),
            ));
        }
        Ok(TangentVector {
            data: a * &self.data + b * &other.data,
            base: self.base.clone(),
        })
    }

    pub fn scaled(&self, a: f64) -> TangentVector {
        TangentVector {
            data: a * &self.data,
            base: self.base.clone(),
        }
    }

    /// Zero vector at `x`.
    pub fn zero_at(x: &RealPoint) -> TangentVector {
        TangentVector {
            data: Array2::zeros(x.data.raw_dim()),
            base: x.data.clone(),
        }
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(data: Array2<f64>, base: Array2<f64>) -> TangentVector {
        TangentVector { data, base }
    }
}

/// Random point with each column drawn as a normalized standard-normal
/// 2-vector, i.e. uniform on the circle. Deterministic for a fixed seed.
pub fn oblique_random(n: usize, power_budget: f64, seed: u64) -> Result<RealPoint> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "manifold dimension N must be at least 1".into(),
        ));
    }
    let mut rng = streams::rng_from(&[seed, 0x0b11]);
    let mut data = Array2::zeros((2, n));
    for mut col in data.columns_mut() {
        loop {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let norm = (a * a + b * b).sqrt();
            if norm > DEGENERATE_NORM {
                col[0] = a / norm;
                col[1] = b / norm;
                break;
            }
        }
    }
    RealPoint::new(data, power_budget)
}

/// Orthogonal projection onto the tangent space at `x`:
/// per column, u_n = g_n − (x_nᵀ g_n) x_n.
pub fn tangent_project(x: &RealPoint, g: ArrayView2<f64>) -> Result<TangentVector> {
    if g.raw_dim() != x.data.raw_dim() {
        return Err(Error::InvalidDimension(format!(
            "gradient is {}×{}, point is 2×{}",
            g.nrows(),
            g.ncols(),
            x.n_antennas()
        )));
    }
    let mut data = g.to_owned();
    for (mut u, xc) in data.columns_mut().into_iter().zip(x.data.columns()) {
        let radial = xc[0] * u[0] + xc[1] * u[1];
        u[0] -= radial * xc[0];
        u[1] -= radial * xc[1];
    }
    Ok(TangentVector {
        data,
        base: x.data.clone(),
    })
}

/// Euclidean metric tr(UᵀV). Errors if the vectors live at different points.
pub fn metric(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    if u.base != v.base {
        return Err(Error::InvalidArgument(
            "metric of tangent vectors at different base points".into(),
        ));
    }
    Ok(u.data.iter().zip(v.data.iter()).map(|(a, b)| a * b).sum())
}

/// Column-wise normalization retraction: each output column is
/// (x_n + step·v_n)/‖x_n + step·v_n‖. `retract(x, v, 0)` returns `x` exactly.
pub fn retract(x: &RealPoint, v: &TangentVector, step: f64) -> Result<RealPoint> {
    if v.base != x.data {
        return Err(Error::InvalidArgument(
            "tangent vector is not anchored at the retraction point".into(),
        ));
    }
    if !step.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite step {step}")));
    }
    if step == 0.0 {
        return Ok(x.clone());
    }
    let mut data = Array2::zeros(x.data.raw_dim());
    for (n, (xc, vc)) in x.data.columns().into_iter().zip(v.data.columns()).enumerate() {
        let a = xc[0] + step * vc[0];
        let b = xc[1] + step * vc[1];
        let norm = (a * a + b * b).sqrt();
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateRetraction { column: n });
        }
        data[[0, n]] = a / norm;
        data[[1, n]] = b / norm;
    }
    RealPoint::new(data, x.power_budget)
}

/// Vector transport by projection: maps `v` into the tangent space at `x_new`.
pub fn transport(x_new: &RealPoint, v: &TangentVector) -> Result<TangentVector> {
    tangent_project(x_new, v.data.view())
}

/// A point on the complex circle manifold {x ∈ ℂ^N : |x_n| = radius}.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclePoint {
    data: Vec<Complex64>,
    radius: f64,
}

impl CirclePoint {
    pub fn new(data: Vec<Complex64>, radius: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidDimension("empty circle point".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {radius}"
            )));
        }
        for (n, z) in data.iter().enumerate() {
            if (z.norm() - radius).abs() > MEMBERSHIP_TOL * radius.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "entry {n} has modulus {}, expected {radius}",
                    z.norm()
                )));
            }
        }
        Ok(Self { data, radius })
    }

    /// Random element with independent uniform phases.
    pub fn random(n: usize, radius: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(
                "circle manifold dimension must be at least 1".into(),
            ));
        }
        let mut rng = streams::rng_from(&[seed, 0xc1c1]);
        let data = (0..n)
            .map(|_| {
                let theta: f64 =
                    rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::TAU);
                Complex64::from_polar(radius, theta)
            })
            .collect();
        Self::new(data, radius)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Tangent projection on the circle manifold:
/// u_n = g_n − Re(g_n·conj(x_n))·x_n/radius².
pub fn circle_project(x: &CirclePoint, g: &[Complex64]) -> Result<Vec<Complex64>> {
    if g.len() != x.data.len() {
        return Err(Error::InvalidDimension(format!(
            "gradient has length {}, point has length {}",
            g.len(),
            x.data.len()
        )));
    }
    let r2 = x.radius * x.radius;
    Ok(x.data
        .iter()
        .zip(g)
        .map(|(xn, gn)| {
            let radial = (gn * xn.conj()).re / r2;
            gn - radial * xn
        })
        .collect())
}

/// Entrywise renormalization retraction on the circle manifold.
pub fn circle_retract(x: &CirclePoint, v: &[Complex64], step: f64) -> Result<CirclePoint> {
    if v.len() != x.data.len() {
        return Err(Error::InvalidDimension(format!(
            "direction has length {}, point has length {}",
            v.len(),
            x.data.len()
        )));
    }
    if !step.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite step {step}")));
    }
    if step == 0.0 {
        return Ok(x.clone());
    }
    let mut data = Vec::with_capacity(x.data.len());
    for (n, (xn, vn)) in x.data.iter().zip(v).enumerate() {
        let z = xn + step * vn;
        let norm = z.norm();
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateRetraction { column: n });
        }
        data.push(z * (x.radius / norm));
    }
    CirclePoint::new(data, x.radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn random_ambient(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = streams::rng_from(&[seed, 77]);
        let mut g = Array2::zeros((2, n));
        for v in g.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        g
    }

    #[test]
    fn random_point_has_unit_columns() {
        let x = oblique_random(1, 1.0, 42).unwrap();
        let c = x.data().column(0);
        assert_abs_diff_eq!(c[0] * c[0] + c[1] * c[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_point_is_deterministic() {
        let a = oblique_random(64, 1.0, 7).unwrap();
        let b = oblique_random(64, 1.0, 7).unwrap();
        assert_eq!(a.data(), b.data());
        let c = oblique_random(64, 1.0, 8).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn random_point_rejects_empty() {
        assert!(matches!(
            oblique_random(0, 1.0, 1),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn random_column_angles_are_uniform() {
        // Chi-square over 20 bins of the column angle, 1e5 columns.
        // Critical value for p = 0.01 with 19 degrees of freedom: 36.191.
        let bins = 20usize;
        let mut counts = vec![0u64; bins];
        let draws = 12_500usize; // N = 8 each → 1e5 column angles
        for seed in 0..draws {
            let x = oblique_random(8, 1.0, seed as u64).unwrap();
            for col in x.data().columns() {
                let angle = col[1].atan2(col[0]).rem_euclid(std::f64::consts::TAU);
                let b = ((angle / std::f64::consts::TAU) * bins as f64) as usize;
                counts[b.min(bins - 1)] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        let expected = total as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 36.191, "chi-square {chi2} rejects uniformity");
    }

    #[test]
    fn projecting_the_point_itself_gives_zero() {
        let x = oblique_random(5, 1.0, 3).unwrap();
        let t = tangent_project(&x, x.data().view()).unwrap();
        assert!(t.norm() < 1e-14);
    }

    #[test]
    fn projection_fixes_tangent_vectors() {
        let x = oblique_random(6, 1.0, 4).unwrap();
        let u = tangent_project(&x, random_ambient(6, 5).view()).unwrap();
        let v = tangent_project(&x, u.data().view()).unwrap();
        let diff = (u.data() - v.data()).iter().map(|d| d * d).sum::<f64>().sqrt();
        assert!(diff < 1e-12, "projection not idempotent: {diff}");
    }

    #[test]
    fn projection_matches_per_column_formula() {
        let x = oblique_random(3, 1.0, 9).unwrap();
        let g = random_ambient(3, 10);
        let t = tangent_project(&x, g.view()).unwrap();
        for n in 0..3 {
            let (x0, x1) = (x.data()[[0, n]], x.data()[[1, n]]);
            let (g0, g1) = (g[[0, n]], g[[1, n]]);
            let radial = x0 * g0 + x1 * g1;
            assert_abs_diff_eq!(t.data()[[0, n]], g0 - radial * x0, epsilon = 1e-15);
            assert_abs_diff_eq!(t.data()[[1, n]], g1 - radial * x1, epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_rejects_shape_mismatch() {
        let x = oblique_random(3, 1.0, 9).unwrap();
        let g = random_ambient(4, 10);
        assert!(matches!(
            tangent_project(&x, g.view()),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn metric_examples() {
        let x = oblique_random(4, 1.0, 11).unwrap();
        let u = tangent_project(&x, random_ambient(4, 12).view()).unwrap();
        let zero = TangentVector::zero_at(&x);
        assert_eq!(metric(&u, &zero).unwrap(), 0.0);

        let ones = tangent_project(&x, Array2::ones((2, 4)).view()).unwrap();
        let frob2 = ones.data().iter().map(|v| v * v).sum::<f64>();
        assert_abs_diff_eq!(metric(&ones, &ones).unwrap(), frob2, epsilon = 1e-15);

        // Scalar-loop oracle.
        let v = tangent_project(&x, random_ambient(4, 13).view()).unwrap();
        let mut acc = 0.0;
        for i in 0..2 {
            for n in 0..4 {
                acc += u.data()[[i, n]] * v.data()[[i, n]];
            }
        }
        assert_abs_diff_eq!(metric(&u, &v).unwrap(), acc, epsilon = 1e-15);
    }

    #[test]
    fn metric_rejects_mismatched_bases() {
        let x = oblique_random(4, 1.0, 14).unwrap();
        let y = oblique_random(4, 1.0, 15).unwrap();
        let u = tangent_project(&x, random_ambient(4, 16).view()).unwrap();
        let v = tangent_project(&y, random_ambient(4, 16).view()).unwrap();
        assert!(matches!(metric(&u, &v), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn retract_at_zero_is_identity() {
        let x = oblique_random(8, 1.0, 17).unwrap();
        let v = tangent_project(&x, random_ambient(8, 18).view()).unwrap();
        let y = retract(&x, &v, 0.0).unwrap();
        assert_eq!(x.data(), y.data());
    }

    #[test]
    fn retract_single_column_unit_step() {
        let x = RealPoint::new(array![[1.0], [0.0]], 1.0).unwrap();
        let v = tangent_project(&x, array![[0.0], [1.0]].view()).unwrap();
        let y = retract(&x, &v, 1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(y.data()[[0, 0]], s, epsilon = 1e-15);
        assert_abs_diff_eq!(y.data()[[1, 0]], s, epsilon = 1e-15);
    }

    #[test]
    fn retract_matches_per_column_normalization() {
        let x = oblique_random(5, 2.0, 19).unwrap();
        let v = tangent_project(&x, random_ambient(5, 20).view()).unwrap();
        let step = 0.37;
        let y = retract(&x, &v, step).unwrap();
        for n in 0..5 {
            let a = x.data()[[0, n]] + step * v.data()[[0, n]];
            let b = x.data()[[1, n]] + step * v.data()[[1, n]];
            let norm = (a * a + b * b).sqrt();
            assert_abs_diff_eq!(y.data()[[0, n]], a / norm, epsilon = 1e-15);
            assert_abs_diff_eq!(y.data()[[1, n]], b / norm, epsilon = 1e-15);
        }
        assert_eq!(y.power_budget(), 2.0);
    }

    #[test]
    fn retract_reports_degenerate_columns() {
        // A tangent direction can never produce a zero column (the norm of
        // x + t·v is at least 1), so exercise the guard with a raw radial
        // direction.
        let x = RealPoint::new(array![[1.0, 0.0], [0.0, 1.0]], 1.0).unwrap();
        let v = TangentVector::new_unchecked(array![[-1.0, 0.0], [0.0, 0.0]], x.data().clone());
        match retract(&x, &v, 1.0) {
            Err(Error::DegenerateRetraction { column }) => assert_eq!(column, 0),
            other => panic!("expected degenerate retraction, got {other:?}"),
        }
    }

    #[test]
    fn transport_fixes_vectors_already_tangent() {
        let x = oblique_random(4, 1.0, 21).unwrap();
        let v = tangent_project(&x, random_ambient(4, 22).view()).unwrap();
        let w = transport(&x, &v).unwrap();
        let diff = (v.data() - w.data()).iter().map(|d| d * d).sum::<f64>().sqrt();
        assert!(diff < 1e-13);
    }

    #[test]
    fn transport_equals_projection_at_new_point() {
        let x = oblique_random(4, 1.0, 23).unwrap();
        let y = oblique_random(4, 1.0, 24).unwrap();
        let v = tangent_project(&x, random_ambient(4, 25).view()).unwrap();
        let t = transport(&y, &v).unwrap();
        let p = tangent_project(&y, v.data().view()).unwrap();
        assert_eq!(t.data(), p.data());
        // Tangency at the new point.
        for n in 0..4 {
            let d = y.data()[[0, n]] * t.data()[[0, n]] + y.data()[[1, n]] * t.data()[[1, n]];
            assert!(d.abs() < TANGENCY_TOL);
        }
    }

    #[test]
    fn circle_projection_examples() {
        let x = CirclePoint::random(6, 1.0, 26).unwrap();
        // Radial input projects to zero.
        let u = circle_project(&x, x.data()).unwrap();
        assert!(u.iter().all(|z| z.norm() < 1e-14));
        // Purely tangential input is fixed (radius 1).
        let ix: Vec<Complex64> = x.data().iter().map(|z| Complex64::i() * z).collect();
        let v = circle_project(&x, &ix).unwrap();
        for (a, b) in v.iter().zip(&ix) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn circle_projection_matches_per_entry_formula() {
        let r = 0.5;
        let x = CirclePoint::random(5, r, 27).unwrap();
        let mut rng = streams::rng_from(&[28]);
        let g: Vec<Complex64> = (0..5)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let u = circle_project(&x, &g).unwrap();
        for n in 0..5 {
            let expect = g[n] - (g[n] * x.data()[n].conj()).re * x.data()[n] / (r * r);
            assert!((u[n] - expect).norm() < 1e-14);
            // Tangency: Re(u_n conj(x_n)) = 0.
            assert!((u[n] * x.data()[n].conj()).re.abs() < TANGENCY_TOL);
        }
    }

    #[test]
    fn circle_retract_examples() {
        let x = CirclePoint::new(vec![Complex64::new(1.0, 0.0)], 1.0).unwrap();
        let y = circle_retract(&x, &[Complex64::i()], 1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((y.data()[0] - Complex64::new(s, s)).norm() < 1e-15);

        let z = circle_retract(&x, &[Complex64::i()], 0.0).unwrap();
        assert_eq!(z.data()[0], x.data()[0]);
    }

    #[test]
    fn circle_retract_matches_per_entry_formula() {
        let r = (0.25f64).sqrt();
        let x = CirclePoint::random(4, r, 29).unwrap();
        let mut rng = streams::rng_from(&[30]);
        let v: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let step = 0.2;
        let y = circle_retract(&x, &v, step).unwrap();
        for n in 0..4 {
            let z = x.data()[n] + step * v[n];
            let expect = r * z / z.norm();
            assert!((y.data()[n] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn retraction_is_first_order_rigid() {
        // ‖R(X, tV) − (X + tV)‖_F / t → 0; at t = 1e-4 the ratio is < 1e-3.
        let x = oblique_random(10, 1.0, 31).unwrap();
        let v = tangent_project(&x, random_ambient(10, 32).view()).unwrap();
        let t = 1e-4;
        let y = retract(&x, &v, t).unwrap();
        let lin = x.data() + &(t * v.data());
        let diff = (y.data() - &lin).iter().map(|d| d * d).sum::<f64>().sqrt();
        assert!(diff / t < 1e-3, "rigidity ratio {}", diff / t);
    }

    proptest! {
        #[test]
        fn membership_survives_retraction_chains(seed in 0u64..500, steps in 1usize..6) {
            let mut x = oblique_random(7, 1.0, seed).unwrap();
            for k in 0..steps {
                let g = random_ambient(7, seed ^ (k as u64 + 101));
                let v = tangent_project(&x, g.view()).unwrap();
                x = retract(&x, &v, 0.3).unwrap();
            }
            for col in x.data().columns() {
                let norm = (col[0] * col[0] + col[1] * col[1]).sqrt();
                prop_assert!((norm - 1.0).abs() < MEMBERSHIP_TOL);
            }
        }

        #[test]
        fn projection_residual_is_normal(seed in 0u64..500) {
            // ⟨P(G), G − P(G)⟩ = 0 within 1e-10.
            let x = oblique_random(6, 1.0, seed).unwrap();
            let g = random_ambient(6, seed ^ 0xabc);
            let p = tangent_project(&x, g.view()).unwrap();
            let residual = &g - p.data();
            let inner: f64 = p.data().iter().zip(residual.iter()).map(|(a, b)| a * b).sum();
            prop_assert!(inner.abs() < 1e-10);
        }

        #[test]
        fn tangency_of_projections(seed in 0u64..500) {
            let x = oblique_random(9, 1.0, seed).unwrap();
            let g = random_ambient(9, seed ^ 0xdef);
            let t = tangent_project(&x, g.view()).unwrap();
            for n in 0..9 {
                let d = x.data()[[0, n]] * t.data()[[0, n]] + x.data()[[1, n]] * t.data()[[1, n]];
                prop_assert!(d.abs() < TANGENCY_TOL);
            }
        }
    }
}
