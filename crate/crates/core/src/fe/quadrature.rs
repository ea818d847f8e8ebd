//! One-dimensional Gauss rules on the unit interval.

use crate::error::{Error, Result};

/// Largest supported number of Gauss-Legendre points per direction.
pub const MAX_POINTS: usize = 32;

/// A 1D quadrature rule on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1D {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule1D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over [0, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Evaluates the Legendre polynomial P_n and its derivative at `x` in [-1, 1].
pub(crate) fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P'_n = n (x P_n - P_{n-1}) / (x^2 - 1), valid away from the endpoints.
    let dp = if (x * x - 1.0).abs() < f64::EPSILON {
        let nf = n as f64;
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Gauss-Legendre rule with `n` points, mapped from [-1, 1] to [0, 1].
pub fn gauss_legendre_1d(n: usize) -> Result<QuadRule1D> {
    if !(1..=MAX_POINTS).contains(&n) {
        return Err(Error::Config(format!(
            "Gauss-Legendre point count {n} outside 1..={MAX_POINTS}"
        )));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    // Roots come in symmetric pairs; solve for the upper half (descending) and mirror.
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the (i+1)-th largest root: index n-1-i ascending, mirror at i
        points[n - 1 - i] = 0.5 * (1.0 + x);
        points[i] = 0.5 * (1.0 - x);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    Ok(QuadRule1D { points, weights })
}
