//! Helpers for functions sampled on a uniform periodic angle grid.

use std::f64::consts::TAU;

use rustfft::{num_complex::Complex, FftPlanner};

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_angle(beta: f64) -> f64 {
    let w = beta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Uniform periodic nodes `2πj/n`.
pub fn angle_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// Periodic linear interpolation of samples at `2πj/n`.
pub fn lerp_periodic(samples: &[f64], beta: f64) -> f64 {
    let n = samples.len();
    let xi = wrap_angle(beta) * n as f64 / TAU;
    let j0 = (xi.floor() as usize) % n;
    let w = xi - xi.floor();
    let j1 = (j0 + 1) % n;
    if w == 0.0 {
        samples[j0]
    } else {
        (1.0 - w) * samples[j0] + w * samples[j1]
    }
}

/// Fourth-order central first derivative on a periodic grid.
pub fn d1_fourth_order(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let h = TAU / n as f64;
    (0..n)
        .map(|j| {
            let f = |o: isize| samples[(j as isize + o).rem_euclid(n as isize) as usize];
            (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h)
        })
        .collect()
}

/// Fourth-order central second derivative on a periodic grid.
pub fn d2_fourth_order(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let h = TAU / n as f64;
    (0..n)
        .map(|j| {
            let f = |o: isize| samples[(j as isize + o).rem_euclid(n as isize) as usize];
            (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) / (12.0 * h * h)
        })
        .collect()
}

/// Real Fourier coefficients `(a_k, b_k)` of periodic samples, with
/// `f(β) = a_0 + Σ a_k cos kβ + b_k sin kβ` interpolating the samples.
pub fn fourier_coefficients(samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let kmax = n / 2;
    let mut a = vec![0.0; kmax + 1];
    let mut b = vec![0.0; kmax + 1];
    let nf = n as f64;
    a[0] = buf[0].re / nf;
    for k in 1..=kmax {
        if 2 * k == n {
            a[k] = buf[k].re / nf;
        } else {
            a[k] = 2.0 * buf[k].re / nf;
            b[k] = -2.0 * buf[k].im / nf;
        }
    }
    (a, b)
}

/// Trigonometric interpolant of periodic samples (smooth, exact at nodes up
/// to rounding, exact everywhere for band-limited data).
#[derive(Debug, Clone)]
pub struct PeriodicProfile {
    samples: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PeriodicProfile {
    pub fn new(samples: Vec<f64>) -> Self {
        let (a, b) = fourier_coefficients(&samples);
        Self { samples, a, b }
    }

    pub fn constant(value: f64, n: usize) -> Self {
        Self::new(vec![value; n])
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn eval(&self, beta: f64) -> f64 {
        self.eval_with_derivatives(beta).0
    }

    /// Value and first two derivatives at `beta`.
    pub fn eval_with_derivatives(&self, beta: f64) -> (f64, f64, f64) {
        let (c1, s1) = (beta.cos(), beta.sin());
        let (mut c, mut s) = (1.0, 0.0);
        let (mut f, mut d1, mut d2) = (self.a[0], 0.0, 0.0);
        for k in 1..self.a.len() {
            let cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
            let kf = k as f64;
            let (ak, bk) = (self.a[k], self.b[k]);
            f += ak * c + bk * s;
            d1 += kf * (bk * c - ak * s);
            d2 -= kf * kf * (ak * c + bk * s);
        }
        (f, d1, d2)
    }

    /// Sample value at node `j` exactly as stored.
    pub fn node(&self, j: usize) -> f64 {
        self.samples[j]
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
