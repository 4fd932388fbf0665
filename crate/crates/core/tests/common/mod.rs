//! Independent reference solutions used by the integration and acceptance
//! tests. Nothing here calls into the solvers it checks.
#![allow(dead_code)]

use std::f64::consts::TAU;

use sheath::characteristics::FnField;
use sheath::{Mat2, Vec2};

/// Eulerian reference for `∂_t n + ∇·(n v) = 0` on the periodic box
/// `[0, 2π)²` with `v = (a sin x₁, b sin x₂)`: centred flux differences and
/// classical RK4. Returns `n` on the `m × m` node lattice, row `i` = x₁ index.
pub fn continuity_fd(m: usize, a: f64, b: f64, n0: impl Fn(f64, f64) -> f64, t_end: f64) -> Vec<f64> {
    let h = TAU / m as f64;
    let xs: Vec<f64> = (0..m).map(|i| i as f64 * h).collect();
    let v1: Vec<f64> = xs.iter().map(|x| a * x.sin()).collect();
    let v2: Vec<f64> = xs.iter().map(|x| b * x.sin()).collect();
    let idx = |i: usize, j: usize| (i % m) * m + (j % m);
    let rhs = |n: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let ip = (i + 1) % m;
                let im = (i + m - 1) % m;
                let jp = (j + 1) % m;
                let jm = (j + m - 1) % m;
                let fx = (n[idx(ip, j)] * v1[ip] - n[idx(im, j)] * v1[im]) / (2.0 * h);
                let fy = (n[idx(i, jp)] * v2[jp] - n[idx(i, jm)] * v2[jm]) / (2.0 * h);
                out[idx(i, j)] = -(fx + fy);
            }
        }
        out
    };
    let mut n: Vec<f64> = (0..m * m).map(|k| n0(xs[k / m], xs[k % m])).collect();
    let vmax = a.abs().max(b.abs()).max(1e-12);
    let steps = ((t_end / (0.1 * h / vmax)).ceil() as usize).max(1);
    let dt = t_end / steps as f64;
    let axpy = |x: &[f64], y: &[f64], s: f64| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p + s * q).collect() };
    for _ in 0..steps {
        let k1 = rhs(&n);
        let k2 = rhs(&axpy(&n, &k1, 0.5 * dt));
        let k3 = rhs(&axpy(&n, &k2, 0.5 * dt));
        let k4 = rhs(&axpy(&n, &k3, dt));
        for q in 0..n.len() {
            n[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
    }
    n
}

/// The box velocity `(a sin x₁, b sin x₂)` as a field with exact Jacobian.
pub fn sine_field(a: f64, b: f64) -> FnField {
    FnField::new(
        move |x, _| Vec2::new(a * x.x.sin(), b * x.y.sin()),
        move |x, _| Mat2::new(a * x.x.cos(), 0.0, 0.0, b * x.y.cos()),
    )
}

/// Cosine coefficients of `cos(kβ) · (1 − q²)/(1 − 2q cos β + q²)`, using
/// the Poisson-kernel series `1 + 2 Σ qᵐ cos mβ`, truncated at `qᵐ < 1e-30`.
pub fn poisson_mode_coefficients(k: usize, q: f64) -> Vec<f64> {
    let mut mmax = 1;
    while q.powi(mmax as i32) > 1e-30 {
        mmax += 1;
    }
    let mut c = vec![0.0; mmax + k + 2];
    c[k] += 1.0;
    for m in 1..=mmax {
        let w = q.powi(m as i32);
        c[m + k] += w;
        c[m.abs_diff(k)] += w;
    }
    c
}

pub fn poisson_mode_datum(k: usize, q: f64, beta: f64) -> f64 {
    (k as f64 * beta).cos() * (1.0 - q * q) / (1.0 - 2.0 * q * beta.cos() + q * q)
}

/// Gradient of the decaying exterior harmonic function with radial
/// derivative `Σ c_j cos(jβ)` on `|x| = r_b`, the mode-0 term being
/// `c₀ r_b ln r`.
pub fn exterior_gradient(c: &[f64], rb: f64, x: Vec2) -> Vec2 {
    let (r, beta) = (x.norm(), x.y.atan2(x.x));
    let mut dr = c[0] * rb / r;
    let mut dtan = 0.0;
    for (j, cj) in c.iter().enumerate().skip(1) {
        let s = cj * (rb / r).powi(j as i32 + 1);
        dr += s * (j as f64 * beta).cos();
        dtan += s * (j as f64 * beta).sin();
    }
    let er = Vec2::new(beta.cos(), beta.sin());
    let eb = Vec2::new(-beta.sin(), beta.cos());
    er * dr + eb * dtan
}

/// Solution of `Δφ = 1` on `r_b < r < R` with `∂_r φ(r_b) = 0`, `φ(R) = 0`.
pub fn radial_poisson_exact(r: f64, rb: f64, big_r: f64) -> f64 {
    let p = |s: f64| s * s / 4.0 - rb * rb / 2.0 * s.ln();
    p(r) - p(big_r)
}

/// Observed orders `log₂(e_k / e_{k+1})` for successive halvings.
pub fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// `∇φ` and Hessian for `φ = (0.3 sin x₁ cos x₂ + 0.1 x₁² x₂)(1 + t/2)`.
pub fn lagrangian_force() -> FnField {
    FnField::new(
        |x, t| Vec2::new(0.3 * x.x.cos() * x.y.cos() + 0.2 * x.x * x.y, -0.3 * x.x.sin() * x.y.sin() + 0.1 * x.x * x.x) * (1.0 + 0.5 * t),
        |x, t| {
            Mat2::new(
                -0.3 * x.x.sin() * x.y.cos() + 0.2 * x.y,
                -0.3 * x.x.cos() * x.y.sin() + 0.2 * x.x,
                -0.3 * x.x.cos() * x.y.sin() + 0.2 * x.x,
                -0.3 * x.x.sin() * x.y.cos(),
            ) * (1.0 + 0.5 * t)
        },
    )
}

pub fn lagrangian_u0(a: Vec2) -> Vec2 {
    Vec2::new(0.2 * a.y.sin(), 0.1 * a.x * a.x)
}

pub fn lagrangian_grad_u0(a: Vec2) -> Mat2 {
    Mat2::new(0.0, 0.2 * a.y.cos(), 0.2 * a.x, 0.0)
}
