//! Checks of the double-integral Gronwall inequality and of the quadratic
//! bootstrap bound on sampled functions.

use serde::Serialize;

use crate::error::{Error, Result};

/// Running integrals `∫₀^{t_m} g` on a uniform grid of spacing `h`, fourth
/// order at every index: composite Simpson on an even prefix, the 3/8 rule
/// on a trailing triple, and a cubic fit for the first cell (quadratic when
/// only three samples exist).
pub fn cumulative_simpson(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (g[0] + g[1]);
        return out;
    }
    out[1] = if n >= 4 {
        h / 24.0 * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
    } else {
        h / 12.0 * (5.0 * g[0] + 8.0 * g[1] - g[2])
    };
    for m in 2..n {
        out[m] = if m % 2 == 0 {
            out[m - 2] + h / 3.0 * (g[m - 2] + 4.0 * g[m - 1] + g[m])
        } else {
            out[m - 3] + 3.0 * h / 8.0 * (g[m - 3] + 3.0 * g[m - 2] + 3.0 * g[m - 1] + g[m])
        };
    }
    out
}

/// `∫₀^{t_m} ∫₀^{t₁} f(s) e^{c(t_m − 2t₁ + s)} ds dt₁` at every grid index.
pub fn gronwall_kernel_integrals(f: &[f64], c: f64, h: f64) -> Vec<f64> {
    let inner: Vec<f64> = f.iter().enumerate().map(|(k, v)| v * (c * k as f64 * h).exp()).collect();
    let inner = cumulative_simpson(&inner, h);
    let outer: Vec<f64> = inner
        .iter()
        .enumerate()
        .map(|(k, v)| v * (-2.0 * c * k as f64 * h).exp())
        .collect();
    let outer = cumulative_simpson(&outer, h);
    outer
        .iter()
        .enumerate()
        .map(|(m, v)| v * (c * m as f64 * h).exp())
        .collect()
}

/// `f(t) + c² ∫₀^t ∫₀^{t₁} f(s) e^{c(t − 2t₁ + s)} ds dt₁` for samples of `f`
/// on `t_k = k h`; `t` must be a grid time.
pub fn gronwall_bound(f: &[f64], c: f64, h: f64, t: f64) -> Result<f64> {
    let m = grid_index(f.len(), h, t)?;
    let k = gronwall_kernel_integrals(&f[..=m], c, h);
    Ok(f[m] + c * c * k[m])
}

fn grid_index(n: usize, h: f64, t: f64) -> Result<usize> {
    let pos = t / h;
    let m = pos.round();
    if !(h > 0.0) || (pos - m).abs() > 1e-9 * pos.abs().max(1.0) || m < 0.0 || m as usize >= n {
        return Err(Error::OffGrid(t));
    }
    Ok(m as usize)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelCheck {
    pub c: f64,
    pub t: f64,
    pub quadrature: f64,
    pub closed_form: f64,
    pub residual: f64,
    /// Residual relative to `max(1, |closed_form|)`.
    pub relative: f64,
}

/// Quadrature of the kernel with `f ≡ 1` against `(cosh(ct) − 1)/c²`.
pub fn kernel_identity_check(c: f64, t: f64) -> Result<KernelCheck> {
    if !(c > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("c = {c}, t = {t}")));
    }
    let closed_form = ((c * t).cosh() - 1.0) / (c * c);
    if t == 0.0 {
        return Ok(KernelCheck {
            c,
            t,
            quadrature: 0.0,
            closed_form,
            residual: 0.0,
            relative: 0.0,
        });
    }
    let n = (((c * t) * 400.0).ceil() as usize).max(64);
    let n = n + n % 2;
    let h = t / n as f64;
    let quadrature = gronwall_kernel_integrals(&vec![1.0; n + 1], c, h)[n];
    let residual = (quadrature - closed_form).abs();
    Ok(KernelCheck {
        c,
        t,
        quadrature,
        closed_form,
        residual,
        relative: residual / closed_form.abs().max(1.0),
    })
}

/// Samples `f`, `y` on `t_k = k h` with coupling `c`.
#[derive(Debug, Clone, Serialize)]
pub struct GronwallInstance {
    pub f: Vec<f64>,
    pub y: Vec<f64>,
    pub c: f64,
    pub h: f64,
}

impl GronwallInstance {
    pub fn validate(&self) -> Result<()> {
        if self.f.len() != self.y.len() || self.f.len() < 3 {
            return Err(Error::InsufficientSamples("f and y need equal length ≥ 3".into()));
        }
        if !(self.c > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidParameter("c and h must be positive".into()));
        }
        if let Some(k) = self.f.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::PremiseViolated {
                index: k,
                reason: "f must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    /// First index where `y ≤ f + c²∬y` fails, if any.
    pub premise_failure: Option<usize>,
    pub checked: usize,
    /// Largest `y − bound` over checked indices.
    pub max_excess: f64,
    pub passed: bool,
}

/// `∫₀^{t_m} ∫₀^{t₁} y` at every index.
pub fn double_integral(y: &[f64], h: f64) -> Vec<f64> {
    cumulative_simpson(&cumulative_simpson(y, h), h)
}

/// Checks the premise at every grid time and the bound wherever the
/// premise holds on the whole prefix, up to a tolerance of order `h⁴`.
pub fn verify_gronwall(inst: &GronwallInstance) -> Result<GronwallReport> {
    inst.validate()?;
    let c2 = inst.c * inst.c;
    let iy = double_integral(&inst.y, inst.h);
    let kf = gronwall_kernel_integrals(&inst.f, inst.c, inst.h);
    // both sides carry fourth-order quadrature error
    let q = 10.0 * inst.h.powi(4) * (1.0 + c2 * c2);
    let scale = |v: f64| (q + 1e-12) * v.abs().max(1.0);
    let mut report = GronwallReport {
        premise_failure: None,
        checked: 0,
        max_excess: f64::NEG_INFINITY,
        passed: true,
    };
    for m in 0..inst.y.len() {
        let rhs = inst.f[m] + c2 * iy[m];
        if inst.y[m] > rhs + scale(rhs) {
            report.premise_failure = Some(m);
            break;
        }
        let bound = inst.f[m] + c2 * kf[m];
        let excess = inst.y[m] - bound;
        report.max_excess = report.max_excess.max(excess);
        if excess > scale(bound) {
            report.passed = false;
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Smallest root `2C₀/(1 + √(1 − 4C₀C₁))` of `C₁r² − r + C₀ = 0`.
pub fn quadratic_bootstrap(c0: f64, c1: f64) -> Result<f64> {
    if !(c0 > 0.0) || !(c1 >= 0.0) || !c0.is_finite() || !c1.is_finite() {
        return Err(Error::InvalidParameter(format!("need C0 > 0, C1 ≥ 0, got {c0}, {c1}")));
    }
    if c0 * c1 > 0.125 {
        return Err(Error::InvalidParameter(format!("C0·C1 = {} exceeds 1/8", c0 * c1)));
    }
    Ok(2.0 * c0 / (1.0 + (1.0 - 4.0 * c0 * c1).sqrt()))
}

/// Larger root, `∞` for the linear case.
pub fn bootstrap_upper_root(c0: f64, c1: f64) -> f64 {
    if c1 == 0.0 {
        return f64::INFINITY;
    }
    (1.0 + (1.0 - 4.0 * c0 * c1).sqrt()) / (2.0 * c1)
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapReport {
    pub r1: f64,
    pub r2: f64,
    pub max_f: f64,
    pub max_jump: f64,
    pub passed: bool,
}

/// With `f(0) ≤ C₀`, `f ≤ C₀ + C₁f²` and adjacent jumps at most
/// `(r₂ − r₁)/2`, every sample stays below `r₁ ≤ 2C₀`.
pub fn bootstrap_trajectory_check(f: &[f64], c0: f64, c1: f64) -> Result<BootstrapReport> {
    let r1 = quadratic_bootstrap(c0, c1)?;
    let r2 = bootstrap_upper_root(c0, c1);
    if f.is_empty() {
        return Err(Error::EmptyField);
    }
    let tol = 1e-12 * c0.max(1.0);
    if f[0] > c0 + tol {
        return Err(Error::PremiseViolated {
            index: 0,
            reason: format!("f(0) = {} exceeds C0 = {c0}", f[0]),
        });
    }
    let mut max_jump: f64 = 0.0;
    for (k, &v) in f.iter().enumerate() {
        if v > c0 + c1 * v * v + tol {
            return Err(Error::PremiseViolated {
                index: k,
                reason: format!("f = {v} exceeds C0 + C1 f^2"),
            });
        }
        if k > 0 {
            let jump = (v - f[k - 1]).abs();
            max_jump = max_jump.max(jump);
            if jump > 0.5 * (r2 - r1) {
                return Err(Error::PremiseViolated {
                    index: k,
                    reason: format!("jump {jump} exceeds (r2 - r1)/2 = {}", 0.5 * (r2 - r1)),
                });
            }
        }
    }
    let max_f = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BootstrapReport {
        r1,
        r2,
        max_f,
        max_jump,
        passed: max_f <= r1 + tol && max_f <= 2.0 * c0,
    })
}
