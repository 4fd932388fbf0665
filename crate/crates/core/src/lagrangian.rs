//! Burgers flow with a potential source: paths `χ¨ = ∇φ(χ, t)`, the flow
//! Jacobian `Γ = ∇_α χ`, and the velocity update `û` along characteristics.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::{trace, CharTrace, Direction, HitKind, StopSet, TraceOptions, VelocityField};
use crate::error::{Error, Result};
use crate::geometry::{GridField, PolarGrid};
use crate::interface::{history_normal, InterfaceHistory};
use crate::transport::{hermite_mid, Region};
use crate::{Mat2, Vec2};

/// `det Γ` at or below this value counts as degenerate. `det Γ(0) = 1`, and a
/// tangential zero (as for `Γ = cos t · I`) never changes sign.
pub const DET_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LagrangianPath {
    pub times: Vec<f64>,
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub gamma: Vec<Mat2>,
    pub gamma_dot: Vec<Mat2>,
    pub det_history: Vec<f64>,
}

impl LagrangianPath {
    pub fn end(&self) -> Vec2 {
        *self.positions.last().unwrap()
    }

    pub fn min_det(&self) -> f64 {
        self.det_history.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `t,x1,x2,v1,v2,det_gamma`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x1", "x2", "v1", "v2", "det_gamma"])?;
        for k in 0..self.times.len() {
            let (p, v) = (self.positions[k], self.velocities[k]);
            out.write_record(
                [self.times[k], p.x, p.y, v.x, v.y, self.det_history[k]]
                    .iter()
                    .map(|x| format!("{x:e}")),
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Both eigenvalues of `g` have nonnegative real part.
pub fn eigen_precondition(g: &Mat2) -> bool {
    let tr = g.trace();
    let det = g.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        tr >= 0.0
    } else {
        // real roots: both ≥ 0 iff the sum and the product are
        tr >= 0.0 && det >= 0.0
    }
}

#[derive(Clone, Copy)]
struct State {
    x: Vec2,
    p: Vec2,
    g: Mat2,
    gd: Mat2,
}

impl State {
    fn axpy(&self, d: &State, h: f64) -> State {
        State {
            x: self.x + d.x * h,
            p: self.p + d.p * h,
            g: self.g + d.g * h,
            gd: self.gd + d.gd * h,
        }
    }
}

fn rhs(force: &dyn VelocityField, s: &State, t: f64) -> Result<State> {
    let f = force.velocity(s.x, t);
    let h = force.gradient(s.x, t);
    if !(f.iter().all(|c| c.is_finite()) && h.iter().all(|c| c.is_finite())) {
        return Err(Error::NanVelocity { x: s.x.x, y: s.x.y, t });
    }
    Ok(State {
        x: s.p,
        p: f,
        g: s.gd,
        gd: h * s.g,
    })
}

/// Integrates the path and its Jacobian from `(alpha, u0)` at `t0` to
/// `t_end` with fixed-step RK4. `force` supplies `∇φ` as its value and the
/// Hessian of `φ` as its gradient; `Γ(t0) = I`, `Γ˙(t0) = grad_u0`.
pub fn solve_lagrangian(
    force: &dyn VelocityField,
    alpha: Vec2,
    u0: Vec2,
    grad_u0: Mat2,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<LagrangianPath> {
    if !(dt > 0.0) || !(t_end >= t0) {
        return Err(Error::InvalidParameter(format!("step {dt} over [{t0}, {t_end}]")));
    }
    let steps = ((t_end - t0) / dt).ceil().max(1.0) as usize;
    let h = (t_end - t0) / steps as f64;
    let mut s = State {
        x: alpha,
        p: u0,
        g: Mat2::identity(),
        gd: grad_u0,
    };
    let mut path = LagrangianPath {
        times: vec![t0],
        positions: vec![s.x],
        velocities: vec![s.p],
        gamma: vec![s.g],
        gamma_dot: vec![s.gd],
        det_history: vec![1.0],
    };
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = rhs(force, &s, t)?;
        let k2 = rhs(force, &s.axpy(&k1, h / 2.0), t + h / 2.0)?;
        let k3 = rhs(force, &s.axpy(&k2, h / 2.0), t + h / 2.0)?;
        let k4 = rhs(force, &s.axpy(&k3, h), t + h)?;
        s = State {
            x: s.x + (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * (h / 6.0),
            p: s.p + (k1.p + k2.p * 2.0 + k3.p * 2.0 + k4.p) * (h / 6.0),
            g: s.g + (k1.g + k2.g * 2.0 + k3.g * 2.0 + k4.g) * (h / 6.0),
            gd: s.gd + (k1.gd + k2.gd * 2.0 + k3.gd * 2.0 + k4.gd) * (h / 6.0),
        };
        let tn = if k + 1 == steps { t_end } else { t + h };
        let det = s.g.determinant();
        if !(det > DET_FLOOR) {
            let prev = *path.det_history.last().unwrap();
            let w = if prev > det { ((prev - DET_FLOOR) / (prev - det)).clamp(0.0, 1.0) } else { 1.0 };
            return Err(Error::Degenerate { time: t + w * h, det });
        }
        path.times.push(tn);
        path.positions.push(s.x);
        path.velocities.push(s.p);
        path.gamma.push(s.g);
        path.gamma_dot.push(s.gd);
        path.det_history.push(det);
    }
    Ok(path)
}

/// Residual of the integral form
/// `Γ(t) = I + (t − t0)∇u₀ + ∫ (t − s) ∇⊗∇φ(χ(s), s) Γ(s) ds`
/// evaluated with the trapezoid rule on the stored samples.
pub fn integral_form_residual(force: &dyn VelocityField, path: &LagrangianPath, grad_u0: Mat2) -> f64 {
    let t0 = path.times[0];
    let hg: Vec<Mat2> = (0..path.times.len())
        .map(|k| force.gradient(path.positions[k], path.times[k]) * path.gamma[k])
        .collect();
    let mut worst: f64 = 0.0;
    for k in 1..path.times.len() {
        let t = path.times[k];
        let mut acc = Mat2::zeros();
        for m in 0..k {
            let h = path.times[m + 1] - path.times[m];
            acc += (hg[m] * (t - path.times[m]) + hg[m + 1] * (t - path.times[m + 1])) * (h / 2.0);
        }
        let rhs = Mat2::identity() + grad_u0 * (t - t0) + acc;
        worst = worst.max((rhs - path.gamma[k]).abs().max());
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct DetExpansionReport {
    /// Log-log slope of `|det Γ − det(I + t∇u₀)|` against `t`; `None` when the
    /// difference vanishes to round-off.
    pub exponent: Option<f64>,
    pub max_difference: f64,
    pub samples: usize,
    pub passed: bool,
}

/// Fits the short-time defect `det Γ(t) − (1 + tλ₁)(1 + tλ₂)` over
/// `[T/100, T/10]` and requires slope ≥ 1.9.
pub fn det_expansion_check(path: &LagrangianPath, grad_u0: Mat2) -> Result<DetExpansionReport> {
    let t0 = path.times[0];
    let span = path.times.last().unwrap() - t0;
    let (lo, hi) = (span / 100.0, span / 10.0);
    let mut pts = Vec::new();
    let mut max_difference: f64 = 0.0;
    for (k, &t) in path.times.iter().enumerate() {
        let s = t - t0;
        if s < lo * (1.0 - 1e-12) || s > hi * (1.0 + 1e-12) {
            continue;
        }
        let lin = (Mat2::identity() + grad_u0 * s).determinant();
        let d = (path.det_history[k] - lin).abs();
        max_difference = max_difference.max(d);
        pts.push((s, d));
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples in [T/100, T/10]; at least 4 needed",
            pts.len()
        )));
    }
    if max_difference <= 1e-13 {
        return Ok(DetExpansionReport {
            exponent: None,
            max_difference,
            samples: pts.len(),
            passed: true,
        });
    }
    let logs: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(_, d)| *d > 1e-15)
        .map(|(s, d)| (s.ln(), d.ln()))
        .collect();
    if logs.len() < 4 {
        return Err(Error::InsufficientSamples("defect vanishes at most samples".into()));
    }
    let slope = fit_slope(&logs);
    Ok(DetExpansionReport {
        exponent: Some(slope),
        max_difference,
        samples: pts.len(),
        passed: slope >= 1.9,
    })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `∫ ∇φ ds` from the trace end to its anchor, Simpson per step.
pub fn force_integral(force: &dyn VelocityField, tr: &CharTrace) -> Vec2 {
    let mut acc = Vec2::zeros();
    for k in 0..tr.times.len() - 1 {
        let (s0, s1) = (tr.times[k], tr.times[k + 1]);
        let h = s1 - s0;
        let fm = force.velocity(hermite_mid(tr, k), s0 + h / 2.0);
        let f0 = force.velocity(tr.positions[k], s0);
        let f1 = force.velocity(tr.positions[k + 1], s1);
        acc += (f0 + fm * 4.0 + f1) * (h / 6.0);
    }
    -acc
}

/// `û` on the sheath nodes of each slice, tagged by where the backward
/// path ends.
#[derive(Debug, Clone, Serialize)]
pub struct VelocityUpdate {
    pub times: Vec<f64>,
    pub slices: Vec<GridField<[f64; 2]>>,
    pub tags: Vec<Vec<Region>>,
}

impl VelocityUpdate {
    pub fn mask(&self, k: usize) -> Vec<bool> {
        self.tags[k].iter().map(|t| *t != Region::Exterior).collect()
    }

    pub fn dissipativity(&self, eta0: f64, eps: f64) -> DissipativityReport {
        let mut total = DissipativityReport::empty();
        for k in 0..self.slices.len() {
            total.merge(dissipativity_check(&self.slices[k], Some(&self.mask(k)), eta0, eps));
        }
        total
    }
}

/// Velocity update: backward paths of `v` from each sheath node carry
/// `u₀(α) + ∫₀ᵗ ∇φ` from `t = 0`, or `−ν + ∫_{t₀}^t ∇φ` from the interface.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    v: &dyn VelocityField,
    force: &dyn VelocityField,
    u0: &(dyn Fn(Vec2) -> Vec2 + Sync),
    itf: Option<&InterfaceHistory>,
    grids: &[PolarGrid],
    times: &[f64],
    target_radius: Option<f64>,
    opts: &TraceOptions,
) -> Result<VelocityUpdate> {
    if grids.len() != times.len() {
        return Err(Error::GridMismatch("one grid per time level expected".into()));
    }
    let opts = TraceOptions { jacobian: false, ..*opts };
    let mut slices = Vec::with_capacity(times.len());
    let mut tags = Vec::with_capacity(times.len());
    for (grid, &t) in grids.iter().zip(times) {
        let coords = grid.node_coords();
        let samples: Vec<Result<([f64; 2], Region)>> = coords
            .par_iter()
            .map(|c| {
                let x = Vec2::new(c[0], c[1]);
                let mut stops = StopSet::new(target_radius, t);
                if let Some(h) = itf {
                    use crate::characteristics::InterfaceLocator;
                    let r = h.radius(x.y.atan2(x.x), t);
                    if x.norm() > r + 1e-9 * r {
                        return Ok(([0.0; 2], Region::Exterior));
                    }
                    // nodes on S(t) carry the datum itself; a zero-length
                    // trace would classify them by round-off
                    if t > 0.0 && x.norm() >= r - 1e-9 * r {
                        let u = -history_normal(h, x.y.atan2(x.x), t);
                        return Ok(([u.x, u.y], Region::Interface));
                    }
                    stops = stops.with_interface(h);
                }
                let tr = trace(v, x, t, Direction::Backward, &stops, &opts)?;
                let push = force_integral(force, &tr);
                let foot = tr.end();
                let (base, region) = match tr.hit {
                    HitKind::TargetBoundary(s) => return Err(Error::BackwardHitsTarget(s)),
                    HitKind::Interface(t0) => {
                        let h = itf.unwrap();
                        (-history_normal(h, foot.y.atan2(foot.x), t0), Region::Interface)
                    }
                    _ => (u0(foot), Region::Initial),
                };
                let u = base + push;
                Ok(([u.x, u.y], region))
            })
            .collect();
        let mut vals = Vec::with_capacity(samples.len());
        let mut tg = Vec::with_capacity(samples.len());
        for s in samples {
            let (a, b) = s?;
            vals.push(a);
            tg.push(b);
        }
        slices.push(GridField::new(grid.without_times(), vals)?);
        tags.push(tg);
    }
    Ok(VelocityUpdate {
        times: times.to_vec(),
        slices,
        tags,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipativityReport {
    pub nodes: usize,
    pub violations: usize,
    /// Largest `û·x/|x|² + η₀/2`; nonpositive when the bound holds.
    pub worst_margin: f64,
    pub worst_point: Option<[f64; 2]>,
}

impl DissipativityReport {
    fn empty() -> Self {
        Self {
            nodes: 0,
            violations: 0,
            worst_margin: f64::NEG_INFINITY,
            worst_point: None,
        }
    }

    fn merge(&mut self, o: DissipativityReport) {
        self.nodes += o.nodes;
        self.violations += o.violations;
        if o.worst_margin > self.worst_margin {
            self.worst_margin = o.worst_margin;
            self.worst_point = o.worst_point;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `û·x ≤ −(η₀/2)|x|²(1 − ε)` at every (masked) node.
pub fn dissipativity_check(
    u_hat: &GridField<[f64; 2]>,
    mask: Option<&[bool]>,
    eta0: f64,
    eps: f64,
) -> DissipativityReport {
    let mut rep = DissipativityReport::empty();
    for (n, (c, u)) in u_hat.grid.node_coords().iter().zip(&u_hat.values).enumerate() {
        if mask.is_some_and(|m| !m[n]) {
            continue;
        }
        let x = Vec2::new(c[0], c[1]);
        let r2 = x.norm_squared();
        if r2 == 0.0 {
            continue;
        }
        let ux = Vec2::new(u[0], u[1]).dot(&x);
        rep.nodes += 1;
        if ux > -0.5 * eta0 * r2 * (1.0 - eps) {
            rep.violations += 1;
        }
        let m = ux / r2 + 0.5 * eta0;
        if m > rep.worst_margin {
            rep.worst_margin = m;
            rep.worst_point = Some([x.x, x.y]);
        }
    }
    rep
}

/// Vector field given per time level on its own grid, linear in time
/// between levels. Derivatives come from finite differences per slice.
pub struct SlicedField {
    times: Vec<f64>,
    slices: Vec<crate::characteristics::GridVelocity>,
}

impl SlicedField {
    pub fn new(times: Vec<f64>, slices: Vec<GridField<[f64; 2]>>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::GridMismatch("one slice per time level expected".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("slice times must increase".into()));
        }
        Ok(Self {
            times,
            slices: slices.into_iter().map(crate::characteristics::GridVelocity::new).collect(),
        })
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, k + 1, w)
    }
}

impl VelocityField for SlicedField {
    fn velocity(&self, x: Vec2, t: f64) -> Vec2 {
        let (a, b, w) = self.bracket(t);
        let va = self.slices[a].velocity(x, t);
        if w == 0.0 {
            return va;
        }
        va * (1.0 - w) + self.slices[b].velocity(x, t) * w
    }
    fn gradient(&self, x: Vec2, t: f64) -> Mat2 {
        let (a, b, w) = self.bracket(t);
        let ga = self.slices[a].gradient(x, t);
        if w == 0.0 {
            return ga;
        }
        ga * (1.0 - w) + self.slices[b].gradient(x, t) * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{FnField, LinearField};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn eigen_precondition_cases() {
        assert!(eigen_precondition(&Mat2::identity()));
        assert!(eigen_precondition(&Mat2::new(0.0, 1.0, 0.0, 0.0)));
        assert!(!eigen_precondition(&-Mat2::identity()));
        // rotation generator: eigenvalues ±i
        assert!(eigen_precondition(&Mat2::new(0.0, -1.0, 1.0, 0.0)));
        assert!(!eigen_precondition(&Mat2::new(1.0, 0.0, 0.0, -0.5)));
    }

    #[test]
    fn free_streaming() {
        let g = Mat2::new(0.0, 1.0, 0.0, 0.0);
        let u0 = Vec2::new(0.3, -0.2);
        let a = Vec2::new(1.0, 2.0);
        let p = solve_lagrangian(&LinearField::zero(), a, u0, g, 0.0, 2.0, 1e-2).unwrap();
        for k in 0..p.times.len() {
            let t = p.times[k];
            assert!((p.positions[k] - (a + u0 * t)).norm() < 1e-12);
            assert!((p.gamma[k] - (Mat2::identity() + g * t)).abs().max() < 1e-12);
            assert!((p.det_history[k] - 1.0).abs() < 1e-12);
            assert_eq!(p.velocities[k], u0);
        }
        let r = det_expansion_check(&p, g).unwrap();
        assert!(r.passed && r.exponent.is_none());
    }

    #[test]
    fn hyperbolic_and_degenerate_closed_forms() {
        let a = Vec2::new(0.7, -0.4);
        let p = solve_lagrangian(&LinearField::scaled_identity(1.0), a, Vec2::zeros(), Mat2::zeros(), 0.0, 1.0, 1e-3)
            .unwrap();
        for k in 0..p.times.len() {
            let t: f64 = p.times[k];
            assert!((p.positions[k] - a * t.cosh()).norm() < 1e-12);
            assert!((p.det_history[k] - t.cosh().powi(2)).abs() < 1e-12);
        }
        let r = det_expansion_check(&p, Mat2::zeros()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.exponent.unwrap() - 2.0).abs() < 0.05);

        let e = solve_lagrangian(&LinearField::scaled_identity(-1.0), a, Vec2::zeros(), Mat2::zeros(), 0.0, 2.0, 1e-3)
            .unwrap_err();
        match e {
            Error::Degenerate { time, .. } => assert!((time - FRAC_PI_2).abs() < 0.01, "{time}"),
            other => panic!("{other}"),
        }
        assert!(solve_lagrangian(&LinearField::scaled_identity(-1.0), a, Vec2::zeros(), Mat2::zeros(), 0.0, 1.5, 1e-3)
            .is_ok());
    }

    #[test]
    fn integral_form_agrees_at_second_order() {
        let f = FnField::new(
            |x, t| Vec2::new((x.y + t).sin(), 0.3 * x.x * x.x),
            |x, t| Mat2::new(0.0, (x.y + t).cos(), 0.6 * x.x, 0.0),
        );
        let g = Mat2::new(0.2, 0.1, -0.1, 0.3);
        let res: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&dt| {
                let p = solve_lagrangian(&f, Vec2::new(1.0, 0.5), Vec2::new(0.1, 0.0), g, 0.0, 0.5, dt).unwrap();
                integral_form_residual(&f, &p, g)
            })
            .collect();
        let order = (res[0] / res[1]).log2();
        assert!(order > 1.9, "{res:?}");
    }

    #[test]
    fn velocity_update_pure_transport_and_hyperbolic() {
        let grid = PolarGrid::new(0.5, 1.5, 5, 8).unwrap();
        let u0 = |x: Vec2| Vec2::new(x.y, -x.x) * 0.2 - x;
        let v = LinearField::scaled_identity(-1.0);
        let up = velocity_update(&v, &LinearField::zero(), &u0, None, &[grid.clone()], &[0.3], None, &TraceOptions::new(1e-3))
            .unwrap();
        for (c, u) in grid.node_coords().iter().zip(&up.slices[0].values) {
            let foot = Vec2::new(c[0], c[1]) * 0.3f64.exp();
            let want = u0(foot);
            assert!((Vec2::new(u[0], u[1]) - want).norm() < 1e-10);
        }

        // û = χ tanh t is the self-consistent field for φ = |x|²/2, u₀ = 0
        let v = FnField::new(|x, t: f64| x * t.tanh(), |_, t: f64| Mat2::identity() * t.tanh());
        let t = 0.4f64;
        let up = velocity_update(
            &v,
            &LinearField::scaled_identity(1.0),
            &|_| Vec2::zeros(),
            None,
            &[grid.clone()],
            &[t],
            None,
            &TraceOptions::new(1e-3),
        )
        .unwrap();
        for (c, u) in grid.node_coords().iter().zip(&up.slices[0].values) {
            let alpha = Vec2::new(c[0], c[1]) / t.cosh();
            assert!((Vec2::new(u[0], u[1]) - alpha * t.sinh()).norm() < 1e-10);
        }
    }

    #[test]
    fn dissipativity_cases() {
        let grid = PolarGrid::new(0.5, 1.5, 4, 8).unwrap();
        let f = GridField::from_fn(grid.clone(), |x, _| [-x.x, -x.y]).unwrap();
        let r = dissipativity_check(&f, None, 2.0, 1e-9);
        assert!(r.passed() && r.worst_margin.abs() < 1e-14);
        let f = GridField::from_fn(grid.clone(), |x, _| [-x.x - 0.1 * x.y, -x.y + 0.1 * x.x]).unwrap();
        let r = dissipativity_check(&f, None, 1.0, 1e-9);
        assert!(r.passed() && r.worst_margin < -0.49);
        let f = GridField::from_fn(grid.clone(), |x, _| [x.x, x.y]).unwrap();
        let r = dissipativity_check(&f, None, 2.0, 1e-9);
        assert_eq!(r.violations, r.nodes);
    }

    #[test]
    fn csv_header() {
        let p = solve_lagrangian(&LinearField::zero(), Vec2::new(1.0, 0.0), Vec2::zeros(), Mat2::zeros(), 0.0, 0.1, 0.05)
            .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,x1,x2,v1,v2,det_gamma\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
