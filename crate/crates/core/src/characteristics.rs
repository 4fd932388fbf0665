//! Characteristic curves `dχ/ds = v(χ, s)` with Jacobian propagation,
//! terminal-hit classification and the back-map to initial data.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridField;
use crate::{Mat2, Vec2};

/// A velocity field in the plane. `gradient(x, t)[(i, j)] = ∂v_i/∂x_j`.
pub trait VelocityField: Sync {
    fn velocity(&self, x: Vec2, t: f64) -> Vec2;
    fn gradient(&self, x: Vec2, t: f64) -> Mat2;
    fn divergence(&self, x: Vec2, t: f64) -> f64 {
        self.gradient(x, t).trace()
    }
    /// `h[i][(j, k)] = ∂²v_i/∂x_j∂x_k`, when available.
    fn hessian(&self, _x: Vec2, _t: f64) -> Option<[Mat2; 2]> {
        None
    }
}

/// Dissipativity margin `v·x + (η₀/2)|x|²`, nonpositive where the field
/// pulls inward at rate η₀.
pub fn dissipativity_margin(v: &dyn VelocityField, x: Vec2, t: f64, eta0: f64) -> f64 {
    v.velocity(x, t).dot(&x) + 0.5 * eta0 * x.norm_squared()
}

/// Affine field `v = A x + b`.
#[derive(Debug, Clone, Copy)]
pub struct LinearField {
    pub a: Mat2,
    pub b: Vec2,
}

impl LinearField {
    pub fn new(a: Mat2) -> Self {
        Self { a, b: Vec2::zeros() }
    }
    pub fn scaled_identity(c: f64) -> Self {
        Self::new(Mat2::identity() * c)
    }
    /// Rigid rotation `(−ω x₂, ω x₁)`.
    pub fn rotation(omega: f64) -> Self {
        Self::new(Mat2::new(0.0, -omega, omega, 0.0))
    }
    pub fn zero() -> Self {
        Self::new(Mat2::zeros())
    }
}

impl VelocityField for LinearField {
    fn velocity(&self, x: Vec2, _t: f64) -> Vec2 {
        self.a * x + self.b
    }
    fn gradient(&self, _x: Vec2, _t: f64) -> Mat2 {
        self.a
    }
    fn hessian(&self, _x: Vec2, _t: f64) -> Option<[Mat2; 2]> {
        Some([Mat2::zeros(); 2])
    }
}

type VFn = Box<dyn Fn(Vec2, f64) -> Vec2 + Send + Sync>;
type GFn = Box<dyn Fn(Vec2, f64) -> Mat2 + Send + Sync>;
type HFn = Box<dyn Fn(Vec2, f64) -> [Mat2; 2] + Send + Sync>;

/// Field given by closures.
pub struct FnField {
    v: VFn,
    g: GFn,
    h: Option<HFn>,
}

impl FnField {
    pub fn new(
        v: impl Fn(Vec2, f64) -> Vec2 + Send + Sync + 'static,
        g: impl Fn(Vec2, f64) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        Self {
            v: Box::new(v),
            g: Box::new(g),
            h: None,
        }
    }

    pub fn with_hessian(mut self, h: impl Fn(Vec2, f64) -> [Mat2; 2] + Send + Sync + 'static) -> Self {
        self.h = Some(Box::new(h));
        self
    }
}

impl VelocityField for FnField {
    fn velocity(&self, x: Vec2, t: f64) -> Vec2 {
        (self.v)(x, t)
    }
    fn gradient(&self, x: Vec2, t: f64) -> Mat2 {
        (self.g)(x, t)
    }
    fn hessian(&self, x: Vec2, t: f64) -> Option<[Mat2; 2]> {
        self.h.as_ref().map(|h| h(x, t))
    }
}

/// Grid-backed field; derivatives by finite differences on the same grid.
#[derive(Debug, Clone)]
pub struct GridVelocity {
    pub field: GridField<[f64; 2]>,
    grad: [GridField<[f64; 2]>; 2],
    hess: [[GridField<[f64; 2]>; 2]; 2],
}

impl GridVelocity {
    pub fn new(field: GridField<[f64; 2]>) -> Self {
        let grad = [field.component(0).gradient(), field.component(1).gradient()];
        let hess = [
            [grad[0].component(0).gradient(), grad[0].component(1).gradient()],
            [grad[1].component(0).gradient(), grad[1].component(1).gradient()],
        ];
        Self { field, grad, hess }
    }
}

impl VelocityField for GridVelocity {
    fn velocity(&self, x: Vec2, t: f64) -> Vec2 {
        self.field.sample_vec(x, t)
    }
    fn gradient(&self, x: Vec2, t: f64) -> Mat2 {
        let a = self.grad[0].sample(x, t);
        let b = self.grad[1].sample(x, t);
        Mat2::new(a[0], a[1], b[0], b[1])
    }
    fn hessian(&self, x: Vec2, t: f64) -> Option<[Mat2; 2]> {
        let h = |i: usize| {
            let r0 = self.hess[i][0].sample(x, t);
            let r1 = self.hess[i][1].sample(x, t);
            // symmetrize the two one-sided orderings of the mixed derivative
            let m = 0.5 * (r0[1] + r1[0]);
            Mat2::new(r0[0], m, m, r1[1])
        };
        Some([h(0), h(1)])
    }
}

/// Radial description `r(β, t)` of a moving closed curve.
pub trait InterfaceLocator: Sync {
    fn radius(&self, beta: f64, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", content = "time", rename_all = "snake_case")]
pub enum HitKind {
    TargetBoundary(f64),
    InitialSlab,
    Interface(f64),
    HorizonEnd,
}

impl HitKind {
    pub fn tag(&self) -> &'static str {
        match self {
            HitKind::TargetBoundary(_) => "target",
            HitKind::InitialSlab => "initial",
            HitKind::Interface(_) => "interface",
            HitKind::HorizonEnd => "horizon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Stop predicates for a trace.
#[derive(Clone, Copy)]
pub struct StopSet<'a> {
    pub target_radius: Option<f64>,
    pub interface: Option<&'a dyn InterfaceLocator>,
    pub horizon: f64,
    pub boundary_tol: f64,
    pub interface_tol: f64,
}

impl<'a> StopSet<'a> {
    pub fn new(target_radius: Option<f64>, horizon: f64) -> Self {
        Self {
            target_radius,
            interface: None,
            horizon,
            boundary_tol: 1e-13 * target_radius.unwrap_or(1.0),
            interface_tol: 1e-13,
        }
    }

    pub fn with_interface(mut self, itf: &'a dyn InterfaceLocator) -> Self {
        self.interface = Some(itf);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub dt: f64,
    pub max_steps: usize,
    pub jacobian: bool,
}

impl TraceOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            max_steps: 10_000_000,
            jacobian: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CharTrace {
    pub times: Vec<f64>,
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub jacobians: Vec<Mat2>,
    pub hit: HitKind,
}

impl CharTrace {
    pub fn end(&self) -> Vec2 {
        *self.positions.last().unwrap()
    }
    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn max_jacobian_entry(&self) -> f64 {
        self.jacobians
            .iter()
            .flat_map(|j| j.iter().copied())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the trace as CSV with columns `s,x1,x2,J11,J12,J21,J22,hit_tag`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s", "x1", "x2", "J11", "J12", "J21", "J22", "hit_tag"])?;
        for (k, (&s, p)) in self.times.iter().zip(&self.positions).enumerate() {
            let j = self.jacobians.get(k).copied().unwrap_or_else(Mat2::identity);
            let tag = if k + 1 == self.times.len() { self.hit.tag() } else { "" };
            out.write_record([
                s.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                j[(0, 0)].to_string(),
                j[(0, 1)].to_string(),
                j[(1, 0)].to_string(),
                j[(1, 1)].to_string(),
                tag.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn eval(v: &dyn VelocityField, x: Vec2, s: f64) -> Result<Vec2> {
    let u = v.velocity(x, s);
    if u.x.is_finite() && u.y.is_finite() {
        Ok(u)
    } else {
        Err(Error::NanVelocity { x: x.x, y: x.y, t: s })
    }
}

/// One classical RK4 step of the path (and Jacobian, if given).
fn rk4_step(v: &dyn VelocityField, x: Vec2, jac: Option<Mat2>, s: f64, h: f64) -> Result<(Vec2, Option<Mat2>)> {
    let k1 = eval(v, x, s)?;
    let x2 = x + k1 * (h / 2.0);
    let k2 = eval(v, x2, s + h / 2.0)?;
    let x3 = x + k2 * (h / 2.0);
    let k3 = eval(v, x3, s + h / 2.0)?;
    let x4 = x + k3 * h;
    let k4 = eval(v, x4, s + h)?;
    let xn = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let jn = jac.map(|j| {
        let m1 = v.gradient(x, s) * j;
        let m2 = v.gradient(x2, s + h / 2.0) * (j + m1 * (h / 2.0));
        let m3 = v.gradient(x3, s + h / 2.0) * (j + m2 * (h / 2.0));
        let m4 = v.gradient(x4, s + h) * (j + m3 * h);
        j + (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (h / 6.0)
    });
    Ok((xn, jn))
}

/// Integrates `dχ/ds = v(χ, s)` from `(x, t_anchor)` until a stop predicate
/// fires: the target circle (bisection), the interface (bisection), `s = 0`
/// backward, or the horizon forward.
pub fn trace(
    v: &dyn VelocityField,
    x: Vec2,
    t_anchor: f64,
    direction: Direction,
    stops: &StopSet,
    opts: &TraceOptions,
) -> Result<CharTrace> {
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("step {} must be positive", opts.dt)));
    }
    let (sign, end) = match direction {
        Direction::Forward => (1.0, stops.horizon),
        Direction::Backward => (-1.0, 0.0),
    };
    let target_g = |p: Vec2| stops.target_radius.map(|rb| p.norm() - rb);
    let iface_g = |p: Vec2, s: f64| stops.interface.map(|itf| p.norm() - itf.radius(p.y.atan2(p.x), s));

    if let Some(g) = target_g(x) {
        if g < -stops.boundary_tol {
            return Err(Error::StartInsideTarget);
        }
    }
    let mut tr = CharTrace {
        times: vec![t_anchor],
        positions: vec![x],
        velocities: vec![eval(v, x, t_anchor)?],
        jacobians: if opts.jacobian { vec![Mat2::identity()] } else { Vec::new() },
        hit: HitKind::HorizonEnd,
    };
    let mut s = t_anchor;
    let mut p = x;
    let mut jac = opts.jacobian.then(Mat2::identity);
    let mut steps = 0usize;
    let span_tol = 1e-12 * opts.dt;

    loop {
        let remaining = (end - s) * sign;
        if remaining <= span_tol {
            tr.hit = match direction {
                Direction::Forward => HitKind::HorizonEnd,
                Direction::Backward => HitKind::InitialSlab,
            };
            return Ok(tr);
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepCapExceeded(opts.max_steps));
        }
        let last = remaining <= opts.dt * (1.0 + 1e-9);
        let h = sign * if last { remaining } else { opts.dt };
        let (pn, jn) = rk4_step(v, p, jac, s, h)?;
        let sn = if last { end } else { s + h };

        if let Some(g_new) = target_g(pn) {
            if g_new <= 0.0 {
                let (ph, jh, sh) = if g_new >= -stops.boundary_tol {
                    (pn, jn, sn)
                } else {
                    let tol = stops.boundary_tol;
                    locate(v, p, jac, s, h, |q, _| q.norm() - stops.target_radius.unwrap(), tol, true)?
                };
                push(&mut tr, v, sh, ph, jh)?;
                tr.hit = HitKind::TargetBoundary(sh);
                return Ok(tr);
            }
        }
        if let (Some(g_prev), Some(g_new)) = (iface_g(p, s), iface_g(pn, sn)) {
            let tol = stops.interface_tol;
            if g_prev <= tol && g_new > tol {
                let (ph, jh, sh) = if g_prev > 0.0 {
                    (p, jac, s)
                } else {
                    let itf = stops.interface.unwrap();
                    locate(v, p, jac, s, h, |q, t| q.norm() - itf.radius(q.y.atan2(q.x), t), tol, false)?
                };
                if sh != s {
                    push(&mut tr, v, sh, ph, jh)?;
                }
                tr.hit = HitKind::Interface(sh);
                return Ok(tr);
            }
        }
        push(&mut tr, v, sn, pn, jn)?;
        s = sn;
        p = pn;
        jac = jn;
    }
}

fn push(tr: &mut CharTrace, v: &dyn VelocityField, s: f64, p: Vec2, j: Option<Mat2>) -> Result<()> {
    tr.times.push(s);
    tr.positions.push(p);
    tr.velocities.push(eval(v, p, s)?);
    if let Some(j) = j {
        tr.jacobians.push(j);
    }
    Ok(())
}

/// Bisects the fraction of the step `h` at which `g` changes sign. `g` is
/// positive at the step start when `positive_first`, else nonpositive.
#[allow(clippy::too_many_arguments)]
fn locate(
    v: &dyn VelocityField,
    p: Vec2,
    jac: Option<Mat2>,
    s: f64,
    h: f64,
    g: impl Fn(Vec2, f64) -> f64,
    tol: f64,
    positive_first: bool,
) -> Result<(Vec2, Option<Mat2>, f64)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = rk4_step(v, p, jac, s, h)?;
    let mut best_s = s + h;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (pm, jm) = rk4_step(v, p, jac, s, mid * h)?;
        let gm = g(pm, s + mid * h);
        best = (pm, jm);
        best_s = s + mid * h;
        if gm.abs() <= tol {
            break;
        }
        if (gm > 0.0) == positive_first {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-17 {
            break;
        }
    }
    Ok((best.0, best.1, best_s))
}

/// Re-integrates `∂_s J = ∇v(χ(s), s) J`, `J = I` at the anchor, along the
/// stored path. Midpoints use cubic Hermite interpolation of the path.
pub fn jacobian_along(v: &dyn VelocityField, tr: &CharTrace) -> Result<CharTrace> {
    let mut out = tr.clone();
    let mut j = Mat2::identity();
    out.jacobians = Vec::with_capacity(tr.times.len());
    out.jacobians.push(j);
    for k in 0..tr.times.len().saturating_sub(1) {
        let (s0, s1) = (tr.times[k], tr.times[k + 1]);
        let h = s1 - s0;
        let (x0, x1) = (tr.positions[k], tr.positions[k + 1]);
        let (v0, v1) = (tr.velocities[k], tr.velocities[k + 1]);
        let xm = (x0 + x1) * 0.5 + (v0 - v1) * (h / 8.0);
        let g0 = v.gradient(x0, s0);
        let gm = v.gradient(xm, s0 + h / 2.0);
        let g1 = v.gradient(x1, s1);
        if g0.iter().chain(gm.iter()).chain(g1.iter()).any(|e| !e.is_finite()) {
            return Err(Error::NanVelocity { x: xm.x, y: xm.y, t: s0 });
        }
        let m1 = g0 * j;
        let m2 = gm * (j + m1 * (h / 2.0));
        let m3 = gm * (j + m2 * (h / 2.0));
        let m4 = g1 * (j + m3 * h);
        j += (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (h / 6.0);
        out.jacobians.push(j);
    }
    Ok(out)
}

/// Foot point `χ(0; t, x)` of the backward characteristic.
pub fn alpha_map(v: &dyn VelocityField, x: Vec2, t: f64, target_radius: Option<f64>, dt: f64) -> Result<Vec2> {
    let stops = StopSet::new(target_radius, t);
    let opts = TraceOptions {
        jacobian: false,
        ..TraceOptions::new(dt)
    };
    let tr = trace(v, x, t, Direction::Backward, &stops, &opts)?;
    match tr.hit {
        HitKind::TargetBoundary(s) => Err(Error::BackwardHitsTarget(s)),
        _ => Ok(tr.end()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub starts: usize,
    pub samples: usize,
    /// Largest `|χ(s)| / (e^{−η₀ s/2}|x|)` seen.
    pub worst_ratio: f64,
    pub hits: Vec<HitKind>,
}

impl DecayReport {
    pub fn all_hit_target(&self) -> bool {
        self.hits.iter().all(|h| matches!(h, HitKind::TargetBoundary(_)))
    }
}

/// Forward traces from `t = 0`; checks the dissipative precondition along
/// each path and the decay bound `|χ(s)| ≤ e^{−η₀ s/2}|x|`.
pub fn verify_decay(
    v: &dyn VelocityField,
    starts: &[Vec2],
    eta0: f64,
    stops: &StopSet,
    dt: f64,
) -> Result<DecayReport> {
    let opts = TraceOptions {
        jacobian: false,
        ..TraceOptions::new(dt)
    };
    let traces: Vec<Result<CharTrace>> = starts
        .par_iter()
        .map(|&x| trace(v, x, 0.0, Direction::Forward, stops, &opts))
        .collect();
    let mut report = DecayReport {
        starts: starts.len(),
        samples: 0,
        worst_ratio: 0.0,
        hits: Vec::with_capacity(starts.len()),
    };
    for (start, (tr, &x0)) in traces.into_iter().zip(starts).enumerate() {
        let tr = tr?;
        for (&s, &p) in tr.times.iter().zip(&tr.positions) {
            let margin = dissipativity_margin(v, p, s, eta0);
            if margin > 1e-12 * p.norm_squared() {
                return Err(Error::NotDissipative { x: p.x, y: p.y, t: s, margin });
            }
            let bound = (-0.5 * eta0 * s).exp() * x0.norm();
            let ratio = p.norm() / bound;
            report.worst_ratio = report.worst_ratio.max(ratio);
            if ratio > 1.0 + 1e-9 {
                return Err(Error::DecayViolation { start, time: s });
            }
            report.samples += 1;
        }
        report.hits.push(tr.hit);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceDistance {
    pub distance: f64,
    pub bound: f64,
    pub delta_v: f64,
    pub lipschitz: f64,
}

/// Sup distance between backward characteristics of each `v_i` and of
/// `v_lim` from `(x, t)`, with the Gronwall bound `δ t (1 + L t e^{Lt})`.
pub fn converge_traces(
    v_seq: &[&dyn VelocityField],
    v_lim: &dyn VelocityField,
    x: Vec2,
    t: f64,
    dt: f64,
) -> Result<Vec<TraceDistance>> {
    let stops = StopSet::new(None, t);
    let opts = TraceOptions {
        jacobian: false,
        ..TraceOptions::new(dt)
    };
    let lim = trace(v_lim, x, t, Direction::Backward, &stops, &opts)?;
    v_seq
        .iter()
        .map(|vi| {
            let tr = trace(*vi, x, t, Direction::Backward, &stops, &opts)?;
            let n = tr.positions.len().min(lim.positions.len());
            let mut distance = 0.0f64;
            let mut delta_v = 0.0f64;
            let mut lipschitz = 0.0f64;
            for k in 0..n {
                let s = lim.times[k];
                let (a, b) = (tr.positions[k], lim.positions[k]);
                distance = distance.max((a - b).norm());
                delta_v = delta_v.max((vi.velocity(b, s) - v_lim.velocity(b, s)).norm());
                for q in [a, b, (a + b) * 0.5] {
                    lipschitz = lipschitz.max(vi.gradient(q, s).norm());
                }
            }
            let l = lipschitz;
            Ok(TraceDistance {
                distance,
                bound: delta_v * t * (1.0 + l * t * (l * t).exp()),
                delta_v,
                lipschitz: l,
            })
        })
        .collect()
}
