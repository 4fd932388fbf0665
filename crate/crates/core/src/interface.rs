//! Sheath interface as a radial graph `r(β, t)` with normal angle θ and
//! edge density `n_s`, advanced by normal advection at speed Ṽ.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::characteristics::InterfaceLocator;
use crate::error::{Error, Result};
use crate::periodic::{angle_nodes, d1_fourth_order, lerp_periodic, wrap_angle, PeriodicProfile};
use crate::transport::InterfaceData;
use crate::Vec2;

/// Reading of the `∂_t ln n_s` curvature term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NsVariant {
    /// `sin θ · θ`.
    #[default]
    SinThetaTheta,
    /// `sin θ` alone.
    SinTheta,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    #[default]
    Heun,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterfaceState {
    pub beta: Vec<f64>,
    pub r: Vec<f64>,
    /// Outward normal angle, on the branch `β + (−π/2, π/2)`.
    pub theta: Vec<f64>,
    pub ns: Vec<f64>,
    pub time: f64,
}

/// Outward normal angle of the radial graph `r(β)`.
pub fn normal_angles(r: &[f64]) -> Vec<f64> {
    let dr = d1_fourth_order(r);
    angle_nodes(r.len())
        .iter()
        .zip(r.iter().zip(&dr))
        .map(|(&b, (&r, &d))| b - (d / r).atan())
        .collect()
}

impl InterfaceState {
    pub fn new(r: Vec<f64>, ns: Vec<f64>, time: f64) -> Result<Self> {
        if r.len() != ns.len() || r.len() < 5 {
            return Err(Error::InsufficientSamples("interface needs >= 5 matching samples".into()));
        }
        if let Some(j) = ns.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveDensity(j));
        }
        let theta = normal_angles(&r);
        Ok(Self {
            beta: angle_nodes(r.len()),
            r,
            theta,
            ns,
            time,
        })
    }

    pub fn circle(radius: f64, ns: f64, n: usize) -> Result<Self> {
        Self::new(vec![radius; n], vec![ns; n], 0.0)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }
    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn point(&self, j: usize) -> Vec2 {
        Vec2::new(self.r[j] * self.beta[j].cos(), self.r[j] * self.beta[j].sin())
    }

    /// Unit outward normal `(cos θ, sin θ)`.
    pub fn normal(&self, j: usize) -> Vec2 {
        Vec2::new(self.theta[j].cos(), self.theta[j].sin())
    }

    pub fn profile(&self) -> PeriodicProfile {
        PeriodicProfile::new(self.r.clone())
    }

    /// `∂_β θ`, with the winding `θ − β` differentiated as a periodic function.
    pub fn dtheta(&self) -> Vec<f64> {
        let rel: Vec<f64> = self.theta.iter().zip(&self.beta).map(|(t, b)| t - b).collect();
        d1_fourth_order(&rel).into_iter().map(|d| 1.0 + d).collect()
    }

    /// Checks `r_b < r < r_max`, positivity of `n_s`, finiteness and the
    /// turning of the radial polygon.
    pub fn validate(&self, r_b: f64, r_max: f64) -> Result<()> {
        for (index, &r) in self.r.iter().enumerate() {
            if !(r > r_b && r < r_max) {
                return Err(Error::InterfaceExit { index, r });
            }
        }
        if let Some(j) = self.ns.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveDensity(j));
        }
        let n = self.len();
        for j in 0..n {
            let (p, q) = (self.point(j), self.point((j + 1) % n));
            if !(p.perp(&q) > 0.0) {
                return Err(Error::NotStarShaped(j));
            }
        }
        Ok(())
    }
}

/// `Ṽ = −1 − ∇ζ·(cos θ, sin θ)/n_s` at each interface sample.
pub fn normal_speed(grad_zeta: &[Vec2], state: &InterfaceState) -> Result<Vec<f64>> {
    if grad_zeta.len() != state.len() {
        return Err(Error::GridMismatch("one gradient per interface sample".into()));
    }
    (0..state.len())
        .map(|j| {
            let ns = state.ns[j];
            if !(ns > 0.0) {
                return Err(Error::NonPositiveDensity(j));
            }
            Ok(-1.0 - grad_zeta[j].dot(&state.normal(j)) / ns)
        })
        .collect()
}

/// Right side of the `ln n_s` equation; errors when the advective number
/// `|2 sin β Ṽ cos θ / r| dt / Δβ` exceeds one.
pub fn ln_ns_rate(state: &InterfaceState, vtilde: &[f64], dt: f64, variant: NsVariant) -> Result<Vec<f64>> {
    let n = state.len();
    let dbeta = TAU / n as f64;
    let dth = state.dtheta();
    let lns: Vec<f64> = state.ns.iter().map(|v| v.ln()).collect();
    let dlns = d1_fourth_order(&lns);
    let mut out = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for j in 0..n {
        let (sb, r, th) = (state.beta[j].sin(), state.r[j], state.theta[j]);
        let curv = match variant {
            NsVariant::SinThetaTheta => th.sin() * th,
            NsVariant::SinTheta => th.sin(),
        };
        let adv = 2.0 * sb * vtilde[j] * th.cos() / r;
        worst = worst.max(adv.abs() * dt / dbeta);
        out.push(-(4.0 * sb * curv / r) * dth[j] - adv * dlns[j]);
    }
    if worst > 1.0 {
        return Err(Error::CflViolation(worst));
    }
    Ok(out)
}

/// Explicit update of `n_s` over `dt` in log space.
pub fn evolve_ns(state: &InterfaceState, vtilde: &[f64], dt: f64, variant: NsVariant) -> Result<Vec<f64>> {
    let rate = ln_ns_rate(state, vtilde, dt, variant)?;
    Ok(state.ns.iter().zip(&rate).map(|(n, k)| n * (k * dt).exp()).collect())
}

fn rates(state: &InterfaceState, vtilde: &[f64], dt: f64, variant: NsVariant) -> Result<(Vec<f64>, Vec<f64>)> {
    let dr = d1_fourth_order(&state.r);
    let rt = state
        .r
        .iter()
        .zip(&dr)
        .zip(vtilde)
        .map(|((&r, &d), &v)| v * (r * r + d * d).sqrt() / r)
        .collect();
    Ok((rt, ln_ns_rate(state, vtilde, dt, variant)?))
}

fn shifted(state: &InterfaceState, rt: &[f64], kt: &[f64], h: f64) -> Result<InterfaceState> {
    let r = state.r.iter().zip(rt).map(|(r, d)| r + h * d).collect();
    let ns = state.ns.iter().zip(kt).map(|(n, k)| n * (k * h).exp()).collect();
    InterfaceState::new(r, ns, state.time + h)
}

#[derive(Debug, Clone, Copy)]
pub struct AdvanceOptions {
    pub variant: NsVariant,
    pub scheme: Scheme,
    pub r_b: f64,
    pub r_max: f64,
}

/// One step with Ṽ re-evaluated from the stage state by `vtilde`.
pub fn advance_interface_with(
    state: &InterfaceState,
    vtilde: &dyn Fn(&InterfaceState) -> Result<Vec<f64>>,
    dt: f64,
    opts: &AdvanceOptions,
) -> Result<InterfaceState> {
    let v1 = vtilde(state)?;
    let (r1, k1) = rates(state, &v1, dt, opts.variant)?;
    let next = match opts.scheme {
        Scheme::Euler => shifted(state, &r1, &k1, dt)?,
        Scheme::Heun => {
            let pred = shifted(state, &r1, &k1, dt)?;
            pred.validate(opts.r_b, opts.r_max)?;
            let v2 = vtilde(&pred)?;
            let (r2, k2) = rates(&pred, &v2, dt, opts.variant)?;
            let rt: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| 0.5 * (a + b)).collect();
            let kt: Vec<f64> = k1.iter().zip(&k2).map(|(a, b)| 0.5 * (a + b)).collect();
            shifted(state, &rt, &kt, dt)?
        }
    };
    next.validate(opts.r_b, opts.r_max)?;
    Ok(next)
}

/// One step with a fixed normal speed profile.
pub fn advance_interface(state: &InterfaceState, vtilde: &[f64], dt: f64, opts: &AdvanceOptions) -> Result<InterfaceState> {
    let v = vtilde.to_vec();
    advance_interface_with(state, &|_| Ok(v.clone()), dt, opts)
}

/// Factor `−2 sin β / r(β)` converting interface `x₁`-derivatives to
/// β-derivatives.
pub fn beta_derivative_factor(state: &InterfaceState, beta: f64) -> f64 {
    -2.0 * beta.sin() / state.profile().eval(beta)
}

/// Interface states at increasing times with their normal speeds.
#[derive(Debug, Clone)]
pub struct InterfaceHistory {
    pub states: Vec<InterfaceState>,
    pub vtilde: Vec<Vec<f64>>,
    profiles: Vec<PeriodicProfile>,
}

impl InterfaceHistory {
    pub fn new(states: Vec<InterfaceState>, vtilde: Vec<Vec<f64>>) -> Result<Self> {
        if states.is_empty() || states.len() != vtilde.len() {
            return Err(Error::InsufficientSamples("history needs matching states and speeds".into()));
        }
        if states.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::InvalidParameter("history times must increase".into()));
        }
        let profiles = states.iter().map(|s| s.profile()).collect();
        Ok(Self { states, vtilde, profiles })
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.states.len();
        if n == 1 || t <= self.states[0].time {
            return (0, 0, 0.0);
        }
        if t >= self.states[n - 1].time {
            return (n - 1, n - 1, 0.0);
        }
        let k = self.states.partition_point(|s| s.time <= t) - 1;
        let (t0, t1) = (self.states[k].time, self.states[k + 1].time);
        (k, k + 1, (t - t0) / (t1 - t0))
    }

    /// State at time `t` interpolated linearly between stored states.
    pub fn state_at(&self, t: f64) -> Result<InterfaceState> {
        let (a, b, w) = self.bracket(t);
        let (sa, sb) = (&self.states[a], &self.states[b]);
        if w == 0.0 {
            return Ok(sa.clone());
        }
        let r = sa.r.iter().zip(&sb.r).map(|(x, y)| (1.0 - w) * x + w * y).collect();
        let ns = sa.ns.iter().zip(&sb.ns).map(|(x, y)| (1.0 - w) * x + w * y).collect();
        InterfaceState::new(r, ns, t)
    }

    /// Writes `t,beta,r,theta,ns,vtilde` rows for every state and sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "beta", "r", "theta", "ns", "vtilde"])?;
        for (s, v) in self.states.iter().zip(&self.vtilde) {
            for j in 0..s.len() {
                out.write_record([
                    s.time.to_string(),
                    s.beta[j].to_string(),
                    s.r[j].to_string(),
                    s.theta[j].to_string(),
                    s.ns[j].to_string(),
                    v[j].to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

impl InterfaceLocator for InterfaceHistory {
    fn radius(&self, beta: f64, t: f64) -> f64 {
        let (a, b, w) = self.bracket(t);
        let ra = self.profiles[a].eval(beta);
        if w == 0.0 {
            return ra;
        }
        (1.0 - w) * ra + w * self.profiles[b].eval(beta)
    }
}

impl InterfaceData for InterfaceHistory {
    fn density(&self, beta: f64, t: f64) -> f64 {
        let (a, b, w) = self.bracket(t);
        let na = lerp_periodic(&self.states[a].ns, beta);
        if w == 0.0 {
            return na;
        }
        (1.0 - w) * na + w * lerp_periodic(&self.states[b].ns, beta)
    }
}

/// Outward unit normal of the history at polar angle `beta`, time `t`.
pub fn history_normal(h: &InterfaceHistory, beta: f64, t: f64) -> Vec2 {
    let (a, b, w) = h.bracket(t);
    let normal_of = |k: usize| {
        let (r, dr, _) = h.profiles[k].eval_with_derivatives(beta);
        wrap_angle(beta) - (dr / r).atan()
    };
    let mut th = normal_of(a);
    if w != 0.0 {
        th = (1.0 - w) * th + w * normal_of(b);
    }
    Vec2::new(th.cos(), th.sin())
}
