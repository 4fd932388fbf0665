//! Extension of sheath-region data to the fixed annulus `r_b < |x| < 3δ*`
//! by three-point reflection across the interface, glued with a partition
//! of unity along the interface and cut off near `|x| = 3δ*`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{holder_seminorm_points, DomainSpec, GridField, PolarGrid};
use crate::interface::InterfaceState;
use crate::periodic::{wrap_angle, PeriodicProfile};
use crate::Vec2;

/// Relative radial tolerance for points on the interface.
const SNAP: f64 = 1e-12;

/// Reflection weights at depths 1, 2, 3.
pub const REFLECTION: [f64; 3] = [6.0, -8.0, 3.0];

/// Quintic smoothstep, `C²` at both ends.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExtensionConfig {
    pub r1: f64,
    pub delta_star: f64,
    pub r_b: f64,
}

impl ExtensionConfig {
    pub fn new(spec: &DomainSpec, r1: f64) -> Result<Self> {
        let max = spec.delta_star.min(0.5 * spec.delta_star2 - spec.r_b);
        if !(r1 > 0.0 && r1 < max) {
            return Err(Error::CoverSpacing { r1, max });
        }
        Ok(Self {
            r1,
            delta_star: spec.delta_star,
            r_b: spec.r_b,
        })
    }

    /// `⌊4πδ*/r₁⌋ + 1`.
    pub fn max_points(&self) -> usize {
        (4.0 * std::f64::consts::PI * self.delta_star / self.r1).floor() as usize + 1
    }

    /// `151 (⌊4πδ*/r₁⌋ + 2)`.
    pub fn k0(&self) -> f64 {
        151.0 * (self.max_points() + 1) as f64
    }

    pub fn ball_radius(&self) -> f64 {
        2.0 * self.r1
    }

    /// Outer cutoff: 1 on `|x| ≤ 2.5δ*`, 0 on `|x| ≥ 3δ*`.
    pub fn outer_cutoff(&self, rho: f64) -> f64 {
        1.0 - smoothstep((rho - 2.5 * self.delta_star) / (0.5 * self.delta_star))
    }
}

/// `f̄(x₁, x₂)` for `x₂ > a₂` from `f` below the line. `depth` is how far
/// below `a₂` the samples of `f` reach.
pub fn reflect_extend_halfplane(f: &dyn Fn(Vec2) -> f64, a2: f64, depth: f64, x: Vec2) -> Result<f64> {
    let h = x.y - a2;
    if h <= 0.0 {
        return Ok(f(x));
    }
    if 3.0 * h > depth * (1.0 + 1e-12) {
        return Err(Error::ReflectionOutOfDomain(a2 - 3.0 * h));
    }
    let mut acc = 0.0;
    for (k, c) in REFLECTION.iter().enumerate() {
        let m = (k + 1) as f64;
        acc += c * f(Vec2::new(x.x, a2 - m * h));
    }
    Ok(acc)
}

/// Radial straightening: `(β̂, d)` with `d = r(β̂) − |x|`, positive inside.
pub fn straighten(profile: &PeriodicProfile, x: Vec2) -> (f64, f64) {
    let beta = wrap_angle(x.y.atan2(x.x));
    (beta, profile.eval(beta) - x.norm())
}

pub fn unstraighten(profile: &PeriodicProfile, beta: f64, d: f64) -> Vec2 {
    let rho = profile.eval(beta) - d;
    Vec2::new(rho * beta.cos(), rho * beta.sin())
}

#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub centers: Vec<Vec2>,
    pub radius: f64,
    pub r1: f64,
    pub length: f64,
    profile: PeriodicProfile,
}

impl PartitionOfUnity {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn profile(&self) -> &PeriodicProfile {
        &self.profile
    }

    fn bump(&self, i: usize, x: Vec2) -> f64 {
        let u = (x - self.centers[i]).norm() / self.r1 - 1.0;
        1.0 - smoothstep(u)
    }

    fn interior(&self, d: f64) -> f64 {
        smoothstep((d - 0.25 * self.r1) / (0.5 * self.r1))
    }

    fn band(&self, d: f64) -> f64 {
        smoothstep((d + 0.75 * self.r1) / (0.5 * self.r1))
    }

    /// `(κ₀, [(i, κᵢ)])` at `x`, listing only balls that contain `x`.
    pub fn weights(&self, x: Vec2) -> (f64, Vec<(usize, f64)>) {
        let (_, d) = straighten(&self.profile, x);
        let chi = self.band(d);
        let rho0 = self.interior(d);
        let mut near = Vec::new();
        let mut total = rho0;
        for i in 0..self.centers.len() {
            let b = self.bump(i, x);
            if b > 0.0 {
                near.push((i, b));
                total += b;
            }
        }
        if total == 0.0 || chi == 0.0 {
            // outside the band: only the interior weight can be nonzero
            return (if total > 0.0 { rho0 / total } else { 0.0 }, Vec::new());
        }
        for w in near.iter_mut() {
            w.1 *= chi / total;
        }
        (rho0 / total, near)
    }

    pub fn sum(&self, x: Vec2) -> f64 {
        let (k0, ks) = self.weights(x);
        k0 + ks.iter().map(|w| w.1).sum::<f64>()
    }
}

/// Arclength of the radial graph `r(β)`.
pub fn interface_length(profile: &PeriodicProfile) -> f64 {
    cumulative_length(profile, 4096).last().copied().unwrap()
}

fn cumulative_length(profile: &PeriodicProfile, n: usize) -> Vec<f64> {
    let h = std::f64::consts::TAU / n as f64;
    let speed = |b: f64| {
        let (r, dr, _) = profile.eval_with_derivatives(b);
        (r * r + dr * dr).sqrt()
    };
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut prev = speed(0.0);
    for k in 0..n {
        // Simpson per cell
        let b0 = k as f64 * h;
        let mid = speed(b0 + h / 2.0);
        let next = speed(b0 + h);
        out.push(out[k] + h / 6.0 * (prev + 4.0 * mid + next));
        prev = next;
    }
    out
}

/// Cover points along the interface at arclength spacing `r₁` (the closing
/// gap at most `r₁`), with `C²` bumps of radius `2r₁`.
pub fn build_cover(state: &InterfaceState, cfg: &ExtensionConfig) -> Result<PartitionOfUnity> {
    let profile = state.profile();
    let n = 4096;
    let cum = cumulative_length(&profile, n);
    let length = cum[n];
    let m = ((length / cfg.r1) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = std::f64::consts::TAU / n as f64;
    let mut centers = Vec::with_capacity(m);
    for i in 0..m {
        let s = i as f64 * cfg.r1;
        let k = cum.partition_point(|&c| c <= s).clamp(1, n) - 1;
        let w = (s - cum[k]) / (cum[k + 1] - cum[k]);
        let mut beta = (k as f64 + w) * h;
        // Newton polish on the trigonometric interpolant
        for _ in 0..3 {
            let (r, dr, _) = profile.eval_with_derivatives(beta);
            let speed = (r * r + dr * dr).sqrt();
            let here = cum[k] + simpson_len(&profile, k as f64 * h, beta);
            beta -= (here - s) / speed;
        }
        let r = profile.eval(beta);
        centers.push(Vec2::new(r * beta.cos(), r * beta.sin()));
    }
    Ok(PartitionOfUnity {
        centers,
        radius: cfg.ball_radius(),
        r1: cfg.r1,
        length,
        profile,
    })
}

fn simpson_len(profile: &PeriodicProfile, a: f64, b: f64) -> f64 {
    let speed = |x: f64| {
        let (r, dr, _) = profile.eval_with_derivatives(x);
        (r * r + dr * dr).sqrt()
    };
    (b - a) / 6.0 * (speed(a) + 4.0 * speed((a + b) / 2.0) + speed(b))
}

/// Samples a field on a fitted sheath grid with cubic Lagrange weights in
/// σ and in β (periodic). Along grid rays, quadratics in `x` are exact.
pub struct SheathSampler<'a> {
    field: &'a GridField,
}

impl<'a> SheathSampler<'a> {
    pub fn new(field: &'a GridField) -> Self {
        Self { field }
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        let g = &self.field.grid;
        let (nr, nb) = (g.n_r(), g.n_beta());
        let beta = wrap_angle(x.y.atan2(x.x));
        let bpos = beta / g.d_beta();
        let jn = bpos.round();
        let (jbase, bw) = if (bpos - jn).abs() < 1e-10 {
            (jn as i64, None)
        } else {
            let j0 = bpos.floor() as i64;
            (j0, Some(lagrange4(bpos - j0 as f64)))
        };
        let ray = |j: i64| -> f64 {
            let j = j.rem_euclid(nb as i64) as usize;
            let outer = g.outer_at_node(j);
            let s = (x.norm() - g.r0()) / (outer - g.r0()) * (nr - 1) as f64;
            let sn = s.round();
            if (s - sn).abs() < 1e-10 && sn >= 0.0 && sn <= (nr - 1) as f64 {
                return self.field.at(0, j, sn as usize);
            }
            let i0 = (s.floor() as i64 - 1).clamp(0, nr as i64 - 4) as usize;
            let w = lagrange4(s - i0 as f64 - 1.0);
            (0..4).map(|m| w[m] * self.field.at(0, j, i0 + m)).sum()
        };
        match bw {
            None => ray(jbase),
            Some(w) => (0..4).map(|m| w[m] * ray(jbase - 1 + m as i64)).sum(),
        }
    }
}

/// Cubic Lagrange weights on nodes −1, 0, 1, 2 at position `u`.
fn lagrange4(u: f64) -> [f64; 4] {
    [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ]
}

/// Extension of a sheath function, evaluable anywhere in the annulus.
pub struct Extension<'a> {
    f: &'a (dyn Fn(Vec2) -> f64 + Sync),
    pub cover: PartitionOfUnity,
    pub config: ExtensionConfig,
}

impl<'a> Extension<'a> {
    pub fn new(f: &'a (dyn Fn(Vec2) -> f64 + Sync), cover: PartitionOfUnity, config: ExtensionConfig) -> Self {
        Self { f, cover, config }
    }

    /// Reflected value `6f(y₁) − 8f(y₂) + 3f(y₃)` at depths `|d|, 2|d|, 3|d|`.
    pub fn reflected(&self, x: Vec2) -> Result<f64> {
        let (beta, d) = straighten(&self.cover.profile, x);
        if d >= 0.0 {
            return Ok((self.f)(x));
        }
        let r = self.cover.profile.eval(beta);
        if r + 3.0 * d < self.config.r_b {
            return Err(Error::NotExtendable(x.x, x.y));
        }
        let mut acc = 0.0;
        for (k, c) in REFLECTION.iter().enumerate() {
            let rho = r + (k + 1) as f64 * d;
            acc += c * (self.f)(Vec2::new(rho * beta.cos(), rho * beta.sin()));
        }
        Ok(acc)
    }

    /// `Σ κᵢ f̄ᵢ` before the outer cutoff. On the sheath region the weights
    /// sum to one and every `f̄ᵢ` equals `f`, so `f` is returned as is.
    pub fn eval_pre_cutoff(&self, x: Vec2) -> Result<f64> {
        let (_, d) = straighten(&self.cover.profile, x);
        if d >= -SNAP * x.norm() {
            return Ok((self.f)(x));
        }
        let (_, ks) = self.cover.weights(x);
        if ks.is_empty() {
            return Ok(0.0);
        }
        let fr = self.reflected(x)?;
        Ok(ks.iter().map(|w| w.1 * fr).sum())
    }

    pub fn eval(&self, x: Vec2) -> Result<f64> {
        let c = self.config.outer_cutoff(x.norm());
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(c * self.eval_pre_cutoff(x)?)
    }

    pub fn sample(&self, grid: &PolarGrid) -> Result<GridField> {
        let vals: Result<Vec<f64>> = grid
            .node_coords()
            .par_iter()
            .map(|c| self.eval(Vec2::new(c[0], c[1])))
            .collect();
        GridField::new(grid.without_times(), vals?)
    }
}

/// Discrete `C^{2,γ}` norm: sup norms of all derivatives up to order two
/// plus Hölder seminorms of the second derivatives.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct C2Norm {
    pub sup: [f64; 6],
    pub seminorms: [f64; 3],
    pub total: f64,
}

/// Finite-difference derivative fields `[f, f₁, f₂, f₁₁, f₁₂, f₂₂]`.
pub fn derivative_fields(f: &GridField) -> [GridField; 6] {
    let g = f.gradient();
    let (g1, g2) = (g.component(0), g.component(1));
    let h1 = g1.gradient();
    let h2 = g2.gradient();
    let mixed = GridField {
        grid: f.grid.clone(),
        values: h1.values.iter().zip(&h2.values).map(|(a, b)| 0.5 * (a[1] + b[0])).collect(),
    };
    [f.clone(), g1, g2, h1.component(0), mixed, h2.component(1)]
}

pub fn c2_gamma_norm(derivs: &[GridField; 6], mask: Option<&[bool]>, gamma: f64) -> Result<C2Norm> {
    let coords = derivs[0].grid.node_coords();
    let keep: Vec<usize> = (0..coords.len()).filter(|&n| mask.is_none_or(|m| m[n])).collect();
    if keep.len() < 2 {
        return Err(Error::EmptyField);
    }
    let pts: Vec<[f64; 3]> = keep.iter().map(|&n| [coords[n][0], coords[n][1], 0.0]).collect();
    let mut sup = [0.0; 6];
    for (s, d) in sup.iter_mut().zip(derivs) {
        *s = keep.iter().fold(0.0f64, |m, &n| m.max(d.values[n].abs()));
    }
    let mut seminorms = [0.0; 3];
    for (s, d) in seminorms.iter_mut().zip(&derivs[3..]) {
        let vals: Vec<f64> = keep.iter().map(|&n| d.values[n]).collect();
        *s = holder_seminorm_points(&pts, &vals, gamma)?.seminorm;
    }
    let total = sup.iter().sum::<f64>() + seminorms.iter().sum::<f64>();
    Ok(C2Norm { sup, seminorms, total })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionReport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub norm_ratio: f64,
    pub per_ball_ratios: Vec<Option<f64>>,
    pub within_bound: bool,
}

pub struct ExtendedField {
    pub field: GridField,
    pub report: ExtensionReport,
}

/// Extends `f` (sampled on the fitted sheath grid) to `target`, and
/// reports the `C^{2,γ}` norm ratio against `K₀`.
pub fn extend(
    f: &GridField,
    state: &InterfaceState,
    cfg: &ExtensionConfig,
    target: &PolarGrid,
    gamma: f64,
) -> Result<ExtendedField> {
    let field = extend_values(f, state, cfg, target)?;
    let report = extension_report(f, &field, state, cfg, gamma)?;
    Ok(ExtendedField { field, report })
}

/// Extension values only, without the norm scan.
pub fn extend_values(f: &GridField, state: &InterfaceState, cfg: &ExtensionConfig, target: &PolarGrid) -> Result<GridField> {
    let cover = build_cover(state, cfg)?;
    let sampler = SheathSampler::new(f);
    let fx = |x: Vec2| sampler.eval(x);
    Extension::new(&fx, cover, *cfg).sample(target)
}

pub fn extension_report(
    f: &GridField,
    extended: &GridField,
    state: &InterfaceState,
    cfg: &ExtensionConfig,
    gamma: f64,
) -> Result<ExtensionReport> {
    let cover = build_cover(state, cfg)?;
    let df = derivative_fields(f);
    let de = derivative_fields(extended);
    let inner = c2_gamma_norm(&df, None, gamma)?;
    let outer = c2_gamma_norm(&de, None, gamma)?;
    let norm_ratio = if inner.total > 0.0 { outer.total / inner.total } else { 0.0 };

    let fc = f.grid.node_coords();
    let ec = extended.grid.node_coords();
    let per_ball_ratios: Vec<Option<f64>> = cover
        .centers
        .par_iter()
        .map(|c| {
            let inside = |p: &[f64; 3]| (Vec2::new(p[0], p[1]) - c).norm() < cover.radius;
            let mi: Vec<bool> = fc.iter().map(inside).collect();
            let me: Vec<bool> = ec.iter().map(inside).collect();
            let a = c2_gamma_norm(&df, Some(&mi), gamma).ok()?;
            let b = c2_gamma_norm(&de, Some(&me), gamma).ok()?;
            (a.total > 0.0).then(|| b.total / a.total)
        })
        .collect();
    let k0 = cfg.k0();
    Ok(ExtensionReport {
        m: cover.len(),
        k0,
        norm_ratio,
        per_ball_ratios,
        within_bound: norm_ratio <= k0,
    })
}

/// Second derivatives of a smooth test function: `(f, f₁₁, f₁₂, f₂₂)`.
pub type Jet2 = dyn Fn(Vec2) -> (f64, f64, f64, f64) + Sync;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalConstants {
    /// Measured `[∂²f̄]_{upper} / [∂²f]_{lower}` for `∂₁₁`, `∂₁₂`, `∂₂₂`
    /// (zero when the denominator vanishes).
    pub ratios: [f64; 3],
    pub bounds: [f64; 3],
    pub passed: bool,
}

/// Local Hölder constants of the half-plane reflection on a lattice of
/// spacing `h` over the half ball `B(x₀, r) ∩ {x₂ ≥ a₂}`; the lower region
/// holds all reflected points.
pub fn local_holder_constants_check(f: &Jet2, x0: Vec2, r: f64, h: f64, gamma: f64) -> Result<LocalConstants> {
    let m = (r / h).round() as i64;
    if m < 2 {
        return Err(Error::InsufficientSamples("lattice needs at least two rows".into()));
    }
    let mut upper_pts = Vec::new();
    let mut upper = [Vec::new(), Vec::new(), Vec::new()];
    let mut lower_pts = Vec::new();
    let mut lower = [Vec::new(), Vec::new(), Vec::new()];
    for i in -m..=m {
        for j in 0..=m {
            let p = Vec2::new(x0.x + i as f64 * h, x0.y + j as f64 * h);
            if (p - x0).norm() > r + 1e-12 {
                continue;
            }
            let mut d = [0.0; 3];
            for (k, c) in REFLECTION.iter().enumerate() {
                let km = (k + 1) as f64;
                let (_, f11, f12, f22) = f(Vec2::new(p.x, x0.y - km * j as f64 * h));
                d[0] += c * f11;
                d[1] += -c * km * f12;
                d[2] += c * km * km * f22;
            }
            upper_pts.push([p.x, p.y, 0.0]);
            for q in 0..3 {
                upper[q].push(d[q]);
            }
        }
        for j in 0..=3 * m {
            let p = Vec2::new(x0.x + i as f64 * h, x0.y - j as f64 * h);
            if (p.x - x0.x).abs() > r + 1e-12 {
                continue;
            }
            let (_, f11, f12, f22) = f(p);
            lower_pts.push([p.x, p.y, 0.0]);
            lower[0].push(f11);
            lower[1].push(f12);
            lower[2].push(f22);
        }
    }
    let bounds = [31.0, 119.0, 151.0];
    let mut ratios = [0.0; 3];
    for q in 0..3 {
        let num = holder_seminorm_points(&upper_pts, &upper[q], gamma)?.seminorm;
        let den = holder_seminorm_points(&lower_pts, &lower[q], gamma)?.seminorm;
        ratios[q] = if den > 1e-300 { num / den } else { 0.0 };
    }
    let passed = ratios.iter().zip(&bounds).all(|(r, b)| r <= b);
    Ok(LocalConstants { ratios, bounds, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn spec() -> DomainSpec {
        DomainSpec {
            r_b: 0.5,
            delta_star: 1.0,
            delta_star1: 1.0,
            delta_star2: 1.2,
            eta0: 1.0,
            k0: 1.0,
            gamma: 0.5,
            t_final: 0.05,
        }
    }

    fn wavy(n: usize) -> InterfaceState {
        let r = (0..n).map(|j| 1.5 + 0.1 * (2.0 * TAU * j as f64 / n as f64).cos()).collect();
        InterfaceState::new(r, vec![1.0; n], 0.0).unwrap()
    }

    #[test]
    fn coefficient_identities() {
        let s: f64 = REFLECTION.iter().sum();
        let d1: f64 = REFLECTION.iter().enumerate().map(|(k, c)| -c * (k + 1) as f64).sum();
        let d2: f64 = REFLECTION.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64).powi(2)).sum();
        assert_eq!((s, d1, d2), (1.0, 1.0, 1.0));
    }

    #[test]
    fn halfplane_reproduces_quadratics() {
        let a2 = 0.3;
        let fs: [&dyn Fn(Vec2) -> f64; 3] = [&|_| 2.5, &|x| x.y, &|x| x.y * x.y];
        for f in fs {
            for &h in &[0.05, 0.2, 0.5] {
                let x = Vec2::new(0.1, a2 + h);
                let v = reflect_extend_halfplane(f, a2, 1.5, x).unwrap();
                assert!((v - f(x)).abs() < 1e-12);
            }
        }
        assert!(reflect_extend_halfplane(&|x| x.y, a2, 1.0, Vec2::new(0.0, a2 + 0.5)).is_err());
    }

    #[test]
    fn straighten_round_trip() {
        let s = wavy(32);
        let p = s.profile();
        let c = PeriodicProfile::constant(1.5, 16);
        let (_, d) = straighten(&c, Vec2::new(0.0, 1.5 - 0.1));
        assert!((d - 0.1).abs() < 1e-14);
        for k in 0..50 {
            let b = -PI + TAU * k as f64 / 50.0 + 0.01;
            let x = unstraighten(&p, b, 0.03 * ((k % 7) as f64 - 3.0));
            let (bb, d) = straighten(&p, x);
            assert!((unstraighten(&p, bb, d) - x).norm() < 1e-12);
        }
    }

    #[test]
    fn cover_counts() {
        let wide = DomainSpec { r_b: 0.1, ..spec() };
        let cfg = ExtensionConfig::new(&wide, 2.0 * PI * 0.5 / 8.0).unwrap();
        let circle = InterfaceState::circle(0.5, 1.0, 32).unwrap();
        assert_eq!(build_cover(&circle, &cfg).unwrap().len(), 8);
        let cfg = ExtensionConfig::new(&spec(), 0.08).unwrap();
        let c = build_cover(&wavy(64), &cfg).unwrap();
        assert!(c.len() <= cfg.max_points());
        // spacing along the curve is r1 except the closing gap
        let per = c.length - (c.len() - 1) as f64 * cfg.r1;
        assert!(per > 0.0 && per <= cfg.r1 + 1e-12);
        assert!(ExtensionConfig::new(&spec(), 0.2).is_err());
    }

    #[test]
    fn partition_sums_to_one_on_sheath() {
        let cfg = ExtensionConfig::new(&spec(), 0.08).unwrap();
        let s = wavy(64);
        let c = build_cover(&s, &cfg).unwrap();
        let p = s.profile();
        for k in 0..2000 {
            let b = TAU * (k as f64 * 0.618_033_988_7).fract();
            let f = (k as f64 * 0.414_213_562_3).fract();
            let r = 0.5 + f * (p.eval(b) - 0.5);
            let x = Vec2::new(r * b.cos(), r * b.sin());
            assert!((c.sum(x) - 1.0).abs() < 1e-12);
            let (k0, ks) = c.weights(x);
            assert!(k0 >= 0.0 && ks.iter().all(|w| w.1 >= 0.0));
            assert!(ks.iter().all(|w| (x - c.centers[w.0]).norm() < c.radius));
        }
    }

    fn sheath_grid(s: &InterfaceState, n_r: usize) -> PolarGrid {
        PolarGrid::fitted(0.5, s.r.clone(), n_r).unwrap()
    }

    #[test]
    fn quadratic_reproduced_in_band() {
        let s = wavy(64);
        let cfg = ExtensionConfig::new(&spec(), 0.08).unwrap();
        let q = |x: Vec2| 0.3 + 0.7 * x.x - 0.2 * x.y + 0.5 * x.x * x.x - 0.4 * x.x * x.y + 0.9 * x.y * x.y;
        let sg = sheath_grid(&s, 40);
        let f = GridField::from_fn(sg, |x, _| q(x)).unwrap();
        let samp = SheathSampler::new(&f);
        let fx = |x: Vec2| samp.eval(x);
        let e = Extension::new(&fx, build_cover(&s, &cfg).unwrap(), cfg);
        let p = s.profile();
        let nb = 64;
        for j in 0..nb {
            let b = TAU * j as f64 / nb as f64;
            for m in 1..6 {
                let x = unstraighten(&p, b, -0.04 * m as f64);
                assert!((e.reflected(x).unwrap() - q(x)).abs() < 1e-10);
            }
        }
        // analytic sheath function, arbitrary angles
        let e = Extension::new(&q, build_cover(&s, &cfg).unwrap(), cfg);
        for k in 0..200 {
            let b = 0.37 * k as f64;
            let x = unstraighten(&p, b, -0.001 * (k % 40) as f64);
            assert!((e.reflected(x).unwrap() - q(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn extension_of_one_and_restriction() {
        let sp = spec();
        let s = wavy(48);
        let cfg = ExtensionConfig::new(&sp, 0.08).unwrap();
        let sg = sheath_grid(&s, 16);
        let f = GridField::from_fn(sg.clone(), |x, _| 1.0 + 0.1 * x.x).unwrap();
        let target = PolarGrid::new(0.5, 3.0, 40, 48).unwrap();
        let out = extend(&f, &s, &cfg, &target, 0.5).unwrap();
        assert!(out.report.within_bound, "{:?}", out.report.norm_ratio);
        assert!(out.report.norm_ratio > 0.0);
        // restriction on sheath nodes
        let samp = SheathSampler::new(&f);
        let fx = |x: Vec2| samp.eval(x);
        let e = Extension::new(&fx, build_cover(&s, &cfg).unwrap(), cfg);
        for (c, v) in sg.node_coords().iter().zip(&f.values) {
            assert_eq!(e.eval(Vec2::new(c[0], c[1])).unwrap(), *v);
        }
        // support
        for (c, v) in target.node_coords().iter().zip(&out.field.values) {
            if Vec2::new(c[0], c[1]).norm() >= 3.0 - 1e-12 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn local_constants_cubic_and_quadratic() {
        let cubic = |x: Vec2| (x.y.powi(3), 0.0, 0.0, 6.0 * x.y);
        let r = local_holder_constants_check(&cubic, Vec2::new(0.0, 0.0), 0.2, 0.02, 0.5).unwrap();
        assert!(r.passed, "{:?}", r.ratios);
        assert!(r.ratios[2] > 0.0);
        let quad = |x: Vec2| (x.x * x.y, 0.0, 1.0, 0.0);
        let r = local_holder_constants_check(&quad, Vec2::new(0.0, 0.0), 0.2, 0.02, 0.5).unwrap();
        assert_eq!(r.ratios, [0.0; 3]);
    }

    #[test]
    fn smoothstep_is_c2() {
        let h = 1e-4;
        let d1 = |u: f64| (smoothstep(u + h) - smoothstep(u - h)) / (2.0 * h);
        let d2 = |u: f64| (smoothstep(u + h) - 2.0 * smoothstep(u) + smoothstep(u - h)) / (h * h);
        for u in [0.0, 1.0] {
            assert!(d1(u).abs() < 1e-6 && d2(u).abs() < 1e-2);
        }
        assert_eq!(smoothstep(0.5), 0.5);
    }
}
