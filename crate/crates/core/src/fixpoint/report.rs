//! Outer fixed-point loop, convergence metrics, monitored inequalities and
//! run snapshots.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::picard::{extension_check, picard_step, IterationState, RunContext};
use crate::error::Result;
use crate::extension::ExtensionReport;
use crate::geometry::{holder_seminorm_points, GridField};
use crate::lagrangian::{eigen_precondition, solve_lagrangian, DissipativityReport, SlicedField};
use crate::{Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    /// Distances failed to decrease over five consecutive iterations.
    NonContracting,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    /// `sup |F(v) − v|` over the annulus space-time nodes.
    pub sup_distance: f64,
    /// Same for the spatial gradient.
    pub c1_distance: f64,
    /// Hölder seminorm of `F(v) − v` at the final level (reported only).
    pub holder_distance: f64,
    /// `sup_distance` over the previous one.
    pub ratio: Option<f64>,
}

/// A monitored inequality with the expression it tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub threshold: String,
    pub value: f64,
    pub holds: bool,
}

impl Flag {
    fn new(name: &str, threshold: &str, value: f64, holds: bool) -> Self {
        Self {
            name: name.into(),
            threshold: threshold.into(),
            value,
            holds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: RunStatus,
    pub iterations: Vec<IterationMetrics>,
    pub flags: Vec<Flag>,
    /// [`RunReport::contraction_ratio`] with floor `10³ · picard_tol`.
    pub contraction_ratio: Option<f64>,
    pub extension: ExtensionReport,
    pub dissipativity: DissipativityReport,
    pub config: RunConfig,
}

impl RunReport {
    pub fn distances(&self) -> Vec<f64> {
        self.iterations.iter().map(|m| m.sup_distance).collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.iterations.iter().filter_map(|m| m.ratio).collect()
    }

    /// Geometric mean of successive distance ratios. The first ratio is
    /// skipped since `v⁰` is not in the range of `F`, and so is any ratio
    /// whose previous distance is below `floor` (round-off level).
    pub fn contraction_ratio(&self, floor: f64) -> Option<f64> {
        contraction_estimate(&self.distances(), floor)
    }

    pub fn flag(&self, name: &str) -> Option<&Flag> {
        self.flags.iter().find(|f| f.name == name)
    }
}

pub fn contraction_estimate(d: &[f64], floor: f64) -> Option<f64> {
    let logs: Vec<f64> = d
        .windows(2)
        .skip(1)
        .filter(|w| w[0] >= floor && w[1] > 0.0)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    if logs.is_empty() {
        None
    } else {
        Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
    }
}

pub struct RunOutcome {
    pub report: RunReport,
    pub last: IterationState,
    pub context: RunContext,
}

fn vec_diff(a: &GridField<[f64; 2]>, b: &GridField<[f64; 2]>) -> GridField<[f64; 2]> {
    GridField {
        grid: a.grid.clone(),
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| [x[0] - y[0], x[1] - y[1]])
            .collect(),
    }
}

/// Sup, `C¹` and final-level Hölder distances between two iterates.
pub fn distances(next: &GridField<[f64; 2]>, v: &GridField<[f64; 2]>, gamma: f64) -> Result<(f64, f64, f64)> {
    let d = vec_diff(next, v);
    let sup = d.sup_norm();
    let mut c1: f64 = 0.0;
    for c in 0..2 {
        c1 = c1.max(d.component(c).gradient().sup_norm());
    }
    let last = d.slice(d.grid.n_times() - 1);
    let pts: Vec<[f64; 3]> = last.grid.node_coords();
    let mut holder: f64 = 0.0;
    for c in 0..2 {
        let vals = last.component(c).values;
        holder = holder.max(holder_seminorm_points(&pts, &vals, gamma)?.seminorm);
    }
    Ok((sup, c1, holder))
}

/// Iterates `F` from `v⁰` until the sup distance drops below the tolerance,
/// the iteration cap is reached, or the distances stop decreasing.
pub fn run_fixed_point(config: RunConfig) -> Result<RunOutcome> {
    let ctx = RunContext::new(config)?;
    let gamma = ctx.config.domain.gamma;
    let mut v = ctx.initial_velocity()?;
    let mut metrics: Vec<IterationMetrics> = Vec::new();
    let mut status = RunStatus::MaxIterations;
    let mut last = None;
    for it in 1..=ctx.config.picard_max_iters {
        let state = picard_step(&v, &ctx)?;
        let (sup, c1, holder) = distances(&state.next, &v, gamma)?;
        let ratio = metrics.last().map(|m| sup / m.sup_distance);
        metrics.push(IterationMetrics {
            iteration: it,
            sup_distance: sup,
            c1_distance: c1,
            holder_distance: holder,
            ratio,
        });
        v = state.next.clone();
        last = Some(state);
        if sup <= ctx.config.picard_tol {
            status = RunStatus::Converged;
            break;
        }
        let n = metrics.len();
        if n >= 5 && (n - 4..n).all(|k| metrics[k].sup_distance >= metrics[k - 1].sup_distance) {
            status = RunStatus::NonContracting;
            break;
        }
    }
    let last = last.expect("at least one iteration");
    let k = ctx.times.len() - 1;
    let extension = extension_check(&last, k, &ctx)?;
    let dissipativity = last.u_hat.dissipativity(ctx.config.domain.eta0, 1e-9);
    let flags = monitored_flags(&last, &ctx, &metrics, &extension, &dissipativity)?;
    let contraction_ratio = contraction_estimate(
        &metrics.iter().map(|m| m.sup_distance).collect::<Vec<_>>(),
        1e3 * ctx.config.picard_tol,
    );
    let report = RunReport {
        status,
        contraction_ratio,
        iterations: metrics,
        flags,
        extension,
        dissipativity,
        config: ctx.config.clone(),
    };
    Ok(RunOutcome {
        report,
        last,
        context: ctx,
    })
}

fn sup_derivatives(v: &GridField<[f64; 2]>) -> (f64, f64) {
    let mut c2: f64 = v.sup_norm();
    let mut dt: f64 = 0.0;
    for c in 0..2 {
        let f = v.component(c);
        let g = f.gradient();
        c2 = c2.max(g.sup_norm());
        for d in 0..2 {
            c2 = c2.max(g.component(d).gradient().sup_norm());
        }
        let grid = &f.grid;
        let times = grid.times().unwrap_or(&[]).to_vec();
        let per = grid.nodes_per_slice();
        for k in 0..times.len().saturating_sub(1) {
            let h = times[k + 1] - times[k];
            for n in 0..per {
                let a = f.values[k * per + n];
                let b = f.values[(k + 1) * per + n];
                dt = dt.max(((b - a) / h).abs());
            }
        }
    }
    (c2, dt)
}

fn monitored_flags(
    s: &IterationState,
    ctx: &RunContext,
    metrics: &[IterationMetrics],
    ext: &ExtensionReport,
    diss: &DissipativityReport,
) -> Result<Vec<Flag>> {
    let d = ctx.config.domain;
    let (k0, ds, t) = (d.k0, d.delta_star, d.t_final);
    let mut flags = Vec::new();

    let growth = (6.0 * t * k0 * ds).exp();
    flags.push(Flag::new("density_growth_factor", "exp(6 T K0 delta_star) <= 2", growth, growth <= 2.0));
    let small = k0 * ds * t;
    flags.push(Flag::new("horizon_smallness", "K0 delta_star T <= 1/24", small, small <= 1.0 / 24.0));

    let (c2, vt) = sup_derivatives(&s.next);
    flags.push(Flag::new(
        "velocity_c2_bound",
        "max_{|a|<=2} sup |d^a v_i| <= 3 K0 delta_star",
        c2,
        c2 <= 3.0 * k0 * ds,
    ));
    flags.push(Flag::new(
        "velocity_time_derivative",
        "sup |d_t v| <= K0 (18 delta_star^2 + R3), R3 = 0",
        vt,
        vt <= k0 * 18.0 * ds * ds,
    ));

    let datum = {
        let zero = &s.n.slices[0];
        let n0 = zero.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ns = s
            .interface
            .states
            .iter()
            .flat_map(|st| st.ns.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        n0.max(ns)
    };
    let (nmax, nmin) = (s.n.sup_norm(), s.n.min_value());
    flags.push(Flag::new(
        "density_bound",
        "0 < n <= 2 max(sup n0, sup ns)",
        nmax / datum,
        nmin > 0.0 && nmax <= 2.0 * datum,
    ));

    flags.push(Flag::new(
        "dissipativity",
        "u_hat . x <= -(eta0/2) |x|^2 at sheath nodes",
        diss.worst_margin,
        diss.passed(),
    ));

    let s0 = &ctx.initial_interface;
    let compat = (0..s0.len())
        .map(|j| (ctx.u0(s0.point(j)) + s0.normal(j)).norm())
        .fold(0.0, f64::max);
    flags.push(Flag::new("initial_compatibility", "max |u0 + nu| on S(0) <= 1e-9", compat, compat <= 1e-9));

    let (min_det, min_re) = lagrangian_samples(s, ctx)?;
    flags.push(Flag::new("lagrangian_det_positive", "det Gamma > 0 on [0, T]", min_det, min_det > 0.0));
    flags.push(Flag::new("eigen_precondition", "Re eig(grad u0) >= 0", min_re, min_re >= 0.0));

    flags.push(Flag::new(
        "extension_norm_ratio",
        "||E f||_{2,gamma} <= 151 (floor(4 pi delta_star / r1) + 2) ||f||_{2,gamma}",
        ext.norm_ratio,
        ext.within_bound,
    ));

    let (lo, hi) = (d.annulus_inner(), d.annulus_outer());
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for st in &s.interface.states {
        for &r in &st.r {
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
    }
    flags.push(Flag::new(
        "interface_in_annulus",
        "delta_star2/2 < r(beta, t) < 2 delta_star",
        (rmin - lo).min(hi - rmax),
        rmin > lo && rmax < hi,
    ));

    let last_ratio = metrics.last().and_then(|m| m.ratio).unwrap_or(f64::NAN);
    flags.push(Flag::new("contraction", "last distance ratio < 1", last_ratio, last_ratio < 1.0));
    Ok(flags)
}

/// Minimum `det Γ` over sample paths from `t = 0`, and the smallest real
/// part of an eigenvalue of `∇u₀` at their starts.
fn lagrangian_samples(s: &IterationState, ctx: &RunContext) -> Result<(f64, f64)> {
    let force = SlicedField::new(ctx.times.clone(), s.phi.iter().map(|p| p.gradient.clone()).collect())?;
    let g = &s.grids[0];
    let (nb, nr) = (g.n_beta(), g.n_r());
    let mut min_det = f64::INFINITY;
    let mut min_re = f64::INFINITY;
    for j in (0..nb).step_by((nb / 8).max(1)) {
        let alpha = g.node_point(j, nr / 2);
        let gu = fd_jacobian(&|x| ctx.u0(x), alpha);
        let tr = gu.trace();
        let disc = tr * tr - 4.0 * gu.determinant();
        let re = if disc < 0.0 { 0.5 * tr } else { 0.5 * (tr - disc.sqrt()) };
        min_re = min_re.min(if eigen_precondition(&gu) { re.max(0.0) } else { re });
        match solve_lagrangian(&force, alpha, ctx.u0(alpha), gu, 0.0, ctx.config.domain.t_final, ctx.config.dt) {
            Ok(p) => min_det = min_det.min(p.min_det()),
            Err(crate::Error::Degenerate { det, .. }) => min_det = min_det.min(det),
            Err(e) => return Err(e),
        }
    }
    Ok((min_det, min_re))
}

fn fd_jacobian(f: &dyn Fn(Vec2) -> Vec2, x: Vec2) -> Mat2 {
    let h = 1e-6 * x.norm().max(1.0);
    let e1 = Vec2::new(h, 0.0);
    let e2 = Vec2::new(0.0, h);
    let c1 = (f(x + e1) - f(x - e1)) / (2.0 * h);
    let c2 = (f(x + e2) - f(x - e2)) / (2.0 * h);
    Mat2::new(c1.x, c2.x, c1.y, c2.y)
}

/// Writes `report.json`, `interface.csv`, `density_t{k}.json` and
/// `phi_t{k}.json` into `dir`.
pub fn write_snapshots(dir: &Path, out: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    let w = BufWriter::new(fs::File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(w, &out.report)?;
    out.last
        .interface
        .write_csv(BufWriter::new(fs::File::create(dir.join("interface.csv"))?))?;
    for k in 0..out.last.n.slices.len() {
        let w = BufWriter::new(fs::File::create(dir.join(format!("density_t{k}.json")))?);
        serde_json::to_writer(w, &out.last.n.snapshot(k))?;
        let w = BufWriter::new(fs::File::create(dir.join(format!("phi_t{k}.json")))?);
        serde_json::to_writer(w, &out.last.phi[k])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_estimate_skips_first_and_floor() {
        let d = [1.0, 0.5, 0.05, 0.005, 1e-12, 1e-13];
        let r = contraction_estimate(&d, 1e-2).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
        assert_eq!(contraction_estimate(&[1.0, 0.1], 0.0), None);
    }

    #[test]
    fn huge_tolerance_stops_after_one_iteration() {
        let mut c = RunConfig::desk();
        c.n_r = 10;
        c.n_beta = 32;
        c.n_t = 2;
        c.dt = 5e-3;
        c.domain.t_final = 0.01;
        c.picard_tol = 1e6;
        let out = run_fixed_point(c).unwrap();
        assert_eq!(out.report.iterations.len(), 1);
        assert_eq!(out.report.status, RunStatus::Converged);
        assert!(out.report.flags.iter().all(|f| !f.threshold.is_empty()));
    }
}
