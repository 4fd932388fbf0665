//! One pass of the construction: density, presheath potential, interface,
//! sheath density, sheath potential, velocity update and extension.

use rayon::prelude::*;

use super::config::RunConfig;
use crate::characteristics::{GridVelocity, TraceOptions, VelocityField};
use crate::elliptic::{assemble_h0, solve_exterior_neumann, solve_poisson_mixed, ExteriorSolution, PotentialSolution};
use crate::error::{Error, Result, Stage};
use crate::extension::{extend_values, extension_report, ExtensionConfig, ExtensionReport};
use crate::geometry::{GridField, PolarGrid};
use crate::interface::{
    advance_interface_with, normal_speed, AdvanceOptions, InterfaceHistory, InterfaceState, Scheme,
};
use crate::lagrangian::{velocity_update, SlicedField, VelocityUpdate};
use crate::periodic::angle_nodes;
use crate::transport::{density_at, density_field, DensityField};
use crate::Vec2;

/// Grids and options shared by every Picard step of a run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: RunConfig,
    pub times: Vec<f64>,
    /// Fixed annulus `r_b ≤ |x| ≤ 3δ*` carrying the iterates.
    pub annulus: PolarGrid,
    pub extension: ExtensionConfig,
    pub trace: TraceOptions,
    pub advance: AdvanceOptions,
    pub initial_interface: InterfaceState,
}

impl RunContext {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let d = config.domain;
        let times = config.times();
        let annulus = PolarGrid::new(d.r_b, d.outer_radius(), config.n_r_ext(), config.n_beta)?;
        let extension = ExtensionConfig::new(&d, config.r1)?;
        let beta = angle_nodes(config.n_beta);
        let r0: Vec<f64> = beta.iter().map(|&b| config.profiles.r0.at_angle(b)).collect();
        let ns0: Vec<f64> = beta.iter().map(|&b| config.profiles.ns0.at_angle(b)).collect();
        let initial_interface = InterfaceState::new(r0, ns0, 0.0)?;
        let trace = TraceOptions {
            jacobian: false,
            ..TraceOptions::new(config.dt)
        };
        let advance = AdvanceOptions {
            variant: config.ns_variant,
            scheme: Scheme::Heun,
            r_b: d.annulus_inner(),
            r_max: d.annulus_outer(),
        };
        Ok(Self {
            config,
            times,
            annulus,
            extension,
            trace,
            advance,
            initial_interface,
        })
    }

    pub fn space_time_grid(&self) -> Result<PolarGrid> {
        self.annulus.clone().with_times(self.times.clone())
    }

    /// `v⁰ = −(x/|x|)` times the outer cutoff, at every time level.
    pub fn initial_velocity(&self) -> Result<GridField<[f64; 2]>> {
        let ext = self.extension;
        GridField::from_fn(self.space_time_grid()?, move |x, _| {
            let c = ext.outer_cutoff(x.norm()) / x.norm();
            [-x.x * c, -x.y * c]
        })
    }

    pub fn n0(&self, x: Vec2) -> f64 {
        self.config.profiles.n0.at_point(x)
    }

    pub fn u0(&self, x: Vec2) -> Vec2 {
        self.config.profiles.u0.at(x)
    }

    fn angular(&self, p: &super::config::Profile) -> Vec<f64> {
        angle_nodes(self.config.n_beta).iter().map(|&b| p.at_angle(b)).collect()
    }

    /// `g(β, t) = g(β) + t ∂_t g(β)` at the angle nodes.
    pub fn g_at(&self, t: f64) -> Vec<f64> {
        let g = self.angular(&self.config.profiles.g);
        let gt = self.angular(&self.config.profiles.g_t);
        g.iter().zip(&gt).map(|(a, b)| a + t * b).collect()
    }

    pub fn g_t(&self) -> Vec<f64> {
        self.angular(&self.config.profiles.g_t)
    }
}

/// Everything one Picard step produced.
pub struct IterationState {
    pub v: GridField<[f64; 2]>,
    pub ring_density: Vec<Vec<f64>>,
    pub zeta: Vec<ExteriorSolution>,
    pub interface: InterfaceHistory,
    pub grids: Vec<PolarGrid>,
    pub n: DensityField,
    pub phi: Vec<PotentialSolution>,
    pub u_hat: VelocityUpdate,
    /// `F(v)`, on the annulus space-time grid.
    pub next: GridField<[f64; 2]>,
}

/// Density on the target circle from initial data, per time level.
pub fn target_density(v: &dyn VelocityField, ctx: &RunContext) -> Result<Vec<Vec<f64>>> {
    let rb = ctx.config.domain.r_b;
    let n0 = |x: Vec2| ctx.n0(x);
    let beta = angle_nodes(ctx.config.n_beta);
    ctx.times
        .iter()
        .map(|&t| {
            beta.par_iter()
                .map(|&b| {
                    let x = Vec2::new(rb * b.cos(), rb * b.sin());
                    density_at(v, &n0, None, x, t, rb, &ctx.trace).map(|s| s.value)
                })
                .collect()
        })
        .collect()
}

/// Exterior potential at each time level from the target-ring density.
pub fn presheath(v: &dyn VelocityField, ring: &[Vec<f64>], ctx: &RunContext) -> Result<Vec<ExteriorSolution>> {
    let rb = ctx.config.domain.r_b;
    let gt = ctx.g_t();
    ring.par_iter()
        .zip(&ctx.times)
        .map(|(n, &t)| {
            let h0 = assemble_h0(n, v, &gt, rb, t)?;
            solve_exterior_neumann(&h0, rb, None)
        })
        .collect()
}

/// Interface history over the time levels, Heun steps with Ṽ from `∇ζ`.
pub fn evolve_interface(zeta: &[ExteriorSolution], ctx: &RunContext) -> Result<InterfaceHistory> {
    let h = ctx.config.time_step();
    let level = |t: f64| ((t / h).round() as usize).min(zeta.len() - 1);
    let speed = |s: &InterfaceState| -> Result<Vec<f64>> {
        let z = &zeta[level(s.time)];
        let grad: Vec<Vec2> = (0..s.len()).map(|j| z.gradient(s.point(j))).collect();
        normal_speed(&grad, s)
    };
    let mut states = vec![ctx.initial_interface.clone()];
    let mut speeds = vec![speed(&ctx.initial_interface)?];
    for k in 1..ctx.times.len() {
        let mut next = advance_interface_with(states.last().unwrap(), &speed, h, &ctx.advance)?;
        next.time = ctx.times[k];
        speeds.push(speed(&next)?);
        states.push(next);
    }
    InterfaceHistory::new(states, speeds)
}

/// Sheath grids fitted to the interface at each level.
pub fn sheath_grids(history: &InterfaceHistory, ctx: &RunContext) -> Result<Vec<PolarGrid>> {
    history
        .states
        .iter()
        .map(|s| PolarGrid::fitted(ctx.config.domain.r_b, s.r.clone(), ctx.config.n_r))
        .collect()
}

pub fn sheath_potential(n: &DensityField, history: &InterfaceHistory, ctx: &RunContext) -> Result<Vec<PotentialSolution>> {
    (0..ctx.times.len())
        .into_par_iter()
        .map(|k| {
            let t = ctx.times[k];
            solve_poisson_mixed(&n.slices[k], &ctx.g_at(t), &history.states[k].ns, t)
        })
        .collect()
}

/// Extends both components of `û` at every level to the annulus.
pub fn extend_update(u: &VelocityUpdate, history: &InterfaceHistory, ctx: &RunContext) -> Result<GridField<[f64; 2]>> {
    let slices: Vec<GridField<[f64; 2]>> = (0..ctx.times.len())
        .into_par_iter()
        .map(|k| {
            let s = &history.states[k];
            let a = extend_values(&u.slices[k].component(0), s, &ctx.extension, &ctx.annulus)?;
            let b = extend_values(&u.slices[k].component(1), s, &ctx.extension, &ctx.annulus)?;
            GridField::from_components(&a, &b)
        })
        .collect::<Result<_>>()?;
    GridField::stack(&slices, ctx.times.clone())
}

/// Norm ratio of the extension at level `k`, worst of the two components.
pub fn extension_check(state: &IterationState, k: usize, ctx: &RunContext) -> Result<ExtensionReport> {
    let s = &state.interface.states[k];
    let mut worst: Option<ExtensionReport> = None;
    for c in 0..2 {
        let inner = state.u_hat.slices[k].component(c);
        let outer = state.next.slice(k).component(c);
        let r = extension_report(&inner, &outer, s, &ctx.extension, ctx.config.domain.gamma)?;
        if worst.as_ref().is_none_or(|w| r.norm_ratio > w.norm_ratio) {
            worst = Some(r);
        }
    }
    Ok(worst.unwrap())
}

/// `F(v)`: the seven stages in order, each failure tagged with its stage.
pub fn picard_step(v: &GridField<[f64; 2]>, ctx: &RunContext) -> Result<IterationState> {
    let vf = GridVelocity::new(v.clone());
    let rb = ctx.config.domain.r_b;

    let ring = target_density(&vf, ctx).map_err(Error::at(Stage::InitialDensity))?;
    let zeta = presheath(&vf, &ring, ctx).map_err(Error::at(Stage::Presheath))?;
    let interface = evolve_interface(&zeta, ctx).map_err(Error::at(Stage::Interface))?;

    let grids = sheath_grids(&interface, ctx).map_err(Error::at(Stage::SheathDensity))?;
    let n0 = |x: Vec2| ctx.n0(x);
    let n = density_field(&vf, &n0, Some(&interface), &grids, &ctx.times, rb, &ctx.trace)
        .map_err(Error::at(Stage::SheathDensity))?;

    let phi = sheath_potential(&n, &interface, ctx).map_err(Error::at(Stage::Potential))?;

    let force = SlicedField::new(ctx.times.clone(), phi.iter().map(|p| p.gradient.clone()).collect())
        .map_err(Error::at(Stage::Velocity))?;
    let u0 = |x: Vec2| ctx.u0(x);
    let u_hat = velocity_update(&vf, &force, &u0, Some(&interface), &grids, &ctx.times, Some(rb), &ctx.trace)
        .map_err(Error::at(Stage::Velocity))?;

    let next = extend_update(&u_hat, &interface, ctx).map_err(Error::at(Stage::Extension))?;

    Ok(IterationState {
        v: v.clone(),
        ring_density: ring,
        zeta,
        interface,
        grids,
        n,
        phi,
        u_hat,
        next,
    })
}
