//! Ion density by the characteristic representation
//! `n(x, t) = datum · exp(−∫ ∇·v)` along backward paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{trace, CharTrace, Direction, HitKind, InterfaceLocator, StopSet, TraceOptions, VelocityField};
use crate::error::{Error, Result};
use crate::geometry::{GridField, HolderReport, PolarGrid};
use crate::Vec2;

/// Interface position and sheath-edge density history.
pub trait InterfaceData: InterfaceLocator {
    fn density(&self, beta: f64, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Backward path reaches `t = 0`.
    Initial,
    /// Backward path reaches the interface.
    Interface,
    /// Node outside the sheath region.
    Exterior,
}

#[derive(Debug, Clone, Copy)]
pub struct DensitySample {
    pub value: f64,
    pub region: Region,
    /// Foot point of the backward path and its time.
    pub foot: Vec2,
    pub foot_time: f64,
}

/// Midpoint of a step by cubic Hermite interpolation of the stored path.
pub(crate) fn hermite_mid(tr: &CharTrace, k: usize) -> Vec2 {
    let h = tr.times[k + 1] - tr.times[k];
    (tr.positions[k] + tr.positions[k + 1]) * 0.5 + (tr.velocities[k] - tr.velocities[k + 1]) * (h / 8.0)
}

/// `∫ ∇·v` from the trace end back to its anchor, Simpson per step.
pub fn divergence_integral(v: &dyn VelocityField, tr: &CharTrace) -> f64 {
    let mut acc = 0.0;
    for k in 0..tr.times.len() - 1 {
        let (s0, s1) = (tr.times[k], tr.times[k + 1]);
        let h = s1 - s0;
        let dm = v.divergence(hermite_mid(tr, k), s0 + h / 2.0);
        let d0 = v.divergence(tr.positions[k], s0);
        let d1 = v.divergence(tr.positions[k + 1], s1);
        acc += h / 6.0 * (d0 + 4.0 * dm + d1);
    }
    // the path runs from the anchor towards the datum, so the integral from
    // datum to anchor carries the opposite orientation
    -acc
}

/// Density at `(x, t)` from initial data `n0` or interface data.
pub fn density_at(
    v: &dyn VelocityField,
    n0: &(dyn Fn(Vec2) -> f64 + Sync),
    itf: Option<&dyn InterfaceData>,
    x: Vec2,
    t: f64,
    target_radius: f64,
    opts: &TraceOptions,
) -> Result<DensitySample> {
    let mut stops = StopSet::new(Some(target_radius), t);
    if let Some(i) = itf {
        stops = stops.with_interface(i);
    }
    let opts = TraceOptions { jacobian: false, ..*opts };
    let tr = trace(v, x, t, Direction::Backward, &stops, &opts)?;
    let decay = (-divergence_integral(v, &tr)).exp();
    let foot = tr.end();
    let beta = foot.y.atan2(foot.x);
    match tr.hit {
        HitKind::TargetBoundary(s) => Err(Error::BackwardHitsTarget(s)),
        HitKind::Interface(t0) => Ok(DensitySample {
            value: itf.unwrap().density(beta, t0) * decay,
            region: Region::Interface,
            foot,
            foot_time: t0,
        }),
        _ => {
            // a foot point on the initial interface takes the interface datum
            if let Some(i) = itf {
                if (foot.norm() - i.radius(beta, 0.0)).abs() <= stops.interface_tol {
                    return Ok(DensitySample {
                        value: i.density(beta, 0.0) * decay,
                        region: Region::Interface,
                        foot,
                        foot_time: 0.0,
                    });
                }
            }
            Ok(DensitySample {
                value: n0(foot) * decay,
                region: Region::Initial,
                foot,
                foot_time: 0.0,
            })
        }
    }
}

/// Density slices over the sheath region with per-node region tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityField {
    pub times: Vec<f64>,
    pub slices: Vec<GridField>,
    pub tags: Vec<Vec<Region>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySnapshot {
    pub time: f64,
    pub nodes: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub region_tags: Vec<Region>,
}

/// Evaluates the density on every node of `grids[k]` at `times[k]`. Nodes
/// outside the interface are tagged exterior and set to zero.
pub fn density_field(
    v: &dyn VelocityField,
    n0: &(dyn Fn(Vec2) -> f64 + Sync),
    itf: Option<&dyn InterfaceData>,
    grids: &[PolarGrid],
    times: &[f64],
    target_radius: f64,
    opts: &TraceOptions,
) -> Result<DensityField> {
    if grids.len() != times.len() {
        return Err(Error::GridMismatch("one grid per time level expected".into()));
    }
    let mut slices = Vec::with_capacity(times.len());
    let mut tags = Vec::with_capacity(times.len());
    for (grid, &t) in grids.iter().zip(times) {
        let coords = grid.node_coords();
        let samples: Vec<Result<(f64, Region)>> = coords
            .par_iter()
            .map(|c| {
                let x = Vec2::new(c[0], c[1]);
                if let Some(i) = itf {
                    let r = i.radius(x.y.atan2(x.x), t);
                    if x.norm() > r + 1e-9 * r {
                        return Ok((0.0, Region::Exterior));
                    }
                    if t > 0.0 && x.norm() >= r - 1e-9 * r {
                        return Ok((i.density(x.y.atan2(x.x), t), Region::Interface));
                    }
                }
                let s = density_at(v, n0, itf, x, t, target_radius, opts)?;
                Ok((s.value, s.region))
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
    Ok(DensityField {
        times: times.to_vec(),
        slices,
        tags,
    })
}

impl DensityField {
    fn in_region(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.slices[k]
            .values
            .iter()
            .zip(&self.tags[k])
            .filter(|(_, t)| **t != Region::Exterior)
            .map(|(v, _)| *v)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.slices.len())
            .flat_map(|k| self.in_region(k))
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        (0..self.slices.len())
            .flat_map(|k| self.in_region(k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Space-time Hölder report over in-region nodes.
    pub fn holder(&self, gamma: f64) -> Result<HolderReport> {
        let mut pts = Vec::new();
        let mut vals = Vec::new();
        for (k, s) in self.slices.iter().enumerate() {
            for ((c, v), tag) in s.grid.node_coords().into_iter().zip(&s.values).zip(&self.tags[k]) {
                if *tag != Region::Exterior {
                    pts.push([c[0], c[1], self.times[k]]);
                    vals.push(*v);
                }
            }
        }
        crate::geometry::holder_seminorm_points(&pts, &vals, gamma)
    }

    pub fn snapshot(&self, k: usize) -> DensitySnapshot {
        let s = &self.slices[k];
        DensitySnapshot {
            time: self.times[k],
            nodes: s.grid.node_coords().into_iter().map(|c| [c[0], c[1]]).collect(),
            values: s.values.clone(),
            region_tags: self.tags[k].clone(),
        }
    }

    /// Density on the target ring (`i = 0`) of slice `k`, one per angle.
    pub fn target_ring(&self, k: usize) -> Vec<f64> {
        let g = &self.slices[k].grid;
        (0..g.n_beta()).map(|j| self.slices[k].at(0, j, 0)).collect()
    }
}

/// Density and its gradient along a trace, from the continuity equation
/// differentiated in space. `seed` holds `(n, ∇n)` at the first sample.
pub fn grad_density_along(v: &dyn VelocityField, tr: &CharTrace, seed: (f64, Vec2)) -> Result<Vec<(f64, Vec2)>> {
    let rhs = |x: Vec2, s: f64, n: f64, g: Vec2| -> Result<(f64, Vec2)> {
        let dv = v.gradient(x, s);
        let h = v.hessian(x, s).ok_or(Error::MissingSecondDerivatives)?;
        let div = dv.trace();
        let mut dg = Vec2::zeros();
        for j in 0..2 {
            let second = h[0][(0, j)] + h[1][(1, j)];
            let cross = g[0] * dv[(0, j)] + g[1] * dv[(1, j)];
            dg[j] = -second * n - div * g[j] - cross;
        }
        Ok((-div * n, dg))
    };
    let mut out = Vec::with_capacity(tr.times.len());
    let (mut n, mut g) = seed;
    out.push((n, g));
    for k in 0..tr.times.len() - 1 {
        let (s0, s1) = (tr.times[k], tr.times[k + 1]);
        let h = s1 - s0;
        let (x0, x1, xm) = (tr.positions[k], tr.positions[k + 1], hermite_mid(tr, k));
        let sm = s0 + h / 2.0;
        let (a1, b1) = rhs(x0, s0, n, g)?;
        let (a2, b2) = rhs(xm, sm, n + a1 * h / 2.0, g + b1 * (h / 2.0))?;
        let (a3, b3) = rhs(xm, sm, n + a2 * h / 2.0, g + b2 * (h / 2.0))?;
        let (a4, b4) = rhs(x1, s1, n + a3 * h, g + b3 * h)?;
        n += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        g += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
        out.push((n, g));
    }
    Ok(out)
}
