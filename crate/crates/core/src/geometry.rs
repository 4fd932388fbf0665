//! Domain parameters, polar grids, sampled fields and discrete Hölder norms.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodic::{wrap_angle, PeriodicProfile};
use crate::Vec2;

/// Scalar parameters of the geometry and of the admissible velocity class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub r_b: f64,
    pub delta_star: f64,
    pub delta_star1: f64,
    pub delta_star2: f64,
    pub eta0: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.r_b,
            self.delta_star,
            self.delta_star1,
            self.delta_star2,
            self.eta0,
            self.k0,
            self.gamma,
            self.t_final,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain("non-finite parameter".into()));
        }
        let ds = self.delta_star;
        let ok = 0.0 < self.r_b
            && self.r_b < self.delta_star2 / 2.0
            && self.delta_star2 / 2.0 < self.delta_star1
            && self.delta_star1 <= 2.0 * ds
            && 2.0 * ds < 3.0 * ds;
        if !ok {
            return Err(Error::InvalidDomain(format!(
                "need 0 < r_b < delta_star2/2 < delta_star1 <= 2 delta_star < 3 delta_star, got r_b={}, delta_star2/2={}, delta_star1={}, 2 delta_star={}",
                self.r_b,
                self.delta_star2 / 2.0,
                self.delta_star1,
                2.0 * ds
            )));
        }
        if self.eta0 <= 0.0 {
            return Err(Error::InvalidDomain("eta0 must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidDomain("gamma must lie in (0, 1)".into()));
        }
        if self.t_final <= 0.0 {
            return Err(Error::InvalidDomain("T must be positive".into()));
        }
        if self.k0 <= 0.0 {
            return Err(Error::InvalidDomain("K0 must be positive".into()));
        }
        Ok(())
    }

    /// Inner radius of the working annulus.
    pub fn annulus_inner(&self) -> f64 {
        self.delta_star2 / 2.0
    }

    /// Outer radius of the working annulus.
    pub fn annulus_outer(&self) -> f64 {
        2.0 * self.delta_star
    }

    /// Radius of the outer ball carrying every extended field.
    pub fn outer_radius(&self) -> f64 {
        3.0 * self.delta_star
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    r0: f64,
    r1: f64,
    n_r: usize,
    n_beta: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outer: Option<Vec<f64>>,
}

/// Node-centred polar grid, optionally with a β-dependent outer radius
/// (boundary-fitted) and a time axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct PolarGrid {
    r0: f64,
    r1: f64,
    n_r: usize,
    n_beta: usize,
    times: Option<Vec<f64>>,
    outer: Option<PeriodicProfile>,
}

impl PartialEq for PolarGrid {
    fn eq(&self, o: &Self) -> bool {
        self.r0 == o.r0
            && self.r1 == o.r1
            && self.n_r == o.n_r
            && self.n_beta == o.n_beta
            && self.times == o.times
            && self.outer.as_ref().map(|p| p.samples())
                == o.outer.as_ref().map(|p| p.samples())
    }
}

impl TryFrom<GridRepr> for PolarGrid {
    type Error = Error;
    fn try_from(g: GridRepr) -> Result<Self> {
        let grid = match g.outer {
            Some(outer) => PolarGrid::fitted(g.r0, outer, g.n_r)?,
            None => PolarGrid::new(g.r0, g.r1, g.n_r, g.n_beta)?,
        };
        match g.times {
            Some(t) => grid.with_times(t),
            None => Ok(grid),
        }
    }
}

impl From<PolarGrid> for GridRepr {
    fn from(g: PolarGrid) -> Self {
        GridRepr {
            r0: g.r0,
            r1: g.r1,
            n_r: g.n_r,
            n_beta: g.n_beta,
            times: g.times,
            outer: g.outer.map(|p| p.samples().to_vec()),
        }
    }
}

/// Grid spanning the full computational annulus `[r_b, 3δ*]`.
pub fn build_polar_grid(spec: &DomainSpec, n_r: usize, n_beta: usize) -> Result<PolarGrid> {
    spec.validate()?;
    PolarGrid::new(spec.r_b, spec.outer_radius(), n_r, n_beta)
}

impl PolarGrid {
    pub fn new(r0: f64, r1: f64, n_r: usize, n_beta: usize) -> Result<Self> {
        Self::check_counts(n_r, n_beta)?;
        if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
            return Err(Error::InvalidGrid(format!("need 0 < r0 < r1, got {r0}, {r1}")));
        }
        Ok(Self {
            r0,
            r1,
            n_r,
            n_beta,
            times: None,
            outer: None,
        })
    }

    /// Grid whose outer radius follows the periodic samples `outer`.
    pub fn fitted(r0: f64, outer: Vec<f64>, n_r: usize) -> Result<Self> {
        let n_beta = outer.len();
        Self::check_counts(n_r, n_beta)?;
        if let Some(j) = outer.iter().position(|&r| !(r > r0 && r.is_finite())) {
            return Err(Error::InvalidGrid(format!(
                "outer radius {} at sample {j} does not exceed r0 = {r0}",
                outer[j]
            )));
        }
        let r1 = outer.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            r0,
            r1,
            n_r,
            n_beta,
            times: None,
            outer: Some(PeriodicProfile::new(outer)),
        })
    }

    fn check_counts(n_r: usize, n_beta: usize) -> Result<()> {
        if n_r < 2 {
            return Err(Error::InvalidGrid(format!("n_r = {n_r} < 2")));
        }
        if n_beta < 4 {
            return Err(Error::InvalidGrid(format!("n_beta = {n_beta} < 4")));
        }
        Ok(())
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid("time axis needs at least 2 levels".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("times must be finite and increasing".into()));
        }
        self.times = Some(times);
        Ok(self)
    }

    pub fn without_times(&self) -> Self {
        let mut g = self.clone();
        g.times = None;
        g
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_beta(&self) -> usize {
        self.n_beta
    }
    pub fn times(&self) -> Option<&[f64]> {
        self.times.as_deref()
    }
    pub fn n_times(&self) -> usize {
        self.times.as_ref().map_or(1, |t| t.len())
    }
    pub fn is_fitted(&self) -> bool {
        self.outer.is_some()
    }
    pub fn outer_profile(&self) -> Option<&PeriodicProfile> {
        self.outer.as_ref()
    }

    pub fn nodes_per_slice(&self) -> usize {
        self.n_r * self.n_beta
    }
    pub fn len(&self) -> usize {
        self.nodes_per_slice() * self.n_times()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, k: usize, j: usize, i: usize) -> usize {
        (k * self.n_beta + j) * self.n_r + i
    }

    /// Inverse of [`Self::index`]: `(k, j, i)`.
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.n_r;
        let kj = idx / self.n_r;
        (kj / self.n_beta, kj % self.n_beta, i)
    }

    pub fn d_sigma(&self) -> f64 {
        1.0 / (self.n_r - 1) as f64
    }
    pub fn d_beta(&self) -> f64 {
        TAU / self.n_beta as f64
    }

    pub fn beta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_beta as f64
    }

    pub fn sigma(&self, i: usize) -> f64 {
        i as f64 / (self.n_r - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times.as_ref().map_or(0.0, |t| t[k])
    }

    /// Outer radius at angular node `j`.
    pub fn outer_at_node(&self, j: usize) -> f64 {
        match &self.outer {
            Some(p) => p.node(j),
            None => self.r1,
        }
    }

    /// Outer radius at an arbitrary angle.
    pub fn outer_at(&self, beta: f64) -> f64 {
        match &self.outer {
            Some(p) => p.eval(beta),
            None => self.r1,
        }
    }

    pub fn radius(&self, j: usize, i: usize) -> f64 {
        if i == 0 {
            return self.r0;
        }
        let outer = self.outer_at_node(j);
        if i == self.n_r - 1 {
            return outer;
        }
        self.r0 + self.sigma(i) * (outer - self.r0)
    }

    pub fn node_point(&self, j: usize, i: usize) -> Vec2 {
        let r = self.radius(j, i);
        let b = self.beta(j);
        Vec2::new(r * b.cos(), r * b.sin())
    }

    /// All node coordinates `[x1, x2, t]` in storage order.
    pub fn node_coords(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.n_times() {
            let t = self.time(k);
            for j in 0..self.n_beta {
                for i in 0..self.n_r {
                    let p = self.node_point(j, i);
                    out.push([p.x, p.y, t]);
                }
            }
        }
        out
    }

    /// Fractional angular index, snapped onto nodes.
    fn beta_locate(&self, beta: f64) -> (usize, f64) {
        let mut b = wrap_angle(beta) * self.n_beta as f64 / TAU;
        if (b - b.round()).abs() < SNAP {
            b = b.round();
        }
        let j0 = b.floor() as usize;
        (j0 % self.n_beta, b - j0 as f64)
    }

    /// Fractional radial index in `[-1, n_r]` (one cell of extrapolation).
    fn radial_locate(&self, r: f64, outer: f64) -> (usize, f64) {
        let mut s = (r - self.r0) / (outer - self.r0) * (self.n_r - 1) as f64;
        if (s - s.round()).abs() < SNAP {
            s = s.round();
        }
        let s = s.clamp(-1.0, self.n_r as f64);
        let i0 = (s.floor().max(0.0) as usize).min(self.n_r - 2);
        (i0, s - i0 as f64)
    }

    /// Time bracket `(k0, w)` with clamping outside the axis.
    fn time_locate(&self, t: f64) -> (usize, f64) {
        let Some(times) = &self.times else {
            return (0, 0.0);
        };
        let n = times.len();
        if t <= times[0] {
            return (0, 0.0);
        }
        if t >= times[n - 1] {
            return (n - 2, 1.0);
        }
        let k = times.partition_point(|&s| s <= t) - 1;
        let k = k.min(n - 2);
        let span = times[k + 1] - times[k];
        let mut w = (t - times[k]) / span;
        if w.abs() < SNAP {
            w = 0.0;
        } else if (1.0 - w).abs() < SNAP {
            w = 1.0;
        }
        (k, w)
    }

    /// True when `x` lies radially within the grid (tolerance `tol`).
    pub fn contains(&self, x: Vec2, tol: f64) -> bool {
        let r = x.norm();
        let beta = x.y.atan2(x.x);
        r >= self.r0 - tol && r <= self.outer_at(beta) + tol
    }
}

const SNAP: f64 = 1e-10;

/// Values storable in a [`GridField`].
pub trait Sample: Copy + Send + Sync + Serialize + DeserializeOwned + 'static {
    fn zero() -> Self;
    fn lin(a: Self, wa: f64, b: Self, wb: f64) -> Self;
    fn finite(&self) -> bool;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn lin(a: Self, wa: f64, b: Self, wb: f64) -> Self {
        a * wa + b * wb
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl Sample for [f64; 2] {
    fn zero() -> Self {
        [0.0; 2]
    }
    fn lin(a: Self, wa: f64, b: Self, wb: f64) -> Self {
        [a[0] * wa + b[0] * wb, a[1] * wa + b[1] * wb]
    }
    fn finite(&self) -> bool {
        self[0].is_finite() && self[1].is_finite()
    }
}

fn blend<T: Sample>(a: T, b: T, w: f64) -> T {
    if w == 0.0 {
        a
    } else if w == 1.0 {
        b
    } else {
        T::lin(a, 1.0 - w, b, w)
    }
}

/// Samples on a [`PolarGrid`], bilinear in (σ, β), periodic in β and
/// linear in t.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Sample")]
pub struct GridField<T: Sample = f64> {
    pub grid: PolarGrid,
    pub values: Vec<T>,
}

impl<T: Sample> GridField<T> {
    pub fn new(grid: PolarGrid, values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyField);
        }
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, t)` at every node.
    pub fn from_fn(grid: PolarGrid, f: impl Fn(Vec2, f64) -> T + Sync) -> Result<Self> {
        let coords = grid.node_coords();
        let values = coords
            .par_iter()
            .map(|c| f(Vec2::new(c[0], c[1]), c[2]))
            .collect();
        Self::new(grid, values)
    }

    pub fn at(&self, k: usize, j: usize, i: usize) -> T {
        self.values[self.grid.index(k, j, i)]
    }

    /// Values of one time slice as a field without time axis.
    pub fn slice(&self, k: usize) -> GridField<T> {
        let n = self.grid.nodes_per_slice();
        GridField {
            grid: self.grid.without_times(),
            values: self.values[k * n..(k + 1) * n].to_vec(),
        }
    }

    /// Stack equal single-slice fields along a time axis.
    pub fn stack(slices: &[GridField<T>], times: Vec<f64>) -> Result<Self> {
        let first = slices.first().ok_or(Error::EmptyField)?;
        if slices.len() != times.len() {
            return Err(Error::GridMismatch("slice count differs from time count".into()));
        }
        let base = first.grid.without_times();
        let mut values = Vec::with_capacity(base.len() * slices.len());
        for s in slices {
            if s.grid.without_times() != base || s.grid.n_times() != 1 {
                return Err(Error::GridMismatch("slices live on different grids".into()));
            }
            values.extend_from_slice(&s.values);
        }
        Self::new(base.with_times(times)?, values)
    }

    fn slice_sample(&self, k: usize, r: f64, beta: f64) -> T {
        let g = &self.grid;
        let (j0, wb) = g.beta_locate(beta);
        let j1 = (j0 + 1) % g.n_beta;
        let outer_j0 = g.outer_at_node(j0);
        let row = |j: usize, outer: f64| {
            let (i0, wr) = g.radial_locate(r, outer);
            let a = self.at(k, j, i0);
            let b = self.at(k, j, i0 + 1);
            blend(a, b, wr)
        };
        if wb == 0.0 {
            return row(j0, outer_j0);
        }
        let outer = g.outer_at(beta);
        let (a, b) = (row(j0, outer), row(j1, outer));
        blend(a, b, wb)
    }

    /// Interpolated value at polar coordinates `(r, β)` and time `t`.
    pub fn sample_polar(&self, r: f64, beta: f64, t: f64) -> T {
        let (k, w) = self.grid.time_locate(t);
        if self.grid.times.is_none() || w == 0.0 {
            return self.slice_sample(k, r, beta);
        }
        if w == 1.0 {
            return self.slice_sample(k + 1, r, beta);
        }
        blend(self.slice_sample(k, r, beta), self.slice_sample(k + 1, r, beta), w)
    }

    pub fn sample(&self, x: Vec2, t: f64) -> T {
        self.sample_polar(x.norm(), x.y.atan2(x.x), t)
    }
}

impl GridField<f64> {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete Hölder report over all nodes, optionally restricted by `mask`.
    pub fn holder(&self, gamma: f64, mask: Option<&[bool]>) -> Result<HolderReport> {
        let coords = self.grid.node_coords();
        match mask {
            None => holder_seminorm_points(&coords, &self.values, gamma),
            Some(m) => {
                if m.len() != self.values.len() {
                    return Err(Error::GridMismatch("mask length".into()));
                }
                let (c, v): (Vec<_>, Vec<_>) = coords
                    .into_iter()
                    .zip(self.values.iter().copied())
                    .zip(m)
                    .filter(|(_, &keep)| keep)
                    .map(|(cv, _)| cv)
                    .unzip();
                holder_seminorm_points(&c, &v, gamma)
            }
        }
    }

    /// Cartesian gradient by second-order finite differences in (σ, β).
    pub fn gradient(&self) -> GridField<[f64; 2]> {
        let g = &self.grid;
        let (nr, nb) = (g.n_r, g.n_beta);
        let ds = g.d_sigma();
        let db = g.d_beta();
        let mut out = vec![[0.0; 2]; self.values.len()];
        for k in 0..g.n_times() {
            for j in 0..nb {
                let beta = g.beta(j);
                let outer = g.outer_at_node(j);
                let len = outer - g.r0;
                let dlen = g.outer.as_ref().map_or(0.0, |p| p.eval_with_derivatives(beta).1);
                let jp = (j + 1) % nb;
                let jm = (j + nb - 1) % nb;
                for i in 0..nr {
                    let f = |i: usize| self.at(k, j, i);
                    let f_s = if nr == 2 {
                        (f(1) - f(0)) / ds
                    } else if i == 0 {
                        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * ds)
                    } else if i == nr - 1 {
                        (3.0 * f(i) - 4.0 * f(i - 1) + f(i - 2)) / (2.0 * ds)
                    } else {
                        (f(i + 1) - f(i - 1)) / (2.0 * ds)
                    };
                    let f_b = (self.at(k, jp, i) - self.at(k, jm, i)) / (2.0 * db);
                    let sigma = g.sigma(i);
                    let rho = g.radius(j, i);
                    let f_rho = f_s / len;
                    let f_beta = f_b - sigma * dlen / len * f_s;
                    let (c, s) = (beta.cos(), beta.sin());
                    out[g.index(k, j, i)] = [c * f_rho - s * f_beta / rho, s * f_rho + c * f_beta / rho];
                }
            }
        }
        GridField {
            grid: g.clone(),
            values: out,
        }
    }
}

impl GridField<[f64; 2]> {
    pub fn component(&self, c: usize) -> GridField<f64> {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v[c]).collect(),
        }
    }

    pub fn from_components(a: &GridField<f64>, b: &GridField<f64>) -> Result<Self> {
        if a.grid != b.grid {
            return Err(Error::GridMismatch("components on different grids".into()));
        }
        Self::new(
            a.grid.clone(),
            a.values.iter().zip(&b.values).map(|(&x, &y)| [x, y]).collect(),
        )
    }

    pub fn sample_vec(&self, x: Vec2, t: f64) -> Vec2 {
        let v = self.sample(x, t);
        Vec2::new(v[0], v[1])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].hypot(v[1])))
    }
}

/// Sup norm and discrete Hölder seminorm of a sampled function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub sup_norm: f64,
    pub seminorm: f64,
    pub exponent: f64,
    pub pair_count: u64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Hölder exponent {gamma} outside (0, 1)")))
    }
}

fn dist(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Max over distinct point pairs of `|f(p) − f(q)| / |p − q|^γ`, with
/// points given as `[x1, x2, t]`. Coincident points are skipped.
pub fn holder_seminorm_points(points: &[[f64; 3]], values: &[f64], gamma: f64) -> Result<HolderReport> {
    check_gamma(gamma)?;
    if values.is_empty() {
        return Err(Error::EmptyField);
    }
    if points.len() != values.len() {
        return Err(Error::GridMismatch("points and values differ in length".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = values.len();
    let seminorm = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut m = 0.0f64;
            for b in a + 1..n {
                let d = dist(&points[a], &points[b]);
                if d > 0.0 {
                    m = m.max((values[a] - values[b]).abs() / d.powf(gamma));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(HolderReport {
        sup_norm,
        seminorm,
        exponent: gamma,
        pair_count: (n as u64) * (n as u64 - 1) / 2,
    })
}

const INEQ_SLACK: f64 = 1e-12;

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + INEQ_SLACK * rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE)
}

/// Discrete product rule `[f1 f2] ≤ [f1]|f2| + |f1|[f2]` on shared points.
pub fn product_inequality_points(points: &[[f64; 3]], f1: &[f64], f2: &[f64], gamma: f64) -> Result<bool> {
    if f1.len() != f2.len() {
        return Err(Error::GridMismatch("factor lengths differ".into()));
    }
    let prod: Vec<f64> = f1.iter().zip(f2).map(|(a, b)| a * b).collect();
    let h1 = holder_seminorm_points(points, f1, gamma)?;
    let h2 = holder_seminorm_points(points, f2, gamma)?;
    let hp = holder_seminorm_points(points, &prod, gamma)?;
    Ok(within(hp.seminorm, h1.seminorm * h2.sup_norm + h1.sup_norm * h2.seminorm))
}

/// Discrete exponential rule `[e^f] ≤ e^{|f|} [f]`.
pub fn exp_inequality_points(points: &[[f64; 3]], f: &[f64], gamma: f64) -> Result<bool> {
    if let Some(v) = f.iter().find(|v| v.abs() > 700.0) {
        return Err(Error::ExpOverflow(v.abs()));
    }
    let ef: Vec<f64> = f.iter().map(|v| v.exp()).collect();
    let h = holder_seminorm_points(points, f, gamma)?;
    let he = holder_seminorm_points(points, &ef, gamma)?;
    Ok(within(he.seminorm, h.sup_norm.exp() * h.seminorm))
}

pub fn check_product_inequality(f1: &GridField, f2: &GridField, gamma: f64) -> Result<bool> {
    if f1.grid != f2.grid {
        return Err(Error::GridMismatch("factors live on different grids".into()));
    }
    product_inequality_points(&f1.grid.node_coords(), &f1.values, &f2.values, gamma)
}

pub fn check_exp_inequality(f: &GridField, gamma: f64) -> Result<bool> {
    exp_inequality_points(&f.grid.node_coords(), &f.values, gamma)
}

/// Perimeter of a closed convex polygon inside `B(0, r2)` and whether it
/// is at most `2π r2`.
pub fn convex_length_bound(points: &[Vec2], r2: f64) -> Result<(f64, bool)> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientSamples(format!("polygon with {n} vertices")));
    }
    for (index, p) in points.iter().enumerate() {
        if p.norm() > r2 * (1.0 + 1e-12) {
            return Err(Error::OutsideAnnulus { index, radius: r2 });
        }
    }
    let mut sign = 0.0f64;
    let mut turning = 0.0;
    let mut length = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let c = points[(i + 2) % n];
        let (e1, e2) = (b - a, c - b);
        length += e1.norm();
        let cross = e1.x * e2.y - e1.y * e2.x;
        let scale = e1.norm() * e2.norm();
        if cross.abs() > 1e-14 * scale {
            if sign == 0.0 {
                sign = cross.signum();
            } else if cross.signum() != sign {
                return Err(Error::NonConvex((i + 1) % n));
            }
        }
        turning += cross.atan2(e1.dot(&e2));
    }
    // a star polygon turns consistently but winds more than once
    if (turning.abs() - TAU).abs() > 1e-6 {
        return Err(Error::NonConvex(0));
    }
    Ok((length, length <= TAU * r2))
}

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
pub fn convex_hull(mut p: Vec<Vec2>) -> Vec<Vec2> {
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a - o).perp(&(b - o));
    let mut lower: Vec<Vec2> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
