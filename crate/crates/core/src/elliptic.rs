//! Boundary data for the presheath potential, the exterior Neumann problem
//! outside the target disk, and the mixed Dirichlet–Neumann Poisson problem
//! on the sheath region.

use faer::prelude::SpSolver;
use faer::sparse::SparseColMat;
use faer::Col;
use serde::{Deserialize, Serialize};

use crate::characteristics::VelocityField;
use crate::error::{Error, Result};
use crate::geometry::{GridField, PolarGrid};
use crate::periodic::{angle_nodes, fourier_coefficients};
use crate::transport::DensityField;
use crate::Vec2;

pub const DEFAULT_MODE_CAP: usize = 64;

/// `h₀(β) = ∂_t g(β) − n (v·ν₀)` on the target circle, with ν₀ = x/|x|.
pub fn assemble_h0(n_ring: &[f64], v: &dyn VelocityField, g_t: &[f64], r_b: f64, t: f64) -> Result<Vec<f64>> {
    if n_ring.len() != g_t.len() {
        return Err(Error::GridMismatch("density and g_t sample counts differ".into()));
    }
    Ok(angle_nodes(n_ring.len())
        .iter()
        .zip(n_ring.iter().zip(g_t))
        .map(|(&b, (&n, &gt))| {
            let nu = Vec2::new(b.cos(), b.sin());
            gt - n * v.velocity(nu * r_b, t).dot(&nu)
        })
        .collect())
}

/// [`assemble_h0`] reading the density from slice `k` of a density field
/// whose grid starts on the target circle.
pub fn assemble_h0_from_field(
    n: &DensityField,
    k: usize,
    v: &dyn VelocityField,
    g_t: &[f64],
    r_b: f64,
) -> Result<Vec<f64>> {
    let slice = n
        .slices
        .get(k)
        .ok_or_else(|| Error::MissingTargetDensity(format!("no slice {k}")))?;
    if (slice.grid.r0() - r_b).abs() > 1e-12 * r_b {
        return Err(Error::MissingTargetDensity(format!(
            "density grid starts at r = {}, target radius is {r_b}",
            slice.grid.r0()
        )));
    }
    assemble_h0(&n.target_ring(k), v, g_t, r_b, n.times[k])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zeta,
    Phi,
    PhiT,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSolution {
    pub time: f64,
    pub kind: PotentialKind,
    #[serde(rename = "values")]
    pub field: GridField,
    pub gradient: GridField<[f64; 2]>,
    pub residual: f64,
}

/// Multipole representation
/// `ζ = a₀ ln r + Σ_k r^{−k}(a_k cos kβ + b_k sin kβ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExteriorSolution {
    pub r_b: f64,
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Max Neumann mismatch at the boundary samples.
    pub residual: f64,
    /// Magnitude of the last retained boundary mode.
    pub truncation: f64,
    /// `|∮ h₀ ds − 2π a₀|`.
    pub flux_defect: f64,
}

impl ExteriorSolution {
    pub fn modes(&self) -> usize {
        self.a.len()
    }

    pub fn value(&self, x: Vec2) -> f64 {
        let (r, beta) = (x.norm(), x.y.atan2(x.x));
        let mut z = self.a0 * r.ln();
        for k in 1..=self.modes() {
            let kf = k as f64;
            z += r.powi(-(k as i32)) * (self.a[k - 1] * (kf * beta).cos() + self.b[k - 1] * (kf * beta).sin());
        }
        z
    }

    /// `(∂_r ζ, ∂_β ζ)` at polar coordinates.
    pub fn polar_derivatives(&self, r: f64, beta: f64) -> (f64, f64) {
        let mut zr = self.a0 / r;
        let mut zb = 0.0;
        for k in 1..=self.modes() {
            let kf = k as f64;
            let p = r.powi(-(k as i32));
            let (c, s) = ((kf * beta).cos(), (kf * beta).sin());
            let (ak, bk) = (self.a[k - 1], self.b[k - 1]);
            zr -= kf * p / r * (ak * c + bk * s);
            zb += kf * p * (bk * c - ak * s);
        }
        (zr, zb)
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let (r, beta) = (x.norm(), x.y.atan2(x.x));
        let (zr, zb) = self.polar_derivatives(r, beta);
        let (c, s) = (beta.cos(), beta.sin());
        Vec2::new(c * zr - s * zb / r, s * zr + c * zb / r)
    }

    /// Samples potential and gradient on `grid`.
    pub fn sample(&self, grid: &PolarGrid, time: f64) -> Result<PotentialSolution> {
        let grid = grid.without_times();
        let field = GridField::from_fn(grid.clone(), |x, _| self.value(x))?;
        let gradient = GridField::from_fn(grid, |x, _| {
            let g = self.gradient(x);
            [g.x, g.y]
        })?;
        Ok(PotentialSolution {
            time,
            kind: PotentialKind::Zeta,
            field,
            gradient,
            residual: self.residual,
        })
    }
}

/// Exterior Neumann problem `Δζ = 0` in `|x| > r_b`, `∂_r ζ = h₀` on
/// `|x| = r_b`, `∇ζ → 0` at infinity; the additive constant is zero.
pub fn solve_exterior_neumann(h0: &[f64], r_b: f64, modes: Option<usize>) -> Result<ExteriorSolution> {
    let n = h0.len();
    if n == 0 {
        return Err(Error::EmptyField);
    }
    if let Some(i) = h0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let modes = match modes {
        Some(m) if m > DEFAULT_MODE_CAP => {
            return Err(Error::ModeCapExceeded {
                requested: m,
                cap: DEFAULT_MODE_CAP,
            })
        }
        Some(m) => m,
        None => DEFAULT_MODE_CAP.min(n.saturating_sub(1) / 2),
    };
    if n < 2 * modes + 1 {
        return Err(Error::BelowNyquist { samples: n, modes });
    }
    let (c, d) = fourier_coefficients(h0);
    let a0 = c[0] * r_b;
    let mut a = Vec::with_capacity(modes);
    let mut b = Vec::with_capacity(modes);
    for k in 1..=modes {
        let scale = -r_b.powi(k as i32 + 1) / k as f64;
        a.push(c[k] * scale);
        b.push(d[k] * scale);
    }
    let truncation = if modes == 0 { c[0].abs() } else { c[modes].hypot(d[modes]) };
    let mut sol = ExteriorSolution {
        r_b,
        a0,
        a,
        b,
        residual: 0.0,
        truncation,
        flux_defect: 0.0,
    };
    let betas = angle_nodes(n);
    sol.residual = betas
        .iter()
        .zip(h0)
        .map(|(&beta, &h)| (sol.polar_derivatives(r_b, beta).0 - h).abs())
        .fold(0.0, f64::max);
    let flux: f64 = h0.iter().sum::<f64>() * r_b * std::f64::consts::TAU / n as f64;
    sol.flux_defect = (flux - std::f64::consts::TAU * a0).abs();
    Ok(sol)
}

/// Metric coefficients of the Laplacian in boundary-fitted coordinates
/// `ρ = r0 + σ L(β)` at one node: `(σσ, σ, ββ, σβ)`.
fn metric(sigma: f64, rho: f64, l: f64, dl: f64, ddl: f64) -> [f64; 4] {
    let a = -sigma * dl / l;
    let a_s = -dl / l;
    let a_b = -sigma * (ddl * l - dl * dl) / (l * l);
    let r2 = rho * rho;
    [1.0 / (l * l) + a * a / r2, 1.0 / (rho * l) + (a_b + a * a_s) / r2, 1.0 / r2, 2.0 * a / r2]
}

/// Discrete operator applied to `phi` at interior node `(j, i)`.
fn apply_interior(grid: &PolarGrid, coef: &[f64; 4], phi: &[f64], j: usize, i: usize) -> f64 {
    let nb = grid.n_beta();
    let (ds, db) = (grid.d_sigma(), grid.d_beta());
    let jp = (j + 1) % nb;
    let jm = (j + nb - 1) % nb;
    let p = |j: usize, i: usize| phi[grid.index(0, j, i)];
    let pss = (p(j, i + 1) - 2.0 * p(j, i) + p(j, i - 1)) / (ds * ds);
    let ps = (p(j, i + 1) - p(j, i - 1)) / (2.0 * ds);
    let pbb = (p(jp, i) - 2.0 * p(j, i) + p(jm, i)) / (db * db);
    let psb = (p(jp, i + 1) - p(jm, i + 1) - p(jp, i - 1) + p(jm, i - 1)) / (4.0 * ds * db);
    coef[0] * pss + coef[1] * ps + coef[2] * pbb + coef[3] * psb
}

/// Solves `Δφ = f` between the target circle `ρ = r0` (Neumann
/// `∂_ρ φ = neumann`) and the outer boundary of the fitted grid (Dirichlet
/// `φ = dirichlet`). `source` holds one value per node of `grid`.
pub fn solve_mixed(
    grid: &PolarGrid,
    source: &[f64],
    neumann: &[f64],
    dirichlet: &[f64],
    kind: PotentialKind,
    time: f64,
) -> Result<PotentialSolution> {
    let grid = grid.without_times();
    let (nr, nb) = (grid.n_r(), grid.n_beta());
    if nr < 3 {
        return Err(Error::InvalidGrid("mixed solve needs n_r >= 3".into()));
    }
    if source.len() != grid.len() || neumann.len() != nb || dirichlet.len() != nb {
        return Err(Error::GridMismatch("boundary or source sample count".into()));
    }
    let r0 = grid.r0();
    let lens: Vec<f64> = (0..nb).map(|j| grid.outer_at_node(j) - r0).collect();
    let min_len = lens.iter().copied().fold(f64::INFINITY, f64::min);
    let max_len = lens.iter().copied().fold(0.0, f64::max);
    if min_len <= max_len / (nr - 1) as f64 {
        return Err(Error::InterfaceTouchesTarget(min_len));
    }
    let derivs: Vec<(f64, f64)> = (0..nb)
        .map(|j| match grid.outer_profile() {
            Some(p) => {
                let (_, d1, d2) = p.eval_with_derivatives(grid.beta(j));
                (d1, d2)
            }
            None => (0.0, 0.0),
        })
        .collect();
    let coef = |j: usize, i: usize| metric(grid.sigma(i), grid.radius(j, i), lens[j], derivs[j].0, derivs[j].1);

    let n = grid.len();
    let ds = grid.d_sigma();
    let db = grid.d_beta();
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(n * 9);
    let mut rhs = vec![0.0; n];
    for j in 0..nb {
        let jp = (j + 1) % nb;
        let jm = (j + nb - 1) % nb;
        // Neumann row at σ = 0, where ∂_ρ = ∂_σ / L exactly
        let row = grid.index(0, j, 0);
        let w = 1.0 / (2.0 * ds * lens[j]);
        trip.push((row, grid.index(0, j, 0), -3.0 * w));
        trip.push((row, grid.index(0, j, 1), 4.0 * w));
        trip.push((row, grid.index(0, j, 2), -w));
        rhs[row] = neumann[j];
        for i in 1..nr - 1 {
            let row = grid.index(0, j, i);
            let c = coef(j, i);
            let (css, cs, cbb, csb) = (c[0] / (ds * ds), c[1] / (2.0 * ds), c[2] / (db * db), c[3] / (4.0 * ds * db));
            trip.push((row, grid.index(0, j, i), -2.0 * css - 2.0 * cbb));
            trip.push((row, grid.index(0, j, i + 1), css + cs));
            trip.push((row, grid.index(0, j, i - 1), css - cs));
            trip.push((row, grid.index(0, jp, i), cbb));
            trip.push((row, grid.index(0, jm, i), cbb));
            trip.push((row, grid.index(0, jp, i + 1), csb));
            trip.push((row, grid.index(0, jm, i + 1), -csb));
            trip.push((row, grid.index(0, jp, i - 1), -csb));
            trip.push((row, grid.index(0, jm, i - 1), csb));
            rhs[row] = source[row];
        }
        let row = grid.index(0, j, nr - 1);
        trip.push((row, row, 1.0));
        rhs[row] = dirichlet[j];
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let b = Col::<f64>::from_fn(n, |i| rhs[i]);
    let x = lu.solve(&b);
    let mut phi: Vec<f64> = (0..n).map(|i| x.read(i)).collect();
    // two rounds of iterative refinement against the assembled matrix
    for _ in 0..2 {
        let mut res = rhs.clone();
        for &(r, c, v) in &trip {
            res[r] -= v * phi[c];
        }
        let dx = lu.solve(&Col::<f64>::from_fn(n, |i| res[i]));
        for (p, i) in phi.iter_mut().zip(0..n) {
            *p += dx.read(i);
        }
    }
    if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::LinearSolve(format!("non-finite solution at node {i}")));
    }
    // Dirichlet rows are identities; store the datum itself
    for j in 0..nb {
        phi[grid.index(0, j, nr - 1)] = dirichlet[j];
    }

    let mut residual = 0.0f64;
    let mut scale = 1.0f64;
    for j in 0..nb {
        for i in 1..nr - 1 {
            let row = grid.index(0, j, i);
            let lhs = apply_interior(&grid, &coef(j, i), &phi, j, i);
            residual = residual.max((lhs - source[row]).abs());
            scale = scale.max(source[row].abs());
        }
    }
    if residual > 1e-8 * scale {
        return Err(Error::LinearSolve(format!("residual {residual:e} above tolerance")));
    }
    let field = GridField::new(grid, phi)?;
    let gradient = field.gradient();
    Ok(PotentialSolution {
        time,
        kind,
        field,
        gradient,
        residual,
    })
}

/// `Δφ = n`, `∂_ρ φ = g` on the target, `φ = −ln n_s` on the interface.
/// `n` lives on the fitted grid whose outer boundary is the interface.
pub fn solve_poisson_mixed(n: &GridField, g: &[f64], ns: &[f64], time: f64) -> Result<PotentialSolution> {
    if let Some(j) = ns.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveDensity(j));
    }
    let dirichlet: Vec<f64> = ns.iter().map(|v| -v.ln()).collect();
    solve_mixed(&n.grid, &n.values, g, &dirichlet, PotentialKind::Phi, time)
}

/// `Δφ_t = −∇·(n v)`, `∂_ρ φ_t = ∂_t g`, `φ_t = −∂_t ln n_s`. The source is
/// expanded as `v·∇n + n ∇·v` with `∇n` by finite differences.
pub fn solve_phi_time_derivative(
    n: &GridField,
    v: &dyn VelocityField,
    time: f64,
    g_t: &[f64],
    ln_ns_t: &[f64],
) -> Result<PotentialSolution> {
    let grid = n.grid.without_times();
    let grad_n = n.gradient();
    let coords = grid.node_coords();
    let source: Vec<f64> = coords
        .iter()
        .zip(n.values.iter().zip(&grad_n.values))
        .map(|(c, (&nv, gn))| {
            let x = Vec2::new(c[0], c[1]);
            let u = v.velocity(x, time);
            -(u.x * gn[0] + u.y * gn[1] + nv * v.divergence(x, time))
        })
        .collect();
    let dirichlet: Vec<f64> = ln_ns_t.iter().map(|v| -v).collect();
    solve_mixed(&grid, &source, g_t, &dirichlet, PotentialKind::PhiT, time)
}
