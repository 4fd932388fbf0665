//! Run configuration: domain, grids, iteration controls and named analytic
//! profiles for the initial and boundary data.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::interface::NsVariant;
use crate::Vec2;

/// Scalar profile, evaluated either at a point or at a polar angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `offset + amplitude · exp(−|x|²/(2 width²))`.
    RadialGaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `mean + amplitude · cos(k β)`.
    CosineModeK {
        mean: f64,
        amplitude: f64,
        k: u32,
    },
}

impl Profile {
    pub fn at_point(&self, x: Vec2) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::RadialGaussian { amplitude, width, offset } => {
                offset + amplitude * (-x.norm_squared() / (2.0 * width * width)).exp()
            }
            Profile::CosineModeK { .. } => self.at_angle(x.y.atan2(x.x)),
        }
    }

    pub fn at_angle(&self, beta: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::RadialGaussian { amplitude, offset, .. } => offset + amplitude,
            Profile::CosineModeK { mean, amplitude, k } => mean + amplitude * (k as f64 * beta).cos(),
        }
    }

    fn is_angular(&self) -> bool {
        !matches!(self, Profile::RadialGaussian { .. })
    }

    fn finite(&self) -> bool {
        match *self {
            Profile::Constant { value } => value.is_finite(),
            Profile::RadialGaussian { amplitude, width, offset } => {
                amplitude.is_finite() && offset.is_finite() && width.is_finite() && width > 0.0
            }
            Profile::CosineModeK { mean, amplitude, .. } => mean.is_finite() && amplitude.is_finite(),
        }
    }

    /// Lower bound of the profile over its range.
    fn lower_bound(&self) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::RadialGaussian { amplitude, offset, .. } => offset + amplitude.min(0.0),
            Profile::CosineModeK { mean, amplitude, .. } => mean - amplitude.abs(),
        }
    }

    fn upper_bound(&self) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::RadialGaussian { amplitude, offset, .. } => offset + amplitude.max(0.0),
            Profile::CosineModeK { mean, amplitude, .. } => mean + amplitude.abs(),
        }
    }
}

/// Initial velocity profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityProfile {
    /// `−speed · x/|x|`.
    RadialInflow { speed: f64 },
    Constant { value: [f64; 2] },
}

impl VelocityProfile {
    pub fn at(&self, x: Vec2) -> Vec2 {
        match *self {
            VelocityProfile::RadialInflow { speed } => -x * (speed / x.norm()),
            VelocityProfile::Constant { value } => Vec2::new(value[0], value[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profiles {
    pub n0: Profile,
    pub u0: VelocityProfile,
    /// Neumann datum `g(β, t) = g(β) + t ∂_t g(β)` for the sheath potential.
    pub g: Profile,
    pub g_t: Profile,
    pub r0: Profile,
    pub ns0: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub n_r: usize,
    pub n_beta: usize,
    /// Number of time steps; there are `n_t + 1` time levels.
    pub n_t: usize,
    /// Radial nodes of the fixed annulus grid; defaults to `2 n_r`.
    #[serde(default)]
    pub n_r_ext: Option<usize>,
    /// Characteristic integration step.
    pub dt: f64,
    pub picard_max_iters: usize,
    pub picard_tol: f64,
    /// Cover spacing of the extension.
    pub r1: f64,
    #[serde(default)]
    pub ns_variant: NsVariant,
    pub profiles: Profiles,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// The reference configuration used by the acceptance run.
    pub fn desk() -> Self {
        Self {
            domain: DomainSpec {
                r_b: 0.5,
                delta_star: 1.0,
                delta_star1: 1.0,
                delta_star2: 1.2,
                eta0: 1.0,
                k0: 1.0,
                gamma: 0.5,
                t_final: 0.05,
            },
            n_r: 48,
            n_beta: 64,
            n_t: 16,
            n_r_ext: None,
            dt: 1e-3,
            picard_max_iters: 12,
            picard_tol: 1e-10,
            r1: 0.08,
            ns_variant: NsVariant::SinThetaTheta,
            profiles: Profiles {
                n0: Profile::RadialGaussian {
                    amplitude: 0.5,
                    width: 1.0,
                    offset: 0.5,
                },
                u0: VelocityProfile::RadialInflow { speed: 1.0 },
                g: Profile::Constant { value: 0.0 },
                g_t: Profile::CosineModeK {
                    mean: -1.5,
                    amplitude: 0.3,
                    k: 1,
                },
                // a circle, so that u₀ = −ν on S(0)
                r0: Profile::Constant { value: 1.5 },
                ns0: Profile::CosineModeK {
                    mean: 1.0,
                    amplitude: 0.2,
                    k: 2,
                },
            },
            output: None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_r_ext(&self) -> usize {
        self.n_r_ext.unwrap_or(2 * self.n_r)
    }

    pub fn time_step(&self) -> f64 {
        self.domain.t_final / self.n_t as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.time_step();
        (0..=self.n_t).map(|k| k as f64 * h).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate().map_err(|e| Error::Config(e.to_string()))?;
        let bad = |m: String| Err(Error::Config(m));
        if self.n_r < 4 || self.n_beta < 8 || self.n_t < 1 {
            return bad(format!(
                "grid sizes n_r={}, n_beta={}, n_t={} below minimum 4/8/1",
                self.n_r, self.n_beta, self.n_t
            ));
        }
        if self.n_r_ext() < 4 {
            return bad("n_r_ext below 4".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if self.picard_max_iters == 0 {
            return bad("picard_max_iters must be positive".into());
        }
        if !(self.picard_tol > f64::EPSILON) {
            return bad(format!("picard_tol = {} must exceed machine epsilon", self.picard_tol));
        }
        let p = &self.profiles;
        for (name, prof) in [("n0", &p.n0), ("g", &p.g), ("g_t", &p.g_t), ("r0", &p.r0), ("ns0", &p.ns0)] {
            if !prof.finite() {
                return bad(format!("profile {name} has non-finite or invalid parameters"));
            }
        }
        for (name, prof) in [("g", &p.g), ("g_t", &p.g_t), ("r0", &p.r0), ("ns0", &p.ns0)] {
            if !prof.is_angular() {
                return bad(format!("profile {name} is angular; radial_gaussian is not allowed"));
            }
        }
        if p.n0.lower_bound() < 0.0 {
            return bad("n0 must be nonnegative".into());
        }
        if !(p.ns0.lower_bound() > 0.0) {
            return bad("ns0 must be positive".into());
        }
        let d = &self.domain;
        if !(p.r0.lower_bound() > d.delta_star2 / 2.0 && p.r0.upper_bound() < 2.0 * d.delta_star) {
            return bad(format!(
                "initial interface must lie in the annulus ({}, {})",
                d.delta_star2 / 2.0,
                2.0 * d.delta_star
            ));
        }
        match p.u0 {
            VelocityProfile::RadialInflow { speed } if !speed.is_finite() => return bad("u0 speed".into()),
            VelocityProfile::Constant { value } if !value.iter().all(|v| v.is_finite()) => {
                return bad("u0 value".into())
            }
            _ => {}
        }
        crate::extension::ExtensionConfig::new(d, self.r1).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
