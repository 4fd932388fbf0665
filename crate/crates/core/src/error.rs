use thiserror::Error;

/// Pipeline stage names used for error attribution in a Picard step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    InitialDensity,
    Presheath,
    Interface,
    SheathDensity,
    Potential,
    Velocity,
    Extension,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::InitialDensity => "initial-slab density",
            Stage::Presheath => "presheath potential",
            Stage::Interface => "interface evolution",
            Stage::SheathDensity => "sheath density",
            Stage::Potential => "sheath potential",
            Stage::Velocity => "velocity update",
            Stage::Extension => "extension",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("empty field")]
    EmptyField,
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("polygon is not convex (turn sign flips at vertex {0})")]
    NonConvex(usize),
    #[error("point {index} lies outside radius {radius}")]
    OutsideAnnulus { index: usize, radius: f64 },
    #[error("exponent overflow: |f| = {0} is too large")]
    ExpOverflow(f64),

    #[error("step cap of {0} exceeded while tracing")]
    StepCapExceeded(usize),
    #[error("velocity sample is NaN at ({x}, {y}), t = {t}")]
    NanVelocity { x: f64, y: f64, t: f64 },
    #[error("start point lies inside the target")]
    StartInsideTarget,
    #[error("backward characteristic hits the target boundary at s = {0}")]
    BackwardHitsTarget(f64),
    #[error("velocity field is not dissipative at ({x}, {y}), t = {t}: margin {margin}")]
    NotDissipative { x: f64, y: f64, t: f64, margin: f64 },
    #[error("decay bound violated for start #{start} at s = {time}")]
    DecayViolation { start: usize, time: f64 },
    #[error("second derivatives of the velocity are unavailable")]
    MissingSecondDerivatives,

    #[error("density is not available on the target boundary: {0}")]
    MissingTargetDensity(String),
    #[error("mode cap exceeded: requested {requested}, cap {cap}")]
    ModeCapExceeded { requested: usize, cap: usize },
    #[error("{samples} boundary samples cannot resolve {modes} modes")]
    BelowNyquist { samples: usize, modes: usize },
    #[error("interface touches the target (min gap {0})")]
    InterfaceTouchesTarget(f64),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("non-positive sheath density at sample {0}")]
    NonPositiveDensity(usize),
    #[error("CFL violation: advective number {0} exceeds 1")]
    CflViolation(f64),
    #[error("interface leaves the admissible annulus at sample {index} (r = {r})")]
    InterfaceExit { index: usize, r: f64 },
    #[error("interface lost star-shapedness at sample {0}")]
    NotStarShaped(usize),

    #[error("Lagrangian map degenerates at t = {time} (det = {det})")]
    Degenerate { time: f64, det: f64 },
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("cover spacing r1 = {r1} outside (0, {max})")]
    CoverSpacing { r1: f64, max: f64 },
    #[error("point ({0}, {1}) is outside every cover ball")]
    OutsideCover(f64, f64),
    #[error("reflected point exits the sheath region at ({0}, {1})")]
    NotExtendable(f64, f64),
    #[error("reflected evaluation point outside the half-ball domain (x2 = {0})")]
    ReflectionOutOfDomain(f64),

    #[error("time {0} lies outside the sample grid")]
    OffGrid(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("premise fails at sample {index}: {reason}")]
    PremiseViolated { index: usize, reason: String },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn at(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// Stage that produced the error, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
