//! The Picard map on velocity fields and the outer iteration around it.

pub mod config;
pub mod export;
pub mod picard;
pub mod report;

pub use export::{export_csv, ExportKind};
pub use config::{Profile, Profiles, RunConfig, VelocityProfile};
pub use picard::{picard_step, IterationState, RunContext};
pub use report::{contraction_estimate, run_fixed_point, write_snapshots, Flag, IterationMetrics, RunOutcome, RunReport, RunStatus};
