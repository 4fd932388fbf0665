//! Free-boundary plasma sheath simulator: characteristic transport, interface
//! evolution, elliptic potentials, velocity update and extension, iterated to a
//! fixed point, with numerical checks of the supporting estimates.

pub mod analysis;
pub mod characteristics;
pub mod elliptic;
pub mod error;
pub mod extension;
pub mod fixpoint;
pub mod geometry;
pub mod interface;
pub mod lagrangian;
pub mod periodic;
pub mod transport;
pub mod verify;

pub use error::{Error, Result, Stage};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
