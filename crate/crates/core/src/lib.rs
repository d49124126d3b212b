//! Degrees of freedom, operator norms and optimal waveforms for links between
//! two planar holographic surfaces.
//!
//! The crate is split the same way a computation flows: [`geometry`] places
//! the surfaces, [`kernel`] evaluates exact and approximated Green kernels,
//! [`spectrum`] discretizes them and extracts eigenvalues, [`closedform`]
//! evaluates the analytic counts and norms, [`waveforms`] builds the
//! prolate-spheroidal eigenfunctions, and [`harness`] drives experiments from
//! config files.

pub mod closedform;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernel;
pub mod polygon;
pub mod spectrum;
pub mod waveforms;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// 3-D vector type used for positions and directions.
pub type Vec3 = nalgebra::Vector3<f64>;
