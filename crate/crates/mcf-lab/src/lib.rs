//! mcf-lab: a numerical laboratory for microlocal pairings of weakly
//! converging L^p field sequences on the flat torus.
//!
//! The library synthesizes oscillating, concentrating, and laminated
//! sequences, evaluates their pairings against test integrands and
//! 0-homogeneous Fourier symbols through discrete multiplier operators,
//! and cross-validates the results against closed-form limit objects,
//! differential-constraint conditions, wavefront indicators, and the
//! relaxation / transport application pipelines.

pub mod apps;
pub mod config;
pub mod constraint;
pub mod error;
pub mod extract;
pub mod field;
pub mod fourier;
pub mod oracle;
pub mod pairing;
pub mod scenario;
pub mod synth;
pub mod testfun;

pub use error::{McfError, Result};
