//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, McfError>;

#[derive(Debug, Error)]
pub enum McfError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at x = {coord:?} (component {component})")]
    NonFiniteSample { coord: Vec<f64>, component: usize },

    #[error("component count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cutoff exceeds grid resolution: R = {radius}, Nyquist = {nyquist}")]
    CutoffTooLarge { radius: f64, nyquist: f64 },

    #[error("scale separation violated: {0}")]
    ScaleSeparation(String),

    #[error("direction {0:?} is not a rational lattice direction (denominator limit {1})")]
    IrrationalDirection(Vec<f64>, i64),

    #[error("no recession function: sphere values diverge under radial refinement ({0})")]
    NoRecession(String),

    #[error("recession data required for an atom at infinity but the integrand has none")]
    MissingRecession,

    #[error("pairing did not converge: {message}\n{table}")]
    NonConvergent { message: String, table: String },

    #[error("unstable across refinement: {0}")]
    Instability(String),

    #[error("value distribution not atomically clusterable ({0} clusters exceed limit {1})")]
    NotAtomic(usize, usize),

    #[error("quadrature did not converge under refinement: {0}")]
    QuadratureDiverged(String),

    #[error("structural commutation relations violated at z = {0:?}")]
    CommutationViolated(Vec<f64>),

    #[error("closed-form input is not homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("calibration ratio {0} is near neither 1/2 nor 1; evaluator defect suspected")]
    CalibrationFailed(f64),

    #[error("semilinear stepping unstable: norm grew beyond the admissible envelope ({0})")]
    SteppingUnstable(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("unknown name {key:?} in registry {registry:?}")]
    UnknownName { registry: String, key: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
