use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian: ||m - m^dag|| = {residual:e} exceeds {tolerance:e}")]
    NotHermitian { residual: f64, tolerance: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        what: &'static str,
    },
    #[error("spectrum is not real: imaginary part {imag:e} exceeds {tolerance:e}")]
    SpectrumNotReal { imag: f64, tolerance: f64 },
    #[error("trace is {trace} (|trace - 1| = {residual:e})")]
    TraceNotOne { trace: f64, residual: f64 },
    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPSD { min_eigenvalue: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Ferrari root has imaginary part {imag:e} above tolerance {tolerance:e}")]
    ComplexResidual { imag: f64, tolerance: f64 },
    #[error("Ferrari pivot P = {p:e} vanishes while b = {b:e} does not")]
    DegeneratePivot { p: f64, b: f64 },
    #[error("pure-state concurrence radicand is negative: {0:e}")]
    NegativeRadicand(f64),
    #[error("eigenvalue {0:e} of rho*rho_tilde is below the clamping floor")]
    NegativeEigenvalue(f64),
    #[error("canonical form residual {residual:e} exceeds tolerance {tolerance:e}")]
    CanonicalizationResidual { residual: f64, tolerance: f64 },
    #[error("rejection sampler exhausted after {attempts} attempts ({ensemble})")]
    RejectionExhausted { ensemble: String, attempts: usize },
    #[error("concurrence {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("separability criteria disagree: det(rho^PT) = {det_pt:e}, C = {concurrence:e}")]
    CriteriaDisagreement { det_pt: f64, concurrence: f64 },
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("unknown ensemble `{0}`")]
    UnknownEnsemble(String),
    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
