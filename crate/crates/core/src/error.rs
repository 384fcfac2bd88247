use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point outside the domain (r = {r:e})")]
    NotInterior { r: f64 },
    #[error("root finder did not converge after {iters} iterations")]
    NoConvergence { iters: usize },
    #[error("gradient of r vanishes (|dbar r| = {norm:e})")]
    DegenerateGradient { norm: f64 },
    #[error("acceptance rate {rate:e} below threshold")]
    LowAcceptance { rate: f64 },
    #[error("metric tensor not positive definite (min eigenvalue {eig:e})")]
    NotPositive { eig: f64 },
    #[error("quadrature abscissa outside the domain (r = {r:e})")]
    QuadratureOutside { r: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("kernel mode invalid: {0}")]
    InvalidMode(String),
    #[error("resolution limit: {0}")]
    Resolution(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
