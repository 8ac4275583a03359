use thiserror::Error;

/// Errors produced by the simulation and the CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("equilibrium solver did not converge: residual {residual:.3e} after {iterations} iterations (N = {n})")]
    SolverNonConvergence {
        n: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("no active emitters in chain")]
    NoActiveEmitters,

    #[error("intensity vanishes; g2 undefined")]
    ZeroIntensity,

    #[error("coherent intensity vanishes in this direction; elastic-limit g2 diverges")]
    DestructiveDivergence,

    #[error("all {0} ensemble realizations were skipped (every emitter dark)")]
    AllRealizationsSkipped(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Stable machine-readable category slug, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::SolverNonConvergence { .. } => "solver",
            Error::NoActiveEmitters
            | Error::ZeroIntensity
            | Error::DestructiveDivergence
            | Error::AllRealizationsSkipped(_) => "compute",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
