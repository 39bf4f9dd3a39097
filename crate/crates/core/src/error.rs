use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("quadrature did not converge: {detail} (error estimate {estimate:.3e})")]
    Quadrature { detail: String, estimate: f64 },
    #[error("step budget exceeded: h = {h:.6e} > {limit:.6e} ({state})")]
    StepBudget { h: f64, limit: f64, state: String },
    #[error("no pole in bracket [{lo:.3e}, {hi:.3e}]: residuals {f_lo:.3e}, {f_hi:.3e}")]
    NoPole { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("grid mismatch: {0}")]
    Grid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::Quadrature { .. } => 3,
            Error::StepBudget { .. } => 4,
            Error::NoPole { .. } => 5,
            Error::Grid(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
