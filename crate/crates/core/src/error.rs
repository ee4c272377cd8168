use thiserror::Error;

/// Errors raised by the numerical routines and the command-line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("position {x} lies outside [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("profile vanishes or is singular at x = {x} where strict positivity was required")]
    SingularValue { x: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("the integral defining 1/v0 diverges (increments {first:.3e}, {second:.3e})")]
    DivergentV0 { first: f64, second: f64 },

    #[error("quadrature did not reach tolerance {tol:.1e} (estimate {estimate:.3e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("coefficient {name} is not strictly positive at x = {x} (value {value})")]
    Positivity { name: &'static str, x: f64, value: f64 },

    #[error("second-derivative error estimate {estimate:.3e} exceeds {limit:.3e}")]
    DifferentiationNoise { estimate: f64, limit: f64 },

    #[error("normal-form potential is not finite at y = {y}")]
    NonFinitePotential { y: f64 },

    #[error("eigenvalue {index} did not converge: error estimate {estimate:.3e} > {tol:.1e}")]
    Convergence { index: usize, estimate: f64, tol: f64 },

    #[error("Pruefer phase is not monotone in lambda near {lambda}")]
    Bracket { lambda: f64 },

    #[error("step size collapsed to {step:.3e} at x = {x}")]
    Stiffness { x: f64, step: f64 },

    #[error("mode {index} has vanishing weighted norm {norm:.3e}")]
    Normalization { index: usize, norm: f64 },

    #[error("Lambda = {lambda} does not exceed max V = {vmax}; turning points are not supported")]
    TurningPoint { lambda: f64, vmax: f64 },

    #[error("at least 3 nonzero energies are required, got {0}")]
    InsufficientModes(usize),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("conformal weight 2*Delta = {0} makes the epsilon -> 0 limit divergent")]
    NonIntegrableWeights(f64),

    #[error("Levenberg-Marquardt damping exceeded {0:.1e}")]
    DivergedFit(f64),

    #[error("Jacobian condition number {0:.3e} exceeds 1e12")]
    RankDeficient(f64),

    #[error("sqrt(K) changes sign near y = {y}; no positive K exists for this potential")]
    SignChange { y: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("input: {0}")]
    Input(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Usage(_) | Error::Input(_) | Error::Io(_) | Error::InvalidInput(_) | Error::Domain { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
