use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("weight is negative at t = {t} (value {value})")]
    NegativeWeight { t: f64, value: f64 },
    #[error("degenerate interval: a = {a}, b = {b}")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("trivial weight: the set {{delta > 0}} has measure zero")]
    TrivialWeight,
    #[error("invalid quadrature configuration: {0}")]
    InvalidQuadConfig(String),

    #[error("quadrature did not converge on [{a}, {b}] within {subdivisions} subdivisions (error estimate {error:e})")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        subdivisions: usize,
        error: f64,
    },
    #[error("non-finite integrand value at t = {0}")]
    NonFiniteIntegrand(f64),

    #[error("step size underflow at t = {t} (lambda = {lambda})")]
    StepUnderflow { t: f64, lambda: Complex64 },
    #[error("non-finite state at t = {t} (lambda = {lambda})")]
    NonFiniteState { t: f64, lambda: Complex64 },
    #[error("step budget exhausted at t = {t} (lambda = {lambda})")]
    StepBudget { t: f64, lambda: Complex64 },
    #[error("t = {t} outside [{a}, {b}]")]
    OutOfRange { t: f64, a: f64, b: f64 },

    #[error("invalid boundary parameter: {0}")]
    InvalidParam(String),
    #[error("analytic boundary parameter evaluated on the real axis at {0}")]
    RealAxis(f64),
    #[error("the infinite boundary parameter has no asymptotic functionals")]
    InfiniteParam,
    #[error("unresolved asymptotics of {quantity}: tail {tail:?}")]
    Unresolved { quantity: &'static str, tail: Vec<f64> },

    #[error("lambda = {0} is too close to a pole of the m-function")]
    PoleProximity(Complex64),
    #[error("density extrapolation at u = {u} is pole-contaminated (estimates {first:e} vs {second:e})")]
    PoleContaminated { u: f64, first: f64, second: f64 },
    #[error("negative spectral density {value:e} at u = {u}")]
    NegativeDensity { u: f64, value: f64 },
    #[error("suspected double root of the denominator near {0}")]
    DoubleRoot(f64),
    #[error("point mass cross-check failed at {lambda}: residue {residue}, limit {limit}")]
    MassCrossCheck {
        lambda: f64,
        residue: f64,
        limit: f64,
    },
    #[error("s = {s} outside the spectral window [{lo}, {hi}]")]
    OutsideWindow { s: f64, lo: f64, hi: f64 },
    #[error("found {found} eigenvalues, {wanted} requested")]
    InsufficientEigenvalues { found: usize, wanted: usize },

    #[error("transform grid does not match the spectral function: {0}")]
    GridMisalignment(String),
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Configuration and input errors, as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::InvalidProblem(_)
                | Error::NegativeWeight { .. }
                | Error::DegenerateInterval { .. }
                | Error::TrivialWeight
                | Error::InvalidQuadConfig(_)
                | Error::InvalidParam(_)
                | Error::InvalidArgument(_)
                | Error::OutOfRange { .. }
                | Error::OutsideWindow { .. }
        )
    }
}
