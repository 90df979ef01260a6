use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix index ({i}, {j}) outside 1..4")]
    IndexOutOfRange { i: usize, j: usize },

    #[error("entry ({i}, {j}) touches the time row/column, which must vanish")]
    FirstRowNonzero { i: usize, j: usize },

    #[error("pair ({i}, {j}) given more than once")]
    DuplicatePair { i: usize, j: usize },

    #[error("theta[{index}] = {value:e} is below the degeneracy threshold")]
    DegenerateTheta { index: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("p1 = {0} is not positive")]
    NonpositiveP1(f64),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("Newton iteration did not converge at t = {t}")]
    NewtonDivergence { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that signal a point outside a map's domain rather
    /// than a malformed input.
    pub fn is_domain_violation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::NonpositiveP1(_) | Error::DivisionByZero(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
