use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("element {index} is out of range for a ground set of size {n}")]
    ElementOutOfRange { index: usize, n: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("brute force refused: n = {n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("cover constraint infeasible: theta = {theta} exceeds max base weight {max_weight}")]
    Infeasible { theta: f64, max_weight: f64 },

    #[error("value {value} exceeds the exact optimum {opt}; this is a correctness bug")]
    SuperOptimal { value: f64, opt: f64 },

    #[error("curvature {kappa} exceeds 1 - eps = {limit}; use the plain continuous greedy")]
    CurvatureTooHigh { kappa: f64, limit: f64 },

    #[error("target curvature {target} is unachievable (reachable range [{min}, {max}])")]
    UnachievableCurvature { target: f64, min: f64, max: f64 },

    #[error("summand {index} is not a base of the matroid")]
    NotABase { index: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
