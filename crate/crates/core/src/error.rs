use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not a direction: the zero vector has no slope")]
    NotADirection,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integer overflow in {0}; use the scaled marking or the trace formula instead of exact products")]
    Overflow(&'static str),
    #[error("determinant is {0}, expected 1")]
    Determinant(i128),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("points belong to different models")]
    ModelMismatch,
    #[error("slope too deep: Farey descent exceeded {max_depth} moves")]
    SlopeTooDeep { max_depth: u64 },
    #[error("sup search did not stabilize after {expansions} expansions (last improvement {last_improvement:e}, value {value})")]
    SearchUnstable {
        expansions: usize,
        last_improvement: f64,
        value: f64,
    },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("boundary sample was drawn from a different measure than the reflected measure")]
    ProvenanceMismatch,
    #[error("boundary sampling did not converge: median diagnostic {median:e} > 1e-3")]
    NotConverged { median: f64 },
    #[error("element is not hyperbolic (|trace| = {0} <= 2)")]
    NotHyperbolic(i64),
    #[error("element is not elliptic (|trace| = {0} >= 2)")]
    NotElliptic(i64),
    #[error("pair (g, h) is not north-south admissible")]
    Inadmissible,
    #[error("measure at parameter {0} is elementary")]
    Elementary(f64),
    #[error("family members do not share a common support (parameter {0})")]
    SupportMismatch(f64),
    #[error("convolution table has {size} entries, above the cap {cap}")]
    CapExceeded { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
