use thiserror::Error;

/// Errors raised by curve construction, period computation, theta evaluation
/// and the solution assembly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("odd number of branch points ({0})")]
    OddBranchCount(usize),
    #[error("at least 4 branch points are required, got {0}")]
    TooFewPoints(usize),
    #[error("duplicate branch point {0} not covered by a degenerate pair")]
    DuplicatePoint(f64),
    #[error("branch point {0} is not finite")]
    NonFiniteBranchPoint(f64),
    #[error("lambda = {0} coincides with a branch point; tag it as a branch point")]
    UntaggedBranchPoint(f64),
    #[error("holomorphic differentials cannot be evaluated pointwise at branch point {0}")]
    BranchPointEvaluation(usize),
    #[error("branch index {index} out of range for {count} branch points")]
    BranchIndexOutOfRange { index: usize, count: usize },
    #[error("quadrature did not converge on {what}: relative change {delta:e} after {nodes} nodes")]
    QuadratureNotConverged { what: String, nodes: usize, delta: f64 },
    #[error("A-period matrix is singular")]
    SingularAPeriodMatrix,
    #[error("real part of the Riemann matrix is not negative definite")]
    NotNegativeDefinite,
    #[error("point e must be a branch point")]
    ENotBranchPoint,
    #[error("no non-singular odd characteristics found")]
    SingularCharacteristics,
    #[error("vanishing denominator while evaluating {0}")]
    VanishingDenominator(&'static str),
    #[error("curve is not a usable M-curve: {0}")]
    NotMCurve(String),
    #[error("theta function vanishes on the probe point: {0}")]
    SingularDenominatorOnProbe(&'static str),
    #[error("x(y,t) is not real: |Im x| = {imag:e} at y = {y}, t = {t}")]
    NonRealX { y: f64, t: f64, imag: f64 },
    #[error("target x = {0} is not bracketed")]
    NotBracketed(f64),
    #[error("x(y) is not strictly monotone for this configuration")]
    NonMonotone,
    #[error("cusped fields are not amenable to spectral validation")]
    CuspedFieldRejected,
    #[error("x(y) is not monotone on the t-slice {0}")]
    NonMonotoneX(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
