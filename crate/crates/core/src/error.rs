use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficient list is empty")]
    EmptyCoefficients,
    #[error("leading coefficient is zero")]
    ZeroLeadingCoefficient,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("evaluation at z = 0")]
    ZeroArgument,
    #[error("function is not weakly bell shaped")]
    NotWeaklyBellShaped,
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("eigensolver did not converge after {0} sweeps")]
    ConvergenceFailure(usize),
    #[error("eta = {0} outside (min u, max u)")]
    OutOfRangeEta(f64),
    #[error("quadrature did not converge: {0}")]
    QuadratureNoConvergence(String),
    #[error("even number of branches at x = {0}; perturb x")]
    BranchCountEven(f64),
    #[error("potential is not even")]
    NotEven,
    #[error("degenerate critical points: {0}")]
    DegenerateCriticalPoints(String),
    #[error("value outside the admissible region: {0}")]
    OutOfRegion(String),
    #[error("need at least 3 values of epsilon, got {0}")]
    InsufficientLadder(usize),
    #[error("point lies on the branch cut of log")]
    OnBranchCut,
    #[error("root polishing failed: {0}")]
    RootPolishFailure(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("contour crosses the branch cut")]
    BranchCutCrossing,
    #[error("blow-up detected at t = {0}")]
    BlowupDetected(f64),
    #[error("phase unwrap ambiguity at n = {0}; reduce the time step")]
    PhaseUnwrapAmbiguity(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
