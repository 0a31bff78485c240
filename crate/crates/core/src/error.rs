use thiserror::Error;

/// Failures raised by the ribbon model.
///
/// Variants split into input problems (bad parameters, malformed charts) and
/// numerical failures (missing kernel directions, non-transversal fields);
/// [`RibbonError::is_numerical`] tells them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RibbonError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rigidity matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("orthotropic precondition violated: {0}")]
    OrthotropicPrecondition(String),

    #[error("chart frame is singular or orientation-reversing at node {node} (det D = {det:e})")]
    SingularFrame { node: usize, det: f64 },

    #[error("grid mismatch: expected {expected} nodes, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("initial frame is not a rotation (orthogonality defect {defect:e})")]
    NotARotation { defect: f64 },

    #[error("alpha bisection bracket failed to close after {doublings} doublings")]
    BracketFailure { doublings: usize },

    #[error("no kernel direction of {sign} with the required determinant sign (best det = {best_det:e})")]
    NoKernelDirection { sign: &'static str, best_det: f64 },

    #[error("determinant roots do not straddle zero ({lambda_lo:e}, {lambda_hi:e})")]
    RootsDoNotStraddle { lambda_lo: f64, lambda_hi: f64 },

    #[error("rasterized constraint set is empty (radius {radius}, n {n})")]
    EmptyConstraintSet { radius: f64, n: usize },

    #[error("biconjugate linear program failed: {0}")]
    OracleFailure(String),

    #[error("curvature field is not rank one at node {node} (det = {det:e})")]
    NotRankOne { node: usize, det: f64 },

    #[error("rank-one direction is not transversal to the centerline at node {node}")]
    NonTransversal { node: usize },

    #[error("half-width {requested} exceeds the admissible width bound {bound}")]
    WidthExceeded { requested: f64, bound: f64 },
}

impl RibbonError {
    /// `true` for failures of a numerical procedure on admissible input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            RibbonError::BracketFailure { .. }
                | RibbonError::NoKernelDirection { .. }
                | RibbonError::RootsDoNotStraddle { .. }
                | RibbonError::EmptyConstraintSet { .. }
                | RibbonError::OracleFailure(_)
                | RibbonError::NotRankOne { .. }
                | RibbonError::NonTransversal { .. }
                | RibbonError::WidthExceeded { .. }
        )
    }

    /// Name of the module that raised the error, used in diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            RibbonError::NotPositiveDefinite { .. }
            | RibbonError::OrthotropicPrecondition(_)
            | RibbonError::BracketFailure { .. }
            | RibbonError::NoKernelDirection { .. } => "quadratic_forms",
            RibbonError::RootsDoNotStraddle { .. }
            | RibbonError::EmptyConstraintSet { .. }
            | RibbonError::OracleFailure(_) => "relaxation",
            RibbonError::SingularFrame { .. } => "geometry",
            RibbonError::NotARotation { .. } | RibbonError::GridMismatch { .. } => "frames",
            RibbonError::NotRankOne { .. }
            | RibbonError::NonTransversal { .. }
            | RibbonError::WidthExceeded { .. } => "surface",
            RibbonError::InvalidParameter { .. } => "input",
        }
    }
}

pub type Result<T> = std::result::Result<T, RibbonError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> RibbonError {
    RibbonError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
