use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("ab = 0: alpha is undefined (Gasymov regime)")]
    DegenerateProduct,
    #[error("eigensolver did not converge for the cluster near {near}")]
    EigenNonconvergence { near: String },
    #[error("integrator step underflow at lambda = {lambda}")]
    StepUnderflow { lambda: String },
    #[error("eigenvalue near {lambda} is multiple or clustered")]
    MultipleEigenvalue { lambda: String },
    #[error("simpleness violated: |F'(lambda)| = {dfn:e} at lambda = {lambda}")]
    NotSimple { lambda: String, dfn: f64 },
    #[error("pole proximity: lambda = {lambda} within {dist:e} of a pole")]
    PoleProximity { lambda: String, dist: f64 },
    #[error("Newton diverged from seed {seed}")]
    NewtonDivergence { seed: String },
    #[error("contour passes through a root after {retries} retries")]
    ContourThroughRoot { retries: usize },
    #[error("quadrature did not converge: {trace}")]
    QuadratureNonconvergence { trace: String },
    #[error("expansion form mismatch: plan {plan}, operator {operator}")]
    FormMismatch { plan: String, operator: String },
    #[error("band {n} not available: {reason}")]
    Band { n: i64, reason: String },
}

impl Error {
    /// Numerical failures, as opposed to bad input.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::EigenNonconvergence { .. }
                | Error::StepUnderflow { .. }
                | Error::NewtonDivergence { .. }
                | Error::ContourThroughRoot { .. }
                | Error::QuadratureNonconvergence { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::DegenerateProduct => "degenerate-product",
            Error::EigenNonconvergence { .. } => "eigen-nonconvergence",
            Error::StepUnderflow { .. } => "step-underflow",
            Error::MultipleEigenvalue { .. } => "multiple-eigenvalue",
            Error::NotSimple { .. } => "not-simple",
            Error::PoleProximity { .. } => "pole-proximity",
            Error::NewtonDivergence { .. } => "newton-divergence",
            Error::ContourThroughRoot { .. } => "contour-through-root",
            Error::QuadratureNonconvergence { .. } => "quadrature-nonconvergence",
            Error::FormMismatch { .. } => "form-mismatch",
            Error::Band { .. } => "band",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
