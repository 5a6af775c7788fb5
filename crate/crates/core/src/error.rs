use serde::Serialize;

/// Entrywise symmetry defect of one pencil coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryDeviation {
    pub coefficient: usize,
    pub deviation: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "kind")]
pub enum Error {
    #[error("coefficient symmetry violated: {violations:?}")]
    SymmetryViolation { violations: Vec<SymmetryDeviation> },
    #[error("leading coefficient is singular (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    SingularLeadingCoefficient { sigma_min: f64, sigma_max: f64 },
    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },
    #[error("unsupported pencil degree {degree}")]
    UnsupportedDegree { degree: usize },
    #[error("eigensolver failed: {detail}")]
    LinearizationFailure { detail: String },
    #[error("eigenvalue {re} + {im}i is not purely imaginary and nonzero")]
    NotImaginary { re: f64, im: f64 },
    #[error("eigenvalue is not semi-simple (algebraic {algebraic}, geometric {geometric})")]
    NotSemiSimple { algebraic: usize, geometric: usize },
    #[error("projected pencil is near-singular at z = {z} (condition {cond:e})")]
    ProjectedSingular { z: f64, cond: f64 },
    #[error("A_0 is positive definite; the subspace is empty")]
    EmptySubspace,
    #[error("complement block has a small eigenvalue {eigenvalue:e}")]
    ComplementSingular { eigenvalue: f64 },
    #[error("constraint matrix is singular (smallest |eigenvalue| {value:e})")]
    SingularConstraint { value: f64 },
    #[error("A_1 does not map ker(A_0) into its orthogonal complement (defect {deviation:e})")]
    KernelMapViolation { deviation: f64 },
    #[error("Newton iteration diverged (residual {residual:e} after {iterations} iterations)")]
    NewtonDivergence { residual: f64, iterations: usize },
    #[error("dispersion relation is resonant at mode {mode}")]
    ResonanceDetected { mode: i64 },
    #[error("Newton converged to the trivial solution (sup norm {sup_norm:e})")]
    WrongBranch { sup_norm: f64 },
    #[error("multi-pulse collapsed: found {found} peaks, expected {expected}")]
    PulseCollapse { found: usize, expected: usize },
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: String, value: f64 },
    #[error("d''(c) = {d2} is not positive")]
    NegativeD2 { d2: f64 },
    #[error("invalid input: {detail}")]
    InvalidInput { detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
