use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported family `{0}`")]
    UnsupportedFamily(String),
    #[error("rank {n} out of range for {family}")]
    RankOutOfRange { family: String, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid space configuration: {0}")]
    InvalidConfig(String),
    #[error("subgroup algebra is not closed under the bracket (defect {0:.3e})")]
    NotASubalgebra(f64),
    #[error("isotropy algebra contains a nonzero ideal of dimension {0}")]
    NotEffective(usize),
    #[error("isotropy algebra fills the whole algebra")]
    DegenerateSpace,
    #[error("isotropy representation is not multiplicity free: {0}")]
    MultiplicityNotFree(String),
    #[error("normalizer of the isotropy algebra is larger by {0} dimensions; adjoin a maximal torus first")]
    NotSelfNormalizing(usize),
    #[error("{ell} summands exceed the cap of {cap}")]
    TooManySummands { ell: usize, cap: usize },
    #[error("flag element {0} is not a node of the poset")]
    FlagNotInPoset(usize),
    #[error("invalid flag: {0}")]
    InvalidFlag(String),
    #[error("tangent vector is not a unit vector (norm {0})")]
    NotUnitVector(f64),
    #[error("endomorphism is not in the sphere of trace-one kernels: {0}")]
    NotInSphereB(String),
    #[error("complex has {faces} faces, above the cap of {cap}")]
    ComplexTooLarge { faces: usize, cap: usize },
    #[error("metric has a non-positive entry")]
    NonPositiveMetric,
    #[error("expected two summands, found {0}")]
    NotTwoSummand(usize),
    #[error("wrong structure for the two-summand discriminant: {0}")]
    WrongStructure(String),
    #[error("flow collapsed at t = {t}: summand {summand} reached {value:.3e}")]
    BlowUp { t: f64, summand: usize, value: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
