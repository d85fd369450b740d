use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("requested rank {requested} exceeds min(p, n) = {max}")]
    RankRequestTooLarge { requested: usize, max: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("CCA yields at most C-1 = {max} directions, {requested} requested")]
    CcaRankExceeded { requested: usize, max: usize },

    #[error("pooled covariance has no singular value above the truncation threshold")]
    DegeneratePooledCovariance,

    #[error("class means {first} and {second} coincide; mean difference is degenerate")]
    DegenerateMeans { first: usize, second: usize },

    #[error("embedding dimension {d} is smaller than C-1 = {min}")]
    TooFewDims { d: usize, min: usize },

    #[error("NIPALS did not converge for component {component}")]
    PlsNoConvergence { component: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("classifier needs d <= n, got d = {d}, n = {n}")]
    UnderdeterminedClassifier { d: usize, n: usize },

    #[error("projected covariance is singular")]
    SingularProjectedCov,

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("delta lies in the span of the leading eigenvectors (gamma ~ 0)")]
    DegenerateGamma,

    #[error("pooled-covariance denominator 4 - q is {0:e}, too close to zero")]
    PooledDenominatorDegenerate(f64),

    #[error("dimension p = {p} too small for this family (needs at least {min})")]
    PTooSmall { p: usize, min: usize },

    #[error("rho = {0} must lie in (0, 1)")]
    BadRho(f64),

    #[error("parse failure at line {line}: {message}")]
    ParseFailure { line: usize, message: String },

    #[error("fewer than two classes remain after cleaning")]
    DegenerateLabels,

    #[error("{k} folds requested for {n} samples")]
    TooManyFolds { k: usize, n: usize },

    #[error("error curve has no finite entries")]
    EmptyCurve,

    #[error("no LOL curve to normalize against")]
    NoBaseline,

    #[error("Hotelling test needs d <= n0 + n1 - 2, got d = {d}, n0 + n1 = {n}")]
    TestUnderdetermined { d: usize, n: usize },

    #[error("{k} bins requested for {n} samples")]
    TooManyBins { k: usize, n: usize },

    #[error("target has fewer than two distinct quantile classes")]
    DegenerateTarget,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name, used in structured CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyClass(_) => "EmptyClass",
            Error::RankRequestTooLarge { .. } => "RankRequestTooLarge",
            Error::NonFinite => "NonFinite",
            Error::CcaRankExceeded { .. } => "CcaRankExceeded",
            Error::DegeneratePooledCovariance => "DegeneratePooledCovariance",
            Error::DegenerateMeans { .. } => "DegenerateMeans",
            Error::TooFewDims { .. } => "TooFewDims",
            Error::PlsNoConvergence { .. } => "PlsNoConvergence",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::UnderdeterminedClassifier { .. } => "UnderdeterminedClassifier",
            Error::SingularProjectedCov => "SingularProjectedCov",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::DegenerateGamma => "DegenerateGamma",
            Error::PooledDenominatorDegenerate(_) => "PooledDenominatorDegenerate",
            Error::PTooSmall { .. } => "PTooSmall",
            Error::BadRho(_) => "BadRho",
            Error::ParseFailure { .. } => "ParseFailure",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::TooManyFolds { .. } => "TooManyFolds",
            Error::EmptyCurve => "EmptyCurve",
            Error::NoBaseline => "NoBaseline",
            Error::TestUnderdetermined { .. } => "TestUnderdetermined",
            Error::TooManyBins { .. } => "TooManyBins",
            Error::DegenerateTarget => "DegenerateTarget",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
