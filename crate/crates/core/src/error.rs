use thiserror::Error;

/// Errors raised by the elicitation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("distribution is not univariate")]
    NotUnivariate,
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quantile values must strictly increase with probability")]
    NonMonotoneQuantiles,
    #[error("too few summaries: need {needed}, got {got}")]
    TooFewSummaries { needed: usize, got: usize },
    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
    #[error("no probability judgments supplied")]
    EmptyProbs,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("all chips allocated to a single bin; the requested family is not identifiable")]
    DegenerateAllocation,
    #[error("no chips allocated")]
    ZeroChips,
    #[error("need at least two beta marginals")]
    TooFewMarginals,
    #[error("family {0:?} cannot be fitted")]
    UnsupportedFamily(crate::distributions::Family),

    #[error("hyperparameter vector outside the model's box: {0}")]
    HyperparameterOutOfBox(String),
    #[error("unknown partition `{0}`")]
    UnknownPartition(String),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("observation not covered by partition `{0}`")]
    PartitionNotExhaustive(String),
    #[error("design matrix is singular or ill-conditioned")]
    SingularDesign,
    #[error("conditional mean {0} outside the link function's domain")]
    LinkDomain(f64),

    #[error("query `{0}` already answered in this dataset")]
    DuplicateQuery(String),
    #[error("unknown query `{0}`")]
    UnknownQuery(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("illegal session transition from {from} to {to}")]
    IllegalTransition { from: String, to: String },

    #[error("statement does not belong to the expected elicitation space")]
    WrongSpace,
    #[error("statement kind not supported here: {0}")]
    UnsupportedStatement(String),
    #[error("grid has {0} points, more than the 1e6 limit")]
    GridTooLarge(u128),
    #[error("grid is empty")]
    EmptyGrid,
    #[error("hyper-posterior is not normalized")]
    Unnormalized,
    #[error("invalid noise settings: {0}")]
    InvalidNoise(String),

    #[error("unknown query kind for this operation: {0}")]
    UnknownQueryKind(String),
    #[error("no candidate queries left")]
    NoCandidates,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("pooled density is zero almost everywhere")]
    EmptyOverlap,

    #[error("value {0} outside the density's support")]
    OutOfSupport(f64),
    #[error("method incompatible with scenario: {0}")]
    IncompatibleMethod(String),

    #[error("config parse error: {0}")]
    ParseError(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
