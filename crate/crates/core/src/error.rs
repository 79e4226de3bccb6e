use thiserror::Error;

/// Errors produced by dataset construction, probability evaluation,
/// estimation, and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("item index {0} is outside the item universe")]
    ItemOutOfRange(usize),

    #[error("duplicate item `{0}`")]
    DuplicateItem(String),

    #[error("invalid item label `{label}`: {reason}")]
    InvalidLabel { label: String, reason: &'static str },

    #[error("a comparison needs at least 2 items, got {0}")]
    ComparisonTooSmall(usize),

    #[error("comparison of {0} items exceeds the supported maximum of {max}", max = crate::model::MAX_COMPARISON_ITEMS)]
    ComparisonTooLarge(usize),

    #[error("winning set must be non-empty")]
    EmptyWinningSet,

    #[error("winner `{0}` is not part of the comparison set")]
    WinnerOutsideComparison(String),

    #[error("tie order {order} exceeds the maximum admitted order {t_max}")]
    TieOrderExceedsMax { order: usize, t_max: usize },

    #[error("tie order must be at least 2, got {0}")]
    InvalidTieOrder(usize),

    #[error("tie prevalence must be nonnegative, got {0}")]
    NegativeTiePrevalence(f64),

    #[error("strength must be strictly positive, got {0}")]
    NonPositiveStrength(f64),

    #[error("outcome space is empty")]
    EmptyOutcomeSpace,

    #[error("all outcome weights vanished; no probability distribution exists")]
    ZeroNormalizer,

    #[error("observed outcome is missing from the contest's outcome space (tie order {order} with maximum admitted order {t_max})")]
    OutcomeOutsideSpace { order: usize, t_max: usize },

    #[error("dataset has no contests")]
    EmptyDataset,

    #[error("ranking group is empty")]
    EmptyRankingGroup,

    #[error("item `{0}` appears in more than one ranking group")]
    OverlappingRankingGroups(String),

    #[error("ranked item `{0}` is not part of the declared comparison pool")]
    RankedItemOutsidePool(String),

    #[error("Fisher information is singular; null direction {null_direction:?}")]
    SingularInformation { null_direction: Vec<f64> },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
