use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("logistic labels must be 0 or 1, found {value} at row {row}")]
    InvalidLabel { row: usize, value: f64 },

    #[error("unseen level `{level}` in categorical column `{column}`")]
    UnseenLevel { column: String, level: String },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("column `{column}`: expected {expected} values")]
    ColumnKind {
        column: String,
        expected: &'static str,
    },

    #[error("csv parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gamma1 > 0 requires unlabeled data")]
    NoUnlabeledData,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("all {0} search trials failed")]
    AllTrialsFailed(usize),

    #[error("unsupported document version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numeric breakdowns are internal failures; everything else is a problem with the
    /// user's data or arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
