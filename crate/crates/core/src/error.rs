use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("level below current maximum: requested {requested}, spectrum reaches {current}")]
    LevelBelowMaximum { requested: usize, current: usize },

    #[error("frequency point on grid {found} is not on the profile grid {expected}")]
    OffGrid { expected: usize, found: usize },

    #[error("generator profiles use different grids ({first} and {second})")]
    MixedGrids { first: usize, second: usize },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("generators {first} and {second} are identical")]
    DuplicateGenerator { first: usize, second: usize },

    #[error("offset sets have unequal sizes ({expected} and {found}); complete the spectrum first")]
    UnequalLevel { expected: usize, found: usize },

    #[error("singular fiber at cell {cell:?}: smallest eigenvalue {lambda_min:e}")]
    SingularFiber { cell: Vec<usize>, lambda_min: f64 },

    #[error("{what} would need {count} items, above the limit of {limit}")]
    TooLarge { what: &'static str, count: f64, limit: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid document: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Document {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
