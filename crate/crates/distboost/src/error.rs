use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("response value {value} lies outside the support of the {family} family")]
    OutsideSupport { family: String, value: f64 },

    #[error("probability {0} must lie strictly inside (0, 1)")]
    InvalidProbability(f64),

    #[error("degenerate response: sample variance is zero but the family requires positive scale")]
    DegenerateData,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("boosting requires at least one round")]
    ZeroRounds,

    #[error("non-finite gradient or hessian at row {row}")]
    NonFiniteGradient { row: usize },

    #[error("non-finite deviance at cycle {cycle}")]
    NonFiniteDeviance { cycle: usize },

    #[error("column mismatch: model needs columns {missing:?} not present in the data")]
    ColumnMismatch { missing: Vec<String> },

    #[error("family {0} does not expose a predictive distribution")]
    NoPredictiveDistribution(String),

    #[error("unsupported family `{0}`")]
    UnknownFamily(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("csv error at row {row}, column \"{column}\": {message}")]
    CsvData {
        row: usize,
        column: String,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("model file format version {found} not supported (this build reads version {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("model file error at {location}: {message}")]
    ModelFile { location: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Invalid(String),
}
