use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("insufficient data: {needed} samples requested, pool holds {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("degenerate norm: {0:e} is below the normalization floor")]
    DegenerateNorm(f64),

    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),

    #[error("grid too coarse: mode {mode} has quadrature norm error {error:e}")]
    GridTooCoarse { mode: usize, error: f64 },

    #[error("step too large: relative power drift {drift:e} at step {step}")]
    StepTooLarge { step: usize, drift: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("stale cache for stage {stage}: upstream hash changed")]
    CacheStale { stage: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("version mismatch: file has version {found}, this build reads {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable name of the error kind. Stage context is peeled off.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedInput(_) => "MalformedInput",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::DegenerateNorm(_) => "DegenerateNorm",
            Error::NonFiniteLoss(_) => "NonFiniteLoss",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::SingularSystem(_) => "SingularSystem",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::CacheStale { .. } => "CacheStale",
            Error::Config(_) => "ConfigError",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::CorruptFile(_) => "CorruptFile",
            Error::Stage { source, .. } => source.kind(),
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn stage(self, context: &str) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn stage(self, context: &str) -> Result<T> {
        self.map_err(|e| e.context(context))
    }
}
