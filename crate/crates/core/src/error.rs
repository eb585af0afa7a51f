use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("header: {0}")]
    Header(String),
    #[error("signal line count mismatch: header declares {declared}, found {found}")]
    SignalLineCount { declared: usize, found: usize },
    #[error("unsupported storage format {0}")]
    UnsupportedFormat(u16),
    #[error("signal data too short: need {needed} bytes, have {have}")]
    SignalTooShort { needed: usize, have: usize },
    #[error("annotation stream truncated at byte {0}")]
    TruncatedAnnotations(usize),
    #[error("unknown annotation code {0}")]
    UnknownAnnotationCode(u16),
    #[error("annotation indices not strictly increasing at row {0}")]
    UnsortedAnnotations(usize),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("split: {0}")]
    Split(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("input too short: need more than {needed} samples, have {have}")]
    InputTooShort { needed: usize, have: usize },
    #[error("no stable baseline: inlier fraction {fraction:.3} below {minimum:.3}")]
    NoStableBaseline { fraction: f64, minimum: f64 },
    #[error("threshold set belongs to patient {thresholds}, fiducials to {fiducials}")]
    PatientMismatch {
        thresholds: String,
        fiducials: String,
    },
    #[error("optimization diverged: {0}")]
    Divergence(String),
    #[error("missing ground truth: {0}")]
    MissingGroundTruth(String),
    #[error("class absent: {0}")]
    ClassAbsent(String),
    #[error("pool exhausted: {0}")]
    PoolExhausted(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Header(_) => "header",
            Error::SignalLineCount { .. } => "signal_line_count",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::SignalTooShort { .. } => "signal_too_short",
            Error::TruncatedAnnotations(_) => "truncated_annotations",
            Error::UnknownAnnotationCode(_) => "unknown_annotation_code",
            Error::UnsortedAnnotations(_) => "unsorted_annotations",
            Error::Parse { .. } => "parse",
            Error::Split(_) => "split",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InputTooShort { .. } => "input_too_short",
            Error::NoStableBaseline { .. } => "no_stable_baseline",
            Error::PatientMismatch { .. } => "patient_mismatch",
            Error::Divergence(_) => "divergence",
            Error::MissingGroundTruth(_) => "missing_ground_truth",
            Error::ClassAbsent(_) => "class_absent",
            Error::PoolExhausted(_) => "pool_exhausted",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
