use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants split into input problems (malformed files, invalid
/// parameters) and evaluation preconditions that the data itself fails,
/// which the CLI maps onto distinct exit codes.
#[derive(Debug, Error)]
pub enum MeadError {
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("document has no sentences: {doc_id}")]
    EmptyDocument { doc_id: String },

    #[error("duplicate document id: {0}")]
    DuplicateDocument(String),

    #[error("cluster has no documents")]
    EmptyCluster,

    #[error("background corpus is empty")]
    EmptyBackground,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cluster id mismatch: expected `{expected}`, found `{found}`")]
    ClusterMismatch { expected: String, found: String },

    #[error("sentence has no tokens")]
    EmptySentence,

    #[error("k = {k} out of range for n = {n}")]
    KOutOfRange { k: usize, n: usize },

    #[error(
        "enumeration of C({n}, {k}) extracts exceeds the cap of {cap}; use the closed-form random baseline"
    )]
    EnumerationCap { n: usize, k: usize, cap: u64 },

    #[error("need at least 2 judges, found {0}")]
    TooFewJudges(usize),

    #[error("judge `{0}` assigns zero utility to every sentence")]
    ZeroUtilityJudge(String),

    #[error("annotation mismatch: {0}")]
    AnnotationMismatch(String),

    #[error(
        "judges agree no better than chance (J = {mean_j:.3} <= R = {random:.3}); normalized performance is undefined"
    )]
    ChanceAgreement { mean_j: f64, random: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl MeadError {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        MeadError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        MeadError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures of the evaluation's own preconditions (as opposed
    /// to malformed input).
    pub fn is_evaluation_precondition(&self) -> bool {
        matches!(
            self,
            MeadError::ChanceAgreement { .. }
                | MeadError::ZeroUtilityJudge(_)
                | MeadError::EnumerationCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, MeadError>;
