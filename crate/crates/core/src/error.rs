use std::path::PathBuf;

use crate::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: invalid label {label} (labels must be >= 1)")]
    InvalidLabel { line: usize, label: i64 },
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("classes without training documents: {0:?}")]
    MissingClasses(Vec<ClassId>),
    #[error("unknown class {0}")]
    UnknownClass(ClassId),
    #[error("class {0} has an empty mega-document")]
    DegenerateClass(ClassId),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sampling retained no documents; increase avg_per_class")]
    EmptySample,
    #[error("pair {index} has a non-finite feature value")]
    NonFinite { index: usize },
    #[error("training diverged (objective {objective:e}); use a smaller learning rate")]
    Diverged { objective: f64 },
    #[error("length mismatch: {left} truth labels vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },
    #[error("model bundle is missing {0}")]
    MissingBundleFile(PathBuf),
    #[error("malformed bundle file {path}: {msg}")]
    Bundle { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
