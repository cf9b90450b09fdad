use xferlab_core::attrib::AttribError;
use xferlab_core::dataforge::DataError;
use xferlab_core::glmlab::GlmError;
use xferlab_core::nncore::NnError;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("column `{0}` not found")]
    ColumnMissing(String),
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
}

impl RunError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::ConfigInvalid { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        RunError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigInvalid { .. } | RunError::ColumnMissing(_) | RunError::NotNumeric(_) => EXIT_CONFIG,
            RunError::Data(_) | RunError::Io { .. } => EXIT_DATA,
            RunError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<DataError> for RunError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { path, source } => RunError::Io { path, source },
            other => RunError::Data(other.to_string()),
        }
    }
}

impl From<NnError> for RunError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::NonFinite { .. } => RunError::Numeric(e.to_string()),
            NnError::InvalidConfig(m) => RunError::config("model", m),
            NnError::Io { path, source } => RunError::Io { path, source },
            NnError::Data(d) => d.into(),
            other => RunError::Data(other.to_string()),
        }
    }
}

impl From<GlmError> for RunError {
    fn from(e: GlmError) -> Self {
        match e {
            GlmError::InvalidSpec(m) => RunError::config("glm", m),
            other => RunError::Numeric(other.to_string()),
        }
    }
}

impl From<AttribError> for RunError {
    fn from(e: AttribError) -> Self {
        match e {
            AttribError::Network(n) => n.into(),
            AttribError::OddWidth(_) => RunError::Data(e.to_string()),
            other => RunError::config("attribution", other.to_string()),
        }
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Data(format!("csv: {e}"))
    }
}
