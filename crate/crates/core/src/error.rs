use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("record {record}: field `{field}`: {message}")]
    Schema {
        record: usize,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("frame {frame_id} at t={timestamp} is not after the previous frame at t={previous}")]
    OutOfOrderFrame {
        frame_id: String,
        timestamp: f64,
        previous: f64,
    },

    #[error("scene sets differ; missing from results: {missing_in_results:?}, missing from ground truth: {missing_in_ground_truth:?}")]
    SceneMismatch {
        missing_in_results: Vec<String>,
        missing_in_ground_truth: Vec<String>,
    },

    #[error("oracle input too large: {0}")]
    OracleLimit(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(record: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            record,
            field: field.into(),
            message: message.into(),
        }
    }
}
