use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] condiff_core::Error),

    #[error("{}", sample_message(*.index, .source))]
    Sample {
        index: u64,
        #[source]
        source: condiff_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("corrupt dataset: {0}")]
    Corrupt(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sample index {index} out of range (dataset has {count} samples)")]
    IndexOutOfRange { index: u64, count: u64 },
}

fn sample_message(index: u64, source: &condiff_core::Error) -> String {
    match source {
        condiff_core::Error::RejectionExhausted { .. } => source.to_string(),
        _ => format!("sample {index}: {source}"),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}
