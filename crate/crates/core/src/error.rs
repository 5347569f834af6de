use crate::graph::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("vertex {0} is not in the graph")]
    UnknownVertex(VertexId),

    #[error("vertex {0} is not a member of the given community")]
    NotAMember(VertexId),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("oracle refuses graphs with {n} vertices (cap is {cap})")]
    OracleCapExceeded { n: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("epoch {epoch}: {source}")]
    Epoch { epoch: u64, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
