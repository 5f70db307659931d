use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("code distance must be odd and at least 3, got {0}")]
    InvalidDistance(usize),

    #[error("round count must be at least 1, got {0}")]
    InvalidRounds(usize),

    #[error("physical error probability must lie in [0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("metric weights must be strictly positive, got ({0}, {1}, {2})")]
    InvalidWeights(f64, f64, f64),

    #[error("coordinate x1-x2 = {column} lies outside the open interval (0, {distance})")]
    CoordinateOutOfRange { column: i32, distance: usize },

    #[error("noise model mismatch: graph is {graph}, noise is {noise}")]
    ModelMismatch { graph: String, noise: String },

    #[error("defect vertex {vertex} out of range for a graph with {vertices} vertices")]
    DefectOutOfRange { vertex: usize, vertices: usize },

    #[error("defect list must be strictly increasing (vertex {0} repeated or out of order)")]
    UnsortedDefects(usize),

    #[error("merge stack capacity {capacity} exceeded; resize the decoder")]
    MergeStackOverflow { capacity: usize },

    #[error("fault produced {count} defects; the decoding graph requires at most 2")]
    HyperEdge { count: usize },

    #[error("error mechanisms mapped to the same edge ({u}, {v}) disagree on the logical flip")]
    InconsistentLogical { u: usize, v: String },

    #[error("a single fault flips the logical without triggering any defect")]
    UndetectableLogical,

    #[error("no error pattern of weight <= {0} explains the syndrome")]
    NoExplanation(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("need at least {need} points for a scaling fit, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
