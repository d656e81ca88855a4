use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::stats::StatsError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Lookup,
    Enrichment,
    Inference,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Lookup => "lookup",
            Stage::Enrichment => "enrichment",
            Stage::Inference => "inference",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invalid curie {0:?}: expected PREFIX:LOCAL")]
    InvalidCurie(String),

    #[error("{file}:{line}: edge {edge} references unknown node {missing}")]
    DanglingEdge {
        file: String,
        line: usize,
        edge: String,
        missing: String,
    },

    #[error("{at}: unknown {kind} {name}")]
    UnknownTerm {
        kind: String,
        name: String,
        at: String,
    },

    #[error("duplicate node id {0}")]
    DuplicateNode(String),

    #[error("{kind} ontology: {message}")]
    Ontology { kind: String, message: String },

    #[error("cycle in {kind} ontology: {}", cycle.join(" -> "))]
    OntologyCycle { kind: String, cycle: Vec<String> },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid query: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Stats(#[from] StatsError),

    #[error("data inconsistency at {target}: {message}")]
    DataInconsistency { target: String, message: String },

    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: Stage) -> Self {
        match self {
            staged @ Error::Stage { .. } => staged,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The error with any stage wrapper removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self.root(), Error::NotFound(_))
    }

    pub fn is_validation(&self) -> bool {
        matches!(self.root(), Error::Validation(_))
    }

    /// Individual violation messages, for error-list responses.
    pub fn messages(&self) -> Vec<String> {
        match self.root() {
            Error::Validation(list) => list.clone(),
            other => vec![other.to_string()],
        }
    }
}
