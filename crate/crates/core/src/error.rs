use thiserror::Error;

use crate::node::NodeId;
use crate::ontology::TreeReport;
use crate::probability::ProbabilityReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report. The CLI prints [`Error::name`]
/// followed by the message, so variant names are part of the interface.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node {0} appears more than once")]
    DuplicateNode(NodeId),

    #[error("node {0} is not part of this ontology")]
    UnknownNode(NodeId),

    #[error("{0}")]
    DomainError(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionError { left: usize, right: usize },

    #[error("matrix of dimension {dimension} is singular (rank {rank})")]
    SingularError { dimension: usize, rank: usize },

    #[error("mesh adjacency is not invertible (rank {rank} of {dimension})")]
    SingularMesh { dimension: usize, rank: usize },

    #[error("decomposition operator is not invertible (rank {rank} of {dimension})")]
    SingularOperator { dimension: usize, rank: usize },

    #[error("node sets differ: {0}")]
    NodeMismatch(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("link {0}-{1} is not present")]
    MissingLink(NodeId, NodeId),

    #[error("links do not form a tree (connected: {}, links: {})", .0.is_connected, .0.edge_count)]
    NotATree(Box<TreeReport>),

    #[error("ordered tree is malformed: {0}")]
    MalformedTree(String),

    #[error("expert corpus is empty")]
    EmptyCorpus,

    #[error("expert label {0} is used more than once")]
    DuplicateExpert(String),

    #[error("invalid probability matrix: {0}")]
    InvalidProbabilityMatrix(Box<ProbabilityReport>),

    #[error("prerequisites are cyclic: {}", format_cycle(.0))]
    CyclicPrerequisites(Vec<NodeId>),

    #[error("order is not a permutation of the matrix nodes: {0}")]
    InvalidOrder(String),

    #[error("step {0} -> {1} has zero probability")]
    InfeasibleStep(NodeId, NodeId),

    #[error("no Hamiltonian order avoids zero-probability steps")]
    NoFeasiblePath,

    #[error("{nodes} nodes exceeds the limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },

    #[error("line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    SchemaError(String),

    #[error("{0}")]
    InvariantError(String),

    #[error("{0}")]
    IoError(String),
}

fn format_cycle(cycle: &[NodeId]) -> String {
    cycle
        .iter()
        .map(NodeId::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::DuplicateNode(_) => "DuplicateNode",
            Error::UnknownNode(_) => "UnknownNode",
            Error::DomainError(_) => "DomainError",
            Error::DimensionError { .. } => "DimensionError",
            Error::SingularError { .. } => "SingularError",
            Error::SingularMesh { .. } => "SingularMesh",
            Error::SingularOperator { .. } => "SingularOperator",
            Error::NodeMismatch(_) => "NodeMismatch",
            Error::InvalidMesh(_) => "InvalidMesh",
            Error::MissingLink(..) => "MissingLink",
            Error::NotATree(_) => "NotATree",
            Error::MalformedTree(_) => "MalformedTree",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::DuplicateExpert(_) => "DuplicateExpert",
            Error::InvalidProbabilityMatrix(_) => "InvalidProbabilityMatrix",
            Error::CyclicPrerequisites(_) => "CyclicPrerequisites",
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::InfeasibleStep(..) => "InfeasibleStep",
            Error::NoFeasiblePath => "NoFeasiblePath",
            Error::TooLarge { .. } => "TooLarge",
            Error::SyntaxError { .. } => "SyntaxError",
            Error::SchemaError(_) => "SchemaError",
            Error::InvariantError(_) => "InvariantError",
            Error::IoError(_) => "IoError",
        }
    }

    /// Errors raised while reading input documents, as opposed to errors
    /// raised by the algebra on well-formed input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::SyntaxError { .. } | Error::SchemaError(_) | Error::InvariantError(_) | Error::IoError(_)
        )
    }
}
