use thiserror::Error;

/// Errors raised while reading a case file.
#[derive(Debug, Error)]
pub enum CaseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}` at line {line}: {message}")]
    Field {
        line: usize,
        field: String,
        message: String,
    },
    #[error("missing slack bus")]
    MissingSlack,
    #[error("multiple slack buses: {0:?}")]
    MultipleSlack(Vec<usize>),
    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),
    #[error("{what} references unknown bus id {id}")]
    UnknownBus { what: String, id: usize },
    #[error("network is disconnected: buses {0:?} are not reachable from the slack")]
    Disconnected(Vec<usize>),
    #[error("case violates invariants: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// Errors from the numerical pipeline.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("branch {0} has zero series impedance")]
    ZeroImpedance(usize),
    #[error("reduced linear power-flow matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("generation shift keys undefined: {0}")]
    Gsk(String),
    #[error("invalid polygon approximation: {0}")]
    PolygonApprox(String),
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("scan found only {0} feasible P samples; at least 3 are needed")]
    TooFewFeasible(usize),
    #[error("need at least 2 P samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}
