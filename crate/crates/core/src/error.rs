use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge {from}-{to} has non-positive weight {weight}")]
    NonPositiveWeight { from: String, to: String, weight: f64 },
    #[error("vertex {vertex} has non-positive measure {measure}")]
    NonPositiveMeasure { vertex: String, measure: f64 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(String),
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("vertex {0} has no neighbours")]
    IsolatedVertex(String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("edge {0}-{1} listed in both directions with different weights")]
    AsymmetricWeight(String, String),
    #[error("vertex {0} has no measure")]
    MissingMeasure(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("empty vertex scope")]
    EmptyScope,
    #[error("empty vertex subset for domain")]
    EmptyOmega,
    #[error("domain has an empty interior")]
    EmptyInterior,
    #[error("seed vertex {0} is not in the domain")]
    SeedOutsideDomain(String),
    #[error("vertex {0} does not have its full neighbourhood materialized")]
    UnmaterializedNeighbor(String),
    #[error("invalid exponent q = {0} (need q >= 1)")]
    InvalidQ(f64),
    #[error("field is non-zero at vertex {0} outside the domain interior")]
    NotDirichletAdmissible(String),
    #[error("field or domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("time {t} outside [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("explicit integration step size underflow (h = {0:e})")]
    StiffnessFailure(f64),
    #[error("need at least two distinct sample times")]
    InsufficientSamples,
    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),
    #[error("trajectories live on different graphs")]
    GraphMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
