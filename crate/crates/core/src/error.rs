use thiserror::Error;

pub type Result<T, E = MonaError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonaError {
    #[error("circuit has no elements")]
    EmptyCircuit,
    #[error("element `{element}` references unknown node {node} (circuit has {n_nodes} non-ground nodes)")]
    UnknownNode {
        element: String,
        node: usize,
        n_nodes: usize,
    },
    #[error("element `{element}`: parameter {param} must be positive, got {value}")]
    NonPositiveParameter {
        element: String,
        param: &'static str,
        value: f64,
    },
    #[error("duplicate element name `{0}`")]
    DuplicateName(String),
    #[error("element `{0}` connects a node to itself")]
    SelfLoop(String),
    #[error("element `{element}` has {got} terminals, expected {expected}")]
    TerminalCount {
        element: String,
        got: usize,
        expected: String,
    },
    #[error("nodes {0:?} have no path to ground")]
    Disconnected(Vec<String>),
    #[error("topology check failed\n{0}")]
    Topology(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate triangle {triangle} (signed area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("invalid material on triangle {triangle}: {reason}")]
    InvalidMaterial { triangle: usize, reason: String },
    #[error("winding {winding}: {reason}")]
    InvalidWinding { winding: usize, reason: String },
    #[error("gauge failure: {0}")]
    Gauge(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("device terminal map: {0}")]
    TerminalMap(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid time grid: {0}")]
    TimeGrid(String),
    #[error("inconsistent initial state: constraint residual {residual:e} exceeds {tolerance:e}")]
    InconsistentInitialState { residual: f64, tolerance: f64 },
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e}) at t = {t}, tau = {tau}")]
    NewtonDivergence {
        iterations: usize,
        residual: f64,
        t: f64,
        tau: f64,
    },
    #[error("singular iteration matrix at t = {t}, tau = {tau}")]
    SingularMatrix { t: f64, tau: f64 },
    #[error("unknown probe target: {0}")]
    Probe(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
