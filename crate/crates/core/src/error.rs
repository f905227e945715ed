use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("unsupported expression: {0}")]
    Unsupported(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    /// All jet coefficients vanish up to the search cap, or the vanishing
    /// order exceeds the dimension: the scene is not boundary generic here.
    #[error("degenerate tangency at {point:?}: jet {jet:?}")]
    DegenerateTangency { point: Vec<f64>, jet: Vec<f64> },

    #[error("integration stalled at t = {time}: jet {jet:?}")]
    IntegrationStalled { time: f64, jet: Vec<f64> },

    #[error("trajectory not traversing: time cap {cap} exceeded")]
    NotTraversing { cap: f64 },

    #[error("genericity violation: {0}")]
    GenericityViolation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("topology unresolved: {0}")]
    TopologyUnresolved(String),

    #[error("malformed simplex: {0}")]
    MalformedSimplex(String),

    #[error("product of {size} group elements exceeds the cap {cap}")]
    SizeLimit { size: u128, cap: u128 },

    #[error("malformed complex: {0}")]
    MalformedComplex(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
