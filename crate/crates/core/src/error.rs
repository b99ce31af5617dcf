use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// The interface cuts the mesh in a way the method cannot represent.
    /// Refining the mesh usually resolves it.
    #[error("interface hypothesis violated on edge {edge}: {reason}; refine the mesh")]
    HypothesisViolation { edge: usize, reason: String },

    #[error("level set does not change sign between ({px}, {py}) and ({qx}, {qy})")]
    NoBracket { px: f64, py: f64, qx: f64, qy: f64 },

    #[error("degenerate cut: {0}")]
    DegenerateCut(String),

    #[error("unsupported quadrature degree {0}")]
    UnsupportedDegree(u32),

    #[error("singular IFE system on element {element} (condition estimate {condition:.3e})")]
    SingularSystem { element: usize, condition: f64 },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("problem has no exact solution")]
    MissingExactSolution,

    #[error("mismatched refinement ladder: {0}")]
    MismatchedLadder(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("level N={n}: {source}")]
    Level {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
