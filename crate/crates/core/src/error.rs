use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimerError {
    /// A parameter combination violates a physical or numerical constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The state vector is not normalized within tolerance.
    #[error("state not normalized: |psi|^2 = {norm_sq}")]
    Unnormalized { norm_sq: f64 },

    /// The reduced Bloch vector has no component in the y-z plane.
    #[error("Bloch angle undefined: y^2 + z^2 = {yz_sq:e}")]
    UndefinedAngle { yz_sq: f64 },

    /// A selected readout had vanishing probability, or the norm collapsed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Failure inside a single trajectory, tagged with its index.
    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: Box<DimerError>,
    },

    /// A fixed point with a zero-real-part eigenvalue was found; the
    /// parameter point sits on a phase boundary.
    #[error("phase boundary: marginal fixed point at ({theta_l:.6}, {theta_r:.6})")]
    BoundaryIndeterminate { theta_l: f64, theta_r: f64 },

    /// The Fokker-Planck step size violates the upwind stability bound.
    #[error("CFL violation: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("I/O error: {0}")]
    Io(String),

    /// Malformed input file; `line` is 1-based, `column` is the 1-based field.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl From<std::io::Error> for DimerError {
    fn from(err: std::io::Error) -> Self {
        DimerError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DimerError>;
