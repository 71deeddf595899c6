use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} has {count} vertices (only triangles and quads are supported)")]
    FaceArity { face: usize, count: usize },

    #[error("face {face} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: i64,
        vertex_count: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh not closed: {boundary_edges} boundary edges")]
    NotClosed { boundary_edges: usize },

    #[error("degenerate element {element}")]
    DegenerateElement { element: usize },

    #[error("unsupported quadrature degree {0} (supported: 1..=10)")]
    QuadratureDegree(usize),

    #[error("dof index {index} out of range for system of size {size}")]
    DofOutOfRange { index: usize, size: usize },

    #[error("singular matrix")]
    SingularMatrix,

    #[error("linear solve did not meet the residual contract: relative residual {residual:.3e}")]
    SolveAccuracy { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-SPD reference metric on element {element}")]
    NonSpdMetric { element: usize },

    #[error("invalid reference angles on face {face}: {angles:?}")]
    InvalidAngles { face: usize, angles: [f64; 3] },

    #[error("flow step {step} failed after retry: {reason}")]
    StepFailure { step: usize, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
