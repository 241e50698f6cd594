use thiserror::Error;

use crate::sparse::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("unsupported quadrature degree {0} (available: 1..=6)")]
    QuadratureDegree(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("finite element spaces are defined over different meshes")]
    MeshMismatch,

    #[error("{what} solve did not converge: {report}")]
    NotConverged {
        what: &'static str,
        report: SolveReport,
    },

    #[error("Neumann compatibility violated: |1ᵀb| = {defect:e}")]
    Incompatible { defect: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
