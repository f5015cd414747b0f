use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("structured mesh size n = {0} must be a positive multiple of 4")]
    MeshSize(usize),

    #[error("cell {cell} is degenerate (signed area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("quadrature degree {degree} outside supported range 1..={max}")]
    QuadratureDegree { degree: usize, max: usize },

    #[error("interface coefficient alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),

    #[error("permeability kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),

    #[error("dof map does not match mesh: {0}")]
    DofMapMismatch(String),

    #[error("ill-posed system: {0}")]
    IllPosed(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("exact solution not available for problem `{0}`")]
    NoExactSolution(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed results file: {0}")]
    Parse(String),
}
