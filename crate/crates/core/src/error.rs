use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("entry ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("malformed sparse structure: {0}")]
    MalformedSparse(&'static str),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("cell index {index} out of range (mesh has {n_cells} cells)")]
    InvalidCell { index: usize, n_cells: usize },
    #[error("no boundary condition for patch `{0}`")]
    MissingBoundaryCondition(String),
    #[error("unknown patch `{0}`")]
    UnknownPatch(String),
    #[error("no value available for cell {0} (outside the local closure)")]
    MissingValue(usize),
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("zero momentum diagonal at cell {0}")]
    ZeroDiagonal(usize),
    #[error("non-positive cell volume {volume} at cell {cell}")]
    NonPositiveVolume { cell: usize, volume: f64 },
    #[error("linear solver breakdown after {iterations} iterations")]
    SolverBreakdown { iterations: usize },
    #[error("linear solver stalled: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("requested rank {requested} exceeds available {available}")]
    RankTooLarge { requested: usize, available: usize },
    #[error("rank deficient least-squares system: estimated rank {rank} of {required}")]
    RankDeficient { rank: usize, required: usize },
    #[error("singular DEIM interpolation system at selection step {0}")]
    SingularInterpolation(usize),
    #[error("outer iteration diverged at step {step}: continuity residual {residual:e}")]
    Diverged { step: usize, residual: f64 },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
