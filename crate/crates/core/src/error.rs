use thiserror::Error;

/// Errors raised by mesh construction, assembly, transport, the linear solver and the driver.
#[derive(Debug, Error)]
pub enum DycoreError {
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("degenerate column {column}: surface height {surface} m is not below model top {top} m")]
    DegenerateColumn { column: usize, surface: f64, top: f64 },

    #[error("panel index {0} out of range 1..=6")]
    PanelIndex(usize),

    #[error("inverted cell {cell}: det J = {det:e} at {point:?}")]
    InvertedCell { cell: usize, det: f64, point: [f64; 3] },

    #[error("nonpositive {field} = {value:e} in cell {cell}")]
    State { field: &'static str, cell: usize, value: f64 },

    #[error("stencil degeneracy at {0}")]
    StencilDegeneracy(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("CFL limit exceeded in {direction} direction: Courant {courant:.3} needs {substeps} substeps (cap {cap})")]
    Cfl { direction: &'static str, courant: f64, substeps: usize, cap: usize },

    #[error("lumped diagonal is zero at row {0}")]
    Lumping(usize),

    #[error("solver failed after {iterations} iterations: relative residual {residual:e} ({reason}); trace {trace:?}")]
    SolverFailure { iterations: usize, residual: f64, reason: &'static str, trace: Vec<f64> },

    #[error("step {step}: {source}")]
    Step { step: usize, #[source] source: Box<DycoreError> },

    #[error("non-finite value in {field} at step {step}")]
    NonFinite { field: &'static str, step: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DycoreError>;
