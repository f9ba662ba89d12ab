use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{elem} is not a grid point; nearest grid point is {nearest}")]
    OffGrid { elem: String, nearest: String },

    #[error("kernel grids differ: {left} vs {right} points per tile")]
    GridMismatch { left: usize, right: usize },

    #[error("operands live on different tilings")]
    TilingMismatch,

    #[error("operands live on different windows")]
    WindowMismatch,

    #[error("label {0} puts a row outside the window")]
    OutsideWindow(String),

    #[error("dense size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("power iteration did not converge after {iterations} steps (residual {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("cd norm {0} is not below 1; use a finite-section inverse instead")]
    NotContractive(f64),

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("cd norm overflow at power {power}")]
    Overflow { power: usize },

    #[error("Følner search exhausted at radius {radius}; best ratio {best_ratio}")]
    FolnerExhausted { radius: usize, best_ratio: f64 },

    #[error("window leaves no interior indices")]
    EmptyInterior,

    #[error("cannot parse {0:?}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
