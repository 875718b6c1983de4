use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),
    #[error("invalid resolution {0}: must be even and at least 4")]
    InvalidResolution(usize),
    #[error("invalid radial order {0}: must be at least 4")]
    InvalidOrder(usize),
    #[error("invalid grading exponent {0}: must be finite and >= 1")]
    InvalidGrading(f64),
    #[error("point is at the stereographic pole (denominator {0:e})")]
    PoleSingularity(f64),
    #[error("interior point touches the boundary (distance {0:e})")]
    BoundaryTouch(f64),
    #[error("field and grid do not match: {0}")]
    GridMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cached operator needs {needed} bytes, budget is {budget} bytes")]
    MemoryBudgetExceeded { needed: usize, budget: usize },
    #[error("field is identically zero")]
    ZeroField,
    #[error("exponent p = {p} outside the admissible range [{lo}, {hi})")]
    ExponentOutOfRange { p: f64, lo: f64, hi: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("scalar field is not positive at node {index} (value {value})")]
    NonPositiveField { index: usize, value: f64 },
    #[error("resolution insufficient: two-level estimates {coarse} and {fine} differ by {rel_diff:.3e}")]
    ResolutionInsufficient { coarse: f64, fine: f64, rel_diff: f64 },
    #[error("nonpositive deficit E/2 - omega_n = {0:e} at lambda = {1}")]
    NonpositiveDeficit(f64, f64),
    #[error("truncation insufficient: tail bound {tail:e} exceeds 0.5% of value {value:e}")]
    TruncationInsufficient { tail: f64, value: f64 },
    #[error("ascent diverged: step underflow without an accepted step after {0} iterations")]
    Diverged(usize),
    #[error("degenerate field: constraint norm {0:e} collapsed")]
    DegenerateField(f64),
    #[error("bubble fit left its bounds (amplitude {amplitude}, scale {scale})")]
    FitFailure { amplitude: f64, scale: f64 },
    #[error("malformed grid csv: {0}")]
    GridCsv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
