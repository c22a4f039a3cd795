use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol is not doubly characteristic at 0 (|p(0)| = {value:.3e}, |grad p(0)| = {gradient:.3e})")]
    NotDoublyCharacteristic { value: f64, gradient: f64 },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("Nyquist violation: grid resolves |xi| <= {xi_max:.4}, experiment requires {required:.4}")]
    NyquistViolation { xi_max: f64, required: f64 },

    #[error("symbol is not finite at phase-space point {point:?}")]
    NonFiniteSymbol { point: Vec<f64> },

    #[error("unresolvable microlocal scale {scale:.3e} (grid resolution {resolution:.3e})")]
    UnresolvableScale { scale: f64, resolution: f64 },

    #[error("interpolation out of range: coordinate {coordinate:.6} outside [-{half_width}, {half_width}]")]
    InterpolationOutOfRange { coordinate: f64, half_width: f64 },

    #[error("eigensolver did not converge; achieved residuals {residuals:?}")]
    NotConverged { residuals: Vec<f64> },

    #[error("shift {shift} is singular for the discrete operator")]
    SingularShift { shift: String },

    #[error("eigenvalue cluster exceeds the cap of {cap} pairs")]
    ClusterTooLarge { cap: usize },

    #[error("no eigenvalue in the disc |lambda| < {radius:.4e} at h = {h}")]
    EmptyCluster { h: f64, radius: f64 },

    #[error("L^p exponent must satisfy 2 <= p <= inf, got {0}")]
    InvalidExponent(f64),

    #[error("fit needs at least {need} usable points, got {got}")]
    TooFewPoints { got: usize, need: usize },

    #[error("resource ceiling exceeded: {0}")]
    ResourceCeiling(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
