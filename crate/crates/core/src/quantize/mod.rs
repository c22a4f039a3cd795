//! Discretization of `Op_h^w(a)` on periodic phase-space grids.
//!
//! The general path is the midpoint rule for the Weyl integral, assembled
//! densely with one FFT per half-grid midpoint. Schrödinger operators
//! `|ξ|² + V + iW` also have a matrix-free spectral path and a sparse
//! second-order difference path. Wraparound is negligible as long as the
//! states of interest are tiny at the box boundary.

mod grid;
mod operator;
mod rescale;
mod weyl;

pub use grid::{GridPolicy, PhaseSpaceGrid};
pub use operator::{weighted_norm, Method, OperatorMatrix, SparseMatrix, Storage};
pub use rescale::{conjugation_check, rescale_state, Direction, ScalingParams};
pub use weyl::{
    cutoff_quantize, quantize_schrodinger, quantize_schrodinger_fd2, weyl_quantize, weyl_quantize_oversampled, weyl_quantize_resolving, CUTOFF_OVERSAMPLING,
    DENSE_LIMIT,
};
