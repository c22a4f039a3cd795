//! Numerical laboratory for semiclassical pseudodifferential operators with
//! double characteristics.
//!
//! The crate is organised bottom-up:
//!
//! * [`symbols`]: exact polynomial symbols, callable symbols, the expression
//!   grammar and the standing-assumption checker.
//! * [`moyal`]: exact Weyl composition (star product) of polynomial symbols.
//! * [`quantize`]: grids, Weyl quantization by the midpoint rule, the
//!   Schrödinger fast paths, cutoffs and the phase-space rescaling unitary.
//! * [`eigensolve`]: eigenpairs of non-normal operators near a target.
//! * [`hermite`]: the harmonic-oscillator oracle.
//! * [`analysis`]: L^p norms, exponent fits and the positivity and
//!   localization checks.
//! * [`families`]: the built-in operator families used by the experiments.
//! * [`io`]: binary caches for operators and eigenpairs.

pub mod analysis;
pub mod eigensolve;
pub mod error;
pub mod families;
pub mod hermite;
pub mod io;
pub mod moyal;
pub mod quantize;
pub mod symbols;

pub mod fft;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Forces the dense kernels onto a single thread so repeated runs are bitwise reproducible.
pub fn pin_sequential_backend() {
    faer::set_global_parallelism(faer::Par::Seq);
}
