//! Pseudo-spectral solver for the incompressible viscous resistive Hall-MHD
//! equations on a large periodic box, with weighted space-time norm
//! diagnostics, decay-exponent fitting and executable lemma oracles.

pub mod checkpoint;
pub mod decay;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod harness;
pub mod heat;
pub mod integrator;
pub mod lemmas;
pub mod spectral;
#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};
pub use field::{Field, Repr, ScalarField};
pub use grid::{make_grid, Grid};
