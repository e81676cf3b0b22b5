//! Fourier representation of real periodic fields on [0,1]^n.
//!
//! Fields are stored as full lattice coefficient arrays (FFT order) and kept
//! Hermitian-symmetric, so physical samples are real to roundoff. Nonlinear
//! products are evaluated pointwise on the grid and truncated back to the
//! 2/3 band.

mod field;
mod grid;
mod random;
mod state;

pub use field::{ScalarField, Shift, Weight};
pub use grid::{GridSpec, Mode, MAX_DIM};
pub use random::{random_state, unit_mass_shift, RandomState, SigmaMean};
pub use state::State;
