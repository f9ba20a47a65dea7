//! Spectroscopy of a transmon strongly driven near its qubit transition while a
//! weak tone probes the readout resonator.
//!
//! Two complementary routes are provided. The eigenmode route diagonalises the
//! time-independent coupler-frame Hamiltonian and reads off polariton
//! transition frequencies and strengths. The master-equation route solves the
//! two-tone Lindblad problem for its periodic steady state with a matrix
//! continued fraction and reports the resonator photon number.

pub mod analytic;
pub mod eigenmode;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod spectroscopy;
pub mod steadystate;
pub mod validation;

pub use hilbert::HilbertSpec;
pub use model::{DeviceParams, DriveTone, ProbeTone, Tone};
