//! Quantum-walk search on periodic d-dimensional lattices.
//!
//! The crate pairs an exact matrix-free simulator of the Grover-coin search
//! walk with the two-level avoided-crossing theory of the search: the
//! localised approximate eigenvector, its normalisation constant `b`, the
//! gap `4b/sqrt(N)` and the search time `pi sqrt(N) / (4b)`.

pub mod cli;
pub mod dense;
pub mod effective;
pub mod error;
pub mod fourier;
pub mod integrals;
pub mod lattice;
pub mod localized;
pub mod quadrature;
pub mod scan;
pub mod secular;
pub mod sum;
pub mod walk;

pub use error::{Error, Result};
pub use lattice::LatticeConfig;
pub use walk::{find_peak, Operator, Peak, StateVector, Trajectory, TrajectoryPoint, Walk};
