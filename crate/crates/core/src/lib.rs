//! Transport-regime fluorescence ultrasound modulated optical tomography.
//!
//! The crate provides a discrete-ordinates solver for the stationary
//! radiative transport equation in two dimensions, the internal functionals
//! `H` and `S` obtained from acoustically modulated measurements, gradient
//! based recovery of the fluorophore absorption and Tikhonov recovery of the
//! quantum efficiency, the geometric skeleton reconstruction on the unit
//! disk, and experiment drivers used by the `fumot` command line tool.

pub mod coefficients;

pub mod config;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod phantom;
pub mod reconstruct;
pub mod skeleton;
pub mod transport;

pub use coefficients::{AdmissibleBounds, CoefficientSet};
pub use error::{Error, Result};
pub use functionals::{ForwardModel, ForwardSolution, InternalData, NoiseSpec};
pub use grid::{AngularGrid, DomainKind, Point, QuadratureRule, SpatialGrid};
pub use transport::{PhaseFunction, PhaseSpace, PhaseSpaceField, RteSystem, SolveMethod, SolverOptions};
