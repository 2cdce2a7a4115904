//! Stabilized lowest-order finite elements for three-field poroelasticity.
//!
//! Unknowns are the solid displacement `u` (continuous P1), the Darcy flux
//! `z` (continuous P1) and the pressure `p` (piecewise constant). The
//! pressure block carries an interior-facet jump penalty scaled by `delta`.

pub mod analysis;
pub mod assembly;
pub mod benchmarks;
pub mod error;
pub mod experiments;
pub mod fespace;
pub mod io;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use assembly::{MaterialParams, OperatorMode, Permeability};
pub use error::{Error, Result};
pub use fespace::{DofLayout, NormalFlux, ScalarField, VectorField};
pub use mesh::Mesh;
pub use problem::ProblemDefinition;
pub use solver::{State, Trajectory};
