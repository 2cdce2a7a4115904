//! File formats.

pub mod mesh_file;
pub mod vtk;

pub use mesh_file::{parse_mesh, read_mesh, write_mesh};
pub use vtk::write_vtk;
