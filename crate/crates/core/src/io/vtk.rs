//! Legacy ASCII VTK unstructured-grid output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::solver::State;

pub const VTK_TRIANGLE: u8 = 5;
pub const VTK_TETRA: u8 = 10;

pub fn vtk_string(mesh: &Mesh, state: &State) -> Result<String> {
    let d = mesh.dim();
    let nv = mesh.num_vertices();
    let nc = mesh.num_cells();
    if state.u.len() != d * nv || state.z.len() != d * nv || state.p.len() != nc {
        return Err(Error::invalid("state does not match the mesh"));
    }
    let mut s = String::with_capacity(64 * (nv + nc));
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "porofem t={:.16e}", state.t);
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in 0..nv {
        let x = mesh.point(v);
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", x[0], x[1], x[2]);
    }
    let _ = writeln!(s, "CELLS {nc} {}", nc * (d + 2));
    for cell in mesh.cells() {
        let idx: Vec<String> = cell.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", d + 1, idx.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    let ty = if d == 2 { VTK_TRIANGLE } else { VTK_TETRA };
    for _ in 0..nc {
        let _ = writeln!(s, "{ty}");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    for (name, data) in [("u", &state.u), ("z", &state.z)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in 0..nv {
            let c = &data[v * d..(v + 1) * d];
            let z = if d == 3 { c[2] } else { 0.0 };
            let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", c[0], c[1], z);
        }
    }
    let _ = writeln!(s, "CELL_DATA {nc}");
    let _ = writeln!(s, "SCALARS p double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for p in &state.p {
        let _ = writeln!(s, "{p:.16e}");
    }
    Ok(s)
}

pub fn write_vtk(mesh: &Mesh, state: &State, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = vtk_string(mesh, state)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
