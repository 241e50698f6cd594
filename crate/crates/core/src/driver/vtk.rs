use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::Field;

/// Legacy ASCII VTK file of the velocity and pressure at the mesh vertices.
/// Higher-order dofs (edge midpoints, bubbles) are not exported.
pub fn vtk_string(u1: &Field, u2: &Field, p: &Field, time: f64) -> Result<String> {
    let mesh = u1.space().mesh();
    if !u2.space().same_mesh(u1.space()) || !p.space().same_mesh(u1.space()) {
        return Err(Error::MeshMismatch);
    }
    let nv = mesh.n_vertices();
    let mut out = String::with_capacity(64 * nv);
    out.push_str("# vtk DataFile Version 2.0\n");
    let _ = writeln!(out, "projfem t={time}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {nv} double");
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} 0", v[0], v[1]);
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {nv}");
    out.push_str("VECTORS velocity double\n");
    for i in 0..nv {
        let _ = writeln!(out, "{} {} 0", u1.values[i], u2.values[i]);
    }
    out.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for i in 0..nv {
        let _ = writeln!(out, "{}", p.values[i]);
    }
    Ok(out)
}

pub fn write_vtk(path: &Path, u1: &Field, u2: &Field, p: &Field, time: f64) -> Result<()> {
    std::fs::write(path, vtk_string(u1, u2, p, time)?)?;
    Ok(())
}
