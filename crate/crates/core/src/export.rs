//! Legacy ASCII VTK output of the discontinuous field `u0`.
//!
//! Every element is written as its own triangles (the chord split
//! sub-triangles on cut elements) with private copies of its vertices, so
//! jumps between elements and across the chord are kept.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::error_analysis::WgSolution;
use crate::geometry::{ElementClass, Side};
use crate::ife::ElementBasis;
use crate::mesh::{Point2, UniformMesh};

/// Output triangles of every element with the piece used on each.
fn cells(mesh: &UniformMesh, classes: &[ElementClass]) -> Vec<(usize, [Point2; 3], Side)> {
    let mut out = Vec::with_capacity(mesh.n_elements() + 2 * classes.iter().filter(|c| c.is_cut()).count());
    for (t, class) in classes.iter().enumerate() {
        match class {
            ElementClass::Regular(s) => out.push((t, mesh.vertices(t), *s)),
            ElementClass::Cut(cut) => {
                for side in [Side::Minus, Side::Plus] {
                    for tri in cut.sub_polygon(side).fan() {
                        out.push((t, tri, side));
                    }
                }
            }
        }
    }
    out
}

/// Renders the field as a legacy VTK unstructured grid.
pub fn vtk_string(
    mesh: &UniformMesh,
    classes: &[ElementClass],
    bases: &[ElementBasis],
    solution: &WgSolution,
) -> String {
    let cells = cells(mesh, classes);
    let np = 3 * cells.len();
    let mut s = String::with_capacity(np * 60);
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("u0 weak Galerkin interior field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {np} double");
    for (_, tri, _) in &cells {
        for p in tri {
            let _ = writeln!(s, "{:e} {:e} 0", p.x, p.y);
        }
    }
    let _ = writeln!(s, "CELLS {} {}", cells.len(), 4 * cells.len());
    for i in 0..cells.len() {
        let _ = writeln!(s, "3 {} {} {}", 3 * i, 3 * i + 1, 3 * i + 2);
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for _ in &cells {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {np}\nSCALARS u0 double 1\nLOOKUP_TABLE default");
    for (t, tri, side) in &cells {
        for p in tri {
            let v = bases[*t].combine(&solution.interior[*t], *p, *side);
            let _ = writeln!(s, "{v:e}");
        }
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS subdomain int 1\nLOOKUP_TABLE default", cells.len());
    for (_, _, side) in &cells {
        let _ = writeln!(s, "{}", side.sign() as i32);
    }
    s
}

pub fn write_vtk(
    path: &Path,
    mesh: &UniformMesh,
    classes: &[ElementClass],
    bases: &[ElementBasis],
    solution: &WgSolution,
) -> Result<()> {
    fs::write(path, vtk_string(mesh, classes, bases, solution))?;
    Ok(())
}
