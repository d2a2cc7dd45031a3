//! CSV and legacy-VTK field export.

use std::fmt::Write as _;

use hrom_core::mesh::Mesh;
use hrom_core::rom::MagicPointSet;

/// A named, component-blocked cell field to export.
#[derive(Debug, Clone, Copy)]
pub struct NamedField<'a> {
    pub name: &'a str,
    pub components: usize,
    pub values: &'a [f64],
}

fn component_names(f: &NamedField<'_>) -> Vec<String> {
    match f.components {
        1 => vec![f.name.to_string()],
        c => (0..c).map(|k| format!("{}_{}", f.name, ["x", "y", "z"].get(k).copied().unwrap_or("c"))).collect(),
    }
}

/// `cell_id,centroid_x,centroid_y,<values...>` with one row per cell.
pub fn fields_csv(mesh: &Mesh, fields: &[NamedField<'_>]) -> String {
    let n = mesh.n_cells();
    let mut s = String::from("cell_id,centroid_x,centroid_y");
    for f in fields {
        for name in component_names(f) {
            s.push(',');
            s.push_str(&name);
        }
    }
    s.push('\n');
    for (i, cell) in mesh.cells().iter().enumerate() {
        let _ = write!(s, "{i},{:e},{:e}", cell.centroid[0], cell.centroid[1]);
        for f in fields {
            for c in 0..f.components {
                let _ = write!(s, ",{:e}", f.values[c * n + i]);
            }
        }
        s.push('\n');
    }
    s
}

/// Axis-aligned bounding box of a cell from its face centres.
fn cell_box(mesh: &Mesh, cell: usize) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for &f in mesh.cell_faces(cell) {
        let c = mesh.faces()[f].center;
        b[0] = b[0].min(c[0]);
        b[1] = b[1].max(c[0]);
        b[2] = b[2].min(c[1]);
        b[3] = b[3].max(c[1]);
    }
    b
}

/// Legacy ASCII VTK unstructured grid of quads with the fields as
/// `CELL_DATA`. Vector fields are written as 3-vectors with zero z.
pub fn fields_vtk(mesh: &Mesh, title: &str, fields: &[NamedField<'_>]) -> String {
    let n = mesh.n_cells();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", 4 * n);
    for i in 0..n {
        let [x0, x1, y0, y1] = cell_box(mesh, i);
        let _ = writeln!(s, "{x0:e} {y0:e} 0\n{x1:e} {y0:e} 0\n{x1:e} {y1:e} 0\n{x0:e} {y1:e} 0");
    }
    let _ = writeln!(s, "CELLS {n} {}", 5 * n);
    for i in 0..n {
        let p = 4 * i;
        let _ = writeln!(s, "4 {} {} {} {}", p, p + 1, p + 2, p + 3);
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        s.push_str("9\n");
    }
    if fields.is_empty() {
        return s;
    }
    let _ = writeln!(s, "CELL_DATA {n}");
    for f in fields {
        if f.components == 1 {
            let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name);
            for v in &f.values[..n] {
                let _ = writeln!(s, "{v:e}");
            }
        } else {
            let _ = writeln!(s, "VECTORS {} double", f.name);
            for i in 0..n {
                let x = f.values[i];
                let y = if f.components > 1 { f.values[n + i] } else { 0.0 };
                let _ = writeln!(s, "{x:e} {y:e} 0");
            }
        }
    }
    s
}

/// `cell_id,dof,role` rows: one per sampled DOF (role `deim` or
/// `obligatory`) and one per closure cell outside the sampled cells (role
/// `closure`, dof empty).
pub fn points_csv(points: &MagicPointSet) -> String {
    let mut s = String::from("cell_id,dof,role\n");
    for &d in &points.union {
        let role = if points.deim.contains(&d) { "deim" } else { "obligatory" };
        let _ = writeln!(s, "{},{d},{role}", points.cell_of(d));
    }
    for c in points.halo() {
        let _ = writeln!(s, "{c},,closure");
    }
    s
}
