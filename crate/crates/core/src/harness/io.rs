//! File output: nodal fields as CSV, legacy ASCII VTK for visualization,
//! plain-text mesh dumps, and run/convergence tables.

use crate::mesh::Mesh;
use crate::stepper::RunSummary;
use std::io::Write;
use std::path::Path;

/// Nodal fields as `x,y,u,c` rows in full precision.
pub fn write_fields_csv<W: Write>(
    mesh: &Mesh,
    u: &[f64],
    c: &[f64],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "x,y,u,c")?;
    for (i, &[x, y]) in mesh.nodes().iter().enumerate() {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", x, y, u[i], c[i])?;
    }
    Ok(())
}

/// Legacy ASCII VTK unstructured grid with both fields as point data.
pub fn write_vtk<W: Write>(
    mesh: &Mesh,
    u: &[f64],
    c: &[f64],
    title: &str,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_nodes())?;
    for &[x, y] in mesh.nodes() {
        writeln!(out, "{x:.16e} {y:.16e} 0.0")?;
    }
    writeln!(out, "CELLS {} {}", mesh.n_triangles(), 4 * mesh.n_triangles())?;
    for tri in mesh.triangles() {
        writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2])?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_triangles())?;
    for _ in 0..mesh.n_triangles() {
        writeln!(out, "5")?;
    }
    writeln!(out, "POINT_DATA {}", mesh.n_nodes())?;
    for (name, data) in [("u", u), ("c", c)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in data {
            writeln!(out, "{v:.16e}")?;
        }
    }
    Ok(())
}

/// `nodes.txt` with `x y` per line and `triangles.txt` with zero-based
/// `i j k` per line, under `dir`.
pub fn write_mesh_dump(mesh: &Mesh, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut nodes = std::fs::File::create(dir.join("nodes.txt"))?;
    for &[x, y] in mesh.nodes() {
        writeln!(nodes, "{x:.16e} {y:.16e}")?;
    }
    let mut tris = std::fs::File::create(dir.join("triangles.txt"))?;
    for tri in mesh.triangles() {
        writeln!(tris, "{} {} {}", tri[0], tri[1], tri[2])?;
    }
    Ok(())
}

/// Per-step history of a run: time, cell mass, field minima.
pub fn write_history_csv<W: Write>(
    summary: &RunSummary,
    k: f64,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "step,time,mass,min_u,min_c")?;
    for step in 0..summary.mass_history.len() {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            step,
            step as f64 * k,
            summary.mass_history[step],
            summary.min_u_history[step],
            summary.min_c_history[step]
        )?;
    }
    Ok(())
}

/// One resolution of a convergence sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub m: usize,
    pub h0: f64,
    pub k: f64,
    pub steps: usize,
    pub l2_u: f64,
    pub h1_u: f64,
    pub l2_c: f64,
    pub h1_c: f64,
}

/// Sweep table with observed orders between consecutive rows; the first
/// row has no order entry.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "m,h0,k,steps,l2_u,l2_order,h1_u,h1_order")?;
    for (idx, row) in rows.iter().enumerate() {
        let orders = if idx == 0 {
            (String::new(), String::new())
        } else {
            let prev = &rows[idx - 1];
            (
                format!(
                    "{:.4}",
                    super::norms::observed_order(prev.h0, prev.l2_u, row.h0, row.l2_u)
                ),
                format!(
                    "{:.4}",
                    super::norms::observed_order(prev.h0, prev.h1_u, row.h0, row.h1_u)
                ),
            )
        };
        writeln!(
            out,
            "{},{:.16e},{:.16e},{},{:.16e},{},{:.16e},{}",
            row.m, row.h0, row.k, row.steps, row.l2_u, orders.0, row.h1_u, orders.1
        )?;
    }
    Ok(())
}
