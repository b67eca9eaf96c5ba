//! Error norms against a reference field on a finer nested mesh.
//!
//! A coarse nodal field is prolonged to the fine mesh by exact piecewise
//! linear evaluation (the fine nodes sit at rational barycentric positions
//! inside the coarse cells, so the location is integer arithmetic), and the
//! difference is measured in the L2 and H1 norms induced by the fine mass
//! and stiffness matrices.

use super::config::HarnessError;
use crate::assembly::{assemble_mass, assemble_stiffness};
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
}

/// Fine-mesh matrices reused across many error evaluations.
pub struct NormContext {
    mass: SparseMatrix,
    stiffness: SparseMatrix,
}

impl NormContext {
    pub fn new(fine: &Mesh) -> Self {
        let (mass, _) = assemble_mass(fine);
        NormContext {
            mass,
            stiffness: assemble_stiffness(fine),
        }
    }

    /// || approx - reference || in L2 and full H1 (gradient plus L2 part).
    pub fn error_norms(&self, approx: &[f64], reference: &[f64]) -> Result<ErrorNorms, HarnessError> {
        let n = self.mass.n_rows();
        if approx.len() != n || reference.len() != n {
            return Err(HarnessError::Config(format!(
                "error fields have lengths {} and {}, mesh has {n} nodes",
                approx.len(),
                reference.len()
            )));
        }
        let e: Vec<f64> = approx.iter().zip(reference).map(|(a, r)| a - r).collect();
        let me = self.mass.spmv(&e)?;
        let se = self.stiffness.spmv(&e)?;
        let l2sq: f64 = e.iter().zip(&me).map(|(x, y)| x * y).sum();
        let h1sq: f64 = e.iter().zip(&se).map(|(x, y)| x * y).sum::<f64>() + l2sq;
        Ok(ErrorNorms {
            l2: l2sq.max(0.0).sqrt(),
            h1: h1sq.max(0.0).sqrt(),
        })
    }
}

/// Evaluate a coarse nodal field at the nodes of a nested fine mesh. Both
/// meshes must be uniform unit-square meshes with the fine resolution a
/// multiple of the coarse one.
pub fn prolong_nested(
    coarse: &Mesh,
    fine: &Mesh,
    field: &[f64],
) -> Result<Vec<f64>, HarnessError> {
    let mc = coarse
        .uniform_resolution()
        .ok_or_else(|| HarnessError::NotNested("coarse mesh is not a uniform grid".into()))?;
    let mf = fine
        .uniform_resolution()
        .ok_or_else(|| HarnessError::NotNested("fine mesh is not a uniform grid".into()))?;
    if mf % mc != 0 {
        return Err(HarnessError::NotNested(format!(
            "fine resolution {mf} is not a multiple of coarse resolution {mc}"
        )));
    }
    if field.len() != coarse.n_nodes() {
        return Err(HarnessError::Config(format!(
            "field has length {}, coarse mesh has {} nodes",
            field.len(),
            coarse.n_nodes()
        )));
    }
    let ratio = mf / mc;
    let node = |i: usize, j: usize| j * (mc + 1) + i;
    let mut out = vec![0.0; fine.n_nodes()];
    for jf in 0..=mf {
        // coarse cell row and exact local coordinate
        let (cj, eta) = split_index(jf, ratio, mc);
        for ifx in 0..=mf {
            let (ci, xi) = split_index(ifx, ratio, mc);
            let ll = field[node(ci, cj)];
            let lr = field[node(ci + 1, cj)];
            let ul = field[node(ci, cj + 1)];
            let ur = field[node(ci + 1, cj + 1)];
            // the cell splits along the lower-left to upper-right diagonal
            let value = if xi >= eta {
                ll * (1.0 - xi) + lr * (xi - eta) + ur * eta
            } else {
                ll * (1.0 - eta) + ur * xi + ul * (eta - xi)
            };
            out[jf * (mf + 1) + ifx] = value;
        }
    }
    Ok(out)
}

/// Fine index -> (coarse cell index, local coordinate in [0, 1]); the top
/// row folds into the last cell with local coordinate exactly 1.
fn split_index(fine_index: usize, ratio: usize, mc: usize) -> (usize, f64) {
    let cell = (fine_index / ratio).min(mc - 1);
    let rem = fine_index - cell * ratio;
    (cell, rem as f64 / ratio as f64)
}

/// Observed convergence order between two (h, error) pairs.
pub fn observed_order(h_coarse: f64, err_coarse: f64, h_fine: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / (h_coarse / h_fine).ln()
}
