//! P1 finite element operators on a triangulation.
//!
//! All matrices live on the mesh adjacency pattern (node pairs sharing a
//! triangle, diagonal included), so they can be combined entrywise. The
//! convection matrix depends on a nodal field c_h and is exact: on each
//! triangle grad(c_h) is constant and int_K phi_j = |K|/3, so
//!
//!   t_ij = lambda (phi_j grad c_h, grad phi_i)
//!        = lambda sum_{K in omega_i ∩ omega_j} (|K|/3) grad c_h|_K . grad phi_i|_K
//!
//! with zero column sums (the three gradients on a triangle sum to zero).
//! The artificial diffusion d_ij = max(-t_ij, 0, -t_ji) symmetrizes and
//! dominates the convection off-diagonals, with diagonal set by zero row
//! sums; it is assembled from T alone.

use crate::mesh::Mesh;
use crate::sparse::{SparseError, SparseMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("nodal vector has length {got}, mesh has {expected} nodes")]
    LengthMismatch { got: usize, expected: usize },
    #[error("function value at node {node} = ({x}, {y}) is not finite")]
    NonFinite { node: usize, x: f64, y: f64 },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Time-independent operators: consistent mass M, lumped mass (diagonal,
/// stored as a vector), stiffness S.
#[derive(Debug, Clone)]
pub struct Operators {
    pub mass: SparseMatrix,
    pub lumped: Vec<f64>,
    pub stiffness: SparseMatrix,
}

pub fn assemble_operators(mesh: &Mesh) -> Operators {
    let (mass, lumped) = assemble_mass(mesh);
    Operators {
        mass,
        lumped,
        stiffness: assemble_stiffness(mesh),
    }
}

/// Consistent mass matrix and its lumped (row-sum) diagonal. On a triangle
/// of area A the local consistent mass is A/6 on the diagonal and A/12 off
/// it; lumping gives A/3 per vertex.
pub fn assemble_mass(mesh: &Mesh) -> (SparseMatrix, Vec<f64>) {
    let n = mesh.n_nodes();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    let mut lumped = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t);
        for &i in tri {
            lumped[i] += a / 3.0;
            for &j in tri {
                triplets.push((i, j, if i == j { a / 6.0 } else { a / 12.0 }));
            }
        }
    }
    let mass = SparseMatrix::from_triplets(n, n, &triplets).expect("valid mesh indices");
    (mass, lumped)
}

/// Stiffness matrix via the cotangent formula: for i != j on a triangle,
/// s_ij = -cot(theta)/2 with theta the angle opposite edge (i, j); the
/// diagonal makes each element row sum exactly zero.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseMatrix {
    let n = mesh.n_nodes();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = [
            mesh.node(tri[0]),
            mesh.node(tri[1]),
            mesh.node(tri[2]),
        ];
        let area = mesh.triangle_area(t);
        let mut local = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let k = 3 - i - j; // opposite vertex
                let u = [p[i][0] - p[k][0], p[i][1] - p[k][1]];
                let v = [p[j][0] - p[k][0], p[j][1] - p[k][1]];
                // cot(theta_k) = u.v / |u x v|, |u x v| = 2A
                let s = -(u[0] * v[0] + u[1] * v[1]) / (4.0 * area);
                local[i][j] = s;
                local[j][i] = s;
            }
        }
        for i in 0..3 {
            local[i][i] = -(local[i][(i + 1) % 3] + local[i][(i + 2) % 3]);
        }
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], local[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("valid mesh indices")
}

/// Zero matrix pinned to the mesh adjacency pattern (diagonal included).
/// Convection and artificial diffusion share this pattern across a run.
pub fn adjacency_pattern(mesh: &Mesh) -> SparseMatrix {
    let n = mesh.n_nodes();
    let mut triplets = Vec::with_capacity(n + 2 * mesh.n_edges());
    for i in 0..n {
        triplets.push((i, i, 0.0));
    }
    for &(a, b) in mesh.edges() {
        triplets.push((a, b, 0.0));
        triplets.push((b, a, 0.0));
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("valid mesh indices")
}

/// Convection matrix T(beta) for the drift lambda * grad(c_h), c_h the P1
/// field with nodal values beta.
pub fn assemble_convection(
    mesh: &Mesh,
    beta: &[f64],
    lambda: f64,
) -> Result<SparseMatrix, AssemblyError> {
    let mut t = adjacency_pattern(mesh);
    assemble_convection_into(mesh, beta, lambda, &mut t)?;
    Ok(t)
}

/// As `assemble_convection`, but reusing `t` (must carry the adjacency
/// pattern of `mesh`); values are overwritten.
pub fn assemble_convection_into(
    mesh: &Mesh,
    beta: &[f64],
    lambda: f64,
    t: &mut SparseMatrix,
) -> Result<(), AssemblyError> {
    if beta.len() != mesh.n_nodes() {
        return Err(AssemblyError::LengthMismatch {
            got: beta.len(),
            expected: mesh.n_nodes(),
        });
    }
    t.values_mut().fill(0.0);
    for (tt, tri) in mesh.triangles().iter().enumerate() {
        let p = [
            mesh.node(tri[0]),
            mesh.node(tri[1]),
            mesh.node(tri[2]),
        ];
        let area = mesh.triangle_area(tt);
        // grad phi_i = rot90(opposite edge) / 2A, rot90(x, y) = (-y, x)
        let grads = [
            grad_phi(p[1], p[2], area),
            grad_phi(p[2], p[0], area),
            grad_phi(p[0], p[1], area),
        ];
        let g = [
            beta[tri[0]] * grads[0][0] + beta[tri[1]] * grads[1][0] + beta[tri[2]] * grads[2][0],
            beta[tri[0]] * grads[0][1] + beta[tri[1]] * grads[1][1] + beta[tri[2]] * grads[2][1],
        ];
        let w = lambda * area / 3.0;
        for i in 0..3 {
            let val = w * (g[0] * grads[i][0] + g[1] * grads[i][1]);
            let (cols, vals) = t.row_mut(tri[i]);
            for &jn in tri {
                let pos = cols.binary_search(&jn).expect("adjacency pattern");
                vals[pos] += val;
            }
        }
    }
    Ok(())
}

fn grad_phi(a: [f64; 2], b: [f64; 2], area: f64) -> [f64; 2] {
    let e = [b[0] - a[0], b[1] - a[1]];
    [-e[1] / (2.0 * area), e[0] / (2.0 * area)]
}

/// Artificial diffusion D for a convection matrix T: symmetric, nonnegative
/// off the diagonal, zero row and column sums, and T + D has nonnegative
/// off-diagonal entries.
pub fn assemble_artificial_diffusion(t: &SparseMatrix) -> SparseMatrix {
    let mut d = t.scaled(0.0);
    assemble_artificial_diffusion_into(t, &mut d);
    d
}

/// As `assemble_artificial_diffusion`, reusing `d` (same pattern as `t`).
pub fn assemble_artificial_diffusion_into(t: &SparseMatrix, d: &mut SparseMatrix) {
    let n = t.n_rows();
    d.values_mut().fill(0.0);
    for i in 0..n {
        let (cols, tvals) = t.row(i);
        let row: Vec<(usize, f64)> = cols
            .iter()
            .zip(tvals)
            .filter(|(&j, _)| j > i)
            .map(|(&j, &v)| (j, v))
            .collect();
        for (j, tij) in row {
            let tji = t.get(j, i);
            let dij = (-tij).max(0.0).max(-tji);
            set_entry(d, i, j, dij);
            set_entry(d, j, i, dij);
            add_entry(d, i, i, -dij);
            add_entry(d, j, j, -dij);
        }
    }
}

fn set_entry(m: &mut SparseMatrix, i: usize, j: usize, v: f64) {
    let (cols, vals) = m.row_mut(i);
    let pos = cols.binary_search(&j).expect("pattern slot");
    vals[pos] = v;
}

fn add_entry(m: &mut SparseMatrix, i: usize, j: usize, v: f64) {
    let (cols, vals) = m.row_mut(i);
    let pos = cols.binary_search(&j).expect("pattern slot");
    vals[pos] += v;
}

/// Mass-lumped inner product sum_i m_i psi_i chi_i (the vertex quadrature
/// rule applied to (psi, chi)).
pub fn lumped_inner_product(
    lumped: &[f64],
    psi: &[f64],
    chi: &[f64],
) -> Result<f64, AssemblyError> {
    if psi.len() != lumped.len() || chi.len() != lumped.len() {
        return Err(AssemblyError::LengthMismatch {
            got: psi.len().min(chi.len()),
            expected: lumped.len(),
        });
    }
    Ok(lumped
        .iter()
        .zip(psi.iter().zip(chi))
        .map(|(&m, (&p, &c))| m * p * c)
        .sum())
}

/// Nodal values of f on the mesh; rejects non-finite values.
pub fn nodal_interpolant(
    mesh: &Mesh,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>, AssemblyError> {
    let mut out = Vec::with_capacity(mesh.n_nodes());
    for (i, &[x, y]) in mesh.nodes().iter().enumerate() {
        let v = f(x, y);
        if !v.is_finite() {
            return Err(AssemblyError::NonFinite { node: i, x, y });
        }
        out.push(v);
    }
    Ok(out)
}

/// Degree-5 quadrature on the reference triangle: (barycentric coords, weight),
/// weights summing to 1.
const QUAD_DEG5: [([f64; 3], f64); 7] = {
    // a = (6 - sqrt(15))/21, b = (6 + sqrt(15))/21
    const SQRT15: f64 = 3.872983346207417;
    const A: f64 = (6.0 - SQRT15) / 21.0;
    const B: f64 = (6.0 + SQRT15) / 21.0;
    const WA: f64 = (155.0 - SQRT15) / 1200.0;
    const WB: f64 = (155.0 + SQRT15) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
};

/// Quadrature over one triangle of a function given in physical coordinates.
pub fn integrate_triangle(mesh: &Mesh, t: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let tri = mesh.triangles()[t];
    let p = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
    let area = mesh.triangle_area(t);
    let mut acc = 0.0;
    for (bary, w) in QUAD_DEG5 {
        let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
        let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
        acc += w * f(x, y);
    }
    area * acc
}

/// Projection of f onto the P1 space in the H1 inner product
/// (grad r, grad chi) + (r, chi): solves (S + M) r = b with
/// b_i = int(grad f . grad phi_i + f phi_i), right side by degree-5
/// quadrature. Reproduces P1 functions (affine f) exactly.
pub fn ritz_projection(
    mesh: &Mesh,
    f: impl Fn(f64, f64) -> f64,
    grad_f: impl Fn(f64, f64) -> [f64; 2],
) -> Result<Vec<f64>, AssemblyError> {
    let ops = assemble_operators(mesh);
    let a = ops.stiffness.add_scaled(&ops.mass, 1.0)?;
    let mut rhs = vec![0.0; mesh.n_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = [
            mesh.node(tri[0]),
            mesh.node(tri[1]),
            mesh.node(tri[2]),
        ];
        let area = mesh.triangle_area(t);
        let grads = [
            grad_phi(p[1], p[2], area),
            grad_phi(p[2], p[0], area),
            grad_phi(p[0], p[1], area),
        ];
        for (bary, w) in QUAD_DEG5 {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let fv = f(x, y);
            let gv = grad_f(x, y);
            for i in 0..3 {
                rhs[tri[i]] += area
                    * w
                    * (gv[0] * grads[i][0] + gv[1] * grads[i][1] + fv * bary[i]);
            }
        }
    }
    let (r, _) = a.solve(&rhs, 1e-12)?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_unit_square;

    fn unit_right_triangle() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn local_stiffness_of_unit_right_triangle() {
        let s = assemble_stiffness(&unit_right_triangle());
        let expected = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (s.get(i, j) - expected[i][j]).abs() < 1e-14,
                    "({i},{j}): {}",
                    s.get(i, j)
                );
            }
        }
    }

    #[test]
    fn local_mass_of_unit_right_triangle() {
        let (m, lumped) = assemble_mass(&unit_right_triangle());
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert!((m.get(i, j) - expected).abs() < 1e-16);
            }
            assert!((lumped[i] - 1.0 / 6.0).abs() < 1e-16);
        }
    }

    #[test]
    fn interior_lumped_mass_is_h0_squared() {
        for m in [3usize, 5, 8] {
            let mesh = build_uniform_unit_square(m).unwrap();
            let (_, lumped) = assemble_mass(&mesh);
            let expected = 1.0 / (m * m) as f64;
            for i in 0..mesh.n_nodes() {
                if !mesh.is_boundary(i) {
                    assert!((lumped[i] - expected).abs() < 1e-15 * expected, "m={m} i={i}");
                }
            }
        }
    }

    #[test]
    fn lumped_mass_sums_to_domain_area() {
        let mesh = build_uniform_unit_square(7).unwrap();
        let (_, lumped) = assemble_mass(&mesh);
        let total: f64 = lumped.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let mesh = build_uniform_unit_square(6).unwrap();
        let s = assemble_stiffness(&mesh);
        let ones = vec![1.0; mesh.n_nodes()];
        let y = s.spmv(&ones).unwrap();
        for (i, v) in y.iter().enumerate() {
            assert!(v.abs() < 1e-13, "row {i}: {v}");
        }
    }

    #[test]
    fn shared_edge_stiffness_matches_angle_formula() {
        // two non-right triangles over edge (0,1): entry is
        // -sin(g + d) / (2 sin g sin d), angles opposite the shared edge
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.3, 0.9], [0.6, -0.7]];
        let mesh = Mesh::new(nodes.clone(), vec![[0, 1, 2], [0, 3, 1]]).unwrap();
        let s = assemble_stiffness(&mesh);
        let angle_at = |apex: [f64; 2], a: [f64; 2], b: [f64; 2]| -> f64 {
            let u = [a[0] - apex[0], a[1] - apex[1]];
            let v = [b[0] - apex[0], b[1] - apex[1]];
            let dot = u[0] * v[0] + u[1] * v[1];
            let cross = u[0] * v[1] - u[1] * v[0];
            cross.abs().atan2(dot)
        };
        let g = angle_at(nodes[2], nodes[0], nodes[1]);
        let d = angle_at(nodes[3], nodes[0], nodes[1]);
        let expected = -(g + d).sin() / (2.0 * g.sin() * d.sin());
        assert!((s.get(0, 1) - expected).abs() < 1e-14);
        assert!((s.get(1, 0) - expected).abs() < 1e-14);
    }

    #[test]
    fn convection_on_single_triangle_is_gradient_times_third() {
        // c_h = x on the unit right triangle: grad c = (1, 0), so
        // t_ij = (A/3) d(phi_i)/dx for every j
        let mesh = unit_right_triangle();
        let beta = vec![0.0, 1.0, 0.0]; // nodal values of x
        let t = assemble_convection(&mesh, &beta, 1.0).unwrap();
        let dphidx = [-1.0, 1.0, 0.0];
        for i in 0..3 {
            for j in 0..3 {
                let expected = 0.5 / 3.0 * dphidx[i];
                assert!((t.get(i, j) - expected).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn convection_vanishes_for_constant_field() {
        let mesh = build_uniform_unit_square(3).unwrap();
        let beta = vec![4.2; mesh.n_nodes()];
        let t = assemble_convection(&mesh, &beta, 1.5).unwrap();
        for &v in t.values() {
            assert!(v.abs() < 1e-14, "{v}");
        }
    }

    #[test]
    fn convection_columns_sum_to_zero() {
        let mesh = build_uniform_unit_square(5).unwrap();
        let beta: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|&[x, y]| (3.0 * x).sin() + (2.0 * y).cos() + x * y)
            .collect();
        let t = assemble_convection(&mesh, &beta, 2.0).unwrap();
        let n = mesh.n_nodes();
        let mut colsum = vec![0.0f64; n];
        let mut colabs = vec![0.0f64; n];
        for i in 0..n {
            let (cols, vals) = t.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                colsum[j] += v;
                colabs[j] += v.abs();
            }
        }
        for j in 0..n {
            assert!(colsum[j].abs() <= 1e-12 * colabs[j].max(1e-30), "col {j}");
        }
    }

    #[test]
    fn convection_pattern_is_full_adjacency() {
        let mesh = build_uniform_unit_square(4).unwrap();
        let beta = vec![0.0; mesh.n_nodes()];
        let t = assemble_convection(&mesh, &beta, 1.0).unwrap();
        assert_eq!(t.nnz(), mesh.n_nodes() + 2 * mesh.n_edges());
    }

    #[test]
    fn artificial_diffusion_hand_example() {
        // t_ij = -3, t_ji = 1 -> d_ij = max(3, 0, -1) = 3
        let t = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 0.0), (0, 1, -3.0), (1, 0, 1.0), (1, 1, 0.0)],
        )
        .unwrap();
        let d = assemble_artificial_diffusion(&t);
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(1, 0), 3.0);
        assert_eq!(d.get(0, 0), -3.0);
        assert_eq!(d.get(1, 1), -3.0);
    }

    #[test]
    fn artificial_diffusion_invariants() {
        let mesh = build_uniform_unit_square(5).unwrap();
        let beta: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|&[x, y]| (x - 0.3).powi(2) - 2.0 * (y - 0.6).powi(2))
            .collect();
        let t = assemble_convection(&mesh, &beta, 1.0).unwrap();
        let d = assemble_artificial_diffusion(&t);
        let n = mesh.n_nodes();
        for i in 0..n {
            let (cols, vals) = d.row(i);
            let mut row_sum = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_sum += v;
                if i != j {
                    assert!(v >= 0.0, "d[{i},{j}] = {v}");
                    assert_eq!(v, d.get(j, i), "symmetry at ({i},{j})");
                    assert!(t.get(i, j) + v >= -1e-14, "T+D off-diagonal at ({i},{j})");
                }
            }
            assert!(row_sum.abs() < 1e-13, "row {i} sums to {row_sum}");
        }
    }

    #[test]
    fn lumped_inner_product_examples() {
        let mesh = build_uniform_unit_square(4).unwrap();
        let (_, lumped) = assemble_mass(&mesh);
        let ones = vec![1.0; mesh.n_nodes()];
        let v = lumped_inner_product(&lumped, &ones, &ones).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
        assert!(lumped_inner_product(&lumped, &ones[1..], &ones).is_err());
    }

    #[test]
    fn lumped_dominates_consistent_quadratic_form() {
        // x^T M_L x / x^T M x is between 1 and 4 for any x
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mesh = build_uniform_unit_square(6).unwrap();
        let (mass, lumped) = assemble_mass(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let x: Vec<f64> = (0..mesh.n_nodes())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let consistent: f64 = mass
                .spmv(&x)
                .unwrap()
                .iter()
                .zip(&x)
                .map(|(a, b)| a * b)
                .sum();
            let lump = lumped_inner_product(&lumped, &x, &x).unwrap();
            let ratio = lump / consistent;
            assert!((1.0 - 1e-12..=4.0 + 1e-12).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn quadrature_error_decays_quadratically() {
        // |(chi, psi) - (chi, psi)_h| = O(h^2) for interpolants of smooth
        // functions
        let chi_f = |x: f64, y: f64| (std::f64::consts::PI * x).sin() * (2.0 * y).cos();
        let psi_f = |x: f64, y: f64| (x + y).exp();
        let mut errs = Vec::new();
        for m in [8usize, 16, 32] {
            let mesh = build_uniform_unit_square(m).unwrap();
            let (mass, lumped) = assemble_mass(&mesh);
            let chi = nodal_interpolant(&mesh, chi_f).unwrap();
            let psi = nodal_interpolant(&mesh, psi_f).unwrap();
            let consistent: f64 = mass
                .spmv(&psi)
                .unwrap()
                .iter()
                .zip(&chi)
                .map(|(a, b)| a * b)
                .sum();
            let lump = lumped_inner_product(&lumped, &chi, &psi).unwrap();
            errs.push((consistent - lump).abs());
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.7..=2.3).contains(&rate), "rate {rate}");
        }
    }

    #[test]
    fn interpolant_values_and_errors() {
        let mesh = build_uniform_unit_square(120).unwrap();
        let u0 = nodal_interpolant(&mesh, |x, y| {
            1000.0 * (-100.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
        })
        .unwrap();
        let center = 60 * 121 + 60;
        assert_eq!(u0[center], 1000.0);
        assert!(nodal_interpolant(&mesh, |x, _| 1.0 / x).is_err());
    }

    #[test]
    fn ritz_projection_reproduces_affine_functions() {
        let mesh = build_uniform_unit_square(5).unwrap();
        let r = ritz_projection(&mesh, |x, y| 2.0 - 0.7 * x + 0.3 * y, |_, _| [-0.7, 0.3])
            .unwrap();
        let exact = nodal_interpolant(&mesh, |x, y| 2.0 - 0.7 * x + 0.3 * y).unwrap();
        for (a, b) in r.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn ritz_projection_error_second_order() {
        let f = |x: f64, y: f64| (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).cos();
        let gf = |x: f64, y: f64| {
            let pi = std::f64::consts::PI;
            [
                -pi * (pi * x).sin() * (pi * y).cos(),
                -pi * (pi * x).cos() * (pi * y).sin(),
            ]
        };
        let mut errs = Vec::new();
        for m in [8usize, 16, 32] {
            let mesh = build_uniform_unit_square(m).unwrap();
            let r = ritz_projection(&mesh, f, gf).unwrap();
            let tris: Vec<usize> = (0..mesh.n_triangles()).collect();
            let mut err2 = 0.0;
            for t in tris {
                let tri = mesh.triangles()[t];
                let p = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
                err2 += integrate_triangle(&mesh, t, |x, y| {
                    // barycentric interpolation of r at (x, y)
                    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                        - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
                    let l1 = ((x - p[0][0]) * (p[2][1] - p[0][1])
                        - (p[2][0] - p[0][0]) * (y - p[0][1]))
                        / det;
                    let l2 = ((p[1][0] - p[0][0]) * (y - p[0][1])
                        - (x - p[0][0]) * (p[1][1] - p[0][1]))
                        / det;
                    let rh = r[tri[0]] * (1.0 - l1 - l2) + r[tri[1]] * l1 + r[tri[2]] * l2;
                    (rh - f(x, y)).powi(2)
                });
            }
            errs.push(err2.sqrt());
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.6..=2.4).contains(&rate), "rate {rate}");
        }
    }
}
