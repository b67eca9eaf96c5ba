//! Independent dense reimplementations used as oracles: operator assembly
//! through reference-element quadrature instead of closed-form entries, and
//! a direct transcription of the flux limiter over dense matrices.

use std::collections::BTreeSet;

pub type DMat = Vec<Vec<f64>>;

/// Seven-point rule on the reference triangle, exact through degree 5.
/// Weights are normalized to sum to one; multiply by the element area.
const SEVEN_POINT: [(f64, f64, f64); 7] = {
    // interior points come in two symmetric orbits around the centroid
    const A1: f64 = 0.101_286_507_323_456_33; // (6 - sqrt(15)) / 21
    const A2: f64 = 0.470_142_064_105_115_05; // (6 + sqrt(15)) / 21
    const W1: f64 = 0.125_939_180_544_827_17; // (155 - sqrt(15)) / 1200
    const W2: f64 = 0.132_394_152_788_506_16; // (155 + sqrt(15)) / 1200
    [
        (1.0 / 3.0, 1.0 / 3.0, 0.225),
        (A1, A1, W1),
        (1.0 - 2.0 * A1, A1, W1),
        (A1, 1.0 - 2.0 * A1, W1),
        (A2, A2, W2),
        (1.0 - 2.0 * A2, A2, W2),
        (A2, 1.0 - 2.0 * A2, W2),
    ]
};

fn zeros(n: usize) -> DMat {
    vec![vec![0.0; n]; n]
}

struct Element {
    area: f64,
    /// physical gradients of the three vertex basis functions
    grads: [[f64; 2]; 3],
}

fn element(nodes: &[[f64; 2]], tri: [usize; 3]) -> Element {
    let p0 = nodes[tri[0]];
    let p1 = nodes[tri[1]];
    let p2 = nodes[tri[2]];
    let j = [
        [p1[0] - p0[0], p2[0] - p0[0]],
        [p1[1] - p0[1], p2[1] - p0[1]],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // rows of det * J^{-T} applied to the reference gradients
    // (-1,-1), (1,0), (0,1)
    let gx = [
        (-j[1][1] + j[1][0]) / det,
        j[1][1] / det,
        -j[1][0] / det,
    ];
    let gy = [
        (j[0][1] - j[0][0]) / det,
        -j[0][1] / det,
        j[0][0] / det,
    ];
    Element {
        area: det.abs() / 2.0,
        grads: [[gx[0], gy[0]], [gx[1], gy[1]], [gx[2], gy[2]]],
    }
}

fn basis(xi: f64, eta: f64) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

/// Consistent mass by quadrature of N_i N_j on each element.
pub fn dense_mass(nodes: &[[f64; 2]], triangles: &[[usize; 3]]) -> DMat {
    let mut m = zeros(nodes.len());
    for &tri in triangles {
        let el = element(nodes, tri);
        for &(xi, eta, w) in &SEVEN_POINT {
            let n = basis(xi, eta);
            for a in 0..3 {
                for b in 0..3 {
                    m[tri[a]][tri[b]] += el.area * w * n[a] * n[b];
                }
            }
        }
    }
    m
}

/// Lumped masses as row sums of the consistent matrix.
pub fn dense_lumped(mass: &DMat) -> Vec<f64> {
    mass.iter().map(|row| row.iter().sum()).collect()
}

/// Stiffness by quadrature of grad N_i . grad N_j on each element.
pub fn dense_stiffness(nodes: &[[f64; 2]], triangles: &[[usize; 3]]) -> DMat {
    let mut s = zeros(nodes.len());
    for &tri in triangles {
        let el = element(nodes, tri);
        for &(_, _, w) in &SEVEN_POINT {
            for a in 0..3 {
                for b in 0..3 {
                    let dot =
                        el.grads[a][0] * el.grads[b][0] + el.grads[a][1] * el.grads[b][1];
                    s[tri[a]][tri[b]] += el.area * w * dot;
                }
            }
        }
    }
    s
}

/// Convection from its vertex-quadrature definition: for each element the
/// integrand lambda (grad w_h . grad phi_i) is constant, and (., phi_j)_h
/// contributes area/3 at every vertex j of the element.
pub fn dense_convection(
    nodes: &[[f64; 2]],
    triangles: &[[usize; 3]],
    w: &[f64],
    lambda: f64,
) -> DMat {
    let mut t = zeros(nodes.len());
    for &tri in triangles {
        let el = element(nodes, tri);
        let mut grad_w = [0.0; 2];
        for a in 0..3 {
            grad_w[0] += w[tri[a]] * el.grads[a][0];
            grad_w[1] += w[tri[a]] * el.grads[a][1];
        }
        for a in 0..3 {
            let against = grad_w[0] * el.grads[a][0] + grad_w[1] * el.grads[a][1];
            for b in 0..3 {
                t[tri[a]][tri[b]] += lambda * el.area / 3.0 * against;
            }
        }
    }
    t
}

/// d_ij = max(-t_ij, 0, -t_ji) off the diagonal, diagonal set so rows sum
/// to zero.
pub fn dense_artificial_diffusion(t: &DMat) -> DMat {
    let n = t.len();
    let mut d = zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i][j] = (-t[i][j]).max(0.0).max(-t[j][i]);
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| d[i][j]).sum();
        d[i][i] = -off;
    }
    d
}

/// Vertex adjacency (nodes sharing a triangle), excluding the node itself.
pub fn adjacency_sets(n_nodes: usize, triangles: &[[usize; 3]]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n_nodes];
    for &tri in triangles {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    adj[tri[a]].insert(tri[b]);
                }
            }
        }
    }
    adj
}

/// Naive q weights mirroring the production strategies, with gamma and
/// lumped masses supplied by the caller.
pub fn dense_q_gamma_sum_d(gamma: &[f64], d: &DMat) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let sum: f64 = (0..n).filter(|&j| j != i).map(|j| d[i][j]).sum();
            gamma[i] * sum
        })
        .collect()
}

pub fn dense_q_mass_over_k(lumped: &[f64], k: f64) -> Vec<f64> {
    lumped.iter().map(|&m| m / k).collect()
}

pub struct NaiveLimiter {
    pub abar: DMat,
    pub a: DMat,
    pub fbar: Vec<f64>,
}

/// Direct transcription of the limiter over dense matrices: raw fluxes,
/// signed sums, patch bounds, one-sided ratios, symmetric factors, limited
/// update. Patch extrema run over the adjacency plus the node itself, and
/// a vanished sum P means the ratio defaults to one.
pub fn naive_limiter(
    d: &DMat,
    adjacency: &[BTreeSet<usize>],
    alpha: &[f64],
    q: &[f64],
) -> NaiveLimiter {
    let n = d.len();
    let mut fluxes = zeros(n);
    for i in 0..n {
        for &j in &adjacency[i] {
            fluxes[i][j] = d[i][j] * (alpha[i] - alpha[j]);
        }
    }
    let mut r_plus = vec![1.0; n];
    let mut r_minus = vec![1.0; n];
    for i in 0..n {
        let mut p_plus = 0.0;
        let mut p_minus = 0.0;
        let mut amax = alpha[i];
        let mut amin = alpha[i];
        for &j in &adjacency[i] {
            amax = amax.max(alpha[j]);
            amin = amin.min(alpha[j]);
            if fluxes[i][j] > 0.0 {
                p_plus += fluxes[i][j];
            } else if fluxes[i][j] < 0.0 {
                p_minus += fluxes[i][j];
            }
        }
        let q_plus = q[i] * (amax - alpha[i]);
        let q_minus = q[i] * (amin - alpha[i]);
        if p_plus.abs() >= 1e-300 {
            r_plus[i] = (q_plus / p_plus).min(1.0);
        }
        if p_minus.abs() >= 1e-300 {
            r_minus[i] = (q_minus / p_minus).min(1.0);
        }
    }
    let mut abar = zeros(n);
    for i in 0..n {
        for j in 0..n {
            abar[i][j] = if fluxes[i][j] > 0.0 {
                r_plus[i]
            } else if fluxes[i][j] < 0.0 {
                r_minus[i]
            } else {
                1.0
            };
        }
    }
    let mut a = zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[i][j] = abar[i][j].min(abar[j][i]);
        }
    }
    let mut fbar = vec![0.0; n];
    for i in 0..n {
        for &j in &adjacency[i] {
            fbar[i] += a[i][j] * fluxes[i][j];
        }
    }
    NaiveLimiter { abar, a, fbar }
}

/// || A - B ||_F / max(||B||_F, 1e-300).
pub fn rel_frobenius_diff(a: &DMat, b: &DMat) -> f64 {
    let mut diff = 0.0;
    let mut scale = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (&x, &y) in ra.iter().zip(rb) {
            diff += (x - y) * (x - y);
            scale += y * y;
        }
    }
    (diff.sqrt()) / scale.sqrt().max(1e-300)
}
