//! Conforming P1 triangulations of the unit square.
//!
//! `build_uniform_unit_square(m)` produces the standard (m+1) x (m+1) node
//! grid with every cell split along the lower-left to upper-right diagonal:
//! 2m^2 right triangles of diameter sqrt(2)/m. General node/triangle data can
//! also be loaded through `Mesh::new`, which validates orientation and edge
//! incidence. Right angles are admissible for the upwinding construction, so
//! a nonobtuse check treats them as fine; obtuse angles are reported through
//! `MeshQuality` rather than rejected.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh must contain at least one triangle and three nodes")]
    Empty,
    #[error("resolution must be at least 1")]
    ZeroResolution,
    #[error("triangle {tri} references node {node}, but there are {n_nodes} nodes")]
    IndexOutOfRange {
        tri: usize,
        node: usize,
        n_nodes: usize,
    },
    #[error("triangle {0} has non-positive area (vertices must be distinct and counterclockwise)")]
    NonPositiveArea(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    EdgeIncidence(usize, usize),
}

/// Geometric quality summary: triangle diameters, their spread, the largest
/// interior angle, and the per-node patch constants gamma_i.
#[derive(Debug, Clone)]
pub struct MeshQuality {
    pub h_max: f64,
    pub h_min: f64,
    /// h_max / h_min
    pub quasiuniformity: f64,
    pub max_interior_angle: f64,
    /// max_interior_angle <= pi/2 (+ rounding slack); right angles count
    pub nonobtuse: bool,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// undirected edges (i, j) with i < j, lexicographic
    edges: Vec<(usize, usize)>,
    /// sorted adjacent node set per node, excluding the node itself
    neighbors: Vec<Vec<usize>>,
    /// indices of triangles touching each node
    node_triangles: Vec<Vec<usize>>,
    boundary_node: Vec<bool>,
    uniform_m: Option<usize>,
}

impl Mesh {
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        Self::build(nodes, triangles, None)
    }

    fn build(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        uniform_m: Option<usize>,
    ) -> Result<Self, MeshError> {
        if nodes.len() < 3 || triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nodes.len() {
                    return Err(MeshError::IndexOutOfRange {
                        tri: t,
                        node: v,
                        n_nodes: nodes.len(),
                    });
                }
            }
            if signed_area(&nodes, tri) <= 0.0 {
                return Err(MeshError::NonPositiveArea(t));
            }
        }

        // undirected edge -> number of incident triangles
        let mut edge_count: std::collections::BTreeMap<(usize, usize), usize> =
            std::collections::BTreeMap::new();
        for tri in &triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edge_count {
            if count > 2 {
                return Err(MeshError::EdgeIncidence(a, b));
            }
        }

        let mut boundary_node = vec![false; nodes.len()];
        for (&(a, b), &count) in &edge_count {
            if count == 1 {
                boundary_node[a] = true;
                boundary_node[b] = true;
            }
        }

        let mut neighbors = vec![Vec::new(); nodes.len()];
        for &(a, b) in edge_count.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }

        let mut node_triangles = vec![Vec::new(); nodes.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                node_triangles[v].push(t);
            }
        }

        let edges = edge_count.into_keys().collect();
        Ok(Mesh {
            nodes,
            triangles,
            edges,
            neighbors,
            node_triangles,
            boundary_node,
            uniform_m,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn node_triangles(&self, i: usize) -> &[usize] {
        &self.node_triangles[i]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary_node[i]
    }

    /// Resolution m when built by `build_uniform_unit_square`.
    pub fn uniform_resolution(&self) -> Option<usize> {
        self.uniform_m
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.nodes, &self.triangles[t])
    }

    pub fn quality(&self) -> MeshQuality {
        let mut h_max = 0.0f64;
        let mut h_min = f64::INFINITY;
        let mut max_angle = 0.0f64;
        for tri in &self.triangles {
            let p = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
            let mut diam = 0.0f64;
            for e in 0..3 {
                diam = diam.max(dist(p[e], p[(e + 1) % 3]));
            }
            h_max = h_max.max(diam);
            h_min = h_min.min(diam);
            for v in 0..3 {
                max_angle = max_angle.max(corner_angle(p[(v + 2) % 3], p[v], p[(v + 1) % 3]));
            }
        }
        let gamma = (0..self.n_nodes()).map(|i| self.gamma(i)).collect();
        MeshQuality {
            h_max,
            h_min,
            quasiuniformity: h_max / h_min,
            max_interior_angle: max_angle,
            nonobtuse: max_angle <= std::f64::consts::FRAC_PI_2 + 1e-12,
            gamma,
        }
    }

    /// Patch constant gamma_i: bounds how far an affine field can drop below
    /// its value at Z_i relative to how far it rises, over the patch.
    /// Symmetric patches give exactly 1. Otherwise the bound is
    /// max_j |Z_i - Z_j| / dist(Z_i, boundary of the patch convex hull),
    /// measuring distance only to hull facets that do not pass through Z_i
    /// (for boundary nodes Z_i lies on the hull, so facets through it are
    /// excluded to keep the distance positive).
    pub fn gamma(&self, i: usize) -> f64 {
        let zi = self.nodes[i];
        let nbr: Vec<[f64; 2]> = self.neighbors[i].iter().map(|&j| self.nodes[j]).collect();
        debug_assert!(!nbr.is_empty());

        let far = nbr.iter().fold(0.0f64, |m, &p| m.max(dist(zi, p)));
        let tol = 1e-12 * far.max(1e-300);

        // symmetric patch: every neighbor has its mirror through Z_i
        let symmetric = nbr.iter().all(|&p| {
            let mirror = [2.0 * zi[0] - p[0], 2.0 * zi[1] - p[1]];
            nbr.iter().any(|&q| dist(mirror, q) <= tol)
        });
        if symmetric {
            return 1.0;
        }

        let mut pts = nbr.clone();
        pts.push(zi);
        let hull = convex_hull(&pts);
        let mut d = f64::INFINITY;
        for f in 0..hull.len() {
            let (a, b) = (hull[f], hull[(f + 1) % hull.len()]);
            let dzi = dist_point_segment(zi, a, b);
            if dzi <= tol {
                continue; // facet passes through Z_i
            }
            d = d.min(dzi);
        }
        debug_assert!(d.is_finite() && d > 0.0);
        far / d
    }
}

/// Uniform triangulation of [0,1]^2: (m+1)^2 nodes at (i/m, j/m) indexed
/// j*(m+1)+i, each cell split along its lower-left to upper-right diagonal.
pub fn build_uniform_unit_square(m: usize) -> Result<Mesh, MeshError> {
    if m == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let n1 = m + 1;
    let mut nodes = Vec::with_capacity(n1 * n1);
    for j in 0..n1 {
        for i in 0..n1 {
            nodes.push([i as f64 / m as f64, j as f64 / m as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let ll = j * n1 + i;
            let lr = ll + 1;
            let ul = ll + n1;
            let ur = ul + 1;
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }
    Mesh::build(nodes, triangles, Some(m))
}

fn signed_area(nodes: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Interior angle at vertex `b` of the wedge a-b-c.
fn corner_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let u = [a[0] - b[0], a[1] - b[1]];
    let v = [c[0] - b[0], c[1] - b[1]];
    let dot = u[0] * v[0] + u[1] * v[1];
    let cross = u[0] * v[1] - u[1] * v[0];
    cross.abs().atan2(dot)
}

/// Monotone chain; returns hull vertices counterclockwise, collinear points
/// dropped.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}
