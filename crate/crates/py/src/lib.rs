//! Python bindings for the ksfem chemotaxis solver.
//!
//! The module exposes the pieces a script actually wants to drive: `Mesh`
//! for geometry and quality queries, `Solver` for stepping a configured
//! scheme one backward Euler step at a time, `simulate` for whole runs,
//! the operator assemblies in CSR form (directly consumable by
//! `scipy.sparse.csr_matrix`), and the nested-mesh error norms used by the
//! convergence studies.

use ksfem::assembly::{
    assemble_artificial_diffusion, assemble_convection, assemble_mass, assemble_stiffness,
};
use ksfem::harness::{
    parse_scheme, prolong_nested, InitialCondition, KRule, NormContext, QChoice, RunConfig,
};
use ksfem::mesh::{build_uniform_unit_square, Mesh};
use ksfem::sparse::SparseMatrix;
use ksfem::stepper::{CCoupling, State, StepParams, Stepper};
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// CSR parts (indptr, indices, data) of a square sparse matrix.
type CsrParts = (Vec<usize>, Vec<usize>, Vec<f64>);

fn csr_parts(a: &SparseMatrix) -> CsrParts {
    let mut indptr = Vec::with_capacity(a.n_rows() + 1);
    let mut indices = Vec::with_capacity(a.nnz());
    let mut data = Vec::with_capacity(a.nnz());
    indptr.push(0);
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        indices.extend_from_slice(cols);
        data.extend_from_slice(vals);
        indptr.push(indices.len());
    }
    (indptr, indices, data)
}

/// Conforming triangulation with node adjacency and per-node patch data.
#[pyclass(name = "Mesh", module = "ksfem_py")]
pub struct PyMesh {
    inner: Mesh,
}

#[pymethods]
impl PyMesh {
    /// Build a mesh from node coordinates and triangles (counterclockwise
    /// vertex index triples).
    #[new]
    fn new(nodes: Vec<(f64, f64)>, triangles: Vec<(usize, usize, usize)>) -> PyResult<Self> {
        let nodes = nodes.into_iter().map(|(x, y)| [x, y]).collect();
        let triangles = triangles.into_iter().map(|(a, b, c)| [a, b, c]).collect();
        Ok(PyMesh {
            inner: Mesh::new(nodes, triangles).map_err(value_err)?,
        })
    }

    /// Uniform M x M grid of the unit square, each cell split along the
    /// lower-left to upper-right diagonal.
    #[staticmethod]
    fn uniform(m: usize) -> PyResult<Self> {
        Ok(PyMesh {
            inner: build_uniform_unit_square(m).map_err(value_err)?,
        })
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    /// Node coordinates as (x, y) tuples.
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.nodes().iter().map(|&[x, y]| (x, y)).collect()
    }

    /// Triangles as vertex index triples.
    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner
            .triangles()
            .iter()
            .map(|&[a, b, c]| (a, b, c))
            .collect()
    }

    /// Indices of the nodes sharing an edge with node i, ascending.
    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        self.check_node(i)?;
        Ok(self.inner.neighbors(i).to_vec())
    }

    fn is_boundary(&self, i: usize) -> PyResult<bool> {
        self.check_node(i)?;
        Ok(self.inner.is_boundary(i))
    }

    /// Patch constant of node i: the largest |K| / m_i over the adjacent
    /// triangles K.
    fn gamma(&self, i: usize) -> PyResult<f64> {
        self.check_node(i)?;
        Ok(self.inner.gamma(i))
    }

    fn triangle_area(&self, t: usize) -> PyResult<f64> {
        if t >= self.inner.n_triangles() {
            return Err(PyIndexError::new_err(format!(
                "triangle {t} out of range ({} triangles)",
                self.inner.n_triangles()
            )));
        }
        Ok(self.inner.triangle_area(t))
    }

    /// Diameters, their spread, the largest interior angle, and the patch
    /// constants, gathered in one pass.
    fn quality(&self) -> PyMeshQuality {
        let q = self.inner.quality();
        PyMeshQuality {
            h_max: q.h_max,
            h_min: q.h_min,
            quasiuniformity: q.quasiuniformity,
            max_interior_angle: q.max_interior_angle,
            nonobtuse: q.nonobtuse,
            gamma: q.gamma,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh({} nodes, {} triangles)",
            self.inner.n_nodes(),
            self.inner.n_triangles()
        )
    }
}

impl PyMesh {
    fn check_node(&self, i: usize) -> PyResult<()> {
        if i >= self.inner.n_nodes() {
            return Err(PyIndexError::new_err(format!(
                "node {i} out of range ({} nodes)",
                self.inner.n_nodes()
            )));
        }
        Ok(())
    }
}

/// Geometric quality summary of a mesh.
#[pyclass(name = "MeshQuality", module = "ksfem_py")]
pub struct PyMeshQuality {
    #[pyo3(get)]
    h_max: f64,
    #[pyo3(get)]
    h_min: f64,
    /// h_max / h_min
    #[pyo3(get)]
    quasiuniformity: f64,
    /// radians
    #[pyo3(get)]
    max_interior_angle: f64,
    /// max angle <= pi/2 up to rounding; right angles count as nonobtuse
    #[pyo3(get)]
    nonobtuse: bool,
    /// per-node patch constants
    #[pyo3(get)]
    gamma: Vec<f64>,
}

#[pymethods]
impl PyMeshQuality {
    fn __repr__(&self) -> String {
        format!(
            "MeshQuality(h_max={:.6e}, h_min={:.6e}, max_angle={:.4} rad, nonobtuse={})",
            self.h_max, self.h_min, self.max_interior_angle, self.nonobtuse
        )
    }
}

/// Outcome of a single backward Euler step.
#[pyclass(name = "StepReport", module = "ksfem_py")]
pub struct PyStepReport {
    #[pyo3(get)]
    iterations: usize,
    /// relative sup-norm fixed-point increment per iteration
    #[pyo3(get)]
    increments: Vec<f64>,
    #[pyo3(get)]
    min_u: f64,
    #[pyo3(get)]
    min_c: f64,
    #[pyo3(get)]
    mass_before: f64,
    #[pyo3(get)]
    mass_after: f64,
}

#[pymethods]
impl PyStepReport {
    fn __repr__(&self) -> String {
        format!(
            "StepReport(iterations={}, min_u={:.6e}, mass_after={:.12e})",
            self.iterations, self.min_u, self.mass_after
        )
    }
}

/// Trajectory record of a multi-step run.
#[pyclass(name = "RunSummary", module = "ksfem_py")]
pub struct PyRunSummary {
    #[pyo3(get)]
    steps: usize,
    #[pyo3(get)]
    final_time: f64,
    /// cell mass before the first step and after each step
    #[pyo3(get)]
    mass_history: Vec<f64>,
    #[pyo3(get)]
    min_u_history: Vec<f64>,
    #[pyo3(get)]
    min_c_history: Vec<f64>,
    #[pyo3(get)]
    max_fp_iterations: usize,
    #[pyo3(get)]
    total_fp_iterations: usize,
}

impl From<ksfem::stepper::RunSummary> for PyRunSummary {
    fn from(s: ksfem::stepper::RunSummary) -> Self {
        PyRunSummary {
            steps: s.steps,
            final_time: s.final_time,
            mass_history: s.mass_history,
            min_u_history: s.min_u_history,
            min_c_history: s.min_c_history,
            max_fp_iterations: s.max_fp_iterations,
            total_fp_iterations: s.total_fp_iterations,
        }
    }
}

#[pymethods]
impl PyRunSummary {
    fn __repr__(&self) -> String {
        format!(
            "RunSummary(steps={}, final_time={:.6e}, max_fp_iterations={})",
            self.steps, self.final_time, self.max_fp_iterations
        )
    }
}

/// Final fields plus the trajectory record of a configured run.
#[pyclass(name = "SimResult", module = "ksfem_py")]
pub struct PySimResult {
    /// mesh resolution, so `Mesh.uniform(result.m)` recovers the geometry
    #[pyo3(get)]
    m: usize,
    /// resolved time step
    #[pyo3(get)]
    k: f64,
    #[pyo3(get)]
    u: Vec<f64>,
    #[pyo3(get)]
    c: Vec<f64>,
    #[pyo3(get)]
    steps: usize,
    #[pyo3(get)]
    final_time: f64,
    #[pyo3(get)]
    mass_history: Vec<f64>,
    #[pyo3(get)]
    min_u_history: Vec<f64>,
    #[pyo3(get)]
    min_c_history: Vec<f64>,
    #[pyo3(get)]
    max_fp_iterations: usize,
    #[pyo3(get)]
    total_fp_iterations: usize,
}

#[pymethods]
impl PySimResult {
    fn __repr__(&self) -> String {
        format!(
            "SimResult(m={}, steps={}, final_time={:.6e})",
            self.m, self.steps, self.final_time
        )
    }
}

/// One configured time stepper over a fixed mesh; `step` advances a single
/// backward Euler step, `run` advances many and gathers the trajectory.
///
/// Schemes: "standard" (Galerkin), "low" (lumped masses plus algebraic
/// upwinding; keeps nodal values nonnegative), "afc" (low order plus
/// limited antidiffusion). Bound weights q: "gamma-sum-d",
/// "gamma-m-nu:<nu>" or "m-over-k".
#[pyclass(name = "Solver", module = "ksfem_py")]
pub struct PySolver {
    inner: Stepper,
}

#[pymethods]
impl PySolver {
    #[new]
    #[pyo3(signature = (mesh, u, c, k, lam=1.0, scheme="afc", q="m-over-k",
                        fp_tol=None, fp_max_iters=None, decouple_c=false,
                        force_zero_factors=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mesh: &PyMesh,
        u: Vec<f64>,
        c: Vec<f64>,
        k: f64,
        lam: f64,
        scheme: &str,
        q: &str,
        fp_tol: Option<f64>,
        fp_max_iters: Option<usize>,
        decouple_c: bool,
        force_zero_factors: bool,
    ) -> PyResult<Self> {
        let scheme = parse_scheme(scheme).map_err(value_err)?;
        let q: QChoice = q.parse().map_err(value_err)?;
        let mut params = StepParams::new(k, lam, scheme);
        params.q_strategy = q.resolve(k);
        if let Some(tol) = fp_tol {
            params.fp_tol = tol;
        }
        if let Some(n) = fp_max_iters {
            params.fp_max_iters = n;
        }
        if decouple_c {
            params.c_coupling = CCoupling::PreviousStep;
        }
        params.force_zero_factors = force_zero_factors;
        let initial = State { u, c };
        Ok(PySolver {
            inner: Stepper::new(mesh.inner.clone(), initial, params).map_err(value_err)?,
        })
    }

    /// Advance one step; raises RuntimeError when the nonlinear iteration
    /// fails to converge (the state is then left at the last accepted step).
    fn step(&mut self) -> PyResult<PyStepReport> {
        let r = self.inner.step().map_err(runtime_err)?;
        Ok(PyStepReport {
            iterations: r.iterations,
            increments: r.increments,
            min_u: r.min_u,
            min_c: r.min_c,
            mass_before: r.mass_before,
            mass_after: r.mass_after,
        })
    }

    /// Advance n steps and collect the mass and minimum histories.
    fn run(&mut self, n_steps: usize) -> PyResult<PyRunSummary> {
        Ok(self.inner.run(n_steps).map_err(runtime_err)?.into())
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.state().u.clone()
    }

    #[getter]
    fn c(&self) -> Vec<f64> {
        self.inner.state().c.clone()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    #[getter]
    fn steps_taken(&self) -> usize {
        self.inner.steps_taken()
    }

    /// Lumped mass of the current cell field (the conserved quantity of the
    /// stabilized schemes).
    fn mass(&self) -> f64 {
        self.inner.mass(&self.inner.state().u)
    }

    fn lumped_masses(&self) -> Vec<f64> {
        self.inner.lumped_masses().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solver(steps_taken={}, time={:.6e})",
            self.inner.steps_taken(),
            self.inner.time()
        )
    }
}

/// Evaluate a named initial profile at the mesh nodes; returns the cell
/// and chemoattractant fields. Names: "blowup", "gauss5", "sincos".
#[pyfunction]
fn initial_condition(name: &str, mesh: &PyMesh) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let ic: InitialCondition = name.parse().map_err(value_err)?;
    let state = ic.evaluate(&mesh.inner);
    Ok((state.u, state.c))
}

/// Run a whole simulation on a uniform unit-square mesh.
///
/// The time step comes from `k` when given, otherwise from the named rule
/// ("blowup" for k = 1e-5 h^1.01, "h/<c>", "h2/<c>"). An end time `t_end`
/// rounds the step count up and shortens k to land exactly on it; an
/// explicit `steps` wins over the rounding; with neither, 100 steps run.
#[pyfunction]
#[pyo3(signature = (m=32, scheme="afc", lam=1.0, k=None, k_rule="blowup",
                    t_end=None, steps=None, q="m-over-k", fp_tol=None,
                    ic="blowup"))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    m: usize,
    scheme: &str,
    lam: f64,
    k: Option<f64>,
    k_rule: &str,
    t_end: Option<f64>,
    steps: Option<usize>,
    q: &str,
    fp_tol: Option<f64>,
    ic: &str,
) -> PyResult<PySimResult> {
    let mut config = RunConfig {
        m,
        scheme: parse_scheme(scheme).map_err(value_err)?,
        lambda: lam,
        k_rule: match k {
            Some(k) => KRule::Fixed(k),
            None => k_rule.parse().map_err(value_err)?,
        },
        t_end,
        steps,
        q: q.parse().map_err(value_err)?,
        ic: ic.parse().map_err(value_err)?,
        ..RunConfig::default()
    };
    if let Some(tol) = fp_tol {
        config.fp_tol = tol;
    }
    if config.t_end.is_none() && config.steps.is_none() {
        config.steps = Some(100);
    }
    let (mut stepper, n_steps) = config.make_stepper().map_err(value_err)?;
    let k_resolved = stepper.params().k;
    let summary = stepper.run(n_steps).map_err(runtime_err)?;
    Ok(PySimResult {
        m,
        k: k_resolved,
        u: stepper.state().u.clone(),
        c: stepper.state().c.clone(),
        steps: summary.steps,
        final_time: summary.final_time,
        mass_history: summary.mass_history,
        min_u_history: summary.min_u_history,
        min_c_history: summary.min_c_history,
        max_fp_iterations: summary.max_fp_iterations,
        total_fp_iterations: summary.total_fp_iterations,
    })
}

/// Consistent mass matrix as CSR parts (indptr, indices, data).
#[pyfunction]
fn mass_matrix(mesh: &PyMesh) -> CsrParts {
    csr_parts(&assemble_mass(&mesh.inner).0)
}

/// Diagonal of the lumped mass matrix (row sums of the consistent one).
#[pyfunction]
fn lumped_masses(mesh: &PyMesh) -> Vec<f64> {
    assemble_mass(&mesh.inner).1
}

/// Stiffness matrix (discrete negative Laplacian) as CSR parts.
#[pyfunction]
fn stiffness_matrix(mesh: &PyMesh) -> CsrParts {
    csr_parts(&assemble_stiffness(&mesh.inner))
}

/// Chemotaxis transport operator for the given chemoattractant field, as
/// CSR parts. Column sums vanish, so the low-order flow conserves mass.
#[pyfunction]
#[pyo3(signature = (mesh, c, lam=1.0))]
fn convection_matrix(mesh: &PyMesh, c: Vec<f64>, lam: f64) -> PyResult<CsrParts> {
    Ok(csr_parts(
        &assemble_convection(&mesh.inner, &c, lam).map_err(value_err)?,
    ))
}

/// Artificial diffusion built against the transport operator, as CSR parts;
/// symmetric, nonnegative off diagonal, zero row and column sums.
#[pyfunction]
#[pyo3(signature = (mesh, c, lam=1.0))]
fn artificial_diffusion_matrix(mesh: &PyMesh, c: Vec<f64>, lam: f64) -> PyResult<CsrParts> {
    let t = assemble_convection(&mesh.inner, &c, lam).map_err(value_err)?;
    Ok(csr_parts(&assemble_artificial_diffusion(&t)))
}

/// Evaluate a coarse nodal field at the nodes of a nested finer mesh by
/// exact piecewise linear interpolation. Both meshes must be uniform with
/// the fine resolution a multiple of the coarse one.
#[pyfunction]
fn prolong(coarse: &PyMesh, fine: &PyMesh, field: Vec<f64>) -> PyResult<Vec<f64>> {
    prolong_nested(&coarse.inner, &fine.inner, &field).map_err(value_err)
}

/// L2 and full H1 norms of (approx - reference) over the given mesh,
/// measured through the assembled mass and stiffness matrices.
#[pyfunction]
fn error_norms(mesh: &PyMesh, approx: Vec<f64>, reference: Vec<f64>) -> PyResult<(f64, f64)> {
    let ctx = NormContext::new(&mesh.inner);
    let n = ctx.error_norms(&approx, &reference).map_err(value_err)?;
    Ok((n.l2, n.h1))
}

/// Observed convergence order between two (h, error) pairs.
#[pyfunction]
fn observed_order(h_coarse: f64, err_coarse: f64, h_fine: f64, err_fine: f64) -> f64 {
    ksfem::harness::observed_order(h_coarse, err_coarse, h_fine, err_fine)
}

/// Register every class and function; shared by the module entry point and
/// the Rust-side tests, which build the module object directly.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyMeshQuality>()?;
    m.add_class::<PySolver>()?;
    m.add_class::<PyStepReport>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_class::<PySimResult>()?;
    m.add_function(wrap_pyfunction!(initial_condition, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(mass_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(lumped_masses, m)?)?;
    m.add_function(wrap_pyfunction!(stiffness_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(convection_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(artificial_diffusion_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(prolong, m)?)?;
    m.add_function(wrap_pyfunction!(error_norms, m)?)?;
    m.add_function(wrap_pyfunction!(observed_order, m)?)?;
    Ok(())
}

#[pymodule]
fn ksfem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
