//! Backward Euler time stepping for the coupled cell/chemoattractant system.
//!
//! Each step solves the nonlinear system by a fixed-point iteration: with
//! the previous step as initial guess, the cell equation is solved with the
//! convection field frozen at the current chemoattractant iterate, then the
//! chemoattractant equation is solved against the fresh cell iterate, until
//! both relative sup-norm increments drop below the tolerance.
//!
//! Three spatial discretizations share this loop:
//! - `Standard`: consistent mass, plain Galerkin convection.
//! - `LowOrder`: lumped mass plus artificial diffusion D built from the
//!   convection matrix; unconditionally positivity preserving.
//! - `Afc`: the low-order matrix with the limited antidiffusive fluxes of
//!   [`crate::limiter`] on the right side.
//!
//! The chemoattractant system matrix is constant over a run, so it is
//! factorized once when Gauss-Seidel does not apply.

use crate::assembly::{
    adjacency_pattern, assemble_artificial_diffusion_into, assemble_convection_into,
    assemble_mass, assemble_stiffness, AssemblyError,
};
use crate::limiter::{
    antidiffusive_fluxes, compute_q, correction_factors, limited_antidiffusion, LimiterError,
    QStrategy, QWeights,
};
use crate::mesh::Mesh;
use crate::sparse::{inf_norm, BandLu, SparseError, SparseMatrix};
use thiserror::Error;

pub const DEFAULT_FP_TOL: f64 = 1e-8;
pub const DEFAULT_FP_MAX_ITERS: usize = 100;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum StepperError {
    #[error("state vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("invalid stepper parameter: {0}")]
    InvalidParameter(String),
    #[error("fixed-point iteration did not converge: {iterations} iterations, last increment {last_increment:.3e}")]
    FixedPointFailed {
        iterations: usize,
        last_increment: f64,
    },
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Limiter(#[from] LimiterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Standard,
    LowOrder,
    Afc,
}

/// Which cell iterate feeds the chemoattractant right side: the one just
/// computed in this sweep, or the previous time step (which decouples the
/// equations within a step).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CCoupling {
    CurrentIterate,
    PreviousStep,
}

#[derive(Debug, Clone)]
pub struct StepParams {
    pub k: f64,
    pub lambda: f64,
    pub scheme: Scheme,
    pub q_strategy: QStrategy,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub solver_tol: f64,
    pub c_coupling: CCoupling,
    /// Run the Afc path but force every correction factor to zero; the
    /// result must match LowOrder bit for bit.
    pub force_zero_factors: bool,
}

impl StepParams {
    pub fn new(k: f64, lambda: f64, scheme: Scheme) -> Self {
        StepParams {
            k,
            lambda,
            scheme,
            q_strategy: QStrategy::MassOverK(k),
            fp_tol: DEFAULT_FP_TOL,
            fp_max_iters: DEFAULT_FP_MAX_ITERS,
            solver_tol: DEFAULT_SOLVER_TOL,
            c_coupling: CCoupling::CurrentIterate,
            force_zero_factors: false,
        }
    }

    fn validate(&self) -> Result<(), StepperError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(StepperError::InvalidParameter(format!(
                "time step must be positive and finite, got {}",
                self.k
            )));
        }
        if !self.lambda.is_finite() {
            return Err(StepperError::InvalidParameter(format!(
                "chemotactic sensitivity must be finite, got {}",
                self.lambda
            )));
        }
        if !(self.fp_tol > 0.0 && self.solver_tol > 0.0) {
            return Err(StepperError::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        if self.fp_max_iters == 0 {
            return Err(StepperError::InvalidParameter(
                "fixed-point iteration budget must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct State {
    pub u: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub iterations: usize,
    /// max of the two relative sup-norm increments, one entry per iteration
    pub increments: Vec<f64>,
    pub min_u: f64,
    pub min_c: f64,
    pub mass_before: f64,
    pub mass_after: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    /// cell mass before the first step and after each step
    pub mass_history: Vec<f64>,
    pub min_u_history: Vec<f64>,
    pub min_c_history: Vec<f64>,
    pub max_fp_iterations: usize,
    pub total_fp_iterations: usize,
}

enum CSolver {
    /// strictly column dominant: route through the iterative path
    Iterative,
    /// constant matrix, factored once
    Factored(Box<BandLu>),
}

pub struct Stepper {
    mesh: Mesh,
    params: StepParams,
    mass: SparseMatrix,
    lumped: Vec<f64>,
    /// mass part plus k * stiffness of the cell system; the convection and
    /// diffusion parts are subtracted per fixed-point iteration
    a1_base: SparseMatrix,
    a2: SparseMatrix,
    c_solver: CSolver,
    /// last banded factorization of the cell system; the matrix drifts
    /// slowly between fixed-point iterations, so a stale factorization
    /// usually still converges under iterative refinement (the residual
    /// contract is checked either way) and saves the refactorization
    a1_lu: Option<Box<BandLu>>,
    gamma: Vec<f64>,
    /// bound weights when the strategy does not depend on D
    const_q: Option<QWeights>,
    t_scratch: SparseMatrix,
    d_scratch: SparseMatrix,
    state: State,
    time: f64,
    steps_taken: usize,
}

/// Secant estimate of the fixed-point contraction factor from the last two
/// difference vectors of the iteration, taken jointly over both fields.
/// Returns the extrapolation weight rho / (1 - rho) when the sequence is
/// slow (|rho| >= 0.5) but convincingly geometric; None keeps the plain
/// iteration, so fast steps are untouched.
fn secant_factor(d_v: &[f64], d_w: &[f64], pd_v: &[f64], pd_w: &[f64]) -> Option<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let den = dot(pd_v, pd_v) + dot(pd_w, pd_w);
    if den == 0.0 {
        return None;
    }
    let rho = (dot(d_v, pd_v) + dot(d_w, pd_w)) / den;
    if !(0.5..=0.995).contains(&rho.abs()) {
        return None;
    }
    let mut err = 0.0;
    let mut mag = 0.0;
    for (d, p) in d_v.iter().zip(pd_v).chain(d_w.iter().zip(pd_w)) {
        let e = d - rho * p;
        err += e * e;
        mag += d * d;
    }
    if mag == 0.0 || err > 0.25 * mag {
        return None;
    }
    Some(rho / (1.0 - rho))
}

/// max_i |new_i - old_i| / ||new||_inf, guarded against a zero field.
fn relative_increment(new: &[f64], old: &[f64]) -> f64 {
    let mut diff = 0.0f64;
    for (a, b) in new.iter().zip(old) {
        diff = diff.max((a - b).abs());
    }
    diff / inf_norm(new).max(1e-300)
}

pub fn min_nodal(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

impl Stepper {
    pub fn new(mesh: Mesh, initial: State, params: StepParams) -> Result<Self, StepperError> {
        params.validate()?;
        let n = mesh.n_nodes();
        if initial.u.len() != n {
            return Err(StepperError::LengthMismatch {
                got: initial.u.len(),
                expected: n,
            });
        }
        if initial.c.len() != n {
            return Err(StepperError::LengthMismatch {
                got: initial.c.len(),
                expected: n,
            });
        }
        let (mass, lumped) = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        let k = params.k;
        let lumped_diag = SparseMatrix::from_diagonal(&lumped);
        let (a1_base, a2) = match params.scheme {
            Scheme::Standard => (
                mass.add_scaled(&stiffness, k)?,
                mass.scaled(1.0 + k).add_scaled(&stiffness, k)?,
            ),
            Scheme::LowOrder | Scheme::Afc => (
                lumped_diag.add_scaled(&stiffness, k)?,
                lumped_diag.scaled(1.0 + k).add_scaled(&stiffness, k)?,
            ),
        };
        let c_solver = if a2.column_diagonal_dominance().strict {
            CSolver::Iterative
        } else {
            CSolver::Factored(Box::new(a2.factorize()?))
        };
        let gamma: Vec<f64> = if params.scheme == Scheme::Afc {
            (0..n).map(|i| mesh.gamma(i)).collect()
        } else {
            Vec::new()
        };
        let pattern = adjacency_pattern(&mesh);
        let const_q = match (params.scheme, params.q_strategy) {
            (Scheme::Afc, QStrategy::GammaSumD) => None,
            (Scheme::Afc, strategy) => {
                // D-independent weights: any matrix with the right size works
                Some(compute_q(&gamma, &pattern, &lumped, strategy)?)
            }
            _ => None,
        };
        let d_scratch = pattern.clone();
        Ok(Stepper {
            mesh,
            params,
            mass,
            lumped,
            a1_base,
            a2,
            c_solver,
            a1_lu: None,
            gamma,
            const_q,
            t_scratch: pattern,
            d_scratch,
            state: initial,
            time: 0.0,
            steps_taken: 0,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn params(&self) -> &StepParams {
        &self.params
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn lumped_masses(&self) -> &[f64] {
        &self.lumped
    }

    /// Discrete mass sum_i m_i v_i; the quantity every scheme conserves.
    pub fn mass(&self, v: &[f64]) -> f64 {
        self.lumped.iter().zip(v).map(|(m, x)| m * x).sum()
    }

    fn solve_u_system(&mut self, a1: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, StepperError> {
        if a1.column_diagonal_dominance().strict {
            return Ok(a1.solve(rhs, self.params.solver_tol)?.0);
        }
        let b_norm = inf_norm(rhs);
        if b_norm == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        if let Some(lu) = &self.a1_lu {
            if let Ok((x, _)) = lu.solve_refined(a1, rhs, self.params.solver_tol, b_norm) {
                return Ok(x);
            }
        }
        let lu = a1.factorize()?;
        let x = lu
            .solve_refined(a1, rhs, self.params.solver_tol, b_norm)?
            .0;
        self.a1_lu = Some(Box::new(lu));
        Ok(x)
    }

    fn solve_c_system(&self, rhs: &[f64]) -> Result<Vec<f64>, StepperError> {
        match &self.c_solver {
            CSolver::Iterative => Ok(self.a2.solve(rhs, self.params.solver_tol)?.0),
            CSolver::Factored(lu) => {
                let b_norm = inf_norm(rhs);
                if b_norm == 0.0 {
                    return Ok(vec![0.0; rhs.len()]);
                }
                Ok(lu
                    .solve_refined(&self.a2, rhs, self.params.solver_tol, b_norm)?
                    .0)
            }
        }
    }

    /// Limited antidiffusive term for the Afc right side; zeros for the
    /// forced-zero diagnostic mode.
    fn afc_flux_term(&mut self, v: &[f64]) -> Result<Vec<f64>, StepperError> {
        if self.params.force_zero_factors {
            return Ok(vec![0.0; v.len()]);
        }
        let fluxes = antidiffusive_fluxes(&self.d_scratch, v)?;
        let q = match &self.const_q {
            Some(q) => q.clone(),
            None => compute_q(
                &self.gamma,
                &self.d_scratch,
                &self.lumped,
                self.params.q_strategy,
            )?,
        };
        let work = correction_factors(&self.d_scratch, &fluxes, v, &q)?;
        Ok(limited_antidiffusion(&self.d_scratch, &fluxes, &work))
    }

    pub fn step(&mut self) -> Result<StepReport, StepperError> {
        let n = self.mesh.n_nodes();
        let k = self.params.k;
        let u_prev = self.state.u.clone();
        let c_prev = self.state.c.clone();
        let mass_before = self.mass(&u_prev);

        // constant parts of the right sides
        let rhs1_mass: Vec<f64> = match self.params.scheme {
            Scheme::Standard => self.mass.spmv(&u_prev)?,
            _ => self.lumped.iter().zip(&u_prev).map(|(m, u)| m * u).collect(),
        };
        let rhs2_mass: Vec<f64> = match self.params.scheme {
            Scheme::Standard => self.mass.spmv(&c_prev)?,
            _ => self.lumped.iter().zip(&c_prev).map(|(m, c)| m * c).collect(),
        };

        let mut v = u_prev.clone();
        let mut w = c_prev.clone();
        let mut increments = Vec::new();
        let mut converged = false;
        // On steep fields the limiter feedback can slow the iteration to a
        // near-unit contraction or flip it into oscillation. Both show up
        // as successive difference vectors that are nearly parallel; a
        // secant estimate of the contraction factor then allows jumping
        // toward the fixed point. Convergence is always judged on a full,
        // unextrapolated application of the map.
        let mut prev_diff: Option<(Vec<f64>, Vec<f64>)> = None;
        while increments.len() < self.params.fp_max_iters {
            assemble_convection_into(&self.mesh, &w, self.params.lambda, &mut self.t_scratch)?;
            let mut a1 = self.a1_base.add_scaled(&self.t_scratch, -k)?;
            let mut rhs1 = rhs1_mass.clone();
            match self.params.scheme {
                Scheme::Standard => {}
                Scheme::LowOrder | Scheme::Afc => {
                    assemble_artificial_diffusion_into(&self.t_scratch, &mut self.d_scratch);
                    a1 = a1.add_scaled(&self.d_scratch, -k)?;
                    let fbar = match self.params.scheme {
                        Scheme::Afc => self.afc_flux_term(&v)?,
                        _ => vec![0.0; n],
                    };
                    for (r, f) in rhs1.iter_mut().zip(&fbar) {
                        *r += k * f;
                    }
                }
            }
            let v_next = self.solve_u_system(&a1, &rhs1)?;

            let coupling: &[f64] = match self.params.c_coupling {
                CCoupling::CurrentIterate => &v_next,
                CCoupling::PreviousStep => &u_prev,
            };
            let mut rhs2 = rhs2_mass.clone();
            match self.params.scheme {
                Scheme::Standard => {
                    let mv = self.mass.spmv(coupling)?;
                    for (r, m) in rhs2.iter_mut().zip(&mv) {
                        *r += k * m;
                    }
                }
                _ => {
                    for i in 0..n {
                        rhs2[i] += k * self.lumped[i] * coupling[i];
                    }
                }
            }
            let w_next = self.solve_c_system(&rhs2)?;

            let inc = relative_increment(&v_next, &v).max(relative_increment(&w_next, &w));
            increments.push(inc);
            if inc < self.params.fp_tol {
                v = v_next;
                w = w_next;
                converged = true;
                break;
            }
            let d_v: Vec<f64> = v_next.iter().zip(&v).map(|(a, b)| a - b).collect();
            let d_w: Vec<f64> = w_next.iter().zip(&w).map(|(a, b)| a - b).collect();
            let extrapolated = prev_diff
                .as_ref()
                .and_then(|(pv, pw)| secant_factor(&d_v, &d_w, pv, pw));
            match extrapolated {
                Some(factor) => {
                    v = v_next;
                    w = w_next;
                    for (x, d) in v.iter_mut().zip(&d_v) {
                        *x += factor * d;
                    }
                    for (x, d) in w.iter_mut().zip(&d_w) {
                        *x += factor * d;
                    }
                    // the jump breaks the difference sequence; start fresh
                    prev_diff = None;
                }
                None => {
                    v = v_next;
                    w = w_next;
                    prev_diff = Some((d_v, d_w));
                }
            }
        }
        if !converged {
            return Err(StepperError::FixedPointFailed {
                iterations: increments.len(),
                last_increment: *increments.last().unwrap_or(&f64::NAN),
            });
        }

        self.state = State { u: v, c: w };
        self.time += k;
        self.steps_taken += 1;
        Ok(StepReport {
            iterations: increments.len(),
            increments,
            min_u: min_nodal(&self.state.u),
            min_c: min_nodal(&self.state.c),
            mass_before,
            mass_after: self.mass(&self.state.u),
        })
    }

    pub fn run(&mut self, n_steps: usize) -> Result<RunSummary, StepperError> {
        let mut mass_history = vec![self.mass(&self.state.u)];
        let mut min_u_history = vec![min_nodal(&self.state.u)];
        let mut min_c_history = vec![min_nodal(&self.state.c)];
        let mut max_fp = 0;
        let mut total_fp = 0;
        for _ in 0..n_steps {
            let report = self.step()?;
            mass_history.push(report.mass_after);
            min_u_history.push(report.min_u);
            min_c_history.push(report.min_c);
            max_fp = max_fp.max(report.iterations);
            total_fp += report.iterations;
        }
        Ok(RunSummary {
            steps: n_steps,
            final_time: self.time,
            mass_history,
            min_u_history,
            min_c_history,
            max_fp_iterations: max_fp,
            total_fp_iterations: total_fp,
        })
    }
}
