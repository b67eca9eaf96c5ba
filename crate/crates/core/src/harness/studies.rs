//! Canned experiments: the blow-up comparison of the three schemes and the
//! mesh-refinement convergence study against a fine reference run.

use super::config::{HarnessError, InitialCondition, KRule, QChoice};
use super::io::SweepRow;
use super::norms::{prolong_nested, NormContext};
use crate::mesh::build_uniform_unit_square;
use crate::stepper::{RunSummary, Scheme, State, StepParams, Stepper};

/// Default resolution of the blow-up comparison.
pub const BLOWUP_M: usize = 120;
/// Steps of the blow-up comparison; the spike is about to leave the
/// resolvable range there.
pub const BLOWUP_STEPS: usize = 63;
/// Reference grid of the convergence study.
pub const CONV_REF_M: usize = 128;
/// Reference time step of the convergence study.
pub const CONV_REF_K: f64 = 1e-5;
/// End time of the convergence study.
pub const CONV_T_END: f64 = 0.01;
/// Step rule of the L2 sweep: k = h0^2 / 2 keeps the first-order time
/// error below the second-order space error.
pub const L2_SWEEP_RULE: KRule = KRule::H2Over(2.0);
/// Step rule of the H1 sweep: k = h0 / 20 matches first order in both.
pub const H1_SWEEP_RULE: KRule = KRule::HOver(20.0);

#[derive(Debug, Clone)]
pub struct BlowupOutcome {
    pub scheme: Scheme,
    pub k: f64,
    pub summary: RunSummary,
    pub final_state: State,
}

/// Run the steep-spike initial data under each scheme with the blow-up
/// step rule and record minima and masses along the way.
pub fn blowup_study(
    m: usize,
    steps: usize,
    lambda: f64,
    schemes: &[Scheme],
) -> Result<Vec<BlowupOutcome>, HarnessError> {
    let k = KRule::Blowup.base_step(m)?;
    let mesh = build_uniform_unit_square(m)?;
    let initial = InitialCondition::Blowup.evaluate(&mesh);
    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let mut params = StepParams::new(k, lambda, scheme);
        params.q_strategy = QChoice::MassOverK.resolve(k);
        let mut stepper = Stepper::new(mesh.clone(), initial.clone(), params)?;
        let summary = stepper.run(steps)?;
        out.push(BlowupOutcome {
            scheme,
            k,
            summary,
            final_state: stepper.state().clone(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub scheme: Scheme,
    pub ic: InitialCondition,
    pub lambda: f64,
    pub resolutions: Vec<usize>,
    pub ref_m: usize,
    pub ref_k: f64,
    pub t_end: f64,
    pub q: QChoice,
}

impl ConvergenceSetup {
    pub fn new(scheme: Scheme, ic: InitialCondition) -> Self {
        ConvergenceSetup {
            scheme,
            ic,
            lambda: 1.0,
            resolutions: vec![8, 16, 32],
            ref_m: CONV_REF_M,
            ref_k: CONV_REF_K,
            t_end: CONV_T_END,
            q: QChoice::MassOverK,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub scheme: Scheme,
    pub ic: InitialCondition,
    /// rows under the L2-oriented step rule k = h0^2 / 2
    pub l2_sweep: Vec<SweepRow>,
    /// rows under the H1-oriented step rule k = h0 / 20
    pub h1_sweep: Vec<SweepRow>,
    /// trajectory records for the reference run and every sweep run, so
    /// conservation and iteration behavior stay checkable after the fact
    pub ref_summary: RunSummary,
    pub l2_summaries: Vec<RunSummary>,
    pub h1_summaries: Vec<RunSummary>,
}

fn run_case(
    m: usize,
    setup: &ConvergenceSetup,
    rule: KRule,
) -> Result<(State, RunSummary, f64, usize), HarnessError> {
    let (k, steps) = rule.resolve(m, Some(setup.t_end), None)?;
    let mesh = build_uniform_unit_square(m)?;
    let initial = setup.ic.evaluate(&mesh);
    let mut params = StepParams::new(k, setup.lambda, setup.scheme);
    params.q_strategy = setup.q.resolve(k);
    let mut stepper = Stepper::new(mesh, initial, params)?;
    let summary = stepper.run(steps)?;
    Ok((stepper.state().clone(), summary, k, steps))
}

/// Solve to the end time on each coarse grid and compare against the same
/// scheme on the reference grid, in both norms and under both step rules.
pub fn convergence_study(setup: &ConvergenceSetup) -> Result<ConvergenceStudy, HarnessError> {
    if setup.resolutions.is_empty() {
        return Err(HarnessError::Config(
            "convergence study needs at least one resolution".into(),
        ));
    }
    for &m in &setup.resolutions {
        if m == 0 || !setup.ref_m.is_multiple_of(m) {
            return Err(HarnessError::Config(format!(
                "resolution {m} does not divide the reference resolution {}",
                setup.ref_m
            )));
        }
    }
    let (reference, ref_summary, _, _) = run_case(setup.ref_m, setup, KRule::Fixed(setup.ref_k))?;
    let fine_mesh = build_uniform_unit_square(setup.ref_m)?;
    let ctx = NormContext::new(&fine_mesh);

    let mut study = ConvergenceStudy {
        scheme: setup.scheme,
        ic: setup.ic,
        l2_sweep: Vec::new(),
        h1_sweep: Vec::new(),
        ref_summary,
        l2_summaries: Vec::new(),
        h1_summaries: Vec::new(),
    };
    for (rule, sweep, summaries) in [
        (L2_SWEEP_RULE, &mut study.l2_sweep, &mut study.l2_summaries),
        (H1_SWEEP_RULE, &mut study.h1_sweep, &mut study.h1_summaries),
    ] {
        for &m in &setup.resolutions {
            let (state, summary, k, steps) = run_case(m, setup, rule)?;
            summaries.push(summary);
            let coarse_mesh = build_uniform_unit_square(m)?;
            let u_fine = prolong_nested(&coarse_mesh, &fine_mesh, &state.u)?;
            let c_fine = prolong_nested(&coarse_mesh, &fine_mesh, &state.c)?;
            let eu = ctx.error_norms(&u_fine, &reference.u)?;
            let ec = ctx.error_norms(&c_fine, &reference.c)?;
            sweep.push(SweepRow {
                m,
                h0: 1.0 / m as f64,
                k,
                steps,
                l2_u: eu.l2,
                h1_u: eu.h1,
                l2_c: ec.l2,
                h1_c: ec.h1,
            });
        }
    }
    Ok(study)
}
