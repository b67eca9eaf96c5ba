//! Experiment harness: run configuration, canned studies, error norms
//! against nested reference grids, and file output.

pub mod config;
pub mod io;
pub mod norms;
pub mod studies;

pub use config::{
    parse_scheme, read_kv_file, scheme_name, HarnessError, InitialCondition, KRule, QChoice,
    RunConfig,
};
pub use io::{write_fields_csv, write_history_csv, write_mesh_dump, write_sweep_csv, write_vtk, SweepRow};
pub use norms::{observed_order, prolong_nested, ErrorNorms, NormContext};
pub use studies::{
    blowup_study, convergence_study, BlowupOutcome, ConvergenceSetup, ConvergenceStudy,
    BLOWUP_M, BLOWUP_STEPS, CONV_REF_K, CONV_REF_M, CONV_T_END, H1_SWEEP_RULE, L2_SWEEP_RULE,
};
