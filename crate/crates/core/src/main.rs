//! Command-line driver: single simulations, the steep-spike positivity
//! experiment, convergence sweeps against a nested reference solution, and
//! plain-text mesh dumps.
//!
//! Every subcommand accepts a flat `key=value` config file via `--config`;
//! explicit flags override file entries. Exit code is 0 on success and
//! nonzero when any step or solver fails.

use clap::{Args, Parser, Subcommand};
use ksfem::harness::{
    blowup_study, convergence_study, parse_scheme, read_kv_file, scheme_name, write_fields_csv,
    write_history_csv, write_mesh_dump, write_sweep_csv, write_vtk, ConvergenceSetup,
    HarnessError, InitialCondition, KRule, QChoice, RunConfig, BLOWUP_M, BLOWUP_STEPS,
};
use ksfem::mesh::build_uniform_unit_square;
use ksfem::stepper::Scheme;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ksfem",
    version,
    about = "Finite element solver for the 2D chemotaxis system with backward Euler \
             time stepping and algebraic flux correction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write final fields plus a per-step history
    Run(RunArgs),
    /// Steep-spike experiment: run the schemes at the blow-up step rule and
    /// report nodal minima and negative-node locations
    Blowup(BlowupArgs),
    /// Error sweep against a nested fine reference under both step rules
    Converge(ConvergeArgs),
    /// Write mesh nodes and triangles as plain text
    MeshDump(MeshDumpArgs),
}

fn scheme_arg(s: &str) -> Result<Scheme, String> {
    parse_scheme(s).map_err(|e| e.to_string())
}

fn q_arg(s: &str) -> Result<QChoice, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn ic_arg(s: &str) -> Result<InitialCondition, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn k_rule_arg(s: &str) -> Result<KRule, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn resolutions_arg(s: &str) -> Result<Vec<usize>, String> {
    let list: Result<Vec<usize>, _> = s.split(',').map(|p| p.trim().parse()).collect();
    match list {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("expected comma-separated resolutions, got '{s}'")),
    }
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh resolution (cells per side)
    #[arg(long = "M")]
    m: Option<usize>,
    /// standard | low | afc
    #[arg(long, value_parser = scheme_arg)]
    scheme: Option<Scheme>,
    /// Chemotaxis strength
    #[arg(long)]
    lambda: Option<f64>,
    /// Fixed time step (wins over --k-rule)
    #[arg(long)]
    k: Option<f64>,
    /// blowup | h/<c> | h2/<c>
    #[arg(long = "k-rule", value_parser = k_rule_arg)]
    k_rule: Option<KRule>,
    /// Final time; the step count comes from the step rule and the step is
    /// rescaled so the run lands on T exactly
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Number of steps (default 100 when no final time is given)
    #[arg(long)]
    steps: Option<usize>,
    /// gamma-sum-d | gamma-m-nu:<nu> | m-over-k
    #[arg(long, value_parser = q_arg)]
    q: Option<QChoice>,
    /// Fixed-point stopping tolerance
    #[arg(long = "fp-tol")]
    fp_tol: Option<f64>,
    /// blowup | gauss5 | sincos
    #[arg(long, value_parser = ic_arg)]
    ic: Option<InitialCondition>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write a legacy VTK file of the final fields
    #[arg(long)]
    vtk: bool,
}

#[derive(Args)]
struct BlowupArgs {
    /// Flat key=value config file (keys: M, steps, lambda, scheme)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh resolution (cells per side)
    #[arg(long = "M")]
    m: Option<usize>,
    /// Number of steps at k = 1e-5 h^1.01
    #[arg(long)]
    steps: Option<usize>,
    /// Chemotaxis strength
    #[arg(long)]
    lambda: Option<f64>,
    /// Restrict to one scheme instead of running all three
    #[arg(long, value_parser = scheme_arg)]
    scheme: Option<Scheme>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write legacy VTK files of the final fields
    #[arg(long)]
    vtk: bool,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to one scheme instead of running all three
    #[arg(long, value_parser = scheme_arg)]
    scheme: Option<Scheme>,
    /// gauss5 | sincos | blowup
    #[arg(long, value_parser = ic_arg)]
    ic: Option<InitialCondition>,
    /// Chemotaxis strength
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated coarse resolutions, each dividing the reference
    #[arg(long)]
    resolutions: Option<String>,
    /// Reference mesh resolution
    #[arg(long = "ref-M")]
    ref_m: Option<usize>,
    /// Reference time step
    #[arg(long = "ref-k")]
    ref_k: Option<f64>,
    /// Final time
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// gamma-sum-d | gamma-m-nu:<nu> | m-over-k
    #[arg(long, value_parser = q_arg)]
    q: Option<QChoice>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct MeshDumpArgs {
    /// Mesh resolution (cells per side)
    #[arg(long = "M", default_value_t = 32)]
    m: usize,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Blowup(args) => blowup(args),
        Command::Converge(args) => converge(args),
        Command::MeshDump(args) => mesh_dump(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    match File::create(path) {
        Ok(f) => Ok(BufWriter::new(f)),
        Err(source) => Err(HarnessError::Path {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn relative_mass_drift(mass_history: &[f64]) -> f64 {
    let m0 = mass_history[0];
    mass_history
        .iter()
        .map(|m| ((m - m0) / m0).abs())
        .fold(0.0, f64::max)
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let mut config = RunConfig {
        steps: None,
        ..RunConfig::default()
    };
    if let Some(path) = &args.config {
        config.apply_file(path)?;
    }
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(s) = args.scheme {
        config.scheme = s;
    }
    if let Some(l) = args.lambda {
        config.lambda = l;
    }
    if let Some(rule) = args.k_rule {
        config.k_rule = rule;
    }
    if let Some(k) = args.k {
        config.k_rule = KRule::Fixed(k);
    }
    if let Some(t) = args.t_end {
        config.t_end = Some(t);
    }
    if let Some(n) = args.steps {
        config.steps = Some(n);
    }
    if let Some(q) = args.q {
        config.q = q;
    }
    if let Some(tol) = args.fp_tol {
        config.fp_tol = tol;
    }
    if let Some(ic) = args.ic {
        config.ic = ic;
    }
    if config.steps.is_none() && config.t_end.is_none() {
        config.steps = Some(100);
    }

    let (mut stepper, n_steps) = config.make_stepper()?;
    let k = stepper.params().k;
    println!(
        "run: scheme {}, ic {}, M {}, k {:.6e}, {} steps to T {:.6e}",
        scheme_name(config.scheme),
        config.ic.name(),
        config.m,
        k,
        n_steps,
        k * n_steps as f64
    );
    let summary = stepper.run(n_steps)?;
    let state = stepper.state();
    println!(
        "  fixed point: worst {} iterations per step, {} total",
        summary.max_fp_iterations, summary.total_fp_iterations
    );
    println!(
        "  mass drift {:.3e} relative, final min u {:.6e}, min c {:.6e}",
        relative_mass_drift(&summary.mass_history),
        summary.min_u_history.last().unwrap(),
        summary.min_c_history.last().unwrap()
    );

    std::fs::create_dir_all(&args.out)?;
    let fields = args.out.join("fields.csv");
    write_fields_csv(stepper.mesh(), &state.u, &state.c, create(&fields)?)?;
    let history = args.out.join("history.csv");
    write_history_csv(&summary, k, create(&history)?)?;
    println!("  wrote {} and {}", fields.display(), history.display());
    if args.vtk {
        let vtk = args.out.join("fields.vtk");
        write_vtk(stepper.mesh(), &state.u, &state.c, "chemotaxis fields", create(&vtk)?)?;
        println!("  wrote {}", vtk.display());
    }
    Ok(())
}

fn blowup(args: BlowupArgs) -> Result<(), HarnessError> {
    let mut m = BLOWUP_M;
    let mut steps = BLOWUP_STEPS;
    let mut lambda = 1.0;
    let mut only: Option<Scheme> = None;
    if let Some(path) = &args.config {
        for (key, value) in read_kv_file(path)? {
            match key.as_str() {
                "m" | "M" => {
                    m = value.parse().map_err(|_| {
                        HarnessError::Config(format!("cannot parse number '{value}' for key 'M'"))
                    })?;
                }
                "steps" => {
                    steps = value.parse().map_err(|_| {
                        HarnessError::Config(format!(
                            "cannot parse number '{value}' for key 'steps'"
                        ))
                    })?;
                }
                "lambda" => {
                    lambda = value.parse().map_err(|_| {
                        HarnessError::Config(format!(
                            "cannot parse number '{value}' for key 'lambda'"
                        ))
                    })?;
                }
                "scheme" => only = Some(parse_scheme(&value)?),
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown blowup config key '{other}'"
                    )));
                }
            }
        }
    }
    if let Some(v) = args.m {
        m = v;
    }
    if let Some(v) = args.steps {
        steps = v;
    }
    if let Some(v) = args.lambda {
        lambda = v;
    }
    if let Some(v) = args.scheme {
        only = Some(v);
    }
    let schemes: Vec<Scheme> = match only {
        Some(s) => vec![s],
        None => vec![Scheme::Standard, Scheme::LowOrder, Scheme::Afc],
    };

    let outcomes = blowup_study(m, steps, lambda, &schemes)?;
    std::fs::create_dir_all(&args.out)?;
    let mesh = build_uniform_unit_square(m)?;
    println!(
        "blowup: M {m}, k {:.6e}, {steps} steps, lambda {lambda}",
        outcomes[0].k
    );
    for outcome in &outcomes {
        let name = scheme_name(outcome.scheme);
        let u = &outcome.final_state.u;
        let negatives: Vec<usize> = (0..u.len()).filter(|&i| u[i] < 0.0).collect();
        let (worst, &min) = u
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let [x, y] = mesh.nodes()[worst];
        if negatives.is_empty() {
            println!("  {name}: final min u {min:.6e} at ({x:.4}, {y:.4}), no negative nodes");
        } else {
            println!(
                "  {name}: final min u {min:.6e} at ({x:.4}, {y:.4}), {} negative nodes",
                negatives.len()
            );
        }
        println!(
            "  {name}: mass drift {:.3e} relative, worst fixed-point count {}",
            relative_mass_drift(&outcome.summary.mass_history),
            outcome.summary.max_fp_iterations
        );

        let fields = args.out.join(format!("{name}_fields.csv"));
        write_fields_csv(&mesh, u, &outcome.final_state.c, create(&fields)?)?;
        let history = args.out.join(format!("{name}_history.csv"));
        write_history_csv(&outcome.summary, outcome.k, create(&history)?)?;
        let negatives_path = args.out.join(format!("{name}_negative_nodes.csv"));
        let mut neg = create(&negatives_path)?;
        std::io::Write::write_all(&mut neg, b"x,y,u\n")?;
        for &i in &negatives {
            let [nx, ny] = mesh.nodes()[i];
            std::io::Write::write_fmt(
                &mut neg,
                format_args!("{nx:.16e},{ny:.16e},{:.16e}\n", u[i]),
            )?;
        }
        if args.vtk {
            let vtk = args.out.join(format!("{name}_fields.vtk"));
            write_vtk(&mesh, u, &outcome.final_state.c, "blow-up fields", create(&vtk)?)?;
        }
    }
    println!("  wrote per-scheme fields, history and negative-node tables to {}", args.out.display());
    Ok(())
}

fn converge(args: ConvergeArgs) -> Result<(), HarnessError> {
    let mut base = ConvergenceSetup::new(Scheme::Afc, InitialCondition::Gauss5);
    let mut only: Option<Scheme> = None;
    if let Some(path) = &args.config {
        for (key, value) in read_kv_file(path)? {
            let bad_num = |k: &str, v: &str| {
                HarnessError::Config(format!("cannot parse number '{v}' for key '{k}'"))
            };
            match key.as_str() {
                "scheme" => only = Some(parse_scheme(&value)?),
                "ic" => base.ic = value.parse()?,
                "lambda" => base.lambda = value.parse().map_err(|_| bad_num("lambda", &value))?,
                "resolutions" => {
                    base.resolutions =
                        resolutions_arg(&value).map_err(HarnessError::Config)?;
                }
                "ref-M" | "ref_m" | "ref-m" => {
                    base.ref_m = value.parse().map_err(|_| bad_num("ref-M", &value))?;
                }
                "ref-k" | "ref_k" => {
                    base.ref_k = value.parse().map_err(|_| bad_num("ref-k", &value))?;
                }
                "T" | "t_end" | "t-end" => {
                    base.t_end = value.parse().map_err(|_| bad_num("T", &value))?;
                }
                "q" => base.q = value.parse()?,
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown converge config key '{other}'"
                    )));
                }
            }
        }
    }
    if let Some(s) = args.scheme {
        only = Some(s);
    }
    if let Some(ic) = args.ic {
        base.ic = ic;
    }
    if let Some(l) = args.lambda {
        base.lambda = l;
    }
    if let Some(r) = &args.resolutions {
        base.resolutions = resolutions_arg(r).map_err(HarnessError::Config)?;
    }
    if let Some(m) = args.ref_m {
        base.ref_m = m;
    }
    if let Some(k) = args.ref_k {
        base.ref_k = k;
    }
    if let Some(t) = args.t_end {
        base.t_end = t;
    }
    if let Some(q) = args.q {
        base.q = q;
    }
    let schemes: Vec<Scheme> = match only {
        Some(s) => vec![s],
        None => vec![Scheme::Standard, Scheme::LowOrder, Scheme::Afc],
    };

    std::fs::create_dir_all(&args.out)?;
    for scheme in schemes {
        let mut setup = base.clone();
        setup.scheme = scheme;
        let study = convergence_study(&setup)?;
        let name = scheme_name(scheme);
        println!(
            "converge: scheme {name}, ic {}, reference M {} at k {:.1e}, T {}",
            setup.ic.name(),
            setup.ref_m,
            setup.ref_k,
            setup.t_end
        );
        for (label, rows, suffix) in [
            ("cell-error rule k = h0^2/2", &study.l2_sweep, "l2"),
            ("gradient rule k = h0/20", &study.h1_sweep, "h1"),
        ] {
            println!("  {label}:");
            println!(
                "    {:>5} {:>10} {:>10} {:>6} {:>12} {:>8} {:>12} {:>8}",
                "M", "h0", "k", "steps", "l2_u", "order", "h1_u", "order"
            );
            for (idx, row) in rows.iter().enumerate() {
                let orders = if idx == 0 {
                    (String::new(), String::new())
                } else {
                    let prev = &rows[idx - 1];
                    (
                        format!(
                            "{:.4}",
                            ksfem::harness::observed_order(prev.h0, prev.l2_u, row.h0, row.l2_u)
                        ),
                        format!(
                            "{:.4}",
                            ksfem::harness::observed_order(prev.h0, prev.h1_u, row.h0, row.h1_u)
                        ),
                    )
                };
                println!(
                    "    {:>5} {:>10.4e} {:>10.4e} {:>6} {:>12.6e} {:>8} {:>12.6e} {:>8}",
                    row.m, row.h0, row.k, row.steps, row.l2_u, orders.0, row.h1_u, orders.1
                );
            }
            let path = args
                .out
                .join(format!("{name}_{}_{suffix}.csv", setup.ic.name()));
            write_sweep_csv(rows, create(&path)?)?;
            println!("    wrote {}", path.display());
        }
    }
    Ok(())
}

fn mesh_dump(args: MeshDumpArgs) -> Result<(), HarnessError> {
    let mesh = build_uniform_unit_square(args.m)?;
    write_mesh_dump(&mesh, &args.out)?;
    let q = mesh.quality();
    println!(
        "mesh: M {}, {} nodes, {} triangles, h [{:.6e}, {:.6e}], max angle {:.2} deg, nonobtuse {}",
        args.m,
        mesh.n_nodes(),
        mesh.n_triangles(),
        q.h_min,
        q.h_max,
        q.max_interior_angle.to_degrees(),
        q.nonobtuse
    );
    println!(
        "  wrote {} and {}",
        args.out.join("nodes.txt").display(),
        args.out.join("triangles.txt").display()
    );
    Ok(())
}
