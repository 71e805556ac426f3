use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mona_core::circuit::validate_topology;
use mona_core::coupled::CoupledSystem;
use mona_core::demo::{RECTIFIER_LOAD_NODE, RECTIFIER_NETLIST, RECTIFIER_PROBES};
use mona_core::integrator::{
    convergence_study, run_transient, ConvergenceConfig, NewtonConfig, TimeGrid, TransientResult,
    DEFAULT_REFERENCE_LEVELS,
};

use crate::error::{CliError, CliResult};
use crate::netlist::{parse_netlist, Netlist};
use crate::output::{write_audit, write_eoc, write_trace};
use crate::scenario::{read_netlist, Scenario};

#[derive(Debug, Parser)]
#[command(name = "mona", version, about = "Field-circuit co-simulation with magnetic nodal analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transient run; writes trace.csv and audit.csv.
    Run(RunArgs),
    /// Step-halving study; writes eoc.csv.
    Converge(ConvergeArgs),
    /// Runs the built-in transformer-fed bridge rectifier.
    DemoRectifier(DemoArgs),
    /// Parses and validates a netlist and its meshes.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Newton tolerance on the scaled residual.
    #[arg(long, default_value_t = 1e-12)]
    newton_tol: f64,
    #[arg(long, default_value_t = NewtonConfig::default().max_iter)]
    max_iter: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl SolverArgs {
    fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton_tol,
            max_iter: self.max_iter,
            ..NewtonConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Mesh file used for every field device instead of its FIELD= reference.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Comma-separated `name=func(arg)` list with func one of psi, u, v, i, q.
    #[arg(long, value_delimiter = ',')]
    probes: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    /// Defaults to the built-in rectifier.
    #[arg(long)]
    netlist: Option<PathBuf>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Coarsest step size.
    #[arg(long, default_value_t = 5e-3)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    t_end: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 3)]
    halvings: u32,
    /// The reference run uses the finest step size divided by 2^levels.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_LEVELS)]
    reference_levels: u32,
    /// The first probe is measured; defaults to the rectifier's load-node flux.
    #[arg(long, value_delimiter = ',')]
    probes: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 1.0 / 12000.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    t_end: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    netlist: PathBuf,
    #[arg(long)]
    mesh: Option<PathBuf>,
}

fn base_dir(netlist: &Path) -> PathBuf {
    netlist.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

fn log_topology(sys: &CoupledSystem) {
    for issue in validate_topology(&sys.graph).issues {
        log::info!("{issue}");
    }
}

fn write_run(sc: &Scenario, result: &TransientResult) -> CliResult<()> {
    write_trace(&sc.out_dir.join("trace.csv"), result)?;
    write_audit(&sc.out_dir.join("audit.csv"), result)
}

fn transient(sc: &Scenario) -> CliResult<()> {
    let sys = sc.build_system()?;
    log_topology(&sys);
    let probes = sc.resolve_probes(&sys)?;
    create_dir(&sc.out_dir)?;
    log::info!("{} unknowns, {} steps of {}", sys.dim(), sc.grid.steps, sc.grid.tau);
    match run_transient(&sys, &sc.grid, &probes, &sc.newton) {
        Ok(result) => {
            write_run(sc, &result)?;
            let peak = result.peak_supplied_power();
            let eps = result.max_abs_eps_h();
            let iters = result.records.iter().map(|r| r.newton_iters).max().unwrap_or(0);
            println!("steps            {}", result.records.len());
            println!("max |eps_H|      {eps:e}");
            println!("peak power       {peak:e}");
            println!("max |eps_H|/peak {:e}", eps / peak);
            println!("max Newton iters {iters}");
            println!("wrote {}", sc.out_dir.display());
            Ok(())
        }
        Err(abort) => {
            if let Err(e) = write_run(sc, &abort.partial) {
                log::error!("could not write partial results: {e}");
            } else {
                log::warn!("partial results up to t = {} written", abort.partial.times().last().unwrap_or(&sc.grid.t0));
            }
            Err(abort.error.into())
        }
    }
}

fn run(args: RunArgs) -> CliResult<()> {
    let netlist = read_netlist(&args.netlist)?;
    let grid = TimeGrid::new(args.t0, args.t_end, args.tau)?;
    let mut sc = Scenario::new(netlist, base_dir(&args.netlist), grid, args.probes, args.solver.out.clone())?;
    sc.mesh = args.mesh;
    sc.newton = args.solver.newton();
    transient(&sc)
}

fn demo(args: DemoArgs) -> CliResult<()> {
    let netlist = parse_netlist(RECTIFIER_NETLIST)?;
    let grid = TimeGrid::new(0.0, args.t_end, args.tau)?;
    let probes = RECTIFIER_PROBES.iter().map(|s| s.to_string()).collect();
    let mut sc = Scenario::new(netlist, PathBuf::new(), grid, probes, args.solver.out.clone())?;
    sc.newton = args.solver.newton();
    create_dir(&sc.out_dir)?;
    let path = sc.out_dir.join("rectifier.net");
    std::fs::write(&path, RECTIFIER_NETLIST).map_err(|e| CliError::output(&path, e))?;
    transient(&sc)
}

fn converge(args: ConvergeArgs) -> CliResult<()> {
    let (netlist, dir, default_probe): (Netlist, PathBuf, Option<String>) = match &args.netlist {
        Some(path) => (read_netlist(path)?, base_dir(path), None),
        None => (
            parse_netlist(RECTIFIER_NETLIST)?,
            PathBuf::new(),
            Some(format!("psi{RECTIFIER_LOAD_NODE}=psi({RECTIFIER_LOAD_NODE})")),
        ),
    };
    let probe = match (args.probes.first(), default_probe) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => p,
        (None, None) => return Err(CliError::Invalid("converge needs --probes".into())),
    };
    let grid = TimeGrid::new(args.t0, args.t_end, args.tau)?;
    let mut sc = Scenario::new(netlist, dir, grid, vec![probe], args.solver.out.clone())?;
    sc.mesh = args.mesh;
    sc.newton = args.solver.newton();
    let sys = sc.build_system()?;
    log_topology(&sys);
    let probe = sc.resolve_probes(&sys)?.remove(0);
    create_dir(&sc.out_dir)?;
    let table = convergence_study(
        &sys,
        &ConvergenceConfig {
            grid,
            halvings: args.halvings,
            reference_levels: args.reference_levels,
            probe,
            newton: sc.newton,
        },
    )?;
    write_eoc(&sc.out_dir.join("eoc.csv"), &table)?;
    println!("{:>12} {:>12} {:>7} {:>12}", "tau", "eps_tau", "eoc", "max_eps_H");
    for r in &table.rows {
        let eoc = r.eoc.map(|e| format!("{e:.2}")).unwrap_or_else(|| "--".into());
        println!("{:>12.6e} {:>12.4e} {eoc:>7} {:>12.4e}", r.tau, r.eps_tau, r.max_eps_h);
    }
    println!("reference tau {:e}", table.reference_tau);
    Ok(())
}

fn check(args: CheckArgs) -> CliResult<()> {
    let netlist = read_netlist(&args.netlist)?;
    let grid = TimeGrid::new(0.0, 1.0, 1.0)?;
    let mut sc = Scenario::new(netlist, base_dir(&args.netlist), grid, vec![], PathBuf::new())?;
    sc.mesh = args.mesh;
    let sys = sc.build_system()?;
    for issue in validate_topology(&sys.graph).issues {
        println!("{issue}");
    }
    println!(
        "ok: {} elements, {} nodes, {} unknowns ({} field)",
        sc.netlist.elements.len(),
        sc.netlist.n_nodes(),
        sys.dim(),
        sys.layout.n_a
    );
    Ok(())
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("MONA_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 for parse or validation failures, 2 for solver
/// failures.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Converge(a) => converge(a),
        Command::DemoRectifier(a) => demo(a),
        Command::Check(a) => check(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
