use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcvqe_cli::config::{Generator, Method, RunConfig, Task};
use dcvqe_cli::pipeline::{execute, exit_code, summary};
use dcvqe_core::adaptvqe::{ConvergenceSpec, PoolKind};
use dcvqe_core::dmet::CostKind;
use dcvqe_core::solver::{subproblem_convergence, SolverConfig};
use dcvqe_core::Result;

/// Divide-and-conquer VQE: many-body expansion and density matrix embedding
/// around an ADAPT-VQE statevector solver.
#[derive(Parser)]
#[command(name = "dcvqe", version)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV, report.json, traces and the subproblem cache [default: dcvqe-out].
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Compare with exact diagonalization of the full system (default).
    #[arg(long, global = true, overrides_with = "no_oracle")]
    oracle: bool,
    /// Skip the exact reference.
    #[arg(long, global = true)]
    no_oracle: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run everything described by a TOML config file.
    Run { config: PathBuf },
    /// Potential energy scan over a generated geometry family.
    Scan(ScanArgs),
    /// Many-body expansion over a fragment plan.
    Mbe(MbeArgs),
    /// Density matrix embedding over a fragment plan.
    Dmet(DmetArgs),
    /// ADAPT-VQE on the whole system.
    Adapt(AdaptArgs),
    /// Exact diagonalization of the whole system.
    Fci(InputArgs),
}

#[derive(Args)]
struct InputArgs {
    /// XYZ geometry (Å).
    #[arg(long, conflicts_with = "fcidump", required_unless_present = "fcidump")]
    geometry: Option<PathBuf>,
    /// FCIDUMP integrals.
    #[arg(long)]
    fcidump: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Adapt,
    Fci,
    Rhf,
}

#[derive(Args)]
struct SolverArgs {
    /// Subproblem solver.
    #[arg(long, value_enum, default_value = "adapt")]
    solver: SolverKind,
    /// ADAPT operator pool.
    #[arg(long, default_value = "spin_adapted", value_parser = parse_pool)]
    pool: PoolKind,
    /// Pool-gradient norm threshold.
    #[arg(long, default_value_t = subproblem_convergence().grad_norm_eps)]
    grad_eps: f64,
    /// Energy variance threshold, hartree².
    #[arg(long, default_value_t = subproblem_convergence().variance_eps)]
    variance_eps: f64,
    /// Maximum ADAPT iterations.
    #[arg(long, default_value_t = subproblem_convergence().max_iterations)]
    max_iter: usize,
}

fn parse_pool(s: &str) -> std::result::Result<PoolKind, String> {
    s.parse().map_err(|e: dcvqe_core::Error| e.to_string())
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        match self.solver {
            SolverKind::Fci => SolverConfig::Fci,
            SolverKind::Rhf => SolverConfig::Rhf,
            SolverKind::Adapt => SolverConfig::Adapt {
                pool: self.pool,
                convergence: ConvergenceSpec {
                    grad_norm_eps: self.grad_eps,
                    variance_eps: self.variance_eps,
                    max_iterations: self.max_iter,
                    ..subproblem_convergence()
                },
            },
        }
    }
}

#[derive(Args)]
struct ScanArgs {
    /// Hydrogen atoms in the chain.
    #[arg(long, default_value_t = 10)]
    atoms: usize,
    /// Atoms per fragment.
    #[arg(long, default_value_t = 2)]
    fragment_size: usize,
    /// First spacing, Å.
    #[arg(long, default_value_t = 0.5)]
    start: f64,
    /// Last spacing, Å.
    #[arg(long, default_value_t = 3.0)]
    stop: f64,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    /// Methods per point, comma separated (mbeN, dmet, adapt, rhf).
    #[arg(long, value_delimiter = ',', default_value = "mbe2,mbe3,dmet")]
    methods: Vec<Method>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct MbeArgs {
    /// XYZ geometry (Å).
    #[arg(long)]
    geometry: PathBuf,
    /// Fragment plan (TOML).
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Add the mean-field correction for the truncated expansion.
    #[arg(long)]
    rhf_correction: bool,
    /// Reuse subproblem energies from the output directory's cache.
    #[arg(long)]
    cache: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    ElectronCount,
    FragmentOnly,
}

#[derive(Args)]
struct DmetArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fragment plan (TOML); fragments list atoms, or orbitals for FCIDUMP input.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, value_enum, default_value = "electron-count")]
    cost: CostArg,
    /// Target electron-count error.
    #[arg(long, default_value_t = 1e-5)]
    electron_tol: f64,
    /// Embedding sweep budget.
    #[arg(long, default_value_t = 50)]
    max_iterations: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct AdaptArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

fn with_input(mut config: RunConfig, input: InputArgs) -> RunConfig {
    config.geometry = input.geometry;
    config.fcidump = input.fcidump;
    config
}

fn build_config(cli: Cli) -> Result<RunConfig> {
    let mut config = match cli.command {
        Command::Run { config } => RunConfig::read(&config)?,
        Command::Scan(a) => {
            let mut c = RunConfig::new(Task::Scan);
            c.scan.generator = Generator::Chain { atoms: a.atoms };
            c.scan.fragment_size = a.fragment_size;
            c.scan.start = a.start;
            c.scan.stop = a.stop;
            c.scan.step = a.step;
            c.scan.methods = a.methods;
            c.solver = a.solver.config();
            c
        }
        Command::Mbe(a) => {
            let mut c = RunConfig::new(Task::Mbe);
            c.geometry = Some(a.geometry);
            c.plan = Some(a.plan);
            c.mbe.order = a.order;
            c.mbe.rhf_correction = a.rhf_correction;
            c.mbe.cache = a.cache;
            c.solver = a.solver.config();
            c
        }
        Command::Dmet(a) => {
            let mut c = with_input(RunConfig::new(Task::Dmet), a.input);
            c.plan = Some(a.plan);
            c.dmet.cost = match a.cost {
                CostArg::ElectronCount => CostKind::ElectronCount,
                CostArg::FragmentOnly => CostKind::FragmentOnly,
            };
            c.dmet.electron_tol = a.electron_tol;
            c.dmet.max_iterations = a.max_iterations;
            c.solver = a.solver.config();
            c
        }
        Command::Adapt(a) => {
            let mut c = with_input(RunConfig::new(Task::Adapt), a.input);
            c.solver = a.solver.config();
            c
        }
        Command::Fci(input) => with_input(RunConfig::new(Task::Fci), input),
    };
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    if let Some(dir) = cli.output_dir {
        config.output_dir = dir;
    }
    if cli.no_oracle {
        config.oracle = false;
    } else if cli.oracle {
        config.oracle = true;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = build_config(cli).and_then(|c| execute(&c));
    match outcome {
        Ok((report, files)) => {
            for line in summary(&report) {
                println!("{line}");
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
