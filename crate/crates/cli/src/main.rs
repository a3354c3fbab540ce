use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use el_sim_core::checks::{run_checks, Fault};
use el_sim_core::error::Error;
use el_sim_core::io::RunConfig;
use el_sim_core::runner::{run_to_dir, sweep};

#[derive(Parser)]
#[command(name = "el-sim", version, about = "Spectral Galerkin solver for regularized Ericksen-Leslie nematic flow")]
struct Cli {
    /// Caps the number of worker threads.
    #[arg(long, env = "EL_SIM_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the invariant suite and prints a pass/fail table.
    Check {
        /// Only checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Runs one simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs one simulation per δ.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn check(filter: Option<&str>, fault: Option<Fault>) -> ExitCode {
    let outcomes = run_checks(filter, fault);
    if outcomes.is_empty() {
        eprintln!("no check matches `{}`", filter.unwrap_or_default());
        return ExitCode::from(2);
    }
    println!("{:<22} {:<6} {:>12} {:>10}  detail", "check", "result", "measured", "tolerance");
    for c in &outcomes {
        let tag = if c.passed { "pass" } else { "FAIL" };
        println!("{:<22} {:<6} {:>12.3e} {:>10.1e}  {}", c.name, tag, c.measured, c.tolerance, c.detail);
    }
    let failed: Vec<_> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        println!("{} checks passed", outcomes.len());
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}

fn load(config: &Path, out: Option<PathBuf>) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(out) = out {
        cfg.output.directory = out;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Check { filter, inject_fault } => Ok(check(filter.as_deref(), inject_fault)),
        Command::Run { config, out } => {
            let cfg = load(&config, out)?;
            let dir = cfg.output.directory.clone();
            let s = run_to_dir(&cfg, &dir)?.summary;
            println!("wrote {}", dir.display());
            println!(
                "steps {}  E0 {:.6e}  E {:.6e}  max energy residual {:.3e}  final norm_L2 {:.3e}",
                s.steps, s.initial_energy.total, s.final_energy.total, s.max_energy_eq_residual, s.final_norm_l2
            );
            for w in &s.leslie_warnings {
                eprintln!("warning: {w}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, deltas, out } => {
            let cfg = load(&config, out)?;
            let root = cfg.output.directory.clone();
            let s = sweep(&cfg, &deltas, &root, cli.threads)?;
            println!("wrote {}", root.display());
            println!("{:>10} {:>12} {:>12} {:>8}", "delta", "norm_L2", "defect", "bound");
            for m in &s.members {
                println!("{:>10.3e} {:>12.4e} {:>12.4e} {:>8}", m.delta, m.final_norm_l2, m.max_defect_total, m.defect_bound_holds);
            }
            if let Some(fit) = s.norm_slope {
                println!("norm_L2 slope {:.3}", fit.slope);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(code) => code,
        Err(Error::Config(errs)) => {
            eprintln!("error: invalid configuration");
            for e in errs {
                eprintln!("  - {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
