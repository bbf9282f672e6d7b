use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cryamabe_cli::{commands, CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "cryamabe", version, about = "Singular solution of the CR Yamabe equation on the Heisenberg group")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Complex dimension
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Number of collocation nodes
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    t_min: Option<f64>,
    #[arg(long, global = true)]
    t_max: Option<f64>,
    #[arg(long, global = true)]
    m_max: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the profile ODE and calibrate Ψ
    Solve,
    /// Check a stored solution against the PDE, homogeneity and symmetry
    Verify {
        /// Solution artifact (defaults to <out>/solution.json)
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Mode spectrum, Morse indices and singular periods
    Scan {
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Sample Ψ on a (ρ, s) grid
    Emit {
        #[arg(long)]
        solution: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Ok(value) = std::env::var("CRYAMABE_THREADS") {
        let threads = value
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("CRYAMABE_THREADS must be a non-negative integer, got {value:?}")))?;
        cryamabe_core::exec::configure_threads(threads);
    }
    let c = &cli.common;
    let overrides = Overrides {
        n: c.n,
        grid_size: c.grid,
        seed: c.seed,
        output_dir: c.out.clone(),
        t_min: c.t_min,
        t_max: c.t_max,
        m_max: c.m_max,
    };
    let config = RunConfig::load(c.config.as_deref(), &overrides)?;
    match &cli.command {
        Command::Solve => {
            let a = commands::solve(&config)?;
            println!(
                "n={} N={} quotient={:.12} el_residual={:.3e} kappa={:.12}",
                a.n, a.grid_size, a.quotient, a.el_residual, a.kappa
            );
        }
        Command::Verify { solution } => {
            let path = commands::solution_path(&config, solution.as_deref());
            let r = commands::verify(&config, &path)?;
            println!(
                "pde max={:.3e} homogeneity={:.3e} symmetry={:.3e} el_residual={:.3e}",
                r.pde.max, r.homogeneity.negative_exponent, r.symmetry_defect, r.el_residual
            );
        }
        Command::Scan { solution } => {
            let path = commands::solution_path(&config, solution.as_deref());
            let r = commands::scan(&config, &path)?;
            println!(
                "negative betas={:?} crossings={} in range={}",
                r.negative_betas,
                r.crossings.len(),
                r.crossings_in_range
            );
        }
        Command::Emit { solution } => {
            let path = commands::solution_path(&config, solution.as_deref());
            let rows = commands::emit(&config, &path)?;
            println!("psi.csv: {rows} rows");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
