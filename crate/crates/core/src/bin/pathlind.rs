use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pathlind::config::RunConfig;
use pathlind::export::{compare_tables, Table};
use pathlind::pipeline::{Pipeline, RunOptions};
use pathlind::Error;

#[derive(Parser)]
#[command(name = "pathlind", version, about = "Path-integral dynamical maps with Lindblad jump operators")]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cache directory; defaults to .pathlind-cache next to the config
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Ignore cached maps and tensors
    #[arg(long, global = true)]
    force_recompute: bool,
    /// Maximum number of path states (d²)^(L+1)
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and cache the dynamical maps
    Maps,
    /// Extract and cache transfer tensors and the memory kernel
    Ttm,
    /// Propagate every jump set and write trajectory tables
    Propagate {
        /// Only the dynamics without jump operators
        #[arg(long)]
        no_jumps: bool,
    },
    /// Full pipeline: maps, tensors, kernel, propagation, export
    Run,
    /// Compare two trajectory tables
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

fn pipeline(cli: &Cli) -> Result<Pipeline, Error> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required for this command".into()))?;
    let config = RunConfig::load(path)?;
    let cache_dir = cli
        .cache_dir
        .clone()
        .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join(".pathlind-cache"));
    let options = RunOptions { cache_dir: Some(cache_dir), force_recompute: cli.force_recompute, budget: cli.budget };
    Pipeline::new(config, &options)
}

fn execute(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Maps => {
            let mut p = pipeline(cli)?;
            let maps = p.maps()?;
            println!("{} maps of dimension {} (key {})", maps.len(), maps.dim() * maps.dim(), p.key());
        }
        Command::Ttm => {
            let mut p = pipeline(cli)?;
            let (tt, kernel) = p.transfer()?;
            println!(
                "{} transfer tensors, ‖T_L‖/‖T_1‖ = {:.3e}, kernel {:?}",
                tt.len(),
                tt.tail_ratio(),
                kernel.kind
            );
        }
        Command::Propagate { no_jumps } => {
            let mut p = pipeline(cli)?;
            let results = p.propagate(!no_jumps)?;
            for path in p.export(&results)? {
                println!("{}", path.display());
            }
        }
        Command::Run => {
            let mut p = pipeline(cli)?;
            p.run(true)?;
            let report = p.report();
            println!("path-sum evaluations: {}", report.quapi_runs);
            for path in &report.outputs {
                println!("{}", path.display());
            }
        }
        Command::Compare { a, b, tol } => {
            let cmp = compare_tables(&Table::read(a)?, &Table::read(b)?)?;
            match &cmp.worst {
                Some((col, row)) => println!("max |Δ| = {:.3e} in column {col}, row {row}", cmp.max_abs_diff),
                None => println!("tables are identical"),
            }
            if !cmp.within(*tol) {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
