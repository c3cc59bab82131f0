mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;
use rlab::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "rlab", version, about = "Ratio limits, Martin kernels and reduced boundaries of random walks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Mantissa bits for transition probabilities; 64 uses native doubles.
    #[arg(long, global = true, default_value_t = 64)]
    pub precision: usize,
    /// Stabilization tolerance (relative).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// A preset name or a walk-spec file.
#[derive(Args, Debug, Clone)]
pub struct WalkArgs {
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Boundary kernel H(x, xi) of a simple random walk on T_{q+1}.
    TreeKernel(commands::TreeKernelArgs),
    /// Martin kernel K(x, xi|t) of a nearest-neighbour walk on a free group.
    FreeKernel(commands::FreeKernelArgs),
    /// p^(n)(e, x)/p^(n)(e, e) along n.
    RatioConverge(commands::RatioConvergeArgs),
    /// Fit of log p^(n)(e, y) = n log rho - alpha log n + c.
    LltFit(commands::LltFitArgs),
    /// Martin kernel at rho from the ball first-passage matrices.
    MartinMatrix(commands::MartinMatrixArgs),
    /// Cartesian product walks: asymptotics and boundary identification.
    Product(commands::ProductArgs),
    /// The subgroup R_mu and the equivalence classes of H(., y).
    Reduced(commands::ReducedArgs),
    /// Ancona and Harnack constants of the Green function at r.
    AnconaCheck(commands::AnconaArgs),
    /// Phi(x, y|r-)/Phi(e, y|r-) along a ray.
    PhiClaim(commands::PhiClaimArgs),
}

fn validate(g: &Global) -> Result<()> {
    if g.precision < 64 {
        return Err(Error::InvalidInput(format!("--precision must be at least 64 bits, got {}", g.precision)));
    }
    if let Some(t) = g.tol {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("--tol must be positive, got {t}")));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    validate(&cli.global)?;
    let table = commands::dispatch(&cli.command, &cli.global)?;
    match &cli.global.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(cli.global.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(cli.global.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e @ Error::Budget { .. }) => {
            eprintln!("error: {e}; raise --max-states or shorten the horizon");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_convergence() { 3 } else { 2 })
        }
    }
}
