use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fnls::spectral::Sector;
use fnls_cli::{commands, context, verify, Failure};

#[derive(Parser)]
#[command(name = "fnls", version, about = "Normalized ground states, spectra and dynamics of fractional NLS")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random perturbations and sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the normalized ground state and write its report and snapshot.
    Groundstate,
    /// Spectra and certificates of H, L+ and L- around a saved ground state.
    Spectrum {
        #[arg(long)]
        groundstate: Option<PathBuf>,
        /// Comma-separated subset of full, even, odd.
        #[arg(long, value_delimiter = ',')]
        sectors: Option<Vec<Sector>>,
    },
    /// Evolve the perturbed ground state and monitor conservation.
    Evolve {
        #[arg(long)]
        groundstate: Option<PathBuf>,
    },
    /// Orbital-stability experiment with modulation tracking.
    Stability {
        #[arg(long)]
        groundstate: Option<PathBuf>,
    },
    /// Run the full verification table over the configured sweep.
    Verify,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut ctx = context(cli.config.as_deref(), cli.out.as_deref(), cli.seed)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| Failure::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Groundstate => {
            let gs = commands::groundstate(&ctx)?;
            println!("omega = {:.12}, energy = {:.12}, el_residual = {:.3e}", gs.omega, gs.energy, gs.el_residual);
            Ok(())
        }
        Command::Spectrum { groundstate, sectors } => {
            if let Some(s) = sectors {
                ctx.config.sectors = s;
            }
            let r = commands::spectrum(&ctx, groundstate.as_deref())?;
            for c in &r.checks {
                println!("{:<28} {}", c.id, if c.passed { "pass" } else { "FAIL" });
            }
            Ok(())
        }
        Command::Evolve { groundstate } => {
            let r = commands::evolve(&ctx, groundstate.as_deref())?;
            println!("energy drift {:.3e}, power drift {:.3e}", r.conservation.max_energy_drift, r.conservation.max_power_drift);
            Ok(())
        }
        Command::Stability { groundstate } => {
            let r = commands::stability(&ctx, groundstate.as_deref())?;
            println!("sup d = {:.6e} (bound {:.3e})", r.sup_distance, r.bound);
            Ok(())
        }
        Command::Verify => {
            let r = verify::verify(&ctx);
            if let Ok(report) = &r {
                print!("{}", report.table());
            } else if let Ok(text) = std::fs::read_to_string(ctx.out.join("verify.txt")) {
                print!("{text}");
            }
            r.map(|_| ())
        }
    })
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
