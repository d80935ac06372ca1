use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use whisker::cli::{cmd_certify, cmd_compute, cmd_diagnose, exit_code, RunConfig};

#[derive(Parser)]
#[command(name = "whisker", version, about = "Whiskered tori of Hamiltonian flows")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Newton iteration and write the solution, measurements and bounds.
    Compute(Common),
    /// Check identities and one-step bounds on a computed solution.
    Diagnose(Common),
    /// Evaluate the constants ledger and both verdicts.
    Certify(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "WHISKER_THREADS")]
    threads: Option<usize>,
    #[arg(long, default_value = "info")]
    log_level: log::LevelFilter,
}

fn run(args: Args) -> whisker::Result<bool> {
    let (Command::Compute(c) | Command::Diagnose(c) | Command::Certify(c)) = &args.command;
    env_logger::Builder::new().filter_level(c.log_level).init();
    let cfg = RunConfig::load(&c.config)?;
    let threads = c.threads.or(cfg.threads).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| whisker::Error::Config(e.to_string()))?;
    match args.command {
        Command::Compute(_) => {
            let out = cmd_compute(&cfg, &c.out)?;
            log::info!(
                "lambda = {:.16e}, residual = {:.3e}, converged = {}",
                out.summary.lambda,
                out.summary.residual,
                out.summary.converged
            );
            Ok(out.summary.converged)
        }
        Command::Diagnose(_) => {
            let report = cmd_diagnose(&cfg, &c.out)?;
            for b in report.bounds.iter().chain(&report.step_bounds) {
                log::info!("{:<24} {:.3e} <= {:.3e}: {}", b.name, b.norm, b.bound, b.holds);
            }
            Ok(report.all_identities_hold)
        }
        Command::Certify(_) => {
            let cert = cmd_certify(&cfg, &c.out)?;
            log::info!("iterative lemma: {:.3e} < 1: {}", cert.lhs_iter, cert.iter_verdict);
            log::info!("convergence: {:.3e} < 1: {}", cert.lhs_kam, cert.kam_verdict);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
