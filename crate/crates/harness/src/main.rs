use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dgff_harness::{parse_config, run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "dgff-bench", version, about = "DGFF convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectral gap, semigroup and Wasserstein checks per grid size.
    Assumptions(Flags),
    /// Green quadratic forms against their continuum targets.
    Converge(Flags),
    /// Voronoi lift, fill radius and tightness statistic.
    Sobolev(Flags),
    /// All suites.
    Full(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    dump_spectra: bool,
    #[arg(long)]
    dump_samples: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::Assumptions(f) => (Command::Assumptions, f),
        Cmd::Converge(f) => (Command::Converge, f),
        Cmd::Sobolev(f) => (Command::Sobolev, f),
        Cmd::Full(f) => (Command::Full, f),
    };
    if let Some(k) = flags.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut config = match parse_config(&flags.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    let options = RunOptions {
        out: flags.out,
        dump_spectra: flags.dump_spectra,
        dump_samples: flags.dump_samples,
    };
    match run(&config, command, &options) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.violations.is_empty() {
                println!("all checks passed");
                ExitCode::SUCCESS
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
