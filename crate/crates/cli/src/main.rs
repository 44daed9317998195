use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opmean_cli::{cmd_mean, cmd_tailbound, cmd_verify, CliError, ExperimentConfig, Suite, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "opmean", version, about = "Multivariate tensor means and their inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; reports do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the configured mean of the input tensors.
    Mean(Common),
    /// Run a verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Estimate tail probabilities against the trace bound.
    Tailbound(Common),
}

fn setup(common: &Common) -> Result<(ExperimentConfig, PathBuf), CliError> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok((config, out))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Mean(common) => {
            let (config, out) = setup(&common)?;
            let outcome = cmd_mean(&config, &out)?;
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.exit_code)
        }
        Command::Verify { common, suite } => {
            let (config, out) = setup(&common)?;
            let (outcome, report) = cmd_verify(&config, suite, &out)?;
            for s in report.summary.iter().filter(|s| s.violations > 0) {
                println!("VIOLATED {} ({}/{}, min margin {:e})", s.check, s.violations, s.count, s.min_margin);
            }
            println!(
                "{}: {} checks, {} violations",
                suite.name(),
                report.checks,
                report.violations
            );
            Ok(outcome.exit_code)
        }
        Command::Tailbound(common) => {
            let (config, out) = setup(&common)?;
            let (outcome, run) = cmd_tailbound(&config, &out)?;
            println!("tailbound: {} rows, {} violations", run.rows.len(), run.violations);
            Ok(outcome.exit_code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
