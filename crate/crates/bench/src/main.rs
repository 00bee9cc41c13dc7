use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nsglb::PolicyKind;
use nsglb_bench::{emit_csv, run_experiment, validate_concentration, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "bench", version, about = "Run non-stationary GLM bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sim2d or replay experiment and write CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these policies (repeatable). Replaces the config list.
        #[arg(long = "policy", value_name = "NAME")]
        policies: Vec<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check of the confidence bounds.
    ValidateConcentration {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(
    path: &Path,
    policies: &[String],
    runs: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if !policies.is_empty() {
        cfg.policies = policies
            .iter()
            .map(|p| p.parse::<PolicyKind>().map_err(|e| HarnessError::Config(e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            policies,
            runs,
            seed,
            out,
        } => {
            let cfg = load(&config, &policies, runs, seed, out)?;
            let result = run_experiment(&cfg)?;
            let written = emit_csv(&result, &cfg, &cfg.output_dir)?;
            for p in &result.policies {
                let agg = &result.aggregates[p];
                if let Some(last) = agg.mean.last() {
                    println!(
                        "{p}: mean cumulative regret at T={} is {last:.3} over {} runs",
                        result.horizon, agg.runs
                    );
                }
            }
            for path in written {
                println!("wrote {}", path.display());
            }
            for f in &result.failures {
                eprintln!("run {} (seed {}) {} failed: {}", f.run, f.seed, f.policy, f.error);
            }
            result.check_failures()
        }
        Command::ValidateConcentration { config } => {
            let cfg = load(&config, &[], None, None, None)?;
            let report = validate_concentration(&cfg)?;
            print!("{report}");
            if report.pass() {
                Ok(())
            } else {
                Err(HarnessError::CoverageFailed(
                    report.entries.iter().filter(|e| !e.pass).count(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
