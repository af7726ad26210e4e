use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use proxflow::harness::{self, scenarios, verify, Experiment, ScenarioConfig, OUTPUT_ENV};
use proxflow::measures::ParticleMeasure;
use proxflow::transport::wasserstein2;

#[derive(Parser)]
#[command(name = "proxflow", version, about = "Interacting particle flows on prox-regular domains")]
struct Cli {
    /// Overrides the seed given in the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Root directory for scenario outputs.
    #[arg(long, global = true, env = OUTPUT_ENV)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or built-in scenario name) of any experiment kind.
    Simulate { config: String },
    /// Run an `aggregate` scenario.
    Aggregate { config: String },
    /// Run an `instability` scenario.
    Instability { config: String },
    /// Run an `evi_check` scenario.
    Evi { config: String },
    /// Exact W2 distance between two measure CSV files.
    Wasserstein {
        a: PathBuf,
        b: PathBuf,
        /// Write the optimal plan as `i,j,mass` rows.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Rescale masses that do not sum to one.
        #[arg(long)]
        normalize: bool,
    },
    /// Run every property suite.
    Verify,
    /// List the built-in scenarios.
    List,
}

fn load(config: &str, seed: Option<u64>) -> Result<ScenarioConfig> {
    let path = Path::new(config);
    let mut cfg = if path.exists() {
        ScenarioConfig::load(path).with_context(|| format!("loading {config}"))?
    } else if let Some(parsed) = scenarios::builtin(config) {
        parsed.with_context(|| format!("built-in scenario {config}"))?
    } else {
        bail!("{config}: no such file or built-in scenario");
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: &Cli, config: &str, expected: Option<Experiment>) -> Result<bool> {
    let cfg = load(config, cli.seed)?;
    if let Some(e) = expected {
        if cfg.experiment != e {
            bail!("{config} describes a `{}` experiment, expected `{}`", cfg.experiment.name(), e.name());
        }
    }
    let dir = harness::output_dir(&cfg, cli.out.as_deref());
    let report = harness::run_scenario(&cfg, &dir).with_context(|| format!("scenario `{}` ({config})", cfg.experiment.name()))?;
    println!("{report}");
    Ok(report.passed())
}

fn wasserstein(a: &Path, b: &Path, plan_path: Option<&Path>, normalize: bool) -> Result<bool> {
    let mu = ParticleMeasure::read_csv(a, normalize).with_context(|| format!("reading {}", a.display()))?;
    let nu = ParticleMeasure::read_csv(b, normalize).with_context(|| format!("reading {}", b.display()))?;
    let (d, plan) = wasserstein2(&mu, &nu)?;
    println!("{d:.17e}");
    if let Some(p) = plan_path {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["i", "j", "mass"])?;
        for (i, j, g) in &plan.entries {
            w.write_record([i.to_string(), j.to_string(), format!("{g:e}")])?;
        }
        w.flush()?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate { config } => run(&cli, config, None),
        Command::Aggregate { config } => run(&cli, config, Some(Experiment::Aggregate)),
        Command::Instability { config } => run(&cli, config, Some(Experiment::Instability)),
        Command::Evi { config } => run(&cli, config, Some(Experiment::EviCheck)),
        Command::Wasserstein { a, b, plan, normalize } => wasserstein(a, b, plan.as_deref(), *normalize),
        Command::Verify => {
            let checks = verify::verify_all();
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.passed))
        }
        Command::List => {
            for name in scenarios::builtin_names() {
                println!("{name}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
