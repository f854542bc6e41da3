//! Experiment front end: run strategy sweeps, report steps-to-threshold,
//! emit synthetic field rasters, and validate config files.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use gpsurvey_core::config::{load_experiment, ExperimentFile};
use gpsurvey_core::experiment::{compare_report, format_report, run_experiment};
use gpsurvey_core::field::synth_field;
use gpsurvey_core::mission::Strategy;

#[derive(Parser)]
#[command(name = "gpsurvey", version, about = "Online field modeling and informative sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Run only this seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Run only this strategy (informative, lawnmower or random).
        #[arg(long)]
        strategy: Option<Strategy>,
    },
    /// Print the steps-to-threshold table for an experiment's aggregate.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the config's synthetic field (frame 0) as a raster file.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output raster path.
        #[arg(long)]
        output: PathBuf,
        /// Override the synthetic field seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config file; print the resolved configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            output,
            seed,
            strategy,
        } => {
            let mut spec = load_experiment(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(dir) = output {
                spec.output_dir = dir;
            }
            if let Some(s) = seed {
                spec.seeds = vec![s];
            }
            if let Some(s) = strategy {
                if !spec.strategies.contains(&s) {
                    bail!("strategy `{s}` is not listed in the config");
                }
                spec.strategies = vec![s];
            }
            let out = run_experiment(&spec)?;
            println!(
                "wrote {} files and {}",
                out.cell_files.len(),
                out.aggregate.display()
            );
            Ok(())
        }
        Command::Report { config, output } => {
            let mut spec = load_experiment(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(dir) = output {
                spec.output_dir = dir;
            }
            if spec.mse_thresholds.is_empty() {
                bail!("config has no `mse_thresholds` to report against");
            }
            let aggregate_path = spec.output_dir.join("aggregate.csv");
            let aggregate = std::fs::read_to_string(&aggregate_path)
                .with_context(|| format!("reading {}", aggregate_path.display()))?;
            let rows = compare_report(&aggregate, &spec.mse_thresholds)?;
            print!("{}", format_report(&rows));
            Ok(())
        }
        Command::Synth {
            config,
            output,
            seed,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let file = ExperimentFile::parse(&text)?;
            let synth = file
                .environment
                .synth
                .context("config has no [environment.synth] section")?;
            let params = gpsurvey_core::field::SynthFieldParams {
                seed: seed.unwrap_or(synth.seed),
                width: synth.width,
                height: synth.height,
                bump_count: synth.bumps,
                amplitude_range: (synth.amplitude[0], synth.amplitude[1]),
                length_scale_range: (synth.length_scale[0], synth.length_scale[1]),
            };
            let field = synth_field(&params)?;
            field.write_raster(&output)?;
            println!(
                "wrote {}x{} raster to {}",
                field.width(),
                field.height(),
                output.display()
            );
            Ok(())
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let file = ExperimentFile::parse(&text)?;
            let resolved = file.to_resolved_toml()?;
            let base = config.parent().unwrap_or_else(|| std::path::Path::new("."));
            let spec = file.into_spec(base)?;
            spec.validate()?;
            println!("# resolved configuration (defaults filled in)");
            print!("{resolved}");
            println!("# ok");
            Ok(())
        }
    }
}
