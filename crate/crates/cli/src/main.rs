use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use banditlab::harness::output::{bound_report, read_series_csv, render_svg, PLOT_FILE, SERIES_FILE, SUMMARY_FILE};
use banditlab::harness::{emit_outputs, run_experiment, ExperimentConfig, HarnessError, Summary, CATALOG};
use clap::{Parser, Subcommand};

/// Replicated multi-armed bandit experiments.
#[derive(Parser)]
#[command(name = "banditlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: the config's `output`, else `results`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also draw the regret chart.
        #[arg(long)]
        svg: bool,
    },
    /// List the available policies.
    ListPolicies,
    /// Draw the regret chart for a results directory (or a series CSV).
    Plot {
        results: PathBuf,
        /// Where to write the SVG (default: next to the CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the bound-check table for a results directory (or summary JSON).
    Report { results: PathBuf },
}

fn resolve(path: &Path, file: &str) -> PathBuf {
    if path.is_dir() {
        path.join(file)
    } else {
        path.to_path_buf()
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            workers,
            out,
            seed,
            svg,
        } => {
            // An unreadable config is a config problem, not a runtime one.
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| match e {
                HarnessError::Io { .. } => HarnessError::Config(e.to_string()),
                e => e,
            })?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let result = run_experiment(&cfg, workers)?;
            for path in emit_outputs(&result, &dir, svg)? {
                println!("wrote {}", path.display());
            }
            print!("{}", bound_report(&Summary::from_result(&result)));
        }
        Command::ListPolicies => {
            for (name, family, about) in CATALOG {
                println!("{name:<20} {family:<14} {about}");
            }
        }
        Command::Plot { results, out } => {
            let csv = resolve(&results, SERIES_FILE);
            let table = read_series_csv(&csv)?;
            let title = match Summary::load(&csv.with_file_name(SUMMARY_FILE)) {
                Ok(s) => format!("{} on {}", s.policy, s.environment),
                Err(_) => "regret".to_string(),
            };
            let target = out.unwrap_or_else(|| csv.with_file_name(PLOT_FILE));
            std::fs::write(&target, render_svg(&table, &title))
                .with_context(|| format!("writing {}", target.display()))?;
            println!("wrote {}", target.display());
        }
        Command::Report { results } => {
            let summary = Summary::load(&resolve(&results, SUMMARY_FILE))?;
            print!("{}", bound_report(&summary));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<HarnessError>().is_some_and(HarnessError::is_config);
            ExitCode::from(if config { 2 } else { 3 })
        }
    }
}
