//! `axil` — generate runtime-mode selection instances, solve them, and
//! benchmark the solvers against each other.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use axil_core::exact::solve_exact;
use axil_core::generator::{generate_instance, GenParams};
use axil_core::genetic::solve_genetic;
use axil_core::heuristic::solve_heuristic;
use axil_core::io as fmt_io;
use axil_core::SolveOptions;

mod config;
mod run;
mod stats;

use config::{AlgoSpec, ExperimentConfig};
use stats::GroupField;

#[derive(Parser)]
#[command(
    name = "axil",
    version,
    about = "Runtime-mode selection under resource budgets: instance generation, solving, benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random problem instance as JSON.
    Generate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_apps: Option<usize>,
        #[arg(long)]
        max_modes: Option<usize>,
        /// Dependency density in [0, 1].
        #[arg(long)]
        density: Option<f64>,
        /// JSON file with full generation parameters; the flags above
        /// override its fields.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance with one algorithm and print the report as JSON.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// H, S, G_<gens> or G_<gens>^<stagnation>.
        #[arg(long, default_value = "H")]
        algo: String,
        /// Wall-clock limit; overrides the algorithm default.
        #[arg(long)]
        timeout_ms: Option<u64>,
        /// Per-app mode bounds file: [null | [lo, hi], ...].
        #[arg(long)]
        bounds: Option<PathBuf>,
        /// Starting candidate file: [0, 2, 1, ...] (0 = off).
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Genetic RNG seed; defaults to the instance's generation seed
        /// when the file carries one, else 0.
        #[arg(long)]
        ga_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark experiment and write one CSV row per run.
    Bench {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// quick | standard | app-sweep | grid | full-scale.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured repetition count.
        #[arg(long)]
        repetitions: Option<u64>,
        /// Override worker threads (0 = machine default).
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        /// Print the effective config as JSON and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Aggregate a runs CSV into per-group quartile statistics.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated: algo, n_apps, max_modes, density.
        #[arg(long, default_value = "algo,n_apps,max_modes,density")]
        group_by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio-of-medians grid comparing H against a reference algorithm.
    Heatmap {
        #[arg(long = "in")]
        input: PathBuf,
        /// Algorithm id to divide by (e.g. S or G_2000^100).
        #[arg(long, default_value = "S")]
        reference: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Runs `write` against either a file or stdout.
fn emit_with<F>(out: Option<PathBuf>, write: F) -> Result<()>
where
    F: Fn(&mut dyn Write) -> Result<()>,
{
    match out {
        Some(path) => {
            let mut file =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write(&mut file)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            seed,
            n_apps,
            max_modes,
            density,
            params,
            out,
        } => {
            let mut p: GenParams = match params {
                Some(path) => serde_json::from_str(
                    &fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )
                .context("parsing generation parameters")?,
                None => GenParams::default(),
            };
            if let Some(v) = seed {
                p.seed = v;
            }
            if let Some(v) = n_apps {
                p.n_apps = v;
            }
            if let Some(v) = max_modes {
                p.max_modes = v;
            }
            if let Some(v) = density {
                p.dep_density = v;
            }
            let instance = generate_instance(&p)?;
            emit(out, &fmt_io::instance_to_json(&instance, Some(&p))?)
        }

        Command::Solve {
            instance,
            algo,
            timeout_ms,
            bounds,
            initial,
            ga_seed,
            out,
        } => {
            let (inst, echo) = fmt_io::read_instance(&instance)
                .with_context(|| format!("loading {}", instance.display()))?;
            let algo = AlgoSpec::parse(&algo)?;
            let opts = SolveOptions {
                timeout: timeout_ms
                    .map(Duration::from_millis)
                    .or_else(|| algo.timeout()),
                mode_bounds: bounds.map(|p| fmt_io::read_mode_bounds(&p)).transpose()?,
                initial: initial.map(|p| fmt_io::read_candidate(&p)).transpose()?,
            };
            let requested: Vec<usize> = (0..inst.app_count()).collect();
            let report = match &algo {
                AlgoSpec::Heuristic => solve_heuristic(&inst, &requested, &opts)?,
                AlgoSpec::Exact { .. } => solve_exact(&inst, &requested, &opts)?,
                AlgoSpec::Genetic { .. } => {
                    let seed = ga_seed
                        .or_else(|| echo.as_ref().map(|e| e.seed))
                        .unwrap_or(0);
                    let params = algo.ga_params(seed).expect("genetic spec");
                    solve_genetic(&inst, &requested, &opts, &params)?
                }
            };
            emit(out, &serde_json::to_string_pretty(&report)?)
        }

        Command::Bench {
            config,
            preset,
            out,
            repetitions,
            parallelism,
            base_seed,
            print_config,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), None) => ExperimentConfig::from_json(
                    &fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )?,
                (None, Some(name)) => ExperimentConfig::preset(&name)?,
                _ => bail!("pass exactly one of --config or --preset"),
            };
            if let Some(v) = repetitions {
                cfg.repetitions = v;
            }
            if let Some(v) = parallelism {
                cfg.parallelism = v;
            }
            if let Some(v) = base_seed {
                cfg.base_seed = v;
            }
            cfg.validate()?;
            if print_config {
                println!("{}", serde_json::to_string_pretty(&cfg)?);
                return Ok(());
            }
            let out = out.context("--out is required to run a benchmark")?;
            let records = run::run_experiment(&cfg)?;
            run::write_csv_file(&out, &records)?;
            eprintln!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }

        Command::Summarize {
            input,
            group_by,
            out,
        } => {
            let records = run::read_csv_file(&input)?;
            if records.is_empty() {
                bail!("no records in {}", input.display());
            }
            let fields = GroupField::parse_list(&group_by)?;
            let rows = stats::summarize(&records, &fields);
            emit_with(out, |w| stats::write_summary_csv(&mut *w, &rows, &fields))
        }

        Command::Heatmap {
            input,
            reference,
            out,
        } => {
            let records = run::read_csv_file(&input)?;
            if records.is_empty() {
                bail!("no records in {}", input.display());
            }
            AlgoSpec::parse(&reference)?;
            let cells = stats::heatmap_table(&records, &reference);
            emit_with(out, |w| {
                stats::write_heatmap_csv(&mut *w, &cells, &reference)
            })
        }
    }
}
