//! Experiment execution and the versioned runs-CSV format (schema v1).
//!
//! One row per (cell, repetition, algorithm). Within a cell, repetition
//! `k` uses instance seed `base_seed + k`, so every algorithm in a row
//! group sees the identical instance and the whole run replays
//! bit-identically (elapsed-time columns aside) for a fixed config.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use axil_core::exact::solve_exact;
use axil_core::generator::{generate_instance, GenParams};
use axil_core::genetic::solve_genetic;
use axil_core::heuristic::solve_heuristic;
use axil_core::{Candidate, ProblemInstance, SolveOptions, SolveStatus};
use rayon::prelude::*;

use crate::config::{AlgoSpec, ExperimentConfig};

pub const CSV_HEADER: [&str; 11] = [
    "seed",
    "n_apps",
    "max_modes",
    "density",
    "algo",
    "score",
    "rel_score_pct",
    "feasible",
    "status",
    "elapsed_us",
    "counters_json",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub n_apps: usize,
    pub max_modes: usize,
    pub density: f64,
    pub algo: String,
    pub score: f64,
    /// Score as a percentage of the exact optimum on the same instance;
    /// absent when no exact run finished within its timeout.
    pub rel_score_pct: Option<f64>,
    pub feasible: bool,
    pub status: SolveStatus,
    pub elapsed: Duration,
    pub counters: BTreeMap<String, u64>,
    /// The selected candidate, kept for re-validation; not a CSV column
    /// and therefore empty on records read back from disk.
    pub candidate: Candidate,
}

/// A record counts as a success when the solver produced a feasible
/// solution within its own stop condition — timeouts are not successes
/// even if a usable partial result came back.
pub fn is_success(r: &RunRecord) -> bool {
    r.feasible && r.status != SolveStatus::Failed && r.status != SolveStatus::TimeoutPartial
}

fn run_algo(
    instance: &ProblemInstance,
    requested: &[usize],
    algo: &AlgoSpec,
    instance_seed: u64,
) -> axil_core::Result<(axil_core::SolveReport, Duration)> {
    let opts = SolveOptions {
        timeout: algo.timeout(),
        ..Default::default()
    };
    let started = Instant::now();
    let report = match algo {
        AlgoSpec::Heuristic => solve_heuristic(instance, requested, &opts)?,
        AlgoSpec::Exact { .. } => solve_exact(instance, requested, &opts)?,
        AlgoSpec::Genetic { .. } => {
            let params = algo.ga_params(instance_seed).expect("genetic spec");
            solve_genetic(instance, requested, &opts, &params)?
        }
    };
    // Wall clock around the whole call, initialization included.
    Ok((report, started.elapsed()))
}

/// Runs every algorithm of `cfg` on one generated instance and fills in
/// relative scores against the exact run, when one finished.
fn run_instance(
    cfg: &ExperimentConfig,
    n_apps: usize,
    max_modes: usize,
    density: f64,
    seed: u64,
) -> Vec<RunRecord> {
    let params = GenParams {
        n_apps,
        max_modes,
        dep_density: density,
        seed,
        ..cfg.gen_params.clone()
    };
    let instance = match generate_instance(&params) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("warning: generation failed for seed {seed}: {e}");
            return Vec::new();
        }
    };
    let requested: Vec<usize> = (0..instance.app_count()).collect();

    let mut records: Vec<RunRecord> = cfg
        .algos
        .iter()
        .map(|algo| match run_algo(&instance, &requested, algo, seed) {
            Ok((report, elapsed)) => RunRecord {
                seed,
                n_apps,
                max_modes,
                density,
                algo: algo.id(),
                score: report.score,
                rel_score_pct: None,
                feasible: report.feasible,
                status: report.status,
                elapsed,
                counters: report.counters,
                candidate: report.candidate,
            },
            Err(e) => {
                eprintln!("warning: {} failed on seed {seed}: {e}", algo.id());
                RunRecord {
                    seed,
                    n_apps,
                    max_modes,
                    density,
                    algo: algo.id(),
                    score: 0.0,
                    rel_score_pct: None,
                    feasible: false,
                    status: SolveStatus::Failed,
                    elapsed: Duration::ZERO,
                    counters: BTreeMap::from([("solver_error".to_string(), 1u64)]),
                    candidate: Candidate::all_off(instance.app_count()),
                }
            }
        })
        .collect();

    let exact_score = records
        .iter()
        .find(|r| r.algo == "S" && r.status == SolveStatus::Optimal)
        .map(|r| r.score);
    if let Some(optimum) = exact_score {
        if optimum > 0.0 {
            for r in &mut records {
                // Divide first so a score equal to the optimum is exactly 100.
                r.rel_score_pct = Some(100.0 * (r.score / optimum));
            }
        }
    }
    records
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for (n, m, d) in cfg.cells() {
        for rep in 0..cfg.repetitions {
            tasks.push((n, m, d, cfg.base_seed + rep));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .context("building worker pool")?;
    let mut records: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .flat_map(|&(n, m, d, seed)| run_instance(cfg, n, m, d, seed))
            .collect()
    });
    sort_records(&mut records);
    Ok(records)
}

/// Canonical record order, making output independent of worker scheduling.
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        (a.n_apps, a.max_modes)
            .cmp(&(b.n_apps, b.max_modes))
            .then(a.density.partial_cmp(&b.density).unwrap())
            .then(a.seed.cmp(&b.seed))
            .then(a.algo.cmp(&b.algo))
    });
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.seed.to_string(),
            r.n_apps.to_string(),
            r.max_modes.to_string(),
            r.density.to_string(),
            r.algo.clone(),
            r.score.to_string(),
            format_opt(r.rel_score_pct),
            r.feasible.to_string(),
            r.status.to_string(),
            r.elapsed.as_micros().to_string(),
            serde_json::to_string(&r.counters)?,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(file, records)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        anyhow::bail!("unexpected CSV header {:?}", headers);
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let status: SolveStatus =
            serde_json::from_value(serde_json::Value::String(field(8).to_string()))
                .with_context(|| format!("row {}: bad status '{}'", line + 2, field(8)))?;
        records.push(RunRecord {
            seed: field(0).parse().context("seed")?,
            n_apps: field(1).parse().context("n_apps")?,
            max_modes: field(2).parse().context("max_modes")?,
            density: field(3).parse().context("density")?,
            algo: field(4).to_string(),
            score: field(5).parse().context("score")?,
            rel_score_pct: if field(6).is_empty() {
                None
            } else {
                Some(field(6).parse().context("rel_score_pct")?)
            },
            feasible: field(7).parse().context("feasible")?,
            status,
            elapsed: Duration::from_micros(field(9).parse().context("elapsed_us")?),
            counters: serde_json::from_str(field(10)).context("counters_json")?,
            candidate: Candidate(Vec::new()),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset("quick").unwrap();
        cfg.n_apps = vec![6];
        cfg.repetitions = 3;
        cfg.parallelism = 1;
        cfg
    }

    #[test]
    fn one_cell_produces_one_row_per_algo_and_rep() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 3 * cfg.algos.len());
        // Records for one seed share the instance: exact dominates.
        for seed in 1..=3 {
            let group: Vec<_> = records.iter().filter(|r| r.seed == seed).collect();
            let exact = group.iter().find(|r| r.algo == "S").unwrap();
            assert_eq!(exact.status, SolveStatus::Optimal);
            assert_eq!(exact.rel_score_pct, Some(100.0));
            for r in &group {
                assert!(r.score <= exact.score);
                if let Some(rel) = r.rel_score_pct {
                    assert!((0.0..=100.0).contains(&rel), "{rel}");
                }
            }
        }
        let h = records.iter().filter(|r| r.algo == "H");
        assert!(h.clone().all(is_success));
    }

    #[test]
    fn candidates_revalidate_against_regenerated_instances() {
        let cfg = tiny_config();
        for r in run_experiment(&cfg).unwrap() {
            let params = GenParams {
                n_apps: r.n_apps,
                max_modes: r.max_modes,
                dep_density: r.density,
                seed: r.seed,
                ..cfg.gen_params.clone()
            };
            let inst = generate_instance(&params).unwrap();
            assert_eq!(inst.score(&r.candidate).unwrap(), r.score);
            assert_eq!(inst.is_feasible(&r.candidate).unwrap().feasible, r.feasible);
        }
    }

    #[test]
    fn reruns_are_identical_apart_from_timing() {
        let cfg = tiny_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.algo, y.algo);
            assert_eq!(x.score, y.score);
            assert_eq!(x.rel_score_pct, y.rel_score_pct);
            assert_eq!(x.candidate, y.candidate);
            assert_eq!(x.counters, y.counters);
        }
    }

    #[test]
    fn csv_round_trips_and_keeps_the_schema() {
        let cfg = tiny_config();
        let records = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "seed,n_apps,max_modes,density,algo,score,rel_score_pct,feasible,status,elapsed_us,counters_json"
        ));
        let path = std::env::temp_dir().join(format!("axil_runs_test_{}.csv", std::process::id()));
        write_csv_file(&path, &records).unwrap();
        let back = read_csv_file(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(back.len(), records.len());
        for (x, y) in records.iter().zip(&back) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.algo, y.algo);
            assert_eq!(x.score, y.score);
            assert_eq!(x.rel_score_pct, y.rel_score_pct);
            assert_eq!(x.status, y.status);
            assert_eq!(x.elapsed.as_micros(), y.elapsed.as_micros());
            assert_eq!(x.counters, y.counters);
        }
    }
}
