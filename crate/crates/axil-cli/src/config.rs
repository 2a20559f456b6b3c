//! Experiment configuration: sweep axes, algorithm descriptors, presets.

use anyhow::{bail, Context, Result};
use axil_core::generator::GenParams;
use axil_core::genetic::GaParams;
use serde::{Deserialize, Serialize};
use std::time::Duration;

/// One algorithm entry of an experiment. Identifiers follow the benchmark
/// shorthand: `H` for the greedy heuristic, `S` for the exact solver,
/// `G_<a>` for a genetic run of at most `a` generations and `G_<a>^<b>`
/// when it additionally stops after `b` generations without improvement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgoSpec {
    Heuristic,
    Genetic {
        max_generations: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stagnation_stop: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        population: Option<usize>,
    },
    Exact {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timeout_ms: Option<u64>,
    },
}

impl AlgoSpec {
    pub fn id(&self) -> String {
        match self {
            AlgoSpec::Heuristic => "H".into(),
            AlgoSpec::Genetic {
                max_generations,
                stagnation_stop,
                ..
            } => match stagnation_stop {
                Some(b) => format!("G_{max_generations}^{b}"),
                None => format!("G_{max_generations}"),
            },
            AlgoSpec::Exact { .. } => "S".into(),
        }
    }

    /// Parses the shorthand used by `solve --algo` and in records.
    pub fn parse(s: &str) -> Result<AlgoSpec> {
        match s {
            "H" => return Ok(AlgoSpec::Heuristic),
            "S" => return Ok(AlgoSpec::Exact { timeout_ms: None }),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("G_") {
            let (gens, stagnation) = match rest.split_once('^') {
                Some((a, b)) => (a, Some(b.parse::<u64>().context("bad stagnation count")?)),
                None => (rest, None),
            };
            let max_generations = gens.parse::<u64>().context("bad generation count")?;
            return Ok(AlgoSpec::Genetic {
                max_generations,
                stagnation_stop: stagnation,
                population: None,
            });
        }
        bail!("unknown algorithm '{s}' (expected H, S, G_<gens> or G_<gens>^<stagnation>)");
    }

    pub fn timeout(&self) -> Option<Duration> {
        match self {
            AlgoSpec::Exact {
                timeout_ms: Some(ms),
            } => Some(Duration::from_millis(*ms)),
            _ => None,
        }
    }

    /// Genetic parameter block for this entry; `seed` binds the run to an
    /// instance so same-seed experiments replay bit-identically.
    pub fn ga_params(&self, seed: u64) -> Option<GaParams> {
        match self {
            AlgoSpec::Genetic {
                max_generations,
                stagnation_stop,
                population,
            } => Some(GaParams {
                max_generations: *max_generations,
                stagnation_stop: *stagnation_stop,
                population: population.unwrap_or_else(|| GaParams::default().population),
                seed,
                ..Default::default()
            }),
            _ => None,
        }
    }
}

/// A full experiment: the cross product of the three sweep axes, times
/// `repetitions` instances per cell, times one run per algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_apps: Vec<usize>,
    pub max_modes: Vec<usize>,
    pub dep_density: Vec<f64>,
    pub algos: Vec<AlgoSpec>,
    pub repetitions: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Worker threads; 0 picks the machine default.
    #[serde(default)]
    pub parallelism: usize,
    /// Base generation parameters; the sweep axes and seed override their
    /// counterparts cell by cell.
    #[serde(default)]
    pub gen_params: GenParams,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            bail!("repetitions must be at least 1");
        }
        if self.algos.is_empty() {
            bail!("at least one algorithm is required");
        }
        if self.n_apps.is_empty() || self.max_modes.is_empty() || self.dep_density.is_empty() {
            bail!("every sweep axis needs at least one value");
        }
        let mut ids: Vec<String> = self.algos.iter().map(|a| a.id()).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.algos.len() {
            bail!("duplicate algorithm identifiers in config");
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(usize, usize, f64)> {
        let mut cells = Vec::new();
        for &n in &self.n_apps {
            for &m in &self.max_modes {
                for &d in &self.dep_density {
                    cells.push((n, m, d));
                }
            }
        }
        cells
    }

    /// Named configurations. `quick` is a smoke run; `standard` reproduces
    /// the single-cell head-to-head comparison; `app-sweep` moves the app
    /// count at fixed shape; `grid` covers the desk-scale parameter grid;
    /// `full-scale` is the same grid at full size (up to 100 apps, 1 h
    /// exact-solver timeout) and runs for hours.
    pub fn preset(name: &str) -> Result<ExperimentConfig> {
        let base = |algos: Vec<AlgoSpec>| ExperimentConfig {
            n_apps: vec![20],
            max_modes: vec![5],
            dep_density: vec![0.10],
            algos,
            repetitions: 10,
            base_seed: 1,
            parallelism: 0,
            gen_params: GenParams::default(),
        };
        let h = AlgoSpec::Heuristic;
        let exact = |secs: u64| AlgoSpec::Exact {
            timeout_ms: Some(secs * 1000),
        };
        let ga = |gens: u64, stop: Option<u64>| AlgoSpec::Genetic {
            max_generations: gens,
            stagnation_stop: stop,
            population: None,
        };
        Ok(match name {
            "quick" => base(vec![h, exact(10), ga(100, None)]),
            "standard" => ExperimentConfig {
                repetitions: 200,
                ..base(vec![
                    h,
                    exact(60),
                    ga(100, None),
                    ga(500, None),
                    ga(2000, Some(500)),
                ])
            },
            "app-sweep" => ExperimentConfig {
                n_apps: vec![5, 10, 20, 40, 80],
                repetitions: 30,
                ..base(vec![h, exact(5), ga(100, None), ga(2000, Some(500))])
            },
            "grid" => ExperimentConfig {
                n_apps: vec![5, 10, 20, 40],
                max_modes: vec![2, 3, 5],
                dep_density: vec![0.05, 0.10, 0.20],
                repetitions: 30,
                ..base(vec![h, exact(2), ga(2000, Some(100))])
            },
            "full-scale" => ExperimentConfig {
                n_apps: vec![5, 10, 20, 50, 100],
                max_modes: vec![2, 3, 5],
                dep_density: vec![0.05, 0.10, 0.20],
                repetitions: 30,
                ..base(vec![h, exact(3600), ga(2000, Some(100))])
            },
            other => {
                bail!("unknown preset '{other}' (quick, standard, app-sweep, grid, full-scale)")
            }
        })
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }
}
