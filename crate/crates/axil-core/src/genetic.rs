//! Population-based stochastic solver.
//!
//! A plain generational GA over mode assignments: uniform random
//! initialization, elitism, fitness-proportional parent selection, one-pivot
//! crossover, and per-gene ±1 mode-shift mutation. Infeasible candidates get
//! fitness 0 — they carry no reproductive value and are never reported — so
//! on tightly constrained instances the population can starve; that failure
//! mode is part of the behavior this solver is meant to exhibit, not a bug
//! to engineer away.
//!
//! Runs are fully deterministic given (instance, params, seed). All draws
//! come from one ChaCha8 stream seeded with `params.seed`, in a fixed order:
//! population initialization first (per individual, per gene), then per
//! generation and per child pair: two parent draws, one pivot draw, then the
//! two children's mutation draws (per gene: one coin, plus one direction
//! draw when the coin hits).

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    edge_satisfied, mode_domains, Candidate, ProblemInstance, SolveOptions, SolveReport,
    SolveStatus, RESOURCE_EPSILON,
};

/// Genetic-algorithm parameters. `max_generations` and `stagnation_stop`
/// correspond to the run-length notations G_a and G_a^b.
#[derive(Debug, Clone, PartialEq)]
pub struct GaParams {
    /// Individuals per generation.
    pub population: usize,
    /// Fraction of the population copied unchanged each generation
    /// (rounded up to a whole number of elites).
    pub elitist_ratio: f64,
    /// Per-gene probability of a ±1 mode shift.
    pub mutation_rate: f64,
    /// Hard generation cap (the `a` in G_a).
    pub max_generations: u64,
    /// Optional early stop after this many generations without improvement
    /// of the best feasible score (the `b` in G_a^b).
    pub stagnation_stop: Option<u64>,
    /// Seed for the run's random stream.
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 50,
            elitist_ratio: 0.10,
            mutation_rate: 0.0115,
            max_generations: 100,
            stagnation_stop: None,
            seed: 0,
        }
    }
}

impl GaParams {
    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid_argument(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        for (name, v) in [
            ("elitist_ratio", self.elitist_ratio),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid_argument(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if self.max_generations < 1 {
            return Err(Error::invalid_argument(
                "max_generations must be at least 1",
            ));
        }
        Ok(())
    }
}

/// GA fitness: the candidate's score when feasible, else 0.
pub fn ga_fitness(instance: &ProblemInstance, c: &Candidate) -> Result<f64> {
    instance.check_candidate(c)?;
    let budgets = instance.budgets();
    let mut usage = vec![0.0; instance.resource_count()];
    let mut score = 0.0;
    for (&v, app) in c.0.iter().zip(instance.apps()) {
        if let Some(mode) = app.mode(v) {
            for (u, r) in usage.iter_mut().zip(&mode.requirements.0) {
                *u += *r;
            }
            score += mode.axil;
        }
    }
    for (u, b) in usage.iter().zip(&budgets.0) {
        if *u > *b + RESOURCE_EPSILON {
            return Ok(0.0);
        }
    }
    for dep in instance.dependencies() {
        if !edge_satisfied(dep, c) {
            return Ok(0.0);
        }
    }
    Ok(score)
}

/// One-pivot crossover: children swap tails at `pivot`.
pub fn crossover(p1: &Candidate, p2: &Candidate, pivot: usize) -> Result<(Candidate, Candidate)> {
    if p1.0.len() != p2.0.len() {
        return Err(Error::invalid_argument(format!(
            "crossover parents differ in length: {} vs {}",
            p1.0.len(),
            p2.0.len()
        )));
    }
    let n = p1.0.len();
    if pivot == 0 || pivot >= n {
        return Err(Error::invalid_argument(format!(
            "crossover pivot {pivot} out of range 1..{n}"
        )));
    }
    let mut c1 = p1.0[..pivot].to_vec();
    c1.extend_from_slice(&p2.0[pivot..]);
    let mut c2 = p2.0[..pivot].to_vec();
    c2.extend_from_slice(&p1.0[pivot..]);
    Ok((Candidate(c1), Candidate(c2)))
}

/// Mutates `c` in place semantics-free of the solve loop: every gene
/// independently shifts by ±1 with probability `rate`, clamped to the gene's
/// value range `[0, m_i]`.
pub fn mutate<R: Rng>(
    instance: &ProblemInstance,
    c: &Candidate,
    rate: f64,
    rng: &mut R,
) -> Result<Candidate> {
    instance.check_candidate(c)?;
    let mut out = c.0.clone();
    for (i, v) in out.iter_mut().enumerate() {
        if rng.gen::<f64>() < rate {
            let up = rng.gen::<bool>();
            let m = instance.apps()[i].mode_count();
            *v = if up {
                (*v + 1).min(m)
            } else {
                v.saturating_sub(1)
            };
        }
    }
    Ok(Candidate(out))
}

/// Runs the GA over the apps in `requested`; other apps are pinned off.
///
/// Gene values range over each app's admissible set — `{0} ∪ [1, m_i]` by
/// default, narrowed by `opts.mode_bounds`, `{0}` for apps not requested.
/// Internally genes index into that ordered set, which reduces to plain mode
/// values when unrestricted.
///
/// The best feasible candidate ever evaluated is returned with status
/// `heuristic_complete` (or `timeout_partial` if `opts.timeout` ended the
/// run). When nothing feasible with positive score was ever seen and the
/// instance has apps at all, the status is `failed` and the candidate
/// all-off. Counters: `generations_run`, `best_generation`, `evaluations`.
pub fn solve_genetic(
    instance: &ProblemInstance,
    requested: &[usize],
    opts: &SolveOptions,
    params: &GaParams,
) -> Result<SolveReport> {
    let start_time = Instant::now();
    params.validate()?;
    let n = instance.app_count();
    for &i in requested {
        if i >= n {
            return Err(Error::invalid_argument(format!(
                "requested app index {i} out of range for {n} apps"
            )));
        }
    }
    let mut is_requested = vec![false; n];
    for &i in requested {
        is_requested[i] = true;
    }
    let domains = mode_domains(instance, opts.mode_bounds.as_ref())?;

    // Ordered admissible values per gene; genes store indices into these.
    let allowed: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if !is_requested[i] {
                return vec![0];
            }
            let d = &domains[i];
            let mut vals = Vec::new();
            if d.off {
                vals.push(0);
            }
            vals.extend(d.lo..=d.hi.min(instance.apps()[i].mode_count()));
            if vals.is_empty() {
                vals.push(0); // contradictory bounds: pin off
            }
            vals
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pop_size = params.population;
    let elite_count = ((params.elitist_ratio * pop_size as f64).ceil() as usize).min(pop_size);

    // Genomes are positions into `allowed`; decode on evaluation.
    let decode = |genes: &[usize]| -> Candidate {
        Candidate(genes.iter().zip(&allowed).map(|(&g, a)| a[g]).collect())
    };

    let mut population: Vec<Vec<usize>> = (0..pop_size)
        .map(|_| (0..n).map(|i| rng.gen_range(0..allowed[i].len())).collect())
        .collect();

    let mut best_feasible: Option<(f64, Candidate)> = None;
    let mut best_generation: u64 = 0;
    let mut evaluations: u64 = 0;
    let mut generations_run: u64 = 0;
    let mut stagnant: u64 = 0;
    let mut timed_out = false;

    let mut fitness = vec![0.0f64; pop_size];
    let mut generation: u64 = 0;
    loop {
        // Evaluate the current population and fold into the best-ever.
        let mut improved = false;
        for (genes, fit) in population.iter().zip(fitness.iter_mut()) {
            let candidate = decode(genes);
            let f = ga_fitness(instance, &candidate)?;
            evaluations += 1;
            *fit = f;
            if f > 0.0 && best_feasible.as_ref().is_none_or(|(b, _)| f > *b) {
                best_feasible = Some((f, candidate));
                best_generation = generation;
                improved = true;
            }
        }
        if improved {
            stagnant = 0;
        } else {
            stagnant += 1;
        }

        if generation >= params.max_generations {
            break;
        }
        if let Some(b) = params.stagnation_stop {
            if stagnant >= b {
                break;
            }
        }
        if let Some(t) = opts.timeout {
            if start_time.elapsed() >= t {
                timed_out = true;
                break;
            }
        }

        // Elites: highest fitness first, index order on ties.
        let mut order: Vec<usize> = (0..pop_size).collect();
        order.sort_by(|&a, &b| fitness[b].partial_cmp(&fitness[a]).unwrap().then(a.cmp(&b)));
        let mut next: Vec<Vec<usize>> = order[..elite_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();

        let total_fitness: f64 = fitness.iter().sum();
        let select = |rng: &mut ChaCha8Rng| -> usize {
            if total_fitness <= 0.0 {
                return rng.gen_range(0..pop_size);
            }
            let x = rng.gen::<f64>() * total_fitness;
            let mut cum = 0.0;
            for (i, f) in fitness.iter().enumerate() {
                cum += *f;
                if x < cum {
                    return i;
                }
            }
            pop_size - 1
        };

        while next.len() < pop_size {
            let p1 = select(&mut rng);
            let p2 = select(&mut rng);
            let (mut c1, mut c2) = if n >= 2 {
                let pivot = rng.gen_range(1..n);
                let a = &population[p1];
                let b = &population[p2];
                let mut c1 = a[..pivot].to_vec();
                c1.extend_from_slice(&b[pivot..]);
                let mut c2 = b[..pivot].to_vec();
                c2.extend_from_slice(&a[pivot..]);
                (c1, c2)
            } else {
                (population[p1].clone(), population[p2].clone())
            };
            for child in [&mut c1, &mut c2] {
                for (i, g) in child.iter_mut().enumerate() {
                    if rng.gen::<f64>() < params.mutation_rate {
                        let up = rng.gen::<bool>();
                        let top = allowed[i].len() - 1;
                        *g = if up {
                            (*g + 1).min(top)
                        } else {
                            g.saturating_sub(1)
                        };
                    }
                }
            }
            next.push(c1);
            if next.len() < pop_size {
                next.push(c2);
            }
        }
        population = next;
        generation += 1;
        generations_run = generation;
    }

    let elapsed = start_time.elapsed();
    let counters = BTreeMap::from([
        ("generations_run".to_string(), generations_run),
        ("best_generation".to_string(), best_generation),
        ("evaluations".to_string(), evaluations),
    ]);
    // "Failed" means: nothing with positive score ever seen while there was
    // anything to schedule. A 0-app instance legitimately scores 0.
    match best_feasible {
        Some((score, candidate)) if score > 0.0 => Ok(SolveReport {
            candidate,
            score,
            feasible: true,
            status: if timed_out {
                SolveStatus::TimeoutPartial
            } else {
                SolveStatus::HeuristicComplete
            },
            elapsed,
            counters,
        }),
        _ => {
            let candidate = Candidate::all_off(n);
            let failed = n > 0;
            Ok(SolveReport {
                candidate,
                score: 0.0,
                feasible: true, // all-off is feasible by construction
                status: if failed {
                    SolveStatus::Failed
                } else {
                    SolveStatus::HeuristicComplete
                },
                elapsed,
                counters,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        AppSpec, Criticality, ModeBounds, ModeSpec, ResourceEntry, ResourceKind, ResourceVector,
    };

    fn single_resource_instance(budget: f64, apps: &[(&[f64], &[f64])]) -> ProblemInstance {
        let apps = apps
            .iter()
            .enumerate()
            .map(|(i, (reqs, axils))| AppSpec {
                id: format!("a{i}"),
                ecu: 0,
                modes: reqs
                    .iter()
                    .zip(axils.iter())
                    .map(|(&r, &x)| ModeSpec {
                        requirements: ResourceVector(vec![r]),
                        axil: x,
                    })
                    .collect(),
                criticality: Criticality::BestEffort,
            })
            .collect();
        ProblemInstance::new(
            vec![ResourceEntry {
                name: "cpu".into(),
                kind: ResourceKind::Cpu,
                budget_max: budget.max(1000.0),
            }],
            ResourceVector(vec![budget]),
            apps,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn fitness_is_score_when_feasible_and_zero_otherwise() {
        let inst = single_resource_instance(100.0, &[(&[60.0], &[1.0]), (&[60.0], &[0.5])]);
        assert_eq!(ga_fitness(&inst, &Candidate(vec![1, 0])).unwrap(), 1.0);
        assert_eq!(ga_fitness(&inst, &Candidate(vec![1, 1])).unwrap(), 0.0); // 120 > 100
        assert_eq!(ga_fitness(&inst, &Candidate(vec![0, 0])).unwrap(), 0.0);
    }

    #[test]
    fn crossover_swaps_tails() {
        let (c1, c2) = crossover(&Candidate(vec![1, 1, 1]), &Candidate(vec![0, 0, 0]), 1).unwrap();
        assert_eq!(c1, Candidate(vec![1, 0, 0]));
        assert_eq!(c2, Candidate(vec![0, 1, 1]));

        let p = Candidate(vec![2, 0, 1]);
        let (c1, c2) = crossover(&p, &p, 2).unwrap();
        assert_eq!(c1, p);
        assert_eq!(c2, p);

        assert!(crossover(&Candidate(vec![1]), &Candidate(vec![1, 0]), 1).is_err());
        assert!(crossover(&Candidate(vec![1, 0]), &Candidate(vec![0, 1]), 0).is_err());
        assert!(crossover(&Candidate(vec![1, 0]), &Candidate(vec![0, 1]), 2).is_err());
    }

    #[test]
    fn crossover_preserves_genes_per_position() {
        let p1 = Candidate(vec![3, 1, 0, 2]);
        let p2 = Candidate(vec![0, 2, 2, 1]);
        for pivot in 1..4 {
            let (c1, c2) = crossover(&p1, &p2, pivot).unwrap();
            for i in 0..4 {
                let mut got = [c1.0[i], c2.0[i]];
                let mut want = [p1.0[i], p2.0[i]];
                got.sort();
                want.sort();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn mutation_rate_zero_is_identity_and_shifts_clamp() {
        let inst = single_resource_instance(100.0, &[(&[10.0, 5.0], &[2.0, 1.0])]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = Candidate(vec![1]);
        assert_eq!(mutate(&inst, &c, 0.0, &mut rng).unwrap(), c);

        // Rate 1: every gene shifts; from 0 a down-shift stays 0, from m an
        // up-shift stays m. Try many draws to hit both directions.
        let mut saw = std::collections::BTreeSet::new();
        for seed in 0..32 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = mutate(&inst, &Candidate(vec![0]), 1.0, &mut rng).unwrap();
            assert!(out.0[0] <= 2);
            saw.insert(out.0[0]);
            let out = mutate(&inst, &Candidate(vec![2]), 1.0, &mut rng).unwrap();
            assert!(out.0[0] <= 2);
        }
        assert!(
            saw.contains(&0) && saw.contains(&1),
            "both directions exercised"
        );
    }

    #[test]
    fn ga_finds_the_obvious_optimum_on_a_tiny_instance() {
        let inst = single_resource_instance(100.0, &[(&[60.0], &[1.0]), (&[60.0], &[0.5])]);
        let params = GaParams {
            max_generations: 60,
            seed: 42,
            ..Default::default()
        };
        let report = solve_genetic(&inst, &[0, 1], &SolveOptions::default(), &params).unwrap();
        assert_eq!(report.status, SolveStatus::HeuristicComplete);
        assert_eq!(report.candidate, Candidate(vec![1, 0]));
        assert_eq!(report.score, 1.0);
        assert!(report.feasible);
    }

    #[test]
    fn ga_reports_failed_on_zero_budget_instances() {
        let inst = single_resource_instance(0.0, &[(&[10.0], &[1.0]), (&[10.0], &[1.0])]);
        let params = GaParams {
            max_generations: 30,
            seed: 3,
            ..Default::default()
        };
        let report = solve_genetic(&inst, &[0, 1], &SolveOptions::default(), &params).unwrap();
        assert_eq!(report.status, SolveStatus::Failed);
        assert_eq!(report.candidate, Candidate(vec![0, 0]));
        assert_eq!(report.score, 0.0);
        assert!(report.feasible, "the all-off fallback is itself feasible");
    }

    #[test]
    fn fixed_seed_runs_are_identical() {
        let inst = single_resource_instance(
            100.0,
            &[
                (&[60.0, 30.0], &[1.0, 0.4]),
                (&[60.0, 35.0], &[0.5, 0.2]),
                (&[20.0], &[0.3]),
            ],
        );
        let params = GaParams {
            max_generations: 80,
            stagnation_stop: Some(40),
            seed: 1234,
            ..Default::default()
        };
        let a = solve_genetic(&inst, &[0, 1, 2], &SolveOptions::default(), &params).unwrap();
        let b = solve_genetic(&inst, &[0, 1, 2], &SolveOptions::default(), &params).unwrap();
        assert_eq!(a.candidate, b.candidate);
        assert_eq!(a.score, b.score);
        assert_eq!(a.status, b.status);
        assert_eq!(a.counters, b.counters);
    }

    #[test]
    fn reported_candidate_is_feasible_whenever_status_is_not_failed() {
        for seed in 0..20 {
            let inst = single_resource_instance(
                80.0,
                &[
                    (&[50.0, 25.0], &[2.0, 1.0]),
                    (&[50.0, 30.0], &[1.5, 0.7]),
                    (&[45.0], &[1.2]),
                ],
            );
            let params = GaParams {
                max_generations: 40,
                seed,
                ..Default::default()
            };
            let report =
                solve_genetic(&inst, &[0, 1, 2], &SolveOptions::default(), &params).unwrap();
            assert!(inst.is_feasible(&report.candidate).unwrap().feasible);
            if report.status != SolveStatus::Failed {
                assert!(report.score > 0.0);
            }
        }
    }

    #[test]
    fn stagnation_stop_caps_generations() {
        let inst = single_resource_instance(100.0, &[(&[60.0], &[1.0]), (&[60.0], &[0.5])]);
        let params = GaParams {
            max_generations: 5000,
            stagnation_stop: Some(25),
            seed: 5,
            ..Default::default()
        };
        let report = solve_genetic(&inst, &[0, 1], &SolveOptions::default(), &params).unwrap();
        // The run must stop well before the hard cap.
        assert!(report.counters["generations_run"] < 5000);
        assert!(report.counters["generations_run"] >= report.counters["best_generation"] + 25);
    }

    #[test]
    fn unrequested_apps_stay_off_and_bounds_are_respected() {
        let inst = single_resource_instance(
            200.0,
            &[
                (&[10.0, 5.0], &[2.0, 1.0]),
                (&[10.0], &[5.0]),
                (&[10.0, 4.0], &[1.0, 0.5]),
            ],
        );
        // App 1 not requested; app 2 capped at its degraded mode.
        let opts = SolveOptions {
            mode_bounds: Some(ModeBounds(vec![None, None, Some((2, 2))])),
            ..Default::default()
        };
        let params = GaParams {
            max_generations: 120,
            seed: 9,
            ..Default::default()
        };
        let report = solve_genetic(&inst, &[0, 2], &opts, &params).unwrap();
        assert_eq!(report.candidate.0[1], 0, "unrequested app pinned off");
        assert_eq!(report.candidate.0[2], 2, "bounded app stays in its range");
        assert_eq!(report.candidate.0[0], 1, "plenty of budget: nominal wins");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Crossover at any valid pivot preserves each position's gene
            /// multiset, for arbitrary parents of equal length.
            #[test]
            fn crossover_positional_multiset(
                genes in proptest::collection::vec((0usize..4, 0usize..4), 2..12),
                pivot_raw in 1usize..100,
            ) {
                let p1 = Candidate(genes.iter().map(|g| g.0).collect());
                let p2 = Candidate(genes.iter().map(|g| g.1).collect());
                let pivot = 1 + pivot_raw % (genes.len() - 1).max(1);
                if pivot < genes.len() {
                    let (c1, c2) = crossover(&p1, &p2, pivot).unwrap();
                    for i in 0..genes.len() {
                        let mut got = [c1.0[i], c2.0[i]];
                        let mut want = [p1.0[i], p2.0[i]];
                        got.sort();
                        want.sort();
                        prop_assert_eq!(got, want);
                    }
                }
            }

            /// Mutation never leaves the per-gene value range.
            #[test]
            fn mutation_stays_in_range(seed in 0u64..500, rate in 0.0f64..=1.0) {
                let inst = single_resource_instance(
                    100.0,
                    &[(&[1.0, 0.5], &[2.0, 1.0]), (&[1.0], &[1.0]), (&[1.0, 0.7, 0.2], &[3.0, 2.0, 1.0])],
                );
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let c = Candidate(vec![1, 1, 2]);
                let out = mutate(&inst, &c, rate, &mut rng).unwrap();
                for (i, v) in out.0.iter().enumerate() {
                    prop_assert!(*v <= inst.apps()[i].mode_count());
                }
            }
        }
    }
}
