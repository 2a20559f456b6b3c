//! Exact reference solver: depth-first branch-and-bound over per-app mode
//! choices, with dependency-interval propagation and an additive optimistic
//! bound, plus a naive exhaustive oracle for tiny instances.
//!
//! Apps are decided in index order; within an app the branch order is off
//! first, then the most degraded mode up to nominal. Three prunes keep the
//! tree small: budget overshoot, an undecided app whose admissible set
//! becomes empty, and optimistic-completion score no better than the
//! incumbent. All three are sound, so the returned score is the true
//! optimum whenever the search runs to completion.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::heuristic::solve_heuristic;
use crate::model::{
    mode_domains, Candidate, ModeDomain, ProblemInstance, SolveOptions, SolveReport, SolveStatus,
    RESOURCE_EPSILON,
};

/// Default wall-clock cap for [`solve_exact`] when `opts.timeout` is unset.
/// Generous for desk-scale instances; configurable up to hours.
pub const DEFAULT_EXACT_TIMEOUT: Duration = Duration::from_secs(60);

/// Hard ceiling on the candidate count [`brute_force`] will enumerate.
pub const BRUTE_FORCE_GUARD: u128 = 10_000_000;

/// Per-undecided-app admissible set during search: off allowed or not, plus
/// a contiguous (possibly empty) range of mode indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Interval {
    off: bool,
    lo: usize,
    hi: usize,
}

impl Interval {
    fn from_domain(d: &ModeDomain) -> Self {
        Interval {
            off: d.off,
            lo: d.lo,
            hi: d.hi,
        }
    }

    fn modes_empty(&self) -> bool {
        self.lo > self.hi
    }

    /// No admissible value at all: the branch is dead.
    fn empty(&self) -> bool {
        !self.off && self.modes_empty()
    }
}

/// Undo log entry: an app's interval (and its optimistic contribution)
/// before a tightening.
struct TrailEntry {
    app: usize,
    interval: Interval,
    contrib: f64,
}

struct Search<'a> {
    instance: &'a ProblemInstance,
    deadline: Instant,
    /// When false, the optimistic-bound prune is skipped (the budget and
    /// dependency filters stay on — they are correctness, not heuristics).
    /// Exists so tests can show the bound never changes the result.
    use_bound: bool,
    /// Admissible sets; only entries for undecided apps are meaningful.
    intervals: Vec<Interval>,
    /// Optimistic score contribution of each undecided app (max axil over
    /// its admissible values).
    contrib: Vec<f64>,
    /// Sum of `contrib` over undecided apps at depth >= current.
    remaining: f64,
    trail: Vec<TrailEntry>,
    partial: Vec<usize>,
    usage: Vec<f64>,
    score: f64,
    incumbent: Option<(f64, Candidate)>,
    nodes: u64,
    pruned_resource: u64,
    pruned_dependency: u64,
    pruned_bound: u64,
    timed_out: bool,
}

impl<'a> Search<'a> {
    /// Max axil over the admissible values of `interval` for app `i`
    /// (0 when only off is admissible).
    fn max_axil(&self, i: usize, interval: &Interval) -> f64 {
        let app = &self.instance.apps()[i];
        let mut best: f64 = 0.0;
        if !interval.modes_empty() {
            for j in interval.lo..=interval.hi {
                best = best.max(app.axil_at(j));
            }
        }
        best
    }

    /// Tightens `app`'s interval via `f`, recording the old state. Returns
    /// false when the admissible set became empty (caller must prune).
    fn tighten(&mut self, app: usize, f: impl FnOnce(&mut Interval)) -> bool {
        let before = self.intervals[app];
        let mut after = before;
        f(&mut after);
        if after != before {
            self.trail.push(TrailEntry {
                app,
                interval: before,
                contrib: self.contrib[app],
            });
            self.intervals[app] = after;
            let new_contrib = self.max_axil(app, &after);
            self.remaining += new_contrib - self.contrib[app];
            self.contrib[app] = new_contrib;
        }
        !self.intervals[app].empty()
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let e = self.trail.pop().unwrap();
            self.remaining += e.contrib - self.contrib[e.app];
            self.contrib[e.app] = e.contrib;
            self.intervals[e.app] = e.interval;
        }
    }

    /// Propagates the decision `app = value` to undecided neighbors.
    /// Returns false if some undecided app's admissible set became empty.
    fn propagate(&mut self, app: usize, value: usize) -> bool {
        // Outgoing edges: a triggered edge forces its (undecided, later)
        // target on, at `to_mode` or better.
        for &e in self.instance.edges_from(app) {
            let dep = self.instance.dependencies()[e];
            if dep.to_app <= app {
                continue; // already decided; encoded when it was decided
            }
            let triggered = value >= 1 && value <= dep.from_mode;
            if triggered {
                let ok = self.tighten(dep.to_app, |iv| {
                    iv.off = false;
                    iv.hi = iv.hi.min(dep.to_mode);
                });
                if !ok {
                    return false;
                }
            }
        }
        // Incoming edges from undecided (later) sources: if our decided
        // value breaks the edge's requirement, the source must never
        // trigger it, i.e. its modes 1..=from_mode become inadmissible.
        for &e in self.instance.edges_into(app) {
            let dep = self.instance.dependencies()[e];
            if dep.from_app <= app {
                continue;
            }
            let satisfied = value >= 1 && value <= dep.to_mode;
            if !satisfied {
                let ok = self.tighten(dep.from_app, |iv| {
                    iv.lo = iv.lo.max(dep.from_mode + 1);
                });
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    fn dfs(&mut self, depth: usize) {
        if self.timed_out {
            return;
        }
        let n = self.instance.app_count();
        if depth == n {
            // Complete assignment; feasibility holds by construction.
            let better = match &self.incumbent {
                Some((best, _)) => self.score > *best,
                None => true,
            };
            if better {
                self.incumbent = Some((self.score, Candidate(self.partial.clone())));
            }
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(256) && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }

        let interval = self.intervals[depth];
        let app = &self.instance.apps()[depth];
        // Branch values: off first, then most degraded toward nominal.
        let mut values: Vec<usize> =
            Vec::with_capacity(interval.hi.saturating_sub(interval.lo) + 2);
        if interval.off {
            values.push(0);
        }
        if !interval.modes_empty() {
            values.extend((interval.lo..=interval.hi).rev());
        }

        let removed_contrib = self.contrib[depth];
        self.remaining -= removed_contrib;
        for value in values {
            // Budget filter: a prefix that already overshoots can never
            // complete feasibly (requirements are non-negative).
            if let Some(mode) = app.mode(value) {
                let over = mode
                    .requirements
                    .0
                    .iter()
                    .zip(&self.usage)
                    .zip(&self.instance.budgets().0)
                    .any(|((r, u), b)| u + r > b + RESOURCE_EPSILON);
                if over {
                    self.pruned_resource += 1;
                    continue;
                }
            }

            let mark = self.trail.len();
            let gain = app.axil_at(value);
            if !self.propagate(depth, value) {
                self.pruned_dependency += 1;
                self.undo_to(mark);
                continue;
            }
            // Optimistic completion: current score + this value + the best
            // every later app could still contribute.
            if self.use_bound {
                let bound = self.score + gain + self.remaining;
                let beaten = match &self.incumbent {
                    Some((best, _)) => bound <= *best,
                    None => false,
                };
                if beaten {
                    self.pruned_bound += 1;
                    self.undo_to(mark);
                    continue;
                }
            }

            self.partial[depth] = value;
            self.score += gain;
            if let Some(mode) = app.mode(value) {
                for (u, r) in self.usage.iter_mut().zip(&mode.requirements.0) {
                    *u += *r;
                }
            }

            self.dfs(depth + 1);

            if let Some(mode) = app.mode(value) {
                for (u, r) in self.usage.iter_mut().zip(&mode.requirements.0) {
                    *u -= *r;
                }
            }
            self.score -= gain;
            self.partial[depth] = 0;
            self.undo_to(mark);
            if self.timed_out {
                break;
            }
        }
        self.remaining += removed_contrib;
    }
}

/// Proves the optimal assignment for the requested apps by branch-and-bound.
///
/// Apps outside `requested` are pinned off. The search seeds its incumbent
/// with the greedy heuristic's result (when admissible) so bound pruning
/// bites immediately; pass `opts.initial` to override the seed. When
/// `opts.timeout` is unset a default of [`DEFAULT_EXACT_TIMEOUT`] applies —
/// unlike the heuristic solvers, an uncapped exact search is rarely wanted.
///
/// Status is `optimal` when the tree was exhausted, `timeout_partial` with
/// the best incumbent otherwise, and `failed` only when restrictive bounds
/// admit no candidate at all. Counters: `nodes_explored`, `pruned_resource`,
/// `pruned_dependency`, `pruned_bound`.
pub fn solve_exact(
    instance: &ProblemInstance,
    requested: &[usize],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    solve_exact_inner(instance, requested, opts, true)
}

fn solve_exact_inner(
    instance: &ProblemInstance,
    requested: &[usize],
    opts: &SolveOptions,
    use_bound: bool,
) -> Result<SolveReport> {
    let start_time = Instant::now();
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
    let intervals: Vec<Interval> = (0..n)
        .map(|i| {
            if is_requested[i] {
                Interval::from_domain(&domains[i])
            } else {
                Interval {
                    off: true,
                    lo: 1,
                    hi: 0,
                } // pinned off
            }
        })
        .collect();
    if intervals.iter().any(|iv| iv.empty()) {
        // Some app has no admissible value at all; nothing can be assigned.
        let all_off = Candidate::all_off(n);
        let feasible = instance.is_feasible(&all_off)?.feasible;
        return Ok(SolveReport {
            candidate: all_off,
            score: 0.0,
            feasible,
            status: SolveStatus::Failed,
            elapsed: start_time.elapsed(),
            counters: BTreeMap::new(),
        });
    }

    let timeout = opts.timeout.unwrap_or(DEFAULT_EXACT_TIMEOUT);

    // Incumbent seed: caller-provided start, else the greedy heuristic's
    // candidate, else all-off; whichever is admissible and feasible.
    let seed_candidate = match &opts.initial {
        Some(c) => Some(c.clone()),
        None => {
            let h_opts = SolveOptions {
                timeout: None,
                mode_bounds: opts.mode_bounds.clone(),
                initial: None,
            };
            solve_heuristic(instance, requested, &h_opts)
                .ok()
                .map(|r| r.candidate)
        }
    };
    let mut incumbent: Option<(f64, Candidate)> = None;
    if let Some(c) = seed_candidate {
        let in_domain = instance.check_candidate(&c).is_ok()
            && c.0.iter().enumerate().all(|(i, &v)| {
                if is_requested[i] {
                    domains[i].allows(v)
                } else {
                    v == 0
                }
            });
        if in_domain && instance.is_feasible(&c)?.feasible {
            incumbent = Some((instance.score(&c)?, c));
        }
    }
    if incumbent.is_none() {
        let all_off = Candidate::all_off(n);
        if intervals.iter().all(|iv| iv.off) && instance.is_feasible(&all_off)?.feasible {
            incumbent = Some((0.0, all_off));
        }
    }

    let contrib: Vec<f64> = (0..n)
        .map(|i| {
            let app = &instance.apps()[i];
            let iv = &intervals[i];
            let mut best: f64 = 0.0;
            if !iv.modes_empty() {
                for j in iv.lo..=iv.hi {
                    best = best.max(app.axil_at(j));
                }
            }
            best
        })
        .collect();
    let remaining: f64 = contrib.iter().sum();

    let mut search = Search {
        instance,
        deadline: start_time + timeout,
        use_bound,
        intervals,
        contrib,
        remaining,
        trail: Vec::new(),
        partial: vec![0; n],
        usage: vec![0.0; instance.resource_count()],
        score: 0.0,
        incumbent,
        nodes: 0,
        pruned_resource: 0,
        pruned_dependency: 0,
        pruned_bound: 0,
        timed_out: false,
    };
    search.dfs(0);

    let counters = BTreeMap::from([
        ("nodes_explored".to_string(), search.nodes),
        ("pruned_resource".to_string(), search.pruned_resource),
        ("pruned_dependency".to_string(), search.pruned_dependency),
        ("pruned_bound".to_string(), search.pruned_bound),
    ]);
    let elapsed = start_time.elapsed();
    match search.incumbent {
        Some((_, candidate)) => {
            let score = instance.score(&candidate)?;
            Ok(SolveReport {
                candidate,
                score,
                feasible: true,
                status: if search.timed_out {
                    SolveStatus::TimeoutPartial
                } else {
                    SolveStatus::Optimal
                },
                elapsed,
                counters,
            })
        }
        None => {
            let all_off = Candidate::all_off(n);
            let feasible = instance.is_feasible(&all_off)?.feasible;
            Ok(SolveReport {
                candidate: all_off,
                score: 0.0,
                feasible,
                status: SolveStatus::Failed,
                elapsed,
                counters,
            })
        }
    }
}

/// Enumerates every candidate over the requested apps (others pinned off)
/// and returns the feasible maximum, breaking score ties toward the
/// lexicographically smallest candidate.
///
/// Refuses instances whose candidate count exceeds [`BRUTE_FORCE_GUARD`].
pub fn brute_force(instance: &ProblemInstance, requested: &[usize]) -> Result<SolveReport> {
    let start_time = Instant::now();
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
    let mut space: u128 = 1;
    for (i, &on) in is_requested.iter().enumerate() {
        if on {
            space = space.saturating_mul(instance.apps()[i].mode_count() as u128 + 1);
        }
        if space > BRUTE_FORCE_GUARD {
            return Err(Error::SearchSpaceTooLarge {
                size: space,
                guard: BRUTE_FORCE_GUARD,
            });
        }
    }

    let mut current = Candidate::all_off(n);
    let mut best: Option<(f64, Candidate)> = None;
    let mut visited: u64 = 0;
    loop {
        visited += 1;
        if instance.is_feasible(&current)?.feasible {
            let score = instance.score(&current)?;
            let take = match &best {
                None => true,
                // Strictly better score wins; on exact ties the smaller
                // candidate wins, and enumeration order is ascending, so
                // the first hit already is the lexicographic minimum.
                Some((b, _)) => score > *b,
            };
            if take {
                best = Some((score, current.clone()));
            }
        }
        // Odometer increment over requested positions, last position
        // fastest; wraps to None when exhausted. Ascending in the usual
        // lexicographic order of the candidate vector.
        let mut pos = n;
        let mut done = true;
        while pos > 0 {
            pos -= 1;
            if !is_requested[pos] {
                continue;
            }
            if current.0[pos] < instance.apps()[pos].mode_count() {
                current.0[pos] += 1;
                for (c, &on) in current.0[pos + 1..]
                    .iter_mut()
                    .zip(&is_requested[pos + 1..])
                {
                    if on {
                        *c = 0;
                    }
                }
                done = false;
                break;
            }
        }
        if done {
            break;
        }
    }

    let (score, candidate) = best.expect("all-off is always enumerated and feasible");
    Ok(SolveReport {
        candidate,
        score,
        feasible: true,
        status: SolveStatus::Optimal,
        elapsed: start_time.elapsed(),
        counters: BTreeMap::from([("nodes_explored".to_string(), visited)]),
    })
}
