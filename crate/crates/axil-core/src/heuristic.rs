//! Greedy upgrade heuristic.
//!
//! Starting from everything off, repeatedly evaluates every one-step upgrade
//! (enable an off app at its most degraded mode, or shift a running app one
//! mode toward nominal), pulls in whatever the dependency edges force, scores
//! each transition by priority gained per quadratic resource cost, and
//! commits the best one. Stops when no transition improves. The committed
//! candidate is feasible after every iteration, so the final output is
//! always feasible.
//!
//! Two things keep sweeps cheap. Transitions are evaluated incrementally
//! against the running usage vector, so an evaluation touches only the apps
//! the transition actually changes. And each sweep prunes with fitness
//! upper bounds ([`SweepPruner`]): candidates are graded statically and
//! visited in ascending order of estimated transition weight, so the cheap
//! ones fix a strong best fitness first; heavier dependency cascades are
//! then walked in growing chunks and re-bounded at every pause, abandoning
//! a hopeless candidate after a prefix of its closure. Skipped candidates
//! provably cannot win their sweep, so the committed trajectory is
//! identical to exhaustive evaluation.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{
    mode_domains, Candidate, ModeDomain, ProblemInstance, ResourceVector, SolveOptions,
    SolveReport, SolveStatus, RESOURCE_EPSILON,
};

/// Enforces every dependency edge on `candidate` by raising target apps,
/// to a fixed point.
///
/// For each edge `(i, j) -> (k, l)` whose source is active at functionality
/// level `j` or better (`1 <= C[i] <= j`) but whose target is off or more
/// degraded than `l`, the target is set to exactly `l`. Raising a target can
/// trigger further edges, so changed apps are reprocessed until quiet. No
/// app's functionality is ever lowered, and each correction strictly raises
/// one app's functionality, so the loop terminates.
pub fn bump_dependencies(instance: &ProblemInstance, candidate: &Candidate) -> Result<Candidate> {
    instance.check_candidate(candidate)?;
    let mut c = candidate.clone();
    // Worklist of apps whose value changed (or, initially, all apps with
    // outgoing edges).
    let mut pending: Vec<usize> = (0..instance.app_count())
        .filter(|&i| !instance.edges_from(i).is_empty())
        .collect();
    while let Some(i) = pending.pop() {
        let source = c.0[i];
        if source == 0 {
            continue;
        }
        for &e in instance.edges_from(i) {
            let dep = &instance.dependencies()[e];
            if source > dep.from_mode {
                continue; // source too degraded, edge dormant
            }
            let target = c.0[dep.to_app];
            if target == 0 || target > dep.to_mode {
                c.0[dep.to_app] = dep.to_mode;
                pending.push(dep.to_app);
            }
        }
    }
    Ok(c)
}

/// Reusable state for incremental dependency closures: `patched` mirrors the
/// base candidate except at the apps listed in `touched`. Persisting it
/// across evaluations keeps the sweep free of per-candidate allocations and
/// makes every mode lookup a plain array read.
struct DeltaScratch {
    patched: Vec<usize>,
    touched: Vec<usize>,
    pending: Vec<usize>,
}

impl DeltaScratch {
    fn new(base: &Candidate) -> Self {
        DeltaScratch {
            patched: base.0.clone(),
            touched: Vec::new(),
            pending: Vec::new(),
        }
    }

    /// Starts the dependency closure of raising `app` to `target`; the walk
    /// itself runs through [`Self::resume`].
    ///
    /// Requires `patched == base` on entry (guaranteed between evaluations by
    /// [`Self::revert`]) and a `base` that already satisfies every dependency
    /// edge — true for the committed candidate at every point of the greedy
    /// sweep. Violations can then only originate at `app` and spread through
    /// freshly raised apps, so the walk visits the affected subgraph only and
    /// the result matches [`bump_dependencies`] on the fully patched
    /// candidate. Raises strictly increase functionality, so a touched app
    /// never returns to its base mode and membership in `touched` is exactly
    /// `patched[a] != base[a]`.
    fn begin_raise(&mut self, app: usize, target: usize) {
        debug_assert!(self.touched.is_empty() && self.pending.is_empty());
        self.patched[app] = target;
        self.touched.push(app);
        self.pending.push(app);
    }

    /// Propagates up to `budget` worklist entries of the walk started by
    /// [`Self::begin_raise`]. Returns true once the closure is complete;
    /// false means it paused mid-walk (resume further, or [`Self::revert`]).
    fn resume(&mut self, instance: &ProblemInstance, base: &Candidate, budget: usize) -> bool {
        let mut left = budget;
        while left > 0 {
            let Some(i) = self.pending.pop() else {
                return true;
            };
            left -= 1;
            let source = self.patched[i];
            if source == 0 {
                continue;
            }
            for &e in instance.edges_from(i) {
                let dep = &instance.dependencies()[e];
                if source > dep.from_mode {
                    continue; // source too degraded, edge dormant
                }
                let value = self.patched[dep.to_app];
                if value == 0 || value > dep.to_mode {
                    if value == base.0[dep.to_app] {
                        self.touched.push(dep.to_app);
                    }
                    self.patched[dep.to_app] = dep.to_mode;
                    self.pending.push(dep.to_app);
                }
            }
        }
        self.pending.is_empty()
    }

    /// Walks the closure of raising `app` to `target` to completion, leaving
    /// the changed apps in `touched` with their new modes in `patched`. See
    /// [`Self::begin_raise`] for the precondition on `base`.
    fn close_raise(
        &mut self,
        instance: &ProblemInstance,
        base: &Candidate,
        app: usize,
        target: usize,
    ) {
        self.begin_raise(app, target);
        self.resume(instance, base, usize::MAX);
    }

    /// Undoes the last closure (complete or paused), restoring
    /// `patched == base`.
    fn revert(&mut self, base: &Candidate) {
        for &a in &self.touched {
            self.patched[a] = base.0[a];
        }
        self.touched.clear();
        self.pending.clear();
    }
}

/// Winning transition of a sweep: fitness, app index and the (app, final
/// mode) changes to commit.
type BestTransition = Option<(f64, usize, Vec<(usize, usize)>)>;

/// Per-sweep candidate pruning for [`solve_heuristic`].
///
/// On densely connected instances the dominant sweep cost is walking each
/// candidate's dependency closure. Most of that work is wasted: a transition
/// that drags in many forced raises pays their combined resource cost and
/// usually lands far below the sweep winner's fitness. The pruner grades
/// every candidate with a cheap fitness upper bound at two points:
///
/// * statically, before any walk ([`Self::bound`]) — priority gain summed
///   over every dependency path (shared targets may be counted repeatedly,
///   never dropped) and capped by the total forced gain available, divided
///   by a cost floor (the candidate's own usage delta plus the single most
///   expensive chain of forced raises);
/// * at pauses of the closure walk itself ([`Self::pause_bound`]) — the
///   exact gain and usage of the prefix walked so far plus the static
///   potential of the unprocessed frontier. Forced raises only ever add
///   usage, so the partial cost is a floor and the bound tightens as the
///   walk deepens.
///
/// The sweep visits candidates in ascending order of estimated transition
/// weight, so the cheap ones fix a strong best fitness first and a heavy
/// candidate is walked only while its bound still beats that best. Skipped
/// candidates provably lose the sweep, so the result matches exhaustive
/// evaluation.
///
/// Every bound direction needs requirements that weakly rise toward nominal;
/// on instances that break that convention the pruner deactivates
/// (`active = false`) and every candidate is evaluated exactly.
struct SweepPruner {
    active: bool,
    /// Apps ordered targets-before-sources, so cascade bounds of every
    /// dependency successor are final before its sources are graded.
    reverse_topo: Vec<usize>,
    /// `cascade_gain[a][v]`: upper bound on the priority gained by the raises
    /// that holding app `a` at mode `v` forces elsewhere (index 0 unused).
    /// Sums over every dependency path, so diamonds count double.
    cascade_gain: Vec<Vec<f64>>,
    /// `cascade_cost[a][v]`: lower bound on the usage cost of those raises —
    /// the most expensive single dependency chain, priced against the running
    /// usage vector.
    cascade_cost: Vec<Vec<f64>>,
    /// `cascade_weight[a][v]`: path-summed count of forced raises; an
    /// (over-)estimate of the closure size used only to order evaluations.
    cascade_weight: Vec<Vec<f64>>,
    /// Per app, priority at its committed mode (0 when off).
    axil_cur: Vec<f64>,
    /// Per edge, the quadratic usage cost of the raise it forces, against
    /// the running usage; 0 for edges that are satisfied or dormant.
    edge_cost: Vec<f64>,
    /// Per app, the largest priority jump any currently unsatisfied edge
    /// could force on it (0 when no such edge points at it).
    forced_gain: Vec<f64>,
    /// Sum of `forced_gain`: no cascade whatsoever can gain more, which caps
    /// the path-summed `cascade_gain` when diamonds blow it up.
    total_forced_gain: f64,
}

impl SweepPruner {
    fn new(instance: &ProblemInstance) -> Self {
        let n = instance.app_count();
        let monotone = instance.apps().iter().all(|a| {
            (1..a.mode_count()).all(|j| {
                let stronger = &a.mode(j).expect("mode j in range").requirements;
                let weaker = &a.mode(j + 1).expect("mode j+1 in range").requirements;
                stronger.0.iter().zip(&weaker.0).all(|(s, w)| s >= w)
            })
        });
        let mut graph = petgraph::graph::DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for dep in instance.dependencies() {
            graph.add_edge(nodes[dep.from_app], nodes[dep.to_app], ());
        }
        // Instances validate the app-level projection acyclic, so the sort
        // cannot fail; stay inactive rather than panic if it ever does.
        let mut reverse_topo: Vec<usize> = petgraph::algo::toposort(&graph, None)
            .map(|order| order.into_iter().map(|ix| ix.index()).collect())
            .unwrap_or_default();
        reverse_topo.reverse();
        let per_level = |instance: &ProblemInstance| {
            instance
                .apps()
                .iter()
                .map(|a| vec![0.0; a.mode_count() + 1])
                .collect()
        };
        SweepPruner {
            active: monotone && reverse_topo.len() == n,
            reverse_topo,
            cascade_gain: per_level(instance),
            cascade_cost: per_level(instance),
            cascade_weight: per_level(instance),
            axil_cur: vec![0.0; n],
            edge_cost: vec![0.0; instance.dependencies().len()],
            forced_gain: vec![0.0; n],
            total_forced_gain: 0.0,
        }
    }

    /// Refreshes the cascade bounds against the committed candidate and the
    /// running usage vector.
    ///
    /// An edge contributes only while its target sits below the forced mode,
    /// exactly like the closure walk. Per app the edge contributions are
    /// bucketed by source threshold and suffix-folded (sums for gain and
    /// weight, max for cost — an app at mode `v` triggers every edge with
    /// threshold `>= v`), so a refresh costs O(edges × support + modes).
    fn prepare(
        &mut self,
        instance: &ProblemInstance,
        supports: &[Vec<usize>],
        current: &Candidate,
        usage: &ResourceVector,
    ) {
        if !self.active {
            return;
        }
        for (a, app) in instance.apps().iter().enumerate() {
            self.axil_cur[a] = app.axil_at(current.0[a]);
            self.forced_gain[a] = 0.0;
        }
        for (e, dep) in instance.dependencies().iter().enumerate() {
            let x = dep.to_app;
            let sitting = current.0[x];
            if sitting != 0 && sitting <= dep.to_mode {
                self.edge_cost[e] = 0.0;
                continue;
            }
            let app = &instance.apps()[x];
            self.forced_gain[x] =
                self.forced_gain[x].max((app.axil_at(dep.to_mode) - self.axil_cur[x]).max(0.0));
            let req = |j: usize, k: usize| app.mode(j).map_or(0.0, |m| m.requirements[k]);
            let mut cost = 0.0;
            for &k in &supports[x] {
                let delta = (req(dep.to_mode, k) - req(sitting, k)).max(0.0);
                cost += (2.0 * usage[k] + delta) * delta;
            }
            self.edge_cost[e] = cost;
        }
        self.total_forced_gain = self.forced_gain.iter().sum();
        for &a in &self.reverse_topo {
            for slot in self.cascade_gain[a].iter_mut() {
                *slot = 0.0;
            }
            for slot in self.cascade_cost[a].iter_mut() {
                *slot = 0.0;
            }
            for slot in self.cascade_weight[a].iter_mut() {
                *slot = 0.0;
            }
            for &e in instance.edges_from(a) {
                let dep = &instance.dependencies()[e];
                let x = dep.to_app;
                let sitting = current.0[x];
                if sitting != 0 && sitting <= dep.to_mode {
                    continue; // already satisfied, the walk would skip it too
                }
                let forced = instance.apps()[x].axil_at(dep.to_mode);
                let gain = (forced - self.axil_cur[x]).max(0.0) + self.cascade_gain[x][dep.to_mode];
                let cost = self.edge_cost[e] + self.cascade_cost[x][dep.to_mode];
                let weight = 1.0 + self.cascade_weight[x][dep.to_mode];
                let v = dep.from_mode;
                self.cascade_gain[a][v] += gain;
                self.cascade_cost[a][v] = self.cascade_cost[a][v].max(cost);
                self.cascade_weight[a][v] += weight;
            }
            for v in (1..self.cascade_gain[a].len() - 1).rev() {
                self.cascade_gain[a][v] += self.cascade_gain[a][v + 1];
                self.cascade_cost[a][v] = self.cascade_cost[a][v].max(self.cascade_cost[a][v + 1]);
                self.cascade_weight[a][v] += self.cascade_weight[a][v + 1];
            }
        }
    }

    /// Upper bound on the fitness of raising `i` to `target` on top of the
    /// running usage. Zero means the candidate provably cannot commit this
    /// sweep (no gain to be had, or its own delta already overshoots).
    fn bound(
        &self,
        instance: &ProblemInstance,
        support: &[usize],
        usage: &ResourceVector,
        i: usize,
        cur: usize,
        target: usize,
    ) -> f64 {
        let app = &instance.apps()[i];
        // A cascade never contains the raised app itself (the dependency
        // graph is acyclic), so everything else's forced gains cap it.
        let cascade_cap = (self.total_forced_gain - self.forced_gain[i]).max(0.0);
        let num = (app.axil_at(target) - self.axil_cur[i]).max(0.0)
            + self.cascade_gain[i][target].min(cascade_cap);
        let budgets = instance.budgets();
        let req = |j: usize, k: usize| app.mode(j).map_or(0.0, |m| m.requirements[k]);
        let mut den = self.cascade_cost[i][target];
        for &k in support {
            let u = usage[k];
            let u_new = u + req(target, k) - req(cur, k);
            if u_new > budgets[k] + RESOURCE_EPSILON {
                return 0.0;
            }
            den += u_new * u_new - u * u;
        }
        if den > 0.0 {
            num / den
        } else if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// Upper bound on the final fitness of the paused closure walk in
    /// `scratch` (raising app `i`, partially propagated).
    ///
    /// The prefix walked so far contributes its exact gain and usage.
    /// Requirements weakly rise toward nominal, so finishing the walk can
    /// only add usage: the partial cost is a lower bound on the final cost,
    /// and a budget already overshot stays overshot (bound 0). The gain
    /// still to come is bounded by the static path-summed potential of the
    /// unprocessed frontier, capped by the forced gain not yet realized.
    #[allow(clippy::too_many_arguments)]
    fn pause_bound(
        &self,
        instance: &ProblemInstance,
        supports: &[Vec<usize>],
        usage: &ResourceVector,
        current: &Candidate,
        scratch: &DeltaScratch,
        i: usize,
        new_usage: &mut ResourceVector,
    ) -> f64 {
        let mut gain = 0.0;
        new_usage.0.copy_from_slice(&usage.0);
        for &a in &scratch.touched {
            let app = &instance.apps()[a];
            let (m_new, m_old) = (scratch.patched[a], current.0[a]);
            gain += app.axil_at(m_new) - app.axil_at(m_old);
            let req = |j: usize, k: usize| app.mode(j).map_or(0.0, |m| m.requirements[k]);
            for &k in &supports[a] {
                new_usage.0[k] += req(m_new, k) - req(m_old, k);
            }
        }
        let budgets = instance.budgets();
        let mut den = 0.0;
        for k in 0..instance.resource_count() {
            if new_usage[k] > budgets[k] + RESOURCE_EPSILON {
                return 0.0;
            }
            den += new_usage[k] * new_usage[k] - usage[k] * usage[k];
        }
        // Gain already realized on the cascade eats into the forced-gain
        // cap; the raised app itself is never part of its own cascade (the
        // dependency graph is acyclic). Per cascaded app, realized plus
        // remaining gain never exceeds its forced-gain entry, so the cap
        // stays valid mid-walk.
        let self_gain = instance.apps()[i].axil_at(scratch.patched[i]) - self.axil_cur[i];
        let cap = (self.total_forced_gain - self.forced_gain[i] - (gain - self_gain)).max(0.0);
        let mut frontier = 0.0;
        for &x in &scratch.pending {
            frontier += self.cascade_gain[x][scratch.patched[x]];
        }
        let num = gain + frontier.min(cap);
        if den > 0.0 {
            num / den
        } else if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Dependency closure of raising `app` to `target` on top of `base`,
/// returned as the changed apps' `(index, final mode)` pairs (one entry per
/// app, `app` itself included; cascades may raise it past `target`). See
/// [`DeltaScratch::close_raise`] for the precondition on `base`.
#[cfg(test)]
fn bump_delta(
    instance: &ProblemInstance,
    base: &Candidate,
    app: usize,
    target: usize,
) -> Vec<(usize, usize)> {
    let mut scratch = DeltaScratch::new(base);
    scratch.close_raise(instance, base, app, target);
    scratch
        .touched
        .iter()
        .map(|&a| (a, scratch.patched[a]))
        .collect()
}

/// Quadratic fill cost of moving one resource from usage `u` to `u_prime`
/// against budget `b`: `u_prime^2 - u^2`, or the saturation sentinel `0`
/// when `u_prime` overshoots the budget (beyond [`RESOURCE_EPSILON`]).
///
/// The quadratic makes a given increment more expensive on a fuller
/// resource, which is what steers the greedy sweep toward balanced usage.
pub fn resource_cost(u: f64, u_prime: f64, b: f64) -> Result<f64> {
    if !(0.0 <= u && u <= u_prime) {
        return Err(Error::invalid_argument(format!(
            "resource_cost requires 0 <= u <= u_prime, got u = {u}, u_prime = {u_prime}"
        )));
    }
    if u_prime > b + RESOURCE_EPSILON {
        Ok(0.0)
    } else {
        Ok(u_prime * u_prime - u * u)
    }
}

/// Fitness of the transition `c_old -> c_new`: priority gained divided by
/// the total quadratic resource cost.
///
/// Both usages are recomputed from scratch, so the value accounts for every
/// app the transition changed (the upgraded app plus any dependency bumps).
/// Returns 0 when the transition overshoots any budget (invalid move), and
/// `+inf` when it gains priority at zero resource cost, so free upgrades
/// always win a sweep. A zero-cost transition that gains nothing scores 0.
pub fn transition_fitness(
    instance: &ProblemInstance,
    c_new: &Candidate,
    c_old: &Candidate,
) -> Result<f64> {
    let usage_old = instance.usage(c_old)?;
    let usage_new = instance.usage(c_new)?;
    let gain = instance.score(c_new)? - instance.score(c_old)?;
    Ok(fitness_from_usages(instance, &usage_new, &usage_old, gain))
}

/// Shared fitness core: priority `gain` over the quadratic cost of moving
/// from `usage_old` to `usage_new`, with the same overshoot and zero-cost
/// conventions as [`transition_fitness`].
fn fitness_from_usages(
    instance: &ProblemInstance,
    usage_new: &ResourceVector,
    usage_old: &ResourceVector,
    gain: f64,
) -> f64 {
    let budgets = instance.budgets();
    let mut denom = 0.0;
    for k in 0..instance.resource_count() {
        if usage_new[k] > budgets[k] + RESOURCE_EPSILON {
            return 0.0;
        }
        denom += usage_new[k] * usage_new[k] - usage_old[k] * usage_old[k];
    }
    if denom == 0.0 {
        if gain > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        gain / denom
    }
}

/// Runs the greedy upgrade heuristic over the apps listed in `requested`.
///
/// Apps outside `requested` are never upgraded directly but may be activated
/// by dependency bumps. The run starts from `opts.initial` (default all-off)
/// projected into `opts.mode_bounds` and repaired by [`bump_dependencies`];
/// an infeasible starting point is an error, never silently patched.
///
/// The report's status is `heuristic_complete` on natural termination or
/// `timeout_partial` if `opts.timeout` expires mid-run; either way the
/// candidate is feasible. Counters: `iterations` (committed upgrades),
/// `evaluations` (exact transition fitness computations) and `pruned`
/// (candidates dismissed by their fitness bound alone).
pub fn solve_heuristic(
    instance: &ProblemInstance,
    requested: &[usize],
    opts: &SolveOptions,
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

    // Starting point: initial candidate (or all-off), confined to bounds,
    // then dependency-repaired.
    let raw_start = opts
        .initial
        .clone()
        .unwrap_or_else(|| Candidate::all_off(n));
    let clamped = match &opts.mode_bounds {
        Some(b) => instance.clamp_to_bounds(&raw_start, b)?,
        None => raw_start,
    };
    let mut current = bump_dependencies(instance, &clamped)?;
    check_in_domains(&current, &domains)?;
    let start_report = instance.is_feasible(&current)?;
    if !start_report.feasible {
        return Err(Error::invalid_argument(format!(
            "starting candidate {current} is infeasible: {}",
            start_report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }

    let mut current_score = instance.score(&current)?;
    let mut usage_current = instance.usage(&current)?;
    let mut iterations: u64 = 0;
    let mut evaluations: u64 = 0;
    let mut pruned: u64 = 0;
    let mut status = SolveStatus::HeuristicComplete;

    // Sparse requirement supports: the resources each app can touch in any
    // of its modes. Patching a transition then costs O(support size) per
    // changed app instead of O(catalog size).
    let supports: Vec<Vec<usize>> = instance
        .apps()
        .iter()
        .map(|a| {
            (0..instance.resource_count())
                .filter(|&k| a.modes.iter().any(|m| m.requirements[k] != 0.0))
                .collect()
        })
        .collect();
    let mut scratch = DeltaScratch::new(&current);
    let mut new_usage = usage_current.clone();
    let mut pruner = SweepPruner::new(instance);
    // Reused per sweep: (weight, bound, app, upgrade target), sorted by
    // ascending estimated transition weight.
    let mut sweep_order: Vec<(f64, f64, usize, usize)> = Vec::with_capacity(requested.len());

    loop {
        if let Some(t) = opts.timeout {
            if start_time.elapsed() >= t {
                status = SolveStatus::TimeoutPartial;
                break;
            }
        }
        // One sweep: evaluate a single one-step upgrade per requested app and
        // keep the best strictly positive fitness, ties to the lowest app
        // index. Light candidates go first so the best exact fitness is
        // strong by the time the closure-heavy ones come up, and a candidate
        // whose fitness bound cannot beat that best is skipped without
        // walking its closure. With the pruner inactive every bound is
        // infinite, every weight zero, and this degenerates to a plain full
        // scan in app order.
        pruner.prepare(instance, &supports, &current, &usage_current);
        sweep_order.clear();
        for i in 0..n {
            if !is_requested[i] {
                continue;
            }
            let dom = &domains[i];
            let cur = current.0[i];
            let target = if cur == 0 {
                if dom.modes_empty() {
                    continue; // off-only domain, nothing to enable
                }
                dom.hi // enable at the most degraded admissible mode
            } else if cur > dom.lo {
                cur - 1 // one step toward nominal
            } else {
                continue; // at this app's functionality ceiling
            };
            let (weight, bound) = if pruner.active {
                (
                    pruner.cascade_weight[i][target],
                    pruner.bound(instance, &supports[i], &usage_current, i, cur, target),
                )
            } else {
                (0.0, f64::INFINITY)
            };
            sweep_order.push((weight, bound, i, target));
        }
        sweep_order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

        // The margin keeps rounding differences between the bounds' sparse
        // arithmetic and the exact path from discarding a true winner;
        // anything below it cannot even tie.
        fn beaten(bound: f64, best: &BestTransition) -> bool {
            match best {
                Some((f, _, _)) => bound < f * (1.0 - 1e-9),
                None => bound <= 0.0,
            }
        }
        let mut best: BestTransition = None;
        'candidates: for &(_, bound, i, target) in &sweep_order {
            if beaten(bound, &best) {
                pruned += 1;
                continue 'candidates;
            }
            if pruner.active {
                // Walk the closure in growing chunks, re-bounding at every
                // pause with the exact partial gain and cost: the deeper the
                // walk, the tighter the bound, so a hopeless heavy cascade
                // is abandoned after a prefix instead of walked in full.
                scratch.begin_raise(i, target);
                let mut chunk = 4;
                while !scratch.resume(instance, &current, chunk) {
                    let paused = pruner.pause_bound(
                        instance,
                        &supports,
                        &usage_current,
                        &current,
                        &scratch,
                        i,
                        &mut new_usage,
                    );
                    if beaten(paused, &best) {
                        pruned += 1;
                        scratch.revert(&current);
                        continue 'candidates;
                    }
                    chunk *= 3;
                }
            } else {
                scratch.close_raise(instance, &current, i, target);
            }
            for &a in &scratch.touched {
                if !domains[a].allows(scratch.patched[a]) {
                    scratch.revert(&current);
                    continue 'candidates; // a bump forced some app out of bounds
                }
            }
            // Incremental transition fitness: patch only the changed apps'
            // supports onto the running usage vector instead of rescanning
            // everything.
            new_usage.0.copy_from_slice(&usage_current.0);
            let mut gain = 0.0;
            for &a in &scratch.touched {
                let app = &instance.apps()[a];
                let (m_new, m_old) = (scratch.patched[a], current.0[a]);
                gain += app.axil_at(m_new) - app.axil_at(m_old);
                let req = |j: usize, k: usize| app.mode(j).map_or(0.0, |m| m.requirements[k]);
                for &k in &supports[a] {
                    new_usage.0[k] += req(m_new, k) - req(m_old, k);
                }
            }
            let fitness = fitness_from_usages(instance, &new_usage, &usage_current, gain);
            evaluations += 1;
            let wins = fitness > 0.0
                && best
                    .as_ref()
                    .is_none_or(|(f, j, _)| fitness > *f || (fitness == *f && i < *j));
            if wins {
                let changes = scratch
                    .touched
                    .iter()
                    .map(|&a| (a, scratch.patched[a]))
                    .collect();
                best = Some((fitness, i, changes));
            }
            scratch.revert(&current);
        }
        match best {
            Some((_, _, changes)) => {
                for &(a, m_new) in &changes {
                    current.0[a] = m_new;
                    scratch.patched[a] = m_new; // keep the overlay in sync
                }
                // Commits are rare next to evaluations; recompute from
                // scratch so the running state (and the reported score)
                // carries no accumulated patch error.
                usage_current = instance.usage(&current)?;
                current_score = instance.score(&current)?;
                iterations += 1;
            }
            None => break, // no improving transition left
        }
    }

    debug_assert!(instance.is_feasible(&current)?.feasible);
    Ok(SolveReport {
        candidate: current,
        score: current_score,
        feasible: true,
        status,
        elapsed: start_time.elapsed(),
        counters: BTreeMap::from([
            ("iterations".to_string(), iterations),
            ("evaluations".to_string(), evaluations),
            ("pruned".to_string(), pruned),
        ]),
    })
}

fn in_domains(c: &Candidate, domains: &[ModeDomain]) -> bool {
    c.0.iter().zip(domains).all(|(&v, d)| d.allows(v))
}

fn check_in_domains(c: &Candidate, domains: &[ModeDomain]) -> Result<()> {
    if in_domains(c, domains) {
        Ok(())
    } else {
        Err(Error::invalid_argument(format!(
            "candidate {c} violates the mode bounds (a dependency repair may \
             conflict with a restrictive bound)"
        )))
    }
}
