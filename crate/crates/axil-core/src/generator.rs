//! Reproducible random instance generation over a star network.
//!
//! The modeled platform: `n_ecus` compute ECUs, each attached by its own
//! full-duplex Ethernet cable to a central switch that hosts no
//! applications. Every metered quantity is one catalog layer — global
//! energy, per-ECU cpu and memory, and two directed bandwidth layers per
//! cable — so the default five-ECU platform has 1 + 5 + 5 + 10 = 21 layers.
//!
//! Generation is a pure function of [`GenParams`] (seed included). The
//! random stream is a single ChaCha8 sequence consumed in a fixed, documented
//! order: ECU assignment, dependency DAG, mode counts, nominal requirements,
//! per-dependency flows, per-app mode scale factors, per-app priority
//! values, and finally mode-level dependency edges. Two builds with equal
//! params are bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AppSpec, Criticality, ModeDependencyEdge, ModeSpec, ProblemInstance, ResourceEntry,
    ResourceKind, ResourceVector,
};

/// Inclusive real interval used by generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealRange {
    pub lo: f64,
    pub hi: f64,
}

impl RealRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        RealRange { lo, hi }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && 0.0 <= self.lo && self.lo <= self.hi
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

impl IntRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        IntRange { lo, hi }
    }

    fn valid(&self) -> bool {
        self.lo <= self.hi
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.lo..=self.hi)
    }
}

/// Parameters of the random-instance protocol. Defaults produce the
/// standard benchmark shape: 20 apps, 10% dependency density, up to 5 modes,
/// compute demands of 5–20% of budget, 1–5 flows of 0.1–5 Mbps per
/// dependency, budgets of 100, five ECUs on 100 Mbps cables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub n_apps: usize,
    /// Dependency density relative to n(n-1)/2 possible app pairs.
    pub dep_density: f64,
    pub max_modes: usize,
    /// Nominal energy demand, percent of the energy budget.
    pub energy_pct: RealRange,
    /// Nominal cpu demand on the hosting ECU, percent of its budget.
    pub cpu_pct: RealRange,
    /// Nominal memory demand on the hosting ECU, percent of its budget.
    pub mem_pct: RealRange,
    /// Flow count per app-level dependency edge.
    pub flows_per_dep: IntRange,
    /// Per-flow bandwidth, Mbps.
    pub flow_mbps: RealRange,
    /// Budget (and capacity) of every energy/cpu/memory layer.
    pub budget_value: f64,
    pub n_ecus: usize,
    /// Budget (and capacity) of every directed link layer, Mbps.
    pub link_mbps: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_apps: 20,
            dep_density: 0.10,
            max_modes: 5,
            energy_pct: RealRange::new(5.0, 20.0),
            cpu_pct: RealRange::new(5.0, 20.0),
            mem_pct: RealRange::new(5.0, 20.0),
            flows_per_dep: IntRange::new(1, 5),
            flow_mbps: RealRange::new(0.1, 5.0),
            budget_value: 100.0,
            n_ecus: 5,
            link_mbps: 100.0,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_apps < 1 {
            return Err(Error::invalid_argument("n_apps must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.dep_density) {
            return Err(Error::invalid_argument(format!(
                "dep_density must lie in [0, 1], got {}",
                self.dep_density
            )));
        }
        if self.max_modes < 1 {
            return Err(Error::invalid_argument("max_modes must be at least 1"));
        }
        if self.n_ecus < 2 {
            return Err(Error::invalid_argument("n_ecus must be at least 2"));
        }
        for (name, r) in [
            ("energy_pct", &self.energy_pct),
            ("cpu_pct", &self.cpu_pct),
            ("mem_pct", &self.mem_pct),
            ("flow_mbps", &self.flow_mbps),
        ] {
            if !r.valid() {
                return Err(Error::invalid_argument(format!(
                    "{name} range ({}, {}) must be non-negative with lo <= hi",
                    r.lo, r.hi
                )));
            }
        }
        if !self.flows_per_dep.valid() {
            return Err(Error::invalid_argument(format!(
                "flows_per_dep range ({}, {}) must have lo <= hi",
                self.flows_per_dep.lo, self.flows_per_dep.hi
            )));
        }
        for (name, v) in [
            ("budget_value", self.budget_value),
            ("link_mbps", self.link_mbps),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid_argument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Layer index of the single global energy resource.
pub const ENERGY_LAYER: usize = 0;

/// The star platform's catalog geometry: which layer meters what.
///
/// Layer order: energy, then cpu per ECU, then memory per ECU, then per
/// cable the switch-bound ("up") and ECU-bound ("down") direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarTopology {
    pub n_ecus: usize,
}

impl StarTopology {
    pub fn new(n_ecus: usize) -> Self {
        StarTopology { n_ecus }
    }

    pub fn layer_count(&self) -> usize {
        1 + 4 * self.n_ecus
    }

    pub fn cpu_layer(&self, ecu: usize) -> usize {
        debug_assert!(ecu < self.n_ecus);
        1 + ecu
    }

    pub fn mem_layer(&self, ecu: usize) -> usize {
        debug_assert!(ecu < self.n_ecus);
        1 + self.n_ecus + ecu
    }

    /// Directed layer carrying traffic from `ecu` toward the switch.
    pub fn uplink_layer(&self, ecu: usize) -> usize {
        debug_assert!(ecu < self.n_ecus);
        1 + 2 * self.n_ecus + 2 * ecu
    }

    /// Directed layer carrying traffic from the switch toward `ecu`.
    pub fn downlink_layer(&self, ecu: usize) -> usize {
        debug_assert!(ecu < self.n_ecus);
        1 + 2 * self.n_ecus + 2 * ecu + 1
    }

    /// Directed link layers a flow from `from` to `to` crosses: its source's
    /// uplink and its destination's downlink, or nothing on the same ECU.
    pub fn route(&self, from: usize, to: usize) -> Vec<usize> {
        if from == to {
            Vec::new()
        } else {
            vec![self.uplink_layer(from), self.downlink_layer(to)]
        }
    }
}

/// Builds the resource catalog for `params`' star platform. Energy, cpu and
/// memory layers carry `budget_value`; link layers carry `link_mbps`.
pub fn build_catalog(params: &GenParams) -> Result<Vec<ResourceEntry>> {
    params.validate()?;
    let star = StarTopology::new(params.n_ecus);
    let mut entries = Vec::with_capacity(star.layer_count());
    entries.push(ResourceEntry {
        name: "energy".into(),
        kind: ResourceKind::Energy,
        budget_max: params.budget_value,
    });
    for e in 0..params.n_ecus {
        entries.push(ResourceEntry {
            name: format!("cpu_ecu{e}"),
            kind: ResourceKind::Cpu,
            budget_max: params.budget_value,
        });
    }
    for e in 0..params.n_ecus {
        entries.push(ResourceEntry {
            name: format!("mem_ecu{e}"),
            kind: ResourceKind::Memory,
            budget_max: params.budget_value,
        });
    }
    for e in 0..params.n_ecus {
        entries.push(ResourceEntry {
            name: format!("link_ecu{e}_up"),
            kind: ResourceKind::Link,
            budget_max: params.link_mbps,
        });
        entries.push(ResourceEntry {
            name: format!("link_ecu{e}_down"),
            kind: ResourceKind::Link,
            budget_max: params.link_mbps,
        });
    }
    debug_assert_eq!(entries.len(), star.layer_count());
    Ok(entries)
}

/// Randomly grows a directed acyclic graph on `n_apps` nodes to roughly
/// `density * n(n-1)/2` edges: repeatedly draw an ordered pair, add the
/// edge, and drop it again if it closed a cycle.
pub fn generate_dag<R: Rng>(n_apps: usize, density: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let max_pairs = n_apps.saturating_sub(1) * n_apps / 2;
    let target = (density * max_pairs as f64).round() as usize;
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(target);
    let mut out_adj = vec![Vec::<usize>::new(); n_apps];
    if target == 0 || n_apps < 2 {
        return edges;
    }
    // Any not-yet-connected pair is addable in at least one direction, so
    // random draws reach the target with probability 1; the attempt cap is
    // a pure safety net.
    let mut attempts = 0usize;
    let max_attempts = 1000 + 200 * max_pairs;
    while edges.len() < target && attempts < max_attempts {
        attempts += 1;
        let a = rng.gen_range(0..n_apps);
        let b = rng.gen_range(0..n_apps);
        if a == b || out_adj[a].contains(&b) {
            continue;
        }
        // Adding a -> b closes a cycle iff b already reaches a.
        if reaches(&out_adj, b, a) {
            continue;
        }
        out_adj[a].push(b);
        edges.push((a, b));
    }
    edges
}

/// Depth-first reachability over an adjacency list.
fn reaches(out_adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; out_adj.len()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if seen[v] {
            continue;
        }
        seen[v] = true;
        stack.extend(out_adj[v].iter().copied().filter(|&w| !seen[w]));
    }
    false
}

/// Draws the mode-level edges refining one app-level dependency
/// `(from_app, to_app)`: `k` edges, `k` uniform in `[1, min(m_from, m_to)]`,
/// whose source modes strictly increase and target modes never decrease, so
/// no two edges cross.
pub fn generate_mode_edges<R: Rng>(
    app_edge: (usize, usize),
    m_from: usize,
    m_to: usize,
    rng: &mut R,
) -> Vec<ModeDependencyEdge> {
    debug_assert!(m_from >= 1 && m_to >= 1);
    let k = rng.gen_range(1..=m_from.min(m_to));
    // Source modes: k distinct values of 1..=m_from, ascending.
    let mut from_modes: Vec<usize> = rand::seq::index::sample(rng, m_from, k)
        .into_iter()
        .map(|j| j + 1)
        .collect();
    from_modes.sort_unstable();
    // Target modes: k values of 1..=m_to, ascending (repeats allowed).
    let mut to_modes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=m_to)).collect();
    to_modes.sort_unstable();
    from_modes
        .into_iter()
        .zip(to_modes)
        .map(|(j, l)| ModeDependencyEdge {
            from_app: app_edge.0,
            from_mode: j,
            to_app: app_edge.1,
            to_mode: l,
        })
        .collect()
}

/// Draws `count` values in the open interval (0, 1), strictly descending.
/// Ties and endpoint hits have probability ~0 but are redrawn outright so
/// the strict ordering is guaranteed, not just almost-sure.
fn strictly_descending_unit<R: Rng>(count: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..count).map(|_| rng.gen::<f64>()).collect();
        v.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        let ok = v.iter().all(|x| 0.0 < *x && *x < 1.0) && v.windows(2).all(|w| w[0] > w[1]);
        if ok {
            return v;
        }
    }
}

/// Generates one complete instance from `params`.
///
/// Protocol, in draw order:
/// 1. each app is assigned an ECU uniformly;
/// 2. the app-level dependency DAG is grown to the target density;
/// 3. each app draws its mode count uniformly in `[1, max_modes]`;
/// 4. each app draws nominal energy/cpu/memory demands from the percent
///    ranges (values above a layer's budget are redrawn a few times, then
///    clamped — unreachable under default ranges);
/// 5. each dependency edge draws its flow count and per-flow bandwidths;
///    every flow adds its bandwidth to the *depending* (source) app's
///    nominal vector along the route between the two ECUs, capped at the
///    link budget. Same-ECU edges consume the same draws but add nothing;
/// 6. each app draws `m_i - 1` scale factors, sorted strictly descending in
///    (0, 1); mode `j`'s requirement vector is the nominal scaled by factor
///    `s_j` (with `s_1 = 1`), which enforces componentwise mode dominance;
/// 7. each app draws `m_i` priority values in (0, 2.5], sorted strictly
///    descending across modes;
/// 8. each dependency edge draws its mode-level refinement via
///    [`generate_mode_edges`].
pub fn generate_instance(params: &GenParams) -> Result<ProblemInstance> {
    params.validate()?;
    let star = StarTopology::new(params.n_ecus);
    let catalog = build_catalog(params)?;
    let budgets = ResourceVector(catalog.iter().map(|e| e.budget_max).collect());
    let n = params.n_apps;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // 1. ECU assignment.
    let assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..params.n_ecus)).collect();

    // 2. App-level DAG.
    let app_edges = generate_dag(n, params.dep_density, &mut rng);

    // 3. Mode counts.
    let mode_counts: Vec<usize> = (0..n)
        .map(|_| rng.gen_range(1..=params.max_modes))
        .collect();

    // 4. Nominal requirements (energy, cpu, mem; percent of budget).
    let draw_capped = |rng: &mut ChaCha8Rng, range: &RealRange, budget: f64| -> f64 {
        let mut value = range.sample(rng) / 100.0 * params.budget_value;
        for _ in 0..8 {
            if value <= budget {
                return value;
            }
            value = range.sample(rng) / 100.0 * params.budget_value;
        }
        value.min(budget)
    };
    let mut nominals: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0.0; star.layer_count()];
        v[ENERGY_LAYER] = draw_capped(&mut rng, &params.energy_pct, params.budget_value);
        v[star.cpu_layer(assignment[i])] =
            draw_capped(&mut rng, &params.cpu_pct, params.budget_value);
        v[star.mem_layer(assignment[i])] =
            draw_capped(&mut rng, &params.mem_pct, params.budget_value);
        nominals.push(v);
    }

    // 5. Flows: bandwidth lands on the depending app's link layers.
    for &(from, to) in &app_edges {
        let flow_count = params.flows_per_dep.sample(&mut rng);
        for _ in 0..flow_count {
            let mut bw = params.flow_mbps.sample(&mut rng);
            let route = star.route(assignment[from], assignment[to]);
            if route.is_empty() {
                continue; // same ECU: draw consumed, no bandwidth used
            }
            // Redraw a handful of times if the flow would overflow either
            // layer, then cap the addition at the remaining headroom.
            for _ in 0..8 {
                let fits = route
                    .iter()
                    .all(|&l| nominals[from][l] + bw <= params.link_mbps);
                if fits {
                    break;
                }
                bw = params.flow_mbps.sample(&mut rng);
            }
            for &l in &route {
                let headroom = (params.link_mbps - nominals[from][l]).max(0.0);
                nominals[from][l] += bw.min(headroom);
            }
        }
    }

    // 6. Mode scale factors (s_1 = 1 implicit).
    let scales: Vec<Vec<f64>> = mode_counts
        .iter()
        .map(|&m| strictly_descending_unit(m - 1, &mut rng))
        .collect();

    // 7. Priority values, strictly descending in (0, 2.5].
    let axils: Vec<Vec<f64>> = mode_counts
        .iter()
        .map(|&m| loop {
            let mut v: Vec<f64> = (0..m).map(|_| 2.5 * (1.0 - rng.gen::<f64>())).collect();
            v.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
            if v.windows(2).all(|w| w[0] > w[1]) && v.iter().all(|x| *x > 0.0) {
                break v;
            }
        })
        .collect();

    // 8. Mode-level dependency edges.
    let mut dependencies = Vec::new();
    for &(from, to) in &app_edges {
        dependencies.extend(generate_mode_edges(
            (from, to),
            mode_counts[from],
            mode_counts[to],
            &mut rng,
        ));
    }

    let apps: Vec<AppSpec> = (0..n)
        .map(|i| {
            let modes = (0..mode_counts[i])
                .map(|j| {
                    let s = if j == 0 { 1.0 } else { scales[i][j - 1] };
                    ModeSpec {
                        requirements: ResourceVector(nominals[i].iter().map(|r| r * s).collect()),
                        axil: axils[i][j],
                    }
                })
                .collect();
            AppSpec {
                id: format!("app{i}"),
                ecu: assignment[i],
                modes,
                criticality: Criticality::BestEffort,
            }
        })
        .collect();

    ProblemInstance::new(catalog, budgets, apps, dependencies)
}

/// Checks the conventions every generated instance promises beyond basic
/// structural validity: each app's modes weakly decrease in every
/// requirement component and strictly in at least one as the index grows,
/// and priority values strictly decrease across modes.
pub fn validate_generated_conventions(instance: &ProblemInstance) -> Result<()> {
    for (i, app) in instance.apps().iter().enumerate() {
        for j in 1..app.modes.len() {
            let hi = &app.modes[j - 1];
            let lo = &app.modes[j];
            let mut any_strict = false;
            for (a, b) in hi.requirements.0.iter().zip(&lo.requirements.0) {
                if b > a {
                    return Err(Error::invalid_instance(format!(
                        "app {i}: mode {} requires more than mode {} in some component",
                        j + 1,
                        j
                    )));
                }
                if b < a {
                    any_strict = true;
                }
            }
            if !any_strict {
                return Err(Error::invalid_instance(format!(
                    "app {i}: modes {} and {} have identical requirements",
                    j,
                    j + 1
                )));
            }
            if lo.axil >= hi.axil {
                return Err(Error::invalid_instance(format!(
                    "app {i}: priority does not strictly decrease from mode {} to {}",
                    j,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}
