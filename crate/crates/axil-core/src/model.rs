//! Problem model: resources, applications with degraded modes, mode
//! dependencies, and the core candidate operations (score, usage,
//! feasibility, bound clamping).
//!
//! Mode indexing convention, used everywhere in this crate: in a candidate,
//! `0` means the application is off, `1` is the nominal (full) mode, and
//! higher indices are progressively degraded modes. Storage is 0-based, so
//! candidate index `j >= 1` refers to `app.modes[j - 1]`.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance applied to resource comparisons (budget checks and
/// saturation tests). Scores and priority values are compared exactly.
pub const RESOURCE_EPSILON: f64 = 1e-9;

/// What a resource meters. Purely descriptive; all budget arithmetic is
/// uniform across kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Energy,
    Cpu,
    Memory,
    Link,
}

/// One metered resource: a display name, its kind, and the hard budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub name: String,
    pub kind: ResourceKind,
    pub budget_max: f64,
}

/// A per-resource quantity vector, indexed like the instance catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceVector(pub Vec<f64>);

impl ResourceVector {
    pub fn zeros(len: usize) -> Self {
        ResourceVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise add-assign. Panics if lengths differ; callers only mix
    /// vectors that were validated against the same catalog.
    pub fn add_assign(&mut self, other: &ResourceVector) {
        assert_eq!(
            self.0.len(),
            other.0.len(),
            "resource vector length mismatch"
        );
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += *b;
        }
    }

    pub fn sub_assign(&mut self, other: &ResourceVector) {
        assert_eq!(
            self.0.len(),
            other.0.len(),
            "resource vector length mismatch"
        );
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= *b;
        }
    }
}

impl std::ops::Index<usize> for ResourceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One runtime mode of an application: what it consumes and the experience
/// priority it preserves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Resource demand, indexed like the instance catalog.
    pub requirements: ResourceVector,
    /// Experience priority retained in this mode (higher is better).
    pub axil: f64,
}

/// Scheduling class of an application. Only best-effort apps are modeled;
/// the variant exists so instances can state the class explicitly and
/// safety-critical handling can slot in later without a format change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    #[default]
    BestEffort,
}

/// An application with an ordered list of modes, nominal first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppSpec {
    pub id: String,
    /// Index of the compute unit hosting this application.
    pub ecu: usize,
    /// Modes ordered from nominal (`modes[0]`, candidate index 1) to most
    /// degraded. Must be non-empty.
    pub modes: Vec<ModeSpec>,
    /// Reserved; always best-effort today.
    #[serde(default, skip_serializing)]
    pub criticality: Criticality,
}

impl AppSpec {
    /// Number of real (non-off) modes.
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Mode spec at candidate index `j`, or `None` for off / out of range.
    pub fn mode(&self, j: usize) -> Option<&ModeSpec> {
        if j == 0 {
            None
        } else {
            self.modes.get(j - 1)
        }
    }

    /// Priority value at candidate index `j`; off contributes zero.
    pub fn axil_at(&self, j: usize) -> f64 {
        self.mode(j).map_or(0.0, |m| m.axil)
    }
}

/// A conditional mode-dependency edge.
///
/// Reads: if the source application runs at functionality level `from_mode`
/// or better (candidate value in `1..=from_mode`), the target application
/// must run at level `to_mode` or better (candidate value in `1..=to_mode`).
/// An edge places no constraint while the source is off or runs strictly
/// more degraded than `from_mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeDependencyEdge {
    pub from_app: usize,
    /// 1-based mode index on the source side.
    pub from_mode: usize,
    pub to_app: usize,
    /// 1-based mode index the target must reach (or beat).
    pub to_mode: usize,
}

/// A fully validated problem instance.
///
/// Construction via [`ProblemInstance::new`] checks structural consistency
/// once; the solver entry points then trust these invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    catalog: Vec<ResourceEntry>,
    budgets: ResourceVector,
    apps: Vec<AppSpec>,
    dependencies: Vec<ModeDependencyEdge>,
    /// Dependency indices grouped by source app, precomputed for the solvers.
    edges_by_source: Vec<Vec<usize>>,
    /// Dependency indices grouped by target app.
    edges_by_target: Vec<Vec<usize>>,
}

impl ProblemInstance {
    /// Validates and assembles an instance.
    ///
    /// Checks performed:
    /// - catalog is non-empty with unique entry names and non-negative
    ///   capacities, and `budgets` has one finite value per entry with
    ///   `budgets[k] <= budget_max[k]` (the current allowance never exceeds
    ///   physical capacity);
    /// - every app has at least one mode, and every mode's requirement
    ///   vector matches the catalog length with finite, non-negative entries
    ///   no larger than the capacity `budget_max[k]`;
    /// - every mode's priority value is finite and non-negative;
    /// - dependency endpoints reference existing apps and 1-based modes
    ///   within range, no edge is a self-loop, and the app-level projection
    ///   of the edge set is acyclic.
    pub fn new(
        catalog: Vec<ResourceEntry>,
        budgets: ResourceVector,
        apps: Vec<AppSpec>,
        dependencies: Vec<ModeDependencyEdge>,
    ) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::invalid_instance("resource catalog is empty"));
        }
        let mut names = std::collections::BTreeSet::new();
        for (k, entry) in catalog.iter().enumerate() {
            if !names.insert(entry.name.as_str()) {
                return Err(Error::invalid_instance(format!(
                    "duplicate resource name {:?}",
                    entry.name
                )));
            }
            if !entry.budget_max.is_finite() || entry.budget_max < 0.0 {
                return Err(Error::invalid_instance(format!(
                    "capacity of resource {k} is {}, expected finite and non-negative",
                    entry.budget_max
                )));
            }
        }
        if budgets.len() != catalog.len() {
            return Err(Error::invalid_instance(format!(
                "budget vector has {} entries for a catalog of {}",
                budgets.len(),
                catalog.len()
            )));
        }
        for (k, b) in budgets.0.iter().enumerate() {
            if !b.is_finite() || *b < 0.0 {
                return Err(Error::invalid_instance(format!(
                    "budget for resource {k} is {b}, expected finite and non-negative"
                )));
            }
            if *b > catalog[k].budget_max {
                return Err(Error::invalid_instance(format!(
                    "budget for resource {k} is {b}, above its capacity {}",
                    catalog[k].budget_max
                )));
            }
        }
        for (i, app) in apps.iter().enumerate() {
            if app.modes.is_empty() {
                return Err(Error::invalid_instance(format!(
                    "app {i} ({}) has no modes",
                    app.id
                )));
            }
            for (jm, mode) in app.modes.iter().enumerate() {
                if mode.requirements.len() != catalog.len() {
                    return Err(Error::invalid_instance(format!(
                        "app {i} mode {} has {} requirement entries for a catalog of {}",
                        jm + 1,
                        mode.requirements.len(),
                        catalog.len()
                    )));
                }
                for (k, r) in mode.requirements.0.iter().enumerate() {
                    if !r.is_finite() || *r < 0.0 {
                        return Err(Error::invalid_instance(format!(
                            "app {i} mode {} requirement for resource {k} is {r}",
                            jm + 1
                        )));
                    }
                    if *r > catalog[k].budget_max {
                        return Err(Error::invalid_instance(format!(
                            "app {i} mode {} requires {r} of resource {k}, above its capacity {}",
                            jm + 1,
                            catalog[k].budget_max
                        )));
                    }
                }
                if !mode.axil.is_finite() || mode.axil < 0.0 {
                    return Err(Error::invalid_instance(format!(
                        "app {i} mode {} has priority value {}, expected finite and non-negative",
                        jm + 1,
                        mode.axil
                    )));
                }
            }
        }
        for (e, dep) in dependencies.iter().enumerate() {
            let check_side = |app: usize, mode: usize, side: &str| -> Result<()> {
                let spec = apps.get(app).ok_or_else(|| {
                    Error::invalid_instance(format!(
                        "dependency {e}: {side} app index {app} out of range"
                    ))
                })?;
                if mode == 0 || mode > spec.mode_count() {
                    return Err(Error::invalid_instance(format!(
                        "dependency {e}: {side} mode index {mode} out of range 1..={}",
                        spec.mode_count()
                    )));
                }
                Ok(())
            };
            check_side(dep.from_app, dep.from_mode, "source")?;
            check_side(dep.to_app, dep.to_mode, "target")?;
            if dep.from_app == dep.to_app {
                return Err(Error::invalid_instance(format!(
                    "dependency {e} is a self-loop on app {}",
                    dep.from_app
                )));
            }
        }
        // The app-level projection of the dependency edges must be acyclic,
        // or the "depends on" relation would be circular.
        let projection = petgraph::graph::DiGraph::<(), ()>::from_edges(
            dependencies
                .iter()
                .map(|d| (d.from_app as u32, d.to_app as u32)),
        );
        if petgraph::algo::is_cyclic_directed(&projection) {
            return Err(Error::invalid_instance(
                "dependency edges form a cycle at the application level",
            ));
        }

        let mut edges_by_source = vec![Vec::new(); apps.len()];
        let mut edges_by_target = vec![Vec::new(); apps.len()];
        for (e, dep) in dependencies.iter().enumerate() {
            edges_by_source[dep.from_app].push(e);
            edges_by_target[dep.to_app].push(e);
        }

        Ok(ProblemInstance {
            catalog,
            budgets,
            apps,
            dependencies,
            edges_by_source,
            edges_by_target,
        })
    }

    pub fn catalog(&self) -> &[ResourceEntry] {
        &self.catalog
    }

    pub fn budgets(&self) -> &ResourceVector {
        &self.budgets
    }

    pub fn apps(&self) -> &[AppSpec] {
        &self.apps
    }

    pub fn dependencies(&self) -> &[ModeDependencyEdge] {
        &self.dependencies
    }

    pub fn app_count(&self) -> usize {
        self.apps.len()
    }

    pub fn resource_count(&self) -> usize {
        self.catalog.len()
    }

    /// Indices into [`Self::dependencies`] whose source is `app`.
    pub fn edges_from(&self, app: usize) -> &[usize] {
        &self.edges_by_source[app]
    }

    /// Indices into [`Self::dependencies`] whose target is `app`.
    pub fn edges_into(&self, app: usize) -> &[usize] {
        &self.edges_by_target[app]
    }

    /// Checks that `candidate` has one entry per app, each within
    /// `0..=mode_count`. All candidate-consuming operations call this first.
    pub fn check_candidate(&self, candidate: &Candidate) -> Result<()> {
        if candidate.0.len() != self.apps.len() {
            return Err(Error::invalid_argument(format!(
                "candidate has {} entries for {} apps",
                candidate.0.len(),
                self.apps.len()
            )));
        }
        for (i, (&c, app)) in candidate.0.iter().zip(&self.apps).enumerate() {
            if c > app.mode_count() {
                return Err(Error::invalid_argument(format!(
                    "candidate[{i}] = {c} exceeds mode count {}",
                    app.mode_count()
                )));
            }
        }
        Ok(())
    }

    /// Total preserved priority of `candidate`: the sum of each selected
    /// mode's priority value, with off apps contributing zero.
    pub fn score(&self, candidate: &Candidate) -> Result<f64> {
        self.check_candidate(candidate)?;
        Ok(candidate
            .0
            .iter()
            .zip(&self.apps)
            .map(|(&c, app)| app.axil_at(c))
            .sum())
    }

    /// Componentwise resource usage of `candidate` across the catalog.
    pub fn usage(&self, candidate: &Candidate) -> Result<ResourceVector> {
        self.check_candidate(candidate)?;
        let mut total = ResourceVector::zeros(self.catalog.len());
        for (&c, app) in candidate.0.iter().zip(&self.apps) {
            if let Some(mode) = app.mode(c) {
                total.add_assign(&mode.requirements);
            }
        }
        Ok(total)
    }

    /// Full feasibility check: every resource within budget (up to
    /// [`RESOURCE_EPSILON`]) and every dependency edge satisfied.
    ///
    /// Returns the complete violation list, not just the first hit, so
    /// callers can report all problems at once.
    pub fn is_feasible(&self, candidate: &Candidate) -> Result<FeasibilityReport> {
        self.check_candidate(candidate)?;
        let usage = self.usage(candidate)?;
        let mut violations = Vec::new();
        for (k, (&u, &b)) in usage.0.iter().zip(&self.budgets.0).enumerate() {
            if u > b + RESOURCE_EPSILON {
                violations.push(Violation::Resource {
                    resource: k,
                    usage: u,
                    budget: b,
                });
            }
        }
        for (e, dep) in self.dependencies.iter().enumerate() {
            if !edge_satisfied(dep, candidate) {
                violations.push(Violation::Dependency { edge: e });
            }
        }
        Ok(FeasibilityReport {
            feasible: violations.is_empty(),
            violations,
        })
    }

    /// Projects `candidate` into `bounds`, mapping each out-of-range entry to
    /// the nearest allowed value in functionality order.
    ///
    /// Functionality order ranks candidate values from least to most
    /// functional as `0 (off), m, m-1, ..., 2, 1 (nominal)` for an app with
    /// `m` modes; distance is measured along that ranking. When off and an
    /// in-range mode are equidistant the mode wins (prefer functionality).
    /// Entries already allowed are kept unchanged.
    pub fn clamp_to_bounds(&self, candidate: &Candidate, bounds: &ModeBounds) -> Result<Candidate> {
        self.check_candidate(candidate)?;
        bounds.check(self)?;
        let mut out = Vec::with_capacity(candidate.0.len());
        for (i, &c) in candidate.0.iter().enumerate() {
            let m = self.apps[i].mode_count();
            out.push(match bounds.0[i] {
                None => c,
                Some((lo, hi)) => clamp_value(c, lo, hi, m),
            });
        }
        Ok(Candidate(out))
    }
}

/// True when `dep` places no unmet constraint under `candidate`.
pub(crate) fn edge_satisfied(dep: &ModeDependencyEdge, candidate: &Candidate) -> bool {
    let source = candidate.0[dep.from_app];
    if source == 0 || source > dep.from_mode {
        return true; // source off or too degraded: edge dormant
    }
    let target = candidate.0[dep.to_app];
    target >= 1 && target <= dep.to_mode
}

/// Rank of candidate value `c` in functionality order for an app with `m`
/// modes: off is rank 0, the most degraded mode rank 1, ..., nominal rank `m`.
fn functionality_rank(c: usize, m: usize) -> usize {
    if c == 0 {
        0
    } else {
        m + 1 - c
    }
}

/// Nearest allowed value to `c` among `{0} ∪ [lo, hi]` (lo = 0 admits off,
/// mode range is `max(lo,1)..=hi`), measured in functionality rank; ties go
/// to the more functional side.
fn clamp_value(c: usize, lo: usize, hi: usize, m: usize) -> usize {
    let allowed = |v: usize| -> bool {
        if v == 0 {
            lo == 0
        } else {
            v >= lo.max(1) && v <= hi
        }
    };
    if allowed(c) {
        return c;
    }
    let rank_c = functionality_rank(c, m) as isize;
    let mut best = None;
    let mut best_key = (isize::MAX, isize::MIN);
    for v in 0..=m {
        if !allowed(v) {
            continue;
        }
        let rank_v = functionality_rank(v, m) as isize;
        // Sort by distance, then by descending rank so ties prefer
        // functionality.
        let key = ((rank_v - rank_c).abs(), -rank_v);
        if key < best_key {
            best_key = key;
            best = Some(v);
        }
    }
    best.expect("bounds validation guarantees a non-empty allowed set")
}

/// A runtime-mode assignment: one entry per app, `0` = off, `j >= 1` = run
/// mode `j` (1 = nominal).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Candidate(pub Vec<usize>);

impl Candidate {
    /// The all-off assignment, which is feasible by construction.
    pub fn all_off(app_count: usize) -> Self {
        Candidate(vec![0; app_count])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// One reason a candidate is infeasible.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Resource `resource` is used beyond its budget.
    Resource {
        resource: usize,
        usage: f64,
        budget: f64,
    },
    /// Dependency edge `edge` (index into the instance list) is unsatisfied.
    Dependency { edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Resource {
                resource,
                usage,
                budget,
            } => {
                write!(
                    f,
                    "resource {resource}: usage {usage} exceeds budget {budget}"
                )
            }
            Violation::Dependency { edge } => write!(f, "dependency edge {edge} unsatisfied"),
        }
    }
}

/// Outcome of [`ProblemInstance::is_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Optional per-app search restrictions: `None` leaves an app unrestricted,
/// `Some((lo, hi))` confines it to `{off if lo == 0} ∪ [max(lo,1), hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeBounds(pub Vec<Option<(usize, usize)>>);

impl ModeBounds {
    /// No restriction on any of `app_count` apps.
    pub fn unrestricted(app_count: usize) -> Self {
        ModeBounds(vec![None; app_count])
    }

    /// Validates shape and ranges against `instance`: one entry per app,
    /// `lo <= hi`, and `hi` within the app's mode count.
    pub fn check(&self, instance: &ProblemInstance) -> Result<()> {
        if self.0.len() != instance.app_count() {
            return Err(Error::invalid_argument(format!(
                "bounds have {} entries for {} apps",
                self.0.len(),
                instance.app_count()
            )));
        }
        for (i, b) in self.0.iter().enumerate() {
            if let Some((lo, hi)) = b {
                let m = instance.apps()[i].mode_count();
                if lo > hi || *hi > m {
                    return Err(Error::invalid_argument(format!(
                        "bounds[{i}] = ({lo}, {hi}) invalid for an app with {m} modes"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How a solver run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Proven best over the searched space (exact solver, search completed).
    Optimal,
    /// A heuristic run terminated naturally with a feasible candidate.
    HeuristicComplete,
    /// The time budget expired; the report carries the best candidate so far.
    TimeoutPartial,
    /// No feasible candidate with positive score was found.
    Failed,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::HeuristicComplete => "heuristic_complete",
            SolveStatus::TimeoutPartial => "timeout_partial",
            SolveStatus::Failed => "failed",
        };
        f.write_str(s)
    }
}

/// Uniform result envelope returned by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub candidate: Candidate,
    pub score: f64,
    pub feasible: bool,
    pub status: SolveStatus,
    /// Wall-clock duration of the solve, serialized as integer microseconds.
    #[serde(rename = "elapsed_us", with = "duration_us")]
    pub elapsed: Duration,
    /// Solver-specific counters (iterations, generations, nodes, ...).
    pub counters: BTreeMap<String, u64>,
}

mod duration_us {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_micros(u64::deserialize(d)?))
    }
}

/// Options shared by all solver entry points.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Wall-clock cap. `None` means run to completion (the exact solver
    /// substitutes its own default cap; see its docs).
    pub timeout: Option<Duration>,
    /// Optional per-app search restriction honored by every solver.
    pub mode_bounds: Option<ModeBounds>,
    /// Optional starting point for solvers that can exploit one.
    pub initial: Option<Candidate>,
}

/// Per-app search domain derived from [`SolveOptions::mode_bounds`]; the
/// common currency solvers use to respect restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ModeDomain {
    /// Whether 0 (off) is admissible.
    pub off: bool,
    /// Lowest admissible real mode index (1-based), `lo <= hi` when any real
    /// mode is admissible at all.
    pub lo: usize,
    /// Highest admissible real mode index.
    pub hi: usize,
}

impl ModeDomain {
    pub fn allows(&self, c: usize) -> bool {
        if c == 0 {
            self.off
        } else {
            c >= self.lo && c <= self.hi
        }
    }

    /// True when no real mode is admissible (off-only domain).
    pub fn modes_empty(&self) -> bool {
        self.lo > self.hi
    }
}

/// Expands `bounds` into one [`ModeDomain`] per app, validating against the
/// instance. `None` bounds (or `bounds == None`) mean fully unrestricted.
pub(crate) fn mode_domains(
    instance: &ProblemInstance,
    bounds: Option<&ModeBounds>,
) -> Result<Vec<ModeDomain>> {
    if let Some(b) = bounds {
        b.check(instance)?;
    }
    Ok((0..instance.app_count())
        .map(|i| {
            let m = instance.apps()[i].mode_count();
            match bounds.and_then(|b| b.0[i]) {
                None => ModeDomain {
                    off: true,
                    lo: 1,
                    hi: m,
                },
                Some((lo, hi)) => ModeDomain {
                    off: lo == 0,
                    lo: lo.max(1),
                    hi,
                },
            }
        })
        .collect())
}
