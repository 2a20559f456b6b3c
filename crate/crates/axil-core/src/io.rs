//! JSON serialization of instances, candidates and mode bounds.
//!
//! File format, top level: `catalog` (array of `{name, kind, budget_max}`),
//! `budgets` (array of reals), `apps` (array of
//! `{id, ecu, modes: [{requirements: […], axil}]}`), `dependencies` (array
//! of `{from_app, from_mode, to_app, to_mode}`), plus an optional
//! `gen_params` echo for generated instances. All indices in the file are
//! 0-based; in-memory mode indices are 1-based (0 = off), so dependency
//! mode indices shift by one at this boundary. Candidate files are plain
//! integer arrays in the in-memory encoding (0 = off, j = mode j).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::generator::GenParams;
use crate::model::{
    AppSpec, Candidate, ModeBounds, ModeDependencyEdge, ProblemInstance, ResourceEntry,
    ResourceVector,
};

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    catalog: Vec<ResourceEntry>,
    budgets: ResourceVector,
    apps: Vec<AppSpec>,
    dependencies: Vec<WireDependency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gen_params: Option<GenParams>,
}

/// On-disk dependency edge; mode indices 0-based.
#[derive(Serialize, Deserialize)]
struct WireDependency {
    from_app: usize,
    from_mode: usize,
    to_app: usize,
    to_mode: usize,
}

/// Renders an instance (plus an optional generation-parameter echo) as a
/// pretty-printed JSON document.
pub fn instance_to_json(
    instance: &ProblemInstance,
    gen_params: Option<&GenParams>,
) -> Result<String> {
    let doc = InstanceDoc {
        catalog: instance.catalog().to_vec(),
        budgets: instance.budgets().clone(),
        apps: instance.apps().to_vec(),
        dependencies: instance
            .dependencies()
            .iter()
            .map(|e| WireDependency {
                from_app: e.from_app,
                from_mode: e.from_mode - 1,
                to_app: e.to_app,
                to_mode: e.to_mode - 1,
            })
            .collect(),
        gen_params: gen_params.cloned(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses and validates an instance document.
pub fn instance_from_json(text: &str) -> Result<(ProblemInstance, Option<GenParams>)> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let dependencies = doc
        .dependencies
        .into_iter()
        .map(|w| ModeDependencyEdge {
            from_app: w.from_app,
            // Saturate rather than overflow on absurd file contents; the
            // instance validation below rejects out-of-range modes anyway.
            from_mode: w.from_mode.saturating_add(1),
            to_app: w.to_app,
            to_mode: w.to_mode.saturating_add(1),
        })
        .collect();
    let instance = ProblemInstance::new(doc.catalog, doc.budgets, doc.apps, dependencies)?;
    Ok((instance, doc.gen_params))
}

pub fn write_instance(
    path: &Path,
    instance: &ProblemInstance,
    gen_params: Option<&GenParams>,
) -> Result<()> {
    fs::write(path, instance_to_json(instance, gen_params)?)?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<(ProblemInstance, Option<GenParams>)> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_candidate(path: &Path, candidate: &Candidate) -> Result<()> {
    fs::write(path, serde_json::to_string(candidate)?)?;
    Ok(())
}

pub fn read_candidate(path: &Path) -> Result<Candidate> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Bounds files are arrays with one entry per app: `null` for an
/// unconstrained app or `[lo, hi]` for an inclusive interval.
pub fn read_mode_bounds(path: &Path) -> Result<ModeBounds> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
