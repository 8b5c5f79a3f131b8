//! Structured result records: one JSON document per run plus aggregate CSVs.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use vulcan::{PolicyEvaluation, PolicyTree, VulcanStats};

use crate::config::ResolvedRun;

pub const SCHEMA_VERSION: u32 = 1;

/// Flat rendering of a policy tree: one row per covered history, keyed by
/// its action/outcome index path.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyNodeRecord {
    pub key: String,
    pub action: Option<u32>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visits: Option<u64>,
}

pub fn flatten_policy(policy: &PolicyTree) -> Vec<PolicyNodeRecord> {
    let mut nodes = Vec::new();
    policy.visit_nodes(|history, node| {
        nodes.push(PolicyNodeRecord {
            key: history.key(),
            action: node.action.map(|a| a.0),
            value: node.value,
            visits: node.visits,
        });
    });
    nodes
}

/// One planner run on one replicate.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub library_version: String,
    pub config: ResolvedRun,
    pub replicate: usize,
    /// Generator stream used by this replicate (seed + stream reproduce it).
    pub stream: u64,
    pub root_value: Option<f64>,
    pub complete: bool,
    pub no_solution: bool,
    pub policy: Vec<PolicyNodeRecord>,
    /// Exact evaluation when the policy is complete: E[g], er, Δ(E[g]).
    pub exact: Option<ExactRecord>,
    pub stats: Option<VulcanStats>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExactRecord {
    pub expected_reward: f64,
    pub execution_risk: f64,
    pub delta_of_expected_reward: f64,
    pub feasible: bool,
}

impl ExactRecord {
    pub fn new(evaluation: &PolicyEvaluation, delta_of_expected_reward: f64) -> Self {
        Self {
            expected_reward: evaluation.expected_reward,
            execution_risk: evaluation.execution_risk,
            delta_of_expected_reward,
            feasible: evaluation.feasible,
        }
    }
}

impl RunRecord {
    pub fn json_name(&self) -> String {
        format!(
            "run_{}_{}_seed{}_r{}.json",
            self.config.domain.name(),
            self.config.planner.name(),
            self.config.seed,
            self.replicate
        )
    }

    /// CSV row sharing every scalar field with the JSON record.
    pub fn csv_row(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        vec![
            self.config.domain.name().to_string(),
            self.config.planner.name().to_string(),
            self.config.horizon.to_string(),
            self.config.delta.clone(),
            self.config.f.clone(),
            self.config.seed.to_string(),
            self.stream.to_string(),
            self.replicate.to_string(),
            self.config.budget.clone(),
            self.config.c.to_string(),
            opt(&self.root_value),
            self.complete.to_string(),
            self.no_solution.to_string(),
            opt(&self.exact.map(|e| e.expected_reward)),
            opt(&self.exact.map(|e| e.execution_risk)),
            opt(&self.exact.map(|e| e.delta_of_expected_reward)),
            opt(&self.exact.map(|e| e.feasible)),
            self.wall_ms.to_string(),
            opt(&self.stats.map(|s| s.samples)),
            opt(&self.stats.map(|s| s.deletions)),
            opt(&self.stats.map(|s| s.nodes_allocated)),
            self.library_version.clone(),
        ]
    }

    pub const CSV_HEADER: [&'static str; 22] = [
        "domain",
        "planner",
        "horizon",
        "delta",
        "f",
        "seed",
        "stream",
        "replicate",
        "budget",
        "c",
        "root_value",
        "complete",
        "no_solution",
        "expected_reward",
        "execution_risk",
        "delta_of_expected_reward",
        "feasible",
        "wall_ms",
        "samples",
        "deletions",
        "nodes",
        "library_version",
    ];
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut writer = csv::Writer::from_path(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(path)
}
