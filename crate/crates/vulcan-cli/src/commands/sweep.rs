//! The `sweep-alpha` subcommand: oracle versus forward search across linear
//! risk bounds on the bandit domain.
//!
//! The achievable (reward, risk) frontier does not depend on the risk bound,
//! so it is computed once and re-scanned per slope; only forward search is
//! re-run, since the local constraint changes with the bound.

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use serde::Serialize;
use vulcan::domains::bandit::{bandit_model, table1_machines};
use vulcan::{optimal_from_frontier, policy_frontier, vulcanfs, RewardFunctional, RiskBound};

use crate::commands::{map_replicates, CliError, CmdOutcome};
use crate::config::{resolve_out_dir, FileConfig};
use crate::records::{write_csv, write_json, SCHEMA_VERSION};

const ORACLE_WORK_BUDGET: u64 = 10_000_000_000;
const FORWARD_SEARCH_NODE_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub optimal_expected_reward: Option<f64>,
    pub vulcanfs_expected_reward: Option<f64>,
    pub suboptimality_pct: Option<f64>,
    /// `ok`, `infeasible`, or `budget-exceeded`.
    pub status: String,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    schema_version: u32,
    library_version: String,
    horizon: usize,
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
    rows: Vec<AlphaRow>,
    mean_nonzero_suboptimality_pct: Option<f64>,
}

/// Computes the sweep rows; shared with the acceptance tests through the
/// binary's output files.
pub fn sweep_rows(
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
    horizon: usize,
) -> anyhow::Result<Vec<AlphaRow>> {
    if points < 2 || alpha_max <= alpha_min {
        anyhow::bail!("need at least two points and alpha_max > alpha_min");
    }
    let base = bandit_model(table1_machines(), horizon, 1.0, RiskBound::linear(alpha_min))
        .context("building bandit model")?;
    let frontier = policy_frontier(&base, ORACLE_WORK_BUDGET);
    let alphas: Vec<f64> = (0..points)
        .map(|i| alpha_min + (alpha_max - alpha_min) * i as f64 / (points - 1) as f64)
        .collect();
    let rows = map_replicates(points, |i| {
        let alpha = alphas[i];
        let bound = RiskBound::linear(alpha);
        let optimal = match &frontier {
            Ok(frontier) => optimal_from_frontier(frontier, &bound)
                .optimal()
                .map(|(_, e)| e.expected_reward),
            Err(_) => None,
        };
        let model = bandit_model(table1_machines(), horizon, 1.0, bound)
            .expect("parameters validated above");
        let searched = vulcanfs(&model, RewardFunctional::ExpectedStep, FORWARD_SEARCH_NODE_BUDGET);
        match (frontier.as_ref().map(|_| optimal), searched) {
            (Ok(Some(opt)), Ok(fs)) => {
                let fs_value = fs.root_value;
                let suboptimality = fs_value.map(|v| (opt - v) / opt * 100.0);
                AlphaRow {
                    alpha,
                    optimal_expected_reward: Some(opt),
                    vulcanfs_expected_reward: fs_value,
                    suboptimality_pct: suboptimality,
                    status: if fs_value.is_some() { "ok" } else { "infeasible" }.into(),
                }
            }
            (Ok(None), Ok(fs)) => AlphaRow {
                alpha,
                optimal_expected_reward: None,
                vulcanfs_expected_reward: fs.root_value,
                suboptimality_pct: None,
                status: "infeasible".into(),
            },
            _ => AlphaRow {
                alpha,
                optimal_expected_reward: None,
                vulcanfs_expected_reward: None,
                suboptimality_pct: None,
                status: "budget-exceeded".into(),
            },
        }
    });
    Ok(rows)
}

pub fn mean_nonzero_suboptimality(rows: &[AlphaRow]) -> Option<f64> {
    let nonzero: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.suboptimality_pct)
        .filter(|s| *s > 1e-9)
        .collect();
    if nonzero.is_empty() {
        None
    } else {
        Some(nonzero.iter().sum::<f64>() / nonzero.len() as f64)
    }
}

pub fn execute(
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
    horizon: usize,
    out_flag: Option<PathBuf>,
) -> Result<CmdOutcome, CliError> {
    if horizon > 6 {
        return Err(CliError::Config(anyhow!(
            "horizon {horizon} is beyond the oracle's practical range for sweeps"
        )));
    }
    let rows = sweep_rows(alpha_min, alpha_max, points, horizon).map_err(CliError::Config)?;
    let out_dir = resolve_out_dir(out_flag, &FileConfig::default());
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        library_version: vulcan::version().to_string(),
        horizon,
        alpha_min,
        alpha_max,
        points,
        mean_nonzero_suboptimality_pct: mean_nonzero_suboptimality(&rows),
        rows,
    };
    write_json(&out_dir, "sweep_alpha.json", &report).map_err(CliError::internal)?;
    let csv_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.alpha.to_string(),
                r.optimal_expected_reward.map(|v| v.to_string()).unwrap_or_default(),
                r.vulcanfs_expected_reward.map(|v| v.to_string()).unwrap_or_default(),
                r.suboptimality_pct.map(|v| v.to_string()).unwrap_or_default(),
                r.status.clone(),
            ]
        })
        .collect();
    write_csv(
        &out_dir,
        "sweep_alpha.csv",
        &[
            "alpha",
            "optimal_expected_reward",
            "vulcanfs_expected_reward",
            "suboptimality_pct",
            "status",
        ],
        &csv_rows,
    )
    .map_err(CliError::internal)?;
    for row in &report.rows {
        println!(
            "alpha={:.6} optimal={:?} vulcanfs={:?} suboptimality={:?}% [{}]",
            row.alpha,
            row.optimal_expected_reward,
            row.vulcanfs_expected_reward,
            row.suboptimality_pct,
            row.status
        );
    }
    Ok(CmdOutcome::Ok)
}
