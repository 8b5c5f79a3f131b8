//! The `convergence` subcommand: anytime planner versus forward search at
//! increasing sample budgets.

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use serde::Serialize;
use vulcan::domains::bandit::{bandit_model, table1_machines};
use vulcan::{
    evaluate_policy, planner_rng, vulcan, vulcanfs, RewardFunctional, RiskBound, SampleBudget,
    UniformDefaultPolicy,
};

use crate::commands::{map_replicates, CliError, CmdOutcome};
use crate::config::{resolve_out_dir, FileConfig};
use crate::records::{write_csv, write_json, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    pub budget: u64,
    /// Mean of |value − reference| / reference over replicates, where value
    /// is the exact expected reward for complete policies and the sample
    /// estimate otherwise.
    pub mean_relative_error: f64,
    /// Fraction of replicates returning exactly the forward-search policy.
    pub exact_policy_match_rate: f64,
    /// Fraction of replicates returning a complete policy.
    pub complete_rate: f64,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Serialize)]
struct ConvergenceReport {
    schema_version: u32,
    library_version: String,
    horizon: usize,
    replicates: usize,
    seed: u64,
    exploration: f64,
    reference_value: f64,
    rows: Vec<ConvergenceRow>,
}

/// Runs the study and returns one row per budget. Replicate k of budget i
/// uses generator stream i·replicates + k.
pub fn convergence_rows(
    horizon: usize,
    budgets: &[u64],
    replicates: usize,
    seed: u64,
) -> anyhow::Result<(f64, Vec<ConvergenceRow>)> {
    let model = bandit_model(table1_machines(), horizon, 1.0, RiskBound::linear(0.002))
        .context("building bandit model")?;
    let reference = vulcanfs(&model, RewardFunctional::ExpectedStep, 200_000_000)
        .context("forward search failed")?;
    let reference_value = reference
        .root_value
        .ok_or_else(|| anyhow!("reference instance has no solution"))?;
    let mut rows = Vec::new();
    for (i, &budget) in budgets.iter().enumerate() {
        let outcomes = map_replicates(replicates, |k| {
            let stream = (i * replicates + k) as u64;
            let mut rng = planner_rng(seed, stream);
            let start = std::time::Instant::now();
            let result = vulcan(
                &model,
                RewardFunctional::ExpectedStep,
                SampleBudget::Samples(budget),
                std::f64::consts::SQRT_2,
                &mut UniformDefaultPolicy,
                &mut rng,
            );
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let value = if result.complete {
                evaluate_policy(&model, &result.policy)
                    .map(|e| e.expected_reward)
                    .unwrap_or(0.0)
            } else {
                result.root_value.unwrap_or(0.0)
            };
            let error = (value - reference_value).abs() / reference_value;
            let matched = result.policy.same_decisions(&reference.policy);
            (error, matched, result.complete, wall_ms)
        });
        let n = replicates as f64;
        rows.push(ConvergenceRow {
            budget,
            mean_relative_error: outcomes.iter().map(|o| o.0).sum::<f64>() / n,
            exact_policy_match_rate: outcomes.iter().filter(|o| o.1).count() as f64 / n,
            complete_rate: outcomes.iter().filter(|o| o.2).count() as f64 / n,
            mean_wall_ms: outcomes.iter().map(|o| o.3).sum::<f64>() / n,
        });
    }
    Ok((reference_value, rows))
}

pub fn execute(
    horizon: usize,
    budgets_spec: &str,
    replicates: usize,
    seed: u64,
    out_flag: Option<PathBuf>,
) -> Result<CmdOutcome, CliError> {
    let budgets: Vec<u64> = budgets_spec
        .split(',')
        .map(|b| b.trim().parse::<u64>().context("bad budget list"))
        .collect::<anyhow::Result<_>>()
        .map_err(CliError::Config)?;
    if budgets.is_empty() || replicates == 0 {
        return Err(CliError::Config(anyhow!(
            "need at least one budget and one replicate"
        )));
    }
    let (reference_value, rows) =
        convergence_rows(horizon, &budgets, replicates, seed).map_err(CliError::Config)?;
    let out_dir = resolve_out_dir(out_flag, &FileConfig::default());
    let report = ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        library_version: vulcan::version().to_string(),
        horizon,
        replicates,
        seed,
        exploration: std::f64::consts::SQRT_2,
        reference_value,
        rows,
    };
    write_json(&out_dir, "convergence.json", &report).map_err(CliError::internal)?;
    let csv_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.budget.to_string(),
                r.mean_relative_error.to_string(),
                r.exact_policy_match_rate.to_string(),
                r.complete_rate.to_string(),
                r.mean_wall_ms.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_dir,
        "convergence.csv",
        &[
            "budget",
            "mean_relative_error",
            "exact_policy_match_rate",
            "complete_rate",
            "mean_wall_ms",
        ],
        &csv_rows,
    )
    .map_err(CliError::internal)?;
    for row in &report.rows {
        println!(
            "budget {:>10}: mean_err={:.5}% match={:.1}% complete={:.1}%",
            row.budget,
            row.mean_relative_error * 100.0,
            row.exact_policy_match_rate * 100.0,
            row.complete_rate * 100.0
        );
    }
    Ok(CmdOutcome::Ok)
}
