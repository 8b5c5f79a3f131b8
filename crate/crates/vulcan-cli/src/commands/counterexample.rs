//! The `fig2` subcommand: the three-action counterexample end to end —
//! risk-bounded planners pick the middle action, penalties never do.

use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;
use vulcan::domains::counterexample::counterexample_model;
use vulcan::{
    optimal_policy, penalty_sweep, vulcanfs, OracleSolution, RewardFunctional, StateHistory,
};

use crate::commands::{CliError, CmdOutcome};
use crate::config::{parse_delta, parse_m_range, resolve_out_dir, FileConfig};
use crate::records::{write_csv, write_json, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
struct CounterexampleReport {
    schema_version: u32,
    library_version: String,
    delta: String,
    vulcanfs_action: Option<u32>,
    vulcanfs_value: Option<f64>,
    oracle_action: Option<u32>,
    oracle_expected_reward: Option<f64>,
    penalty: Vec<(f64, Option<u32>)>,
    middle_action_ever_selected_by_penalty: bool,
}

pub fn execute(
    m_spec: &str,
    delta_spec: &str,
    out_flag: Option<PathBuf>,
) -> Result<CmdOutcome, CliError> {
    let bound = parse_delta(delta_spec).map_err(CliError::Config)?;
    let ms = parse_m_range(m_spec).map_err(CliError::Config)?;
    let model = counterexample_model(bound);
    let root = StateHistory::root();

    let fs = vulcanfs(&model, RewardFunctional::ExpectedStep, 10_000)
        .context("forward search failed")
        .map_err(CliError::internal)?;
    let oracle = optimal_policy(&model, 100_000)
        .context("oracle failed")
        .map_err(CliError::internal)?;
    let swept = penalty_sweep(&model, &ms, 1_000_000)
        .context("penalty sweep failed")
        .map_err(CliError::internal)?;

    let penalty: Vec<(f64, Option<u32>)> = swept
        .iter()
        .map(|(m, policy)| (*m, policy.action_at(&root).map(|a| a.0)))
        .collect();
    let (oracle_action, oracle_expected_reward) = match &oracle {
        OracleSolution::Optimal { policy, evaluation } => (
            policy.action_at(&root).map(|a| a.0),
            Some(evaluation.expected_reward),
        ),
        OracleSolution::Infeasible => (None, None),
    };
    let report = CounterexampleReport {
        schema_version: SCHEMA_VERSION,
        library_version: vulcan::version().to_string(),
        delta: delta_spec.to_string(),
        vulcanfs_action: fs.policy.action_at(&root).map(|a| a.0),
        vulcanfs_value: fs.root_value,
        oracle_action,
        oracle_expected_reward,
        middle_action_ever_selected_by_penalty: penalty.iter().any(|(_, a)| *a == Some(1)),
        penalty,
    };

    let out_dir = resolve_out_dir(out_flag, &FileConfig::default());
    write_json(&out_dir, "fig2_report.json", &report).map_err(CliError::internal)?;
    let csv_rows: Vec<Vec<String>> = report
        .penalty
        .iter()
        .map(|(m, a)| vec![m.to_string(), a.map(|a| a.to_string()).unwrap_or_default()])
        .collect();
    write_csv(&out_dir, "fig2_penalty.csv", &["m", "root_action"], &csv_rows)
        .map_err(CliError::internal)?;

    println!(
        "risk-bounded planners: forward search takes action {:?}, oracle takes action {:?}",
        report.vulcanfs_action, report.oracle_action
    );
    if report.middle_action_ever_selected_by_penalty {
        println!("penalty sweep selected the middle action at some coefficient");
    } else {
        println!(
            "penalty sweep never selects the middle action across {} coefficients",
            report.penalty.len()
        );
    }
    if report.vulcanfs_action.is_none() {
        return Ok(CmdOutcome::NoSolution);
    }
    Ok(CmdOutcome::Ok)
}
