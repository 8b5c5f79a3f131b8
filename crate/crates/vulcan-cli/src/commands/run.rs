//! The `run` subcommand: planner × domain × replicates → records.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::Serialize;
use vulcan::{
    evaluate_policy, optimal_policy, penalty_sweep, planner_rng, vulcan, vulcanfs, CcmdpModel,
    OracleSolution, PolicyTree, RewardFunctional, StateHistory, UniformDefaultPolicy,
};

use crate::commands::{map_replicates, CliError, CmdOutcome};
use crate::config::{
    budget_spec, delta_spec, parse_budget, parse_delta, parse_m_range, resolve_out_dir, Domain,
    FileConfig, Planner, ResolvedRun,
};
use crate::domain::build_model;
use crate::records::{
    flatten_policy, write_csv, write_json, ExactRecord, RunRecord, SCHEMA_VERSION,
};
use crate::RunArgs;

const FORWARD_SEARCH_NODE_BUDGET: u64 = 200_000_000;
const ORACLE_WORK_BUDGET: u64 = 10_000_000_000;

pub fn execute(args: RunArgs, out_flag: Option<PathBuf>) -> Result<CmdOutcome, CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Config)?,
        None => FileConfig::default(),
    };
    let out_dir = resolve_out_dir(out_flag, &file);
    let config = resolve(args, &file).map_err(CliError::Config)?;
    let model = build_model(&config).map_err(CliError::Config)?;

    match config.planner {
        Planner::PenaltySweep => penalty_command(&config, model.as_ref(), &out_dir),
        _ => planner_command(&config, model.as_ref(), &out_dir),
    }
}

fn resolve(args: RunArgs, file: &FileConfig) -> anyhow::Result<ResolvedRun> {
    let domain = Domain::parse(
        args.domain
            .or_else(|| file.domain.clone())
            .ok_or_else(|| anyhow!("--domain is required"))?
            .as_str(),
    )?;
    let planner = Planner::parse(
        args.planner
            .or_else(|| file.planner.clone())
            .ok_or_else(|| anyhow!("--planner is required"))?
            .as_str(),
    )?;
    let horizon = args
        .horizon
        .or(file.horizon)
        .unwrap_or(match domain {
            Domain::Bandit => 3,
            Domain::Gp => 5,
            Domain::Fig2 => 1,
        });
    if horizon == 0 {
        anyhow::bail!("horizon must be at least 1");
    }
    let delta = args.delta.or_else(|| file.delta.clone()).unwrap_or_else(|| {
        match domain {
            Domain::Bandit => "linear:0.002",
            Domain::Gp => "sataffine:0.4,0.015,0.001",
            Domain::Fig2 => "linear:0.004",
        }
        .to_string()
    });
    // Normalize through the parsed form so records echo a canonical spec.
    let delta = delta_spec(&parse_delta(&delta)?);
    let f = args.f.or_else(|| file.f.clone()).unwrap_or_else(|| "f1".into());
    if RewardFunctional::parse(&f).is_none() {
        anyhow::bail!("unknown reward functional '{f}' (expected g or f1)");
    }
    let budget = budget_spec(&parse_budget(
        &args
            .budget
            .or_else(|| file.budget.clone())
            .unwrap_or_else(|| "samples:50000".into()),
    )?);
    if let Some(m) = args.m.as_ref().or(file.m.as_ref()) {
        parse_m_range(m)?;
    }
    let replicates = args.replicates.or(file.replicates).unwrap_or(1);
    if replicates == 0 {
        anyhow::bail!("--replicates must be at least 1");
    }
    Ok(ResolvedRun {
        domain,
        planner,
        preset: args
            .preset
            .or_else(|| file.preset.clone())
            .unwrap_or_else(|| "table1".into()),
        horizon,
        gamma: args.gamma.or(file.gamma).unwrap_or(1.0),
        delta,
        f,
        budget,
        c: args.c.or(file.c).unwrap_or(std::f64::consts::SQRT_2),
        seed: args.seed.or(file.seed).unwrap_or(0),
        replicates,
        grid: args.grid.or_else(|| file.grid.clone()),
        start: args.start.or_else(|| file.start.clone()),
        obstacles: if args.obstacles.is_empty() {
            file.obstacles.clone()
        } else {
            Some(args.obstacles)
        },
        m: args.m.or_else(|| file.m.clone()),
    })
}

/// Exact evaluation of a complete policy, enforcing the soundness guarantee:
/// a complete policy that violates its risk bound is a planner bug and fails
/// the run.
fn evaluate_complete(
    model: &dyn CcmdpModel,
    policy: &PolicyTree,
) -> Result<ExactRecord, CliError> {
    let evaluation = evaluate_policy(&model, policy).map_err(CliError::internal)?;
    let bound = model.risk_bound().eval(evaluation.expected_reward);
    let record = ExactRecord::new(&evaluation, bound);
    if !evaluation.feasible {
        return Err(CliError::Internal(anyhow!(
            "soundness violation: complete policy has execution risk {} above the bound {}",
            evaluation.execution_risk,
            bound
        )));
    }
    Ok(record)
}

fn planner_command(
    config: &ResolvedRun,
    model: &(dyn CcmdpModel + Send),
    out_dir: &Path,
) -> Result<CmdOutcome, CliError> {
    let f = config.reward_functional();
    let records: Vec<Result<RunRecord, CliError>> = match config.planner {
        Planner::Vulcanfs => vec![run_vulcanfs(config, model, f)],
        Planner::Oracle => vec![run_oracle(config, model)],
        Planner::Vulcan => map_replicates(config.replicates, |replicate| {
            run_vulcan(config, model, f, replicate)
        }),
        Planner::PenaltySweep => unreachable!("handled separately"),
    };
    let records = records.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for record in &records {
        write_json(out_dir, &record.json_name(), record).map_err(CliError::internal)?;
        rows.push(record.csv_row());
    }
    write_csv(out_dir, "run_summary.csv", &RunRecord::CSV_HEADER, &rows)
        .map_err(CliError::internal)?;
    for record in &records {
        println!(
            "{} {} replicate {}: root_value={:?} complete={} er={:?}",
            record.config.planner.name(),
            record.config.domain.name(),
            record.replicate,
            record.root_value,
            record.complete,
            record.exact.map(|e| e.execution_risk),
        );
    }
    if records.iter().all(|r| r.no_solution) {
        Ok(CmdOutcome::NoSolution)
    } else {
        Ok(CmdOutcome::Ok)
    }
}

fn base_record(config: &ResolvedRun, replicate: usize, stream: u64) -> RunRecord {
    RunRecord {
        schema_version: SCHEMA_VERSION,
        library_version: vulcan::version().to_string(),
        config: config.clone(),
        replicate,
        stream,
        root_value: None,
        complete: false,
        no_solution: false,
        policy: Vec::new(),
        exact: None,
        stats: None,
        wall_ms: 0.0,
    }
}

fn run_vulcanfs(
    config: &ResolvedRun,
    model: &dyn CcmdpModel,
    f: RewardFunctional,
) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let result = vulcanfs(&model, f, FORWARD_SEARCH_NODE_BUDGET)
        .context("forward search exceeded its node budget")
        .map_err(CliError::internal)?;
    let mut record = base_record(config, 0, config.seed);
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    record.root_value = result.root_value;
    record.no_solution = result.root_value.is_none();
    record.complete = result.policy.complete;
    record.policy = flatten_policy(&result.policy);
    if record.complete {
        record.exact = Some(evaluate_complete(model, &result.policy)?);
    }
    Ok(record)
}

fn run_oracle(config: &ResolvedRun, model: &dyn CcmdpModel) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let solution = optimal_policy(&model, ORACLE_WORK_BUDGET)
        .context("oracle exceeded its work budget")
        .map_err(CliError::internal)?;
    let mut record = base_record(config, 0, config.seed);
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match solution {
        OracleSolution::Optimal { policy, evaluation } => {
            record.root_value = Some(evaluation.expected_reward);
            record.complete = policy.complete;
            record.policy = flatten_policy(&policy);
            let bound = model.risk_bound().eval(evaluation.expected_reward);
            record.exact = Some(ExactRecord::new(&evaluation, bound));
        }
        OracleSolution::Infeasible => record.no_solution = true,
    }
    Ok(record)
}

fn run_vulcan(
    config: &ResolvedRun,
    model: &dyn CcmdpModel,
    f: RewardFunctional,
    replicate: usize,
) -> Result<RunRecord, CliError> {
    let stream = replicate as u64;
    let mut rng = planner_rng(config.seed, stream);
    let start = Instant::now();
    let result = vulcan(
        &model,
        f,
        config.sample_budget(),
        config.c,
        &mut UniformDefaultPolicy,
        &mut rng,
    );
    let mut record = base_record(config, replicate, stream);
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    record.root_value = result.root_value;
    record.no_solution = result.no_solution;
    record.complete = result.complete;
    record.stats = Some(result.stats);
    record.policy = flatten_policy(&result.policy);
    if result.complete {
        record.exact = Some(evaluate_complete(model, &result.policy)?);
    }
    Ok(record)
}

#[derive(Debug, Serialize)]
struct PenaltyRow {
    m: f64,
    root_action: Option<u32>,
    root_value: f64,
}

#[derive(Debug, Serialize)]
struct PenaltyReport {
    schema_version: u32,
    library_version: String,
    config: ResolvedRun,
    rows: Vec<PenaltyRow>,
    /// Root actions that no penalty coefficient ever selects.
    never_selected_actions: Vec<u32>,
}

fn penalty_command(
    config: &ResolvedRun,
    model: &(dyn CcmdpModel + Send),
    out_dir: &Path,
) -> Result<CmdOutcome, CliError> {
    let ms = parse_m_range(config.m.as_deref().unwrap_or("0:300:1")).map_err(CliError::Config)?;
    let swept = penalty_sweep(&model, &ms, FORWARD_SEARCH_NODE_BUDGET)
        .context("penalty sweep exceeded its node budget")
        .map_err(CliError::internal)?;
    let rows: Vec<PenaltyRow> = swept
        .iter()
        .map(|(m, policy)| PenaltyRow {
            m: *m,
            root_action: policy.action_at(&StateHistory::root()).map(|a| a.0),
            root_value: policy.root.value,
        })
        .collect();
    let all_actions: Vec<u32> = model
        .actions(&StateHistory::root())
        .iter()
        .map(|a| a.0)
        .collect();
    let never_selected_actions: Vec<u32> = all_actions
        .into_iter()
        .filter(|a| rows.iter().all(|r| r.root_action != Some(*a)))
        .collect();
    let report = PenaltyReport {
        schema_version: SCHEMA_VERSION,
        library_version: vulcan::version().to_string(),
        config: config.clone(),
        rows,
        never_selected_actions,
    };
    write_json(out_dir, "penalty_sweep.json", &report).map_err(CliError::internal)?;
    let csv_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.root_action.map(|a| a.to_string()).unwrap_or_default(),
                r.root_value.to_string(),
            ]
        })
        .collect();
    write_csv(
        out_dir,
        "penalty_sweep.csv",
        &["m", "root_action", "root_value"],
        &csv_rows,
    )
    .map_err(CliError::internal)?;
    for action in &report.never_selected_actions {
        println!("penalty sweep never selects action {action}");
    }
    Ok(CmdOutcome::Ok)
}
