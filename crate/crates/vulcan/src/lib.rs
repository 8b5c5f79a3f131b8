//! Risk-bounded planning for finite-horizon chance-constrained MDPs.
//!
//! A chance-constrained MDP (CCMDP) asks for the policy that maximizes
//! expected lifetime reward subject to a bound on the probability of ever
//! entering a failure state. This crate generalizes the constant bound to a
//! concave nondecreasing *risk bounding function* Δ mapping expected reward
//! to allowed failure probability, and plans against it with a *local*
//! per-history constraint: a safe history is admissible when its sequence
//! execution risk stays below Δ of its reward functional. Imposing the local
//! constraint on every safe leaf history is sufficient for the policy-level
//! chance constraint, which decouples the search tree and lets ordinary
//! forward search and Monte Carlo tree search apply.
//!
//! The crate provides:
//!
//! - [`model`]: the [`CcmdpModel`] behavioral contract, state histories,
//!   and a tabular model for tests and small instances.
//! - [`risk_bound`]: built-in risk bounding function families.
//! - [`reward`]: lifetime reward and the per-action expectation functional.
//! - [`risk`]: sequence execution risk, the local constraint, and exact
//!   execution risk of a policy.
//! - [`forward_search`]: the exhaustive planner (optimal within the locally
//!   constrained policy class).
//! - [`mcts`]: the anytime UCT planner with action deletion and a
//!   post-sampling cleanup pass.
//! - [`oracle`]: exact ground truth — policy enumeration, evaluation, the
//!   optimal constrained policy, and a penalty-method sweep.
//! - [`domains`]: a Bayesian multi-armed bandit and a Gaussian-process
//!   exploration grid, plus the three-action penalty counterexample.
//! - [`verify`]: seeded randomized verification suites used by the test
//!   harness and the CLI.
//!
//! Parallel batch execution (oracle enumeration, verification suites) uses
//! rayon behind the default `parallel` feature; build with
//! `--no-default-features` for a fully sequential library.

pub mod domains;
pub mod forward_search;
pub mod mcts;
pub mod model;
pub mod oracle;
mod par;
pub mod policy;
pub mod reward;
pub mod risk;
pub mod risk_bound;
pub mod verify;

pub use forward_search::{count_reachable_histories, vulcanfs, VulcanFsResult};
pub use mcts::{
    audit_returned_policy, planner_rng, uct_select, vulcan, DefaultPolicy, SampleBudget,
    UniformDefaultPolicy, VulcanResult, VulcanStats,
};
pub use model::{
    ActionId, CcmdpModel, HistoryStep, OutcomeRef, OutcomeSet, SafeOutcome, StateHistory,
    TabularCcmdp,
};
pub use oracle::{
    best_value_under_local_constraint, count_policies, enumerate_policies, evaluate_policy,
    optimal_from_frontier, optimal_policy, penalty_sweep, policy_frontier, OracleSolution,
    PolicyEvaluation, PolicyFrontier,
};
pub use policy::{PolicyNode, PolicyTree};
pub use reward::{expected_step_reward, lifetime_reward, validate_model, RewardFunctional};
pub use risk::{
    execution_risk_exact, lemma1_sum, local_constraint_holds, sequence_execution_risk, SerValue,
};
pub use risk_bound::RiskBound;

use thiserror::Error;

/// Errors shared across planners, metrics, and domains.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A safe history contains a step with failure probability 1, so the
    /// sequence execution risk is undefined (the survival product is zero).
    #[error("degenerate risk: step {step} has failure probability 1 on a safe history")]
    DegenerateRisk { step: usize },
    /// The policy does not assign an action to a reachable non-terminal
    /// history.
    #[error("incomplete policy at history {at} (depth {depth})")]
    IncompletePolicy { at: String, depth: usize },
    /// An exhaustive walk exceeded its configured budget.
    #[error("budget exceeded: {context} needed more than {budget}")]
    BudgetExceeded { context: &'static str, budget: u128 },
    /// Every action at a node has been deleted.
    #[error("no actions remain")]
    NoActions,
    /// A bandit observation matched neither of the machine's two rewards.
    #[error("unknown reward {observed} (expected {r1} or {r2})")]
    UnknownReward { observed: f64, r1: f64, r2: f64 },
    /// The jittered kernel solve failed.
    #[error("singular kernel matrix in GP posterior solve")]
    SingularKernel,
    /// The vehicle mean lies strictly inside an obstacle; such actions must
    /// be made unavailable by the model rather than priced as risk.
    #[error("mean position ({x}, {y}) lies inside an obstacle")]
    MeanInsideObstacle { x: f64, y: f64 },
    /// A domain configuration is unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Library version string, echoed into run records for reproducibility.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
