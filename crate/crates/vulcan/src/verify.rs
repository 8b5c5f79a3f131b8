//! Seeded randomized verification suites.
//!
//! Each suite draws deterministic random instances (one generator stream per
//! instance, so results are independent of thread scheduling), exercises a
//! proved identity or guarantee, and reports counts plus the worst residual
//! seen. The CLI exposes them behind `verify`; the acceptance tests run them
//! at the published instance counts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::forward_search::vulcanfs;
use crate::mcts::{planner_rng, vulcan, SampleBudget, UniformDefaultPolicy};
use crate::model::{
    CcmdpModel, OutcomeRef, OutcomeSet, SafeOutcome, StateHistory, TabularCcmdp, TabularNode,
};
use crate::oracle::{best_value_under_local_constraint, evaluate_policy, optimal_policy};
use crate::policy::{PolicyNode, PolicyTree};
use crate::reward::RewardFunctional;
use crate::risk::{execution_risk_exact, lemma1_sum, ser_expectation};
use crate::risk_bound::RiskBound;
use crate::{par, Error};

/// Shape of the random CCMDPs the suites draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomCcmdpConfig {
    /// Horizon drawn uniformly from 1..=max_horizon.
    pub max_horizon: usize,
    /// Actions per node drawn from 1..=max_actions.
    pub max_actions: usize,
    /// Safe outcomes per action drawn from 1..=max_outcomes.
    pub max_outcomes: usize,
    /// Immediate risk drawn from [0, max_risk].
    pub max_risk: f64,
    /// Linear risk bound slope drawn from this range.
    pub alpha_range: (f64, f64),
    pub gamma: f64,
}

impl Default for RandomCcmdpConfig {
    fn default() -> Self {
        Self {
            max_horizon: 4,
            max_actions: 3,
            max_outcomes: 3,
            max_risk: 0.1,
            alpha_range: (0.001, 0.01),
            gamma: 1.0,
        }
    }
}

/// Draws a random finite CCMDP with rewards in [0, 1] and zero failure
/// rewards.
pub fn random_ccmdp(config: &RandomCcmdpConfig, rng: &mut impl Rng) -> TabularCcmdp {
    fn build(config: &RandomCcmdpConfig, depth: usize, rng: &mut impl Rng) -> TabularNode {
        if depth == 0 {
            return TabularNode::leaf();
        }
        let mut node = TabularNode::leaf();
        let actions = rng.gen_range(1..=config.max_actions);
        for _ in 0..actions {
            let outcomes = rng.gen_range(1..=config.max_outcomes);
            // Quadratic skew toward small risks keeps a healthy fraction of
            // instances solvable under tight linear bounds; the range is
            // still [0, max_risk].
            let risk = config.max_risk * rng.gen_range(0.0f64..=1.0).powi(2);
            let raw: Vec<f64> = (0..outcomes).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let set = OutcomeSet {
                safe_outcomes: raw
                    .iter()
                    .map(|w| SafeOutcome {
                        probability: (1.0 - risk) * w / total,
                        reward: rng.gen_range(0.0..1.0),
                    })
                    .collect(),
                failure_probability: risk,
                failure_reward: 0.0,
            };
            let children = (0..outcomes).map(|_| build(config, depth - 1, rng)).collect();
            node = node.with_action(set, children);
        }
        node
    }
    let horizon = rng.gen_range(1..=config.max_horizon);
    let alpha = rng.gen_range(config.alpha_range.0..=config.alpha_range.1);
    TabularCcmdp::new(
        horizon,
        config.gamma,
        RiskBound::linear(alpha),
        build(config, horizon, rng),
    )
}

/// A uniformly random complete policy, for identities that hold under any
/// policy.
pub fn random_policy<M: CcmdpModel>(model: &M, rng: &mut impl Rng) -> PolicyTree {
    fn build<M: CcmdpModel>(
        model: &M,
        history: &mut StateHistory,
        rng: &mut impl Rng,
    ) -> PolicyNode {
        if history.len() == model.horizon() {
            return PolicyNode::leaf(0.0);
        }
        let actions = model.actions(history);
        assert!(!actions.is_empty(), "random models have no dead ends");
        let action = actions[rng.gen_range(0..actions.len())];
        let set = model.outcomes(history, action);
        let children = (0..set.safe_outcomes.len())
            .map(|i| {
                history.push(action, OutcomeRef::Safe(i));
                let child = build(model, history, rng);
                history.pop();
                (i, child)
            })
            .collect();
        PolicyNode {
            action: Some(action),
            value: 0.0,
            visits: None,
            children,
        }
    }
    PolicyTree {
        root: build(model, &mut StateHistory::root(), rng),
        complete: true,
    }
}

/// Outcome of one verification suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub instances: usize,
    /// Individual assertions evaluated across all instances.
    pub checks: u64,
    pub failures: Vec<String>,
    /// Worst absolute residual observed by the suite's comparisons.
    pub max_residual: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(suite: &str, instances: usize, parts: Vec<(u64, Vec<String>, f64)>) -> Self {
        let mut report = SuiteReport {
            suite: suite.to_string(),
            instances,
            checks: 0,
            failures: Vec::new(),
            max_residual: 0.0,
        };
        for (checks, failures, residual) in parts {
            report.checks += checks;
            report.failures.extend(failures);
            report.max_residual = report.max_residual.max(residual);
        }
        report
    }
}

const LEMMA_TOLERANCE: f64 = 1e-9;
const ENUMERATION_NODE_BUDGET: u64 = 1_000_000;

/// Expectation identities: the lemma-1 sum is 1 and the ser expectation
/// equals the exact execution risk, on random instances under random
/// policies.
pub fn lemma_suite(seed: u64, instances: usize) -> SuiteReport {
    let config = RandomCcmdpConfig::default();
    let parts = par::map_indexed(instances, |i| {
        let mut rng = planner_rng(seed, i as u64);
        let model = random_ccmdp(&config, &mut rng);
        let policy = random_policy(&model, &mut rng);
        let mut failures = Vec::new();
        let mut residual = 0.0f64;
        let root = StateHistory::root();
        match (
            lemma1_sum(&model, &policy, &root, ENUMERATION_NODE_BUDGET),
            ser_expectation(&model, &policy, &root, ENUMERATION_NODE_BUDGET),
            execution_risk_exact(&model, &policy, &root),
        ) {
            (Ok(sum), Ok(expectation), Ok(exact)) => {
                residual = residual.max((sum - 1.0).abs()).max((expectation - exact).abs());
                if (sum - 1.0).abs() > LEMMA_TOLERANCE {
                    failures.push(format!("instance {i}: lemma-1 sum {sum}"));
                }
                if (expectation - exact).abs() > LEMMA_TOLERANCE {
                    failures.push(format!(
                        "instance {i}: E[ser] {expectation} vs er {exact}"
                    ));
                }
            }
            (a, b, c) => failures.push(format!(
                "instance {i}: unexpected error {:?}",
                [a.err(), b.err(), c.err()]
            )),
        }
        (2, failures, residual)
    });
    SuiteReport::merge("lemmas", instances, parts)
}

/// The expectation identity with a deliberately wrong ser (numerator only):
/// used by tests to confirm the lemma suite detects a broken metric.
#[cfg(test)]
fn lemma2_residual_with_mutant(seed: u64) -> f64 {
    let config = RandomCcmdpConfig::default();
    let mut rng = planner_rng(seed, 0);
    let model = random_ccmdp(&config, &mut rng);
    let policy = random_policy(&model, &mut rng);
    fn mutant<M: CcmdpModel>(
        model: &M,
        policy: &PolicyTree,
        history: &mut StateHistory,
        probability: f64,
        survival: f64,
    ) -> f64 {
        if history.len() == model.horizon() {
            return probability * (1.0 - survival);
        }
        let action = policy.action_at(history).expect("complete policy");
        let set = model.outcomes(history, action);
        let mut total = 0.0;
        for (i, outcome) in set.safe_outcomes.iter().enumerate() {
            history.push(action, OutcomeRef::Safe(i));
            total += mutant(
                model,
                policy,
                history,
                probability * outcome.probability,
                survival * (1.0 - set.failure_probability),
            );
            history.pop();
        }
        total
    }
    let wrong = mutant(&model, &policy, &mut StateHistory::root(), 1.0, 1.0);
    let exact = execution_risk_exact(&model, &policy, &StateHistory::root()).unwrap();
    (wrong - exact).abs()
}

/// Soundness: every complete policy returned by forward search and by the
/// anytime planner satisfies the policy-level risk bound, measured exactly.
pub fn theorem1_suite(seed: u64, instances: usize, vulcan_budget: u64) -> SuiteReport {
    let config = RandomCcmdpConfig::default();
    let parts = par::map_indexed(instances, |i| {
        let mut rng = planner_rng(seed, i as u64);
        let model = random_ccmdp(&config, &mut rng);
        let mut failures = Vec::new();
        let mut residual = 0.0f64;
        let mut checks = 0;
        let mut check = |name: &str, policy: &PolicyTree| match evaluate_policy(&model, policy) {
            Ok(eval) => {
                let bound = model.risk_bound().eval(eval.expected_reward);
                residual = residual.max(eval.execution_risk - bound);
                checks += 1;
                if eval.execution_risk > bound + 1e-9 {
                    failures.push(format!(
                        "instance {i} {name}: er {} > Δ(E[g]) {}",
                        eval.execution_risk, bound
                    ));
                }
            }
            Err(e) => failures.push(format!("instance {i} {name}: {e}")),
        };
        let fs = vulcanfs(&model, RewardFunctional::ExpectedStep, ENUMERATION_NODE_BUDGET)
            .expect("instance generator respects the search budget");
        if fs.root_value.is_some() {
            check("vulcanfs", &fs.policy);
        }
        let result = vulcan(
            &model,
            RewardFunctional::ExpectedStep,
            SampleBudget::Samples(vulcan_budget),
            std::f64::consts::SQRT_2,
            &mut UniformDefaultPolicy,
            &mut rng,
        );
        if result.complete {
            check("vulcan", &result.policy);
        }
        (checks, failures, residual)
    });
    SuiteReport::merge("theorem1", instances, parts)
}

/// Search-tree bookkeeping: visit counts re-sum across arms and children
/// after sampling and cleanup, on randomized instances and budgets. The
/// planner verifies the invariant internally and reports it in its stats.
pub fn counts_suite(seed: u64, instances: usize) -> SuiteReport {
    let config = RandomCcmdpConfig::default();
    let parts = par::map_indexed(instances, |i| {
        let mut rng = planner_rng(seed, i as u64);
        let model = random_ccmdp(&config, &mut rng);
        let budget = rng.gen_range(1..=512);
        let result = vulcan(
            &model,
            RewardFunctional::ExpectedStep,
            SampleBudget::Samples(budget),
            std::f64::consts::SQRT_2,
            &mut UniformDefaultPolicy,
            &mut rng,
        );
        let failures = if result.stats.count_consistent {
            Vec::new()
        } else {
            vec![format!("instance {i}: count bookkeeping inconsistent")]
        };
        (1, failures, 0.0)
    });
    SuiteReport::merge("counts", instances, parts)
}

/// Oracle dominance and within-class optimality: the exact constrained
/// optimum is never below the forward-search value, and on instances small
/// enough to enumerate, forward search exactly matches the best policy
/// whose leaves satisfy the local constraint.
pub fn dominance_suite(seed: u64, instances: usize) -> SuiteReport {
    let config = RandomCcmdpConfig::default();
    let parts = par::map_indexed(instances, |i| {
        let mut rng = planner_rng(seed, i as u64);
        let model = random_ccmdp(&config, &mut rng);
        let mut failures = Vec::new();
        let mut residual = 0.0f64;
        let mut checks = 0;
        let fs = vulcanfs(&model, RewardFunctional::ExpectedStep, ENUMERATION_NODE_BUDGET)
            .expect("instance generator respects the search budget");
        if let Some(fs_value) = fs.root_value {
            match optimal_policy(&model, 50_000_000) {
                Ok(solution) => match solution.optimal() {
                    Some((_, eval)) => {
                        checks += 1;
                        residual = residual.max(fs_value - eval.expected_reward);
                        if eval.expected_reward < fs_value - 1e-9 {
                            failures.push(format!(
                                "instance {i}: oracle {} below forward search {}",
                                eval.expected_reward, fs_value
                            ));
                        }
                    }
                    None => failures.push(format!(
                        "instance {i}: oracle infeasible but forward search found {fs_value}"
                    )),
                },
                Err(e) => failures.push(format!("instance {i}: oracle error {e}")),
            }
            if crate::oracle::count_policies(&model) <= 20_000 {
                match best_value_under_local_constraint(
                    &model,
                    RewardFunctional::ExpectedStep,
                    20_000,
                ) {
                    Ok(Some(best)) => {
                        checks += 1;
                        residual = residual.max((best - fs_value).abs());
                        if (best - fs_value).abs() > 1e-9 {
                            failures.push(format!(
                                "instance {i}: enumerated best {best} vs forward search {fs_value}"
                            ));
                        }
                    }
                    Ok(None) => failures.push(format!(
                        "instance {i}: enumeration found no admissible policy but forward search did"
                    )),
                    Err(e) => failures.push(format!("instance {i}: enumeration error {e}")),
                }
            }
        }
        (checks, failures, residual)
    });
    SuiteReport::merge("dominance", instances, parts)
}

/// Expectation equality of the two reward functionals (the admissibility
/// condition holds with equality): E[f₁] = E[g] under random policies,
/// verified by exhaustive enumeration.
pub fn functional_equality_suite(seed: u64, instances: usize) -> SuiteReport {
    let config = RandomCcmdpConfig {
        max_horizon: 3,
        ..RandomCcmdpConfig::default()
    };
    let parts = par::map_indexed(instances, |i| {
        let mut rng = planner_rng(seed, i as u64);
        let model = random_ccmdp(&config, &mut rng);
        let policy = random_policy(&model, &mut rng);
        let mut expectation_g = 0.0;
        let mut expectation_f1 = 0.0;
        // Exhaustive expectation over all completions, failures included.
        fn walk<M: CcmdpModel>(
            model: &M,
            policy: &PolicyTree,
            history: &mut StateHistory,
            probability: f64,
            eg: &mut f64,
            ef1: &mut f64,
        ) {
            if history.len() == model.horizon() || history.is_failing() {
                *eg += probability * crate::reward::lifetime_reward(model, history);
                *ef1 +=
                    probability * RewardFunctional::ExpectedStep.evaluate(model, history);
                return;
            }
            let action = policy.action_at(history).expect("complete policy");
            let set = model.outcomes(history, action);
            for (i, outcome) in set.safe_outcomes.iter().enumerate() {
                history.push(action, OutcomeRef::Safe(i));
                walk(model, policy, history, probability * outcome.probability, eg, ef1);
                history.pop();
            }
            if set.failure_probability > 0.0 {
                let mut failing = history.clone();
                failing.push(action, OutcomeRef::Failure);
                *eg += probability * set.failure_probability
                    * crate::reward::lifetime_reward(model, &failing);
                *ef1 += probability * set.failure_probability
                    * RewardFunctional::ExpectedStep.evaluate(model, &failing);
            }
        }
        walk(
            &model,
            &policy,
            &mut StateHistory::root(),
            1.0,
            &mut expectation_g,
            &mut expectation_f1,
        );
        let residual = (expectation_g - expectation_f1).abs();
        let failures = if residual > 1e-9 {
            vec![format!(
                "instance {i}: E[g] {expectation_g} vs E[f1] {expectation_f1}"
            )]
        } else {
            Vec::new()
        };
        (1, failures, residual)
    });
    SuiteReport::merge("functional-equality", instances, parts)
}

/// Named suite selector used by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lemmas,
    Theorem1,
    Counts,
    Dominance,
    FunctionalEquality,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Lemmas,
        Suite::Theorem1,
        Suite::Counts,
        Suite::Dominance,
        Suite::FunctionalEquality,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "lemmas" => Some(Suite::Lemmas),
            "theorem1" => Some(Suite::Theorem1),
            "counts" => Some(Suite::Counts),
            "dominance" => Some(Suite::Dominance),
            "functional-equality" => Some(Suite::FunctionalEquality),
            _ => None,
        }
    }

    pub fn run(self, seed: u64, instances: usize) -> SuiteReport {
        match self {
            Suite::Lemmas => lemma_suite(seed, instances),
            Suite::Theorem1 => theorem1_suite(seed, instances, 2_000),
            Suite::Counts => counts_suite(seed, instances),
            Suite::Dominance => dominance_suite(seed, instances),
            Suite::FunctionalEquality => functional_equality_suite(seed, instances),
        }
    }
}

/// Validates a model the way the harness does before running planners.
pub fn validate_instance<M: CcmdpModel>(model: &M, node_budget: u64) -> Result<(), Error> {
    let violations = crate::reward::validate_model(model, model.horizon(), node_budget)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{} model violations, first: {:?}",
            violations.len(),
            violations[0]
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_default_seeds() {
        assert!(lemma_suite(7, 12).passed());
        assert!(theorem1_suite(11, 10, 500).passed());
        assert!(counts_suite(13, 10).passed());
        assert!(functional_equality_suite(17, 10).passed());
    }

    #[test]
    fn dominance_suite_passes() {
        let report = dominance_suite(19, 8);
        assert!(report.passed(), "{:?}", report.failures);
        assert!(report.checks > 0);
    }

    #[test]
    fn lemma_suite_detects_missing_denominator() {
        // The mutated ser (numerator only) must produce a visible residual
        // on typical instances; the suite tolerance would flag it.
        let mut detected = false;
        for seed in 0..20 {
            if lemma2_residual_with_mutant(seed) > LEMMA_TOLERANCE {
                detected = true;
                break;
            }
        }
        assert!(detected, "mutant ser went unnoticed on 20 seeds");
    }

    #[test]
    fn random_models_are_well_formed() {
        let config = RandomCcmdpConfig::default();
        for seed in 0..10 {
            let mut rng = planner_rng(seed, 0);
            let model = random_ccmdp(&config, &mut rng);
            assert!(validate_instance(&model, 1_000_000).is_ok());
        }
    }

    #[test]
    fn suite_parsing_round_trips() {
        for suite in Suite::ALL {
            let name = match suite {
                Suite::Lemmas => "lemmas",
                Suite::Theorem1 => "theorem1",
                Suite::Counts => "counts",
                Suite::Dominance => "dominance",
                Suite::FunctionalEquality => "functional-equality",
            };
            assert_eq!(Suite::parse(name), Some(suite));
        }
        assert_eq!(Suite::parse("nope"), None);
    }
}
