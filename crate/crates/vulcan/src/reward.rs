//! Reward functionals over state histories and model validation.

use serde::{Deserialize, Serialize};

use crate::model::{walk_steps, CcmdpModel, OutcomeRef, StateHistory};
use crate::Error;

/// Discounted lifetime reward g of a (possibly partial, possibly failing)
/// history: Σ_t γ^t R(s_t, a_t, s_{t+1}). Failing histories include the
/// failure-branch reward of their final transition. The empty history has
/// reward 0.
pub fn lifetime_reward<M: CcmdpModel>(model: &M, history: &StateHistory) -> f64 {
    let gamma = model.discount();
    let mut total = 0.0;
    let mut scale = 1.0;
    walk_steps(model, history, |_, set, step| {
        total += scale * set.reward_of(step.outcome);
        scale *= gamma;
    });
    total
}

/// Discounted sum of per-action expected immediate rewards:
/// Σ_t γ^t E[R(s_t, a_t, S_{t+1})], the expectation running over all
/// outcomes of the action actually taken — failure branch included —
/// independent of which outcome occurred.
///
/// This functional has the same expectation as [`lifetime_reward`] under any
/// policy, but smooths away unlikely low-reward outcomes so they cannot
/// disqualify an otherwise acceptable action.
pub fn expected_step_reward<M: CcmdpModel>(model: &M, history: &StateHistory) -> f64 {
    let gamma = model.discount();
    let mut total = 0.0;
    let mut scale = 1.0;
    walk_steps(model, history, |_, set, _| {
        total += scale * set.expected_reward();
        scale *= gamma;
    });
    total
}

/// Selects the history functional f used by the local risk constraint.
/// Any choice whose expectation never exceeds that of the lifetime reward
/// is admissible; both built-ins meet it with equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardFunctional {
    /// f = g, the realized lifetime reward.
    Realized,
    /// f₁, replacing each realized reward with the action's expected
    /// immediate reward.
    ExpectedStep,
}

impl RewardFunctional {
    pub fn evaluate<M: CcmdpModel>(self, model: &M, history: &StateHistory) -> f64 {
        match self {
            RewardFunctional::Realized => lifetime_reward(model, history),
            RewardFunctional::ExpectedStep => expected_step_reward(model, history),
        }
    }

    /// Parses the CLI spelling: `g` or `f1`.
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "g" => Some(RewardFunctional::Realized),
            "f1" => Some(RewardFunctional::ExpectedStep),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardFunctional::Realized => "g",
            RewardFunctional::ExpectedStep => "f1",
        }
    }
}

/// A defect found while exhaustively walking a model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    /// Safe probabilities plus failure probability differ from 1 beyond 1e-9.
    ProbabilitySum {
        history: String,
        action: u32,
        sum: f64,
    },
    /// Failure probability outside [0, 1].
    FailureProbabilityRange {
        history: String,
        action: u32,
        value: f64,
    },
    /// A safe outcome probability outside (0, 1].
    SafeProbabilityRange {
        history: String,
        action: u32,
        outcome: usize,
        value: f64,
    },
    /// Safe outcomes empty although the failure probability is below 1.
    EmptyOutcomes { history: String, action: u32 },
    /// A repeated call to `actions` or `outcomes` disagreed with the first.
    Nondeterminism { history: String },
}

/// Exhaustively walks all safe histories of `model` up to `max_depth`,
/// reporting probability-sum violations, out-of-range probabilities, and
/// nondeterminism between repeated calls. Returns the violations found;
/// errs only when the walk exceeds `node_budget` histories.
pub fn validate_model<M: CcmdpModel>(
    model: &M,
    max_depth: usize,
    node_budget: u64,
) -> Result<Vec<ModelViolation>, Error> {
    assert!(max_depth <= model.horizon());
    let mut violations = Vec::new();
    let mut visited: u64 = 0;
    let mut stack = vec![StateHistory::root()];
    while let Some(history) = stack.pop() {
        visited += 1;
        if visited > node_budget {
            return Err(Error::BudgetExceeded {
                context: "validate_model",
                budget: node_budget as u128,
            });
        }
        if history.len() >= max_depth {
            continue;
        }
        let actions = model.actions(&history);
        if actions != model.actions(&history) {
            violations.push(ModelViolation::Nondeterminism {
                history: history.key(),
            });
            continue;
        }
        for action in actions {
            let set = model.outcomes(&history, action);
            if set != model.outcomes(&history, action) {
                violations.push(ModelViolation::Nondeterminism {
                    history: history.key(),
                });
                continue;
            }
            let sum = set.probability_sum();
            if (sum - 1.0).abs() > 1e-9 {
                violations.push(ModelViolation::ProbabilitySum {
                    history: history.key(),
                    action: action.0,
                    sum,
                });
            }
            if !(0.0..=1.0).contains(&set.failure_probability) {
                violations.push(ModelViolation::FailureProbabilityRange {
                    history: history.key(),
                    action: action.0,
                    value: set.failure_probability,
                });
            }
            if set.safe_outcomes.is_empty() && set.failure_probability < 1.0 - 1e-9 {
                violations.push(ModelViolation::EmptyOutcomes {
                    history: history.key(),
                    action: action.0,
                });
            }
            for (i, outcome) in set.safe_outcomes.iter().enumerate() {
                if !(outcome.probability > 0.0 && outcome.probability <= 1.0) {
                    violations.push(ModelViolation::SafeProbabilityRange {
                        history: history.key(),
                        action: action.0,
                        outcome: i,
                        value: outcome.probability,
                    });
                }
                stack.push(history.child(action, OutcomeRef::Safe(i)));
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionId, OutcomeSet, SafeOutcome, TabularCcmdp, TabularNode};
    use crate::risk_bound::RiskBound;

    /// A chain of deterministic safe transitions with the given rewards.
    pub(crate) fn chain_model(rewards: &[f64], gamma: f64) -> TabularCcmdp {
        let mut node = TabularNode::leaf();
        for &r in rewards.iter().rev() {
            node = TabularNode::leaf().with_action(OutcomeSet::certain(r), vec![node]);
        }
        TabularCcmdp::new(rewards.len(), gamma, RiskBound::linear(1.0), node)
    }

    fn chain_history(len: usize) -> StateHistory {
        let mut h = StateHistory::root();
        for _ in 0..len {
            h.push(ActionId(0), OutcomeRef::Safe(0));
        }
        h
    }

    #[test]
    fn lifetime_reward_undiscounted_sum() {
        let model = chain_model(&[1.0, 2.0, 3.0], 1.0);
        assert_eq!(lifetime_reward(&model, &chain_history(3)), 6.0);
    }

    #[test]
    fn lifetime_reward_discounted_sum() {
        // 1 + 0.5·2 + 0.25·3 = 2.75
        let model = chain_model(&[1.0, 2.0, 3.0], 0.5);
        assert!((lifetime_reward(&model, &chain_history(3)) - 2.75).abs() < 1e-15);
    }

    #[test]
    fn lifetime_reward_empty_history_is_zero() {
        let model = chain_model(&[1.0], 1.0);
        assert_eq!(lifetime_reward(&model, &StateHistory::root()), 0.0);
    }

    #[test]
    fn lifetime_reward_includes_failure_branch_reward() {
        let set = OutcomeSet {
            safe_outcomes: vec![SafeOutcome {
                probability: 0.9,
                reward: 1.0,
            }],
            failure_probability: 0.1,
            failure_reward: -2.0,
        };
        let root = TabularNode::leaf().with_action(set, vec![TabularNode::leaf()]);
        let model = TabularCcmdp::new(1, 1.0, RiskBound::linear(1.0), root);
        let failing = StateHistory::root().child(ActionId(0), OutcomeRef::Failure);
        assert_eq!(lifetime_reward(&model, &failing), -2.0);
    }

    #[test]
    fn realized_functional_matches_lifetime_reward() {
        let model = chain_model(&[0.5], 1.0);
        let h = chain_history(1);
        assert_eq!(
            RewardFunctional::Realized.evaluate(&model, &h),
            lifetime_reward(&model, &h)
        );
        assert_eq!(lifetime_reward(&model, &h), 0.5);

        let model = chain_model(&[1.0, 1.0], 0.9);
        assert!((lifetime_reward(&model, &chain_history(2)) - 1.9).abs() < 1e-15);
    }

    /// One action whose outcomes are reward 0 or 1 with equal probability.
    fn coin_model(steps: usize) -> TabularCcmdp {
        fn node(depth: usize) -> TabularNode {
            if depth == 0 {
                return TabularNode::leaf();
            }
            let set = OutcomeSet {
                safe_outcomes: vec![
                    SafeOutcome {
                        probability: 0.5,
                        reward: 0.0,
                    },
                    SafeOutcome {
                        probability: 0.5,
                        reward: 1.0,
                    },
                ],
                failure_probability: 0.0,
                failure_reward: 0.0,
            };
            TabularNode::leaf().with_action(set, vec![node(depth - 1), node(depth - 1)])
        }
        TabularCcmdp::new(steps, 1.0, RiskBound::linear(1.0), node(steps))
    }

    #[test]
    fn expected_step_reward_ignores_realized_outcome() {
        let model = coin_model(1);
        for outcome in [OutcomeRef::Safe(0), OutcomeRef::Safe(1)] {
            let h = StateHistory::root().child(ActionId(0), outcome);
            assert!((expected_step_reward(&model, &h) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn expected_step_reward_two_steps() {
        let model = coin_model(2);
        let h = StateHistory::root()
            .child(ActionId(0), OutcomeRef::Safe(0))
            .child(ActionId(0), OutcomeRef::Safe(1));
        assert!((expected_step_reward(&model, &h) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_rewards_make_functionals_agree() {
        let model = chain_model(&[0.3, 0.7, 0.1], 1.0);
        let h = chain_history(3);
        assert_eq!(
            lifetime_reward(&model, &h),
            expected_step_reward(&model, &h)
        );
    }

    #[test]
    fn validate_accepts_well_formed_model() {
        let model = coin_model(2);
        assert!(validate_model(&model, 2, 1_000).unwrap().is_empty());
    }

    #[test]
    fn validate_reports_probability_sum_defect() {
        let set = OutcomeSet {
            safe_outcomes: vec![SafeOutcome {
                probability: 0.9,
                reward: 0.0,
            }],
            failure_probability: 0.0,
            failure_reward: 0.0,
        };
        let root = TabularNode::leaf().with_action(set, vec![TabularNode::leaf()]);
        let model = TabularCcmdp::new(1, 1.0, RiskBound::linear(1.0), root);
        let violations = validate_model(&model, 1, 1_000).unwrap();
        assert!(matches!(
            violations.as_slice(),
            [ModelViolation::ProbabilitySum { sum, .. }] if (sum - 0.9).abs() < 1e-12
        ));
    }

    #[test]
    fn validate_reports_failure_probability_range() {
        let set = OutcomeSet {
            safe_outcomes: vec![SafeOutcome {
                probability: 0.5,
                reward: 0.0,
            }],
            failure_probability: 1.2,
            failure_reward: 0.0,
        };
        let root = TabularNode::leaf().with_action(set, vec![TabularNode::leaf()]);
        let model = TabularCcmdp::new(1, 1.0, RiskBound::linear(1.0), root);
        let violations = validate_model(&model, 1, 1_000).unwrap();
        assert!(violations
            .iter()
            .any(|v| matches!(v, ModelViolation::FailureProbabilityRange { value, .. } if *value > 1.0)));
    }

    #[test]
    fn validate_respects_node_budget() {
        let model = coin_model(8);
        let err = validate_model(&model, 8, 10).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
