//! Exhaustive forward search over the history tree.
//!
//! The planner explores every safe history once, checks the local risk
//! constraint at the horizon, and backs values up Bellman-style. The result
//! is the exact optimum within the class of policies whose safe leaf
//! histories all satisfy the constraint — the policy the anytime planner
//! converges to.

use std::collections::BTreeMap;

use crate::model::{CcmdpModel, OutcomeRef, StateHistory};
use crate::policy::{PolicyNode, PolicyTree};
use crate::reward::RewardFunctional;
use crate::risk::CONSTRAINT_SLACK;
use crate::Error;

/// Result of [`vulcanfs`].
#[derive(Debug, Clone)]
pub struct VulcanFsResult {
    /// The computed policy. Complete whenever a solution exists.
    pub policy: PolicyTree,
    /// Expected lifetime reward of the policy, `None` when no policy built
    /// from constraint-satisfying leaf histories exists.
    pub root_value: Option<f64>,
    /// Safe histories visited during the search.
    pub explored_history_count: u64,
}

struct Search<'a, M: CcmdpModel> {
    model: &'a M,
    f: RewardFunctional,
    gamma: f64,
    horizon: usize,
    explored: u64,
    budget: u64,
}

impl<M: CcmdpModel> Search<'_, M> {
    /// Returns the node value and policy subtree, or `None` when every
    /// action at this history leads to a constraint violation or dead end.
    /// `survival` is Π(1 − rᵢ) and `f_acc` the f-value of the partial
    /// history; `scale` is γ^t.
    fn run(
        &mut self,
        history: &mut StateHistory,
        survival: f64,
        f_acc: f64,
        scale: f64,
    ) -> Result<Option<(f64, PolicyNode)>, Error> {
        self.explored += 1;
        if self.explored > self.budget {
            return Err(Error::BudgetExceeded {
                context: "vulcanfs",
                budget: self.budget as u128,
            });
        }
        if history.len() == self.horizon {
            if survival <= 0.0 {
                return Ok(None);
            }
            let ser = (1.0 - survival) / survival;
            let bound = self.model.risk_bound().eval(f_acc);
            if ser <= bound + CONSTRAINT_SLACK {
                return Ok(Some((0.0, PolicyNode::leaf(0.0))));
            }
            return Ok(None);
        }
        let actions = self.model.actions(history);
        let mut best: Option<(f64, PolicyNode)> = None;
        for action in actions {
            let set = self.model.outcomes(history, action);
            let child_survival = survival * (1.0 - set.failure_probability);
            let step_f = match self.f {
                RewardFunctional::Realized => None,
                RewardFunctional::ExpectedStep => Some(set.expected_reward()),
            };
            // Failure branches contribute their transition reward and
            // nothing beyond it.
            let mut q = set.failure_probability * set.failure_reward;
            let mut children = BTreeMap::new();
            let mut feasible = true;
            for (i, outcome) in set.safe_outcomes.iter().enumerate() {
                let child_f = f_acc + scale * step_f.unwrap_or(outcome.reward);
                history.push(action, OutcomeRef::Safe(i));
                let child = self.run(history, child_survival, child_f, scale * self.gamma)?;
                history.pop();
                match child {
                    Some((value, node)) => {
                        q += outcome.probability * (outcome.reward + self.gamma * value);
                        children.insert(i, node);
                    }
                    None => {
                        // Any unacceptable descendant makes the action
                        // infeasible: a complete policy must cover it.
                        feasible = false;
                        break;
                    }
                }
            }
            if !feasible {
                continue;
            }
            // Strict comparison keeps the lowest action index on ties.
            if best.as_ref().is_none_or(|(v, _)| q > *v) {
                best = Some((
                    q,
                    PolicyNode {
                        action: Some(action),
                        value: q,
                        visits: None,
                        children,
                    },
                ));
            }
        }
        Ok(best)
    }
}

/// Runs exhaustive forward search under the local constraint with reward
/// functional `f`, visiting at most `node_budget` safe histories.
///
/// A root value of `None` means no solution: every policy has some safe
/// leaf violating the constraint (or a dead end). That is a normal result,
/// not an error.
pub fn vulcanfs<M: CcmdpModel>(
    model: &M,
    f: RewardFunctional,
    node_budget: u64,
) -> Result<VulcanFsResult, Error> {
    let mut search = Search {
        model,
        f,
        gamma: model.discount(),
        horizon: model.horizon(),
        explored: 0,
        budget: node_budget,
    };
    let mut root_history = StateHistory::root();
    let outcome = search.run(&mut root_history, 1.0, 0.0, 1.0)?;
    let result = match outcome {
        Some((value, root)) => VulcanFsResult {
            policy: PolicyTree {
                root,
                complete: true,
            },
            root_value: Some(value),
            explored_history_count: search.explored,
        },
        None => VulcanFsResult {
            policy: PolicyTree::empty(),
            root_value: None,
            explored_history_count: search.explored,
        },
    };
    Ok(result)
}

/// Counts every safe history of the model at depths 0..=horizon. Sizes an
/// instance against the (|A|·B)^n growth of exhaustive search.
pub fn count_reachable_histories<M: CcmdpModel>(model: &M, budget: u64) -> Result<u64, Error> {
    fn recurse<M: CcmdpModel>(
        model: &M,
        history: &mut StateHistory,
        count: &mut u64,
        budget: u64,
    ) -> Result<(), Error> {
        *count += 1;
        if *count > budget {
            return Err(Error::BudgetExceeded {
                context: "count_reachable_histories",
                budget: budget as u128,
            });
        }
        if history.len() == model.horizon() {
            return Ok(());
        }
        for action in model.actions(history) {
            let set = model.outcomes(history, action);
            for i in 0..set.safe_outcomes.len() {
                history.push(action, OutcomeRef::Safe(i));
                recurse(model, history, count, budget)?;
                history.pop();
            }
        }
        Ok(())
    }
    let mut count = 0;
    let mut history = StateHistory::root();
    recurse(model, &mut history, &mut count, budget)?;
    Ok(count)
}
