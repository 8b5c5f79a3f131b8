//! Sequence execution risk, the local constraint, and exact execution risk.
//!
//! For a safe history the sequence execution risk is
//! (1 − Π(1 − rᵢ)) / Π(1 − rᵢ) over the immediate risks rᵢ of its actions;
//! for failing histories it is zero by definition. Its expectation over all
//! completions of a history under a policy equals the execution risk of that
//! policy, which is what makes the per-history constraint
//! ser(h) ≤ Δ(f(h)) sufficient for the policy-level chance constraint.

use crate::model::{walk_steps, CcmdpModel, OutcomeRef, StateHistory};
use crate::policy::PolicyTree;
use crate::reward::RewardFunctional;
use crate::Error;

/// Slack used when comparing ser against Δ(f): boundary cases are feasible,
/// matching the non-strict inequality of the soundness theorem.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

/// Sequence execution risk of a history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerValue {
    /// The risk value; zero whenever the history is failing.
    pub value: f64,
    pub is_failing_history: bool,
}

/// Computes the sequence execution risk of `history`.
///
/// Safe histories yield (1 − Π)/Π with Π the product of per-step survival
/// probabilities; failing histories yield zero; the empty history yields
/// zero (empty product). Errs with [`Error::DegenerateRisk`] if a step of a
/// safe history carries failure probability 1.
pub fn sequence_execution_risk<M: CcmdpModel>(
    model: &M,
    history: &StateHistory,
) -> Result<SerValue, Error> {
    if history.is_failing() {
        return Ok(SerValue {
            value: 0.0,
            is_failing_history: true,
        });
    }
    let mut survival = 1.0;
    let mut degenerate_at = None;
    walk_steps(model, history, |t, set, _| {
        if set.failure_probability >= 1.0 && degenerate_at.is_none() {
            degenerate_at = Some(t);
        }
        survival *= 1.0 - set.failure_probability;
    });
    if let Some(step) = degenerate_at {
        return Err(Error::DegenerateRisk { step });
    }
    Ok(SerValue {
        value: (1.0 - survival) / survival,
        is_failing_history: false,
    })
}

/// The local constraint φ(f): true iff ser(h) ≤ Δ(f(h)) within
/// [`CONSTRAINT_SLACK`]. Failing histories satisfy it vacuously.
pub fn local_constraint_holds<M: CcmdpModel>(
    model: &M,
    history: &StateHistory,
    f: RewardFunctional,
) -> Result<bool, Error> {
    let ser = sequence_execution_risk(model, history)?;
    if ser.is_failing_history {
        return Ok(true);
    }
    let bound = model.risk_bound().eval(f.evaluate(model, history));
    Ok(ser.value <= bound + CONSTRAINT_SLACK)
}

/// Exact execution risk of `policy` from `history`: the probability that a
/// failure state is entered before the horizon, by the recursion
/// er(h at horizon) = 0 and er(h) = r + Σ p(s')·er(child).
///
/// Errs with [`Error::IncompletePolicy`] if the policy lacks an action at a
/// reachable non-terminal history.
pub fn execution_risk_exact<M: CcmdpModel>(
    model: &M,
    policy: &PolicyTree,
    history: &StateHistory,
) -> Result<f64, Error> {
    fn recurse<M: CcmdpModel>(
        model: &M,
        policy: &PolicyTree,
        history: &mut StateHistory,
    ) -> Result<f64, Error> {
        if history.len() == model.horizon() {
            return Ok(0.0);
        }
        let action = policy
            .action_at(history)
            .ok_or_else(|| Error::IncompletePolicy {
                at: history.key(),
                depth: history.len(),
            })?;
        let set = model.outcomes(history, action);
        let mut risk = set.failure_probability;
        for (i, outcome) in set.safe_outcomes.iter().enumerate() {
            history.push(action, OutcomeRef::Safe(i));
            risk += outcome.probability * recurse(model, policy, history)?;
            history.pop();
        }
        Ok(risk)
    }
    let mut h = history.clone();
    recurse(model, policy, &mut h)
}

/// Expectation of ser over all completions of `history` under `policy`,
/// computed by exhaustive enumeration. Failing completions contribute zero.
/// Equals [`execution_risk_exact`] up to floating point.
pub fn ser_expectation<M: CcmdpModel>(
    model: &M,
    policy: &PolicyTree,
    history: &StateHistory,
    node_budget: u64,
) -> Result<f64, Error> {
    let mut visited = 0u64;
    // Suffix ser of the completion relative to `history`: the product runs
    // over the appended steps only, matching er measured from `history`.
    fn recurse<M: CcmdpModel>(
        model: &M,
        policy: &PolicyTree,
        history: &mut StateHistory,
        path_probability: f64,
        survival: f64,
        visited: &mut u64,
        budget: u64,
    ) -> Result<f64, Error> {
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded {
                context: "ser_expectation",
                budget: budget as u128,
            });
        }
        if history.len() == model.horizon() {
            if survival <= 0.0 {
                return Err(Error::DegenerateRisk {
                    step: history.len(),
                });
            }
            return Ok(path_probability * (1.0 - survival) / survival);
        }
        let action = policy
            .action_at(history)
            .ok_or_else(|| Error::IncompletePolicy {
                at: history.key(),
                depth: history.len(),
            })?;
        let set = model.outcomes(history, action);
        let mut total = 0.0;
        for (i, outcome) in set.safe_outcomes.iter().enumerate() {
            history.push(action, OutcomeRef::Safe(i));
            total += recurse(
                model,
                policy,
                history,
                path_probability * outcome.probability,
                survival * (1.0 - set.failure_probability),
                visited,
                budget,
            )?;
            history.pop();
        }
        Ok(total)
    }
    let mut h = history.clone();
    recurse(model, policy, &mut h, 1.0, 1.0, &mut visited, node_budget)
}

/// Σ over safe completions of p(h)/Π(1 − rᵢ), which is identically 1 for
/// any complete policy. Exposed as a test oracle.
pub fn lemma1_sum<M: CcmdpModel>(
    model: &M,
    policy: &PolicyTree,
    history: &StateHistory,
    node_budget: u64,
) -> Result<f64, Error> {
    let mut visited = 0u64;
    fn recurse<M: CcmdpModel>(
        model: &M,
        policy: &PolicyTree,
        history: &mut StateHistory,
        weight: f64,
        visited: &mut u64,
        budget: u64,
    ) -> Result<f64, Error> {
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded {
                context: "lemma1_sum",
                budget: budget as u128,
            });
        }
        if history.len() == model.horizon() {
            return Ok(weight);
        }
        let action = policy
            .action_at(history)
            .ok_or_else(|| Error::IncompletePolicy {
                at: history.key(),
                depth: history.len(),
            })?;
        let set = model.outcomes(history, action);
        let survival = 1.0 - set.failure_probability;
        if survival <= 0.0 {
            return Err(Error::DegenerateRisk {
                step: history.len(),
            });
        }
        let mut total = 0.0;
        for (i, outcome) in set.safe_outcomes.iter().enumerate() {
            history.push(action, OutcomeRef::Safe(i));
            total += recurse(
                model,
                policy,
                history,
                weight * outcome.probability / survival,
                visited,
                budget,
            )?;
            history.pop();
        }
        Ok(total)
    }
    let mut h = history.clone();
    recurse(model, policy, &mut h, 1.0, &mut visited, node_budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionId, OutcomeSet, SafeOutcome, TabularCcmdp, TabularNode};
    use crate::policy::PolicyNode;
    use crate::risk_bound::RiskBound;
    use std::collections::BTreeMap;

    /// A chain where each step has the given failure probability and a
    /// single safe continuation with reward 1.
    fn risky_chain(risks: &[f64]) -> TabularCcmdp {
        let mut node = TabularNode::leaf();
        for &r in risks.iter().rev() {
            let set = OutcomeSet {
                safe_outcomes: vec![SafeOutcome {
                    probability: 1.0 - r,
                    reward: 1.0,
                }],
                failure_probability: r,
                failure_reward: 0.0,
            };
            node = TabularNode::leaf().with_action(set, vec![node]);
        }
        TabularCcmdp::new(risks.len(), 1.0, RiskBound::linear(1.0), node)
    }

    fn safe_chain_history(len: usize) -> StateHistory {
        let mut h = StateHistory::root();
        for _ in 0..len {
            h.push(ActionId(0), OutcomeRef::Safe(0));
        }
        h
    }

    fn chain_policy(len: usize) -> PolicyTree {
        let mut node = PolicyNode::leaf(0.0);
        for _ in 0..len {
            node = PolicyNode {
                action: Some(ActionId(0)),
                value: 0.0,
                visits: None,
                children: BTreeMap::from([(0, node)]),
            };
        }
        PolicyTree {
            root: node,
            complete: true,
        }
    }

    #[test]
    fn ser_zero_for_riskless_history() {
        let model = risky_chain(&[0.0, 0.0]);
        let ser = sequence_execution_risk(&model, &safe_chain_history(2)).unwrap();
        assert_eq!(ser.value, 0.0);
        assert!(!ser.is_failing_history);
    }

    #[test]
    fn ser_zero_for_failing_history() {
        let model = risky_chain(&[0.5]);
        let failing = StateHistory::root().child(ActionId(0), OutcomeRef::Failure);
        let ser = sequence_execution_risk(&model, &failing).unwrap();
        assert_eq!(ser.value, 0.0);
        assert!(ser.is_failing_history);
    }

    #[test]
    fn ser_zero_for_empty_history() {
        let model = risky_chain(&[0.5]);
        let ser = sequence_execution_risk(&model, &StateHistory::root()).unwrap();
        assert_eq!(ser.value, 0.0);
    }

    #[test]
    fn ser_matches_hand_evaluation() {
        // Two routes to the same value: the closed form
        // (1 − 0.999·0.9995)/(0.999·0.9995) and the step recursion
        // r₀/Π + r₁/(1 − r₁).
        let model = risky_chain(&[0.001, 0.0005]);
        let ser = sequence_execution_risk(&model, &safe_chain_history(2))
            .unwrap()
            .value;
        let survival = 0.999 * 0.9995;
        let closed_form = (1.0 - survival) / survival;
        let recursion = 0.001 / survival + 0.0005 / 0.9995;
        assert!((ser - closed_form).abs() < 1e-15);
        assert!((ser - recursion).abs() < 1e-12);
        assert!((ser - 0.0015018).abs() < 5e-7);
    }

    #[test]
    fn ser_recursion_identity_on_suffixes() {
        // ser(h_{t:n}) = r_t/Π_{i≥t}(1−r_i) + ser(h_{t+1:n}), checked by
        // computing suffix sers as fresh chains.
        let risks = [0.02, 0.05, 0.01, 0.07];
        for t in 0..risks.len() {
            let suffix = &risks[t..];
            let model = risky_chain(suffix);
            let full = sequence_execution_risk(&model, &safe_chain_history(suffix.len()))
                .unwrap()
                .value;
            let survival: f64 = suffix.iter().map(|r| 1.0 - r).product();
            let tail_model = risky_chain(&suffix[1..]);
            let tail = sequence_execution_risk(&tail_model, &safe_chain_history(suffix.len() - 1))
                .unwrap()
                .value;
            assert!((full - (suffix[0] / survival + tail)).abs() < 1e-12);
        }
    }

    #[test]
    fn ser_degenerate_risk_raises() {
        let model = risky_chain(&[1.0]);
        // The safe branch has probability 0 and could never be realized, but
        // a hypothetical safe history through it must raise.
        let err = sequence_execution_risk(&model, &safe_chain_history(1)).unwrap_err();
        assert!(matches!(err, Error::DegenerateRisk { step: 0 }));
    }

    #[test]
    fn ser_strictly_increases_with_risky_steps() {
        let shorter = risky_chain(&[0.01, 0.02]);
        let longer = risky_chain(&[0.01, 0.02, 0.03]);
        let a = sequence_execution_risk(&shorter, &safe_chain_history(2))
            .unwrap()
            .value;
        let b = sequence_execution_risk(&longer, &safe_chain_history(3))
            .unwrap()
            .value;
        assert!(b > a);
    }

    #[test]
    fn local_constraint_vacuous_for_failing_history() {
        let mut model = risky_chain(&[0.9]);
        model.set_risk_bound(RiskBound::constant(0.0));
        let failing = StateHistory::root().child(ActionId(0), OutcomeRef::Failure);
        assert!(local_constraint_holds(&model, &failing, RewardFunctional::Realized).unwrap());
    }

    #[test]
    fn local_constraint_true_for_zero_risk() {
        let mut model = risky_chain(&[0.0, 0.0]);
        model.set_risk_bound(RiskBound::constant(0.0));
        let h = safe_chain_history(2);
        assert!(local_constraint_holds(&model, &h, RewardFunctional::Realized).unwrap());
    }

    #[test]
    fn execution_risk_single_step() {
        let model = risky_chain(&[0.05]);
        let policy = chain_policy(1);
        let er = execution_risk_exact(&model, &policy, &StateHistory::root()).unwrap();
        assert!((er - 0.05).abs() < 1e-15);
    }

    #[test]
    fn execution_risk_two_step_chain() {
        let model = risky_chain(&[0.01, 0.01]);
        let policy = chain_policy(2);
        let er = execution_risk_exact(&model, &policy, &StateHistory::root()).unwrap();
        assert!((er - 0.0199).abs() < 1e-12);
    }

    #[test]
    fn execution_risk_at_horizon_is_zero() {
        let model = risky_chain(&[0.3]);
        let policy = chain_policy(1);
        let er = execution_risk_exact(&model, &policy, &safe_chain_history(1)).unwrap();
        assert_eq!(er, 0.0);
    }

    #[test]
    fn execution_risk_requires_complete_policy() {
        let model = risky_chain(&[0.1, 0.1]);
        let policy = chain_policy(1); // one level short
        let err = execution_risk_exact(&model, &policy, &StateHistory::root()).unwrap_err();
        assert!(matches!(err, Error::IncompletePolicy { depth: 1, .. }));
    }

    #[test]
    fn ser_expectation_matches_execution_risk() {
        let model = risky_chain(&[0.05, 0.02, 0.07]);
        let policy = chain_policy(3);
        let er = execution_risk_exact(&model, &policy, &StateHistory::root()).unwrap();
        let expectation =
            ser_expectation(&model, &policy, &StateHistory::root(), 10_000).unwrap();
        assert!((er - expectation).abs() < 1e-12);
    }

    #[test]
    fn ser_expectation_hand_case() {
        // One action, r = 0.05, safe outcome terminal:
        // E[ser] = 0.95 · (0.05/0.95) = 0.05.
        let model = risky_chain(&[0.05]);
        let policy = chain_policy(1);
        let e = ser_expectation(&model, &policy, &StateHistory::root(), 100).unwrap();
        assert!((e - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ser_expectation_zero_risk_model() {
        let model = risky_chain(&[0.0, 0.0]);
        let policy = chain_policy(2);
        let e = ser_expectation(&model, &policy, &StateHistory::root(), 100).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn lemma1_sum_is_one() {
        let model = risky_chain(&[0.05, 0.02, 0.07]);
        let policy = chain_policy(3);
        let s = lemma1_sum(&model, &policy, &StateHistory::root(), 10_000).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lemma1_sum_zero_risk_exact() {
        let model = risky_chain(&[0.0, 0.0]);
        let policy = chain_policy(2);
        let s = lemma1_sum(&model, &policy, &StateHistory::root(), 100).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn lemma1_sum_single_step_base_case() {
        let model = risky_chain(&[0.3]);
        let policy = chain_policy(1);
        let s = lemma1_sum(&model, &policy, &StateHistory::root(), 100).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn budget_exceeded_propagates() {
        let model = risky_chain(&[0.1; 6]);
        let policy = chain_policy(6);
        let err = ser_expectation(&model, &policy, &StateHistory::root(), 2).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
