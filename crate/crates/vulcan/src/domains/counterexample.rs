//! The three-action counterexample showing that reward penalties cannot
//! encode a risk bound.
//!
//! One action is chosen at horizon 1. Each action succeeds with the listed
//! probability and otherwise fails, with the same reward either way:
//!
//! | action | reward | failure probability |
//! |--------|--------|---------------------|
//! | 0      | 5      | 0.01                |
//! | 1      | 6      | 0.02                |
//! | 2      | 10     | 0.05                |
//!
//! Under Δ(x) = 0.004x the risky action 2 exceeds its bound and action 1 is
//! the best admissible choice, yet no penalty coefficient ever selects
//! action 1: small penalties prefer action 2, large ones action 0.

use crate::model::{OutcomeSet, SafeOutcome, TabularCcmdp, TabularNode};
use crate::risk_bound::RiskBound;

/// Builds the counterexample instance with the given risk bound
/// (Δ(x) = 0.004x in the canonical setup).
pub fn counterexample_model(risk_bound: RiskBound) -> TabularCcmdp {
    let arm = |reward: f64, risk: f64| OutcomeSet {
        safe_outcomes: vec![SafeOutcome {
            probability: 1.0 - risk,
            reward,
        }],
        failure_probability: risk,
        failure_reward: reward,
    };
    let root = TabularNode::leaf()
        .with_action(arm(5.0, 0.01), vec![TabularNode::leaf()])
        .with_action(arm(6.0, 0.02), vec![TabularNode::leaf()])
        .with_action(arm(10.0, 0.05), vec![TabularNode::leaf()]);
    TabularCcmdp::new(1, 1.0, risk_bound, root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionId, CcmdpModel, OutcomeRef, StateHistory};
    use crate::reward::{validate_model, RewardFunctional};
    use crate::risk::{local_constraint_holds, sequence_execution_risk};

    #[test]
    fn model_is_well_formed() {
        let model = counterexample_model(RiskBound::linear(0.004));
        assert!(validate_model(&model, 1, 100).unwrap().is_empty());
    }

    #[test]
    fn risky_action_violates_local_constraint() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let h = StateHistory::root().child(ActionId(2), OutcomeRef::Safe(0));
        let ser = sequence_execution_risk(&model, &h).unwrap().value;
        assert!((ser - 0.05 / 0.95).abs() < 1e-12);
        // ser ≈ 0.05263 exceeds Δ(f₁ = 10) = 0.04.
        assert!(!local_constraint_holds(&model, &h, RewardFunctional::ExpectedStep).unwrap());
    }

    #[test]
    fn middle_action_satisfies_local_constraint() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let h = StateHistory::root().child(ActionId(1), OutcomeRef::Safe(0));
        assert!(local_constraint_holds(&model, &h, RewardFunctional::ExpectedStep).unwrap());
    }

    #[test]
    fn rewards_are_outcome_independent() {
        let model = counterexample_model(RiskBound::linear(0.004));
        for a in 0..3 {
            let set = model.outcomes(&StateHistory::root(), ActionId(a));
            assert_eq!(set.safe_outcomes[0].reward, set.failure_reward);
        }
    }
}
