//! The CCMDP model contract and state histories.
//!
//! A model describes a finite-horizon chance-constrained MDP over a tree of
//! state histories. Failure states are lumped into a single terminal failure
//! branch per (history, action): failure ends the mission, so per-state
//! identity of failures is unobservable and domains need not invent one.
//!
//! Histories are the node identity. A [`StateHistory`] is the path of
//! (action, outcome) choices from the root; the safe outcome index within an
//! action's [`OutcomeSet`] plays the role of the successor-state reference.
//! Models reconstruct their semantic state by folding over the path, which
//! keeps them pure and freely shareable across threads.

use serde::{Deserialize, Serialize};

use crate::risk_bound::RiskBound;

/// Domain-scoped action identifier. Planners treat actions as opaque and
/// break ties by position in the model's ordered action list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub u32);

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The realized outcome of one executed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeRef {
    /// Index into the action's safe outcome list.
    Safe(usize),
    /// The lumped failure branch; terminal.
    Failure,
}

/// One executed step: the action taken and the outcome that occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistoryStep {
    pub action: ActionId,
    pub outcome: OutcomeRef,
}

/// An ordered sequence of executed steps starting at the initial state.
///
/// Two histories compare equal iff their full step sequences are equal.
/// Construction is append-only; a failure step may only appear last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StateHistory {
    steps: Vec<HistoryStep>,
}

impl StateHistory {
    /// The empty history rooted at the initial state.
    pub fn root() -> Self {
        Self { steps: Vec::new() }
    }

    /// Number of actions taken (the time index t).
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[HistoryStep] {
        &self.steps
    }

    /// True when the final step entered the failure branch.
    pub fn is_failing(&self) -> bool {
        matches!(
            self.steps.last(),
            Some(HistoryStep {
                outcome: OutcomeRef::Failure,
                ..
            })
        )
    }

    /// Returns a new history with one more step appended.
    ///
    /// Panics if the receiver is already failing: failure is terminal.
    pub fn child(&self, action: ActionId, outcome: OutcomeRef) -> Self {
        assert!(!self.is_failing(), "cannot extend a failing history");
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.extend_from_slice(&self.steps);
        steps.push(HistoryStep { action, outcome });
        Self { steps }
    }

    pub fn push(&mut self, action: ActionId, outcome: OutcomeRef) {
        assert!(!self.is_failing(), "cannot extend a failing history");
        self.steps.push(HistoryStep { action, outcome });
    }

    pub fn pop(&mut self) {
        self.steps.pop();
    }

    /// Empties the history in place, keeping its capacity.
    pub fn clear(&mut self) {
        self.steps.clear();
    }

    /// The prefix containing the first `t` steps.
    pub fn prefix(&self, t: usize) -> Self {
        Self {
            steps: self.steps[..t].to_vec(),
        }
    }

    /// Renders the history as a dotted action/outcome index path, e.g.
    /// `"0.2"` for action 0 followed by safe outcome 2, with `"F"` marking
    /// the failure branch. The root renders as the empty string.
    pub fn key(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                out.push('.');
            }
            out.push_str(&step.action.0.to_string());
            out.push('.');
            match step.outcome {
                OutcomeRef::Safe(k) => out.push_str(&k.to_string()),
                OutcomeRef::Failure => out.push('F'),
            }
        }
        out
    }
}

/// One safe successor of an action: its probability and transition reward.
/// The successor state itself is referenced by this outcome's index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeOutcome {
    pub probability: f64,
    pub reward: f64,
}

/// The full stochastic outcome of taking an action from a safe history:
/// safe successors plus the lumped failure branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSet {
    pub safe_outcomes: Vec<SafeOutcome>,
    /// Immediate risk r of the action: probability of entering the failure
    /// branch. Safe probabilities plus `failure_probability` sum to 1.
    pub failure_probability: f64,
    /// Reward received on the transition into the failure branch.
    pub failure_reward: f64,
}

impl OutcomeSet {
    /// A deterministic safe transition.
    pub fn certain(reward: f64) -> Self {
        Self {
            safe_outcomes: vec![SafeOutcome {
                probability: 1.0,
                reward,
            }],
            failure_probability: 0.0,
            failure_reward: 0.0,
        }
    }

    /// Expected immediate reward over all branches, failure included.
    pub fn expected_reward(&self) -> f64 {
        let safe: f64 = self
            .safe_outcomes
            .iter()
            .map(|o| o.probability * o.reward)
            .sum();
        safe + self.failure_probability * self.failure_reward
    }

    /// Reward of the branch selected by `outcome`.
    pub fn reward_of(&self, outcome: OutcomeRef) -> f64 {
        match outcome {
            OutcomeRef::Safe(i) => self.safe_outcomes[i].reward,
            OutcomeRef::Failure => self.failure_reward,
        }
    }

    /// Total probability mass, which must be 1 for a valid model.
    pub fn probability_sum(&self) -> f64 {
        let safe: f64 = self.safe_outcomes.iter().map(|o| o.probability).sum();
        safe + self.failure_probability
    }
}

/// Behavioral contract for a finite-horizon CCMDP instance.
///
/// Implementations must be pure: `actions` and `outcomes` are deterministic
/// functions of their arguments, and repeated calls agree. All planners in
/// this crate rely on that to cache per-history data. `actions` may return
/// an empty list at a non-terminal history, which marks the history as a
/// dead end with no feasible continuation.
pub trait CcmdpModel: Sync {
    /// Planning horizon n ≥ 1: the number of actions to perform.
    fn horizon(&self) -> usize;

    /// Discount factor γ ∈ [0, 1].
    fn discount(&self) -> f64;

    /// The risk bounding function Δ.
    fn risk_bound(&self) -> &RiskBound;

    /// Ordered list of actions available at a safe history with
    /// `history.len() < horizon()`.
    fn actions(&self, history: &StateHistory) -> Vec<ActionId>;

    /// Stochastic outcome of taking `action` at a safe history.
    fn outcomes(&self, history: &StateHistory, action: ActionId) -> OutcomeSet;

    /// Optional duplicate-subtree key for exact solvers.
    ///
    /// Two histories of equal length returning the same key must root
    /// identical subtrees: same actions, same outcome sets, and successor
    /// histories that again share keys. Domains whose semantic state is
    /// order-independent (the bandit) expose this so the oracle can merge
    /// duplicate subtrees; the default of `None` keeps strict tree
    /// semantics.
    fn state_key(&self, _history: &StateHistory) -> Option<u64> {
        None
    }
}

impl<M: CcmdpModel + ?Sized> CcmdpModel for &M {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn discount(&self) -> f64 {
        (**self).discount()
    }
    fn risk_bound(&self) -> &RiskBound {
        (**self).risk_bound()
    }
    fn actions(&self, history: &StateHistory) -> Vec<ActionId> {
        (**self).actions(history)
    }
    fn outcomes(&self, history: &StateHistory, action: ActionId) -> OutcomeSet {
        (**self).outcomes(history, action)
    }
    fn state_key(&self, history: &StateHistory) -> Option<u64> {
        (**self).state_key(history)
    }
}

/// Walks a history against its model, yielding the outcome set and realized
/// step at each time index. Used by the reward and risk functionals.
pub(crate) fn walk_steps<M: CcmdpModel>(
    model: &M,
    history: &StateHistory,
    mut visit: impl FnMut(usize, &OutcomeSet, HistoryStep),
) {
    let mut prefix = StateHistory::root();
    for (t, step) in history.steps().iter().enumerate() {
        let set = model.outcomes(&prefix, step.action);
        visit(t, &set, *step);
        prefix.push(step.action, step.outcome);
    }
}

/// An explicit tree-backed CCMDP, used for the penalty counterexample,
/// randomized test instances, and hand-built fixtures.
///
/// The node tree mirrors the history tree: each node holds its ordered
/// actions, and each action its outcome set plus one child node per safe
/// outcome. Nodes beyond the stored depth fall back to an empty action list.
#[derive(Debug, Clone)]
pub struct TabularCcmdp {
    horizon: usize,
    discount: f64,
    risk_bound: RiskBound,
    root: TabularNode,
}

#[derive(Debug, Clone, Default)]
pub struct TabularNode {
    pub actions: Vec<TabularAction>,
}

#[derive(Debug, Clone)]
pub struct TabularAction {
    pub id: ActionId,
    pub outcome_set: OutcomeSet,
    /// One child per safe outcome, same order.
    pub children: Vec<TabularNode>,
}

impl TabularCcmdp {
    /// Builds a tabular model without validating probabilities; use
    /// [`crate::reward::validate_model`] to check an instance.
    pub fn new(horizon: usize, discount: f64, risk_bound: RiskBound, root: TabularNode) -> Self {
        Self {
            horizon,
            discount,
            risk_bound,
            root,
        }
    }

    pub fn set_risk_bound(&mut self, risk_bound: RiskBound) {
        self.risk_bound = risk_bound;
    }

    fn node(&self, history: &StateHistory) -> Option<&TabularNode> {
        let mut node = &self.root;
        for step in history.steps() {
            let action = node
                .actions
                .iter()
                .find(|a| a.id == step.action)?;
            match step.outcome {
                OutcomeRef::Safe(i) => node = action.children.get(i)?,
                OutcomeRef::Failure => return None,
            }
        }
        Some(node)
    }
}

impl CcmdpModel for TabularCcmdp {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn risk_bound(&self) -> &RiskBound {
        &self.risk_bound
    }

    fn actions(&self, history: &StateHistory) -> Vec<ActionId> {
        match self.node(history) {
            Some(node) => node.actions.iter().map(|a| a.id).collect(),
            None => Vec::new(),
        }
    }

    fn outcomes(&self, history: &StateHistory, action: ActionId) -> OutcomeSet {
        let node = self
            .node(history)
            .expect("outcomes queried at an unreachable history");
        node.actions
            .iter()
            .find(|a| a.id == action)
            .expect("outcomes queried for an unavailable action")
            .outcome_set
            .clone()
    }
}

/// Convenience builders for hand-written fixtures.
impl TabularNode {
    pub fn leaf() -> Self {
        Self::default()
    }

    pub fn with_action(mut self, outcome_set: OutcomeSet, children: Vec<TabularNode>) -> Self {
        let id = ActionId(self.actions.len() as u32);
        debug_assert_eq!(outcome_set.safe_outcomes.len(), children.len());
        self.actions.push(TabularAction {
            id,
            outcome_set,
            children,
        });
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_equality_is_sequence_equality() {
        let a = StateHistory::root()
            .child(ActionId(0), OutcomeRef::Safe(1))
            .child(ActionId(2), OutcomeRef::Safe(0));
        let b = StateHistory::root()
            .child(ActionId(0), OutcomeRef::Safe(1))
            .child(ActionId(2), OutcomeRef::Safe(0));
        let c = StateHistory::root()
            .child(ActionId(2), OutcomeRef::Safe(0))
            .child(ActionId(0), OutcomeRef::Safe(1));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn failing_history_is_terminal() {
        let h = StateHistory::root().child(ActionId(0), OutcomeRef::Failure);
        assert!(h.is_failing());
        let result = std::panic::catch_unwind(|| h.child(ActionId(0), OutcomeRef::Safe(0)));
        assert!(result.is_err());
    }

    #[test]
    fn history_key_rendering() {
        assert_eq!(StateHistory::root().key(), "");
        let h = StateHistory::root()
            .child(ActionId(0), OutcomeRef::Safe(2))
            .child(ActionId(1), OutcomeRef::Failure);
        assert_eq!(h.key(), "0.2.1.F");
    }

    #[test]
    fn outcome_set_expected_reward_includes_failure() {
        let set = OutcomeSet {
            safe_outcomes: vec![
                SafeOutcome {
                    probability: 0.5,
                    reward: 0.0,
                },
                SafeOutcome {
                    probability: 0.45,
                    reward: 1.0,
                },
            ],
            failure_probability: 0.05,
            failure_reward: 2.0,
        };
        assert!((set.expected_reward() - (0.45 + 0.1)).abs() < 1e-15);
        assert!((set.probability_sum() - 1.0).abs() < 1e-15);
    }
}
