//! Anytime Monte Carlo tree search under the local risk constraint.
//!
//! Sampling follows UCT, with two departures from the unconstrained
//! algorithm. First, whole rollouts are kept in the tree: on a node's first
//! visit the default policy picks one action and the rollout continues to
//! the horizon, every state saved, so expensive model evaluations are never
//! repeated. Second, safe histories reaching the horizon are checked against
//! the local constraint; a violation deletes the last action, sampling
//! resumes at its parent, and counts are re-summed so the deleted subtree
//! stops influencing selection. A drawn failure outcome ends the rollout as
//! a successful terminal sample: failing histories satisfy the constraint
//! vacuously, and the branch contributes its transition reward and nothing
//! beyond.
//!
//! After sampling stops, a cleanup pass audits the chosen policy: immediate
//! outcomes of policy actions that were never sampled must satisfy the
//! constraint on their partial histories, and actions failing the audit are
//! deleted with the policy re-selected at the parent only. The returned
//! policy therefore bounds risk over everything it actually covers, and
//! with enough samples it converges to the forward-search optimum.

use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ActionId, CcmdpModel, OutcomeRef, OutcomeSet, StateHistory};
use crate::policy::{PolicyNode, PolicyTree};
use crate::reward::RewardFunctional;
use crate::risk::{local_constraint_holds, CONSTRAINT_SLACK};
use crate::Error;

/// Sampling budget for one planner run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleBudget {
    /// Number of successful root samples; deterministic under a fixed seed.
    Samples(u64),
    /// Wall-clock limit; the sample count actually taken is reported in the
    /// run statistics.
    WallClock(Duration),
}

/// Chooses the action tried on a node's first visit. Domain knowledge goes
/// here; the uniform default suffices when there is none.
pub trait DefaultPolicy<M: CcmdpModel> {
    /// `available` is the non-deleted action list, never empty; the choice
    /// must come from it.
    fn choose(
        &mut self,
        model: &M,
        history: &StateHistory,
        available: &[ActionId],
        rng: &mut dyn RngCore,
    ) -> ActionId;
}

/// Uniformly random first-visit choice under the run's seeded generator.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformDefaultPolicy;

impl<M: CcmdpModel> DefaultPolicy<M> for UniformDefaultPolicy {
    fn choose(
        &mut self,
        _model: &M,
        _history: &StateHistory,
        available: &[ActionId],
        rng: &mut dyn RngCore,
    ) -> ActionId {
        available[(rng.next_u64() % available.len() as u64) as usize]
    }
}

/// The portable seeded generator used across the crate: ChaCha8, with one
/// stream per replicate so replicate k of seed s is reproducible in
/// isolation.
pub fn planner_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// UCT action selection over arms given as (action, Q̃, visits) with parent
/// visit count `visits_total`: argmax of Q̃ + c·√(ln N_h / N_{h,a}), ties to
/// the earliest arm. Every arm must have been sampled at least once; the
/// caller handles the sample-every-action-once rule.
pub fn uct_select(
    arms: &[(ActionId, f64, u64)],
    visits_total: u64,
    exploration: f64,
) -> Result<ActionId, Error> {
    if arms.is_empty() {
        return Err(Error::NoActions);
    }
    let log_total = (visits_total.max(1) as f64).ln();
    let mut best: Option<(f64, ActionId)> = None;
    for &(action, q, visits) in arms {
        debug_assert!(visits >= 1, "uct_select requires sampled arms");
        let bonus = exploration * (log_total / visits as f64).sqrt();
        let score = q + bonus;
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, action));
        }
    }
    Ok(best.unwrap().1)
}

/// Per-run statistics emitted for the harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VulcanStats {
    /// Successful root samples taken.
    pub samples: u64,
    /// Actions deleted, sampling and cleanup combined.
    pub deletions: u64,
    /// Deepest node allocated.
    pub max_depth: usize,
    /// Search-tree nodes allocated.
    pub nodes_allocated: usize,
    /// Whether the visit-count bookkeeping re-summed consistently at the end
    /// of the run. Always true unless the planner has a bug; exposed so the
    /// verification harness can assert it in release builds.
    pub count_consistent: bool,
}

/// Result of a planner run.
#[derive(Debug, Clone)]
pub struct VulcanResult {
    /// Greedy policy by Q̃ with per-node value and visit annotations.
    pub policy: PolicyTree,
    /// Q̃ of the root policy action; `None` when the root was never
    /// successfully sampled.
    pub root_value: Option<f64>,
    /// True when every reachable history under the policy has an assigned
    /// action down to the horizon.
    pub complete: bool,
    /// True when the root exhausted all actions (during sampling or
    /// cleanup): no policy within the constrained class exists.
    pub no_solution: bool,
    pub stats: VulcanStats,
}

struct Arm {
    id: ActionId,
    deleted: bool,
    visits: u64,
    q: f64,
    failure_visits: u64,
    outcome_set: Option<OutcomeSet>,
    /// One slot per safe outcome, populated when the outcome set is cached.
    children: Vec<Option<usize>>,
}

struct Node {
    depth: usize,
    /// γ^depth.
    scale: f64,
    /// Π(1 − rᵢ) over the partial history reaching this node.
    survival: f64,
    /// f-value of the partial history.
    f_partial: f64,
    visits: u64,
    arms: Vec<Arm>,
    live_arms: usize,
    /// Current policy action (arm index); updated by sampling backups and
    /// by cleanup only where it deletes.
    policy_arm: Option<usize>,
}

struct Tree<'a, M: CcmdpModel> {
    model: &'a M,
    f: RewardFunctional,
    exploration: f64,
    gamma: f64,
    horizon: usize,
    nodes: Vec<Node>,
    deletions: u64,
    max_depth: usize,
}

impl<'a, M: CcmdpModel> Tree<'a, M> {
    fn new(model: &'a M, f: RewardFunctional, exploration: f64) -> Self {
        Tree {
            model,
            f,
            exploration,
            gamma: model.discount(),
            horizon: model.horizon(),
            nodes: Vec::new(),
            deletions: 0,
            max_depth: 0,
        }
    }

    fn alloc(&mut self, history: &StateHistory, scale: f64, survival: f64, f_partial: f64) -> usize {
        let depth = history.len();
        let arms = if depth < self.horizon {
            self.model
                .actions(history)
                .into_iter()
                .map(|id| Arm {
                    id,
                    deleted: false,
                    visits: 0,
                    q: 0.0,
                    failure_visits: 0,
                    outcome_set: None,
                    children: Vec::new(),
                })
                .collect()
        } else {
            Vec::new()
        };
        let live_arms = arms.len();
        self.nodes.push(Node {
            depth,
            scale,
            survival,
            f_partial,
            visits: 0,
            arms,
            live_arms,
            policy_arm: None,
        });
        self.max_depth = self.max_depth.max(depth);
        self.nodes.len() - 1
    }

    /// Constraint check on the (partial or full) history carried by the
    /// given path aggregates.
    fn constraint_ok(&self, survival: f64, f_partial: f64) -> bool {
        if survival <= 0.0 {
            return false;
        }
        let ser = (1.0 - survival) / survival;
        ser <= self.model.risk_bound().eval(f_partial) + CONSTRAINT_SLACK
    }

    fn ensure_outcomes(&mut self, node_id: usize, arm_idx: usize, history: &StateHistory) {
        if self.nodes[node_id].arms[arm_idx].outcome_set.is_none() {
            let id = self.nodes[node_id].arms[arm_idx].id;
            let set = self.model.outcomes(history, id);
            let arm = &mut self.nodes[node_id].arms[arm_idx];
            arm.children = vec![None; set.safe_outcomes.len()];
            arm.outcome_set = Some(set);
        }
    }

    /// Value of a node: best Q̃ among live sampled arms, zero at the horizon
    /// or when nothing is sampled. Unsampled arms have unknown Q̃ and never
    /// contribute.
    fn node_value(&self, node_id: usize) -> f64 {
        let node = &self.nodes[node_id];
        node.arms
            .iter()
            .filter(|a| !a.deleted && a.visits > 0)
            .map(|a| a.q)
            .fold(None::<f64>, |acc, q| {
                Some(acc.map_or(q, |b| if q > b { q } else { b }))
            })
            .unwrap_or(0.0)
    }

    /// Re-sums an arm's visit count and recomputes its Q̃ from the empirical
    /// child weights, then re-sums the node's visit count.
    fn backup_arm(&mut self, node_id: usize, arm_idx: usize) {
        let (visits, q) = {
            let arm = &self.nodes[node_id].arms[arm_idx];
            let set = arm.outcome_set.as_ref().expect("backup of unexpanded arm");
            let mut visits = arm.failure_visits;
            let mut weighted = arm.failure_visits as f64 * set.failure_reward;
            for (i, slot) in arm.children.iter().enumerate() {
                if let Some(child_id) = slot {
                    let child_visits = self.nodes[*child_id].visits;
                    visits += child_visits;
                    weighted += child_visits as f64
                        * (set.safe_outcomes[i].reward + self.gamma * self.node_value(*child_id));
                }
            }
            debug_assert!(visits > 0);
            (visits, weighted / visits as f64)
        };
        let arm = &mut self.nodes[node_id].arms[arm_idx];
        arm.visits = visits;
        arm.q = q;
        self.resum_node_visits(node_id);
    }

    fn resum_node_visits(&mut self, node_id: usize) {
        let node = &mut self.nodes[node_id];
        node.visits = node
            .arms
            .iter()
            .filter(|a| !a.deleted)
            .map(|a| a.visits)
            .sum();
    }

    fn delete_arm(&mut self, node_id: usize, arm_idx: usize) {
        let node = &mut self.nodes[node_id];
        debug_assert!(!node.arms[arm_idx].deleted);
        node.arms[arm_idx].deleted = true;
        node.live_arms -= 1;
        self.deletions += 1;
        self.resum_node_visits(node_id);
    }

    /// Greedy argmax of Q̃ over live sampled arms, ties to the lowest index.
    fn greedy_arm(&self, node_id: usize) -> Option<usize> {
        let node = &self.nodes[node_id];
        let mut best: Option<(f64, usize)> = None;
        for (idx, arm) in node.arms.iter().enumerate() {
            if arm.deleted || arm.visits == 0 {
                continue;
            }
            if best.is_none_or(|(q, _)| arm.q > q) {
                best = Some((arm.q, idx));
            }
        }
        best.map(|(_, idx)| idx)
    }

    /// Selection at a node that has been sampled before: any still-unsampled
    /// live arm first (lowest index), otherwise the UCT rule.
    fn select_sampled(&self, node_id: usize) -> usize {
        let node = &self.nodes[node_id];
        if let Some(idx) = node
            .arms
            .iter()
            .position(|a| !a.deleted && a.visits == 0)
        {
            return idx;
        }
        let log_total = (node.visits.max(1) as f64).ln();
        let mut best: Option<(f64, usize)> = None;
        for (idx, arm) in node.arms.iter().enumerate() {
            if arm.deleted {
                continue;
            }
            let score = arm.q + self.exploration * (log_total / arm.visits as f64).sqrt();
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, idx));
            }
        }
        best.expect("select_sampled called with live arms").1
    }

    fn draw_outcome(&self, set: &OutcomeSet, rng: &mut dyn RngCore) -> OutcomeRef {
        let mut u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        for (i, outcome) in set.safe_outcomes.iter().enumerate() {
            if u < outcome.probability {
                return OutcomeRef::Safe(i);
            }
            u -= outcome.probability;
        }
        if set.failure_probability > 0.0 || set.safe_outcomes.is_empty() {
            OutcomeRef::Failure
        } else {
            OutcomeRef::Safe(set.safe_outcomes.len() - 1)
        }
    }

    /// One sampling pass from `node_id`; `history` must sit at the node.
    /// Returns true when a constraint-respecting rollout to the horizon was
    /// found below, incrementing counts along the way.
    fn sample(
        &mut self,
        node_id: usize,
        history: &mut StateHistory,
        default_policy: &mut dyn DefaultPolicy<M>,
        rng: &mut dyn RngCore,
    ) -> bool {
        let depth = self.nodes[node_id].depth;
        if depth == self.horizon {
            let node = &self.nodes[node_id];
            if self.constraint_ok(node.survival, node.f_partial) {
                self.nodes[node_id].visits += 1;
                return true;
            }
            return false;
        }
        loop {
            if self.nodes[node_id].live_arms == 0 {
                return false;
            }
            let arm_idx = if self.nodes[node_id].visits == 0 {
                let available: Vec<ActionId> = self.nodes[node_id]
                    .arms
                    .iter()
                    .filter(|a| !a.deleted)
                    .map(|a| a.id)
                    .collect();
                let chosen = default_policy.choose(self.model, history, &available, rng);
                self.nodes[node_id]
                    .arms
                    .iter()
                    .position(|a| !a.deleted && a.id == chosen)
                    .expect("default policy must choose an available action")
            } else {
                self.select_sampled(node_id)
            };
            self.ensure_outcomes(node_id, arm_idx, history);
            let drawn = {
                let set = self.nodes[node_id].arms[arm_idx].outcome_set.as_ref().unwrap();
                self.draw_outcome(set, rng)
            };
            match drawn {
                OutcomeRef::Failure => {
                    // A failing history satisfies the constraint vacuously:
                    // a successful terminal sample worth the transition
                    // reward alone.
                    self.nodes[node_id].arms[arm_idx].failure_visits += 1;
                    self.backup_arm(node_id, arm_idx);
                    self.nodes[node_id].policy_arm = self.greedy_arm(node_id);
                    return true;
                }
                OutcomeRef::Safe(i) => {
                    let action = self.nodes[node_id].arms[arm_idx].id;
                    let child_id = match self.nodes[node_id].arms[arm_idx].children[i] {
                        Some(id) => id,
                        None => {
                            let (scale, survival, f_partial) = {
                                let node = &self.nodes[node_id];
                                let set =
                                    node.arms[arm_idx].outcome_set.as_ref().unwrap();
                                let step_f = match self.f {
                                    RewardFunctional::Realized => set.safe_outcomes[i].reward,
                                    RewardFunctional::ExpectedStep => set.expected_reward(),
                                };
                                (
                                    node.scale * self.gamma,
                                    node.survival * (1.0 - set.failure_probability),
                                    node.f_partial + node.scale * step_f,
                                )
                            };
                            history.push(action, OutcomeRef::Safe(i));
                            let id = self.alloc(history, scale, survival, f_partial);
                            history.pop();
                            self.nodes[node_id].arms[arm_idx].children[i] = Some(id);
                            id
                        }
                    };
                    history.push(action, OutcomeRef::Safe(i));
                    let ok = self.sample(child_id, history, default_policy, rng);
                    history.pop();
                    if ok {
                        self.backup_arm(node_id, arm_idx);
                        self.nodes[node_id].policy_arm = self.greedy_arm(node_id);
                        return true;
                    }
                    self.delete_arm(node_id, arm_idx);
                }
            }
        }
    }

    /// Post-sampling audit from `node_id` per the cleanup pass: never-
    /// sampled nodes are checked against the constraint on their partial
    /// history; sampled nodes recurse through every safe outcome of the
    /// policy action, deleting it and re-selecting only when a descendant
    /// fails.
    fn cleanup(&mut self, node_id: usize, history: &mut StateHistory) -> bool {
        if self.nodes[node_id].visits == 0 {
            let node = &self.nodes[node_id];
            return self.constraint_ok(node.survival, node.f_partial);
        }
        if self.nodes[node_id].depth == self.horizon {
            return true;
        }
        loop {
            let arm_idx = match self.nodes[node_id].policy_arm {
                Some(idx) if !self.nodes[node_id].arms[idx].deleted => idx,
                _ => return false,
            };
            let action = self.nodes[node_id].arms[arm_idx].id;
            let set = self.nodes[node_id].arms[arm_idx]
                .outcome_set
                .clone()
                .expect("policy arms are always expanded");
            let mut all_ok = true;
            for (i, outcome) in set.safe_outcomes.iter().enumerate() {
                let ok = match self.nodes[node_id].arms[arm_idx].children[i] {
                    Some(child_id) => {
                        history.push(action, OutcomeRef::Safe(i));
                        let ok = self.cleanup(child_id, history);
                        history.pop();
                        ok
                    }
                    None => {
                        // Immediate unsampled outcome: constraint on the
                        // partial history it would create.
                        let node = &self.nodes[node_id];
                        let step_f = match self.f {
                            RewardFunctional::Realized => outcome.reward,
                            RewardFunctional::ExpectedStep => set.expected_reward(),
                        };
                        self.constraint_ok(
                            node.survival * (1.0 - set.failure_probability),
                            node.f_partial + node.scale * step_f,
                        )
                    }
                };
                all_ok &= ok;
            }
            if all_ok {
                self.backup_arm(node_id, arm_idx);
                return true;
            }
            self.delete_arm(node_id, arm_idx);
            self.nodes[node_id].policy_arm = self.greedy_arm(node_id);
        }
    }

    /// Extracts the greedy policy with annotations and the completeness
    /// flag.
    fn extract(&self, node_id: usize) -> (PolicyNode, bool) {
        let node = &self.nodes[node_id];
        if node.depth == self.horizon {
            let mut leaf = PolicyNode::leaf(0.0);
            leaf.visits = Some(node.visits);
            return (leaf, true);
        }
        let arm_idx = match node.policy_arm {
            Some(idx) if node.visits > 0 && !node.arms[idx].deleted => idx,
            _ => {
                let mut leaf = PolicyNode::leaf(0.0);
                leaf.visits = Some(node.visits);
                return (leaf, false);
            }
        };
        let arm = &node.arms[arm_idx];
        let set = arm.outcome_set.as_ref().expect("policy arm expanded");
        let mut children = std::collections::BTreeMap::new();
        let mut complete = true;
        for i in 0..set.safe_outcomes.len() {
            match arm.children[i] {
                Some(child_id) if self.nodes[child_id].visits > 0 => {
                    let (child, child_complete) = self.extract(child_id);
                    complete &= child_complete;
                    children.insert(i, child);
                }
                _ => {
                    // Horizon outcomes need no action; anything shallower
                    // leaves the policy incomplete.
                    if node.depth + 1 < self.horizon {
                        complete = false;
                    }
                }
            }
        }
        (
            PolicyNode {
                action: Some(arm.id),
                value: arm.q,
                visits: Some(node.visits),
                children,
            },
            complete,
        )
    }

    /// Count bookkeeping invariants: N_h equals the sum of live arm counts
    /// and every expanded arm's count equals its children's total (failure
    /// branch included). Asserted in debug builds after every top-level
    /// sample; evaluated once more at the end of every run for the stats.
    fn count_consistency_holds(&self) -> bool {
        for node in &self.nodes {
            if node.depth == self.horizon {
                // Horizon nodes count their own successful visits directly.
                continue;
            }
            let live_sum: u64 = node
                .arms
                .iter()
                .filter(|a| !a.deleted)
                .map(|a| a.visits)
                .sum();
            if node.visits != live_sum {
                return false;
            }
            for arm in &node.arms {
                // Deleted subtrees are kept in memory but no longer kept in
                // sync; their stale counts are excluded everywhere.
                if arm.deleted || arm.outcome_set.is_none() {
                    continue;
                }
                let child_sum: u64 = arm
                    .children
                    .iter()
                    .flatten()
                    .map(|id| self.nodes[*id].visits)
                    .sum::<u64>()
                    + arm.failure_visits;
                if arm.visits != child_sum {
                    return false;
                }
            }
        }
        true
    }
}

/// Runs the anytime planner: samples until the budget is exhausted or the
/// root exhausts its actions, then cleans up and extracts the greedy policy.
pub fn vulcan<M: CcmdpModel>(
    model: &M,
    f: RewardFunctional,
    budget: SampleBudget,
    exploration: f64,
    default_policy: &mut dyn DefaultPolicy<M>,
    rng: &mut dyn RngCore,
) -> VulcanResult {
    assert!(exploration >= 0.0);
    let mut tree = Tree::new(model, f, exploration);
    let root = tree.alloc(&StateHistory::root(), 1.0, 1.0, 0.0);
    let mut samples = 0u64;
    let mut no_solution = false;
    let deadline = match budget {
        SampleBudget::Samples(_) => None,
        SampleBudget::WallClock(limit) => Some(Instant::now() + limit),
    };
    let mut history = StateHistory::root();
    loop {
        match budget {
            SampleBudget::Samples(limit) if samples >= limit => break,
            SampleBudget::WallClock(_) if Instant::now() >= deadline.unwrap() => break,
            _ => {}
        }
        history.clear();
        if !tree.sample(root, &mut history, default_policy, rng) {
            no_solution = true;
            break;
        }
        samples += 1;
        // Per-sample bookkeeping audit in debug builds, skipped once the
        // tree is large enough to make the O(nodes) walk dominate.
        debug_assert!(tree.nodes.len() > 2048 || tree.count_consistency_holds());
    }
    if !no_solution && tree.nodes[root].visits > 0 {
        let mut history = StateHistory::root();
        if !tree.cleanup(root, &mut history) {
            no_solution = true;
        }
    }
    let stats = VulcanStats {
        samples,
        deletions: tree.deletions,
        max_depth: tree.max_depth,
        nodes_allocated: tree.nodes.len(),
        count_consistent: tree.count_consistency_holds(),
    };
    if no_solution {
        return VulcanResult {
            policy: PolicyTree::empty(),
            root_value: None,
            complete: false,
            no_solution: true,
            stats,
        };
    }
    let (root_node, complete) = tree.extract(root);
    let root_value = tree.nodes[root]
        .policy_arm
        .filter(|_| tree.nodes[root].visits > 0)
        .map(|idx| tree.nodes[root].arms[idx].q);
    VulcanResult {
        complete: complete && root_value.is_some(),
        policy: PolicyTree {
            root: root_node,
            complete: complete && root_value.is_some(),
        },
        root_value,
        no_solution: false,
        stats,
    }
}

/// Post-run audit of a returned policy: every explicit leaf and every
/// missing child (an immediate unsampled outcome of a policy action) must
/// satisfy the local constraint on its partial history — horizon leaves on
/// their full history. Interior nodes carry no obligation of their own; the
/// soundness theorem applies to the covered tree as if its leaves were
/// terminal.
pub fn audit_returned_policy<M: CcmdpModel>(
    model: &M,
    policy: &PolicyTree,
    f: RewardFunctional,
) -> Result<bool, Error> {
    fn walk<M: CcmdpModel>(
        model: &M,
        f: RewardFunctional,
        node: &PolicyNode,
        history: &mut StateHistory,
    ) -> Result<bool, Error> {
        let Some(action) = node.action else {
            return local_constraint_holds(model, history, f);
        };
        let set = model.outcomes(history, action);
        for i in 0..set.safe_outcomes.len() {
            history.push(action, OutcomeRef::Safe(i));
            let ok = match node.children.get(&i) {
                Some(child) => walk(model, f, child, history)?,
                None => local_constraint_holds(model, history, f)?,
            };
            history.pop();
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
    let mut history = StateHistory::root();
    walk(model, f, &policy.root, &mut history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::counterexample::counterexample_model;
    use crate::model::{OutcomeSet, SafeOutcome, TabularCcmdp, TabularNode};
    use crate::risk_bound::RiskBound;

    fn run(
        model: &impl CcmdpModel,
        budget: u64,
        seed: u64,
    ) -> VulcanResult {
        let mut rng = planner_rng(seed, 0);
        vulcan(
            model,
            RewardFunctional::ExpectedStep,
            SampleBudget::Samples(budget),
            std::f64::consts::SQRT_2,
            &mut UniformDefaultPolicy,
            &mut rng,
        )
    }

    #[test]
    fn uct_with_zero_exploration_is_pure_argmax() {
        let arms = [
            (ActionId(0), 1.0, 10),
            (ActionId(1), 3.0, 1),
            (ActionId(2), 2.0, 1),
        ];
        assert_eq!(uct_select(&arms, 12, 0.0).unwrap(), ActionId(1));
    }

    #[test]
    fn uct_prefers_less_visited_on_equal_value() {
        let arms = [(ActionId(0), 1.0, 1), (ActionId(1), 1.0, 5)];
        assert_eq!(uct_select(&arms, 6, 1.0).unwrap(), ActionId(0));
    }

    #[test]
    fn uct_single_arm_and_empty() {
        assert_eq!(
            uct_select(&[(ActionId(3), 0.0, 1)], 1, 1.0).unwrap(),
            ActionId(3)
        );
        assert!(matches!(uct_select(&[], 0, 1.0), Err(Error::NoActions)));
    }

    #[test]
    fn uct_ties_break_to_lowest_index() {
        let arms = [(ActionId(0), 1.0, 2), (ActionId(1), 1.0, 2)];
        assert_eq!(uct_select(&arms, 4, 1.0).unwrap(), ActionId(0));
    }

    #[test]
    fn deterministic_chain_is_recovered_exactly() {
        let mut node = TabularNode::leaf();
        for reward in [2.0, 1.0] {
            node = TabularNode::leaf().with_action(OutcomeSet::certain(reward), vec![node]);
        }
        let model = TabularCcmdp::new(2, 1.0, RiskBound::linear(1.0), node);
        let result = run(&model, 8, 0);
        assert!(result.complete);
        assert!((result.root_value.unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(result.policy.max_depth(), 2);
        assert!(!result.no_solution);
    }

    #[test]
    fn counterexample_converges_to_middle_action() {
        let model = counterexample_model(RiskBound::linear(0.004));
        for seed in 0..10 {
            let result = run(&model, 200, seed);
            assert!(!result.no_solution, "seed {seed}");
            assert_eq!(
                result.policy.action_at(&StateHistory::root()),
                Some(ActionId(1)),
                "seed {seed}"
            );
            assert!(result.complete, "seed {seed}");
        }
    }

    #[test]
    fn infeasible_root_reports_no_solution() {
        let set = OutcomeSet {
            safe_outcomes: vec![SafeOutcome {
                probability: 0.5,
                reward: 1.0,
            }],
            failure_probability: 0.5,
            failure_reward: 0.0,
        };
        let root = TabularNode::leaf().with_action(set, vec![TabularNode::leaf()]);
        let model = TabularCcmdp::new(1, 1.0, RiskBound::constant(0.0), root);
        let result = run(&model, 100, 3);
        assert!(result.no_solution);
        assert_eq!(result.root_value, None);
    }

    #[test]
    fn zero_budget_returns_empty_result() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let result = run(&model, 0, 0);
        assert!(!result.no_solution);
        assert_eq!(result.root_value, None);
        assert!(!result.complete);
        assert_eq!(result.stats.samples, 0);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let a = run(&model, 64, 9);
        let b = run(&model, 64, 9);
        assert!(a.policy.same_decisions(&b.policy));
        assert_eq!(a.root_value, b.root_value);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn failure_draws_count_as_terminal_samples() {
        // One action with a large failure probability under a permissive
        // bound: samples frequently draw the failure branch and must still
        // count. ser of the safe leaf is 0.4/0.6 ≈ 0.67 ≤ 1.
        let set = OutcomeSet {
            safe_outcomes: vec![SafeOutcome {
                probability: 0.6,
                reward: 1.0,
            }],
            failure_probability: 0.4,
            failure_reward: 0.5,
        };
        let root = TabularNode::leaf().with_action(set, vec![TabularNode::leaf()]);
        let model = TabularCcmdp::new(1, 1.0, RiskBound::constant(1.0), root);
        let result = run(&model, 200, 5);
        assert!(!result.no_solution);
        assert_eq!(result.stats.samples, 200);
        // Q̃ should approach 0.6·1 + 0.4·0.5 = 0.8.
        assert!((result.root_value.unwrap() - 0.8).abs() < 0.1);
    }

    /// Model crafted so sampling keeps a high-value action whose rare
    /// outcome is only caught by cleanup: the rare branch violates the
    /// constraint at the horizon and must force a policy change.
    fn rare_violation_model() -> TabularCcmdp {
        // Root action 0: common branch (p ≈ 0.995) pays 10 with risk 0.1;
        // rare branch (p ≈ 0.005) pays -1000, making Δ(f) collapse to 0 on
        // that history while its ser stays positive. Root action 1: certain
        // modest payoff, no risk anywhere.
        let risky = OutcomeSet {
            safe_outcomes: vec![
                SafeOutcome {
                    probability: 0.895,
                    reward: 10.0,
                },
                SafeOutcome {
                    probability: 0.005,
                    reward: -1000.0,
                },
            ],
            failure_probability: 0.1,
            failure_reward: 0.0,
        };
        let root = TabularNode::leaf()
            .with_action(risky, vec![TabularNode::leaf(), TabularNode::leaf()])
            .with_action(OutcomeSet::certain(1.0), vec![TabularNode::leaf()]);
        TabularCcmdp::new(1, 1.0, RiskBound::linear(0.05), root)
    }

    #[test]
    fn cleanup_deletes_action_with_unsampled_violating_outcome() {
        let model = rare_violation_model();
        // Realized rewards drive the constraint so the rare branch differs
        // from the common one.
        for seed in 0..20 {
            let mut rng = planner_rng(seed, 0);
            let result = vulcan(
                &model,
                RewardFunctional::Realized,
                SampleBudget::Samples(30),
                std::f64::consts::SQRT_2,
                &mut UniformDefaultPolicy,
                &mut rng,
            );
            if result.no_solution {
                continue; // the rare branch was drawn and both actions died
            }
            // Whatever sampling saw, the returned policy must never keep
            // action 0 with the violating branch unexplored.
            assert!(audit_returned_policy(&model, &result.policy, RewardFunctional::Realized)
                .unwrap());
            assert_eq!(
                result.policy.action_at(&StateHistory::root()),
                Some(ActionId(1)),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn wall_clock_budget_terminates() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let mut rng = planner_rng(0, 0);
        let result = vulcan(
            &model,
            RewardFunctional::ExpectedStep,
            SampleBudget::WallClock(Duration::from_millis(20)),
            std::f64::consts::SQRT_2,
            &mut UniformDefaultPolicy,
            &mut rng,
        );
        assert!(result.stats.samples > 0);
        assert!(!result.no_solution);
    }
}
