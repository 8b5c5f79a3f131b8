//! Exact ground truth for desk-scale instances: enumeration of deterministic
//! history-dependent policies, exact policy evaluation, the optimal
//! risk-bounded policy, and a penalty-method sweep.
//!
//! Enumeration is lazy: policies are decoded from a mixed-radix index in
//! depth-first order with actions in model order, so iteration is
//! deterministic and needs no per-policy storage. The optimal policy is not
//! found by scanning all policies — the number of deterministic policies
//! grows doubly exponentially — but by an exact dynamic program over Pareto
//! frontiers of achievable (expected reward, execution risk) pairs per
//! subtree. Both the objective and the risk aggregate linearly with positive
//! coefficients, and the risk bound is nondecreasing in reward, so dominated
//! subtree choices can never enter an optimal feasible policy; the root
//! frontier therefore contains the exact constrained optimum. Equivalence
//! with brute-force enumeration is asserted by tests on small instances.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{CcmdpModel, OutcomeRef, StateHistory};
use crate::policy::{PolicyNode, PolicyTree};
use crate::risk::{execution_risk_exact, CONSTRAINT_SLACK};
use crate::{par, Error};

/// Exact evaluation of a complete policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    /// E[g]: expected lifetime reward, failure-branch rewards included.
    pub expected_reward: f64,
    /// er: probability of entering the failure branch before the horizon.
    pub execution_risk: f64,
    /// Whether execution_risk ≤ Δ(expected_reward) within slack.
    pub feasible: bool,
}

/// Outcome of [`optimal_policy`].
#[derive(Debug, Clone)]
pub enum OracleSolution {
    Optimal {
        policy: PolicyTree,
        evaluation: PolicyEvaluation,
    },
    /// No deterministic policy satisfies the risk bound.
    Infeasible,
}

impl OracleSolution {
    pub fn optimal(&self) -> Option<(&PolicyTree, &PolicyEvaluation)> {
        match self {
            OracleSolution::Optimal { policy, evaluation } => Some((policy, evaluation)),
            OracleSolution::Infeasible => None,
        }
    }
}

/// Evaluates a complete policy exactly: expected lifetime reward by
/// exhaustive expectation over all completions (failure branches and their
/// rewards included) and execution risk by the standard recursion.
pub fn evaluate_policy<M: CcmdpModel>(
    model: &M,
    policy: &PolicyTree,
) -> Result<PolicyEvaluation, Error> {
    fn expected_reward<M: CcmdpModel>(
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
        let mut total = set.failure_probability * set.failure_reward;
        for (i, outcome) in set.safe_outcomes.iter().enumerate() {
            history.push(action, OutcomeRef::Safe(i));
            let below = expected_reward(model, policy, history)?;
            history.pop();
            total += outcome.probability * (outcome.reward + model.discount() * below);
        }
        Ok(total)
    }

    let mut h = StateHistory::root();
    let expected = expected_reward(model, policy, &mut h)?;
    let risk = execution_risk_exact(model, policy, &StateHistory::root())?;
    Ok(PolicyEvaluation {
        expected_reward: expected,
        execution_risk: risk,
        feasible: risk <= model.risk_bound().eval(expected) + CONSTRAINT_SLACK,
    })
}

// ---------------------------------------------------------------------------
// Lazy policy enumeration.
// ---------------------------------------------------------------------------

/// Counts the complete deterministic history-dependent policies of `model`,
/// saturating at `u128::MAX`. Dead ends contribute zero (no complete policy
/// passes through them).
pub fn count_policies<M: CcmdpModel>(model: &M) -> u128 {
    fn count<M: CcmdpModel>(model: &M, history: &mut StateHistory) -> u128 {
        if history.len() == model.horizon() {
            return 1;
        }
        let mut total: u128 = 0;
        for action in model.actions(history) {
            let set = model.outcomes(history, action);
            let mut product: u128 = 1;
            for i in 0..set.safe_outcomes.len() {
                history.push(action, OutcomeRef::Safe(i));
                product = product.saturating_mul(count(model, history));
                history.pop();
                if product == 0 {
                    break;
                }
            }
            total = total.saturating_add(product);
        }
        total
    }
    count(model, &mut StateHistory::root())
}

/// Lazily yields every complete deterministic history-dependent policy
/// exactly once, in depth-first order with actions in model order. Errs with
/// [`Error::BudgetExceeded`] when the policy count is above `budget`.
pub fn enumerate_policies<M: CcmdpModel>(
    model: &M,
    budget: u128,
) -> Result<impl Iterator<Item = PolicyTree> + '_, Error> {
    let total = count_policies(model);
    if total > budget {
        return Err(Error::BudgetExceeded {
            context: "enumerate_policies",
            budget: total,
        });
    }
    Ok((0..total).map(move |k| nth_policy(model, k)))
}

/// Decodes policy number `k` (0-based, in enumeration order) directly from
/// the mixed-radix structure of the policy space.
fn nth_policy<M: CcmdpModel>(model: &M, k: u128) -> PolicyTree {
    fn decode<M: CcmdpModel>(model: &M, history: &mut StateHistory, mut k: u128) -> PolicyNode {
        if history.len() == model.horizon() {
            return PolicyNode::leaf(0.0);
        }
        for action in model.actions(history) {
            let set = model.outcomes(history, action);
            let mut child_counts = Vec::with_capacity(set.safe_outcomes.len());
            let mut product: u128 = 1;
            for i in 0..set.safe_outcomes.len() {
                history.push(action, OutcomeRef::Safe(i));
                let c = subtree_count(model, history);
                history.pop();
                product = product.saturating_mul(c);
                child_counts.push(c);
            }
            if k >= product {
                k -= product;
                continue;
            }
            // Row-major decode: the first safe outcome is most significant.
            let mut children = BTreeMap::new();
            let mut residual = k;
            let mut stride = product;
            for (i, &c) in child_counts.iter().enumerate() {
                stride /= c;
                let idx = residual / stride;
                residual %= stride;
                history.push(action, OutcomeRef::Safe(i));
                children.insert(i, decode(model, history, idx));
                history.pop();
            }
            return PolicyNode {
                action: Some(action),
                value: 0.0,
                visits: None,
                children,
            };
        }
        unreachable!("policy index out of range");
    }

    fn subtree_count<M: CcmdpModel>(model: &M, history: &mut StateHistory) -> u128 {
        if history.len() == model.horizon() {
            return 1;
        }
        let mut total: u128 = 0;
        for action in model.actions(history) {
            let set = model.outcomes(history, action);
            let mut product: u128 = 1;
            for i in 0..set.safe_outcomes.len() {
                history.push(action, OutcomeRef::Safe(i));
                product = product.saturating_mul(subtree_count(model, history));
                history.pop();
            }
            total = total.saturating_add(product);
        }
        total
    }

    let root = decode(model, &mut StateHistory::root(), k);
    PolicyTree {
        root,
        complete: true,
    }
}

// ---------------------------------------------------------------------------
// Exact constrained optimum via Pareto-frontier dynamic programming.
// ---------------------------------------------------------------------------

/// One achievable (reward, risk) pair of a subtree, with enough provenance
/// to rebuild the policy that achieves it.
#[derive(Debug, Clone)]
struct FrontierPoint {
    reward: f64,
    risk: f64,
    action_pos: u32,
    /// Chosen frontier index per safe outcome of the action.
    child_choices: Vec<u32>,
}

struct FrontierNode {
    at_horizon: bool,
    /// Per action in model order: (action id, child node per safe outcome).
    actions: Vec<(crate::model::ActionId, Vec<usize>)>,
    /// Pareto frontier sorted by ascending reward (and ascending risk).
    frontier: Vec<FrontierPoint>,
}

/// The reward/risk frontier of a model, rooted at the initial state.
///
/// The frontier is independent of the risk bounding function, so one
/// computation can serve a whole sweep of bounds; see
/// [`optimal_from_frontier`].
pub struct PolicyFrontier {
    nodes: Vec<FrontierNode>,
    root: usize,
}

impl PolicyFrontier {
    /// The root's Pareto-optimal (expected reward, execution risk) pairs in
    /// ascending reward order.
    pub fn root_points(&self) -> Vec<(f64, f64)> {
        self.nodes[self.root]
            .frontier
            .iter()
            .map(|p| (p.reward, p.risk))
            .collect()
    }
}

/// Keeps only Pareto-optimal points (maximal reward, minimal risk). Stable:
/// among exactly tied points the earliest generated survives, which makes
/// the downstream argmax deterministic.
fn prune(mut points: Vec<FrontierPoint>) -> Vec<FrontierPoint> {
    points.sort_by(|a, b| {
        b.reward
            .partial_cmp(&a.reward)
            .expect("non-finite reward in frontier")
            .then(a.risk.partial_cmp(&b.risk).expect("non-finite risk"))
    });
    let mut kept: Vec<FrontierPoint> = Vec::new();
    let mut best_risk = f64::INFINITY;
    for p in points {
        if p.risk < best_risk {
            best_risk = p.risk;
            kept.push(p);
        }
    }
    kept.reverse();
    kept
}

struct FrontierBuilder<'a, M: CcmdpModel> {
    model: &'a M,
    gamma: f64,
    horizon: usize,
    nodes: Vec<FrontierNode>,
    memo: HashMap<(usize, u64), usize>,
    work: u64,
    budget: u64,
}

impl<M: CcmdpModel> FrontierBuilder<'_, M> {
    fn build(&mut self, history: &mut StateHistory) -> Result<usize, Error> {
        if history.len() == self.horizon {
            // All horizon nodes share one terminal entry.
            if self.nodes.is_empty() || !self.nodes[0].at_horizon {
                self.nodes.insert(
                    0,
                    FrontierNode {
                        at_horizon: true,
                        actions: Vec::new(),
                        frontier: vec![FrontierPoint {
                            reward: 0.0,
                            risk: 0.0,
                            action_pos: 0,
                            child_choices: Vec::new(),
                        }],
                    },
                );
                // Inserting at 0 shifts ids; only valid when it is the first
                // node ever created, which build order guarantees (the
                // deepest recursion completes first).
                debug_assert_eq!(self.nodes.len(), 1);
            }
            return Ok(0);
        }
        let key = self.model.state_key(history).map(|k| (history.len(), k));
        if let Some(k) = key {
            if let Some(&id) = self.memo.get(&k) {
                return Ok(id);
            }
        }
        let mut actions = Vec::new();
        let mut union: Vec<FrontierPoint> = Vec::new();
        for (pos, action) in self.model.actions(history).into_iter().enumerate() {
            let set = self.model.outcomes(history, action);
            let mut child_ids = Vec::with_capacity(set.safe_outcomes.len());
            // Partial combinations across this action's safe outcomes:
            // reward accumulates Σ pᵢγ·gᵢ and risk Σ pᵢ·eᵢ before the
            // immediate terms are added.
            let mut partial = vec![FrontierPoint {
                reward: 0.0,
                risk: 0.0,
                action_pos: pos as u32,
                child_choices: Vec::new(),
            }];
            let mut viable = true;
            for (i, outcome) in set.safe_outcomes.iter().enumerate() {
                history.push(action, OutcomeRef::Safe(i));
                let child_id = self.build(history)?;
                history.pop();
                child_ids.push(child_id);
                let child_frontier = &self.nodes[child_id].frontier;
                if child_frontier.is_empty() {
                    viable = false;
                    break;
                }
                self.work += (partial.len() * child_frontier.len()) as u64;
                if self.work > self.budget {
                    return Err(Error::BudgetExceeded {
                        context: "optimal_policy",
                        budget: self.budget as u128,
                    });
                }
                let mut next = Vec::with_capacity(partial.len() * child_frontier.len());
                for base in &partial {
                    for (j, cp) in child_frontier.iter().enumerate() {
                        let mut choices = base.child_choices.clone();
                        choices.push(j as u32);
                        next.push(FrontierPoint {
                            reward: base.reward
                                + outcome.probability * self.gamma * cp.reward,
                            risk: base.risk + outcome.probability * cp.risk,
                            action_pos: pos as u32,
                            child_choices: choices,
                        });
                    }
                }
                partial = prune(next);
            }
            if !viable {
                actions.push((action, child_ids));
                continue;
            }
            let immediate = set.expected_reward();
            for mut p in partial {
                p.reward += immediate;
                p.risk += set.failure_probability;
                union.push(p);
            }
            actions.push((action, child_ids));
        }
        let node = FrontierNode {
            at_horizon: false,
            actions,
            frontier: prune(union),
        };
        let id = self.nodes.len();
        self.nodes.push(node);
        if let Some(k) = key {
            self.memo.insert(k, id);
        }
        Ok(id)
    }
}

/// Computes the full reward/risk frontier of `model`. `work_budget` bounds
/// the number of pairwise frontier combinations.
pub fn policy_frontier<M: CcmdpModel>(
    model: &M,
    work_budget: u64,
) -> Result<PolicyFrontier, Error> {
    let mut builder = FrontierBuilder {
        model,
        gamma: model.discount(),
        horizon: model.horizon(),
        nodes: Vec::new(),
        memo: HashMap::new(),
        work: 0,
        budget: work_budget,
    };
    let root = builder.build(&mut StateHistory::root())?;
    Ok(PolicyFrontier {
        nodes: builder.nodes,
        root,
    })
}

fn rebuild_policy(frontier: &PolicyFrontier, node_id: usize, point_idx: usize) -> PolicyNode {
    let node = &frontier.nodes[node_id];
    if node.at_horizon {
        return PolicyNode::leaf(0.0);
    }
    let point = &node.frontier[point_idx];
    let (action, child_ids) = &node.actions[point.action_pos as usize];
    let children = child_ids
        .iter()
        .zip(&point.child_choices)
        .enumerate()
        .map(|(i, (&cid, &choice))| (i, rebuild_policy(frontier, cid, choice as usize)))
        .collect();
    PolicyNode {
        action: Some(*action),
        value: point.reward,
        visits: None,
        children,
    }
}

/// Selects the optimal feasible policy from a precomputed frontier under the
/// given risk bound: the maximal-reward root point with risk ≤ Δ(reward).
pub fn optimal_from_frontier(
    frontier: &PolicyFrontier,
    bound: &crate::risk_bound::RiskBound,
) -> OracleSolution {
    let root = &frontier.nodes[frontier.root];
    for (idx, point) in root.frontier.iter().enumerate().rev() {
        if point.risk <= bound.eval(point.reward) + CONSTRAINT_SLACK {
            let policy = PolicyTree {
                root: rebuild_policy(frontier, frontier.root, idx),
                complete: true,
            };
            return OracleSolution::Optimal {
                policy,
                evaluation: PolicyEvaluation {
                    expected_reward: point.reward,
                    execution_risk: point.risk,
                    feasible: true,
                },
            };
        }
    }
    OracleSolution::Infeasible
}

/// Solves the chance-constrained program exactly: argmax E[g] over complete
/// deterministic policies subject to er ≤ Δ(E[g]).
pub fn optimal_policy<M: CcmdpModel>(model: &M, work_budget: u64) -> Result<OracleSolution, Error> {
    let frontier = policy_frontier(model, work_budget)?;
    match optimal_from_frontier(&frontier, model.risk_bound()) {
        OracleSolution::Optimal { policy, .. } => {
            // Re-derive the evaluation through the independent recursions so
            // the reported numbers never drift from evaluate_policy.
            let evaluation = evaluate_policy(model, &policy)?;
            Ok(OracleSolution::Optimal { policy, evaluation })
        }
        OracleSolution::Infeasible => Ok(OracleSolution::Infeasible),
    }
}

/// Reference comparator: the best expected reward over complete policies
/// whose safe leaf histories all satisfy the local constraint, found by
/// brute-force enumeration. Small instances only.
pub fn best_value_under_local_constraint<M: CcmdpModel>(
    model: &M,
    f: crate::reward::RewardFunctional,
    budget: u128,
) -> Result<Option<f64>, Error> {
    let mut best: Option<f64> = None;
    for policy in enumerate_policies(model, budget)? {
        let mut all_leaves_ok = true;
        let mut leaves: Vec<StateHistory> = Vec::new();
        policy.visit_nodes(|history, node| {
            if node.action.is_none() {
                leaves.push(history.clone());
            }
        });
        for leaf in leaves {
            if !crate::risk::local_constraint_holds(model, &leaf, f)? {
                all_leaves_ok = false;
                break;
            }
        }
        if !all_leaves_ok {
            continue;
        }
        let eval = evaluate_policy(model, &policy)?;
        if best.is_none_or(|b| eval.expected_reward > b) {
            best = Some(eval.expected_reward);
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Penalty-method sweep.
// ---------------------------------------------------------------------------

/// For each penalty coefficient M, solves the unconstrained MDP whose
/// per-transition rewards are reduced by M times the action's immediate
/// risk, and returns the optimal penalized policy (ties to the lowest
/// action index).
pub fn penalty_sweep<M: CcmdpModel>(
    model: &M,
    m_values: &[f64],
    node_budget: u64,
) -> Result<Vec<(f64, PolicyTree)>, Error> {
    let results = par::map_indexed(m_values.len(), |i| {
        penalty_solve(model, m_values[i], node_budget).map(|p| (m_values[i], p))
    });
    results.into_iter().collect()
}

fn penalty_solve<M: CcmdpModel>(
    model: &M,
    m: f64,
    node_budget: u64,
) -> Result<PolicyTree, Error> {
    fn recurse<M: CcmdpModel>(
        model: &M,
        m: f64,
        history: &mut StateHistory,
        visited: &mut u64,
        budget: u64,
    ) -> Result<Option<(f64, PolicyNode)>, Error> {
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded {
                context: "penalty_sweep",
                budget: budget as u128,
            });
        }
        if history.len() == model.horizon() {
            return Ok(Some((0.0, PolicyNode::leaf(0.0))));
        }
        let mut best: Option<(f64, PolicyNode)> = None;
        for action in model.actions(history) {
            let set = model.outcomes(history, action);
            // Subtracting M·r from every branch reward shifts the expected
            // immediate reward by exactly M·r.
            let mut q = set.expected_reward() - m * set.failure_probability;
            let mut children = BTreeMap::new();
            let mut viable = true;
            for (i, outcome) in set.safe_outcomes.iter().enumerate() {
                history.push(action, OutcomeRef::Safe(i));
                let below = recurse(model, m, history, visited, budget)?;
                history.pop();
                match below {
                    Some((value, node)) => {
                        q += outcome.probability * model.discount() * value;
                        children.insert(i, node);
                    }
                    None => {
                        viable = false;
                        break;
                    }
                }
            }
            if !viable {
                continue;
            }
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

    let mut visited = 0;
    let root = recurse(model, m, &mut StateHistory::root(), &mut visited, node_budget)?;
    Ok(match root {
        Some((_, node)) => PolicyTree {
            root: node,
            complete: true,
        },
        None => PolicyTree::empty(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::counterexample::counterexample_model;
    use crate::model::{ActionId, OutcomeSet, SafeOutcome, TabularCcmdp, TabularNode};
    use crate::reward::RewardFunctional;
    use crate::risk_bound::RiskBound;

    fn two_by_one_model() -> TabularCcmdp {
        // Two actions with one certain outcome each, horizon 2.
        fn node(depth: usize) -> TabularNode {
            if depth == 0 {
                return TabularNode::leaf();
            }
            TabularNode::leaf()
                .with_action(OutcomeSet::certain(1.0), vec![node(depth - 1)])
                .with_action(OutcomeSet::certain(0.5), vec![node(depth - 1)])
        }
        TabularCcmdp::new(2, 1.0, RiskBound::linear(1.0), node(2))
    }

    #[test]
    fn counterexample_has_three_policies() {
        let model = counterexample_model(RiskBound::linear(0.004));
        assert_eq!(count_policies(&model), 3);
        let policies: Vec<_> = enumerate_policies(&model, 10).unwrap().collect();
        assert_eq!(policies.len(), 3);
        let roots: Vec<_> = policies
            .iter()
            .map(|p| p.action_at(&StateHistory::root()).unwrap())
            .collect();
        assert_eq!(roots, vec![ActionId(0), ActionId(1), ActionId(2)]);
    }

    #[test]
    fn two_by_one_model_has_four_policies() {
        let model = two_by_one_model();
        assert_eq!(count_policies(&model), 4);
        let policies: Vec<_> = enumerate_policies(&model, 10).unwrap().collect();
        assert_eq!(policies.len(), 4);
        // All four must be pairwise distinct.
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!(!policies[i].same_decisions(&policies[j]));
            }
        }
    }

    #[test]
    fn zero_horizon_has_one_empty_policy() {
        let model = TabularCcmdp::new(0, 1.0, RiskBound::linear(1.0), TabularNode::leaf());
        assert_eq!(count_policies(&model), 1);
        let policies: Vec<_> = enumerate_policies(&model, 10).unwrap().collect();
        assert_eq!(policies.len(), 1);
        assert_eq!(policies[0].root.action, None);
    }

    #[test]
    fn enumeration_budget_reports_count() {
        let model = two_by_one_model();
        let outcome = enumerate_policies(&model, 3).map(|_| ());
        match outcome {
            Err(Error::BudgetExceeded { budget, .. }) => assert_eq!(budget, 4),
            other => panic!("expected budget error, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn evaluate_policy_on_counterexample() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let policies: Vec<_> = enumerate_policies(&model, 10).unwrap().collect();

        let risky = evaluate_policy(&model, &policies[2]).unwrap();
        assert!((risky.execution_risk - 0.05).abs() < 1e-15);
        assert!((risky.expected_reward - 10.0).abs() < 1e-12);
        assert!(!risky.feasible); // 0.05 > 0.004·10

        let middle = evaluate_policy(&model, &policies[1]).unwrap();
        assert!((middle.expected_reward - 6.0).abs() < 1e-12);
        assert!((middle.execution_risk - 0.02).abs() < 1e-15);
        assert!(middle.feasible); // 0.02 ≤ 0.024
    }

    #[test]
    fn evaluate_zero_risk_chain() {
        let mut node = TabularNode::leaf();
        for _ in 0..2 {
            node = TabularNode::leaf().with_action(OutcomeSet::certain(1.0), vec![node]);
        }
        let model = TabularCcmdp::new(2, 1.0, RiskBound::linear(1.0), node);
        let policy = enumerate_policies(&model, 10).unwrap().next().unwrap();
        let eval = evaluate_policy(&model, &policy).unwrap();
        assert_eq!(eval.expected_reward, 2.0);
        assert_eq!(eval.execution_risk, 0.0);
        assert!(eval.feasible);
    }

    #[test]
    fn optimal_policy_on_counterexample() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let solution = optimal_policy(&model, 100_000).unwrap();
        let (policy, eval) = solution.optimal().expect("feasible instance");
        assert_eq!(policy.action_at(&StateHistory::root()), Some(ActionId(1)));
        assert!((eval.expected_reward - 6.0).abs() < 1e-12);
        assert!(eval.feasible);
    }

    #[test]
    fn optimal_policy_matches_enumeration_argmax() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let mut best: Option<f64> = None;
        for policy in enumerate_policies(&model, 100).unwrap() {
            let eval = evaluate_policy(&model, &policy).unwrap();
            if eval.feasible && best.is_none_or(|b| eval.expected_reward > b) {
                best = Some(eval.expected_reward);
            }
        }
        let solution = optimal_policy(&model, 100_000).unwrap();
        let (_, eval) = solution.optimal().unwrap();
        assert!((eval.expected_reward - best.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn infeasible_when_bound_is_zero_and_all_actions_risky() {
        let set = OutcomeSet {
            safe_outcomes: vec![SafeOutcome {
                probability: 0.9,
                reward: 1.0,
            }],
            failure_probability: 0.1,
            failure_reward: 0.0,
        };
        let root = TabularNode::leaf().with_action(set, vec![TabularNode::leaf()]);
        let model = TabularCcmdp::new(1, 1.0, RiskBound::constant(0.0), root);
        assert!(matches!(
            optimal_policy(&model, 10_000).unwrap(),
            OracleSolution::Infeasible
        ));
    }

    #[test]
    fn penalty_small_coefficient_prefers_risky_action() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let result = penalty_sweep(&model, &[100.0], 10_000).unwrap();
        // 10 − 5 > 6 − 2 > 5 − 1
        assert_eq!(result[0].1.action_at(&StateHistory::root()), Some(ActionId(2)));
    }

    #[test]
    fn penalty_large_coefficient_prefers_safe_action() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let result = penalty_sweep(&model, &[200.0], 10_000).unwrap();
        // 5 − 2 > 6 − 4 > 10 − 10
        assert_eq!(result[0].1.action_at(&StateHistory::root()), Some(ActionId(0)));
    }

    #[test]
    fn penalty_sweep_never_selects_middle_action() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let ms: Vec<f64> = (0..=300).map(f64::from).collect();
        let results = penalty_sweep(&model, &ms, 1_000_000).unwrap();
        for (m, policy) in &results {
            let chosen = policy.action_at(&StateHistory::root()).unwrap();
            assert_ne!(chosen, ActionId(1), "penalty M={m} selected the middle action");
            if *m < 125.0 {
                assert_eq!(chosen, ActionId(2), "M={m}");
            } else if *m > 125.0 {
                assert_eq!(chosen, ActionId(0), "M={m}");
            }
        }
    }

    #[test]
    fn best_value_under_local_constraint_matches_forward_search() {
        let model = counterexample_model(RiskBound::linear(0.004));
        let best =
            best_value_under_local_constraint(&model, RewardFunctional::ExpectedStep, 100)
                .unwrap()
                .unwrap();
        let fs = crate::forward_search::vulcanfs(&model, RewardFunctional::ExpectedStep, 1_000)
            .unwrap();
        assert!((best - fs.root_value.unwrap()).abs() < 1e-12);
    }
}
