//! Deterministic history-dependent policies represented as trees.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ActionId, OutcomeRef, StateHistory};

/// A deterministic history-dependent policy: a tree assigning an action to
/// each covered safe history, with children keyed by safe outcome index.
///
/// A node with `action == None` is a leaf of the policy — either a horizon
/// node or an uncovered frontier node of an incomplete policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTree {
    pub root: PolicyNode,
    /// True when every reachable safe history strictly before the horizon
    /// has an assigned action with all safe outcomes covered.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNode {
    pub action: Option<ActionId>,
    /// Expected value annotation: exact for search-based planners, the
    /// sample estimate for the anytime planner.
    pub value: f64,
    /// Visit count annotation where the planner tracks one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visits: Option<u64>,
    pub children: BTreeMap<usize, PolicyNode>,
}

impl PolicyNode {
    pub fn leaf(value: f64) -> Self {
        Self {
            action: None,
            value,
            visits: None,
            children: BTreeMap::new(),
        }
    }
}

impl PolicyTree {
    /// An empty policy with no action at the root.
    pub fn empty() -> Self {
        Self {
            root: PolicyNode::leaf(0.0),
            complete: false,
        }
    }

    /// Looks up the node covering `history`, if the policy reaches it.
    /// Failure steps never have policy nodes.
    pub fn node_at(&self, history: &StateHistory) -> Option<&PolicyNode> {
        let mut node = &self.root;
        for step in history.steps() {
            if node.action != Some(step.action) {
                return None;
            }
            match step.outcome {
                OutcomeRef::Safe(i) => node = node.children.get(&i)?,
                OutcomeRef::Failure => return None,
            }
        }
        Some(node)
    }

    /// The action assigned at `history`, if any.
    pub fn action_at(&self, history: &StateHistory) -> Option<ActionId> {
        self.node_at(history).and_then(|n| n.action)
    }

    /// Structural equality of the decisions only, ignoring value and visit
    /// annotations. Used for exact-policy-match rates.
    pub fn same_decisions(&self, other: &PolicyTree) -> bool {
        fn eq(a: &PolicyNode, b: &PolicyNode) -> bool {
            if a.action != b.action || a.children.len() != b.children.len() {
                return false;
            }
            a.children
                .iter()
                .all(|(k, ca)| b.children.get(k).is_some_and(|cb| eq(ca, cb)))
        }
        eq(&self.root, &other.root)
    }

    /// Depth of the deepest assigned action.
    pub fn max_depth(&self) -> usize {
        fn depth(node: &PolicyNode) -> usize {
            if node.action.is_none() {
                return 0;
            }
            1 + node.children.values().map(depth).max().unwrap_or(0)
        }
        depth(&self.root)
    }

    /// Number of nodes in the tree, leaves included.
    pub fn node_count(&self) -> usize {
        fn count(node: &PolicyNode) -> usize {
            1 + node.children.values().map(count).sum::<usize>()
        }
        count(&self.root)
    }

    /// Visits every node together with the history it covers.
    pub fn visit_nodes(&self, mut f: impl FnMut(&StateHistory, &PolicyNode)) {
        fn walk(
            node: &PolicyNode,
            history: &mut StateHistory,
            f: &mut impl FnMut(&StateHistory, &PolicyNode),
        ) {
            f(history, node);
            if let Some(action) = node.action {
                for (&i, child) in &node.children {
                    history.push(action, OutcomeRef::Safe(i));
                    walk(child, history, f);
                    history.pop();
                }
            }
        }
        let mut history = StateHistory::root();
        walk(&self.root, &mut history, &mut f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_policy() -> PolicyTree {
        let leaf = PolicyNode::leaf(0.0);
        let mid = PolicyNode {
            action: Some(ActionId(1)),
            value: 1.0,
            visits: None,
            children: BTreeMap::from([(0, leaf)]),
        };
        PolicyTree {
            root: PolicyNode {
                action: Some(ActionId(0)),
                value: 2.0,
                visits: None,
                children: BTreeMap::from([(0, mid)]),
            },
            complete: true,
        }
    }

    #[test]
    fn action_lookup_follows_path() {
        let policy = chain_policy();
        assert_eq!(policy.action_at(&StateHistory::root()), Some(ActionId(0)));
        let h1 = StateHistory::root().child(ActionId(0), OutcomeRef::Safe(0));
        assert_eq!(policy.action_at(&h1), Some(ActionId(1)));
        let off = StateHistory::root().child(ActionId(1), OutcomeRef::Safe(0));
        assert_eq!(policy.action_at(&off), None);
    }

    #[test]
    fn same_decisions_ignores_annotations() {
        let a = chain_policy();
        let mut b = chain_policy();
        b.root.value = -7.0;
        b.root.visits = Some(3);
        assert!(a.same_decisions(&b));
        b.root.action = Some(ActionId(2));
        assert!(!a.same_decisions(&b));
    }
}
