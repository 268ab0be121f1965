//! The hypothesis tree: partial trajectories rooted at the current
//! anchor, with per-node classification tags.
//!
//! A node is *excluded* when it or any ancestor is tagged implausible or
//! pruned; excluded subtrees never contribute hypotheses and are never
//! expanded further, but stay in the tree for reporting.

use serde::{Deserialize, Serialize};

use crate::state::{AgentState, Trajectory};

pub type NodeId = usize;

/// Classification of a tree node.
///
/// * `Proposed`  — emitted by the generator, passed all checks.
/// * `Feasible`  — proposed node confirmed on a full-depth feasible path.
/// * `Implausible` — rejected by the world model; kept childless.
/// * `EdgeCase`  — grafted from a counterfactual the generator missed.
/// * `Pruned`    — contradicted by a later observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTag {
    Proposed,
    Feasible,
    Implausible,
    EdgeCase,
    Pruned,
}

impl NodeTag {
    /// Tags that may lie on a hypothesis path.
    pub fn is_active(self) -> bool {
        matches!(self, NodeTag::Proposed | NodeTag::Feasible | NodeTag::EdgeCase)
    }

    /// Tags recording generator-origin nodes (as opposed to critic grafts).
    pub fn is_generator_origin(self) -> bool {
        matches!(self, NodeTag::Proposed | NodeTag::Feasible)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub state: AgentState,
    pub depth: usize,
    pub tag: NodeTag,
    pub children: Vec<NodeId>,
}

/// Rooted tree of partial trajectories. The root holds the anchor state
/// at `start_time` and is always active.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryTree {
    nodes: Vec<TreeNode>,
    start_time: u32,
}

impl TrajectoryTree {
    pub fn new(anchor: AgentState, start_time: u32) -> TrajectoryTree {
        TrajectoryTree {
            nodes: vec![TreeNode {
                id: 0,
                parent: None,
                state: anchor,
                depth: 0,
                tag: NodeTag::Feasible,
                children: Vec::new(),
            }],
            start_time,
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn start_time(&self) -> u32 {
        self.start_time
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    pub fn set_tag(&mut self, id: NodeId, tag: NodeTag) {
        self.nodes[id].tag = tag;
    }

    pub fn add_child(&mut self, parent: NodeId, state: AgentState, tag: NodeTag) -> NodeId {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(TreeNode {
            id,
            parent: Some(parent),
            state,
            depth,
            tag,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// The child of `parent` holding exactly `state`, if present.
    pub fn child_by_state(&self, parent: NodeId, state: &AgentState) -> Option<NodeId> {
        self.nodes[parent]
            .children
            .iter()
            .copied()
            .find(|&c| &self.nodes[c].state == state)
    }

    /// True when the node and all its ancestors carry active tags.
    pub fn is_active(&self, id: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(i) = cur {
            let n = &self.nodes[i];
            if i != 0 && !n.tag.is_active() {
                return false;
            }
            cur = n.parent;
        }
        true
    }

    /// Ids of active nodes at exactly `depth`, in insertion order.
    pub fn active_at_depth(&self, depth: usize) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.depth == depth && self.is_active(n.id))
            .map(|n| n.id)
            .collect()
    }

    /// Root-to-node state sequence.
    pub fn path_states(&self, id: NodeId) -> Vec<AgentState> {
        let mut rev = Vec::new();
        let mut cur = Some(id);
        while let Some(i) = cur {
            rev.push(self.nodes[i].state);
            cur = self.nodes[i].parent;
        }
        rev.reverse();
        rev
    }

    pub fn path_trajectory(&self, id: NodeId) -> Trajectory {
        Trajectory::new(self.start_time, self.path_states(id))
    }

    /// All active root-to-node paths of exactly `depth` steps.
    pub fn paths_at_depth(&self, depth: usize) -> Vec<Trajectory> {
        self.active_at_depth(depth)
            .into_iter()
            .map(|id| self.path_trajectory(id))
            .collect()
    }

    /// Depth-`depth` paths consisting solely of generator-origin nodes —
    /// the hypotheses the generator produced on its own.
    pub fn generator_paths_at_depth(&self, depth: usize) -> Vec<Trajectory> {
        self.nodes
            .iter()
            .filter(|n| n.depth == depth && self.path_is_generator_origin(n.id))
            .map(|n| self.path_trajectory(n.id))
            .collect()
    }

    fn path_is_generator_origin(&self, id: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(i) = cur {
            let n = &self.nodes[i];
            if i != 0 && !n.tag.is_generator_origin() {
                return false;
            }
            cur = n.parent;
        }
        true
    }

    /// Walk a state sequence from the root, returning the id of the
    /// deepest node matched and how many states were consumed.
    pub fn descend(&self, states: &[AgentState]) -> (NodeId, usize) {
        let mut cur = 0;
        let mut consumed = 1; // root is states[0]
        for s in &states[1..] {
            match self.child_by_state(cur, s) {
                Some(c) => {
                    cur = c;
                    consumed += 1;
                }
                None => break,
            }
        }
        (cur, consumed)
    }

    /// Structural invariants: one root, parent/child agreement, child
    /// depth = parent depth + 1, depth never beyond `max_depth`.
    pub fn validate(&self, max_depth: usize) -> Result<(), String> {
        if self.nodes.is_empty() || self.nodes[0].parent.is_some() {
            return Err("tree must have a parentless root at index 0".into());
        }
        for n in &self.nodes {
            if n.id != 0 {
                let p = n
                    .parent
                    .ok_or_else(|| format!("node {} has no parent", n.id))?;
                if self.nodes[p].depth + 1 != n.depth {
                    return Err(format!("node {} depth mismatch", n.id));
                }
                if !self.nodes[p].children.contains(&n.id) {
                    return Err(format!("node {} missing from parent's children", n.id));
                }
            }
            if n.depth > max_depth {
                return Err(format!("node {} exceeds depth bound {}", n.id, max_depth));
            }
            for &c in &n.children {
                if self.nodes[c].parent != Some(n.id) {
                    return Err(format!("child {} does not point back to {}", c, n.id));
                }
            }
        }
        Ok(())
    }
}
