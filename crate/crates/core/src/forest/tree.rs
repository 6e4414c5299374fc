use alloc::vec::Vec;

use crate::error::{Error, Result};

/// What a split compares: a covariate column or the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Feature(usize),
    Time,
}

/// Where missing values go at a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MissingDirection {
    /// `{z <= δ or missing}` vs `{z > δ}`.
    MissingLeft,
    /// `{z <= δ}` vs `{z > δ or missing}`.
    MissingRight,
    /// `{missing}` vs `{observed}`; the threshold is unused.
    MissingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub axis: Axis,
    pub threshold: f64,
    pub missing: MissingDirection,
}

impl SplitRule {
    pub fn threshold(axis: Axis, threshold: f64, missing: MissingDirection) -> Self {
        Self {
            axis,
            threshold,
            missing,
        }
    }

    pub fn missing_only(feature: usize) -> Self {
        Self {
            axis: Axis::Feature(feature),
            threshold: 0.0,
            missing: MissingDirection::MissingOnly,
        }
    }

    /// True when `value` is routed to the left child.
    #[inline]
    pub fn goes_left(&self, value: Option<f64>) -> bool {
        match (self.missing, value) {
            (MissingDirection::MissingOnly, v) => v.is_none(),
            (MissingDirection::MissingLeft, None) => true,
            (MissingDirection::MissingRight, None) => false,
            (_, Some(v)) => v <= self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf { mu: f64 },
    Split { rule: SplitRule, right: usize },
}

/// A node in preorder storage. The left child of a split at `i` is `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub depth: usize,
    pub kind: NodeKind,
}

/// Binary tree stored in canonical preorder, so structurally equal trees
/// compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

/// Edit applied to one node while rebuilding a tree.
enum Edit {
    Keep,
    Grow { rule: SplitRule, left: f64, right: f64 },
    Collapse { mu: f64 },
    Rule(SplitRule),
}

impl Tree {
    pub fn leaf(mu: f64) -> Self {
        Self {
            nodes: alloc::vec![Node {
                depth: 0,
                kind: NodeKind::Leaf { mu },
            }],
        }
    }

    /// A single split at the root with two leaves.
    pub fn stump(rule: SplitRule, left: f64, right: f64) -> Self {
        Self::leaf(0.0).grow(0, rule, left, right)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn children(&self, id: usize) -> Option<(usize, usize)> {
        match self.nodes[id].kind {
            NodeKind::Split { right, .. } => Some((id + 1, right)),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn rule(&self, id: usize) -> Option<&SplitRule> {
        match &self.nodes[id].kind {
            NodeKind::Split { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        matches!(self.nodes[id].kind, NodeKind::Leaf { .. })
    }

    pub fn leaf_value(&self, id: usize) -> f64 {
        match self.nodes[id].kind {
            NodeKind::Leaf { mu } => mu,
            NodeKind::Split { .. } => panic!("node {id} is not a leaf"),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_leaf(i))
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.is_leaf(i))
    }

    /// Splits whose two children are both leaves (the prunable nodes).
    pub fn prunable_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.internal_nodes().filter(|&i| {
            let (l, r) = self.children(i).unwrap();
            self.is_leaf(l) && self.is_leaf(r)
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    pub fn n_prunable(&self) -> usize {
        self.prunable_nodes().count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Rules of every internal node in preorder.
    pub fn rules(&self) -> impl Iterator<Item = &SplitRule> + '_ {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Split { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        })
    }

    /// Leaf reached by an input whose value on each axis is given by `value`.
    #[inline]
    pub fn route_with(&self, value: impl Fn(Axis) -> Option<f64>) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id].kind {
                NodeKind::Leaf { .. } => return id,
                NodeKind::Split { rule, right } => {
                    id = if rule.goes_left(value(rule.axis)) {
                        id + 1
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Largest covariate index used by any split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.rules()
            .filter_map(|r| match r.axis {
                Axis::Feature(j) => Some(j),
                Axis::Time => None,
            })
            .max()
    }

    /// Replace leaf `leaf` by a split with two new leaves.
    pub fn grow(&self, leaf: usize, rule: SplitRule, left: f64, right: f64) -> Tree {
        assert!(self.is_leaf(leaf), "grow target {leaf} is not a leaf");
        self.rebuild(leaf, Edit::Grow { rule, left, right })
    }

    /// Collapse split `node` (both children must be leaves) into a leaf.
    pub fn prune(&self, node: usize, mu: f64) -> Tree {
        let (l, r) = self.children(node).expect("prune target is a leaf");
        assert!(self.is_leaf(l) && self.is_leaf(r), "prune target has a non-leaf child");
        self.rebuild(node, Edit::Collapse { mu })
    }

    /// Replace the rule at split `node`.
    pub fn change(&self, node: usize, rule: SplitRule) -> Tree {
        assert!(!self.is_leaf(node), "change target is a leaf");
        self.rebuild(node, Edit::Rule(rule))
    }

    /// Same structure with leaf values replaced in preorder leaf order.
    pub fn with_leaf_values(&self, values: &[f64]) -> Tree {
        let mut out = self.clone();
        let mut it = values.iter();
        for node in &mut out.nodes {
            if let NodeKind::Leaf { mu } = &mut node.kind {
                *mu = *it.next().expect("too few leaf values");
            }
        }
        assert!(it.next().is_none(), "too many leaf values");
        out
    }

    /// Set the value of leaf `id` in place.
    pub fn set_leaf_value(&mut self, id: usize, value: f64) {
        match &mut self.nodes[id].kind {
            NodeKind::Leaf { mu } => *mu = value,
            NodeKind::Split { .. } => panic!("node {id} is not a leaf"),
        }
    }

    fn rebuild(&self, target: usize, edit: Edit) -> Tree {
        let mut nodes = Vec::with_capacity(self.nodes.len() + 2);
        let mut edit = Some(edit);
        self.copy_into(0, 0, target, &mut edit, &mut nodes);
        Tree { nodes }
    }

    fn copy_into(
        &self,
        id: usize,
        depth: usize,
        target: usize,
        edit: &mut Option<Edit>,
        out: &mut Vec<Node>,
    ) {
        let e = if id == target {
            edit.take().unwrap_or(Edit::Keep)
        } else {
            Edit::Keep
        };
        let leaf = |mu| Node {
            depth,
            kind: NodeKind::Leaf { mu },
        };
        match (e, &self.nodes[id].kind) {
            (Edit::Collapse { mu }, _) => out.push(leaf(mu)),
            (Edit::Grow { rule, left, right }, _) => {
                let at = out.len();
                out.push(Node {
                    depth,
                    kind: NodeKind::Split { rule, right: at + 2 },
                });
                out.push(Node {
                    depth: depth + 1,
                    kind: NodeKind::Leaf { mu: left },
                });
                out.push(Node {
                    depth: depth + 1,
                    kind: NodeKind::Leaf { mu: right },
                });
            }
            (Edit::Keep, NodeKind::Leaf { mu }) => out.push(leaf(*mu)),
            (e, NodeKind::Split { rule, right }) => {
                let rule = match e {
                    Edit::Rule(r) => r,
                    _ => *rule,
                };
                let at = out.len();
                out.push(Node {
                    depth,
                    kind: NodeKind::Split { rule, right: 0 },
                });
                self.copy_into(id + 1, depth + 1, target, edit, out);
                let new_right = out.len();
                if let NodeKind::Split { right: r, .. } = &mut out[at].kind {
                    *r = new_right;
                }
                self.copy_into(*right, depth + 1, target, edit, out);
            }
            (Edit::Rule(_), NodeKind::Leaf { .. }) => unreachable!(),
        }
    }

    /// Build a tree directly from preorder nodes, checking the layout.
    pub fn from_nodes(nodes: Vec<Node>) -> Option<Tree> {
        fn check(nodes: &[Node], id: usize, depth: usize) -> Option<usize> {
            let node = nodes.get(id)?;
            if node.depth != depth {
                return None;
            }
            match node.kind {
                NodeKind::Leaf { .. } => Some(id + 1),
                NodeKind::Split { right, .. } => {
                    let after_left = check(nodes, id + 1, depth + 1)?;
                    if after_left != right {
                        return None;
                    }
                    check(nodes, right, depth + 1)
                }
            }
        }
        (check(&nodes, 0, 0)? == nodes.len()).then_some(Tree { nodes })
    }
}

/// Leaf reached by `(covariates, time)`; `None` entries are missing values.
pub fn route(tree: &Tree, covariates: &[Option<f64>], time: f64) -> Result<usize> {
    if let Some(j) = tree.max_feature() {
        if j >= covariates.len() {
            return Err(Error::DimensionMismatch {
                expected: j + 1,
                got: covariates.len(),
            });
        }
    }
    Ok(tree.route_with(|axis| match axis {
        Axis::Feature(j) => covariates[j],
        Axis::Time => Some(time),
    }))
}

/// A fixed-size sum of trees: one posterior state.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

impl Ensemble {
    pub fn zeros(m: usize, n_features: usize) -> Self {
        Self {
            trees: alloc::vec![Tree::leaf(0.0); m],
            n_features,
        }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Sum over trees of the routed leaf values.
pub fn evaluate_ensemble(ensemble: &Ensemble, covariates: &[Option<f64>], time: f64) -> Result<f64> {
    if covariates.len() != ensemble.n_features {
        return Err(Error::DimensionMismatch {
            expected: ensemble.n_features,
            got: covariates.len(),
        });
    }
    Ok(ensemble
        .trees
        .iter()
        .map(|t| {
            let leaf = t.route_with(|axis| match axis {
                Axis::Feature(j) => covariates[j],
                Axis::Time => Some(time),
            });
            t.leaf_value(leaf)
        })
        .sum())
}
