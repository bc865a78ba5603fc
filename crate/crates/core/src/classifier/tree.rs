use crate::error::{Error, Result};

/// One node of a regression tree. Rows with `x[feature] as f32 <= threshold`
/// go to `left`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f32,
        left: u32,
        right: u32,
    },
    Leaf(f32),
}

/// A regression tree contributing to the score of `class`. Node 0 is the
/// root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    class: u32,
    nodes: Vec<Node>,
}

impl Tree {
    /// Checks that `nodes` forms a single tree rooted at node 0.
    pub fn new(class: u32, nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::format("tree without nodes"));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(Error::format(format!("tree node {i} reached twice")));
            }
            seen[i] = true;
            match nodes[i] {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if threshold.is_nan() {
                        return Err(Error::format("NaN split threshold"));
                    }
                    for c in [left as usize, right as usize] {
                        if c >= nodes.len() {
                            return Err(Error::format(format!("child index {c} out of range")));
                        }
                        stack.push(c);
                    }
                }
                Node::Leaf(v) => {
                    if !v.is_finite() {
                        return Err(Error::format("non-finite leaf value"));
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::format(format!("tree node {i} is unreachable")));
        }
        Ok(Self { class, nodes })
    }

    /// Complete tree of the given depth splitting on feature 0 everywhere.
    pub fn full(class: u32, depth: usize) -> Self {
        fn grow(nodes: &mut Vec<Node>, depth: usize) -> u32 {
            let id = nodes.len() as u32;
            if depth == 0 {
                nodes.push(Node::Leaf(0.0));
                return id;
            }
            nodes.push(Node::Leaf(0.0));
            let left = grow(nodes, depth - 1);
            let right = grow(nodes, depth - 1);
            nodes[id as usize] = Node::Split {
                feature: 0,
                threshold: 0.0,
                left,
                right,
            };
            id
        }
        let mut nodes = Vec::with_capacity((2 << depth) - 1);
        grow(&mut nodes, depth);
        Self { class, nodes }
    }

    pub fn class(&self) -> u32 {
        self.class
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len() - self.num_leaves()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn max_feature(&self) -> Option<u32> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .max()
    }

    /// Leaf value reached by `row`.
    pub fn predict_row(&self, row: &[f64]) -> f32 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature as usize] as f32 <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}
