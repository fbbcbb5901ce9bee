use std::fmt::Write as _;

use crate::error::{Error, Result};

/// One node of a [`GenreTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// Empty for leaves, exactly two entries for internal nodes.
    pub children: Vec<usize>,
    /// Genre index carried by a leaf.
    pub leaf: Option<usize>,
    /// Merge height; 0 for leaves.
    pub height: f64,
    /// Length of the edge to the parent; 0 for the root.
    pub branch_length: f64,
}

/// Rooted binary tree over genre indices with branch lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreTree {
    nodes: Vec<TreeNode>,
    root: usize,
    /// Genre index -> node index.
    leaf_nodes: Vec<usize>,
}

impl GenreTree {
    /// Build from an agglomeration sequence. Leaves are nodes `0..k`; merge
    /// `m` creates node `k + m` joining the two given nodes at `height`.
    pub fn from_merges(k: usize, merges: &[(usize, usize, f64)]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("tree needs at least one leaf"));
        }
        if merges.len() != k - 1 {
            return Err(Error::invalid(format!(
                "{k} leaves need {} merges, got {}",
                k - 1,
                merges.len()
            )));
        }
        let mut nodes: Vec<TreeNode> = (0..k)
            .map(|g| TreeNode {
                parent: None,
                children: Vec::new(),
                leaf: Some(g),
                height: 0.0,
                branch_length: 0.0,
            })
            .collect();
        for &(a, b, height) in merges {
            let id = nodes.len();
            for c in [a, b] {
                let child = nodes
                    .get_mut(c)
                    .ok_or_else(|| Error::invalid(format!("merge references unknown node {c}")))?;
                if child.parent.is_some() {
                    return Err(Error::invalid(format!("node {c} merged twice")));
                }
                child.parent = Some(id);
                // Average linkage never inverts; clamp rounding noise.
                child.branch_length = (height - child.height).max(0.0);
            }
            nodes.push(TreeNode {
                parent: None,
                children: vec![a, b],
                leaf: None,
                height,
                branch_length: 0.0,
            });
        }
        let root = nodes.len() - 1;
        Ok(Self {
            leaf_nodes: (0..k).collect(),
            nodes,
            root,
        })
    }

    /// Build from explicit nodes, validating shape and leaf labels.
    pub fn from_nodes(nodes: Vec<TreeNode>, root: usize) -> Result<Self> {
        let n = nodes.len();
        if root >= n {
            return Err(Error::invalid("root index out of range"));
        }
        if nodes[root].parent.is_some() {
            return Err(Error::invalid("root has a parent"));
        }
        let leaves = nodes.iter().filter(|x| x.children.is_empty()).count();
        let mut leaf_nodes = vec![usize::MAX; leaves];
        for (i, node) in nodes.iter().enumerate() {
            if !(node.branch_length >= 0.0) || !node.branch_length.is_finite() {
                return Err(Error::invalid(format!("node {i} has invalid branch length")));
            }
            match (node.children.len(), node.leaf) {
                (0, Some(g)) if g < leaves && leaf_nodes[g] == usize::MAX => leaf_nodes[g] = i,
                (0, _) => return Err(Error::invalid(format!("leaf node {i} has a bad genre label"))),
                (2, None) => {
                    for &c in &node.children {
                        if c >= n || nodes[c].parent != Some(i) {
                            return Err(Error::invalid(format!("node {i} has inconsistent child {c}")));
                        }
                    }
                }
                _ => return Err(Error::invalid(format!("node {i} is not binary"))),
            }
        }
        let tree = Self {
            nodes,
            root,
            leaf_nodes,
        };
        // Every node must be reachable from the root exactly once.
        if tree.postorder().len() != n {
            return Err(Error::invalid("tree has unreachable nodes"));
        }
        Ok(tree)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_nodes.len()
    }

    pub fn leaf_node(&self, genre: usize) -> usize {
        self.leaf_nodes[genre]
    }

    /// Node indices, children before parents.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded || self.nodes[node].children.is_empty() {
                out.push(node);
                continue;
            }
            stack.push((node, true));
            for &c in self.nodes[node].children.iter().rev() {
                stack.push((c, false));
            }
        }
        out
    }

    /// Root-to-leaf path length per genre index.
    pub fn leaf_depths(&self) -> Vec<f64> {
        (0..self.leaf_count())
            .map(|g| {
                let mut node = self.leaf_nodes[g];
                let mut depth = 0.0;
                while let Some(p) = self.nodes[node].parent {
                    depth += self.nodes[node].branch_length;
                    node = p;
                }
                depth
            })
            .collect()
    }

    pub fn is_ultrametric(&self, tol: f64) -> bool {
        let depths = self.leaf_depths();
        let (lo, hi) = depths
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        hi - lo <= tol
    }

    /// Newick text with genre indices as leaf names, e.g. `((0:1,1:1):1,2:2);`.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_newick(self.root, &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, node: usize, out: &mut String) {
        let n = &self.nodes[node];
        if let Some(g) = n.leaf {
            write!(out, "{g}").unwrap();
        } else {
            out.push('(');
            for (i, &c) in n.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.write_newick(c, out);
            }
            out.push(')');
        }
        if n.parent.is_some() {
            write!(out, ":{}", n.branch_length).unwrap();
        }
    }

    /// Parse the subset of Newick emitted by [`GenreTree::to_newick`].
    pub fn from_newick(text: &str) -> Result<Self> {
        let mut p = NewickParser {
            s: text.trim().as_bytes(),
            pos: 0,
            nodes: Vec::new(),
        };
        let root = p.node()?;
        p.expect(b';')?;
        if p.pos != p.s.len() {
            return Err(p.err("trailing characters"));
        }
        let mut nodes = p.nodes;
        // Heights follow from branch lengths, bottom-up.
        let order = {
            let tmp = GenreTree::from_nodes(nodes.clone(), root)?;
            tmp.postorder()
        };
        for node in order {
            if !nodes[node].children.is_empty() {
                let h = nodes[node]
                    .children
                    .iter()
                    .map(|&c| nodes[c].height + nodes[c].branch_length)
                    .fold(0.0, f64::max);
                nodes[node].height = h;
            }
        }
        GenreTree::from_nodes(nodes, root)
    }
}

struct NewickParser<'a> {
    s: &'a [u8],
    pos: usize,
    nodes: Vec<TreeNode>,
}

impl NewickParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Format {
            what: "newick",
            message: format!("{msg} at byte {}", self.pos),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {:?}", c as char)))
        }
    }

    fn token(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, b',' | b')' | b'(' | b':' | b';') {
                break;
            }
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("")
    }

    fn node(&mut self) -> Result<usize> {
        let id = if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut children = vec![self.node()?];
            while self.peek() == Some(b',') {
                self.pos += 1;
                children.push(self.node()?);
            }
            self.expect(b')')?;
            let id = self.nodes.len();
            for &c in &children {
                self.nodes[c].parent = Some(id);
            }
            self.nodes.push(TreeNode {
                parent: None,
                children,
                leaf: None,
                height: 0.0,
                branch_length: 0.0,
            });
            id
        } else {
            let label = self.token().to_string();
            let g: usize = label
                .parse()
                .map_err(|_| self.err(&format!("leaf label {label:?} is not a genre index")))?;
            self.nodes.push(TreeNode {
                parent: None,
                children: Vec::new(),
                leaf: Some(g),
                height: 0.0,
                branch_length: 0.0,
            });
            self.nodes.len() - 1
        };
        if self.peek() == Some(b':') {
            self.pos += 1;
            let tok = self.token().to_string();
            let len: f64 = tok
                .parse()
                .map_err(|_| self.err(&format!("bad branch length {tok:?}")))?;
            self.nodes[id].branch_length = len;
        }
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_leaf() -> GenreTree {
        // ((0,1) at height 1, 2) at height 2
        GenreTree::from_merges(3, &[(0, 1, 1.0), (3, 2, 2.0)]).unwrap()
    }

    #[test]
    fn merges_produce_branch_lengths() {
        let t = three_leaf();
        let n = t.nodes();
        assert_eq!(n[0].branch_length, 1.0);
        assert_eq!(n[1].branch_length, 1.0);
        assert_eq!(n[2].branch_length, 2.0);
        assert_eq!(n[3].branch_length, 1.0);
        assert!(t.is_ultrametric(1e-12));
        assert_eq!(t.to_newick(), "((0:1,1:1):1,2:2);");
    }

    #[test]
    fn newick_round_trip_is_byte_exact() {
        let t = GenreTree::from_merges(4, &[(2, 0, 0.125), (1, 3, 0.3), (4, 5, 0.7000000000000001)])
            .unwrap();
        let text = t.to_newick();
        let back = GenreTree::from_newick(&text).unwrap();
        assert_eq!(back.to_newick(), text);
        assert_eq!(back.leaf_count(), 4);
        assert!(back.is_ultrametric(1e-12));
    }

    #[test]
    fn single_leaf_tree() {
        let t = GenreTree::from_merges(1, &[]).unwrap();
        assert_eq!(t.to_newick(), "0;");
        assert_eq!(GenreTree::from_newick("0;").unwrap().leaf_count(), 1);
    }

    #[test]
    fn rejects_malformed_newick() {
        assert!(GenreTree::from_newick("((0:1,1:1);").is_err());
        assert!(GenreTree::from_newick("(0:1,x:1);").is_err());
        assert!(GenreTree::from_newick("(0:1,0:1);").is_err());
        assert!(GenreTree::from_newick("(0:-1,1:1);").is_err());
    }
}
