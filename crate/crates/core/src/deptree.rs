//! Indexed view of a sentence's syntactic dependency tree.
//!
//! Construction repairs malformed head structures so every query is total:
//! the primary root is the first token with head 0 (token 1 is re-headed to 0
//! if there is none), any further head-0 token and any node whose head chain
//! never reaches the root is re-headed to the primary root, smallest id first.
//! The graph is immutable after construction and all queries are pure.

use crate::conll::Sentence;
use crate::pos::PosClasses;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportClass {
    Verb,
    Noun,
    Prep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportLevel {
    /// The first match on the way from the node to the root.
    Low,
    /// The last match before the root.
    High,
}

/// Relation of node `a` to node `p` in the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRelation {
    SelfSame,
    Parent,
    Child,
    Ancestor,
    Descendant,
    Sibling,
    Uncle,
    Nephew,
    Else,
}

impl TreeRelation {
    pub fn as_str(&self) -> &'static str {
        match self {
            TreeRelation::SelfSame => "self",
            TreeRelation::Parent => "parent",
            TreeRelation::Child => "child",
            TreeRelation::Ancestor => "ancestor",
            TreeRelation::Descendant => "descendant",
            TreeRelation::Sibling => "sibling",
            TreeRelation::Uncle => "uncle",
            TreeRelation::Nephew => "nephew",
            TreeRelation::Else => "else",
        }
    }

    pub fn converse(&self) -> TreeRelation {
        match self {
            TreeRelation::SelfSame => TreeRelation::SelfSame,
            TreeRelation::Parent => TreeRelation::Child,
            TreeRelation::Child => TreeRelation::Parent,
            TreeRelation::Ancestor => TreeRelation::Descendant,
            TreeRelation::Descendant => TreeRelation::Ancestor,
            TreeRelation::Sibling => TreeRelation::Sibling,
            TreeRelation::Uncle => TreeRelation::Nephew,
            TreeRelation::Nephew => TreeRelation::Uncle,
            TreeRelation::Else => TreeRelation::Else,
        }
    }
}

/// Family view of one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    /// Leftmost child.
    pub lm: Option<usize>,
    /// Nearest child on the left of the node.
    pub ln: Option<usize>,
    /// Rightmost child.
    pub rm: Option<usize>,
    /// Nearest child on the right of the node.
    pub rn: Option<usize>,
    /// All children, left to right.
    pub children: Vec<usize>,
    /// Children minus the leftmost and the rightmost one.
    pub no_far_children: Vec<usize>,
}

/// Decomposition of the tree path between two nodes at their meet node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDecomposition {
    /// From the first node down-to-up to the meet node, inclusive.
    pub dp_path_argu: Vec<usize>,
    /// From the second node to the meet node, inclusive.
    pub dp_path_pred: Vec<usize>,
    /// From the meet node to the root, inclusive.
    pub dp_path_shared: Vec<usize>,
    /// From the first node through the meet node to the second, inclusive.
    pub dp_path: Vec<usize>,
}

impl PathDecomposition {
    pub fn meet(&self) -> usize {
        *self.dp_path_shared.first().expect("meet node")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    heads: Vec<usize>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    root: usize,
    repaired: bool,
}

impl DepGraph {
    pub fn new(sentence: &Sentence) -> DepGraph {
        let n = sentence.len();
        let mut heads: Vec<usize> = sentence.tokens.iter().map(|t| t.head).collect();
        let mut repaired = false;

        if n > 0 {
            let root = match heads.iter().position(|&h| h == 0) {
                Some(i) => i + 1,
                None => {
                    heads[0] = 0;
                    repaired = true;
                    1
                }
            };
            // Re-head secondary roots to the primary one.
            for (i, h) in heads.iter_mut().enumerate() {
                if *h == 0 && i + 1 != root {
                    *h = root;
                    repaired = true;
                }
            }
            // Break cycles: smallest unreachable id first.
            loop {
                let unreachable = |id: usize| {
                    let mut cur = id;
                    let mut steps = 0;
                    while cur != 0 && steps <= n {
                        cur = heads[cur - 1];
                        steps += 1;
                    }
                    cur != 0
                };
                match (1..=n).find(|&id| unreachable(id)) {
                    Some(id) => {
                        heads[id - 1] = root;
                        repaired = true;
                    }
                    None => break,
                }
            }
        }

        let mut children = vec![Vec::new(); n];
        for (i, &h) in heads.iter().enumerate() {
            if h != 0 {
                children[h - 1].push(i + 1);
            }
        }
        // Insertion was in id order, so the lists are already sorted.

        let mut depth = vec![0usize; n];
        let mut root = 0;
        for id in 1..=n {
            if heads[id - 1] == 0 {
                root = id;
            }
            let mut d = 0;
            let mut cur = heads[id - 1];
            while cur != 0 {
                d += 1;
                cur = heads[cur - 1];
            }
            depth[id - 1] = d;
        }

        DepGraph {
            heads,
            children,
            depth,
            root,
            repaired,
        }
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn repaired(&self) -> bool {
        self.repaired
    }

    /// Repaired head of a node; 0 for the root.
    pub fn head(&self, node: usize) -> usize {
        self.heads[node - 1]
    }

    pub fn head_node(&self, node: usize) -> Option<usize> {
        match self.heads[node - 1] {
            0 => None,
            h => Some(h),
        }
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node - 1]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children(node).is_empty()
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node - 1]
    }

    /// Ancestors from the node's head up to the root, inclusive.
    pub fn ancestors(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.head(node);
        while cur != 0 {
            out.push(cur);
            cur = self.head(cur);
        }
        out
    }

    pub fn family(&self, node: usize) -> Family {
        let children = self.children(node).to_vec();
        let lm = children.first().copied();
        let rm = children.last().copied();
        let ln = children.iter().rev().find(|&&c| c < node).copied();
        let rn = children.iter().find(|&&c| c > node).copied();
        let no_far_children = children
            .iter()
            .copied()
            .filter(|c| Some(*c) != lm && Some(*c) != rm)
            .collect();
        Family {
            lm,
            ln,
            rm,
            rn,
            children,
            no_far_children,
        }
    }

    /// Decomposes the tree path between `a` and `p` at their meet node, the
    /// lowest common ancestor in the repaired tree.
    pub fn decompose_paths(&self, a: usize, p: usize) -> PathDecomposition {
        let mut a_chain = vec![a];
        a_chain.extend(self.ancestors(a));
        let mut p_chain = vec![p];
        p_chain.extend(self.ancestors(p));
        let meet = *a_chain
            .iter()
            .find(|x| p_chain.contains(x))
            .expect("nodes share a root");
        let a_cut = a_chain.iter().position(|&x| x == meet).unwrap();
        let p_cut = p_chain.iter().position(|&x| x == meet).unwrap();
        let dp_path_argu: Vec<usize> = a_chain[..=a_cut].to_vec();
        let dp_path_pred: Vec<usize> = p_chain[..=p_cut].to_vec();
        let dp_path_shared: Vec<usize> = a_chain[a_cut..].to_vec();
        let mut dp_path = dp_path_argu.clone();
        dp_path.extend(dp_path_pred[..p_cut].iter().rev());
        PathDecomposition {
            dp_path_argu,
            dp_path_pred,
            dp_path_shared,
            dp_path,
        }
    }

    /// Inclusive surface-order token sequence from `a` to `p`.
    pub fn linear_path(&self, a: usize, p: usize) -> Vec<usize> {
        if a <= p {
            (a..=p).collect()
        } else {
            (p..=a).rev().collect()
        }
    }

    /// Scans the strict head chain of `node` for the first (`Low`) or last
    /// (`High`) word of the POS class.
    pub fn support_word(
        &self,
        sentence: &Sentence,
        node: usize,
        class: SupportClass,
        level: SupportLevel,
        classes: &PosClasses,
    ) -> Option<usize> {
        let matches = |id: usize| {
            let pos = &sentence.token(id).pos;
            match class {
                SupportClass::Verb => classes.is_verb(pos),
                SupportClass::Noun => classes.is_noun(pos),
                SupportClass::Prep => classes.is_prep(pos),
            }
        };
        let hits: Vec<usize> = self.ancestors(node).into_iter().filter(|&x| matches(x)).collect();
        match level {
            SupportLevel::Low => hits.first().copied(),
            SupportLevel::High => hits.last().copied(),
        }
    }

    /// The node's head, or its leftmost sibling when the head is a
    /// preposition. The root returns itself; a preposition's only child falls
    /// back to the head.
    pub fn pphead(&self, sentence: &Sentence, node: usize, classes: &PosClasses) -> usize {
        let Some(head) = self.head_node(node) else {
            return node;
        };
        if classes.is_prep(&sentence.token(head).pos) {
            if let Some(&sibling) = self.children(head).iter().find(|&&c| c != node) {
                return sibling;
            }
        }
        head
    }

    /// Relation of `a` to `p`, read off the path decomposition.
    pub fn tree_relation(&self, a: usize, p: usize) -> TreeRelation {
        let d = self.decompose_paths(a, p);
        let up_a = d.dp_path_argu.len() - 1;
        let up_p = d.dp_path_pred.len() - 1;
        match (up_a, up_p) {
            (0, 0) => TreeRelation::SelfSame,
            (0, 1) => TreeRelation::Parent,
            (1, 0) => TreeRelation::Child,
            (0, _) => TreeRelation::Ancestor,
            (_, 0) => TreeRelation::Descendant,
            (1, 1) => TreeRelation::Sibling,
            (1, 2) => TreeRelation::Uncle,
            (2, 1) => TreeRelation::Nephew,
            _ => TreeRelation::Else,
        }
    }
}
