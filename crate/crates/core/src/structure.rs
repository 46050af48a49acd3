//! Elimination orders, pseudo-trees and variable contexts.
//!
//! The pseudo-tree is derived from an elimination order the usual way: each
//! variable hangs below the earliest-eliminated of its later neighbors in the
//! induced graph. Every primal edge then joins an ancestor/descendant pair,
//! and a variable's context is exactly its later induced neighborhood, so no
//! context holds more than `w* + 1` variables.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    order: Vec<usize>,
    position: Vec<usize>,
    induced_width: usize,
}

impl EliminationOrder {
    /// Wraps an explicit order and measures its induced width on `g`.
    pub fn from_order(g: &UndirectedGraph, order: Vec<usize>) -> Result<Self> {
        let n = g.num_vertices();
        let mut position = vec![usize::MAX; n];
        if order.len() != n {
            return Err(Error::InvalidParameter(format!(
                "order has {} entries for {n} vertices",
                order.len()
            )));
        }
        for (k, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(Error::InvalidParameter("order is not a permutation".into()));
            }
            position[v] = k;
        }
        let later = induced_later_neighbors(g, &order);
        let induced_width = later.iter().map(Vec::len).max().unwrap_or(0);
        Ok(EliminationOrder {
            order,
            position,
            induced_width,
        })
    }

    /// Elimination sequence, first-eliminated first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn induced_width(&self) -> usize {
        self.induced_width
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// For each vertex, its neighbors at the moment it is eliminated along
/// `order` (the neighbors eliminated after it in the induced graph), sorted.
pub fn induced_later_neighbors(g: &UndirectedGraph, order: &[usize]) -> Vec<Vec<usize>> {
    let n = g.num_vertices();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).collect()).collect();
    let mut later = vec![Vec::new(); n];
    for &v in order {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for (k, &a) in nb.iter().enumerate() {
            adj[a].remove(&v);
            for &b in &nb[k + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        later[v] = nb;
        adj[v].clear();
    }
    later
}

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nb: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (k, &a) in nb.iter().enumerate() {
        for &b in &nb[k + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Greedy min-fill elimination order. Ties between vertices adding the same
/// number of fill edges are broken uniformly at random from `seed`.
pub fn min_fill_order(g: &UndirectedGraph, seed: u64) -> EliminationOrder {
    let n = g.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).collect()).collect();
    let mut fill: Vec<usize> = (0..n).map(|v| fill_in(&adj, v)).collect();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    let mut width = 0;
    let mut ties = Vec::new();
    for _ in 0..n {
        let best = (0..n).filter(|&v| alive[v]).map(|v| fill[v]).min().unwrap();
        ties.clear();
        ties.extend((0..n).filter(|&v| alive[v] && fill[v] == best));
        let v = ties[rng.random_range(0..ties.len())];

        let nb: Vec<usize> = adj[v].iter().copied().collect();
        width = width.max(nb.len());
        for (k, &a) in nb.iter().enumerate() {
            adj[a].remove(&v);
            for &b in &nb[k + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[v].clear();
        alive[v] = false;
        order.push(v);

        let mut touched: BTreeSet<usize> = nb.iter().copied().collect();
        for &a in &nb {
            touched.extend(adj[a].iter().copied());
        }
        for u in touched {
            fill[u] = fill_in(&adj, u);
        }
    }
    let mut position = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    EliminationOrder {
        order,
        position,
        induced_width: width,
    }
}

/// Rooted tree over all variables that backs the AND/OR search space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: Option<usize>,
    depth: Vec<usize>,
    height: usize,
    dfs_order: Vec<usize>,
    // preorder interval [enter, exit) per vertex
    enter: Vec<usize>,
    exit: Vec<usize>,
}

impl PseudoTree {
    /// Builds a tree from a parent map. Exactly one vertex may lack a parent.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for (v, p) in parent.iter().enumerate() {
            match *p {
                Some(p) if p >= n || p == v => {
                    return Err(Error::InvalidParameter(format!("bad parent for vertex {v}")))
                }
                Some(p) => children[p].push(v),
                None if root.is_some() => {
                    return Err(Error::InvalidParameter("pseudo-tree has more than one root".into()))
                }
                None => root = Some(v),
            }
        }
        if n > 0 && root.is_none() {
            return Err(Error::InvalidParameter("pseudo-tree has no root".into()));
        }
        let mut depth = vec![0; n];
        let mut enter = vec![usize::MAX; n];
        let mut exit = vec![0; n];
        let mut dfs_order = Vec::with_capacity(n);
        if let Some(r) = root {
            // (vertex, next child index)
            let mut stack = vec![(r, 0usize)];
            enter[r] = 0;
            dfs_order.push(r);
            while let Some(top) = stack.last_mut() {
                let (v, k) = *top;
                if k < children[v].len() {
                    top.1 += 1;
                    let c = children[v][k];
                    depth[c] = depth[v] + 1;
                    enter[c] = dfs_order.len();
                    dfs_order.push(c);
                    stack.push((c, 0));
                } else {
                    exit[v] = dfs_order.len();
                    stack.pop();
                }
            }
        }
        if dfs_order.len() != n {
            return Err(Error::InvalidParameter("parent map contains a cycle".into()));
        }
        let height = depth.iter().copied().max().unwrap_or(0);
        Ok(PseudoTree {
            parent,
            children,
            root,
            depth,
            height,
            dfs_order,
            enter,
            exit,
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Preorder, children visited in increasing id.
    pub fn dfs_order(&self) -> &[usize] {
        &self.dfs_order
    }

    /// Position of `v` in [`dfs_order`](Self::dfs_order).
    pub fn preorder_index(&self, v: usize) -> usize {
        self.enter[v]
    }

    /// `a` is `v` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, a: usize, v: usize) -> bool {
        self.enter[a] <= self.enter[v] && self.enter[v] < self.exit[a]
    }

    /// Strict ancestors of `v`, nearest first.
    pub fn ancestors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.parent[v], move |&u| self.parent[u])
    }

    /// `v` and all its descendants, in preorder.
    pub fn subtree(&self, v: usize) -> &[usize] {
        &self.dfs_order[self.enter[v]..self.exit[v]]
    }
}

/// Builds the pseudo-tree induced by `ord` on `g`. Vertices without a later
/// induced neighbor (roots of other connected components) are attached to the
/// last-eliminated vertex, so the result is a single tree.
pub fn build_pseudo_tree(g: &UndirectedGraph, ord: &EliminationOrder) -> PseudoTree {
    let n = g.num_vertices();
    let later = induced_later_neighbors(g, ord.order());
    let root = ord.order().last().copied();
    let parent: Vec<Option<usize>> = (0..n)
        .map(|v| {
            if Some(v) == root {
                return None;
            }
            later[v]
                .iter()
                .copied()
                .min_by_key(|&u| ord.position(u))
                .or(root)
        })
        .collect();
    PseudoTree::from_parents(parent).expect("bucket tree is a tree")
}

/// True iff `t` spans the vertices of `g` and every edge of `g` joins a
/// vertex to one of its ancestors.
pub fn validate_pseudo_tree(t: &PseudoTree, g: &UndirectedGraph) -> bool {
    t.len() == g.num_vertices()
        && g
            .edges()
            .all(|(u, v)| t.is_ancestor_or_self(u, v) || t.is_ancestor_or_self(v, u))
}

/// Per-variable contexts: the ancestors connected to the variable or to one
/// of its descendants, ordered root first, followed by the variable itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTable {
    contexts: Vec<Vec<usize>>,
}

impl ContextTable {
    /// Context of `v`, ending with `v`.
    pub fn context(&self, v: usize) -> &[usize] {
        &self.contexts[v]
    }

    /// Context of `v` without `v` itself.
    pub fn ancestor_context(&self, v: usize) -> &[usize] {
        let c = &self.contexts[v];
        &c[..c.len() - 1]
    }

    /// Largest context size minus one.
    pub fn width(&self) -> usize {
        self.contexts.iter().map(|c| c.len() - 1).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }
}

pub fn compute_contexts(t: &PseudoTree, g: &UndirectedGraph) -> ContextTable {
    let n = t.len();
    let mut upper: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &v in t.dfs_order().iter().rev() {
        let mut s: BTreeSet<usize> = g
            .neighbors(v)
            .filter(|&u| u != v && t.is_ancestor_or_self(u, v))
            .collect();
        for &c in t.children(v) {
            s.extend(upper[c].iter().copied().filter(|&u| u != v));
        }
        upper[v] = s;
    }
    let contexts = (0..n)
        .map(|v| {
            let mut c: Vec<usize> = upper[v].iter().copied().collect();
            c.sort_by_key(|&u| t.depth(u));
            c.push(v);
            c
        })
        .collect();
    ContextTable { contexts }
}
