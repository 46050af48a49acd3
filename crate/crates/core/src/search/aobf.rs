//! Best-first AND/OR search over the context-minimal graph.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::mem::size_of;

use super::{
    best_value, value_evaluations, Deadline, Instrumentation, SearchOptions, SearchStats, SolveResult, Status,
    TipPolicy,
};
use crate::error::{Error, Result};
use crate::heuristics::Heuristic;
use crate::space::SearchSpace;
use crate::table::UNASSIGNED;

const NIL: u32 = u32::MAX;

/// Handle of a node in the explicated graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Or(u32),
    And(u32),
}

struct OrNode {
    var: usize,
    parent: u32,
    value: f64,
    marked: usize,
    solved: bool,
    expanded: bool,
    weights: Box<[f64]>,
    /// Heuristic value of each AND child, computed at creation.
    hs: Box<[f64]>,
    children: Box<[u32]>,
}

struct AndNode {
    var: usize,
    value: usize,
    v: f64,
    solved: bool,
    expanded: bool,
    parents: Vec<u32>,
    children: Box<[u32]>,
    /// Values of the context of `var`, in context order.
    ctx: Box<[usize]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tip {
    pub node: NodeId,
    pub var: usize,
    /// `Some(value)` for AND tips.
    pub value: Option<usize>,
    /// Twice the pseudo-tree depth, plus one for AND nodes.
    pub depth_key: usize,
    pub preorder: usize,
}

/// The current best partial solution tree: nodes reached from the root by
/// following marked arcs, its unsolved unexpanded tips and its evaluation
/// (arc weights on expanded OR nodes plus tip and solved-node values).
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSolutionTree {
    pub nodes: Vec<NodeId>,
    pub tips: Vec<Tip>,
    pub evaluation: f64,
}

/// Picks the tip to expand next.
pub fn select_tip(pst: &PartialSolutionTree, policy: TipPolicy) -> Option<Tip> {
    match policy {
        TipPolicy::Deepest => pst
            .tips
            .iter()
            .copied()
            .max_by_key(|t| (t.depth_key, Reverse(t.preorder))),
        TipPolicy::Shallowest => pst.tips.iter().copied().min_by_key(|t| (t.depth_key, t.preorder)),
    }
}

/// Stepwise AOBF. [`run`](Self::run) drives it to completion; the other
/// methods expose single steps for inspection.
pub struct AobfSearch<'a> {
    space: &'a SearchSpace,
    heuristic: &'a dyn Heuristic,
    options: SearchOptions,
    ors: Vec<OrNode>,
    ands: Vec<AndNode>,
    cache: Vec<HashMap<u64, u32>>,
    scratch: Vec<usize>,
    stats: SearchStats,
    instrumentation: Option<Instrumentation>,
    bytes: usize,
    in_queue_or: Vec<bool>,
    in_queue_and: Vec<bool>,
}

impl<'a> AobfSearch<'a> {
    pub fn new(space: &'a SearchSpace, heuristic: &'a dyn Heuristic, options: SearchOptions) -> Result<Self> {
        let n = space.num_variables();
        let mut s = AobfSearch {
            space,
            heuristic,
            options,
            ors: Vec::new(),
            ands: Vec::new(),
            cache: vec![HashMap::new(); n],
            scratch: vec![UNASSIGNED; n],
            stats: SearchStats {
                cache_entries_per_var: vec![0; n],
                ..SearchStats::default()
            },
            instrumentation: options.instrument.then(|| Instrumentation {
                min_selected_evaluation: f64::INFINITY,
                ..Instrumentation::default()
            }),
            bytes: 0,
            in_queue_or: Vec::new(),
            in_queue_and: Vec::new(),
        };
        if let Some(root) = space.tree().root() {
            s.new_or(root, NIL)?;
        }
        Ok(s)
    }

    pub fn root(&self) -> Option<NodeId> {
        (!self.ors.is_empty()).then_some(NodeId::Or(0))
    }

    /// Current value of the root (an upper bound on the MPE, excluding the
    /// evidence constant).
    pub fn root_value(&self) -> f64 {
        self.ors.first().map_or(0.0, |r| r.value)
    }

    pub fn is_solved(&self) -> bool {
        self.ors.first().is_none_or(|r| r.solved || r.value == f64::NEG_INFINITY)
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    /// Instrumentation collected so far; `None` unless requested.
    pub fn instrumentation(&self) -> Option<&Instrumentation> {
        self.instrumentation.as_ref()
    }

    pub fn node_value(&self, id: NodeId) -> f64 {
        match id {
            NodeId::Or(k) => self.ors[k as usize].value,
            NodeId::And(k) => self.ands[k as usize].v,
        }
    }

    pub fn is_node_solved(&self, id: NodeId) -> bool {
        match id {
            NodeId::Or(k) => self.ors[k as usize].solved,
            NodeId::And(k) => self.ands[k as usize].solved,
        }
    }

    /// Children of an expanded node, or an empty list.
    pub fn node_children(&self, id: NodeId) -> Vec<NodeId> {
        match id {
            NodeId::Or(k) => self.ors[k as usize].children.iter().map(|&c| NodeId::And(c)).collect(),
            NodeId::And(k) => self.ands[k as usize].children.iter().map(|&c| NodeId::Or(c)).collect(),
        }
    }

    /// Number of OR parents of every AND node, as (variable, value, count).
    pub fn and_in_degrees(&self) -> Vec<(usize, usize, usize)> {
        self.ands.iter().map(|a| (a.var, a.value, a.parents.len())).collect()
    }

    /// Approximate bytes held by the explicated graph.
    pub fn memory_bytes(&self) -> usize {
        self.bytes
    }

    fn fill_context(&mut self, and: u32) {
        let a = &self.ands[and as usize];
        for (k, &u) in self.space.contexts().context(a.var).iter().enumerate() {
            self.scratch[u] = a.ctx[k];
        }
    }

    fn clear_context(&mut self, and: u32) {
        let var = self.ands[and as usize].var;
        for &u in self.space.contexts().context(var) {
            self.scratch[u] = UNASSIGNED;
        }
    }

    fn new_or(&mut self, var: usize, parent: u32) -> Result<u32> {
        let (weights, hs) = value_evaluations(self.space, self.heuristic, var, &mut self.scratch)?;
        let (value, marked) = best_value(&weights, hs.iter().copied());
        let id = self.ors.len() as u32;
        self.bytes += size_of::<OrNode>() + weights.len() * (2 * size_of::<f64>() + size_of::<u32>());
        self.ors.push(OrNode {
            var,
            parent,
            value,
            marked,
            solved: false,
            expanded: false,
            weights: weights.into_boxed_slice(),
            hs: hs.into_boxed_slice(),
            children: Box::new([]),
        });
        self.in_queue_or.push(false);
        self.stats.or_nodes += 1;
        Ok(id)
    }

    /// Expands an unexpanded node and revises values above it.
    pub fn expand(&mut self, id: NodeId) -> Result<()> {
        match id {
            NodeId::Or(n) => self.expand_or(n)?,
            NodeId::And(m) => self.expand_and(m)?,
        }
        self.stats.expansions += 1;
        if let Some(instr) = self.instrumentation.as_mut() {
            let entry = match id {
                NodeId::Or(n) => (self.ors[n as usize].var, None),
                NodeId::And(m) => {
                    let a = &self.ands[m as usize];
                    (a.var, Some(a.value))
                }
            };
            instr.expansion_trace.push(entry);
        }
        self.revise(id);
        Ok(())
    }

    fn expand_or(&mut self, n: u32) -> Result<()> {
        let node = &self.ors[n as usize];
        if node.expanded {
            return Err(Error::InvalidParameter("OR node already expanded".into()));
        }
        let var = node.var;
        let parent = node.parent;
        if parent != NIL {
            self.fill_context(parent);
        }
        let space = self.space;
        let ctx_vars = space.contexts().context(var);
        let leaf = space.tree().is_leaf(var);
        let d = space.domain_size(var);
        let mut children = Vec::with_capacity(d);
        for value in 0..d {
            self.scratch[var] = value;
            let key = space.context_key(ctx_vars, &self.scratch);
            let hit = key.and_then(|k| self.cache[var].get(&k).copied());
            let m = match hit {
                Some(m) => {
                    self.stats.cache_hits += 1;
                    m
                }
                None => {
                    let v = self.ors[n as usize].hs[value];
                    let ctx: Box<[usize]> = ctx_vars.iter().map(|&u| self.scratch[u]).collect();
                    let m = self.ands.len() as u32;
                    self.bytes += size_of::<AndNode>() + ctx.len() * size_of::<usize>() + 32;
                    self.ands.push(AndNode {
                        var,
                        value,
                        v,
                        solved: leaf,
                        expanded: false,
                        parents: Vec::new(),
                        children: Box::new([]),
                        ctx,
                    });
                    self.in_queue_and.push(false);
                    self.stats.and_nodes += 1;
                    if let Some(k) = key {
                        self.cache[var].insert(k, m);
                        self.stats.cache_entries += 1;
                        self.stats.cache_entries_per_var[var] += 1;
                    }
                    m
                }
            };
            self.ands[m as usize].parents.push(n);
            self.bytes += size_of::<u32>();
            children.push(m);
        }
        self.scratch[var] = UNASSIGNED;
        if parent != NIL {
            self.clear_context(parent);
        }
        let node = &mut self.ors[n as usize];
        node.children = children.into_boxed_slice();
        node.expanded = true;
        Ok(())
    }

    fn expand_and(&mut self, m: u32) -> Result<()> {
        let node = &self.ands[m as usize];
        if node.expanded || node.solved {
            return Err(Error::InvalidParameter("AND node already expanded".into()));
        }
        let var = node.var;
        self.fill_context(m);
        let space = self.space;
        let mut children = Vec::new();
        for &child in space.tree().children(var) {
            match self.new_or(child, m) {
                Ok(c) => children.push(c),
                Err(e) => {
                    self.clear_context(m);
                    return Err(e);
                }
            }
        }
        self.clear_context(m);
        let node = &mut self.ands[m as usize];
        node.children = children.into_boxed_slice();
        node.expanded = true;
        Ok(())
    }

    fn depth_key(&self, id: NodeId) -> usize {
        match id {
            NodeId::Or(n) => 2 * self.space.tree().depth(self.ors[n as usize].var),
            NodeId::And(m) => 2 * self.space.tree().depth(self.ands[m as usize].var) + 1,
        }
    }

    fn enqueue(&mut self, heap: &mut BinaryHeap<(usize, NodeId)>, id: NodeId) {
        let flag = match id {
            NodeId::Or(n) => &mut self.in_queue_or[n as usize],
            NodeId::And(m) => &mut self.in_queue_and[m as usize],
        };
        if !*flag {
            *flag = true;
            let key = self.depth_key(id);
            heap.push((key, id));
        }
    }

    fn note_value(&mut self, old: f64, new: f64) {
        if let Some(instr) = self.instrumentation.as_mut() {
            if new > old + 1e-9 * old.abs().max(1.0) {
                instr.value_increases += 1;
            }
        }
    }

    /// Bottom-up revision starting at `start`: deepest nodes first, each
    /// node's parents queued only when its value or solved flag changes.
    fn revise(&mut self, start: NodeId) {
        let mut heap = BinaryHeap::new();
        self.enqueue(&mut heap, start);
        while let Some((_, id)) = heap.pop() {
            match id {
                NodeId::Or(n) => {
                    self.in_queue_or[n as usize] = false;
                    let node = &self.ors[n as usize];
                    if !node.expanded {
                        continue;
                    }
                    let (best, arg) = best_value(
                        &node.weights,
                        node.children.iter().map(|&c| self.ands[c as usize].v),
                    );
                    let solved = self.ands[node.children[arg] as usize].solved;
                    let (old, old_solved, parent) = (node.value, node.solved, node.parent);
                    let node = &mut self.ors[n as usize];
                    node.value = best;
                    node.marked = arg;
                    node.solved = solved;
                    self.note_value(old, best);
                    if (best != old || (solved && !old_solved)) && parent != NIL {
                        self.enqueue(&mut heap, NodeId::And(parent));
                    }
                }
                NodeId::And(m) => {
                    self.in_queue_and[m as usize] = false;
                    let node = &self.ands[m as usize];
                    if !node.expanded {
                        continue;
                    }
                    let v: f64 = node.children.iter().map(|&c| self.ors[c as usize].value).sum();
                    let solved = node.children.iter().all(|&c| self.ors[c as usize].solved);
                    let (old, old_solved) = (node.v, node.solved);
                    let node = &mut self.ands[m as usize];
                    node.v = v;
                    node.solved = solved;
                    self.note_value(old, v);
                    if v == old && !(solved && !old_solved) {
                        continue;
                    }
                    let parents = std::mem::take(&mut self.ands[m as usize].parents);
                    for &p in &parents {
                        let or = &self.ors[p as usize];
                        if !or.expanded {
                            continue;
                        }
                        let k = or.children.iter().position(|&c| c == m).expect("linked child");
                        if k == or.marked || or.weights[k] + v > or.value {
                            self.enqueue(&mut heap, NodeId::Or(p));
                        }
                    }
                    self.ands[m as usize].parents = parents;
                }
            }
        }
    }

    /// Traces marked arcs from the root.
    pub fn partial_solution_tree(&self) -> PartialSolutionTree {
        let mut nodes = Vec::new();
        let mut tips = Vec::new();
        let mut evaluation = 0.0;
        self.trace(
            |id, tip| {
                nodes.push(id);
                tips.extend(tip);
            },
            &mut evaluation,
        );
        PartialSolutionTree {
            nodes,
            tips,
            evaluation,
        }
    }

    fn trace(&self, mut visit: impl FnMut(NodeId, Option<Tip>), evaluation: &mut f64) {
        let tree = self.space.tree();
        let mut stack = Vec::new();
        if !self.ors.is_empty() {
            stack.push(NodeId::Or(0));
        }
        let mut eval = 0.0;
        while let Some(id) = stack.pop() {
            match id {
                NodeId::Or(n) => {
                    let node = &self.ors[n as usize];
                    if node.solved || !node.expanded {
                        eval += node.value;
                        let tip = (!node.solved).then(|| Tip {
                            node: id,
                            var: node.var,
                            value: None,
                            depth_key: 2 * tree.depth(node.var),
                            preorder: tree.preorder_index(node.var),
                        });
                        visit(id, tip);
                    } else {
                        eval += node.weights[node.marked];
                        visit(id, None);
                        stack.push(NodeId::And(node.children[node.marked]));
                    }
                }
                NodeId::And(m) => {
                    let node = &self.ands[m as usize];
                    if node.solved || !node.expanded {
                        eval += node.v;
                        let tip = (!node.solved).then(|| Tip {
                            node: id,
                            var: node.var,
                            value: Some(node.value),
                            depth_key: 2 * tree.depth(node.var) + 1,
                            preorder: tree.preorder_index(node.var),
                        });
                        visit(id, tip);
                    } else {
                        visit(id, None);
                        stack.extend(node.children.iter().rev().map(|&c| NodeId::Or(c)));
                    }
                }
            }
        }
        *evaluation = eval;
    }

    fn next_tip(&mut self) -> Option<Tip> {
        let policy = self.options.tip_policy;
        let mut best: Option<Tip> = None;
        let mut eval = 0.0;
        self.trace(|_, tip| {
            if let Some(t) = tip {
                let better = match (&best, policy) {
                    (None, _) => true,
                    (Some(b), TipPolicy::Deepest) => {
                        (t.depth_key, Reverse(t.preorder)) > (b.depth_key, Reverse(b.preorder))
                    }
                    (Some(b), TipPolicy::Shallowest) => (t.depth_key, t.preorder) < (b.depth_key, b.preorder),
                };
                if better {
                    best = Some(t);
                }
            }
        }, &mut eval);
        if let Some(instr) = self.instrumentation.as_mut() {
            instr.min_selected_evaluation = instr.min_selected_evaluation.min(eval);
        }
        best
    }

    /// One iteration: select a tip of the best partial solution tree and
    /// expand it. Returns `false` once the root is solved.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_solved() {
            return Ok(false);
        }
        match self.next_tip() {
            Some(t) => {
                self.expand(t.node)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Assignment and arc-weight sum of the marked solution tree.
    fn extract(&self) -> (Vec<usize>, f64) {
        let n = self.space.num_variables();
        let mut x = vec![0; n];
        let mut weight = 0.0;
        let mut stack: Vec<u32> = if self.ors.is_empty() { vec![] } else { vec![0] };
        while let Some(o) = stack.pop() {
            let node = &self.ors[o as usize];
            if !node.expanded {
                continue;
            }
            let a = &self.ands[node.children[node.marked] as usize];
            x[a.var] = a.value;
            weight += node.weights[node.marked];
            stack.extend(a.children.iter().copied());
        }
        (x, weight)
    }

    /// Runs to completion or until a limit is hit.
    pub fn run(mut self) -> Result<SolveResult> {
        let deadline = Deadline::new(self.options.limits.time_limit);
        let memory_limit = self.options.limits.memory_limit;
        let status = loop {
            if self.is_solved() {
                break Status::Solved;
            }
            if deadline.expired() {
                break Status::Timeout;
            }
            if memory_limit.is_some_and(|l| self.bytes > l) {
                break Status::Memout;
            }
            if !self.step()? {
                break Status::Solved;
            }
        };
        self.stats.elapsed = deadline.elapsed();
        self.stats.instrumentation = self.instrumentation.take();
        let space = self.space;
        if status != Status::Solved {
            return Ok(SolveResult::aborted(space, status, Some(self.root_value()), None, self.stats));
        }
        let value = self.root_value();
        let (x, weight) = if value == f64::NEG_INFINITY {
            let x = vec![0; space.num_variables()];
            let w = space.solution_log_value(&x) - space.network().log_constant();
            (x, w)
        } else {
            self.extract()
        };
        Ok(SolveResult::solved(space, value, x, weight, self.stats))
    }
}

/// Best-first AND/OR search for the MPE of `space`.
pub fn aobf(space: &SearchSpace, heuristic: &dyn Heuristic, options: &SearchOptions) -> Result<SolveResult> {
    AobfSearch::new(space, heuristic, *options)?.run()
}
