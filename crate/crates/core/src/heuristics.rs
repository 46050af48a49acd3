//! Mini-bucket heuristics.
//!
//! Mini-bucket elimination runs along the elimination order in log space.
//! Each bucket is split greedily into mini-buckets whose joint scope has at
//! most `i` variables (counting the bucket variable); every mini-bucket
//! maximizes the bucket variable out and sends the result to the bucket of
//! its deepest remaining variable.
//!
//! The static heuristic (SMB) keeps every message and indexes it by the
//! pseudo-tree nodes whose subproblem it bounds. For an AND node `<X, x>` the
//! bound is the sum of the messages produced strictly below `X` that land in
//! `X` or above it. The dynamic heuristic (DMB) reruns the elimination on the
//! subproblem below a node after conditioning on the node's context.

use crate::error::{Error, Result};
use crate::space::SearchSpace;
use crate::structure::PseudoTree;
use crate::table::{max_out, LogTable, UNASSIGNED};

/// A node of the AND/OR search space, named by its variable (and value).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Or { var: usize },
    And { var: usize, value: usize },
}

impl NodeRef {
    pub fn var(&self) -> usize {
        match *self {
            NodeRef::Or { var } | NodeRef::And { var, .. } => var,
        }
    }
}

/// Reference to a function inside a bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionId {
    Factor(usize),
    Message(usize),
}

#[derive(Debug, Clone)]
pub struct Message {
    pub table: LogTable,
    /// Bucket variable that produced the message.
    pub source: usize,
    /// Bucket the message was placed in; `None` for constants.
    pub destination: Option<usize>,
}

#[derive(Debug, Clone)]
struct Elimination {
    messages: Vec<Message>,
    partitions: Vec<(usize, Vec<Vec<FunctionId>>)>,
    constant: f64,
}

fn deepest(tree: &PseudoTree, vars: &[usize]) -> Option<usize> {
    vars.iter().copied().max_by_key(|&v| tree.depth(v))
}

/// Mini-bucket elimination of `sequence` over `functions`. Functions must
/// only mention variables of `sequence`; every variable's tree ancestors
/// within the sequence must come after it.
fn eliminate(
    sequence: &[usize],
    functions: &[LogTable],
    tree: &PseudoTree,
    cards: &[usize],
    i_bound: usize,
    max_entries: usize,
) -> Result<Elimination> {
    let n = cards.len();
    let mut buckets: Vec<Vec<FunctionId>> = vec![Vec::new(); n];
    let mut constant = 0.0;
    for (k, f) in functions.iter().enumerate() {
        match deepest(tree, f.vars()) {
            Some(b) => buckets[b].push(FunctionId::Factor(k)),
            None => constant += f.values()[0],
        }
    }
    let mut messages: Vec<Message> = Vec::new();
    let mut partitions = Vec::with_capacity(sequence.len());
    let mut scratch = vec![UNASSIGNED; n];
    let mut done = vec![false; n];
    for &var in sequence {
        done[var] = true;
        let contents = std::mem::take(&mut buckets[var]);
        let table = |id: FunctionId| -> &LogTable {
            match id {
                FunctionId::Factor(k) => &functions[k],
                FunctionId::Message(k) => &messages[k].table,
            }
        };
        let mut sorted = contents;
        sorted.sort_by_key(|&id| std::cmp::Reverse(table(id).vars().len()));
        let mut minis: Vec<(Vec<usize>, Vec<FunctionId>)> = Vec::new();
        for id in sorted {
            let scope = table(id).vars();
            let slot = minis.iter().position(|(s, _)| {
                let extra = scope.iter().filter(|v| !s.contains(v)).count();
                s.len() + extra <= i_bound
            });
            match slot {
                Some(k) => {
                    let (s, members) = &mut minis[k];
                    for &v in scope {
                        if !s.contains(&v) {
                            s.push(v);
                        }
                    }
                    members.push(id);
                }
                None => minis.push((scope.to_vec(), vec![id])),
            }
        }
        let mut produced = Vec::with_capacity(minis.len());
        for (_, members) in &minis {
            let tables: Vec<&LogTable> = members.iter().map(|&id| table(id)).collect();
            let (msg, _) = max_out(&tables, var, cards[var], cards, &mut scratch, max_entries)?;
            produced.push(msg);
        }
        for msg in produced {
            let destination = deepest(tree, msg.vars());
            let id = messages.len();
            match destination {
                Some(d) => {
                    if done[d] {
                        return Err(Error::InvalidParameter(format!(
                            "bucket {d} processed before its descendant {var}"
                        )));
                    }
                    buckets[d].push(FunctionId::Message(id));
                }
                None => constant += msg.values()[0],
            }
            messages.push(Message {
                table: msg,
                source: var,
                destination,
            });
        }
        partitions.push((var, minis.into_iter().map(|(_, m)| m).collect()));
    }
    if let Some(v) = (0..n).find(|&v| !buckets[v].is_empty()) {
        return Err(Error::InvalidParameter(format!(
            "functions left in bucket {v} outside the elimination sequence"
        )));
    }
    Ok(Elimination {
        messages,
        partitions,
        constant,
    })
}

/// Compiled static mini-bucket heuristic.
#[derive(Debug, Clone)]
pub struct MiniBucketTables {
    i_bound: usize,
    messages: Vec<Message>,
    partitions: Vec<Vec<Vec<FunctionId>>>,
    and_messages: Vec<Vec<usize>>,
    or_messages: Vec<Vec<usize>>,
    bound: f64,
}

impl MiniBucketTables {
    pub fn i_bound(&self) -> usize {
        self.i_bound
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Mini-buckets of the bucket of `var`.
    pub fn partition(&self, var: usize) -> &[Vec<FunctionId>] {
        &self.partitions[var]
    }

    /// Number of buckets that had to be split.
    pub fn split_buckets(&self) -> usize {
        self.partitions.iter().filter(|p| p.len() > 1).count()
    }

    /// Upper bound on the best log-value of the whole reduced network (the
    /// sum of all constant messages), excluding the evidence constant.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Messages bounding the subproblem of AND nodes of `var`.
    pub fn and_messages(&self, var: usize) -> &[usize] {
        &self.and_messages[var]
    }

    /// Bound for AND node `<var, assignment[var]>`.
    #[inline]
    pub fn and_bound(&self, var: usize, assignment: &[usize]) -> f64 {
        self.and_messages[var]
            .iter()
            .map(|&m| self.messages[m].table.value(assignment))
            .sum()
    }

    /// Bound for OR node `var` read directly off the messages leaving its
    /// subtree; never tighter than maximizing AND bounds over the values.
    pub fn or_bound(&self, var: usize, assignment: &[usize]) -> f64 {
        self.or_messages[var]
            .iter()
            .map(|&m| self.messages[m].table.value(assignment))
            .sum()
    }
}

fn message_budget(max_bytes: Option<usize>) -> usize {
    max_bytes.map_or(usize::MAX, |b| b / std::mem::size_of::<f64>())
}

/// Compiles static mini-bucket tables for the space's network along its
/// elimination order. `max_bytes` caps the size of any single message table.
pub fn compile_smb(space: &SearchSpace, i_bound: usize, max_bytes: Option<usize>) -> Result<MiniBucketTables> {
    if i_bound == 0 {
        return Err(Error::InvalidParameter("i-bound must be at least 1".into()));
    }
    let n = space.num_variables();
    let tree = space.tree();
    let elim = eliminate(
        space.order().order(),
        space.log_factors(),
        tree,
        space.network().domain_sizes(),
        i_bound,
        message_budget(max_bytes),
    )?;
    let mut partitions = vec![Vec::new(); n];
    for (v, p) in elim.partitions {
        partitions[v] = p;
    }
    let mut and_messages = vec![Vec::new(); n];
    let mut or_messages = vec![Vec::new(); n];
    for (id, m) in elim.messages.iter().enumerate() {
        // AND nodes of strict ancestors of the source down to the destination
        let mut x = tree.parent(m.source);
        while let Some(v) = x {
            and_messages[v].push(id);
            if Some(v) == m.destination {
                break;
            }
            x = tree.parent(v);
        }
        // OR nodes of the source and its ancestors strictly below the destination
        let mut x = Some(m.source);
        while let Some(v) = x {
            if Some(v) == m.destination {
                break;
            }
            or_messages[v].push(id);
            x = tree.parent(v);
        }
    }
    Ok(MiniBucketTables {
        i_bound,
        messages: elim.messages,
        partitions,
        and_messages,
        or_messages,
        bound: elim.constant,
    })
}

/// Upper bound on the value of AND nodes, used to guide search.
pub trait Heuristic: Sync {
    /// Bound on the value of `<var, assignment[var]>`; `assignment` holds at
    /// least the context of `var`.
    fn and_bound(&self, space: &SearchSpace, var: usize, assignment: &[usize]) -> Result<f64>;
}

impl Heuristic for MiniBucketTables {
    fn and_bound(&self, _space: &SearchSpace, var: usize, assignment: &[usize]) -> Result<f64> {
        Ok(MiniBucketTables::and_bound(self, var, assignment))
    }
}

/// Dynamic mini-bucket heuristic: a fresh elimination per evaluated node.
#[derive(Debug, Clone, Copy)]
pub struct DynamicMiniBuckets {
    pub i_bound: usize,
    pub max_bytes: Option<usize>,
}

impl Heuristic for DynamicMiniBuckets {
    fn and_bound(&self, space: &SearchSpace, var: usize, assignment: &[usize]) -> Result<f64> {
        dmb_below(space, self.i_bound, var, assignment, false, message_budget(self.max_bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicMode {
    Static,
    Dynamic,
}

/// Either heuristic behind one handle.
#[derive(Debug, Clone)]
pub enum HeuristicEvaluator {
    Static(MiniBucketTables),
    Dynamic(DynamicMiniBuckets),
}

impl HeuristicEvaluator {
    pub fn new(space: &SearchSpace, mode: HeuristicMode, i_bound: usize, max_bytes: Option<usize>) -> Result<Self> {
        match mode {
            HeuristicMode::Static => Ok(HeuristicEvaluator::Static(compile_smb(space, i_bound, max_bytes)?)),
            HeuristicMode::Dynamic => {
                if i_bound == 0 {
                    return Err(Error::InvalidParameter("i-bound must be at least 1".into()));
                }
                Ok(HeuristicEvaluator::Dynamic(DynamicMiniBuckets { i_bound, max_bytes }))
            }
        }
    }

    pub fn mode(&self) -> HeuristicMode {
        match self {
            HeuristicEvaluator::Static(_) => HeuristicMode::Static,
            HeuristicEvaluator::Dynamic(_) => HeuristicMode::Dynamic,
        }
    }

    pub fn i_bound(&self) -> usize {
        match self {
            HeuristicEvaluator::Static(t) => t.i_bound,
            HeuristicEvaluator::Dynamic(d) => d.i_bound,
        }
    }

    pub fn tables(&self) -> Option<&MiniBucketTables> {
        match self {
            HeuristicEvaluator::Static(t) => Some(t),
            HeuristicEvaluator::Dynamic(_) => None,
        }
    }
}

impl Heuristic for HeuristicEvaluator {
    fn and_bound(&self, space: &SearchSpace, var: usize, assignment: &[usize]) -> Result<f64> {
        match self {
            HeuristicEvaluator::Static(t) => Ok(t.and_bound(var, assignment)),
            HeuristicEvaluator::Dynamic(d) => d.and_bound(space, var, assignment),
        }
    }
}

fn check_context(space: &SearchSpace, var: usize, path: &[usize]) -> Result<()> {
    if path.len() != space.num_variables() {
        return Err(Error::InvalidAssignment("path must be a full-length vector".into()));
    }
    match space.contexts().ancestor_context(var).iter().find(|&&u| path[u] == UNASSIGNED) {
        Some(u) => Err(Error::InvalidAssignment(format!(
            "ancestor {u} of variable {var} is unassigned"
        ))),
        None => Ok(()),
    }
}

/// Heuristic value of `node` given the assignment of its ancestors. AND
/// nodes get the heuristic's bound; OR nodes maximize arc weight plus AND
/// bound over their values.
pub fn evaluate_h(h: &dyn Heuristic, space: &SearchSpace, path: &[usize], node: NodeRef) -> Result<f64> {
    let var = node.var();
    check_context(space, var, path)?;
    let mut a = path.to_vec();
    match node {
        NodeRef::And { var, value } => {
            a[var] = value;
            h.and_bound(space, var, &a)
        }
        NodeRef::Or { var } => {
            let mut best = f64::NEG_INFINITY;
            for value in 0..space.domain_size(var) {
                a[var] = value;
                let v = space.arc_weight(&a, var, value)? + h.and_bound(space, var, &a)?;
                best = best.max(v);
            }
            Ok(best)
        }
    }
}

fn dmb_below(
    space: &SearchSpace,
    i_bound: usize,
    var: usize,
    assignment: &[usize],
    include_var: bool,
    max_entries: usize,
) -> Result<f64> {
    let tree = space.tree();
    let order = space.order();
    let mut sequence: Vec<usize> = tree
        .subtree(var)
        .iter()
        .copied()
        .filter(|&v| include_var || v != var)
        .collect();
    sequence.sort_by_key(|&v| order.position(v));
    let functions: Vec<LogTable> = sequence
        .iter()
        .flat_map(|&v| space.placed_factors(v).iter())
        .map(|&k| space.log_factors()[k].condition(assignment))
        .collect();
    let elim = eliminate(
        &sequence,
        &functions,
        tree,
        space.network().domain_sizes(),
        i_bound,
        max_entries,
    )?;
    Ok(elim.constant)
}

/// Dynamic mini-bucket bound of `node`: mini-bucket elimination of the
/// subproblem below it after conditioning on `path`. For an OR node the
/// elimination includes the node's own bucket.
pub fn compute_dmb(
    space: &SearchSpace,
    i_bound: usize,
    path: &[usize],
    node: NodeRef,
    max_bytes: Option<usize>,
) -> Result<f64> {
    if i_bound == 0 {
        return Err(Error::InvalidParameter("i-bound must be at least 1".into()));
    }
    let var = node.var();
    check_context(space, var, path)?;
    let budget = message_budget(max_bytes);
    match node {
        NodeRef::And { var, value } => {
            let mut a = path.to_vec();
            a[var] = value;
            dmb_below(space, i_bound, var, &a, false, budget)
        }
        NodeRef::Or { var } => {
            let mut a = path.to_vec();
            a[var] = UNASSIGNED;
            dmb_below(space, i_bound, var, &a, true, budget)
        }
    }
}
