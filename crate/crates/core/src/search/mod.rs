//! Search over the context-minimal AND/OR graph.
//!
//! [`aobf`] is best-first AO* search: it repeatedly expands a tip of the
//! current best partial solution tree and revises values bottom-up.
//! [`aobb`] is depth-first AND/OR branch-and-bound with context caching.
//! Both count one node per expansion event; linked cache hits are counted
//! separately.

mod aobb;
mod aobf;

use std::time::{Duration, Instant};

pub use aobb::aobb;
pub use aobf::{aobf, select_tip, AobfSearch, NodeId, PartialSolutionTree, Tip};

use crate::error::Result;
use crate::heuristics::Heuristic;
use crate::space::SearchSpace;
use crate::table::UNASSIGNED;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Limits {
    pub time_limit: Option<Duration>,
    /// Approximate bytes for the explicated graph and cache.
    pub memory_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Solved,
    Timeout,
    Memout,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Solved => "solved",
            Status::Timeout => "timeout",
            Status::Memout => "memout",
        }
    }
}

/// Which nonterminal tip of the best partial solution tree AOBF expands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TipPolicy {
    /// Deepest tip; ties go to the earlier variable in pseudo-tree preorder.
    #[default]
    Deepest,
    /// Shallowest tip, same tie-break.
    Shallowest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub limits: Limits,
    /// AOBB only: reuse solved AND nodes by context.
    pub caching: bool,
    /// AOBB only: skip storing nodes whose context is their whole path.
    pub dead_cache_elimination: bool,
    pub tip_policy: TipPolicy,
    /// Record invariant checks (partial tree evaluations, value increases).
    pub instrument: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            limits: Limits::default(),
            caching: true,
            dead_cache_elimination: false,
            tip_policy: TipPolicy::Deepest,
            instrument: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Instrumentation {
    /// Smallest evaluation of any partial solution tree selected for expansion.
    pub min_selected_evaluation: f64,
    /// Revisions that raised a node value.
    pub value_increases: u64,
    /// Expanded nodes as (variable, value or `None` for OR nodes), in order.
    pub expansion_trace: Vec<(usize, Option<usize>)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    /// Expansion events ("nodes visited").
    pub expansions: u64,
    pub cache_hits: u64,
    pub cache_entries: u64,
    /// Cached AND nodes per variable.
    pub cache_entries_per_var: Vec<u64>,
    pub or_nodes: u64,
    pub and_nodes: u64,
    pub elapsed: Duration,
    pub instrumentation: Option<Instrumentation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    /// Natural-log MPE value including the evidence constant; `None` unless
    /// solved.
    pub mpe_log_value: Option<f64>,
    /// Maximizing assignment over the reduced network's variables.
    pub assignment: Option<Vec<usize>>,
    /// Sum of the arc weights on the returned solution tree plus the
    /// evidence constant.
    pub solution_weight: Option<f64>,
    /// Best known upper bound (AOBF root value when aborted).
    pub upper_bound: Option<f64>,
    /// Best known lower bound (AOBB root incumbent when aborted).
    pub lower_bound: Option<f64>,
    pub stats: SearchStats,
    pub induced_width: usize,
    pub height: usize,
}

impl SolveResult {
    pub(crate) fn solved(space: &SearchSpace, value: f64, assignment: Vec<usize>, weight: f64, stats: SearchStats) -> Self {
        let c = space.network().log_constant();
        SolveResult {
            status: Status::Solved,
            mpe_log_value: Some(value + c),
            assignment: Some(assignment),
            solution_weight: Some(weight + c),
            upper_bound: Some(value + c),
            lower_bound: Some(value + c),
            stats,
            induced_width: space.induced_width(),
            height: space.height(),
        }
    }

    pub(crate) fn aborted(space: &SearchSpace, status: Status, upper: Option<f64>, lower: Option<f64>, stats: SearchStats) -> Self {
        let c = space.network().log_constant();
        SolveResult {
            status,
            mpe_log_value: None,
            assignment: None,
            solution_weight: None,
            upper_bound: upper.map(|u| u + c),
            lower_bound: lower.map(|l| l + c),
            stats,
            induced_width: space.induced_width(),
            height: space.height(),
        }
    }
}

pub(crate) struct Deadline {
    start: Instant,
    limit: Option<Duration>,
}

impl Deadline {
    pub(crate) fn new(limit: Option<Duration>) -> Self {
        Deadline {
            start: Instant::now(),
            limit,
        }
    }

    pub(crate) fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }

    pub(crate) fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

/// Arc weights and AND-node heuristic values for every value of `var`;
/// `assignment` must hold the context of `var` (its own slot is clobbered
/// and reset).
pub(crate) fn value_evaluations(
    space: &SearchSpace,
    heuristic: &dyn Heuristic,
    var: usize,
    assignment: &mut [usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = space.domain_size(var);
    let mut weights = Vec::with_capacity(d);
    let mut hs = Vec::with_capacity(d);
    for value in 0..d {
        assignment[var] = value;
        weights.push(space.weight_at(assignment, var));
        hs.push(if space.tree().is_leaf(var) {
            0.0
        } else {
            heuristic.and_bound(space, var, assignment)?
        });
    }
    assignment[var] = UNASSIGNED;
    Ok((weights, hs))
}

/// Maximum of `w + h` with the lowest maximizing index.
pub(crate) fn best_value(weights: &[f64], values: impl Iterator<Item = f64>) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (k, v) in values.enumerate() {
        let s = weights[k] + v;
        if s > best {
            best = s;
            arg = k;
        }
    }
    (best, arg)
}
