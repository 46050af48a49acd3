//! Depth-first AND/OR branch-and-bound with context caching.

use std::collections::HashMap;
use std::mem::size_of;
use std::rc::Rc;

use super::{value_evaluations, Deadline, SearchOptions, SearchStats, SolveResult, Status};
use crate::error::{Error, Result};
use crate::heuristics::Heuristic;
use crate::space::SearchSpace;
use crate::table::UNASSIGNED;

/// Chosen value of a variable and the chosen subtrees of its children, with
/// the weight of the arc into each.
struct Sol {
    var: usize,
    value: usize,
    children: Vec<(f64, Rc<Sol>)>,
}

enum Abort {
    Timeout,
    Memout,
    Failed(Error),
}

impl From<Error> for Abort {
    fn from(e: Error) -> Self {
        Abort::Failed(e)
    }
}

/// Pseudo-trees taller than this are searched on a thread with a larger stack.
const INLINE_HEIGHT: usize = 256;

struct Bnb<'a> {
    space: &'a SearchSpace,
    heuristic: &'a dyn Heuristic,
    options: SearchOptions,
    cache: Vec<HashMap<u64, (f64, Rc<Sol>)>>,
    path: Vec<usize>,
    stats: SearchStats,
    deadline: Deadline,
    bytes: usize,
    root_best: f64,
}

type Found<T> = std::result::Result<Option<T>, Abort>;

impl Bnb<'_> {
    fn check_limits(&self) -> std::result::Result<(), Abort> {
        if self.stats.expansions.is_multiple_of(256) && self.deadline.expired() {
            return Err(Abort::Timeout);
        }
        if self.options.limits.memory_limit.is_some_and(|l| self.bytes > l) {
            return Err(Abort::Memout);
        }
        Ok(())
    }

    /// Best value of OR node `var` under the current path, if it exceeds
    /// `bound`. Returns (value, weight of chosen arc, chosen subtree).
    fn or_node(&mut self, var: usize, bound: f64, weights: &[f64], hs: &[f64]) -> Found<(f64, f64, Rc<Sol>)> {
        self.stats.expansions += 1;
        self.stats.or_nodes += 1;
        self.check_limits()?;
        let mut order: Vec<usize> = (0..weights.len()).collect();
        // stable: equal estimates keep ascending values
        order.sort_by(|&a, &b| (weights[b] + hs[b]).total_cmp(&(weights[a] + hs[a])));
        let mut best = f64::NEG_INFINITY;
        let mut chosen: Option<(f64, Rc<Sol>)> = None;
        let is_root = self.space.tree().parent(var).is_none();
        for value in order {
            let threshold = best.max(bound);
            let (w, h) = (weights[value], hs[value]);
            if w + h <= threshold {
                break;
            }
            self.path[var] = value;
            let r = self.and_node(var, value, threshold - w);
            self.path[var] = UNASSIGNED;
            if let Some((v, sol)) = r? {
                if w + v > best {
                    best = w + v;
                    chosen = Some((w, sol));
                    if is_root {
                        self.root_best = self.root_best.max(best);
                    }
                }
            }
        }
        match chosen {
            Some((w, sol)) if best > bound => Ok(Some((best, w, sol))),
            _ => Ok(None),
        }
    }

    /// Exact value of AND node `<var, value>` (already on the path) if it
    /// exceeds `bound`.
    fn and_node(&mut self, var: usize, value: usize, bound: f64) -> Found<(f64, Rc<Sol>)> {
        let space = self.space;
        let tree = space.tree();
        let children = tree.children(var);
        if children.is_empty() {
            return Ok((0.0 > bound).then(|| {
                (
                    0.0,
                    Rc::new(Sol {
                        var,
                        value,
                        children: Vec::new(),
                    }),
                )
            }));
        }
        let ctx = space.contexts().context(var);
        let dead = self.options.dead_cache_elimination && ctx.len() == tree.depth(var) + 1;
        let key = if self.options.caching && !dead {
            space.context_key(ctx, &self.path)
        } else {
            None
        };
        if let Some(k) = key {
            if let Some((v, sol)) = self.cache[var].get(&k) {
                self.stats.cache_hits += 1;
                return Ok((*v > bound).then(|| (*v, Rc::clone(sol))));
            }
        }
        self.stats.expansions += 1;
        self.stats.and_nodes += 1;
        self.check_limits()?;

        let mut evals = Vec::with_capacity(children.len());
        let mut estimates = Vec::with_capacity(children.len());
        for &c in children {
            let (w, h) = value_evaluations(space, self.heuristic, c, &mut self.path)?;
            let est = w.iter().zip(&h).map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
            estimates.push(est);
            evals.push((w, h));
        }
        // suffix[k] = sum of estimates of children k..
        let mut suffix = vec![0.0; children.len() + 1];
        for k in (0..children.len()).rev() {
            suffix[k] = suffix[k + 1] + estimates[k];
        }
        if suffix[0] <= bound {
            return Ok(None);
        }
        let mut acc = 0.0;
        let mut chosen = Vec::with_capacity(children.len());
        for (k, &c) in children.iter().enumerate() {
            let child_bound = bound - acc - suffix[k + 1];
            let (w, h) = &evals[k];
            match self.or_node(c, child_bound, w, h)? {
                Some((v, cw, sol)) => {
                    acc += v;
                    chosen.push((cw, sol));
                }
                None => return Ok(None),
            }
        }
        let sol = Rc::new(Sol {
            var,
            value,
            children: chosen,
        });
        if let Some(k) = key {
            self.cache[var].insert(k, (acc, Rc::clone(&sol)));
            self.stats.cache_entries += 1;
            self.stats.cache_entries_per_var[var] += 1;
            self.bytes += size_of::<(u64, f64, Rc<Sol>)>() + size_of::<Sol>() + 16 * children.len() + 16;
        }
        Ok(Some((acc, sol)))
    }
}

fn collect(sol: &Sol, x: &mut [usize], weight: &mut f64) {
    let mut stack = vec![sol];
    while let Some(s) = stack.pop() {
        x[s.var] = s.value;
        for (w, c) in &s.children {
            *weight += w;
            stack.push(c);
        }
    }
}

fn run(space: &SearchSpace, heuristic: &dyn Heuristic, options: &SearchOptions) -> Result<SolveResult> {
    let n = space.num_variables();
    let mut bnb = Bnb {
        space,
        heuristic,
        options: *options,
        cache: vec![HashMap::new(); n],
        path: vec![UNASSIGNED; n],
        stats: SearchStats {
            cache_entries_per_var: vec![0; n],
            ..SearchStats::default()
        },
        deadline: Deadline::new(options.limits.time_limit),
        bytes: 0,
        root_best: f64::NEG_INFINITY,
    };
    let Some(root) = space.tree().root() else {
        return Ok(SolveResult::solved(space, 0.0, Vec::new(), 0.0, bnb.stats));
    };
    if bnb.deadline.expired() {
        bnb.stats.elapsed = bnb.deadline.elapsed();
        return Ok(SolveResult::aborted(space, Status::Timeout, None, None, bnb.stats));
    }
    let (w, h) = value_evaluations(space, heuristic, root, &mut bnb.path)?;
    let root_h = w.iter().zip(&h).map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
    let outcome = bnb.or_node(root, f64::NEG_INFINITY, &w, &h);
    bnb.stats.elapsed = bnb.deadline.elapsed();
    let lower = (bnb.root_best > f64::NEG_INFINITY).then_some(bnb.root_best);
    match outcome {
        Ok(Some((value, w, sol))) => {
            let mut x = vec![0; n];
            let mut weight = w;
            collect(&sol, &mut x, &mut weight);
            Ok(SolveResult::solved(space, value, x, weight, bnb.stats))
        }
        Ok(None) => {
            // every assignment has probability zero; any one is a witness
            let x = vec![0; n];
            let weight = space.solution_log_value(&x) - space.network().log_constant();
            Ok(SolveResult::solved(space, f64::NEG_INFINITY, x, weight, bnb.stats))
        }
        Err(Abort::Timeout) => Ok(SolveResult::aborted(space, Status::Timeout, Some(root_h), lower, bnb.stats)),
        Err(Abort::Memout) => Ok(SolveResult::aborted(space, Status::Memout, Some(root_h), lower, bnb.stats)),
        Err(Abort::Failed(e)) => Err(e),
    }
}

/// Depth-first branch-and-bound for the MPE of `space`. Subproblems whose
/// bound does not exceed the current threshold are pruned, so among equally
/// good solutions the first one found is returned.
pub fn aobb(space: &SearchSpace, heuristic: &dyn Heuristic, options: &SearchOptions) -> Result<SolveResult> {
    let height = space.height();
    if height <= INLINE_HEIGHT {
        return run(space, heuristic, options);
    }
    let stack = (64 << 20).max(height.saturating_mul(16 << 10));
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .name("aobb".into())
            .stack_size(stack)
            .spawn_scoped(scope, || run(space, heuristic, options))
            .map_err(Error::Io)?
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}
