//! Shared fixtures and brute-force checks for the integration tests.
#![allow(dead_code)]

use andor_mpe::generators::{gen_grid, gen_random};
use andor_mpe::model::{BeliefNetwork, Factor};
use andor_mpe::search::SolveResult;
use andor_mpe::space::SearchSpace;
use andor_mpe::table::UNASSIGNED;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

pub fn close(a: f64, b: f64) -> bool {
    (a == b) || (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

/// P(A) = [0.4, 0.6], P(B | A) = [[0.8, 0.2], [0.1, 0.9]].
pub fn two_var_chain() -> BeliefNetwork {
    BeliefNetwork::new(
        vec![2, 2],
        vec![
            Factor::new(vec![0], vec![0.4, 0.6]),
            Factor::new(vec![0, 1], vec![0.8, 0.2, 0.1, 0.9]),
        ],
    )
    .unwrap()
}

/// Random network with n in [lo, hi], d in {2, 3}, c = n - 2, p = 2.
pub fn small_random(seed: u64, lo: usize, hi: usize) -> BeliefNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(lo..=hi);
    let d = rng.random_range(2..=3);
    gen_random(n, d, n - 2, 2, seed).unwrap()
}

/// Evidence-reduced 4x4 grid, 90% deterministic, 2 evidence variables.
pub fn small_grid(seed: u64) -> BeliefNetwork {
    let (net, ev) = gen_grid(4, 0.9, 2, seed).unwrap();
    net.apply_evidence(&ev).unwrap()
}

/// Exact value of the subproblem rooted at `var` in the pseudo-tree, with
/// the ancestors fixed by `path`: the max over assignments of the subtree
/// variables of the log-factors whose scope meets the subtree. With
/// `fixed_value`, `var` is pinned and the factors whose scope meets the
/// subtree only at `var` are left out (the AND-node subproblem).
pub fn subproblem_value(space: &SearchSpace, var: usize, path: &[usize], fixed_value: Option<usize>) -> f64 {
    let tree = space.tree();
    let net = space.network();
    let sub: Vec<usize> = tree.subtree(var).to_vec();
    let free: Vec<usize> = sub
        .iter()
        .copied()
        .filter(|&v| !(fixed_value.is_some() && v == var))
        .collect();
    let in_free = |v: usize| free.contains(&v);
    let tables: Vec<_> = net
        .log_factors()
        .into_iter()
        .filter(|t| t.vars().iter().any(|&v| in_free(v)))
        .collect();
    let mut x = path.to_vec();
    if let Some(a) = fixed_value {
        x[var] = a;
    }
    for &v in &free {
        x[v] = 0;
    }
    let mut best = f64::NEG_INFINITY;
    loop {
        let s: f64 = tables.iter().map(|t| t.value(&x)).sum();
        best = best.max(s);
        let mut k = 0;
        loop {
            if k == free.len() {
                return best;
            }
            let v = free[k];
            x[v] += 1;
            if x[v] < net.domain_size(v) {
                break;
            }
            x[v] = 0;
            k += 1;
        }
    }
}

/// Every assignment of the context of `var` (ancestors only), as full
/// path vectors.
pub fn context_assignments(space: &SearchSpace, var: usize) -> Vec<Vec<usize>> {
    let n = space.num_variables();
    let ctx = space.contexts().ancestor_context(var).to_vec();
    let mut out = Vec::new();
    let mut x = vec![UNASSIGNED; n];
    for &u in &ctx {
        x[u] = 0;
    }
    loop {
        out.push(x.clone());
        let mut k = 0;
        loop {
            if k == ctx.len() {
                return out;
            }
            let u = ctx[k];
            x[u] += 1;
            if x[u] < space.domain_size(u) {
                break;
            }
            x[u] = 0;
            k += 1;
        }
    }
}

/// The returned assignment's log-probability and the solution-tree weight
/// both match the reported value.
pub fn check_identity(net: &BeliefNetwork, r: &SolveResult) -> bool {
    let (Some(v), Some(x), Some(w)) = (r.mpe_log_value, r.assignment.as_ref(), r.solution_weight) else {
        return false;
    };
    let lp = net.log_probability(x).unwrap();
    if v == f64::NEG_INFINITY {
        return lp == f64::NEG_INFINITY && w == f64::NEG_INFINITY;
    }
    close(lp, v) && close(w, lp)
}

/// Distinct cache entries per variable never exceed the context size.
pub fn check_cache_bound(space: &SearchSpace, r: &SolveResult) -> bool {
    r.stats
        .cache_entries_per_var
        .iter()
        .enumerate()
        .all(|(v, &k)| (k as u128) <= space.context_size(v))
}
