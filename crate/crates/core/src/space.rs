//! The weighted AND/OR search space of an evidence-reduced network: pseudo
//! tree, contexts and the placement of each CPT on the arc that completes its
//! scope.

use crate::error::{Error, Result};
use crate::model::BeliefNetwork;
use crate::structure::{
    build_pseudo_tree, compute_contexts, min_fill_order, validate_pseudo_tree, ContextTable,
    EliminationOrder, PseudoTree,
};
use crate::table::{LogTable, UNASSIGNED};

#[derive(Debug, Clone)]
pub struct SearchSpace {
    net: BeliefNetwork,
    order: EliminationOrder,
    tree: PseudoTree,
    contexts: ContextTable,
    log_factors: Vec<LogTable>,
    placed: Vec<Vec<usize>>,
}

impl SearchSpace {
    /// Min-fill order (seeded), bucket pseudo-tree and contexts for `net`.
    pub fn build(net: BeliefNetwork, seed: u64) -> Self {
        let g = net.primal_graph();
        let order = min_fill_order(&g, seed);
        let tree = build_pseudo_tree(&g, &order);
        let contexts = compute_contexts(&tree, &g);
        SearchSpace::from_parts(net, order, tree, contexts).expect("consistent by construction")
    }

    /// Assembles a space from given parts. The tree must be a pseudo-tree of
    /// the primal graph and every parent must be eliminated after its child.
    pub fn from_parts(
        net: BeliefNetwork,
        order: EliminationOrder,
        tree: PseudoTree,
        contexts: ContextTable,
    ) -> Result<Self> {
        let n = net.num_variables();
        if order.len() != n || tree.len() != n || contexts.len() != n {
            return Err(Error::InvalidParameter("order, tree and contexts must cover the network".into()));
        }
        if !validate_pseudo_tree(&tree, &net.primal_graph()) {
            return Err(Error::InvalidParameter("tree is not a pseudo-tree of the primal graph".into()));
        }
        if (0..n).any(|v| tree.parent(v).is_some_and(|p| order.position(p) < order.position(v))) {
            return Err(Error::InvalidParameter(
                "elimination order must eliminate children before parents".into(),
            ));
        }
        let log_factors = net.log_factors();
        let mut placed = vec![Vec::new(); n];
        for (k, f) in log_factors.iter().enumerate() {
            let deepest = *f.vars().iter().max_by_key(|&&v| tree.depth(v)).unwrap();
            placed[deepest].push(k);
        }
        Ok(SearchSpace {
            net,
            order,
            tree,
            contexts,
            log_factors,
            placed,
        })
    }

    pub fn network(&self) -> &BeliefNetwork {
        &self.net
    }

    pub fn num_variables(&self) -> usize {
        self.net.num_variables()
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.net.domain_size(var)
    }

    pub fn order(&self) -> &EliminationOrder {
        &self.order
    }

    pub fn tree(&self) -> &PseudoTree {
        &self.tree
    }

    pub fn contexts(&self) -> &ContextTable {
        &self.contexts
    }

    pub fn log_factors(&self) -> &[LogTable] {
        &self.log_factors
    }

    /// Factors whose deepest scope variable is `var`; they are evaluated on
    /// the arcs into the AND nodes of `var`.
    pub fn placed_factors(&self, var: usize) -> &[usize] {
        &self.placed[var]
    }

    pub fn induced_width(&self) -> usize {
        self.order.induced_width()
    }

    pub fn height(&self) -> usize {
        self.tree.height()
    }

    /// Log weight of the arc from OR node `var` to AND node `<var, value>`
    /// under `path`, which must assign every scope variable of the factors
    /// placed at `var` other than `var` itself.
    pub fn arc_weight(&self, path: &[usize], var: usize, value: usize) -> Result<f64> {
        let mut w = 0.0;
        for &k in &self.placed[var] {
            w += self.log_factors[k].try_value_with(path, var, value)?;
        }
        Ok(w)
    }

    /// Arc weight where `assignment` already holds the value of `var`.
    #[inline]
    pub(crate) fn weight_at(&self, assignment: &[usize], var: usize) -> f64 {
        self.placed[var]
            .iter()
            .map(|&k| self.log_factors[k].value(assignment))
            .sum()
    }

    /// Sum of all arc weights of the solution tree selecting `x`, plus the
    /// evidence constant; equals the joint log-probability of `x`.
    pub fn solution_log_value(&self, x: &[usize]) -> f64 {
        self.net.log_constant() + (0..self.num_variables()).map(|v| self.weight_at(x, v)).sum::<f64>()
    }

    /// Mixed-radix index of the values of `vars` in `assignment`, or `None`
    /// when the product of their domains does not fit in a `u64`.
    pub(crate) fn context_key(&self, vars: &[usize], assignment: &[usize]) -> Option<u64> {
        let mut key: u64 = 0;
        for &v in vars {
            let a = assignment[v];
            debug_assert_ne!(a, UNASSIGNED);
            key = key
                .checked_mul(self.net.domain_size(v) as u64)?
                .checked_add(a as u64)?;
        }
        Some(key)
    }

    /// Product of domain sizes over the context of `var` (saturating).
    pub fn context_size(&self, var: usize) -> u128 {
        self.contexts
            .context(var)
            .iter()
            .fold(1u128, |acc, &v| acc.saturating_mul(self.net.domain_size(v) as u128))
    }
}
