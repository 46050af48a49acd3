//! Exact reference solvers: exhaustive enumeration and bucket elimination.
//! Both work on the (evidence-reduced) network directly and share nothing
//! with the search code beyond table lookups.

use crate::error::{Error, Result};
use crate::model::BeliefNetwork;
use crate::structure::min_fill_order;
use crate::table::{max_out, LogTable, UNASSIGNED};

/// Default cap on the number of full assignments [`enumerate_mpe`] visits.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Natural-log MPE value, including the evidence constant.
    pub log_value: f64,
    pub assignment: Vec<usize>,
}

/// Visits every assignment in lexicographic order and keeps the first one
/// with the largest joint probability.
pub fn enumerate_mpe(net: &BeliefNetwork, cap: u128) -> Result<OracleResult> {
    let n = net.num_variables();
    let size = net
        .domain_sizes()
        .iter()
        .fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    let tables = net.log_factors();
    // each factor is added once its highest-numbered variable is set
    let mut at_depth: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut constant = net.log_constant();
    for (k, t) in tables.iter().enumerate() {
        match t.vars().iter().max() {
            Some(&v) => at_depth[v].push(k),
            None => constant += t.values()[0],
        }
    }
    if n == 0 {
        return Ok(OracleResult {
            log_value: constant,
            assignment: Vec::new(),
        });
    }
    let cards = net.domain_sizes();
    let mut x = vec![UNASSIGNED; n];
    let mut partial = vec![0.0; n + 1];
    let mut best = f64::NEG_INFINITY;
    let mut best_x: Option<Vec<usize>> = None;
    let mut depth = 0;
    x[0] = 0;
    loop {
        let v = depth;
        let s = partial[v] + at_depth[v].iter().map(|&k| tables[k].value(&x)).sum::<f64>();
        if v + 1 == n {
            if s > best || best_x.is_none() {
                best = s;
                best_x = Some(x.clone());
            }
        } else {
            partial[v + 1] = s;
            depth += 1;
            x[depth] = 0;
            continue;
        }
        // advance to the next assignment
        loop {
            x[depth] += 1;
            if x[depth] < cards[depth] {
                break;
            }
            x[depth] = UNASSIGNED;
            if depth == 0 {
                return Ok(OracleResult {
                    log_value: best + constant,
                    assignment: best_x.expect("at least one assignment"),
                });
            }
            depth -= 1;
        }
    }
}

/// Exact bucket elimination along `order` (min-fill with seed 0 when
/// `None`), followed by argmax back-substitution. Messages larger than
/// `max_entries` entries are refused.
pub fn bucket_elimination_mpe(net: &BeliefNetwork, order: Option<&[usize]>, max_entries: usize) -> Result<OracleResult> {
    let n = net.num_variables();
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut seen = vec![false; n];
            if o.len() != n || o.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
                return Err(Error::InvalidParameter("order must be a permutation of the variables".into()));
            }
            o.to_vec()
        }
        None => min_fill_order(&net.primal_graph(), 0).order().to_vec(),
    };
    let mut position = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    let mut buckets: Vec<Vec<LogTable>> = vec![Vec::new(); n];
    let mut constant = net.log_constant();
    let place = |t: LogTable, buckets: &mut Vec<Vec<LogTable>>, constant: &mut f64| match t
        .vars()
        .iter()
        .min_by_key(|&&v| position[v])
    {
        Some(&v) => buckets[v].push(t),
        None => *constant += t.values()[0],
    };
    for t in net.log_factors() {
        place(t, &mut buckets, &mut constant);
    }
    let cards = net.domain_sizes();
    let mut scratch = vec![UNASSIGNED; n];
    let mut argmax: Vec<Option<LogTable>> = vec![None; n];
    for &v in &order {
        let bucket = std::mem::take(&mut buckets[v]);
        let refs: Vec<&LogTable> = bucket.iter().collect();
        let (msg, arg) = max_out(&refs, v, cards[v], cards, &mut scratch, max_entries)?;
        // argmax indexed like the message
        let index = LogTable::new(
            msg.vars().to_vec(),
            msg.cards().to_vec(),
            arg.iter().map(|&a| a as f64).collect(),
        );
        argmax[v] = Some(index);
        place(msg, &mut buckets, &mut constant);
    }
    let mut x = vec![UNASSIGNED; n];
    for &v in order.iter().rev() {
        let index = argmax[v].as_ref().expect("every bucket processed");
        x[v] = index.value(&x) as usize;
    }
    Ok(OracleResult {
        log_value: constant,
        assignment: x,
    })
}
