//! Dense log-space tables over small variable scopes.
//!
//! A [`LogTable`] stores natural-log values in row-major order over its scope
//! (the last scope variable varies fastest). Values are looked up against a
//! full-length assignment vector indexed by variable, where unassigned
//! positions hold [`UNASSIGNED`].

use crate::error::{Error, Result};

/// Marker for an unassigned slot in a full-length assignment vector.
pub const UNASSIGNED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct LogTable {
    vars: Vec<usize>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<f64>,
}

fn strides_for(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![0; cards.len()];
    let mut acc = 1;
    for k in (0..cards.len()).rev() {
        strides[k] = acc;
        acc *= cards[k];
    }
    strides
}

/// Number of entries of a table over `cards`, or `None` on overflow.
pub fn table_size(cards: &[usize]) -> Option<usize> {
    cards.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c))
}

impl LogTable {
    pub fn new(vars: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(vars.len(), cards.len());
        assert_eq!(table_size(&cards), Some(values.len()));
        let strides = strides_for(&cards);
        LogTable {
            vars,
            cards,
            strides,
            values,
        }
    }

    pub fn constant(value: f64) -> Self {
        LogTable::new(Vec::new(), Vec::new(), vec![value])
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.contains(&var)
    }

    /// Value at the point selected by `assignment`. Every scope variable must
    /// be assigned.
    #[inline]
    pub fn value(&self, assignment: &[usize]) -> f64 {
        let mut idx = 0;
        for (k, &v) in self.vars.iter().enumerate() {
            let a = assignment[v];
            debug_assert!(a < self.cards[k], "variable {v} unassigned or out of range");
            idx += a * self.strides[k];
        }
        self.values[idx]
    }

    /// Like [`value`](Self::value) but reports unassigned scope variables.
    pub fn try_value(&self, assignment: &[usize]) -> Result<f64> {
        let mut idx = 0;
        for (k, &v) in self.vars.iter().enumerate() {
            let a = assignment.get(v).copied().unwrap_or(UNASSIGNED);
            if a >= self.cards[k] {
                return Err(Error::InvalidAssignment(format!(
                    "scope variable {v} is unassigned or out of range"
                )));
            }
            idx += a * self.strides[k];
        }
        Ok(self.values[idx])
    }

    /// Value at `assignment` with `var` overridden to `value`. Reports
    /// unassigned scope variables.
    pub fn try_value_with(&self, assignment: &[usize], var: usize, value: usize) -> Result<f64> {
        let mut idx = 0;
        for (k, &v) in self.vars.iter().enumerate() {
            let a = if v == var {
                value
            } else {
                assignment.get(v).copied().unwrap_or(UNASSIGNED)
            };
            if a >= self.cards[k] {
                return Err(Error::InvalidAssignment(format!(
                    "scope variable {v} is unassigned or out of range"
                )));
            }
            idx += a * self.strides[k];
        }
        Ok(self.values[idx])
    }

    /// Restricts the table to the assigned entries of `assignment`, dropping
    /// those variables from the scope.
    pub fn condition(&self, assignment: &[usize]) -> LogTable {
        let mut keep_vars = Vec::new();
        let mut keep_cards = Vec::new();
        let mut keep_strides = Vec::new();
        let mut base = 0;
        for (k, &v) in self.vars.iter().enumerate() {
            let a = assignment.get(v).copied().unwrap_or(UNASSIGNED);
            if a == UNASSIGNED {
                keep_vars.push(v);
                keep_cards.push(self.cards[k]);
                keep_strides.push(self.strides[k]);
            } else {
                base += a * self.strides[k];
            }
        }
        if keep_vars.len() == self.vars.len() {
            return self.clone();
        }
        let size = table_size(&keep_cards).expect("sub-table of an existing table");
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; keep_vars.len()];
        let mut offset = base;
        for _ in 0..size {
            values.push(self.values[offset]);
            for k in (0..counter.len()).rev() {
                counter[k] += 1;
                offset += keep_strides[k];
                if counter[k] < keep_cards[k] {
                    break;
                }
                offset -= keep_strides[k] * keep_cards[k];
                counter[k] = 0;
            }
        }
        LogTable::new(keep_vars, keep_cards, values)
    }
}

/// Scope of the combination of `tables` with `eliminated` removed, sorted by
/// variable id.
pub fn combined_scope(tables: &[&LogTable], eliminated: Option<usize>) -> Vec<usize> {
    let mut scope: Vec<usize> = tables
        .iter()
        .flat_map(|t| t.vars.iter().copied())
        .filter(|&v| Some(v) != eliminated)
        .collect();
    scope.sort_unstable();
    scope.dedup();
    scope
}

/// Sums `tables` and maximizes `var` out. Returns the resulting table and,
/// for each of its entries, the lowest maximizing value of `var`.
///
/// `scratch` is a full-length assignment vector whose entries for the
/// involved variables are clobbered and reset to [`UNASSIGNED`].
pub fn max_out(
    tables: &[&LogTable],
    var: usize,
    var_card: usize,
    cards_of: &[usize],
    scratch: &mut [usize],
    max_entries: usize,
) -> Result<(LogTable, Vec<usize>)> {
    let out_vars = combined_scope(tables, Some(var));
    let out_cards: Vec<usize> = out_vars.iter().map(|&v| cards_of[v]).collect();
    let size = table_size(&out_cards)
        .filter(|&s| s <= max_entries)
        .ok_or_else(|| {
            Error::MemoryBudget(format!(
                "message over {} variables exceeds {max_entries} entries",
                out_vars.len()
            ))
        })?;
    let mut values = Vec::with_capacity(size);
    let mut argmax = Vec::with_capacity(size);
    for &v in &out_vars {
        scratch[v] = 0;
    }
    for _ in 0..size {
        let mut best = f64::NEG_INFINITY;
        let mut best_val = 0;
        for x in 0..var_card {
            scratch[var] = x;
            let s: f64 = tables.iter().map(|t| t.value(scratch)).sum();
            if s > best {
                best = s;
                best_val = x;
            }
        }
        values.push(best);
        argmax.push(best_val);
        for k in (0..out_vars.len()).rev() {
            let v = out_vars[k];
            scratch[v] += 1;
            if scratch[v] < out_cards[k] {
                break;
            }
            scratch[v] = 0;
        }
    }
    scratch[var] = UNASSIGNED;
    for &v in &out_vars {
        scratch[v] = UNASSIGNED;
    }
    Ok((LogTable::new(out_vars, out_cards, values), argmax))
}
