//! Belief networks: CPT factors, evidence, the UAI text format, the moral
//! graph and joint log-probabilities.
//!
//! Variables are addressed internally by their position `0..n`. A network
//! produced by [`BeliefNetwork::apply_evidence`] keeps the ids of the
//! original network it was reduced from (see [`BeliefNetwork::variable_ids`])
//! so that solutions can be reported against the input file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::table::LogTable;

/// Partial or total mapping from variable id to value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<usize, usize>);

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn insert(&mut self, var: usize, value: usize) -> Option<usize> {
        self.0.insert(var, value)
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pairs in increasing variable order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    /// Dense vector of length `n`; fails unless every `0..n` is assigned.
    pub fn to_dense(&self, n: usize) -> Result<Vec<usize>> {
        (0..n)
            .map(|v| {
                self.get(v)
                    .ok_or_else(|| Error::InvalidAssignment(format!("variable {v} unassigned")))
            })
            .collect()
    }

    /// `var=value` pairs separated by spaces.
    pub fn to_pairs_string(&self) -> String {
        self.iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromIterator<(usize, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// A conditional probability table. The last scope variable is the child;
/// the table is row-major over the scope.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, table: Vec<f64>) -> Self {
        Factor { scope, table }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn child(&self) -> Option<usize> {
        self.scope.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefNetwork {
    ids: Vec<usize>,
    domain_sizes: Vec<usize>,
    factors: Vec<Factor>,
    evidence: Assignment,
    log_constant: f64,
}

impl BeliefNetwork {
    /// Builds a network over variables `0..domain_sizes.len()`.
    pub fn new(domain_sizes: Vec<usize>, factors: Vec<Factor>) -> Result<Self> {
        let n = domain_sizes.len();
        if let Some(v) = domain_sizes.iter().position(|&d| d == 0) {
            return Err(Error::InvalidNetwork(format!("variable {v} has an empty domain")));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(Error::InvalidNetwork(format!("factor {k} has an empty scope")));
            }
            let mut seen = vec![false; n];
            let mut size = 1usize;
            for &v in &f.scope {
                if v >= n {
                    return Err(Error::InvalidNetwork(format!(
                        "factor {k} mentions undeclared variable {v}"
                    )));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidNetwork(format!(
                        "factor {k} repeats variable {v}"
                    )));
                }
                size = size.checked_mul(domain_sizes[v]).ok_or_else(|| {
                    Error::InvalidNetwork(format!("factor {k} table size overflows"))
                })?;
            }
            if size != f.table.len() {
                return Err(Error::InvalidNetwork(format!(
                    "factor {k}: table length mismatch (expected {size}, got {})",
                    f.table.len()
                )));
            }
            if let Some(x) = f.table.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "factor {k} has invalid entry {x}"
                )));
            }
        }
        Ok(BeliefNetwork {
            ids: (0..n).collect(),
            domain_sizes,
            factors,
            evidence: Assignment::new(),
            log_constant: 0.0,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.domain_sizes.len()
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.domain_sizes[var]
    }

    pub fn max_domain_size(&self) -> usize {
        self.domain_sizes.iter().copied().max().unwrap_or(1)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// External id of each variable (identity unless evidence was applied).
    pub fn variable_ids(&self) -> &[usize] {
        &self.ids
    }

    /// Evidence already folded into this network, keyed by external id.
    pub fn evidence(&self) -> &Assignment {
        &self.evidence
    }

    /// Log of the product of all factors that became constant under evidence.
    pub fn log_constant(&self) -> f64 {
        self.log_constant
    }

    /// Factor `k` as a natural-log table.
    pub fn log_factor(&self, k: usize) -> LogTable {
        let f = &self.factors[k];
        LogTable::new(
            f.scope.clone(),
            f.scope.iter().map(|&v| self.domain_sizes[v]).collect(),
            f.table.iter().map(|&p| p.ln()).collect(),
        )
    }

    pub fn log_factors(&self) -> Vec<LogTable> {
        (0..self.factors.len()).map(|k| self.log_factor(k)).collect()
    }

    /// Indices of factors with a row (fixed parent values) that does not sum
    /// to one within `tol`.
    pub fn unnormalized_factors(&self, tol: f64) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                let child_card = self.domain_sizes[*f.scope.last().unwrap()];
                f.table
                    .chunks(child_card)
                    .any(|row| (row.iter().sum::<f64>() - 1.0).abs() > tol)
            })
            .map(|(k, _)| k)
            .collect()
    }

    fn check_total(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.num_variables() {
            return Err(Error::InvalidAssignment(format!(
                "expected {} values, got {}",
                self.num_variables(),
                x.len()
            )));
        }
        if let Some((v, &a)) = x
            .iter()
            .enumerate()
            .find(|(v, &a)| a >= self.domain_sizes[*v])
        {
            return Err(Error::InvalidAssignment(format!(
                "value {a} outside the domain of variable {v}"
            )));
        }
        Ok(())
    }

    fn entry(&self, f: &Factor, x: &[usize]) -> f64 {
        let mut idx = 0;
        for &v in &f.scope {
            idx = idx * self.domain_sizes[v] + x[v];
        }
        f.table[idx]
    }

    /// Natural log of the joint probability of the total assignment `x`,
    /// including the evidence constant. Zero entries yield negative infinity.
    pub fn log_probability(&self, x: &[usize]) -> Result<f64> {
        self.check_total(x)?;
        Ok(self.log_constant + self.factors.iter().map(|f| self.entry(f, x).ln()).sum::<f64>())
    }

    /// Plain product of the selected entries (no logs), times the evidence
    /// constant.
    pub fn joint_product(&self, x: &[usize]) -> Result<f64> {
        self.check_total(x)?;
        Ok(self.log_constant.exp() * self.factors.iter().map(|f| self.entry(f, x)).product::<f64>())
    }

    /// Moral graph: every factor scope becomes a clique.
    pub fn primal_graph(&self) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(self.num_variables());
        for f in &self.factors {
            g.add_clique(&f.scope);
        }
        g
    }

    /// Instantiates `evidence` (keyed by external id) and returns the network
    /// over the remaining variables. Factors are sliced; factors left with no
    /// free variable are folded into [`log_constant`](Self::log_constant).
    pub fn apply_evidence(&self, evidence: &Assignment) -> Result<BeliefNetwork> {
        if evidence.is_empty() {
            return Ok(self.clone());
        }
        let n = self.num_variables();
        let internal: BTreeMap<usize, usize> =
            self.ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        let mut fixed = vec![None; n];
        for (id, value) in evidence.iter() {
            let &var = internal
                .get(&id)
                .ok_or_else(|| Error::InvalidAssignment(format!("evidence on unknown variable {id}")))?;
            if value >= self.domain_sizes[var] {
                return Err(Error::InvalidAssignment(format!(
                    "evidence value {value} outside the domain of variable {id}"
                )));
            }
            fixed[var] = Some(value);
        }
        let mut remap = vec![usize::MAX; n];
        let mut ids = Vec::new();
        let mut domain_sizes = Vec::new();
        for v in 0..n {
            if fixed[v].is_none() {
                remap[v] = ids.len();
                ids.push(self.ids[v]);
                domain_sizes.push(self.domain_sizes[v]);
            }
        }
        let mut log_constant = self.log_constant;
        let mut factors = Vec::new();
        for f in &self.factors {
            if f.scope.iter().all(|&v| fixed[v].is_none()) {
                factors.push(Factor::new(
                    f.scope.iter().map(|&v| remap[v]).collect(),
                    f.table.clone(),
                ));
                continue;
            }
            let free: Vec<usize> = f.scope.iter().copied().filter(|&v| fixed[v].is_none()).collect();
            let cards: Vec<usize> = f.scope.iter().map(|&v| self.domain_sizes[v]).collect();
            let mut strides = vec![1usize; cards.len()];
            for k in (0..cards.len().saturating_sub(1)).rev() {
                strides[k] = strides[k + 1] * cards[k + 1];
            }
            let base: usize = f
                .scope
                .iter()
                .enumerate()
                .filter_map(|(k, &v)| fixed[v].map(|a| a * strides[k]))
                .sum();
            if free.is_empty() {
                log_constant += f.table[base].ln();
                continue;
            }
            let free_pos: Vec<usize> = (0..f.scope.len()).filter(|&k| fixed[f.scope[k]].is_none()).collect();
            let size: usize = free_pos.iter().map(|&k| cards[k]).product();
            let mut table = Vec::with_capacity(size);
            let mut counter = vec![0usize; free_pos.len()];
            for _ in 0..size {
                let off: usize = free_pos.iter().zip(&counter).map(|(&k, &c)| c * strides[k]).sum();
                table.push(f.table[base + off]);
                for j in (0..counter.len()).rev() {
                    counter[j] += 1;
                    if counter[j] < cards[free_pos[j]] {
                        break;
                    }
                    counter[j] = 0;
                }
            }
            factors.push(Factor::new(free.iter().map(|&v| remap[v]).collect(), table));
        }
        let mut applied = self.evidence.clone();
        for (id, value) in evidence.iter() {
            applied.insert(id, value);
        }
        Ok(BeliefNetwork {
            ids,
            domain_sizes,
            factors,
            evidence: applied,
            log_constant,
        })
    }

    /// Maps an internal dense assignment to external ids, adding the folded
    /// evidence so the result is total over the original network.
    pub fn to_external(&self, x: &[usize]) -> Assignment {
        let mut out = self.evidence.clone();
        for (k, &value) in x.iter().enumerate() {
            out.insert(self.ids[k], value);
        }
        out
    }
}

struct Tokens<'a> {
    items: Vec<(&'a str, usize)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(k, line)| line.split_whitespace().map(move |t| (t, k + 1)))
            .collect();
        Tokens {
            items,
            pos: 0,
            last_line: text.lines().count().max(1),
        }
    }

    fn next(&mut self, what: &str) -> Result<(&'a str, usize)> {
        let item = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::parse(self.last_line, format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let (t, line) = self.next(what)?;
        t.parse()
            .map_err(|_| Error::parse(line, format!("expected {what}, found `{t}`")))
    }

    fn peek_line(&self) -> usize {
        self.items.get(self.pos).map_or(self.last_line, |t| t.1)
    }
}

/// Parses a network in UAI `BAYES` format.
pub fn parse_uai(text: &str) -> Result<BeliefNetwork> {
    let mut tok = Tokens::new(text);
    let (kind, line) = tok.next("network type")?;
    if kind != "BAYES" {
        return Err(Error::parse(line, format!("malformed header: expected BAYES, found `{kind}`")));
    }
    let n = tok.usize("variable count")?;
    let mut domain_sizes = Vec::with_capacity(n);
    for _ in 0..n {
        let line = tok.peek_line();
        let d = tok.usize("domain size")?;
        if d == 0 {
            return Err(Error::parse(line, "domain size must be positive"));
        }
        domain_sizes.push(d);
    }
    let m = tok.usize("factor count")?;
    let mut scopes = Vec::with_capacity(m);
    for _ in 0..m {
        let line = tok.peek_line();
        let k = tok.usize("scope size")?;
        if k == 0 {
            return Err(Error::parse(line, "factor scope must be nonempty"));
        }
        let mut scope = Vec::with_capacity(k);
        for _ in 0..k {
            let line = tok.peek_line();
            let v = tok.usize("scope variable")?;
            if v >= n {
                return Err(Error::parse(line, format!("scope variable {v} not declared")));
            }
            if scope.contains(&v) {
                return Err(Error::parse(line, format!("scope repeats variable {v}")));
            }
            scope.push(v);
        }
        scopes.push((scope, line));
    }
    let mut factors = Vec::with_capacity(m);
    for (scope, _) in scopes {
        let line = tok.peek_line();
        let count = tok.usize("table entry count")?;
        let expected: usize = scope.iter().map(|&v| domain_sizes[v]).product();
        if count != expected {
            return Err(Error::parse(
                line,
                format!("table length mismatch: scope implies {expected} entries, header declares {count}"),
            ));
        }
        let mut table = Vec::with_capacity(count);
        for _ in 0..count {
            let (t, line) = tok.next("table entry").map_err(|e| match e {
                Error::Parse { line, .. } => Error::parse(line, "table length mismatch: missing entries"),
                other => other,
            })?;
            let x: f64 = t
                .parse()
                .map_err(|_| Error::parse(line, format!("non-numeric table entry `{t}`")))?;
            if !x.is_finite() || x < 0.0 {
                return Err(Error::parse(line, format!("table entry `{t}` is not a nonnegative number")));
            }
            table.push(x);
        }
        factors.push(Factor::new(scope, table));
    }
    if tok.pos < tok.items.len() {
        let (t, line) = tok.items[tok.pos];
        return Err(Error::parse(line, format!("unexpected trailing token `{t}`")));
    }
    let net = BeliefNetwork::new(domain_sizes, factors)?;
    let bad = net.unnormalized_factors(1e-6);
    if !bad.is_empty() {
        warn!("{} factor(s) have rows that do not sum to 1 (first: {})", bad.len(), bad[0]);
    }
    Ok(net)
}

/// Formats a probability so that it parses back to the same `f64`.
pub fn format_probability(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x == 1.0 {
        "1".into()
    } else if (1e-4..1e6).contains(&x) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes `net` in UAI `BAYES` format. The evidence constant and external ids
/// of a reduced network are not representable and are dropped.
pub fn serialize_uai(net: &BeliefNetwork) -> String {
    let mut out = String::new();
    out.push_str("BAYES\n");
    let _ = writeln!(out, "{}", net.num_variables());
    let cards: Vec<String> = net.domain_sizes.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "{}", cards.join(" "));
    let _ = writeln!(out, "{}", net.factors.len());
    for f in &net.factors {
        let _ = write!(out, "{}", f.scope.len());
        for v in &f.scope {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for f in &net.factors {
        out.push('\n');
        let _ = writeln!(out, "{}", f.table.len());
        let entries: Vec<String> = f.table.iter().map(|&x| format_probability(x)).collect();
        let _ = writeln!(out, "{}", entries.join(" "));
    }
    out
}

/// Parses an evidence file: a count followed by that many `var value` pairs.
pub fn parse_evidence(text: &str) -> Result<Assignment> {
    let mut tok = Tokens::new(text);
    if tok.items.is_empty() {
        return Ok(Assignment::new());
    }
    let c = tok.usize("evidence count")?;
    let mut e = Assignment::new();
    for _ in 0..c {
        let line = tok.peek_line();
        let var = tok.usize("evidence variable")?;
        let value = tok.usize("evidence value")?;
        if e.insert(var, value).is_some() {
            return Err(Error::parse(line, format!("duplicate evidence for variable {var}")));
        }
    }
    if tok.pos < tok.items.len() {
        let (t, line) = tok.items[tok.pos];
        return Err(Error::parse(line, format!("unexpected trailing token `{t}`")));
    }
    Ok(e)
}

pub fn serialize_evidence(e: &Assignment) -> String {
    let mut out = format!("{}\n", e.len());
    for (var, value) in e.iter() {
        let _ = writeln!(out, "{var} {value}");
    }
    out
}
