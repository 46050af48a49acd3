//! End-to-end solving: evidence reduction, ordering, heuristic compilation,
//! search, and the CSV run record.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::heuristics::{HeuristicEvaluator, HeuristicMode};
use crate::model::{parse_evidence, parse_uai, Assignment, BeliefNetwork};
use crate::oracle::{bucket_elimination_mpe, enumerate_mpe, DEFAULT_ENUMERATION_CAP};
use crate::search::{aobb, aobf, Limits, SearchOptions, SearchStats, SolveResult, Status, TipPolicy};
use crate::space::SearchSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Aobf,
    Aobb,
    Brute,
    Be,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Aobf => "aobf",
            Algorithm::Aobb => "aobb",
            Algorithm::Brute => "brute",
            Algorithm::Be => "be",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aobf" => Ok(Algorithm::Aobf),
            "aobb" => Ok(Algorithm::Aobb),
            "brute" => Ok(Algorithm::Brute),
            "be" => Ok(Algorithm::Be),
            _ => Err(Error::InvalidParameter(format!("unknown algorithm `{s}`"))),
        }
    }
}

pub fn heuristic_name(mode: HeuristicMode) -> &'static str {
    match mode {
        HeuristicMode::Static => "smb",
        HeuristicMode::Dynamic => "dmb",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub algorithm: Algorithm,
    pub heuristic: HeuristicMode,
    pub i_bound: usize,
    /// Seeds the min-fill tie-breaking.
    pub seed: u64,
    pub limits: Limits,
    pub caching: bool,
    pub dead_cache_elimination: bool,
    pub tip_policy: TipPolicy,
    pub instrument: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            algorithm: Algorithm::Aobf,
            heuristic: HeuristicMode::Static,
            i_bound: 2,
            seed: 0,
            limits: Limits::default(),
            caching: true,
            dead_cache_elimination: false,
            tip_policy: TipPolicy::Deepest,
            instrument: false,
        }
    }
}

/// Reads a UAI network and an optional evidence file.
pub fn load_instance(uai: &Path, evidence: Option<&Path>) -> Result<(BeliefNetwork, Assignment)> {
    let net = parse_uai(&std::fs::read_to_string(uai)?)?;
    let ev = match evidence {
        Some(p) => parse_evidence(&std::fs::read_to_string(p)?)?,
        None => Assignment::new(),
    };
    Ok((net, ev))
}

/// Solves an evidence-reduced network. The reported time covers ordering,
/// heuristic compilation and search. Exceeding the memory budget yields a
/// `Memout` result rather than an error.
pub fn solve(net: &BeliefNetwork, cfg: &SolveConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let space = SearchSpace::build(net.clone(), cfg.seed);
    let mut result = solve_space(&space, cfg, start)?;
    result.stats.elapsed = start.elapsed();
    Ok(result)
}

fn memout(space: &SearchSpace) -> SolveResult {
    SolveResult::aborted(space, Status::Memout, None, None, SearchStats::default())
}

fn solve_space(space: &SearchSpace, cfg: &SolveConfig, start: Instant) -> Result<SolveResult> {
    let max_bytes = cfg.limits.memory_limit;
    let oracle_result = |value: f64, x: Vec<usize>| {
        let weight = space.solution_log_value(&x) - space.network().log_constant();
        SolveResult::solved(space, value - space.network().log_constant(), x, weight, SearchStats::default())
    };
    match cfg.algorithm {
        Algorithm::Brute => {
            let r = enumerate_mpe(space.network(), DEFAULT_ENUMERATION_CAP)?;
            return Ok(oracle_result(r.log_value, r.assignment));
        }
        Algorithm::Be => {
            let entries = max_bytes.map_or(usize::MAX, |b| b / std::mem::size_of::<f64>());
            return match bucket_elimination_mpe(space.network(), Some(space.order().order()), entries) {
                Ok(r) => Ok(oracle_result(r.log_value, r.assignment)),
                Err(Error::MemoryBudget(_)) => Ok(memout(space)),
                Err(e) => Err(e),
            };
        }
        Algorithm::Aobf | Algorithm::Aobb => {}
    }
    let heuristic = match HeuristicEvaluator::new(space, cfg.heuristic, cfg.i_bound, max_bytes) {
        Ok(h) => h,
        Err(Error::MemoryBudget(_)) => return Ok(memout(space)),
        Err(e) => return Err(e),
    };
    let remaining = cfg
        .limits
        .time_limit
        .map(|t| t.saturating_sub(start.elapsed()));
    let options = SearchOptions {
        limits: Limits {
            time_limit: remaining,
            memory_limit: max_bytes,
        },
        caching: cfg.caching,
        dead_cache_elimination: cfg.dead_cache_elimination,
        tip_policy: cfg.tip_policy,
        instrument: cfg.instrument,
    };
    let outcome = match cfg.algorithm {
        Algorithm::Aobf => aobf(space, &heuristic, &options),
        _ => aobb(space, &heuristic, &options),
    };
    match outcome {
        Err(Error::MemoryBudget(_)) => Ok(memout(space)),
        other => other,
    }
}

/// One CSV line per (instance, algorithm, i-bound) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub n: String,
    pub e: String,
    pub w_star: String,
    pub h: String,
    pub algorithm: String,
    pub heuristic: String,
    pub i_bound: String,
    pub seed: String,
    pub status: String,
    pub mpe_log10: String,
    pub mpe_probability: String,
    pub nodes: String,
    pub cache_hits: String,
    pub cache_entries: String,
    pub time_s: String,
}

pub const CSV_HEADER: &str =
    "instance,n,e,w_star,h,algorithm,heuristic,i_bound,seed,status,mpe_log10,mpe_probability,nodes,cache_hits,cache_entries,time_s";

/// Base-10 log value at 12 significant digits; `-inf` for zero probability.
pub fn format_log10(ln_value: f64) -> String {
    if ln_value == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{:.11e}", ln_value / std::f64::consts::LN_10)
    }
}

/// Linear probability at 12 significant digits; `0` for zero probability.
pub fn format_linear(ln_value: f64) -> String {
    let p = ln_value.exp();
    if p == 0.0 {
        "0".into()
    } else {
        format!("{p:.11e}")
    }
}

impl RunRecord {
    /// `n` is the number of variables in the original network and `e` the
    /// number of evidence variables. `time` is omitted (written as `-`) when
    /// `None`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        instance: &str,
        n: usize,
        e: usize,
        cfg: &SolveConfig,
        result: &SolveResult,
        time: Option<Duration>,
    ) -> Self {
        let searched = matches!(cfg.algorithm, Algorithm::Aobf | Algorithm::Aobb);
        let value = result.mpe_log_value;
        RunRecord {
            instance: instance.into(),
            n: n.to_string(),
            e: e.to_string(),
            w_star: result.induced_width.to_string(),
            h: result.height.to_string(),
            algorithm: cfg.algorithm.to_string(),
            heuristic: if searched { heuristic_name(cfg.heuristic).into() } else { "-".into() },
            i_bound: if searched { cfg.i_bound.to_string() } else { "-".into() },
            seed: cfg.seed.to_string(),
            status: result.status.as_str().into(),
            mpe_log10: value.map_or_else(|| "-".into(), format_log10),
            mpe_probability: value.map_or_else(|| "-".into(), format_linear),
            nodes: result.stats.expansions.to_string(),
            cache_hits: result.stats.cache_hits.to_string(),
            cache_entries: result.stats.cache_entries.to_string(),
            time_s: time.map_or_else(|| "-".into(), |t| format!("{:.6}", t.as_secs_f64())),
        }
    }
}

/// Serializes records under the fixed header.
pub fn records_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        w.serialize(r).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
    Ok(out)
}
