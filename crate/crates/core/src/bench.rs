//! Sweeps of (instance, algorithm, i-bound) cells with per-configuration
//! averages.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heuristics::HeuristicMode;
use crate::solver::{heuristic_name, load_instance, solve, Algorithm, RunRecord, SolveConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub uai: PathBuf,
    pub evidence: Option<PathBuf>,
}

/// Parses a manifest: one instance per line as `network.uai [evidence]`,
/// paths relative to `base`. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() > 2 {
            return Err(Error::Parse {
                line: k + 1,
                message: "expected `network [evidence]`".into(),
            });
        }
        out.push(ManifestEntry {
            uai: base.join(fields[0]),
            evidence: fields.get(1).map(|e| base.join(e)),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    pub i_bounds: Vec<usize>,
    /// Solver settings shared by all cells; algorithm and i-bound are
    /// overridden per cell.
    pub base: SolveConfig,
    pub jobs: usize,
    pub omit_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub records: Vec<RunRecord>,
    /// One row per (algorithm, heuristic, i-bound), instance `mean`.
    pub averages: Vec<RunRecord>,
}

fn instance_name(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    instance: usize,
    algorithm: Algorithm,
    i_bound: usize,
}

fn error_record(name: &str, cfg: &SolveConfig, err: &Error) -> RunRecord {
    log::warn!("{name}: {err}");
    let dash = || "-".to_string();
    RunRecord {
        instance: name.into(),
        n: dash(),
        e: dash(),
        w_star: dash(),
        h: dash(),
        algorithm: cfg.algorithm.to_string(),
        heuristic: heuristic_name(cfg.heuristic).into(),
        i_bound: cfg.i_bound.to_string(),
        seed: cfg.seed.to_string(),
        status: "error".into(),
        mpe_log10: dash(),
        mpe_probability: dash(),
        nodes: dash(),
        cache_hits: dash(),
        cache_entries: dash(),
        time_s: dash(),
    }
}

fn run_cell(entry: &ManifestEntry, cfg: &SolveConfig, omit_time: bool) -> RunRecord {
    let name = instance_name(&entry.uai);
    let run = || -> Result<RunRecord> {
        let (net, ev) = load_instance(&entry.uai, entry.evidence.as_deref())?;
        let reduced = net.apply_evidence(&ev)?;
        let r = solve(&reduced, cfg)?;
        let time = (!omit_time).then_some(r.stats.elapsed);
        Ok(RunRecord::new(&name, net.num_variables(), ev.len(), cfg, &r, time))
    };
    run().unwrap_or_else(|e| error_record(&name, cfg, &e))
}

/// Runs every cell; cells are independent and may run in parallel, each
/// solver single-threaded. Records come back in manifest order.
pub fn run_bench(entries: &[ManifestEntry], cfg: &BenchConfig) -> Result<BenchReport> {
    let mut cells = Vec::new();
    for instance in 0..entries.len() {
        for &algorithm in &cfg.algorithms {
            if matches!(algorithm, Algorithm::Brute | Algorithm::Be) {
                cells.push(Cell {
                    instance,
                    algorithm,
                    i_bound: 0,
                });
                continue;
            }
            for &i_bound in &cfg.i_bounds {
                cells.push(Cell {
                    instance,
                    algorithm,
                    i_bound,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let records: Vec<RunRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let solve_cfg = SolveConfig {
                    algorithm: c.algorithm,
                    i_bound: c.i_bound,
                    ..cfg.base
                };
                run_cell(&entries[c.instance], &solve_cfg, cfg.omit_time)
            })
            .collect()
    });
    let averages = averages(&records, cfg.base.heuristic, cfg.omit_time);
    Ok(BenchReport { records, averages })
}

#[derive(Default)]
struct Acc {
    runs: usize,
    solved: usize,
    n: f64,
    e: f64,
    w: f64,
    h: f64,
    nodes: f64,
    hits: f64,
    entries: f64,
    time: f64,
    seed: String,
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(0.0)
}

fn averages(records: &[RunRecord], mode: HeuristicMode, omit_time: bool) -> Vec<RunRecord> {
    let mut groups: BTreeMap<(String, usize), Acc> = BTreeMap::new();
    for r in records {
        let i = r.i_bound.parse().unwrap_or(0);
        let acc = groups.entry((r.algorithm.clone(), i)).or_default();
        acc.runs += 1;
        acc.seed = r.seed.clone();
        if r.status != "solved" {
            continue;
        }
        acc.solved += 1;
        acc.n += num(&r.n);
        acc.e += num(&r.e);
        acc.w += num(&r.w_star);
        acc.h += num(&r.h);
        acc.nodes += num(&r.nodes);
        acc.hits += num(&r.cache_hits);
        acc.entries += num(&r.cache_entries);
        acc.time += num(&r.time_s);
    }
    groups
        .into_iter()
        .map(|((algorithm, i), a)| {
            let k = a.solved.max(1) as f64;
            let mean = |x: f64| if a.solved == 0 { "-".to_string() } else { format!("{:.2}", x / k) };
            let searched = algorithm == "aobf" || algorithm == "aobb";
            RunRecord {
                instance: "mean".into(),
                n: mean(a.n),
                e: mean(a.e),
                w_star: mean(a.w),
                h: mean(a.h),
                heuristic: if searched { heuristic_name(mode).into() } else { "-".into() },
                i_bound: if searched { i.to_string() } else { "-".into() },
                algorithm,
                seed: a.seed,
                status: format!("solved={}/{}", a.solved, a.runs),
                mpe_log10: "-".into(),
                mpe_probability: "-".into(),
                nodes: mean(a.nodes),
                cache_hits: mean(a.hits),
                cache_entries: mean(a.entries),
                time_s: if omit_time || a.solved == 0 {
                    "-".into()
                } else {
                    format!("{:.6}", a.time / k)
                },
            }
        })
        .collect()
}

/// Whitespace-separated data of mean time and nodes against the i-bound, one
/// block per algorithm (blocks separated by two blank lines).
pub fn gnuplot_data(averages: &[RunRecord]) -> String {
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for r in averages {
        if r.i_bound == "-" {
            continue;
        }
        if current != Some(r.algorithm.as_str()) {
            if current.is_some() {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {} {}\n# i_bound mean_time_s mean_nodes solved", r.algorithm, r.heuristic);
            current = Some(r.algorithm.as_str());
        }
        let _ = writeln!(out, "{} {} {} {}", r.i_bound, r.time_s, r.nodes, r.status.trim_start_matches("solved="));
    }
    out
}
