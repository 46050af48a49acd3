//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a gating check fails.

mod common;

use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use andor_mpe::generators::gen_random;
use andor_mpe::heuristics::{compile_smb, evaluate_h, DynamicMiniBuckets, Heuristic, HeuristicEvaluator, HeuristicMode, NodeRef};
use andor_mpe::model::{parse_uai, serialize_uai, BeliefNetwork};
use andor_mpe::oracle::{enumerate_mpe, OracleResult};
use andor_mpe::search::{aobb, aobf, SearchOptions, SolveResult, Status};
use andor_mpe::space::SearchSpace;
use andor_mpe::table::UNASSIGNED;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{check_cache_bound, check_identity, close, small_grid, small_random, subproblem_value};

/// Covers 3^15, the largest joint space among the small random instances.
const ORACLE_CAP: u128 = 1 << 24;

/// Solved runs collected for the cache-bound and weight-identity checks.
struct Ledger {
    runs: Mutex<Vec<(SearchSpace, SolveResult)>>,
}

impl Ledger {
    fn record(&self, space: &SearchSpace, r: &SolveResult) {
        self.runs.lock().unwrap().push((space.clone(), r.clone()));
    }
}

struct Line {
    id: &'static str,
    pass: bool,
    gating: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: String) -> Line {
    Line {
        id,
        pass,
        gating: true,
        detail,
    }
}

fn oracle(net: &BeliefNetwork) -> OracleResult {
    enumerate_mpe(net, ORACLE_CAP).expect("instance within the enumeration cap")
}

fn solve_both(space: &SearchSpace, i: usize, ledger: &Ledger) -> (SolveResult, SolveResult) {
    let h = HeuristicEvaluator::new(space, HeuristicMode::Static, i, None).unwrap();
    let opts = SearchOptions::default();
    let a = aobf(space, &h, &opts).unwrap();
    let b = aobb(space, &h, &opts).unwrap();
    ledger.record(space, &a);
    ledger.record(space, &b);
    (a, b)
}

fn oracle_equivalence(ledger: &Ledger) -> Line {
    let mut instances: Vec<BeliefNetwork> = (0..200).map(|s| small_random(s, 5, 15)).collect();
    instances.extend((0..50).map(small_grid));
    let mismatches: Vec<String> = instances
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, net)| {
            let o = oracle(net);
            let space = SearchSpace::build(net.clone(), k as u64);
            let mut bad = Vec::new();
            for i in [2, 4, 6] {
                let (a, b) = solve_both(&space, i, ledger);
                for (name, r) in [("aobf", &a), ("aobb", &b)] {
                    let ok = r.status == Status::Solved && close(r.mpe_log_value.unwrap(), o.log_value);
                    if !ok {
                        bad.push(format!("instance {k} {name} i={i}"));
                    }
                }
            }
            bad
        })
        .collect();
    line(
        "1 oracle equivalence",
        mismatches.is_empty(),
        format!("250 instances x i in {{2,4,6}} x 2 algorithms, {} mismatches {:?}", mismatches.len(), mismatches),
    )
}

fn admissibility() -> Line {
    let results: Vec<(usize, usize)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let net = small_random(500 + seed, 5, 12);
            let space = SearchSpace::build(net, seed);
            let n = space.num_variables();
            let mut checked = 0;
            let mut violations = 0;
            for i in [1, 2, 3] {
                let smb = compile_smb(&space, i, None).unwrap();
                let dmb = DynamicMiniBuckets {
                    i_bound: i,
                    max_bytes: None,
                };
                let hs: [&dyn Heuristic; 2] = [&smb, &dmb];
                for var in 0..n {
                    for path in common::context_assignments(&space, var) {
                        let or_exact = subproblem_value(&space, var, &path, None);
                        for h in hs {
                            checked += 1;
                            let or_h = evaluate_h(h, &space, &path, NodeRef::Or { var }).unwrap();
                            if or_h < or_exact - 1e-9 {
                                violations += 1;
                            }
                            for value in 0..space.domain_size(var) {
                                let and_exact = subproblem_value(&space, var, &path, Some(value));
                                let and_h = evaluate_h(h, &space, &path, NodeRef::And { var, value }).unwrap();
                                checked += 1;
                                if and_h < and_exact - 1e-9 {
                                    violations += 1;
                                }
                            }
                        }
                    }
                }
            }
            (checked, violations)
        })
        .collect();
    let checked: usize = results.iter().map(|r| r.0).sum();
    let violations: usize = results.iter().map(|r| r.1).sum();
    line(
        "2 heuristic admissibility",
        violations == 0,
        format!("{checked} node evaluations (SMB and DMB, i in {{1,2,3}}), {violations} violations"),
    )
}

fn exact_at_high_i(ledger: &Ledger) -> Line {
    let results: Vec<(bool, bool, usize)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let net = small_random(2000 + seed, 5, 15);
            let o = oracle(&net);
            let space = SearchSpace::build(net, seed);
            let i = space.induced_width() + 1;
            let tables = compile_smb(&space, i, None).unwrap();
            let root_bound = tables.bound() + space.network().log_constant();
            let bound_ok = close(root_bound, o.log_value);
            let h = HeuristicEvaluator::Static(tables);
            let r = aobf(&space, &h, &SearchOptions::default()).unwrap();
            ledger.record(&space, &r);
            let n = space.num_variables();
            let leaves = (0..n).filter(|&v| space.tree().is_leaf(v)).count();
            let tree_expansions = 2 * n - leaves;
            let d_max = space.network().max_domain_size();
            let extra = (r.stats.expansions as usize).saturating_sub(tree_expansions);
            let correct = r.mpe_log_value.is_some_and(|v| close(v, o.log_value));
            (bound_ok && correct, extra <= n * d_max, extra)
        })
        .collect();
    let bound_fail = results.iter().filter(|r| !r.0).count();
    let over = results.iter().filter(|r| !r.1).count();
    let max_extra = results.iter().map(|r| r.2).max().unwrap_or(0);
    line(
        "3 exactness at i = w*+1",
        bound_fail == 0 && over == 0,
        format!(
            "100 instances: {bound_fail} root-bound mismatches, {over} runs over n*d_max extra expansions (max extra {max_extra})"
        ),
    )
}

fn directional(ledger: &Ledger) -> Vec<Line> {
    let started = Instant::now();
    let spaces: Vec<SearchSpace> = (0..20u64)
        .map(|seed| SearchSpace::build(gen_random(60, 2, 54, 2, seed).unwrap(), seed))
        .collect();
    let mut means = Vec::new();
    let mut agree = true;
    for i in 2..=10 {
        let runs: Vec<(f64, f64, bool)> = spaces
            .par_iter()
            .map(|space| {
                let (a, b) = solve_both(space, i, ledger);
                let same = close(a.mpe_log_value.unwrap(), b.mpe_log_value.unwrap());
                (a.stats.expansions as f64, b.stats.expansions as f64, same)
            })
            .collect();
        agree &= runs.iter().all(|r| r.2);
        let fa = runs.iter().map(|r| r.0).sum::<f64>() / runs.len() as f64;
        let fb = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
        means.push((i, fa, fb));
    }
    let small_ok = means.iter().filter(|m| m.0 <= 4).all(|m| m.1 <= m.2);
    let ratios: Vec<f64> = means.iter().map(|m| m.1 / m.2).collect();
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0]);
    let table: Vec<String> = means
        .iter()
        .map(|(i, a, b)| format!("i={i}: {a:.1}/{b:.1}={:.3}", a / b))
        .collect();
    vec![
        line(
            "5a AOBF nodes <= AOBB nodes at i in {2,3,4}",
            small_ok && agree,
            format!("mean AOBF/AOBB nodes over 20 instances, {}", table[..3].join(", ")),
        ),
        Line {
            id: "5b AOBF/AOBB node ratio rises monotonically to i = 10",
            pass: monotone,
            gating: false,
            detail: format!("{} ({:.1?})", table.join(", "), started.elapsed()),
        },
    ]
}

fn dmb_tightness() -> Line {
    let mut checked = 0;
    let mut violations = Vec::new();
    for seed in 0..20u64 {
        let net = small_random(seed, 5, 15);
        let space = SearchSpace::build(net, seed);
        let n = space.num_variables();
        let smb = compile_smb(&space, 2, None).unwrap();
        let dmb = DynamicMiniBuckets {
            i_bound: 2,
            max_bytes: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        for _ in 0..5 {
            let var = rng.random_range(0..n);
            let mut path = vec![UNASSIGNED; n];
            for a in space.tree().ancestors(var) {
                path[a] = rng.random_range(0..space.domain_size(a));
            }
            path[var] = rng.random_range(0..space.domain_size(var));
            let s = Heuristic::and_bound(&smb, &space, var, &path).unwrap();
            let d = dmb.and_bound(&space, var, &path).unwrap();
            checked += 1;
            if d > s + 1e-9 {
                violations.push(format!("instance {seed} var {var}: {d} > {s}"));
            }
        }
    }
    // A fresh mini-bucket partition of the conditioned subproblem is usually,
    // not provably, tighter than the static one; reported without gating.
    Line {
        id: "6 DMB(2) <= SMB(2) at matched nodes",
        pass: violations.is_empty(),
        gating: false,
        detail: format!("{checked} sampled AND nodes over 20 instances, {} violations {:?}", violations.len(), violations),
    }
}

fn identity_and_cache(ledger: &Ledger) -> (Line, Line) {
    let runs = ledger.runs.lock().unwrap();
    let mut id_fail = 0;
    let mut cache_fail = 0;
    let mut total_fail = 0;
    for (space, r) in runs.iter() {
        if r.status == Status::Solved && !check_identity(space.network(), r) {
            id_fail += 1;
        }
        if !check_cache_bound(space, r) {
            cache_fail += 1;
        }
        let n = space.num_variables() as f64;
        let d = space.network().max_domain_size() as f64;
        if r.stats.cache_entries as f64 > n * d.powi(space.induced_width() as i32 + 1) {
            total_fail += 1;
        }
    }
    (
        line(
            "4 cache entries within context bound",
            cache_fail == 0 && total_fail == 0,
            format!("{} runs, {cache_fail} per-variable and {total_fail} total violations", runs.len()),
        ),
        line(
            "7 weight-product identity",
            id_fail == 0,
            format!("{} solved runs, {id_fail} mismatches", runs.len()),
        ),
    )
}

fn round_trip() -> Line {
    let bin = env!("CARGO_BIN_EXE_andor-mpe");
    let dir = tempfile::tempdir().unwrap();
    let mut problems = Vec::new();
    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for rep in 0..2 {
        let sub = dir.path().join(format!("run{rep}"));
        std::fs::create_dir(&sub).unwrap();
        let prefix = sub.join("net");
        let st = Command::new(bin)
            .args(["generate", "--seed", "17", "--out"])
            .arg(&prefix)
            .args(["random", "--n", "25", "--d", "2", "--c", "22", "--p", "2"])
            .status()
            .unwrap();
        if !st.success() {
            problems.push("generate failed".to_string());
            continue;
        }
        let uai = prefix.with_extension("uai");
        let text = std::fs::read_to_string(&uai).unwrap();
        let reparsed = serialize_uai(&parse_uai(&text).unwrap());
        if reparsed != text {
            problems.push("serialize(parse(x)) != x".into());
        }
        let mut csv = Vec::new();
        for algorithm in ["aobf", "aobb", "be"] {
            let out = Command::new(bin)
                .args(["solve", "--header", "--omit-time", "--seed", "3", "--ibound", "3", "--algorithm", algorithm, "--input"])
                .arg(&uai)
                .output()
                .unwrap();
            if out.status.code() != Some(0) {
                problems.push(format!("solve {algorithm} exited {:?}", out.status.code()));
            }
            csv.extend(out.stdout);
        }
        outputs.push(csv);
    }
    let same_files = std::fs::read(dir.path().join("run0/net.uai")).ok() == std::fs::read(dir.path().join("run1/net.uai")).ok();
    if !same_files {
        problems.push("generated files differ".into());
    }
    if outputs.len() == 2 && outputs[0] != outputs[1] {
        problems.push("CSV output differs between runs".into());
    }
    line(
        "8 round trip and determinism",
        problems.is_empty() && outputs.len() == 2,
        if problems.is_empty() {
            format!("{} CSV bytes identical across two generate+solve runs", outputs.first().map_or(0, |o| o.len()))
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let started = Instant::now();
    let ledger = Ledger {
        runs: Mutex::new(Vec::new()),
    };
    let mut lines = vec![oracle_equivalence(&ledger), admissibility(), exact_at_high_i(&ledger)];
    lines.extend(directional(&ledger));
    lines.push(dmb_tightness());
    let (cache, identity) = identity_and_cache(&ledger);
    lines.push(cache);
    lines.push(identity);
    lines.push(round_trip());
    lines.sort_by(|a, b| a.id.cmp(b.id));

    let mut gating_failures = 0;
    for l in &lines {
        let verdict = if l.pass { "PASS" } else { "FAIL" };
        let note = if l.gating { "" } else { " [reported, not gating]" };
        println!("criterion {}: {verdict}{note}: {}", l.id, l.detail);
        if l.gating && !l.pass {
            gating_failures += 1;
        }
    }
    println!("acceptance finished in {:.1?}", started.elapsed());
    if gating_failures > 0 {
        std::process::exit(1);
    }
}
