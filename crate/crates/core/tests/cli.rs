use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use andor_mpe::solver::CSV_HEADER;
use tempfile::TempDir;

const CHAIN: &str = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n\n2\n0.4 0.6\n\n4\n0.8 0.2 0.1 0.9\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_andor-mpe")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(header: &str, row: &'a str, name: &str) -> &'a str {
    let k = header.split(',').position(|h| h == name).unwrap();
    row.split(',').nth(k).unwrap()
}

fn chain_file(dir: &Path) -> String {
    let p = dir.join("chain.uai");
    fs::write(&p, CHAIN).unwrap();
    p.to_str().unwrap().to_string()
}

fn generate_random(dir: &Path, name: &str, seed: &str) -> String {
    let prefix = dir.join(name);
    let p = prefix.to_str().unwrap();
    let o = run(&["generate", "--out", p, "--seed", seed, "random", "--n", "40", "--c", "35"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    format!("{p}.uai")
}

#[test]
fn solves_the_chain() {
    let dir = TempDir::new().unwrap();
    let uai = chain_file(dir.path());
    let o = run(&["solve", "-i", &uai, "--header", "--print-assignment"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row = lines.next().unwrap();
    assert_eq!(field(CSV_HEADER, row, "mpe_probability"), "5.40000000000e-1");
    assert_eq!(field(CSV_HEADER, row, "status"), "solved");
    assert_eq!(field(CSV_HEADER, row, "instance"), "chain");
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim(), "0=1 1=1");
}

#[test]
fn evidence_file_is_applied() {
    let dir = TempDir::new().unwrap();
    let uai = chain_file(dir.path());
    let ev = dir.path().join("chain.evid");
    fs::write(&ev, "1\n1 0\n").unwrap();
    let o = run(&["solve", "-i", &uai, "-e", ev.to_str().unwrap(), "--algorithm", "aobb"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    // best completion of B = 0 is A = 0: 0.4 * 0.8
    assert_eq!(field(CSV_HEADER, out.trim(), "mpe_probability"), "3.20000000000e-1");
    assert_eq!(field(CSV_HEADER, out.trim(), "e"), "1");
}

#[test]
fn both_searches_report_the_same_optimum() {
    let dir = TempDir::new().unwrap();
    let uai = generate_random(dir.path(), "net", "3");
    let mut values = Vec::new();
    for alg in ["aobf", "aobb", "be"] {
        let o = run(&["solve", "-i", &uai, "--algorithm", alg, "--ibound", "3"]);
        assert_eq!(o.status.code(), Some(0));
        let row = stdout(&o);
        values.push(field(CSV_HEADER, row.trim(), "mpe_log10").to_string());
    }
    assert_eq!(values[0], values[1]);
    let a: f64 = values[0].parse().unwrap();
    let b: f64 = values[2].parse().unwrap();
    assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
}

#[test]
fn zero_time_limit_exits_with_timeout() {
    let dir = TempDir::new().unwrap();
    let uai = generate_random(dir.path(), "net", "1");
    let o = run(&["solve", "-i", &uai, "--time-limit", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(field(CSV_HEADER, stdout(&o).trim(), "status"), "timeout");
}

#[test]
fn zero_memory_limit_exits_with_memout() {
    let dir = TempDir::new().unwrap();
    let uai = generate_random(dir.path(), "net", "1");
    for alg in ["aobf", "aobb", "be"] {
        let o = run(&["solve", "-i", &uai, "--algorithm", alg, "--memory-limit", "0"]);
        assert_eq!(o.status.code(), Some(3), "{alg}");
        assert_eq!(field(CSV_HEADER, stdout(&o).trim(), "status"), "memout");
    }
}

#[test]
fn bad_input_exits_with_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.uai");
    fs::write(&p, "BAYES\n1\n2\n1\n1 0\n\n3\n0.5 0.5 0.5\n").unwrap();
    let o = run(&["solve", "-i", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = run(&["solve", "-i", dir.path().join("missing.uai").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["solve", "-i", p.to_str().unwrap(), "--time-limit", "-1"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    for family in [
        vec!["random", "--n", "30", "--c", "25"],
        vec!["grid", "--n", "5", "--evidence", "3"],
        vec!["coding", "--n", "8", "--p", "3"],
    ] {
        let mut files = Vec::new();
        for run_dir in ["a", "b"] {
            let d = dir.path().join(run_dir);
            fs::create_dir_all(&d).unwrap();
            let prefix = d.join("inst");
            let mut args = vec!["generate", "--out", prefix.to_str().unwrap(), "--seed", "9"];
            args.extend(&family);
            assert!(run(&args).status.success());
            files.push(
                [".uai", ".uai.evid", ".json"]
                    .map(|s| fs::read(d.join(format!("inst{s}"))).unwrap()),
            );
        }
        assert_eq!(files[0], files[1], "{}", family[0]);
        let sidecar: serde_json::Value = serde_json::from_slice(&files[0][2]).unwrap();
        assert_eq!(sidecar["family"], family[0]);
        assert_eq!(sidecar["seed"], 9);
    }
}

#[test]
fn omit_time_makes_output_byte_identical() {
    let dir = TempDir::new().unwrap();
    let uai = generate_random(dir.path(), "net", "5");
    let args = ["solve", "-i", &uai, "--omit-time", "--header"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);
    assert_eq!(a.lines().nth(1).unwrap().rsplit(',').next(), Some("-"));
}

#[test]
fn empty_manifest_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("manifest.txt");
    fs::write(&m, "# nothing here\n").unwrap();
    let o = run(&["bench", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), format!("{CSV_HEADER}\n"));
}

#[test]
fn sweep_writes_rows_and_averages() {
    let dir = TempDir::new().unwrap();
    generate_random(dir.path(), "one", "1");
    generate_random(dir.path(), "two", "2");
    let m = dir.path().join("manifest.txt");
    fs::write(&m, "one.uai one.uai.evid\ntwo.uai\n").unwrap();
    let csv = dir.path().join("out.csv");
    let plot = dir.path().join("out.dat");
    let o = run(&[
        "bench",
        "--manifest",
        m.to_str().unwrap(),
        "--algorithms",
        "aobf,aobb",
        "--ibounds",
        "2,3",
        "--jobs",
        "2",
        "--output",
        csv.to_str().unwrap(),
        "--gnuplot",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    // 2 instances x 2 algorithms x 2 i-bounds, then 4 mean rows
    assert_eq!(lines.len(), 1 + 8 + 4);
    for row in &lines[1..9] {
        assert_eq!(field(CSV_HEADER, row, "status"), "solved");
    }
    for row in &lines[9..] {
        assert_eq!(field(CSV_HEADER, row, "instance"), "mean");
        assert_eq!(field(CSV_HEADER, row, "status"), "solved=2/2");
    }
    // per instance, both algorithms agree at every i-bound
    for inst in ["one", "two"] {
        let vals: Vec<&str> = lines[1..9]
            .iter()
            .filter(|r| field(CSV_HEADER, r, "instance") == inst)
            .map(|r| field(CSV_HEADER, r, "mpe_log10"))
            .collect();
        assert!(vals.windows(2).all(|w| w[0] == w[1]), "{inst}: {vals:?}");
    }
    let plot = fs::read_to_string(&plot).unwrap();
    assert!(plot.contains("# aobf smb") && plot.contains("# aobb smb"));
}
