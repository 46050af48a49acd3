use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use andor_mpe::bench::{gnuplot_data, parse_manifest, run_bench, BenchConfig};
use andor_mpe::generators::{generate, Family, GenSpec};
use andor_mpe::heuristics::HeuristicMode;
use andor_mpe::model::{serialize_evidence, serialize_uai};
use andor_mpe::search::{Limits, Status, TipPolicy};
use andor_mpe::solver::{load_instance, records_to_csv, solve, Algorithm, RunRecord, SolveConfig, CSV_HEADER};
use andor_mpe::Error;

#[derive(Parser)]
#[command(name = "andor-mpe", version, about = "Exact MPE by AND/OR search with mini-bucket heuristics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one network and print a CSV run record.
    Solve(SolveArgs),
    /// Write a synthetic benchmark instance.
    Generate {
        /// Output path prefix; writes PREFIX.uai, PREFIX.uai.evid and PREFIX.json.
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(subcommand)]
        family: FamilyCmd,
    },
    /// Run an algorithm and i-bound sweep over a manifest of instances.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum FamilyCmd {
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        c: usize,
        #[arg(long, default_value_t = 2)]
        p: usize,
    },
    Grid {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.9)]
        det_fraction: f64,
        #[arg(long, default_value_t = 0)]
        evidence: usize,
    },
    Coding {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 0.22)]
        sigma2: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Aobf,
    Aobb,
    Brute,
    Be,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Aobf => Algorithm::Aobf,
            AlgorithmArg::Aobb => Algorithm::Aobb,
            AlgorithmArg::Brute => Algorithm::Brute,
            AlgorithmArg::Be => Algorithm::Be,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    Smb,
    Dmb,
}

#[derive(Clone, Copy, ValueEnum)]
enum TipArg {
    Deepest,
    Shallowest,
}

#[derive(Args, Clone)]
struct SearchFlags {
    #[arg(long, value_enum, default_value = "smb")]
    heuristic: HeuristicArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Megabytes.
    #[arg(long)]
    memory_limit: Option<usize>,
    #[arg(long)]
    no_caching: bool,
    #[arg(long)]
    dead_cache_elim: bool,
    #[arg(long, value_enum, default_value = "deepest")]
    tip: TipArg,
    /// Write `-` in the time column so output is reproducible byte for byte.
    #[arg(long)]
    omit_time: bool,
}

impl SearchFlags {
    fn config(&self, algorithm: Algorithm, i_bound: usize) -> Result<SolveConfig, Error> {
        let time_limit = match self.time_limit {
            Some(t) if !(t >= 0.0 && t.is_finite()) => {
                return Err(Error::InvalidParameter(format!("time limit {t} must be a nonnegative number")))
            }
            Some(t) => Some(Duration::from_secs_f64(t)),
            None => None,
        };
        Ok(SolveConfig {
            algorithm,
            heuristic: match self.heuristic {
                HeuristicArg::Smb => HeuristicMode::Static,
                HeuristicArg::Dmb => HeuristicMode::Dynamic,
            },
            i_bound,
            seed: self.seed,
            limits: Limits {
                time_limit,
                memory_limit: self.memory_limit.map(|mb| mb.saturating_mul(1 << 20)),
            },
            caching: !self.no_caching,
            dead_cache_elimination: self.dead_cache_elim,
            tip_policy: match self.tip {
                TipArg::Deepest => TipPolicy::Deepest,
                TipArg::Shallowest => TipPolicy::Shallowest,
            },
            instrument: false,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    evidence: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "aobf")]
    algorithm: AlgorithmArg,
    #[arg(long = "ibound", default_value_t = 2)]
    i_bound: usize,
    #[command(flatten)]
    search: SearchFlags,
    /// Print the CSV header line first.
    #[arg(long)]
    header: bool,
    /// Print the assignment as `var=value` pairs on stderr.
    #[arg(long)]
    print_assignment: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// One `network.uai [evidence]` per line, relative to the manifest.
    #[arg(long, short)]
    manifest: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "aobf,aobb")]
    algorithms: Vec<AlgorithmArg>,
    #[arg(long = "ibounds", value_delimiter = ',', default_value = "2,3,4,5,6,7,8")]
    i_bounds: Vec<usize>,
    #[command(flatten)]
    search: SearchFlags,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// CSV destination (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write mean time and nodes per i-bound for plotting.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Generate { out, seed, family } => cmd_generate(&out, seed, family),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let cfg = args.search.config(args.algorithm.into(), args.i_bound)?;
    let (net, ev) = load_instance(&args.input, args.evidence.as_deref())?;
    let reduced = net.apply_evidence(&ev)?;
    let result = solve(&reduced, &cfg)?;
    let time = (!args.search.omit_time).then_some(result.stats.elapsed);
    let record = RunRecord::new(&instance_id(&args.input), net.num_variables(), ev.len(), &cfg, &result, time);
    let csv = records_to_csv(&[record])?;
    let body = csv.split_once('\n').map_or("", |(_, rest)| rest);
    let mut stdout = std::io::stdout().lock();
    if args.header {
        writeln!(stdout, "{CSV_HEADER}")?;
    }
    stdout.write_all(body.as_bytes())?;
    if args.print_assignment {
        if let Some(x) = &result.assignment {
            eprintln!("{}", reduced.to_external(x).to_pairs_string());
        }
    }
    Ok(match result.status {
        Status::Solved => ExitCode::SUCCESS,
        Status::Timeout => ExitCode::from(2),
        Status::Memout => ExitCode::from(3),
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_generate(out: &Path, seed: u64, family: FamilyCmd) -> Result<ExitCode, Error> {
    let family = match family {
        FamilyCmd::Random { n, d, c, p } => Family::Random { n, d, c, p },
        FamilyCmd::Grid {
            n,
            det_fraction,
            evidence,
        } => Family::Grid {
            n,
            det_fraction,
            num_evidence: evidence,
        },
        FamilyCmd::Coding { n, p, sigma2 } => Family::Coding { n, p, sigma2 },
    };
    let spec = GenSpec { family, seed };
    let g = generate(&spec)?;
    let uai = with_suffix(out, ".uai");
    let evid = with_suffix(out, ".uai.evid");
    fs::write(&uai, serialize_uai(&g.network))?;
    fs::write(&evid, serialize_evidence(&g.evidence))?;
    let mut sidecar = serde_json::to_value(&spec).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    sidecar["network"] = uai.file_name().map(|f| f.to_string_lossy().into_owned()).into();
    sidecar["evidence"] = evid.file_name().map(|f| f.to_string_lossy().into_owned()).into();
    if let Some(c) = &g.codeword {
        sidecar["codeword"] = c.clone().into();
    }
    fs::write(with_suffix(out, ".json"), format!("{sidecar}\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Error> {
    let text = fs::read_to_string(&args.manifest)?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&text, base)?;
    let cfg = BenchConfig {
        algorithms: args.algorithms.iter().map(|&a| a.into()).collect(),
        i_bounds: args.i_bounds.clone(),
        base: args.search.config(Algorithm::Aobf, 0)?,
        jobs: args.jobs,
        omit_time: args.search.omit_time,
    };
    let report = run_bench(&entries, &cfg)?;
    let mut rows = report.records.clone();
    rows.extend(report.averages.iter().cloned());
    let csv = records_to_csv(&rows)?;
    match &args.output {
        Some(p) => fs::write(p, csv)?,
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    if let Some(p) = &args.gnuplot {
        fs::write(p, gnuplot_data(&report.averages))?;
    }
    Ok(ExitCode::SUCCESS)
}
