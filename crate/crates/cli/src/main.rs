use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::hint::black_box;
use std::time::Instant;

use anytrust::error::Error;
use anytrust::group::{metered, multi_exp, GroupElement, Scalar};
use anytrust::sim::{self, PolicyKind, Report, Scenario, SimConfig};
use anytrust::weights::{allocate_sub_ids, check_qualified, size_bound, WeightVector};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anytrust", version, about = "Any-trust DKG, extended broadcast and checkpointing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one DKG session.
    Dkg(Common),
    /// Run one extended-broadcast instance.
    Broadcast {
        #[command(flatten)]
        common: Common,
        /// Bytes per sender value.
        #[arg(long)]
        payload_len: Option<usize>,
        #[arg(long)]
        senders: Option<usize>,
        /// Expected "check" committee size.
        #[arg(long)]
        c_expected: Option<u64>,
    },
    /// Run a chain of checkpoint epochs over weighted validators.
    Checkpoint {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<u32>,
        /// File with one validator weight per line.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Print the sub-ID allocation for a weight file as TSV.
    Allocate {
        weights: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the core primitives and one DKG run.
    Bench {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        iters: u32,
    },
}

#[derive(Args)]
struct Common {
    /// Base key=value config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_policy)]
    adversary: Option<PolicyKind>,
    /// Nodes the adversary corrupts, at most t.
    #[arg(long)]
    corrupt: Option<usize>,
    /// Expected committee size; with --sortition and no value the any-trust ratio is used.
    #[arg(long)]
    s_expected: Option<u64>,
    /// Elect committees by VRF sortition instead of the forced test mode.
    #[arg(long)]
    sortition: bool,
    /// Write the line-delimited report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the message trace next to the report.
    #[arg(long, requires = "report")]
    trace: bool,
    /// Include wall-clock records; the report is then not reproducible.
    #[arg(long)]
    timing: bool,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn usage(kind: ErrorKind, msg: impl std::fmt::Display) -> ! {
    Cli::command().error(kind, msg).exit()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| usage(ErrorKind::Io, format!("{}: {e}", path.display())))
}

impl Common {
    fn config(&self, scenario: Scenario) -> SimConfig {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::parse(&read(p)).unwrap_or_else(|e| usage(ErrorKind::InvalidValue, e)),
            None => SimConfig::new(scenario, 8, 3, 1),
        };
        cfg.scenario = scenario;
        if let Some(n) = self.n {
            cfg.n = n;
            cfg.t = (n.max(1) - 1) / 2;
        }
        cfg.t = self.t.unwrap_or(cfg.t);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.adversary = self.adversary.unwrap_or(cfg.adversary);
        cfg.corrupt = self.corrupt.or(cfg.corrupt);
        if self.sortition {
            cfg.forced = false;
            cfg.s_expected = self.s_expected;
        } else if self.s_expected.is_some() {
            cfg.s_expected = self.s_expected;
        }
        cfg.trace |= self.trace;
        cfg.timing |= self.timing;
        cfg
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, cfg) = match cli.command {
        Command::Allocate { weights, out } => return allocate(&weights, out.as_deref()),
        Command::Bench { n, iters } => return bench(n, iters),
        Command::Dkg(common) => {
            let cfg = common.config(Scenario::Dkg);
            (common, cfg)
        }
        Command::Broadcast { common, payload_len, senders, c_expected } => {
            let mut cfg = common.config(Scenario::Broadcast);
            cfg.payload_len = payload_len.unwrap_or(cfg.payload_len);
            cfg.senders = senders.or(cfg.senders);
            cfg.c_expected = c_expected.or(cfg.c_expected);
            (common, cfg)
        }
        Command::Checkpoint { common, epochs, weights } => {
            if common.n.is_some() || common.t.is_some() {
                usage(ErrorKind::ArgumentConflict, "checkpoint derives n and t from the weights; drop --n/--t");
            }
            let mut cfg = common.config(Scenario::Checkpoint { epochs: 3 });
            if let Some(e) = epochs.or(match cfg.scenario {
                Scenario::Checkpoint { epochs } => Some(epochs),
                _ => None,
            }) {
                cfg.scenario = Scenario::Checkpoint { epochs: e };
            }
            if let Some(p) = weights {
                let w = WeightVector::parse(&read(&p)).unwrap_or_else(|e| usage(ErrorKind::InvalidValue, e));
                cfg.weights = Some(w.weights().to_vec());
            }
            (common, cfg)
        }
    };
    if let Err(e) = cfg.validate() {
        usage(ErrorKind::ValueValidation, e);
    }
    match sim::run(&cfg) {
        Ok(report) => {
            print_summary(&cfg, &report);
            match write_report(&common, &report) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn write_report(common: &Common, report: &Report) -> std::io::Result<()> {
    let Some(path) = &common.report else { return Ok(()) };
    fs::write(path, report.to_jsonl())?;
    if common.trace {
        let mut trace = path.clone().into_os_string();
        trace.push(".trace");
        fs::write(trace, report.trace_jsonl())?;
    }
    Ok(())
}

fn print_summary(cfg: &SimConfig, report: &Report) {
    let first = report.records.first();
    let (n, t) = first.map_or((cfg.n, cfg.t), |r| (r.n, r.t));
    println!("{} n={n} t={t} seed={} adversary={}", cfg.scenario.name(), cfg.seed, cfg.adversary);
    for r in &report.records {
        if matches!(r.phase.as_str(), "verdict" | "traffic" | "total" | "chain" | "setup") {
            println!("  {:<10} {:<24} {}", r.phase, r.metric, r.value);
        }
    }
}

fn allocate(path: &Path, out: Option<&Path>) -> ExitCode {
    let w = WeightVector::parse(&read(path)).unwrap_or_else(|e| usage(ErrorKind::InvalidValue, e));
    let a = allocate_sub_ids(&w);
    let tsv = a.to_tsv(&w);
    match out {
        Some(p) => {
            if let Err(e) = fs::write(p, &tsv) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{tsv}"),
    }
    let bound = size_bound(&w).map_or("n/a".to_string(), |b| b.to_string());
    eprintln!(
        "divisor={} sub_ids={} bound={bound} qualified={}",
        a.divisor,
        a.sub_ids(),
        check_qualified(w.weights(), &a.d)
    );
    ExitCode::SUCCESS
}

fn bench(n: usize, iters: u32) -> ExitCode {
    if n < 3 || iters == 0 {
        usage(ErrorKind::ValueValidation, "bench needs n >= 3 and iters >= 1");
    }
    let x = Scalar::from_u64(0x1234_5678_9abc_def1);
    let p = GroupElement::base_exp(&x);
    let time = |label: &str, f: &mut dyn FnMut() -> GroupElement| {
        let start = Instant::now();
        for _ in 0..iters {
            f();
        }
        println!("{label:<28} {:>12.1} us", start.elapsed().as_secs_f64() * 1e6 / iters as f64);
    };
    time("base_exp", &mut || black_box(GroupElement::base_exp(&x)));
    time("exp", &mut || black_box(p.exp(&x)));
    let bases = vec![p; n + 1];
    let exps: Vec<Scalar> = (0..=n as u64).map(|i| Scalar::from_u64(i * 7919 + 3)).collect();
    time(&format!("multi_exp ({} terms)", n + 1), &mut || black_box(multi_exp(&bases, &exps)));
    let cfg = SimConfig::new(Scenario::Dkg, n, (n - 1) / 2, 1);
    let start = Instant::now();
    let (res, exps) = metered(|| sim::run(&cfg));
    match res {
        Ok(r) => println!(
            "dkg n={n} s={} {:>12.1} ms  exp_total={exps}  exp_max_per_node={}",
            sim::DEFAULT_FORCED_SIZE.min(n as u64),
            start.elapsed().as_secs_f64() * 1e3,
            r.metric_u64("total", "exp_max").unwrap_or(0)
        ),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}
