use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pureheap::algorithms::{dijkstra_workload, sort_workload};
use pureheap::{
    cross_check, enumerate_marked_forests, run_adversary, run_workload, verify_lemmas, AlgorithmKind, Mode,
    Recording, RunConfig, SuiteConfig, Workload,
};

#[derive(Parser)]
#[command(name = "pureheap", version, about = "Pure heap model VM, pairing-heap programs and decrease-key adversary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adversary and write its JSON report.
    Adversary(AdversaryArgs),
    /// Run the lemma and accounting suites; exits 1 if any check fails.
    VerifyLemmas(VerifyArgs),
    /// Run a workload and print cost statistics as JSON.
    Bench(BenchArgs),
    /// Write or replay trace recordings.
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Count ordered forests on n nodes with mark bits.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Refuse sizes above this.
        #[arg(long, default_value_t = pureheap::adversary::enumerate::DEFAULT_CAP)]
        cap: usize,
    },
}

#[derive(Args)]
struct AdversaryArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    algorithm: Option<AlgorithmKind>,
    #[arg(long)]
    q: Option<usize>,
    /// Check incremental ranks against a from-scratch evaluation.
    #[arg(long)]
    audit: bool,
    /// Run exact and ledger mode side by side and report both.
    #[arg(long)]
    cross_check: bool,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Ledger,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WorkloadKind {
    Sort,
    Dijkstra,
}

#[derive(Args)]
struct WorkloadArgs {
    #[arg(long, value_enum, default_value = "sort")]
    workload: WorkloadKind,
    /// Read operations from a file (`INS v`, `DK h d`, `EM` per line) instead.
    #[arg(long, conflicts_with = "workload")]
    ops: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Algorithm to run; both when omitted.
    #[arg(long)]
    algorithm: Option<AlgorithmKind>,
    #[command(flatten)]
    workload: WorkloadArgs,
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Record a workload, or the surviving adversary sequence, as a trace file.
    Dump {
        #[arg(long, default_value = "two-pass")]
        algorithm: AlgorithmKind,
        #[command(flatten)]
        workload: WorkloadArgs,
        /// Record the adversary's representative sequence with this many rounds.
        #[arg(long)]
        adversary_rounds: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Re-execute a trace file, checking every return value and snapshot.
    Replay { file: PathBuf },
}

enum Failure {
    Usage(anyhow::Error),
    Verification(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<pureheap::ConfigError> for Failure {
    fn from(e: pureheap::ConfigError) -> Self {
        Failure::Usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Adversary(a) => adversary(a),
        Command::VerifyLemmas(v) => verify(v),
        Command::Bench(b) => bench(b),
        Command::Trace(TraceCommand::Dump {
            algorithm,
            workload,
            adversary_rounds,
            output,
        }) => dump(algorithm, &workload, adversary_rounds, &output),
        Command::Trace(TraceCommand::Replay { file }) => replay(&file),
        Command::Enumerate { n, cap } => {
            let count = enumerate_marked_forests(n, cap).map_err(|e| anyhow!(e))?;
            println!("{count}");
            Ok(())
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn adversary(a: AdversaryArgs) -> Result<(), Failure> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(m) = a.mode {
        cfg.mode = match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Ledger => Mode::Ledger,
        };
    }
    if let Some(alg) = a.algorithm {
        cfg.algorithm = alg;
    }
    if a.q.is_some() {
        cfg.q = a.q;
    }
    cfg.audit |= a.audit;
    let adv = cfg.to_adversary().map_err(|e| anyhow!(e))?;
    for w in adv.params.warnings() {
        eprintln!("warning: {w}");
    }
    if a.cross_check {
        let c = cross_check(&adv).map_err(|e| anyhow!(e))?;
        write_out(a.output.as_deref(), &serde_json::to_string_pretty(&c).map_err(|e| anyhow!(e))?)?;
        if !c.passed() {
            return Err(Failure::Verification("exact and ledger modes disagree".into()));
        }
        return Ok(());
    }
    let report = run_adversary(&adv).map_err(|e| anyhow!(e))?;
    write_out(a.output.as_deref(), &serde_json::to_string_pretty(&report).map_err(|e| anyhow!(e))?)?;
    if !report.verdicts.all_passed() {
        return Err(Failure::Verification(format!("{:?}", report.verdicts)));
    }
    Ok(())
}

fn verify(v: VerifyArgs) -> Result<(), Failure> {
    let report = verify_lemmas(&SuiteConfig {
        n: v.n,
        trials: v.trials,
        seed: v.seed,
        ..Default::default()
    })
    .map_err(|e| anyhow!(e))?;
    if v.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| anyhow!(e))?);
    } else {
        for c in &report.checks {
            let status = if c.tally.passed() { "ok" } else { "FAILED" };
            print!("{:<14} {status:<6} {} checked, {} violations", c.name, c.tally.checked, c.tally.violations);
            match &c.tally.first_violation {
                Some(f) => println!(" (first: {f})"),
                None => println!(),
            }
        }
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.tally.passed()).map(|c| c.name).collect();
        Err(Failure::Verification(failed.join(", ")))
    }
}

fn load_workload(w: &WorkloadArgs) -> anyhow::Result<Workload> {
    if let Some(p) = &w.ops {
        let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        return text.parse().map_err(|e| anyhow!("{}: {e}", p.display()));
    }
    Ok(match w.workload {
        WorkloadKind::Sort => sort_workload(w.n, w.seed),
        WorkloadKind::Dijkstra => dijkstra_workload(w.n, w.seed),
    })
}

fn bench(b: BenchArgs) -> Result<(), Failure> {
    let workload = load_workload(&b.workload)?;
    let kinds: Vec<AlgorithmKind> = match b.algorithm {
        Some(a) => vec![a],
        None => AlgorithmKind::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for kind in kinds {
        let (mut report, _) = run_workload(kind, Default::default(), pureheap::DEFAULT_RHO, &workload, false)
            .map_err(|e| anyhow!(e))?;
        report.extracted.clear();
        report.cost.per_operation.clear();
        reports.push(report);
    }
    println!("{}", serde_json::to_string_pretty(&reports).map_err(|e| anyhow!(e))?);
    Ok(())
}

fn dump(algorithm: AlgorithmKind, w: &WorkloadArgs, rounds: Option<usize>, output: &Path) -> Result<(), Failure> {
    let workload = match rounds {
        Some(k) => {
            let cfg = RunConfig {
                n: w.n,
                k,
                algorithm,
                ..Default::default()
            };
            let report = run_adversary(&cfg.to_adversary()?).map_err(|e| anyhow!(e))?;
            Workload {
                ops: report.representative_ops,
            }
        }
        None => load_workload(w)?,
    };
    let (_, rec) = run_workload(algorithm, Default::default(), pureheap::DEFAULT_RHO, &workload, true)
        .map_err(|e| anyhow!(e))?;
    let rec = rec.expect("recording requested");
    write_out(Some(output), &rec.to_string())?;
    Ok(())
}

fn replay(file: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    let rec: Recording = text.parse().map_err(|e| anyhow!("{}: {e}", file.display()))?;
    match rec.replay() {
        Ok(heap) => {
            println!("{}", heap.forest().structure_code());
            Ok(())
        }
        Err(e) => Err(Failure::Verification(e.to_string())),
    }
}
