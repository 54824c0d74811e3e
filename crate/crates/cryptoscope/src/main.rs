//! Command-line entry point: `scan` a source tree, or `evaluate` a labeled
//! corpus. Findings are data, so a scan with vulnerabilities still exits 0
//! unless `--fail-on` asks for CI gating.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cryptoscope::eval::{format_report, run_corpus};
use cryptoscope::scan::{run_scan, ScanConfig};

#[derive(Parser)]
#[command(
    name = "cryptoscope",
    version,
    about = "Discovers cryptographic operations in Java sources, emits a CBOM inventory, and checks it against CWE rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a source tree; write cbom.json, vulns.json, scan-report.json
    Scan(ScanArgs),
    /// Scan every labeled project under a corpus directory and score the
    /// results; write eval-report.json
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, PartialEq, PartialOrd, ValueEnum)]
enum Severity {
    Minor,
    Major,
    Critical,
}

impl Severity {
    fn rank(name: &str) -> usize {
        match name {
            "Minor" => 0,
            "Major" => 1,
            _ => 2,
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// Knowledge-base overlay merged over the built-in API facts (repeatable)
    #[arg(long = "kb", value_name = "FILE")]
    kb: Vec<PathBuf>,
    /// Weakness policy overrides (weak algorithm lists, thresholds, severities)
    #[arg(long, value_name = "FILE")]
    policy: Option<PathBuf>,
    /// Call-string depth for context-sensitive value propagation
    #[arg(long, value_name = "K", default_value_t = 3)]
    context_depth: usize,
    /// Cap on individually reported calling contexts per criterion
    #[arg(long, value_name = "N", default_value_t = 64)]
    max_contexts: usize,
    /// Statement budget per backward slice
    #[arg(long, value_name = "N", default_value_t = 50_000)]
    slice_budget: usize,
    /// Statement-visit budget for constant propagation
    #[arg(long, value_name = "N", default_value_t = 2_000_000)]
    const_budget: u64,
    /// Only scan files matching these globs (repeatable; default **/*.java)
    #[arg(long, value_name = "GLOB")]
    include: Vec<String>,
    /// Skip files matching these globs (repeatable)
    #[arg(long, value_name = "GLOB")]
    exclude: Vec<String>,
    /// Scan every file instead of pruning crypto-unrelated ones first
    #[arg(long)]
    no_prefilter: bool,
}

#[derive(Args)]
struct ScanArgs {
    /// Root directory of the sources to scan
    root_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "cryptoscope-out")]
    out: PathBuf,
    /// Exit nonzero when a finding of this severity (or worse) exists
    #[arg(long, value_name = "SEVERITY")]
    fail_on: Option<Severity>,
    /// Also write the intermediate representation to ir.json
    #[arg(long)]
    dump_ir: bool,
    /// Also write the program slices to slices.json
    #[arg(long)]
    dump_slices: bool,
    /// Also write the raw asset records to assets.json
    #[arg(long)]
    dump_assets: bool,
    /// Fix the CBOM timestamp (RFC3339) for reproducible output
    #[arg(long, value_name = "TIME")]
    timestamp: Option<String>,
    /// Fix the CBOM serial number for reproducible output
    #[arg(long, value_name = "SERIAL")]
    serial: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory whose subdirectories are labeled projects
    /// (labels.json + expected-vulns.json each)
    corpus_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "cryptoscope-eval")]
    out: PathBuf,
}

fn apply_pipeline(config: &mut ScanConfig, args: &PipelineArgs) {
    config.kb_paths = args.kb.clone();
    config.policy_path = args.policy.clone();
    config.context_depth = args.context_depth;
    config.max_contexts = args.max_contexts;
    config.slice_budget = args.slice_budget;
    config.const_budget = args.const_budget;
    config.include_globs = args.include.clone();
    config.exclude_globs = args.exclude.clone();
    config.no_prefilter = args.no_prefilter;
}

fn scan(args: ScanArgs) -> ExitCode {
    let mut config = ScanConfig::new(&args.root_dir, &args.out);
    apply_pipeline(&mut config, &args.pipeline);
    config.dump_ir = args.dump_ir;
    config.dump_slices = args.dump_slices;
    config.dump_assets = args.dump_assets;
    config.timestamp = args.timestamp.clone();
    config.serial = args.serial.clone();

    let outcome = match run_scan(&config) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let r = &outcome.report;
    println!(
        "scanned {} files ({} pruned, {} parse errors), {} lines in {} ms ({:.0} lines/s)",
        r.files_scanned,
        r.files_pruned,
        r.parse_errors,
        r.total_lines,
        r.elapsed.total_ms,
        r.lines_per_second,
    );
    println!(
        "criteria {} -> slices {} ({} merged, {} incomplete) -> assets {} -> findings {}",
        r.criteria_found, r.slices, r.merged_slices, r.incomplete_slices, r.assets, r.vulns
    );
    for (cwe, n) in &r.vulns_by_cwe {
        println!("  {cwe}: {n}");
    }
    if r.const_budget_exceeded {
        eprintln!("warning: constant-propagation budget exceeded; some values unresolved");
    }
    println!("wrote {}", args.out.join("cbom.json").display());
    println!("wrote {}", args.out.join("vulns.json").display());
    println!("wrote {}", args.out.join("scan-report.json").display());

    if let Some(threshold) = args.fail_on {
        let gate = threshold as usize;
        let worst = outcome
            .vulns
            .iter()
            .map(|v| Severity::rank(&v.vulnerability_score))
            .max();
        if let Some(worst) = worst {
            if worst >= gate {
                eprintln!("failing: finding at or above the requested severity");
                return ExitCode::from(3);
            }
        }
    }
    ExitCode::SUCCESS
}

fn evaluate(args: EvaluateArgs) -> ExitCode {
    let mut config = ScanConfig::new("unused", &args.out);
    apply_pipeline(&mut config, &args.pipeline);
    let report = match run_corpus(&args.corpus_dir, &config) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    print!("{}", format_report(&report));
    println!("wrote {}", args.out.join("eval-report.json").display());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Scan(args) => scan(args),
        Command::Evaluate(args) => evaluate(args),
    }
}
