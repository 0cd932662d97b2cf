//! Command-line front end: construct traces, audit them, and emit CSV
//! reports. Batch-oriented and non-interactive; all output is files plus
//! a human-readable table or diagnostic on stdout/stderr.
//!
//! Exit codes are a stable contract:
//! `0` success, `1` usage or I/O error, `2` construction failure,
//! `3` audit failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::construction::{run_construction, BranchReader, ConstructionTrace, Mode};
use crate::psi::{PsiError, PsiSpec};
use crate::quad::QuadReal;
use crate::rational::to_decimal_string;
use crate::trace::{trace_from_json, trace_to_json};
use crate::verify::{audit_trace, normalized_error};

const EXIT_USAGE: u8 = 1;
const EXIT_CONSTRUCTION: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "diophantine",
    about = "Construct and audit best-approximation traces of planar linear forms",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the construction and write a trace JSON file.
    Construct(ConstructArgs),
    /// Audit a trace against the independent enumeration oracle.
    Verify(VerifyArgs),
    /// Tabulate normalized errors against the theorem bands as CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Target function: inline ("constant:1/28", "power:1/28:1/4",
    /// "log:1/25:3") or a path to a JSON spec file.
    #[arg(long)]
    psi: String,
    /// Number of vectors K to construct (K >= 2; K = 2 is the base case).
    #[arg(long)]
    steps: u32,
    /// Argument fed to psi: "norm" uses |m_k|, "index" uses k.
    #[arg(long, default_value = "norm")]
    mode: String,
    /// Branch seed bitstring consumed at tie points (e.g. "0", "0110").
    #[arg(long, default_value = "0")]
    seed: String,
    /// Output path for the trace JSON.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trace JSON file to audit.
    trace: PathBuf,
    /// Largest squared norm the enumeration oracle is allowed to scan.
    #[arg(long, default_value_t = 100_000_000)]
    budget: u64,
    /// Worker threads for the enumeration (DIOPHANTINE_THREADS overrides).
    #[arg(long)]
    threads: Option<usize>,
    /// Optional output path for the audit report JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace JSON file to tabulate.
    trace: PathBuf,
    /// Output path for the CSV (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

/// Parse an inline or file psi spec. Syntax and I/O problems are usage
/// errors (exit 1); a well-formed but inadmissible spec is a
/// construction failure (exit 2).
fn load_psi(arg: &str) -> Result<PsiSpec, (u8, String)> {
    let classify = |e: PsiError| match e {
        PsiError::InadmissibleSpec(_) => (EXIT_CONSTRUCTION, e.to_string()),
        PsiError::Malformed(_) => (EXIT_USAGE, e.to_string()),
    };
    if arg.contains(':') {
        PsiSpec::parse_inline(arg).map_err(classify)
    } else {
        let text = std::fs::read_to_string(arg)
            .map_err(|e| (EXIT_USAGE, format!("cannot read psi spec {arg}: {e}")))?;
        let spec: PsiSpec = serde_json::from_str(&text)
            .map_err(|e| (EXIT_USAGE, format!("malformed psi spec {arg}: {e}")))?;
        spec.validate().map_err(classify)?;
        Ok(spec)
    }
}

fn load_trace(path: &PathBuf) -> Result<ConstructionTrace, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read trace {}: {e}", path.display()))?;
    trace_from_json(&text).map_err(|e| format!("invalid trace {}: {e}", path.display()))
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let from_env = match std::env::var("DIOPHANTINE_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| format!("DIOPHANTINE_THREADS must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = from_env.or(flag) {
        if n == 0 {
            return Err("worker count must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("cannot configure thread pool: {e}"))?;
    }
    Ok(())
}

fn cmd_construct(args: &ConstructArgs) -> ExitCode {
    if args.steps < 2 {
        return usage_error("K must be ≥ 2");
    }
    let mode = match args.mode.as_str() {
        "norm" => Mode::Norm,
        "index" => Mode::Index,
        other => return usage_error(&format!("mode must be \"norm\" or \"index\", got {other:?}")),
    };
    let spec = match load_psi(&args.psi) {
        Ok(s) => s,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code);
        }
    };
    let mut branch = match BranchReader::from_bitstring(&args.seed) {
        Ok(b) => b,
        Err(e) => return usage_error(&e),
    };
    match run_construction(&spec, args.steps, mode, &mut branch) {
        Ok(trace) => {
            let json = trace_to_json(&trace);
            if let Err(e) = std::fs::write(&args.output, json) {
                return usage_error(&format!("cannot write {}: {e}", args.output.display()));
            }
            println!(
                "wrote {} ({} states, {} vectors, branch bits consumed: {})",
                args.output.display(),
                trace.steps.len(),
                trace.steps.len() + 1,
                trace.branch.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("construction failed: {e}");
            ExitCode::from(EXIT_CONSTRUCTION)
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    if args.budget == 0 {
        return usage_error("budget must be at least 1");
    }
    if let Err(e) = configure_threads(args.threads) {
        return usage_error(&e);
    }
    let trace = match load_trace(&args.trace) {
        Ok(t) => t,
        Err(e) => return usage_error(&e),
    };
    let report = audit_trace(&trace, args.budget);
    print!("{}", report.to_table());
    if let Some(path) = &args.output {
        let json = match serde_json::to_string_pretty(&report) {
            Ok(j) => j + "\n",
            Err(e) => return usage_error(&format!("cannot serialize report: {e}")),
        };
        if let Err(e) = std::fs::write(path, json) {
            return usage_error(&format!("cannot write {}: {e}", path.display()));
        }
    }
    if report.all_passed {
        println!("audit passed: all checks verified");
        ExitCode::SUCCESS
    } else {
        eprintln!("audit failed: {}", report.failures[0]);
        ExitCode::from(EXIT_AUDIT)
    }
}

/// 30 significant digits from a value known exactly in Q(sqrt(2)); the
/// 256-bit enclosure is far tighter than the rendered precision.
fn csv_number(x: &QuadReal) -> String {
    to_decimal_string(&x.enclosure(256).0, 30)
}

fn cmd_report(args: &ReportArgs) -> ExitCode {
    let trace = match load_trace(&args.trace) {
        Ok(t) => t,
        Err(e) => return usage_error(&e),
    };
    // the theorem band is certified for k = 1 .. K-2, i.e. every state
    // except the last (which carries the anchor itself)
    if trace.steps.len() < 2 {
        return usage_error("trace has no certified rows to report (need K ≥ 3)");
    }
    let alpha_deep = &trace.steps.last().unwrap().alpha;
    let g = QuadReal::gamma();
    let mut csv = String::from(
        "k,sq_norm,psi_hat,lower_band,normalized_err,upper_band,margin_left,margin_right\n",
    );
    for st in &trace.steps[..trace.steps.len() - 1] {
        let psi = QuadReal::from_rat(st.psi_hat.value.clone());
        let psi2 = &psi * &psi;
        let lower = &psi - &(QuadReal::from_int(4) * &g * &psi2);
        let upper = &psi + &(&g * &psi2);
        let err = QuadReal::from_rat(normalized_error(alpha_deep, &st.m_k));
        let left = &err - &lower;
        let right = &upper - &err;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            st.k,
            st.m_k.sq_norm(),
            csv_number(&psi),
            csv_number(&lower),
            csv_number(&err),
            csv_number(&upper),
            csv_number(&left),
            csv_number(&right),
        ));
    }
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                return usage_error(&format!("cannot write {}: {e}", path.display()));
            }
            println!("wrote {} ({} rows)", path.display(), trace.steps.len() - 1);
            ExitCode::SUCCESS
        }
        None => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
    }
}

/// Entry point shared by the binary; returns the process exit code.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are success, everything else is usage
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(EXIT_USAGE);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match &cli.command {
        Command::Construct(a) => cmd_construct(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Report(a) => cmd_report(a),
    }
}
