use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use a2lab_core::characteristics::A2SearchConfig;
use a2lab_core::lab::{
    characterize, emit_report, exp_chain, exp_char, exp_strong_lower, exp_weak_lower, parse_formats, run_checks,
    ChainConfig, ChainInput, CharConfig, CheckConfig, ExperimentReport, StrongConfig, WeakConfig, CHAIN_SWEEP,
    CHAR_SWEEP, STRONG_SWEEP, WEAK_SWEEP,
};
use a2lab_core::weights::{PairSpec, DEFAULT_TAIL_TOLERANCE};

#[derive(Parser)]
#[command(name = "a2lab", version, about = "Sharpness experiments for sparse operators on A2 weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// A2 characteristic of one weight pair, or the lacunary sweep.
    Char(CharArgs),
    /// Strong-type lower bound on the lacunary weights.
    StrongLower(StrongArgs),
    /// Weak-type lower bound on the power weights.
    WeakLower(WeakArgs),
    /// Chain flattening and domination on the power weights.
    Chain(ChainArgs),
    /// Invariant suite on seeded random data.
    Check(CheckArgs),
}

#[derive(Args)]
struct Common {
    /// Comma separated values of a, with alpha = 2^-a.
    #[arg(long, value_delimiter = ',')]
    a_list: Option<Vec<u32>>,
    /// Tail tolerance of the lacunary weights.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOLERANCE)]
    tol: f64,
    /// Candidates refined by the A2 search.
    #[arg(long)]
    budget: Option<usize>,
    /// Directory for the report files; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv,json,svg")]
    format: String,
}

impl Common {
    fn a2(&self, depth: Option<u32>) -> A2SearchConfig {
        let mut cfg = A2SearchConfig::default();
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(d) = depth {
            cfg.depth = d;
        }
        cfg
    }

    fn a_list(&self, default: &[u32]) -> Vec<u32> {
        self.a_list.clone().unwrap_or_else(|| default.to_vec())
    }
}

#[derive(Args)]
struct CharArgs {
    #[command(flatten)]
    common: Common,
    /// Characterize a single pair such as `lacunary:a=6` or `power:alpha=0.25`.
    #[arg(long)]
    pair: Option<PairSpec>,
    /// Generation depth of the dyadic floor.
    #[arg(long)]
    depth: Option<u32>,
    /// Where to write the single-pair summary.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct StrongArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    kmax: Option<u64>,
    #[arg(long)]
    jmax: Option<u64>,
}

#[derive(Args)]
struct WeakArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    kmax: Option<u64>,
}

#[derive(Args)]
struct ChainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    kmax: Option<u64>,
    /// Input functions, `sigma` and/or `one`.
    #[arg(long, value_delimiter = ',', default_value = "sigma,one")]
    inputs: Vec<ChainInput>,
    /// Points of the domination grid.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Random terms for the quadrature comparison.
    #[arg(long)]
    terms: Option<usize>,
    /// Random intervals for the inequality checks.
    #[arg(long)]
    intervals: Option<usize>,
}

fn print_report(report: &ExperimentReport) {
    println!("{}: {}", report.experiment, report.quantity);
    for row in &report.rows {
        let oracle = row.oracle_log2.map_or_else(|| "-".to_string(), |o| format!("{o:.6}"));
        println!(
            "  a={:<3} log2 A2={:<10.6} log2 q={:<12.6} oracle={:<12} {:>9.1} ms",
            row.a, row.a2_log2, row.quantity_log2, oracle, row.cpu_ms
        );
    }
    if let Some(f) = report.fit {
        println!("  slope {:.6} (intercept {:.6}, rms {:.2e})", f.slope, f.intercept, f.residual);
    }
    for (key, f) in &report.fits {
        println!("  slope of {key}: {:.6}", f.slope);
    }
    for a in &report.assertions {
        let mark = if a.passed { "PASS" } else { "FAIL" };
        if a.detail.is_empty() {
            println!("  [{mark}] {}", a.name);
        } else {
            println!("  [{mark}] {}: {}", a.name, a.detail);
        }
    }
    println!("  elapsed {:.0} ms", report.elapsed_ms);
}

fn finish(report: ExperimentReport, common: &Common) -> Result<ExitCode> {
    print_report(&report);
    if let Some(dir) = &common.out {
        let formats = parse_formats(&common.format)?;
        for path in emit_report(&report, &formats, dir)? {
            println!("  wrote {}", path.display());
        }
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Char(args) => {
            let a2 = args.common.a2(args.depth);
            if let Some(spec) = args.pair {
                let pair = spec.build()?;
                let summary = characterize(&pair, &a2)?;
                let text = serde_json::to_string_pretty(&summary)?;
                println!("{text}");
                if let Some(path) = &args.json {
                    write_json(path, &text)?;
                }
                return Ok(ExitCode::SUCCESS);
            }
            let cfg = CharConfig { tail_tolerance: args.common.tol, a2 };
            let report = exp_char(&args.common.a_list(&CHAR_SWEEP), &cfg)?;
            if let Some(path) = &args.json {
                write_json(path, &serde_json::to_string_pretty(&report)?)?;
            }
            finish(report, &args.common)
        }
        Command::StrongLower(args) => {
            let cfg = StrongConfig {
                tail_tolerance: args.common.tol,
                kmax: args.kmax,
                jmax: args.jmax,
                a2: args.common.a2(None),
                ..StrongConfig::default()
            };
            finish(exp_strong_lower(&args.common.a_list(&STRONG_SWEEP), &cfg)?, &args.common)
        }
        Command::WeakLower(args) => {
            let cfg = WeakConfig { kmax: args.kmax, a2: args.common.a2(None), ..WeakConfig::default() };
            finish(exp_weak_lower(&args.common.a_list(&WEAK_SWEEP), &cfg)?, &args.common)
        }
        Command::Chain(args) => {
            let mut cfg = ChainConfig { kmax: args.kmax, a2: args.common.a2(None), ..ChainConfig::default() };
            if let Some(g) = args.grid {
                cfg.grid = g;
            }
            finish(exp_chain(&args.common.a_list(&CHAIN_SWEEP), &args.inputs, &cfg)?, &args.common)
        }
        Command::Check(args) => {
            let mut cfg = CheckConfig { seed: args.seed, ..CheckConfig::default() };
            if let Some(n) = args.terms {
                cfg.terms = n;
            }
            if let Some(n) = args.intervals {
                cfg.intervals = n;
            }
            finish(run_checks(&cfg)?, &args.common)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
