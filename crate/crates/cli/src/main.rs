use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use costmart::lp::dump_lp;
use costmart::preexp::{Mode, DEFAULT_MOMENT_CAP};
use costmart::simulator::{estimate, SimConfig, SimPolicy, DEFAULT_MAX_STEPS};
use costmart::synthesis::{encode, NondetPolicy, Regime};
use costmart_cli::analyze::{analyze, report_json, AnalyzeOptions};
use costmart_cli::bench::{run_bench, run_bench_resuming, write_csv, BenchOptions};
use costmart_cli::{configure_threads, initial_values, load_file, parse_valuation, EXIT_INPUT};

/// Polynomial bounds on the expected accumulated cost of probabilistic programs.
///
/// Exit codes: 0 success, 1 input error, 2 no certificate or unbounded LP.
#[derive(Parser)]
#[command(name = "costmart", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize upper and/or lower bounds and print a JSON report.
    Analyze(AnalyzeArgs),
    /// Estimate the expected cost by Monte Carlo simulation.
    Simulate(SimulateArgs),
    /// Run every program of a corpus and write a CSV table.
    Bench(BenchArgs),
    /// Print the labelled control-flow graph.
    Cfg(CfgArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    Upper,
    Lower,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    General,
    Nonneg,
}

#[derive(Clone, Copy, ValueEnum)]
enum NondetArg {
    Then,
    Else,
    Enumerate,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimNondetArg {
    Uniform,
    Then,
    Else,
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// Template degree.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// On failure, retry with degrees up to this value.
    #[arg(long)]
    max_degree: Option<u32>,
    #[arg(long, value_enum, default_value = "both")]
    bound: BoundArg,
    #[arg(long, value_enum, default_value = "general")]
    regime: RegimeArg,
    /// Maximal number of factors per certificate product.
    #[arg(long)]
    monoid_k: Option<u32>,
    /// Objective point, e.g. "x=100,y=0"; defaults to the file's init header.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    assume_concentration: bool,
    #[arg(long)]
    assume_bounded_update: bool,
    /// Require h >= 0 on every invariant, in any regime.
    #[arg(long)]
    force_nonneg_template: bool,
    /// Fail instead of warning when a soundness prerequisite is not met.
    #[arg(long)]
    strict: bool,
    /// Successor used by lower bounds at nondeterministic branches.
    #[arg(long, value_enum, default_value = "then")]
    nondet_policy: NondetArg,
    #[arg(long, default_value_t = DEFAULT_MOMENT_CAP)]
    moment_cap: u32,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the upper-bound LP in CPLEX LP format.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    nondet: SimNondetArg,
    #[arg(long)]
    init: Option<String>,
    /// Per-trial costs.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory containing bench.toml and the programs.
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: u64,
    /// Only these programs (by name); repeatable.
    #[arg(long)]
    only: Vec<String>,
    /// Reuse error-free rows of an existing output file.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct CfgArgs {
    file: PathBuf,
    /// Graphviz output instead of a table.
    #[arg(long)]
    dot: bool,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<i32> {
    let loaded = load_file(&a.file)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let opts = AnalyzeOptions {
        degree: a.degree,
        max_degree: a.max_degree,
        modes: match a.bound {
            BoundArg::Upper => vec![Mode::Upper],
            BoundArg::Lower => vec![Mode::Lower],
            BoundArg::Both => vec![Mode::Upper, Mode::Lower],
        },
        regime: match a.regime {
            RegimeArg::General => Regime::General,
            RegimeArg::Nonneg => Regime::NonNeg,
        },
        monoid_k: a.monoid_k,
        init: a.init.as_deref().map(parse_valuation).transpose()?.unwrap_or_default(),
        assume_concentration: a.assume_concentration,
        assume_bounded_update: a.assume_bounded_update,
        force_nonneg_template: a.force_nonneg_template,
        strict: a.strict,
        nondet: match a.nondet_policy {
            NondetArg::Then => NondetPolicy::Then,
            NondetArg::Else => NondetPolicy::Else,
            NondetArg::Enumerate => NondetPolicy::Enumerate,
        },
        moment_cap: a.moment_cap,
    };
    if let Some(p) = &a.dump_lp {
        let enc = encode(&loaded.cfg, &opts.config(Mode::Upper, opts.degree), &|_| 0)?;
        std::fs::write(p, dump_lp(&enc.lp)).with_context(|| format!("writing {}", p.display()))?;
    }
    let out = analyze(&loaded, &opts);
    for (m, r) in &out.results {
        if let Err(e) = r {
            eprintln!("error ({m}): {e}");
        }
    }
    let report = report_json(&a.file.display().to_string(), &loaded, &opts, &out);
    let mut w = sink(&a.out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    Ok(out.exit_code())
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let loaded = load_file(&a.file)?;
    let overrides = a.init.as_deref().map(parse_valuation).transpose()?.unwrap_or_default();
    let sc = SimConfig {
        trials: a.trials.max(1),
        seed: a.seed,
        max_steps: a.max_steps.max(1),
        policy: match a.nondet {
            SimNondetArg::Uniform => SimPolicy::Uniform,
            SimNondetArg::Then => SimPolicy::Then,
            SimNondetArg::Else => SimPolicy::Else,
        },
        init: initial_values(&loaded.cfg, &overrides)?,
    };
    let r = estimate(&loaded.cfg, &sc);
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(p) = &a.csv {
        costmart_cli::simulate::write_trace_csv(File::create(p)?, &r)?;
    }
    let report = costmart_cli::simulate::report_json(&a.file.display().to_string(), &sc, &r);
    let mut w = sink(&a.out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    Ok(if r.usable { 0 } else { EXIT_INPUT })
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let bo = BenchOptions {
        trials: a.trials.max(1),
        seed: a.seed,
        max_steps: a.max_steps.max(1),
        only: a.only,
    };
    let rows = match (&a.out, a.resume) {
        (Some(p), true) if p.exists() => run_bench_resuming(&a.corpus, &bo, p)?,
        _ => run_bench(&a.corpus, &bo)?,
    };
    for r in rows.iter().filter(|r| !r.error.is_empty()) {
        eprintln!("{} [{}]: {}", r.program, r.v0, r.error);
    }
    write_csv(sink(&a.out)?, &rows)?;
    Ok(0)
}

fn cmd_cfg(a: CfgArgs) -> Result<i32> {
    let loaded = load_file(&a.file)?;
    let cfg = &loaded.cfg;
    if a.dot {
        print!("{}", cfg.to_dot());
        return Ok(0);
    }
    let names = cfg.var_names();
    for l in cfg.labels() {
        let inv = l
            .invariant
            .as_ref()
            .map_or("true".to_string(), |p| p.display(&names).to_string());
        let outs: Vec<String> = l
            .out
            .iter()
            .map(|t| format!("{} -> {}", cfg.rule_text(&t.rule), t.target))
            .collect();
        println!("{:>3} {:<8} line {:<4} [{}] {}", l.id, l.kind, l.line, inv, outs.join(" | "));
    }
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    match cli.cmd {
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Cfg(a) => cmd_cfg(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
