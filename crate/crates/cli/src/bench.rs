//! Corpus sweep: one CSV row per (program, initial valuation).
//!
//! The corpus directory holds `bench.toml`, which lists the programs with
//! their analysis settings, initial valuations and optional reference
//! values. Rows are computed in parallel and written in corpus order.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;

use costmart::preexp::Mode;
use costmart::simulator::{estimate, SimConfig, SimPolicy};
use costmart::synthesis::{NondetPolicy, Regime};
use costmart::to_f64;

use crate::analyze::{analyze, AnalyzeOptions};
use crate::{initial_values, load_file, parse_valuation};

#[derive(Debug, Deserialize)]
pub struct BenchFile {
    #[serde(default)]
    pub program: Vec<BenchEntry>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    pub name: String,
    pub file: PathBuf,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default = "default_bounds")]
    pub bounds: Vec<String>,
    #[serde(default = "default_regime")]
    pub regime: String,
    pub monoid_k: Option<u32>,
    #[serde(default)]
    pub assume_concentration: bool,
    #[serde(default)]
    pub assume_bounded_update: bool,
    #[serde(default = "default_nondet")]
    pub nondet_policy: String,
    #[serde(default = "default_true")]
    pub simulate: bool,
    #[serde(default = "default_sim_policy")]
    pub sim_policy: String,
    pub v0: Vec<String>,
    #[serde(default)]
    pub expect: Vec<Expect>,
}

/// Reference values for one valuation, compared with a relative tolerance.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub v0: String,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
}

fn default_degree() -> u32 {
    2
}
fn default_bounds() -> Vec<String> {
    vec!["upper".into(), "lower".into()]
}
fn default_regime() -> String {
    "general".into()
}
fn default_nondet() -> String {
    "then".into()
}
fn default_true() -> bool {
    true
}
fn default_sim_policy() -> String {
    "uniform".into()
}
fn default_tol() -> f64 {
    0.01
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    Ok(match s {
        "upper" => Mode::Upper,
        "lower" => Mode::Lower,
        _ => bail!("unknown bound `{s}` (upper or lower)"),
    })
}

pub fn parse_regime(s: &str) -> Result<Regime> {
    Ok(match s {
        "general" => Regime::General,
        "nonneg" => Regime::NonNeg,
        _ => bail!("unknown regime `{s}` (general or nonneg)"),
    })
}

pub fn parse_nondet(s: &str) -> Result<NondetPolicy> {
    Ok(match s {
        "then" => NondetPolicy::Then,
        "else" => NondetPolicy::Else,
        "enumerate" => NondetPolicy::Enumerate,
        _ => bail!("unknown nondeterminism policy `{s}` (then, else or enumerate)"),
    })
}

pub fn parse_sim_policy(s: &str) -> Result<SimPolicy> {
    Ok(match s {
        "uniform" => SimPolicy::Uniform,
        "then" => SimPolicy::Then,
        "else" => SimPolicy::Else,
        _ => bail!("unknown simulation policy `{s}` (uniform, then or else)"),
    })
}

impl BenchEntry {
    pub fn options(&self, v0: &str) -> Result<AnalyzeOptions> {
        if self.expect.iter().any(|e| e.rel_tol.is_nan() || e.rel_tol < 0.0) {
            bail!("{}: tolerances must be nonnegative", self.name);
        }
        Ok(AnalyzeOptions {
            degree: self.degree,
            modes: self.bounds.iter().map(|b| parse_mode(b)).collect::<Result<_>>()?,
            regime: parse_regime(&self.regime)?,
            monoid_k: self.monoid_k,
            init: parse_valuation(v0)?,
            assume_concentration: self.assume_concentration,
            assume_bounded_update: self.assume_bounded_update,
            nondet: parse_nondet(&self.nondet_policy)?,
            ..Default::default()
        })
    }
}

pub fn read_bench(dir: &Path) -> Result<BenchFile> {
    let path = dir.join("bench.toml");
    if !path.exists() {
        return Ok(BenchFile { program: vec![] });
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let f: BenchFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for e in &f.program {
        if !dir.join(&e.file).exists() {
            bail!("{}: program file {} not found", e.name, e.file.display());
        }
    }
    Ok(f)
}

pub const COLUMNS: [&str; 17] = [
    "program",
    "v0",
    "upper",
    "lower",
    "upper_exact",
    "lower_exact",
    "sim_mean",
    "sim_stddev",
    "sim_completed",
    "sim_truncated",
    "check",
    "sound",
    "upper_bound",
    "lower_bound",
    "error",
    "upper_time_s",
    "lower_time_s",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub program: String,
    pub v0: String,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub upper_exact: String,
    pub lower_exact: String,
    pub sim_mean: Option<f64>,
    pub sim_stddev: Option<f64>,
    pub sim_completed: usize,
    pub sim_truncated: usize,
    /// `ok`, `mismatch` or empty when no reference applies.
    pub check: String,
    pub sound: String,
    pub upper_bound: String,
    pub lower_bound: String,
    pub error: String,
    pub upper_time_s: Option<f64>,
    pub lower_time_s: Option<f64>,
}

impl Row {
    fn record(&self) -> Vec<String> {
        let f = |x: &Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        let t = |x: &Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_default();
        vec![
            self.program.clone(),
            self.v0.clone(),
            f(&self.upper),
            f(&self.lower),
            self.upper_exact.clone(),
            self.lower_exact.clone(),
            f(&self.sim_mean),
            f(&self.sim_stddev),
            self.sim_completed.to_string(),
            self.sim_truncated.to_string(),
            self.check.clone(),
            self.sound.clone(),
            self.upper_bound.clone(),
            self.lower_bound.clone(),
            self.error.clone(),
            t(&self.upper_time_s),
            t(&self.lower_time_s),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub trials: usize,
    pub seed: u64,
    pub max_steps: u64,
    /// Restrict to programs with these names.
    pub only: Vec<String>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            trials: 1000,
            seed: 0,
            max_steps: costmart::simulator::DEFAULT_MAX_STEPS,
            only: vec![],
        }
    }
}

/// Runs one row; failures are recorded in the row, never propagated.
pub fn run_row(dir: &Path, e: &BenchEntry, v0: &str, bo: &BenchOptions) -> Row {
    let mut row = Row {
        program: e.name.clone(),
        v0: v0.to_string(),
        ..Default::default()
    };
    if let Err(err) = fill_row(dir, e, v0, bo, &mut row) {
        row.error = format!("{err:#}");
    }
    row
}

fn fill_row(dir: &Path, e: &BenchEntry, v0: &str, bo: &BenchOptions, row: &mut Row) -> Result<()> {
    let loaded = load_file(&dir.join(&e.file))?;
    let opts = e.options(v0)?;
    let names = loaded.cfg.var_names();
    let mut errors = Vec::new();
    let mut sound = Vec::new();
    let out = analyze(&loaded, &opts);
    for (m, r) in &out.results {
        match r {
            Ok(b) => {
                let v = Some(to_f64(&b.entry_value));
                let poly = b.entry_poly().display(&names).to_string();
                let time = Some(b.elapsed.as_secs_f64());
                sound.push(format!("{}={}", m, b.prerequisites.sound));
                match m {
                    Mode::Upper => {
                        row.upper = v;
                        row.upper_exact = b.entry_value.to_string();
                        row.upper_bound = poly;
                        row.upper_time_s = time;
                    }
                    Mode::Lower => {
                        row.lower = v;
                        row.lower_exact = b.entry_value.to_string();
                        row.lower_bound = poly;
                        row.lower_time_s = time;
                    }
                }
            }
            Err(err) => errors.push(format!("{m}: {err}")),
        }
    }
    row.sound = sound.join(" ");
    if e.simulate {
        let mut sc = SimConfig::new(&loaded.cfg);
        sc.trials = bo.trials;
        sc.seed = bo.seed;
        sc.max_steps = bo.max_steps;
        sc.policy = parse_sim_policy(&e.sim_policy)?;
        sc.init = initial_values(&loaded.cfg, &opts.init)?;
        let r = estimate(&loaded.cfg, &sc);
        if r.usable {
            row.sim_mean = Some(r.mean);
            row.sim_stddev = Some(r.stddev);
        }
        row.sim_completed = r.completed;
        row.sim_truncated = r.truncated;
    }
    if let Some(x) = e.expect.iter().find(|x| x.v0 == v0) {
        let close = |got: Option<f64>, want: Option<f64>| match (got, want) {
            (_, None) => true,
            (Some(g), Some(w)) => (g - w).abs() <= x.rel_tol * w.abs().max(1e-12),
            (None, Some(_)) => false,
        };
        row.check = if close(row.upper, x.upper) && close(row.lower, x.lower) {
            "ok".into()
        } else {
            "mismatch".into()
        };
    }
    row.error = errors.join("; ");
    Ok(())
}

/// All rows of the corpus in file order.
pub fn run_bench(dir: &Path, bo: &BenchOptions) -> Result<Vec<Row>> {
    let f = read_bench(dir)?;
    let jobs: Vec<(&BenchEntry, &String)> = f
        .program
        .iter()
        .filter(|e| bo.only.is_empty() || bo.only.contains(&e.name))
        .flat_map(|e| e.v0.iter().map(move |v| (e, v)))
        .collect();
    Ok(jobs.par_iter().map(|(e, v)| run_row(dir, e, v, bo)).collect())
}

/// Like [`run_bench`], but reuses rows of an earlier CSV that match by
/// program and valuation and have no error.
pub fn run_bench_resuming(dir: &Path, bo: &BenchOptions, previous: &Path) -> Result<Vec<Row>> {
    let old = read_rows(previous).unwrap_or_default();
    let f = read_bench(dir)?;
    let keep: HashMap<(String, String), Row> = old
        .into_iter()
        .filter(|r| r.error.is_empty())
        .map(|r| ((r.program.clone(), r.v0.clone()), r))
        .collect();
    let jobs: Vec<(&BenchEntry, &String)> = f
        .program
        .iter()
        .filter(|e| bo.only.is_empty() || bo.only.contains(&e.name))
        .flat_map(|e| e.v0.iter().map(move |v| (e, v)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|(e, v)| match keep.get(&(e.name.clone(), v.to_string())) {
            Some(r) => r.clone(),
            None => run_row(dir, e, v, bo),
        })
        .collect())
}

pub fn write_csv<W: Write>(w: W, rows: &[Row]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut rd = csv::Reader::from_path(path)?;
    let opt = |s: &str| s.parse::<f64>().ok();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let r = rec?;
        if r.len() != COLUMNS.len() {
            bail!("{}: unexpected column count", path.display());
        }
        rows.push(Row {
            program: r[0].to_string(),
            v0: r[1].to_string(),
            upper: opt(&r[2]),
            lower: opt(&r[3]),
            upper_exact: r[4].to_string(),
            lower_exact: r[5].to_string(),
            sim_mean: opt(&r[6]),
            sim_stddev: opt(&r[7]),
            sim_completed: r[8].parse().unwrap_or(0),
            sim_truncated: r[9].parse().unwrap_or(0),
            check: r[10].to_string(),
            sound: r[11].to_string(),
            upper_bound: r[12].to_string(),
            lower_bound: r[13].to_string(),
            error: r[14].to_string(),
            upper_time_s: opt(&r[15]),
            lower_time_s: opt(&r[16]),
        });
    }
    Ok(rows)
}
