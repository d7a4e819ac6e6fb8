//! Driver code shared by the `costmart` binary, the bench harness and the
//! acceptance suite.

pub mod analyze;
pub mod bench;
pub mod simulate;

use std::path::Path;

use anyhow::{bail, Context, Result};
use costmart::cfg::{build_cfg, reachable_check, Cfg};
use costmart::frontend::{load, ProgramAst};
use costmart::{parse_rational, Rational};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Exit codes of the binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_BOUND: i32 = 2;

pub struct Loaded {
    pub ast: ProgramAst,
    pub cfg: Cfg,
    /// Frontend and reachability warnings.
    pub warnings: Vec<String>,
}

pub fn load_source(text: &str) -> Result<Loaded> {
    let (ast, mut warnings) = load(text)?;
    let cfg = build_cfg(&ast);
    warnings.extend(reachable_check(&cfg));
    Ok(Loaded { ast, cfg, warnings })
}

pub fn load_file(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_source(&text).with_context(|| format!("in {}", path.display()))
}

/// Parses `x=100, y=1/2`.
pub fn parse_valuation(s: &str) -> Result<Vec<(String, Rational)>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((name, val)) = part.split_once('=') else {
            bail!("expected NAME=VALUE, got `{part}`");
        };
        let Some(v) = parse_rational(val) else {
            bail!("`{}` is not a number", val.trim());
        };
        out.push((name.trim().to_string(), v));
    }
    Ok(out)
}

/// Initial values of the program variables after applying overrides.
pub fn initial_values(cfg: &Cfg, overrides: &[(String, Rational)]) -> Result<Vec<Rational>> {
    let mut v = cfg.init.clone();
    for (name, val) in overrides {
        let Some(i) = cfg.pvars.iter().position(|p| p == name) else {
            bail!("unknown variable `{name}` in initial valuation");
        };
        v[i] = val.clone();
    }
    Ok(v)
}

/// Caps the global thread pool from `COSTMART_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    if let Ok(s) = std::env::var("COSTMART_THREADS") {
        let n: usize = s
            .trim()
            .parse()
            .with_context(|| format!("COSTMART_THREADS=`{s}` is not a count"))?;
        // a second call (e.g. in tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
