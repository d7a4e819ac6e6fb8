//! `costmart simulate`.

use std::io::Write;

use anyhow::Result;
use serde_json::{json, Value};

use costmart::simulator::{SimConfig, SimReport};

use crate::SCHEMA_VERSION;

pub fn report_json(program: &str, sc: &SimConfig, r: &SimReport) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "program": program,
        "trials": sc.trials,
        "seed": sc.seed,
        "max_steps": sc.max_steps,
        "nondet": sc.policy.to_string(),
        "init": sc.init.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "mean": finite_or_null(r.mean),
        "stddev": finite_or_null(r.stddev),
        "completed": r.completed,
        "truncated": r.truncated,
        "usable": r.usable,
        "warnings": r.warnings,
    })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// One row per trial: index, exact cost, steps, terminated.
pub fn write_trace_csv<W: Write>(w: W, r: &SimReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "cost", "steps", "terminated"])?;
    for (i, t) in r.traces.iter().enumerate() {
        out.write_record([
            i.to_string(),
            t.cost.to_string(),
            t.steps.to_string(),
            t.terminated.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
