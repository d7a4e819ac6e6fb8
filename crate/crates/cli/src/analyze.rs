//! `costmart analyze`: bound synthesis plus its JSON report.

use rayon::prelude::*;
use serde_json::{json, Value};

use costmart::preexp::Mode;
use costmart::synthesis::{
    synthesize, CostBound, NondetPolicy, Prerequisites, Regime, SynthesisConfig, SynthesisError,
};
use costmart::{to_f64, Rational};

use crate::{Loaded, EXIT_INPUT, EXIT_NO_BOUND, EXIT_OK, SCHEMA_VERSION};

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub degree: u32,
    /// Raise the degree up to this value while no certificate exists.
    pub max_degree: Option<u32>,
    pub modes: Vec<Mode>,
    pub regime: Regime,
    pub monoid_k: Option<u32>,
    pub init: Vec<(String, Rational)>,
    pub assume_concentration: bool,
    pub assume_bounded_update: bool,
    pub force_nonneg_template: bool,
    pub strict: bool,
    pub nondet: NondetPolicy,
    pub moment_cap: u32,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        let c = SynthesisConfig::default();
        AnalyzeOptions {
            degree: c.degree,
            max_degree: None,
            modes: vec![Mode::Upper, Mode::Lower],
            regime: c.regime,
            monoid_k: c.monoid_k,
            init: vec![],
            assume_concentration: false,
            assume_bounded_update: false,
            force_nonneg_template: false,
            strict: false,
            nondet: c.nondet,
            moment_cap: c.moment_cap,
        }
    }
}

impl AnalyzeOptions {
    pub fn config(&self, mode: Mode, degree: u32) -> SynthesisConfig {
        SynthesisConfig {
            degree,
            mode,
            regime: self.regime,
            monoid_k: self.monoid_k,
            nondet: self.nondet,
            objective_point: self.init.clone(),
            assume_concentration: self.assume_concentration,
            assume_bounded_update: self.assume_bounded_update,
            force_nonneg_template: self.force_nonneg_template,
            strict: self.strict,
            moment_cap: self.moment_cap,
        }
    }
}

pub struct Outcome {
    pub results: Vec<(Mode, Result<CostBound, SynthesisError>)>,
}

impl Outcome {
    pub fn bound(&self, mode: Mode) -> Option<&CostBound> {
        self.results
            .iter()
            .find(|(m, _)| *m == mode)
            .and_then(|(_, r)| r.as_ref().ok())
    }

    /// Input errors win over missing certificates.
    pub fn exit_code(&self) -> i32 {
        let errs = self.results.iter().filter_map(|(_, r)| r.as_ref().err());
        let mut code = EXIT_OK;
        for e in errs {
            if e.is_lp_failure() {
                code = code.max(EXIT_NO_BOUND);
            } else {
                return EXIT_INPUT;
            }
        }
        code
    }
}

fn synthesize_escalating(
    loaded: &Loaded,
    opts: &AnalyzeOptions,
    mode: Mode,
) -> Result<CostBound, SynthesisError> {
    let top = opts.max_degree.unwrap_or(opts.degree).max(opts.degree);
    let mut d = opts.degree;
    loop {
        match synthesize(&loaded.cfg, &opts.config(mode, d)) {
            Err(SynthesisError::NoCertificate { .. }) if d < top => d += 1,
            r => return r,
        }
    }
}

/// Runs every requested mode; modes are independent and run in parallel.
pub fn analyze(loaded: &Loaded, opts: &AnalyzeOptions) -> Outcome {
    let results = opts
        .modes
        .par_iter()
        .map(|&m| (m, synthesize_escalating(loaded, opts, m)))
        .collect();
    Outcome { results }
}

pub fn rational_json(r: &Rational) -> Value {
    json!({ "exact": r.to_string(), "decimal": to_f64(r) })
}

fn prerequisites_json(p: &Prerequisites) -> Value {
    json!({
        "regime": p.regime.to_string(),
        "bounded_update": p.bounded_update.as_ref().map(|b| json!({
            "pass": b.pass,
            "violations": b.violations,
        })),
        "nonneg_costs": p.nonneg_costs.as_ref().map(|n| json!({
            "pass": n.pass,
            "not_proven": n.not_proven,
        })),
        "concentration_asserted": p.concentration_asserted,
        "bounded_update_asserted": p.bounded_update_asserted,
        "sound": p.sound,
    })
}

pub fn bound_json(loaded: &Loaded, b: &CostBound) -> Value {
    let names = loaded.cfg.var_names();
    let labels: Vec<Value> = loaded
        .cfg
        .labels()
        .iter()
        .map(|l| {
            json!({
                "label": l.id,
                "kind": l.kind.to_string(),
                "line": l.line,
                "bound": b.poly(l.id).display(&names).to_string(),
            })
        })
        .collect();
    json!({
        "mode": b.mode.to_string(),
        "degree": b.degree,
        "monoid_k": b.monoid_k,
        "regime": b.regime.to_string(),
        "entry_bound": b.entry_poly().display(&names).to_string(),
        "entry_value": rational_json(&b.entry_value),
        "labels": labels,
        "lp": { "variables": b.lp_vars, "equalities": b.lp_rows },
        "regions": { "total": b.regions_total, "bounded": b.regions_bounded },
        "nondet_choice": b.nondet_choice.iter().map(|(l, s)| json!({"label": l, "successor": s})).collect::<Vec<_>>(),
        "wall_time_s": b.elapsed.as_secs_f64(),
        "prerequisites": prerequisites_json(&b.prerequisites),
        "warnings": b.warnings,
    })
}

pub fn report_json(program: &str, loaded: &Loaded, opts: &AnalyzeOptions, out: &Outcome) -> Value {
    let point: serde_json::Map<String, Value> = {
        let mut v = loaded.cfg.init.clone();
        for (n, x) in &opts.init {
            if let Some(i) = loaded.cfg.pvars.iter().position(|p| p == n) {
                v[i] = x.clone();
            }
        }
        loaded
            .cfg
            .pvars
            .iter()
            .zip(v)
            .map(|(n, x)| (n.clone(), Value::String(x.to_string())))
            .collect()
    };
    let mut bounds = Vec::new();
    let mut errors = Vec::new();
    for (m, r) in &out.results {
        match r {
            Ok(b) => bounds.push(bound_json(loaded, b)),
            Err(e) => errors.push(json!({ "mode": m.to_string(), "error": e.to_string() })),
        }
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "program": program,
        "variables": loaded.cfg.pvars,
        "sampling_variables": loaded.cfg.rvars,
        "objective_point": point,
        "warnings": loaded.warnings,
        "bounds": bounds,
        "errors": errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load_source;

    const FIG2: &str = "
        dist r = finite { 1 : 1/4, -1 : 3/4 };
        dist r' = finite { 1 : 2/3, -1 : 1/3 };
        init x = 100, y = 0;
        [x >= 0] while x >= 1 do
          [x >= 1] x := x + r;
          [x >= 0] y := r';
          [x >= 0 and -1 <= y <= 1] tick(x * y)
        od
        [0 <= x <= 1]
    ";

    #[test]
    fn constant_template_is_infeasible() {
        let l = load_source(FIG2).unwrap();
        let opts = AnalyzeOptions {
            degree: 0,
            modes: vec![Mode::Upper],
            ..Default::default()
        };
        let out = analyze(&l, &opts);
        assert_eq!(out.exit_code(), EXIT_NO_BOUND);
        let esc = AnalyzeOptions {
            max_degree: Some(2),
            ..opts
        };
        let out = analyze(&l, &esc);
        assert_eq!(out.exit_code(), EXIT_OK);
        assert_eq!(out.bound(Mode::Upper).unwrap().degree, 2);
    }

    #[test]
    fn report_shape() {
        let l = load_source(FIG2).unwrap();
        let opts = AnalyzeOptions::default();
        let out = analyze(&l, &opts);
        let v = report_json("fig2", &l, &opts, &out);
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["bounds"][0]["entry_bound"], "1/3*x^2 + 1/3*x");
        assert_eq!(v["bounds"][0]["entry_value"]["exact"], "10100/3");
        assert_eq!(v["objective_point"]["x"], "100");
        let bad = AnalyzeOptions {
            init: vec![("q".into(), Rational::from_integer(1.into()))],
            ..Default::default()
        };
        assert_eq!(analyze(&l, &bad).exit_code(), EXIT_INPUT);
    }
}
