//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances are
//! fixed here and nowhere else.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use costmart::cfg::{Cfg, LabelKind};
use costmart::handelman::monoid;
use costmart::lp::{dump_lp, solve};
use costmart::poly::{Monomial, Poly};
use costmart::preexp::Mode;
use costmart::regions::LinTerm;
use costmart::synthesis::{
    check_bounded_update, check_nonneg_costs, invariants, synthesize, CostBound, NondetPolicy,
    SynthesisConfig,
};
use costmart::{rat, to_f64, Rational};
use costmart_cli::bench::{run_bench, BenchOptions};
use costmart_cli::load_file;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{
    agrees, binomial, count_multisets, preexp_case, random_lp, random_point, replay_certificates,
    to_problem, vertex_oracle,
};

/// Wall-clock limit for the single-program criteria.
const TIME_LIMIT: Duration = Duration::from_secs(60);
/// |c - 1.475| bound on the mining constant term.
const MINING_CONST_TOL: f64 = 1e-6;
/// Relative tolerance on pool coefficients.
const POOL_REL_TOL: f64 = 0.01;
/// Trials, seed and width (in standard errors) of the simulation band.
const SANDWICH_TRIALS: usize = 1000;
const SANDWICH_SEED: u64 = 2024;
const SANDWICH_SIGMAS: f64 = 4.0;
/// Random instances per property.
const PREEXP_CASES: u64 = 50;
const LP_CASES: u64 = 200;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn cfg_of(file: &str) -> Cfg {
    load_file(&corpus_dir().join(file)).unwrap().cfg
}

fn bound(cfg: &Cfg, mode: Mode, degree: u32, at: &[(&str, i64)]) -> Result<CostBound, String> {
    let config = SynthesisConfig {
        degree,
        mode,
        objective_point: at.iter().map(|(n, v)| (n.to_string(), rat(*v, 1))).collect(),
        ..Default::default()
    };
    synthesize(cfg, &config).map_err(|e| format!("{mode}: {e}"))
}

/// Univariate polynomial `sum c_i * var^i` in the variable space of `cfg`.
fn univariate(cfg: &Cfg, var: usize, coeffs: &[Rational]) -> Poly {
    let n = cfg.nvars();
    let mut p = Poly::zero(n);
    for (i, c) in coeffs.iter().enumerate() {
        p.add_term(power(n, var, i as u32), c);
    }
    p
}

fn power(n: usize, var: usize, e: u32) -> Monomial {
    let mut exps = vec![0; n];
    exps[var] = e;
    Monomial::from_exps(exps)
}

fn coeff(p: &Poly, m: &Monomial) -> Rational {
    p.coeff(m).cloned().unwrap_or_default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fig2_exact() -> Outcome {
    let cfg = cfg_of("fig2.prob");
    let start = Instant::now();
    let b = bound(&cfg, Mode::Upper, 2, &[("x", 100), ("y", 0)])?;
    let took = start.elapsed();
    let want = univariate(&cfg, 0, &[rat(0, 1), rat(1, 3), rat(1, 3)]);
    ensure(b.entry_poly() == &want, || format!("bound {}", b.entry_poly().display(&cfg.var_names())))?;
    ensure(b.entry_value == rat(10100, 3), || format!("entry value {}", b.entry_value))?;
    ensure(took < TIME_LIMIT, || format!("took {took:?}"))?;
    Ok(format!("1/3*x^2 + 1/3*x, value 10100/3, {:.2}s", took.as_secs_f64()))
}

fn mining() -> Outcome {
    let cfg = cfg_of("mining.prob");
    let start = Instant::now();
    let up = bound(&cfg, Mode::Upper, 1, &[("x", 100)])?;
    let lo = bound(&cfg, Mode::Lower, 1, &[("x", 100)])?;
    let took = start.elapsed();
    let n = cfg.nvars();
    let cx = coeff(up.entry_poly(), &power(n, 0, 1));
    let c0 = to_f64(&coeff(up.entry_poly(), &power(n, 0, 0)));
    ensure(cx == rat(-59, 40), || format!("upper x coefficient {cx}"))?;
    ensure((c0 - 1.475).abs() <= MINING_CONST_TOL, || format!("upper constant {c0}"))?;
    ensure(up.entry_poly().len() == 2, || "upper has extra terms".into())?;
    let want = univariate(&cfg, 0, &[rat(0, 1), rat(-3, 2)]);
    ensure(lo.entry_poly() == &want, || format!("lower {}", lo.entry_poly().display(&cfg.var_names())))?;
    ensure(took < TIME_LIMIT, || format!("took {took:?}"))?;
    // trying every resolution of the nondeterminism can only help
    let config = SynthesisConfig {
        degree: 1,
        mode: Mode::Lower,
        nondet: NondetPolicy::Enumerate,
        ..Default::default()
    };
    let best = synthesize(&cfg, &config).map_err(|e| e.to_string())?;
    ensure(best.entry_value >= lo.entry_value, || format!("enumerate {} below then", best.entry_value))?;
    Ok(format!(
        "upper -59/40*x + {c0}, lower -3/2*x, enumerate lower {}, {:.2}s",
        best.entry_poly().display(&cfg.var_names()),
        took.as_secs_f64()
    ))
}

/// Within tolerance of the reference coefficients, or at least as tight at
/// the objective point.
fn pool() -> Outcome {
    let cfg = cfg_of("pool.prob");
    let y = cfg.pvars.iter().position(|v| v == "y").unwrap();
    let n = cfg.nvars();
    let mut at = cfg.init_point();
    at[y] = rat(100, 1);
    let mut notes = Vec::new();
    for (mode, reference) in [
        (Mode::Upper, [49.0, -41.62, -7.375]),
        (Mode::Lower, [0.0, -67.5, -7.5]),
    ] {
        let b = bound(&cfg, mode, 2, &[("y", 100)])?;
        let got: Vec<f64> = (0..3).map(|e| to_f64(&coeff(b.entry_poly(), &power(n, y, e)))).collect();
        let close = got
            .iter()
            .zip(reference)
            .all(|(g, r)| (g - r).abs() <= POOL_REL_TOL * r.abs());
        let ref_value: f64 = reference.iter().enumerate().map(|(i, c)| c * 100f64.powi(i as i32)).sum();
        let value = to_f64(&b.entry_value);
        let tighter = match mode {
            Mode::Upper => value <= ref_value,
            Mode::Lower => value >= ref_value,
        };
        ensure(close || tighter, || {
            format!("{mode}: {} (value {value}, reference {ref_value})", b.entry_poly().display(&cfg.var_names()))
        })?;
        notes.push(format!(
            "{mode} {} = {value} ({})",
            b.entry_poly().display(&cfg.var_names()),
            if close { "coefficients within 1%" } else { "tighter objective" }
        ));
    }
    Ok(notes.join("; "))
}

fn sandwich() -> Outcome {
    let only = ["fig2", "nested", "rdwalk", "robot", "goods", "pollutant", "queuing", "species"];
    let bo = BenchOptions {
        trials: SANDWICH_TRIALS,
        seed: SANDWICH_SEED,
        only: only.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    };
    let rows = run_bench(&corpus_dir(), &bo).map_err(|e| format!("{e:#}"))?;
    let mut bad = Vec::new();
    for r in &rows {
        let (Some(mean), Some(sd)) = (r.sim_mean, r.sim_stddev) else {
            bad.push(format!("{} [{}]: no simulation", r.program, r.v0));
            continue;
        };
        let band = SANDWICH_SIGMAS * sd / (r.sim_completed as f64).sqrt();
        let upper_ok = r.upper.is_some_and(|u| mean <= u + band);
        let lower_ok = match r.lower {
            Some(l) => mean >= l - band,
            None => r.program == "species",
        };
        if !r.error.is_empty() || r.sim_truncated > 0 || !upper_ok || !lower_ok {
            bad.push(format!(
                "{} [{}]: lower {:?} mean {mean:.3} upper {:?} band {band:.3} {}",
                r.program, r.v0, r.lower, r.upper, r.error
            ));
        }
    }
    ensure(rows.len() == 3 * only.len(), || format!("{} rows", rows.len()))?;
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok(format!("{} starts, N = {SANDWICH_TRIALS}, seed {SANDWICH_SEED}", rows.len()))
}

fn handelman() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for g in 0..=5usize {
        for k in 0..=4u32 {
            let gens: Vec<LinTerm> = (0..g)
                .map(|_| {
                    let mut p = Poly::from_rational(2, rat(rng.gen_range(-4..=4), 1));
                    p.add_scaled(&Poly::var(2, 0), &rat(rng.gen_range(-2..=2), 1));
                    p.add_scaled(&Poly::var(2, 1), &rat(rng.gen_range(-2..=2), 1));
                    LinTerm::from_poly(&p).unwrap()
                })
                .collect();
            let m = monoid(&gens, k, 2);
            let want = binomial((g as u64) + k as u64, k as u64) as usize;
            ensure(m.len() == want && count_multisets(g, k as usize) == want, || {
                format!("|G| = {g}, K = {k}: {} products, expected {want}", m.len())
            })?;
            let x = random_point(&mut rng, 2);
            for (idx, p) in &m {
                let prod = idx.iter().fold(rat(1, 1), |acc, &i| acc * gens[i].eval(&x));
                ensure(p.eval(&x) == prod, || format!("product {idx:?} expands wrongly"))?;
            }
        }
    }
    let mut total = 0;
    for (file, degree) in [("fig2.prob", 2), ("rdwalk.prob", 2), ("nested.prob", 2), ("mining.prob", 1)] {
        let config = SynthesisConfig { degree, ..Default::default() };
        total += replay_certificates(&cfg_of(file), &config).map_err(|e| format!("{file}: {e}"))?;
    }
    Ok(format!("counts for |G| <= 5, K <= 4; {total} certificates replayed at 100 points per disjunct"))
}

fn preexp() -> Outcome {
    let kinds = [
        LabelKind::Assign,
        LabelKind::Prob,
        LabelKind::Tick,
        LabelKind::Branch,
        LabelKind::Terminal,
    ];
    for kind in kinds {
        for seed in 0..PREEXP_CASES {
            preexp_case(seed, kind).map_err(|e| format!("{kind} seed {seed}: {e}"))?;
        }
    }
    Ok(format!("{PREEXP_CASES} programs x 10 valuations per kind"))
}

fn lp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut optimal = 0;
    for case in 0..LP_CASES {
        let d = random_lp(&mut rng);
        let (a, b) = (to_problem(&d), to_problem(&d));
        let out = solve(&a);
        let want = vertex_oracle(&d);
        ensure(agrees(&out, &want), || format!("case {case}: simplex {out:?}, oracle {want:?}"))?;
        ensure(dump_lp(&a) == dump_lp(&b) && solve(&b) == out, || format!("case {case}: nondeterministic"))?;
        optimal += out.is_optimal() as usize;
    }
    Ok(format!("{LP_CASES} LPs ({optimal} optimal) match vertex enumeration; reruns identical"))
}

fn degree_monotone() -> Outcome {
    let cfg = cfg_of("fig2.prob");
    let d2 = bound(&cfg, Mode::Upper, 2, &[("x", 100)])?;
    let d3 = bound(&cfg, Mode::Upper, 3, &[("x", 100)])?;
    ensure(d3.entry_value <= d2.entry_value, || format!("d=3 {} > d=2 {}", d3.entry_value, d2.entry_value))?;
    Ok(format!("d=3 {} <= d=2 {}", d3.entry_value, d2.entry_value))
}

fn prerequisites() -> Outcome {
    let squash = |s: &str| s.split_whitespace().collect::<String>();
    let species = cfg_of("species.prob");
    let inv = invariants(&species).map_err(|e| e.to_string())?;
    let bu = check_bounded_update(&species, &inv);
    ensure(!bu.pass, || "species passes bounded-update".into())?;
    let named = bu.violations.iter().find(|v| squash(v).contains("a:=1.1*a"));
    ensure(named.is_some(), || format!("violations {:?}", bu.violations))?;
    let nn = check_nonneg_costs(&species, &inv, None);
    ensure(nn.pass, || format!("species costs not proven: {:?}", nn.not_proven))?;
    let mining = cfg_of("mining.prob");
    let minv = invariants(&mining).map_err(|e| e.to_string())?;
    let mn = check_nonneg_costs(&mining, &minv, None);
    ensure(!mn.pass, || "mining passes nonneg-cost".into())?;
    ensure(mn.not_proven.iter().any(|v| squash(v).contains("tick(-5000)")), || format!("{:?}", mn.not_proven))?;
    Ok(format!("species: {}; mining: {}", named.unwrap(), mn.not_proven.join(", ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 running example exact", fig2_exact),
        ("2 mining bounds", mining),
        ("3 pool bounds", pool),
        ("4 simulation sandwich", sandwich),
        ("5 certificate counts and replay", handelman),
        ("6 pre-expectation oracle", preexp),
        ("7 LP oracle and determinism", lp),
        ("8 degree monotonicity", degree_monotone),
        ("9 prerequisite checks", prerequisites),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS [{name}] {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{name}] {why} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
