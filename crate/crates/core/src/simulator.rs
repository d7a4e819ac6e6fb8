//! Monte Carlo execution of a control-flow graph.
//!
//! Costs accumulate as exact rationals; only the summary statistics are
//! decimals. Trial `i` draws from the ChaCha stream `i` of the configured
//! seed, so results do not depend on thread count or scheduling.

use std::fmt;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cfg::{Cfg, LabelKind, Rule};
use crate::dist::Distribution;
use crate::poly::Poly;
use crate::regions::Pred;
use crate::{to_f64, Rational};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// Resolution of nondeterministic choices during simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimPolicy {
    /// Fair coin.
    Uniform,
    Then,
    Else,
}

impl fmt::Display for SimPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimPolicy::Uniform => "uniform",
            SimPolicy::Then => "then",
            SimPolicy::Else => "else",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_steps: u64,
    pub policy: SimPolicy,
    /// Initial values of the program variables.
    pub init: Vec<Rational>,
}

impl SimConfig {
    pub fn new(cfg: &Cfg) -> SimConfig {
        SimConfig {
            trials: 1000,
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
            policy: SimPolicy::Uniform,
            init: cfg.init.clone(),
        }
    }
}

/// Source of randomness for one run.
pub trait Sampler {
    /// A fresh value of sampling variable `rvar`.
    fn sample(&mut self, rvar: usize, dist: &Distribution) -> Rational;
    fn bernoulli(&mut self, p: &Rational) -> bool;
}

/// Sampler backed by a random generator.
pub struct RngSampler<R> {
    rng: R,
    /// Cumulative cutoffs of finite distributions, by sampling variable.
    cutoffs: Vec<Option<Vec<u128>>>,
}

impl<R: Rng> RngSampler<R> {
    pub fn new(rng: R) -> Self {
        RngSampler { rng, cutoffs: Vec::new() }
    }
}

/// `ceil(p * 2^64)` clamped to `[0, 2^64]`, so that for a 64-bit draw `k`
/// the test `k < cutoff(p)` is exactly `k / 2^64 < p`.
fn cutoff(p: &Rational) -> u128 {
    if !p.is_positive() {
        return 0;
    }
    if p.numer() >= p.denom() {
        return 1 << 64;
    }
    match (p.numer().to_u64(), p.denom().to_u64()) {
        (Some(n), Some(d)) => ((n as u128) << 64).div_ceil(d as u128),
        _ => {
            let scaled: BigInt = p.numer() << 64;
            let (q, r) = (&scaled / p.denom(), &scaled % p.denom());
            (q + u8::from(!r.is_zero())).to_u128().expect("at most 2^64")
        }
    }
}

impl<R: Rng> Sampler for RngSampler<R> {
    fn sample(&mut self, rvar: usize, dist: &Distribution) -> Rational {
        let k: u64 = self.rng.gen();
        match dist {
            Distribution::Finite(pairs) => {
                if self.cutoffs.len() <= rvar {
                    self.cutoffs.resize(rvar + 1, None);
                }
                let cuts = self.cutoffs[rvar].get_or_insert_with(|| {
                    let mut acc = Rational::zero();
                    pairs
                        .iter()
                        .map(|(_, p)| {
                            acc += p;
                            cutoff(&acc)
                        })
                        .collect()
                });
                let i = cuts.iter().position(|&c| (k as u128) < c).unwrap_or(pairs.len() - 1);
                pairs[i].0.clone()
            }
            Distribution::Uniform { lo, hi } => {
                lo + (hi - lo) * Rational::new(BigInt::from(k), BigInt::one() << 64)
            }
        }
    }

    fn bernoulli(&mut self, p: &Rational) -> bool {
        let k: u64 = self.rng.gen();
        (k as u128) < cutoff(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub cost: Rational,
    pub steps: u64,
    pub terminated: bool,
}

/// Machine-word rationals; a run stays on these until an operation
/// overflows and then continues on big rationals. Both are exact, so the
/// switch never changes a result.
type Small = Ratio<i128>;

fn to_small(r: &Rational) -> Option<Small> {
    Some(Small::new_raw(r.numer().to_i128()?, r.denom().to_i128()?))
}

fn to_big(s: &Small) -> Rational {
    Rational::new_raw(BigInt::from(*s.numer()), BigInt::from(*s.denom()))
}

/// A polynomial whose coefficients fit in [`Small`].
struct SmallPoly(Vec<(Small, Vec<(usize, u32)>)>);

impl SmallPoly {
    fn new(p: &Poly) -> Option<Self> {
        let terms = p
            .terms()
            .map(|(m, c)| {
                let powers = m.exps().iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e));
                Some((to_small(c)?, powers.collect()))
            })
            .collect::<Option<_>>()?;
        Some(SmallPoly(terms))
    }

    /// `None` on overflow.
    fn eval(&self, v: &[Small]) -> Option<Small> {
        let mut acc = Small::zero();
        for (c, powers) in &self.0 {
            let mut t = *c;
            for &(i, e) in powers {
                for _ in 0..e {
                    t = t.checked_mul(&v[i])?;
                }
            }
            acc = acc.checked_add(&t)?;
        }
        Some(acc)
    }
}

enum SmallPred {
    Const(bool),
    Atom(SmallPoly),
    And(Box<SmallPred>, Box<SmallPred>),
    Or(Box<SmallPred>, Box<SmallPred>),
    Not(Box<SmallPred>),
}

impl SmallPred {
    fn new(p: &Pred) -> Option<Self> {
        let bx = |q: &Pred| SmallPred::new(q).map(Box::new);
        Some(match p {
            Pred::True => SmallPred::Const(true),
            Pred::False => SmallPred::Const(false),
            Pred::Atom(q) => SmallPred::Atom(SmallPoly::new(q)?),
            Pred::And(a, b) => SmallPred::And(bx(a)?, bx(b)?),
            Pred::Or(a, b) => SmallPred::Or(bx(a)?, bx(b)?),
            Pred::Not(a) => SmallPred::Not(bx(a)?),
        })
    }

    fn eval(&self, v: &[Small]) -> Option<bool> {
        Some(match self {
            SmallPred::Const(b) => *b,
            SmallPred::Atom(p) => !p.eval(v)?.is_negative(),
            SmallPred::And(a, b) => a.eval(v)? && b.eval(v)?,
            SmallPred::Or(a, b) => a.eval(v)? || b.eval(v)?,
            SmallPred::Not(a) => !a.eval(v)?,
        })
    }
}

/// Per-label data precomputed once per program.
#[derive(Default)]
struct Step {
    /// Sampling variables (as state indices) drawn before the update.
    samples: Vec<usize>,
    /// Update right-hand side, cost or guard on small rationals.
    poly: Option<SmallPoly>,
    guard: Option<SmallPred>,
}

/// Indexed by label id minus one.
struct Plan(Vec<Step>);

impl Plan {
    fn new(cfg: &Cfg) -> Plan {
        let np = cfg.pvars.len();
        let steps = cfg
            .labels()
            .iter()
            .map(|l| match l.out.first().map(|t| &t.rule) {
                Some(Rule::Update(Some(a))) => Step {
                    samples: a.rhs.vars().into_iter().filter(|&r| r >= np).collect(),
                    poly: SmallPoly::new(&a.rhs),
                    guard: None,
                },
                Some(Rule::Cost(c)) => Step {
                    poly: SmallPoly::new(c),
                    ..Default::default()
                },
                Some(Rule::Guard { pred, .. }) => Step {
                    guard: SmallPred::new(pred),
                    ..Default::default()
                },
                _ => Step::default(),
            })
            .collect();
        Plan(steps)
    }

    /// A plan that never takes the machine-word path.
    #[cfg(test)]
    fn exact_only(cfg: &Cfg) -> Plan {
        let mut p = Plan::new(cfg);
        for s in &mut p.0 {
            s.poly = None;
            s.guard = None;
        }
        p
    }
}

enum State {
    Small { v: Vec<Small>, cost: Small },
    Exact { v: Vec<Rational>, cost: Rational },
}

impl State {
    fn exact(&mut self) -> (&mut Vec<Rational>, &mut Rational) {
        if let State::Small { v, cost } = self {
            *self = State::Exact {
                v: v.iter().map(to_big).collect(),
                cost: to_big(cost),
            };
        }
        match self {
            State::Exact { v, cost } => (v, cost),
            State::Small { .. } => unreachable!("just converted"),
        }
    }

    fn set(&mut self, i: usize, x: Rational) {
        if let State::Small { v, .. } = self {
            if let Some(s) = to_small(&x) {
                v[i] = s;
                return;
            }
        }
        self.exact().0[i] = x;
    }

    fn cost(self) -> Rational {
        match self {
            State::Small { cost, .. } => to_big(&cost),
            State::Exact { cost, .. } => cost,
        }
    }
}

/// Runs the program once from `init` (program variables only).
pub fn run_once(
    cfg: &Cfg,
    init: &[Rational],
    policy: SimPolicy,
    max_steps: u64,
    sampler: &mut dyn Sampler,
) -> Trace {
    run_planned(cfg, &Plan::new(cfg), init, policy, max_steps, sampler)
}

fn run_planned(
    cfg: &Cfg,
    plan: &Plan,
    init: &[Rational],
    policy: SimPolicy,
    max_steps: u64,
    sampler: &mut dyn Sampler,
) -> Trace {
    let np = cfg.pvars.len();
    let mut exact: Vec<Rational> = init.to_vec();
    exact.resize(cfg.nvars(), Rational::zero());
    let mut st = match exact.iter().map(to_small).collect::<Option<Vec<_>>>() {
        Some(v) => State::Small { v, cost: Small::zero() },
        None => State::Exact {
            v: exact,
            cost: Rational::zero(),
        },
    };
    let mut at = cfg.entry;
    let mut steps = 0;
    while at != cfg.exit {
        if steps >= max_steps {
            return Trace {
                cost: st.cost(),
                steps,
                terminated: false,
            };
        }
        steps += 1;
        let l = cfg.label(at);
        let step = &plan.0[at - 1];
        at = match l.kind {
            LabelKind::Terminal => break,
            LabelKind::Assign | LabelKind::Tick => {
                let t = &l.out[0];
                match &t.rule {
                    Rule::Update(Some(a)) => {
                        for &r in &step.samples {
                            st.set(r, sampler.sample(r - np, &cfg.dists[r - np]));
                        }
                        let fast = match (&mut st, &step.poly) {
                            (State::Small { v, .. }, Some(p)) => p.eval(v).map(|x| v[a.var] = x),
                            _ => None,
                        };
                        if fast.is_none() {
                            let (v, _) = st.exact();
                            v[a.var] = a.rhs.eval(v);
                        }
                    }
                    Rule::Cost(c) => {
                        let fast = match (&mut st, &step.poly) {
                            (State::Small { v, cost }, Some(p)) => {
                                p.eval(v).and_then(|x| cost.checked_add(&x)).map(|x| *cost = x)
                            }
                            _ => None,
                        };
                        if fast.is_none() {
                            let (v, cost) = st.exact();
                            *cost += c.eval(v);
                        }
                    }
                    _ => {}
                }
                t.target
            }
            LabelKind::Branch => {
                let (t, e) = (&l.out[0], &l.out[1]);
                let Rule::Guard { pred, .. } = &t.rule else {
                    unreachable!("branch label carries a guard")
                };
                let fast = match (&st, &step.guard) {
                    (State::Small { v, .. }, Some(g)) => g.eval(v),
                    _ => None,
                };
                if fast.unwrap_or_else(|| pred.eval(st.exact().0)) {
                    t.target
                } else {
                    e.target
                }
            }
            LabelKind::Prob => {
                let Rule::Prob(p) = &l.out[0].rule else {
                    unreachable!("prob label carries a probability")
                };
                if sampler.bernoulli(p) {
                    l.out[0].target
                } else {
                    l.out[1].target
                }
            }
            LabelKind::Nondet => {
                let then = match policy {
                    SimPolicy::Then => true,
                    SimPolicy::Else => false,
                    SimPolicy::Uniform => sampler.bernoulli(&Rational::new(1.into(), 2.into())),
                };
                l.out[if then { 0 } else { 1 }].target
            }
        };
    }
    Trace {
        cost: st.cost(),
        steps,
        terminated: true,
    }
}

#[derive(Clone, Debug)]
pub struct SimReport {
    pub mean: f64,
    pub stddev: f64,
    pub completed: usize,
    pub truncated: usize,
    /// Per-trial results in trial order.
    pub traces: Vec<Trace>,
    /// False when every trial hit the step cap.
    pub usable: bool,
    pub warnings: Vec<String>,
}

/// Sample mean and (n - 1)-normalized standard deviation over the trials
/// that terminated.
pub fn estimate(cfg: &Cfg, sc: &SimConfig) -> SimReport {
    let plan = Plan::new(cfg);
    let traces: Vec<Trace> = (0..sc.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
            rng.set_stream(i as u64);
            run_planned(cfg, &plan, &sc.init, sc.policy, sc.max_steps, &mut RngSampler::new(rng))
        })
        .collect();
    summarize(traces)
}

pub fn summarize(traces: Vec<Trace>) -> SimReport {
    let done: Vec<&Rational> = traces.iter().filter(|t| t.terminated).map(|t| &t.cost).collect();
    let n = done.len();
    let truncated = traces.len() - n;
    let mut warnings = Vec::new();
    if truncated > 0 {
        warnings.push(format!("{truncated} runs hit the step cap and were excluded"));
    }
    if n == 0 {
        warnings.push("no run terminated; report unusable".into());
        return SimReport {
            mean: f64::NAN,
            stddev: f64::NAN,
            completed: 0,
            truncated,
            traces,
            usable: false,
            warnings,
        };
    }
    let sum = done.iter().fold(Rational::zero(), |a, c| a + *c);
    let mean_exact = sum / Rational::from_integer(BigInt::from(n));
    let mean = to_f64(&mean_exact);
    let stddev = if n == 1 {
        warnings.push("a single run gives no spread; stddev reported as 0".into());
        0.0
    } else {
        let ss: f64 = done
            .iter()
            .map(|c| {
                let d = to_f64(&(*c - &mean_exact));
                d * d
            })
            .sum();
        (ss / (n - 1) as f64).sqrt()
    };
    SimReport {
        mean,
        stddev,
        completed: n,
        truncated,
        traces,
        usable: true,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::build_cfg;
    use crate::frontend::load;
    use crate::rat;

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
    fn cutoff_matches_rational_comparison() {
        let two64 = Rational::from_integer(BigInt::one() << 64);
        let ps = [rat(0, 1), rat(1, 2), rat(2, 3), rat(1, 1), rat(3, 2), rat(-1, 5), rat(999, 1000)];
        let big = Rational::new(BigInt::from(7) << 80, (BigInt::from(11) << 80) + 1);
        for p in ps.iter().chain([&big]) {
            let c = cutoff(p);
            for k in [0u128, 1, c.saturating_sub(1), c, (1 << 64) - 1] {
                if k >= 1 << 64 {
                    continue;
                }
                let u = Rational::from_integer(BigInt::from(k)) / &two64;
                assert_eq!(k < c, u < *p, "p = {p}, k = {k}");
            }
        }
    }

    #[test]
    fn overflow_falls_back_to_exact() {
        let (ast, _) = load("init x = 3, i = 0; while i <= 9 do x := x * x; i := i + 1; tick(x) od").unwrap();
        let cfg = build_cfg(&ast);
        let t = run_once(&cfg, &cfg.init, SimPolicy::Then, 1000, &mut Forced(vec![]));
        let mut want = BigInt::zero();
        let mut x = BigInt::from(3);
        for _ in 0..10 {
            x = &x * &x;
            want += &x;
        }
        assert!(t.terminated);
        assert_eq!(t.cost, Rational::from_integer(want));
    }

    #[test]
    fn word_path_agrees_with_exact_path() {
        let src = "
            dist u = uniform(-1, 2);
            dist f = finite { 1 : 1/3, -1 : 2/3 };
            init x = 5, y = 0;
            while x >= 0 and y <= 50 do
              y := y + u;
              x := x + f;
              if prob(0.4) then tick(x * y - 1/7) else tick(3 * y) fi
            od
        ";
        let (ast, _) = load(src).unwrap();
        let cfg = build_cfg(&ast);
        let (fast, exact) = (Plan::new(&cfg), Plan::exact_only(&cfg));
        for i in 0..20 {
            let run = |plan: &Plan| {
                let mut rng = ChaCha8Rng::seed_from_u64(9);
                rng.set_stream(i);
                run_planned(&cfg, plan, &cfg.init, SimPolicy::Uniform, 10_000, &mut RngSampler::new(rng))
            };
            assert_eq!(run(&fast), run(&exact));
        }
    }

    /// Replays fixed values per sampling variable.
    struct Forced(Vec<Rational>);

    impl Sampler for Forced {
        fn sample(&mut self, rvar: usize, _: &Distribution) -> Rational {
            self.0[rvar].clone()
        }
        fn bernoulli(&mut self, _: &Rational) -> bool {
            true
        }
    }

    #[test]
    fn loop_not_entered() {
        let cfg = build_cfg(&load(FIG2).unwrap().0);
        let mut s = Forced(vec![rat(1, 1), rat(1, 1)]);
        let t = run_once(&cfg, &[rat(0, 1), rat(0, 1)], SimPolicy::Uniform, 100, &mut s);
        assert_eq!(t.cost, rat(0, 1));
        assert!(t.terminated);
    }

    #[test]
    fn tick_sees_updated_state() {
        let cfg = build_cfg(&load(FIG2).unwrap().0);
        let mut s = Forced(vec![rat(-1, 1), rat(1, 1)]);
        let t = run_once(&cfg, &[rat(1, 1), rat(0, 1)], SimPolicy::Uniform, 100, &mut s);
        assert_eq!(t.cost, rat(0, 1));
        assert_eq!(t.steps, 5);
        assert!(t.terminated);
    }

    #[test]
    fn step_cap_truncates() {
        let cfg = build_cfg(&load("init x = 0; while x >= 0 do tick(1) od").unwrap().0);
        let mut sc = SimConfig::new(&cfg);
        sc.trials = 3;
        sc.max_steps = 50;
        let r = estimate(&cfg, &sc);
        assert_eq!(r.truncated, 3);
        assert!(!r.usable);
    }

    #[test]
    fn deterministic_and_policy() {
        let cfg = build_cfg(&load(FIG2).unwrap().0);
        let mut sc = SimConfig::new(&cfg);
        sc.trials = 20;
        sc.seed = 7;
        sc.init = vec![rat(10, 1), rat(0, 1)];
        let a = estimate(&cfg, &sc);
        let b = estimate(&cfg, &sc);
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.completed, 20);

        let nd = build_cfg(&load("if * then tick(1) else tick(2) fi").unwrap().0);
        let mut sc = SimConfig::new(&nd);
        sc.trials = 1;
        sc.policy = SimPolicy::Else;
        let r = estimate(&nd, &sc);
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.stddev, 0.0);
        assert_eq!(r.warnings.len(), 1);
    }
}
