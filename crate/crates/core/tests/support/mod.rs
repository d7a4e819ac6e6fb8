//! Brute-force oracles and random generators shared by the integration
//! tests and the acceptance suite. Everything here is deliberately naive:
//! exhaustive enumeration over small instances, exact arithmetic only.

#![allow(dead_code)]

use costmart::cfg::{build_cfg, Cfg, LabelId, LabelKind, Rule};
use costmart::frontend::load;
use costmart::dist::Distribution;
use costmart::lp::{solve, LpOutcome, LpProblem, Sign};
use costmart::poly::{AffineForm, LpVar, Monomial, ParamPoly, Poly};
use costmart::preexp::{pre_cases, DEFAULT_MOMENT_CAP};
use costmart::regions::Region;
use costmart::synthesis::{encode, SynthesisConfig};
use costmart::{rat, Rational};
use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn int(n: i64) -> Rational {
    rat(n, 1)
}

// ---------------------------------------------------------------- LPs

/// `min c.x` subject to `A x = b`, with `x_i >= 0` unless `free[i]`.
#[derive(Clone, Debug)]
pub struct DenseLp {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
    pub free: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Oracle {
    Infeasible,
    Unbounded,
    Optimal(Rational),
}

/// Up to 6 variables and 6 equalities with small integer data. Most
/// instances get a right-hand side from a random nonnegative point so
/// that they are feasible.
pub fn random_lp<R: Rng>(rng: &mut R) -> DenseLp {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let free: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
    let a: Vec<Vec<Rational>> = (0..m)
        .map(|_| (0..n).map(|_| int(rng.gen_range(-3..=3))).collect())
        .collect();
    let b = if rng.gen_bool(0.8) {
        let x0: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(0..=4))).collect();
        a.iter()
            .map(|row| row.iter().zip(&x0).map(|(p, q)| p * q).sum())
            .collect()
    } else {
        (0..m).map(|_| int(rng.gen_range(-5..=5))).collect()
    };
    let c = (0..n).map(|_| int(rng.gen_range(-3..=3))).collect();
    DenseLp { a, b, c, free }
}

pub fn to_problem(d: &DenseLp) -> LpProblem {
    let mut lp = LpProblem::new();
    let vars: Vec<LpVar> = d
        .free
        .iter()
        .enumerate()
        .map(|(i, &f)| lp.add_var(if f { Sign::Free } else { Sign::NonNeg }, format!("x{i}")))
        .collect();
    for (row, bi) in d.a.iter().zip(&d.b) {
        let mut e = AffineForm::constant(-bi.clone());
        for (v, aij) in vars.iter().zip(row) {
            e.add_var(*v, aij);
        }
        lp.add_equality(e);
    }
    let mut obj = AffineForm::default();
    for (v, ci) in vars.iter().zip(&d.c) {
        obj.add_var(*v, ci);
    }
    lp.set_objective(obj);
    lp
}

/// Row-reduces `[a | b]`; `None` if inconsistent, else the independent rows.
fn independent_rows(a: &[Vec<Rational>], b: &[Rational]) -> Option<(Vec<Vec<Rational>>, Vec<Rational>)> {
    let n = a.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| r.iter().cloned().chain([bi.clone()]).collect())
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let piv = rows[rank][col].clone();
        for x in rows[rank].iter_mut() {
            *x /= &piv;
        }
        for i in 0..rows.len() {
            if i != rank && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                let src = rows[rank].clone();
                for (x, s) in rows[i].iter_mut().zip(src) {
                    *x -= &f * s;
                }
            }
        }
        rank += 1;
    }
    if rows[rank..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    rows.truncate(rank);
    let b = rows.iter().map(|r| r[n].clone()).collect();
    let a = rows.into_iter().map(|mut r| {
        r.pop();
        r
    });
    Some((a.collect(), b))
}

/// Unique solution of the square system on columns `cols`, if nonsingular.
fn solve_square(a: &[Vec<Rational>], b: &[Rational], cols: &[usize]) -> Option<Vec<Rational>> {
    let sub: Vec<Vec<Rational>> = a.iter().map(|r| cols.iter().map(|&j| r[j].clone()).collect()).collect();
    let (red, rhs) = independent_rows(&sub, b)?;
    if red.len() < cols.len() {
        return None;
    }
    // reduced rows of a nonsingular system are the identity
    Some(rhs)
}

/// All basic feasible solutions of `{a y = b, y >= 0}`.
fn vertices(a: &[Vec<Rational>], b: &[Rational], ncols: usize) -> Option<Vec<Vec<Rational>>> {
    let (a, b) = independent_rows(a, b)?;
    let r = a.len();
    let mut out = Vec::new();
    for basis in (0..ncols).combinations(r) {
        if let Some(yb) = solve_square(&a, &b, &basis) {
            if yb.iter().all(|v| !v.is_negative()) {
                let mut y = vec![Rational::zero(); ncols];
                for (&j, v) in basis.iter().zip(yb) {
                    y[j] = v;
                }
                out.push(y);
            }
        }
    }
    Some(out)
}

/// Vertex and extreme-ray enumeration after splitting free variables.
pub fn vertex_oracle(d: &DenseLp) -> Oracle {
    let mut cols: Vec<(usize, i64)> = Vec::new();
    for (i, &f) in d.free.iter().enumerate() {
        cols.push((i, 1));
        if f {
            cols.push((i, -1));
        }
    }
    let nc = cols.len();
    let a: Vec<Vec<Rational>> = d
        .a
        .iter()
        .map(|row| cols.iter().map(|&(i, s)| &row[i] * int(s)).collect())
        .collect();
    let c: Vec<Rational> = cols.iter().map(|&(i, s)| &d.c[i] * int(s)).collect();
    let dot = |y: &[Rational]| -> Rational { y.iter().zip(&c).map(|(p, q)| p * q).sum() };
    let verts = match vertices(&a, &d.b, nc) {
        Some(v) if !v.is_empty() => v,
        _ => return Oracle::Infeasible,
    };
    // extreme rays are the vertices of {a r = 0, sum r = 1, r >= 0}
    let mut ra = a.clone();
    ra.push(vec![Rational::one(); nc]);
    let mut rb = vec![Rational::zero(); a.len()];
    rb.push(Rational::one());
    if let Some(rays) = vertices(&ra, &rb, nc) {
        if rays.iter().any(|r| dot(r).is_negative()) {
            return Oracle::Unbounded;
        }
    }
    Oracle::Optimal(verts.iter().map(|y| dot(y)).min().expect("nonempty"))
}

pub fn agrees(out: &LpOutcome, o: &Oracle) -> bool {
    match (out, o) {
        (LpOutcome::Infeasible, Oracle::Infeasible) | (LpOutcome::Unbounded, Oracle::Unbounded) => true,
        (LpOutcome::Optimal { value, .. }, Oracle::Optimal(w)) => value == w,
        _ => false,
    }
}

// ---------------------------------------------------------- polynomials

/// Random polynomial in the first `nvars` of `space` variables with
/// small rational coefficients.
pub fn random_poly<R: Rng>(rng: &mut R, nvars: usize, space: usize, deg: u32, terms: usize) -> Poly {
    let mut p = Poly::zero(space);
    for _ in 0..terms {
        let mut e = vec![0u32; space];
        let mut left = rng.gen_range(0..=deg);
        while left > 0 {
            e[rng.gen_range(0..nvars)] += 1;
            left -= 1;
        }
        let c = rat(rng.gen_range(-6..=6), rng.gen_range(1..=3));
        p.add_term(Monomial::from_exps(e), &c);
    }
    p
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Vec<Rational> {
    (0..n).map(|_| rat(rng.gen_range(-12..=12), rng.gen_range(1..=2))).collect()
}

/// Source text of a random polynomial over `vars`, using only `+`, `-`,
/// `*` and `^`.
pub fn random_expr_text<R: Rng>(rng: &mut R, vars: &[&str], deg: u32) -> String {
    let nterms = rng.gen_range(1..=3);
    let mut parts = Vec::new();
    for _ in 0..nterms {
        let mut t = format!("{}", rng.gen_range(1..=5));
        if rng.gen_bool(0.3) {
            t = format!("{t}/{}", rng.gen_range(2..=4));
        }
        for _ in 0..rng.gen_range(0..=deg) {
            let v = vars[rng.gen_range(0..vars.len())];
            t.push_str(&format!(" * {v}"));
        }
        let sign = if rng.gen_bool(0.4) { "-" } else { "+" };
        parts.push(format!("{sign} {t}"));
    }
    let s = parts.join(" ");
    s.strip_prefix("+ ").map(str::to_string).unwrap_or(s)
}

/// Finite distribution text with 2 or 3 support points; probabilities are
/// thirds or quarters so they sum to one exactly.
pub fn random_finite_text<R: Rng>(rng: &mut R) -> String {
    let mut vals: Vec<i64> = (-3..=3).collect();
    let k = rng.gen_range(2..=3);
    let mut pts = Vec::new();
    for _ in 0..k {
        let i = rng.gen_range(0..vals.len());
        pts.push(vals.remove(i));
    }
    let probs: Vec<&str> = if k == 2 {
        if rng.gen_bool(0.5) {
            vec!["1/4", "3/4"]
        } else {
            vec!["1/3", "2/3"]
        }
    } else {
        vec!["1/4", "1/4", "1/2"]
    };
    let body = pts.iter().zip(probs).map(|(v, p)| format!("{v} : {p}")).join(", ");
    format!("finite {{ {body} }}")
}

// ----------------------------------------------------- pre-expectation

/// Expected value of `h_target` after one step from `v`, computed by
/// enumerating the joint support of the sampling variables the step draws.
/// For branches this is the value along the edge whose guard holds.
pub fn enumerate_pre(cfg: &Cfg, label: LabelId, h: &[Poly], v: &[Rational]) -> Rational {
    let l = cfg.label(label);
    let ht = |id: LabelId, p: &[Rational]| h[id - 1].eval(p);
    match l.kind {
        LabelKind::Terminal => ht(label, v),
        LabelKind::Tick => {
            let Rule::Cost(c) = &l.out[0].rule else { unreachable!() };
            c.eval(v) + ht(l.out[0].target, v)
        }
        LabelKind::Prob => {
            let (Rule::Prob(p), Rule::Prob(q)) = (&l.out[0].rule, &l.out[1].rule) else {
                unreachable!()
            };
            p * ht(l.out[0].target, v) + q * ht(l.out[1].target, v)
        }
        LabelKind::Branch => {
            let taken = l
                .out
                .iter()
                .find(|t| {
                    let Rule::Guard { pred, negated } = &t.rule else { unreachable!() };
                    pred.eval(v) != *negated
                })
                .expect("one guard holds");
            ht(taken.target, v)
        }
        LabelKind::Assign => {
            let t = &l.out[0];
            let Rule::Update(upd) = &t.rule else { unreachable!() };
            let Some(a) = upd else { return ht(t.target, v) };
            let np = cfg.pvars.len();
            let drawn: Vec<usize> = a.rhs.vars().into_iter().filter(|&r| r >= np).collect();
            let supports: Vec<Vec<(Rational, Rational)>> = drawn
                .iter()
                .map(|&r| match &cfg.dists[r - np] {
                    Distribution::Finite(pairs) => pairs.clone(),
                    Distribution::Uniform { .. } => panic!("enumeration needs finite support"),
                })
                .collect();
            let mut total = Rational::zero();
            for combo in supports.iter().map(|s| s.iter()).multi_cartesian_product() {
                let mut w = v.to_vec();
                let mut p = Rational::one();
                for (&r, (val, pr)) in drawn.iter().zip(&combo) {
                    w[r] = val.clone();
                    p *= pr;
                }
                w[a.var] = a.rhs.eval(&w);
                total += p * ht(t.target, &w);
            }
            if drawn.is_empty() {
                let mut w = v.to_vec();
                w[a.var] = a.rhs.eval(&w);
                total = ht(t.target, &w);
            }
            total
        }
        LabelKind::Nondet => panic!("no single successor to enumerate"),
    }
}

// ------------------------------------------------- random programs

const PREEXP_HEADER: &str = "init x = 1, y = 2;\n";

pub fn lower_program(src: &str) -> Cfg {
    let (ast, _) = load(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    build_cfg(&ast)
}

fn linear<R: Rng>(rng: &mut R) -> String {
    format!(
        "{} * x - {} * y >= {}",
        rng.gen_range(-3..=3),
        rng.gen_range(-3..=3),
        rng.gen_range(-4..=4)
    )
}

pub fn random_program_of_kind<R: Rng>(rng: &mut R, kind: LabelKind) -> String {
    let e = |rng: &mut R, vars: &[&str]| random_expr_text(rng, vars, 2);
    match kind {
        LabelKind::Assign => {
            let (f, g) = (random_finite_text(rng), random_finite_text(rng));
            let v = if rng.gen_bool(0.5) { "x" } else { "y" };
            let rhs = e(rng, &["x", "y", "r", "s"]);
            format!("dist r = {f};\ndist s = {g};\n{PREEXP_HEADER}{v} := {rhs};\nx := x;\ny := y")
        }
        LabelKind::Tick => format!("{PREEXP_HEADER}tick({});\nx := x;\ny := y", e(rng, &["x", "y"])),
        LabelKind::Prob => {
            let p = rng.gen_range(1..10);
            format!(
                "{PREEXP_HEADER}if prob({p}/10) then x := {} else tick({}) fi;\ny := y",
                e(rng, &["x", "y"]),
                e(rng, &["x", "y"])
            )
        }
        LabelKind::Branch => {
            let mut g = linear(rng);
            if rng.gen_bool(0.5) {
                let op = if rng.gen_bool(0.5) { "and" } else { "or" };
                g = format!("({g} {op} not ({}))", linear(rng));
            }
            format!("{PREEXP_HEADER}if {g} then x := x + 1 else y := y - 1 fi")
        }
        LabelKind::Terminal => format!("{PREEXP_HEADER}x := {};\ny := y", e(rng, &["x", "y"])),
        LabelKind::Nondet => unreachable!("no single successor"),
    }
}

/// Random templates over the program variables, one per label.
pub fn random_templates<R: Rng>(rng: &mut R, cfg: &Cfg) -> Vec<Poly> {
    (0..cfg.exit)
        .map(|_| random_poly(rng, cfg.pvars.len(), cfg.nvars(), 2, 4))
        .collect()
}

/// Compares the symbolic pre-expectation of one random program of the
/// given label kind with enumeration, at ten random valuations.
pub fn preexp_case(seed: u64, kind: LabelKind) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = random_program_of_kind(&mut rng, kind);
    let cfg = lower_program(&src);
    let label = if kind == LabelKind::Terminal { cfg.exit } else { 1 };
    if cfg.label(label).kind != kind {
        return Err(format!("wrong kind at label {label}\n{src}"));
    }
    let h = random_templates(&mut rng, &cfg);
    let hp: Vec<ParamPoly> = h.iter().map(Poly::to_param).collect();
    let inv = vec![Region::top(); cfg.exit];
    let cases = pre_cases(&cfg, label, &hp, &inv, DEFAULT_MOMENT_CAP).unwrap();
    let np = cfg.pvars.len();
    for _ in 0..10 {
        let mut v = random_point(&mut rng, np);
        v.resize(cfg.nvars(), Rational::default());
        let want = enumerate_pre(&cfg, label, &h, &v);
        // for a branch, the case of the edge whose guard holds
        let i = if kind == LabelKind::Branch {
            cfg.label(label)
                .out
                .iter()
                .position(|t| {
                    let Rule::Guard { pred, negated } = &t.rule else { unreachable!() };
                    pred.eval(&v) != *negated
                })
                .unwrap()
        } else {
            if cases.len() != 1 {
                return Err(format!("{} cases\n{src}", cases.len()));
            }
            0
        };
        if !cases[i].region.contains(&v) {
            return Err(format!("region misses {v:?}\n{src}"));
        }
        let got = cases[i].poly.as_concrete().expect("no unknowns").eval(&v);
        if got != want {
            return Err(format!("pre {got} but enumeration {want} at {v:?}\n{src}"));
        }
    }
    Ok(())
}

// ------------------------------------------------------- certificates

/// Solves the synthesis LP of `cfg` and checks every certificate: it must
/// expand to its instantiated obligation and be nonnegative at 100 sampled
/// points of its disjunct. Returns the number of certificates checked.
pub fn replay_certificates(cfg: &Cfg, config: &SynthesisConfig) -> Result<usize, String> {
    let enc = encode(cfg, config, &|_| 0).map_err(|e| e.to_string())?;
    let LpOutcome::Optimal { values, .. } = solve(&enc.lp) else {
        return Err("LP not optimal".into());
    };
    let n = cfg.nvars();
    let pv: Vec<usize> = (0..cfg.pvars.len()).collect();
    let expected: usize = enc.obligations.iter().map(|o| o.region.disjuncts.len()).sum();
    if enc.certificates.len() != expected {
        return Err(format!("{} certificates for {expected} disjuncts", enc.certificates.len()));
    }
    // certificates come ordered by obligation, then disjunct
    let mut prev = None;
    let mut disjunct = 0;
    for (i, cert) in &enc.certificates {
        disjunct = if prev == Some(*i) { disjunct + 1 } else { 0 };
        prev = Some(*i);
        let o = &enc.obligations[*i];
        let lhs = o.lhs.instantiate(&|v| values[v.0 as usize].clone());
        if cert.reconstruct(&values, n) != lhs {
            return Err(format!("obligation {i}: certificate does not expand to the obligation"));
        }
        let p = &o.region.disjuncts[disjunct];
        for x in p.sample_points(100, 11, &pv, n).map_err(|e| e.to_string())? {
            if lhs.eval(&x).is_negative() {
                return Err(format!("obligation {i}: negative at {x:?}"));
            }
        }
    }
    Ok(enc.certificates.len())
}

// -------------------------------------------------------- combinatorics

pub fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

/// Number of multisets of size at most `k` over `n` items, by explicit
/// recursive enumeration.
pub fn count_multisets(n: usize, k: usize) -> usize {
    fn go(start: usize, n: usize, left: usize) -> usize {
        // the multiset built so far counts once
        1 + (start..n).map(|i| if left > 0 { go(i, n, left - 1) } else { 0 }).sum::<usize>()
    }
    go(0, n, k)
}
