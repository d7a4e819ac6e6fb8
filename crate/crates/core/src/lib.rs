//! Synthesis of polynomial bounds on the expected accumulated cost of
//! probabilistic programs with nondeterminism, plus a Monte Carlo checker.
//!
//! The pipeline: [`frontend`] parses a program, [`cfg`] lowers it to a
//! labelled control-flow graph, [`preexp`] builds symbolic one-step
//! expectations of a template, [`handelman`] turns the resulting
//! positivity obligations into linear constraints, [`lp`] solves them
//! exactly, and [`synthesis`] ties it all together. [`simulator`] runs
//! the program to estimate the true expected cost.

pub mod cfg;
pub mod dist;
pub mod frontend;
pub mod handelman;
pub mod lp;
pub mod poly;
pub mod preexp;
pub mod regions;
pub mod simulator;
pub mod synthesis;

pub use num_rational::BigRational as Rational;

/// Shorthand for a small rational constant.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Decimal approximation of a rational, used for reports.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64; scale down
        let n = r.numer().to_string();
        let d = r.denom().to_string();
        n.parse::<f64>().unwrap_or(f64::NAN) / d.parse::<f64>().unwrap_or(f64::NAN)
    })
}

/// Parses `-3`, `0.125` or `7/2` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    use num_bigint::BigInt;
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let r = if let Some((n, d)) = body.split_once('/') {
        let (n, d) = (n.trim(), d.trim());
        if !digits(n) || !digits(d) {
            return None;
        }
        let d: BigInt = d.parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        Rational::new(n.parse().ok()?, d)
    } else {
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if !(digits(int) || (int.is_empty() && digits(frac))) || (!frac.is_empty() && !digits(frac)) {
            return None;
        }
        let num: BigInt = format!("{int}{frac}").parse().ok()?;
        Rational::new(num, BigInt::from(10).pow(frac.len() as u32))
    };
    Some(if neg { -r } else { r })
}
