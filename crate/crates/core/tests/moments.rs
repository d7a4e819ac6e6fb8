mod support;

use costmart::dist::Distribution;
use costmart::{rat, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

use support::binomial;

/// `E[X^k]` for `X` uniform on `[m - w, m + w]`, expanding `(m + wU)^k`
/// with `U` uniform on `[-1, 1]`, whose odd moments vanish and whose even
/// moments are `1/(j+1)`.
fn uniform_by_expansion(m: &Rational, w: &Rational, k: u32) -> Rational {
    let mut s = Rational::zero();
    for j in (0..=k).step_by(2) {
        let c = Rational::from_integer((binomial(k as u64, j as u64) as i64).into());
        s += c * num_traits::pow(m.clone(), (k - j) as usize) * num_traits::pow(w.clone(), j as usize)
            / Rational::from_integer((j as i64 + 1).into());
    }
    s
}

proptest! {
    #[test]
    fn uniform_moments_agree_with_expansion(lo in -8i64..8, len in 1i64..8, k in 0u32..10) {
        let (lo, hi) = (rat(lo, 1), rat(lo + len, 1));
        let d = Distribution::Uniform { lo: lo.clone(), hi: hi.clone() };
        let m = (&lo + &hi) / rat(2, 1);
        let w = (&hi - &lo) / rat(2, 1);
        prop_assert_eq!(d.moment(k), uniform_by_expansion(&m, &w, k));
    }

    #[test]
    fn finite_moments_are_weighted_sums(vals in proptest::collection::vec(-5i64..5, 1..5), k in 0u32..8) {
        let n = vals.len() as i64;
        let pairs: Vec<(Rational, Rational)> = vals.iter().map(|&v| (rat(v, 1), rat(1, n))).collect();
        let d = Distribution::Finite(pairs);
        prop_assert!(d.check().is_ok());
        let want = vals.iter().map(|&v| rat(v.pow(k), n)).fold(Rational::zero(), |a, b| a + b);
        prop_assert_eq!(d.moment(k), want);
    }
}

#[test]
fn zeroth_moment_is_one() {
    let d = Distribution::Uniform { lo: rat(-1, 2), hi: rat(3, 1) };
    assert!(d.moment(0).is_one());
    assert_eq!(d.mean(), rat(5, 4));
}
