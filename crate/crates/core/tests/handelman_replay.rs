mod support;

use std::collections::BTreeSet;

use costmart::cfg::build_cfg;
use costmart::frontend::load;
use costmart::handelman::{encode_nonneg, monoid};
use costmart::lp::{solve, LpOutcome, LpProblem};
use costmart::poly::Poly;
use costmart::regions::{LinTerm, Polyhedron};
use costmart::synthesis::SynthesisConfig;
use costmart::rat;
use num_traits::Signed;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{binomial, count_multisets, int, replay_certificates};

fn random_term<R: Rng>(rng: &mut R, nvars: usize) -> LinTerm {
    let p = (0..nvars).fold(Poly::from_rational(nvars, int(rng.gen_range(-4..=4))), |mut p, i| {
        p.add_scaled(&Poly::var(nvars, i), &int(rng.gen_range(-2..=2)));
        p
    });
    LinTerm::from_poly(&p).unwrap()
}

/// Box `lo_i <= x_i <= lo_i + w_i`.
fn random_box<R: Rng>(rng: &mut R, nvars: usize) -> Polyhedron {
    let mut gens = Vec::new();
    for i in 0..nvars {
        let lo = rng.gen_range(-3..=3);
        let w = rng.gen_range(1..=4);
        let x = Poly::var(nvars, i);
        gens.push(LinTerm::from_poly(&(&x - &Poly::from_rational(nvars, int(lo)))).unwrap());
        gens.push(LinTerm::from_poly(&(&Poly::from_rational(nvars, int(lo + w)) - &x)).unwrap());
    }
    Polyhedron::new(gens).unwrap()
}

proptest! {
    #[test]
    fn monoid_size_is_multiset_count(n in 0usize..=5, k in 0u32..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<LinTerm> = (0..n).map(|_| random_term(&mut rng, 2)).collect();
        let m = monoid(&gens, k, 2);
        prop_assert_eq!(m.len(), count_multisets(n, k as usize));
        prop_assert_eq!(m.len() as u64, binomial((n as u64) + k as u64, k as u64));
        let distinct: BTreeSet<&Vec<usize>> = m.iter().map(|(idx, _)| idx).collect();
        prop_assert_eq!(distinct.len(), m.len());
        // each product expands to the product of its generators
        let x = support::random_point(&mut rng, 2);
        for (idx, p) in &m {
            let want = idx.iter().fold(int(1), |acc, &i| acc * gens[i].eval(&x));
            prop_assert_eq!(p.eval(&x), want);
        }
    }

    /// A nonnegative combination of products is certified, and the
    /// certificate replays to the target.
    #[test]
    fn combinations_of_products_are_certified(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2;
        let poly = random_box(&mut rng, n);
        let products = monoid(poly.gens(), 2, n);
        let mut target = Poly::zero(n);
        for (_, p) in &products {
            if rng.gen_bool(0.3) {
                target.add_scaled(p, &rat(rng.gen_range(1..=5), rng.gen_range(1..=3)));
            }
        }
        let mut lp = LpProblem::new();
        let cert = encode_nonneg(&target.to_param(), poly.gens(), 2, &mut lp, "t").unwrap();
        let LpOutcome::Optimal { values, .. } = solve(&lp) else {
            return Err(TestCaseError::fail("certifiable target rejected"));
        };
        prop_assert_eq!(cert.reconstruct(&values, n), target.clone());
        for x in poly.sample_points(100, seed, &[0, 1], n).unwrap() {
            prop_assert!(!target.eval(&x).is_negative());
        }
    }
}

fn replay(file: &str, degree: u32) {
    let text = std::fs::read_to_string(format!("{}/../../corpus/{file}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let cfg = build_cfg(&load(&text).unwrap().0);
    let config = SynthesisConfig { degree, ..Default::default() };
    let n = replay_certificates(&cfg, &config).unwrap_or_else(|e| panic!("{file}: {e}"));
    assert!(n > 0);
}

#[test]
fn fig2_certificates_replay() {
    replay("fig2.prob", 2);
}

#[test]
fn rdwalk_certificates_replay() {
    replay("rdwalk.prob", 2);
}

#[test]
fn nested_certificates_replay() {
    replay("nested.prob", 2);
}
