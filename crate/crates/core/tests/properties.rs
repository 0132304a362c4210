use std::collections::HashSet;

use proptest::prelude::*;
use twoconf::config::subsets;
use twoconf::generators::lhat_terms;
use twoconf::ktransform::{k_inverse, k_transform, k_transform_fn, star_convolution, star_convolution_fn};
use twoconf::lp_measure::{lp_integrate, GaussNodes, Inner};
use twoconf::rates::{standard_pp, RateSet};
use twoconf::rng::stream;
use twoconf::testfns::{random_config, Factorized};
use twoconf::verify::rel_err;
use twoconf::{ConfigFunction, LPIntegrator, Point, Region, Support, TwoConfig};

fn unit() -> Region {
    Region::interval(0.0, 1.0).unwrap()
}

fn sized(seed: u64, n: usize, m: usize) -> TwoConfig {
    random_config(&mut stream(seed, &[1]), &unit(), n, m)
}

fn factorized(seed: u64, max: (usize, usize)) -> Factorized {
    Factorized::random(&mut stream(seed, &[2]), unit(), max)
}

/// Magnitude of the terms in `Σ_{ξ⊂γ} G(ξ)`.
fn k_abs(g: &ConfigFunction, gamma: &TwoConfig) -> f64 {
    k_transform_fn(|c| g.eval(c).abs(), gamma).unwrap()
}

/// `(G₁⋆G₂)(η)` as a sum over ordered partitions `η = ξ₁ ⊔ ξ₂ ⊔ ξ₃` of
/// `G₁(ξ₁∪ξ₂) G₂(ξ₂∪ξ₃)`.
fn star_by_partitions(g1: &ConfigFunction, g2: &ConfigFunction, eta: &TwoConfig) -> (f64, f64) {
    let pts: Vec<(Point, bool)> = eta
        .plus()
        .iter()
        .map(|p| (*p, true))
        .chain(eta.minus().iter().map(|p| (*p, false)))
        .collect();
    let (mut sum, mut mag) = (0.0, 0.0);
    for code in 0..3usize.pow(pts.len() as u32) {
        let (mut a, mut b) = ((vec![], vec![]), (vec![], vec![]));
        let mut c = code;
        for (p, plus) in &pts {
            let label = c % 3;
            c /= 3;
            // 0: only in the first argument, 1: shared, 2: only in the second
            for (side, hit) in [(&mut a, label <= 1), (&mut b, label >= 1)] {
                if hit {
                    if *plus { side.0.push(*p) } else { side.1.push(*p) }
                }
            }
        }
        let t = g1.eval(&TwoConfig::new(a.0, a.1).unwrap()) * g2.eval(&TwoConfig::new(b.0, b.1).unwrap());
        sum += t;
        mag += t.abs();
    }
    (sum, mag)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalization_is_idempotent(seed in any::<u64>(), n in 0usize..6, m in 0usize..6) {
        let c = sized(seed, n, m);
        let mut plus = c.plus().points().to_vec();
        plus.reverse();
        let again = TwoConfig::new(plus, c.minus().points().to_vec()).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(TwoConfig::new(again.plus().points().to_vec(), again.minus().points().to_vec()).unwrap(), c);
    }

    #[test]
    fn shared_point_is_rejected(seed in any::<u64>(), n in 1usize..5) {
        let c = sized(seed, n, 1);
        let p = c.plus().points()[0];
        prop_assert!(TwoConfig::new(c.plus().points().to_vec(), vec![p]).is_err());
    }

    #[test]
    fn subsets_partition(seed in any::<u64>(), n in 0usize..9) {
        let c = sized(seed, n, 0);
        let all: Vec<_> = subsets(c.plus()).unwrap().collect();
        prop_assert_eq!(all.len(), 1 << n);
        let distinct: HashSet<_> = all.iter().map(|(s, _)| s.clone()).collect();
        prop_assert_eq!(distinct.len(), 1 << n);
        for (s, rest) in &all {
            prop_assert_eq!(&s.union(rest).unwrap(), c.plus());
        }
    }

    #[test]
    fn support_certificate_zeroes_outside(seed in any::<u64>(), x in 1.0f64..3.0) {
        let g = factorized(seed, (2, 1)).function("G");
        let inside = sized(seed, 1, 1);
        let outside = TwoConfig::new(vec![inside.plus().points()[0], Point::x(x)], inside.minus().points().to_vec()).unwrap();
        prop_assert_eq!(g.eval(&outside), 0.0);
        prop_assert_eq!(g.eval(&sized(seed, 3, 0)), 0.0);
        prop_assert_eq!(g.eval(&sized(seed, 0, 2)), 0.0);
    }

    #[test]
    fn k_round_trip(seed in any::<u64>(), n in 0usize..5, m in 0usize..4) {
        let g = factorized(seed, (3, 3)).function("G");
        let eta = sized(seed, n, m);
        let back = k_inverse(|c| k_transform(&g, c).unwrap(), &eta).unwrap();
        prop_assert!(rel_err(back, g.eval(&eta), k_abs(&g, &eta)) <= 1e-12);
    }

    #[test]
    fn star_is_a_homomorphism(s1 in any::<u64>(), s2 in any::<u64>(), n in 0usize..4, m in 0usize..3) {
        let g1 = factorized(s1, (2, 2)).function("G1");
        let g2 = factorized(s2, (2, 2)).function("G2");
        let gamma = sized(s1 ^ s2, n, m);
        let lhs = k_transform_fn(|c| star_convolution(&g1, &g2, c).unwrap(), &gamma).unwrap();
        let rhs = k_transform(&g1, &gamma).unwrap() * k_transform(&g2, &gamma).unwrap();
        prop_assert!(rel_err(lhs, rhs, k_abs(&g1, &gamma) * k_abs(&g2, &gamma)) <= 1e-12);
    }

    #[test]
    fn star_matches_partition_form(s1 in any::<u64>(), s2 in any::<u64>(), n in 0usize..4, m in 0usize..3) {
        let g1 = factorized(s1, (3, 2)).function("G1");
        let g2 = factorized(s2, (3, 2)).function("G2");
        let eta = sized(s1.wrapping_add(s2), n, m);
        let (want, mag) = star_by_partitions(&g1, &g2, &eta);
        let got = star_convolution(&g1, &g2, &eta).unwrap();
        prop_assert!(rel_err(got, want, mag) <= 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn star_commutes_and_has_unit(s1 in any::<u64>(), s2 in any::<u64>(), n in 0usize..4, m in 0usize..3) {
        let g1 = factorized(s1, (3, 2)).function("G1");
        let g2 = factorized(s2, (3, 2)).function("G2");
        let eta = sized(s1 ^ s2.rotate_left(7), n, m);
        let (_, mag) = star_by_partitions(&g1, &g2, &eta);
        let a = star_convolution(&g1, &g2, &eta).unwrap();
        let b = star_convolution(&g2, &g1, &eta).unwrap();
        prop_assert!(rel_err(a, b, mag) <= 1e-12);
        let u = star_convolution(&ConfigFunction::unit(), &g1, &eta).unwrap();
        prop_assert!(rel_err(u, g1.eval(&eta), k_abs(&g1, &eta)) <= 1e-12);
    }

    #[test]
    fn dual_identity(s1 in any::<u64>(), s2 in any::<u64>(), n in 0usize..4, m in 0usize..3) {
        let f1 = factorized(s1, (6, 6));
        let f2 = factorized(s2, (6, 6));
        let eta = sized(s1 ^ s2, n, m);
        let lhs = star_convolution_fn(
            |c| k_inverse(|s| f1.eval(s), c).unwrap(),
            |c| k_inverse(|s| f2.eval(s), c).unwrap(),
            &eta,
        )
        .unwrap();
        let rhs = k_inverse(|c| f1.eval(c) * f2.eval(c), &eta).unwrap();
        let mag = k_transform_fn(|c| (f1.eval(c) * f2.eval(c)).abs(), &eta).unwrap() * 3f64.powi(eta.total() as i32);
        prop_assert!(rel_err(lhs, rhs, mag) <= 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn k_preserves_positivity_and_ignores_outside_points(seed in any::<u64>(), n in 0usize..4, m in 0usize..3, shift in 0.1f64..2.0) {
        let g = Factorized::random_positive(&mut stream(seed, &[3]), unit(), (3, 2)).function("G");
        let inside = sized(seed, n, m);
        let extra = random_config(&mut stream(seed, &[4]), &Region::interval(1.5, 3.0).unwrap(), 2, 1);
        let gamma = inside.union(&extra).unwrap();
        let k = k_transform(&g, &gamma).unwrap();
        prop_assert!(k >= 0.0);
        let moved = TwoConfig::new(
            inside.plus().iter().copied().chain(extra.plus().iter().map(|p| Point::x(p.first() + shift))).collect(),
            inside.minus().iter().copied().chain(extra.minus().iter().map(|p| Point::x(p.first() + shift))).collect(),
        )
        .unwrap();
        prop_assert_eq!(k_transform(&g, &moved).unwrap(), k);
    }

    #[test]
    fn lhat_death_and_birth_signs(seed in any::<u64>(), n in 0usize..3, m in 0usize..3) {
        let rates = RateSet::predator_prey(standard_pp()).unwrap();
        let g = Factorized::random_positive(&mut stream(seed, &[5]), unit(), (1, 1)).function("G");
        let eta = sized(seed, n, m);
        let nodes = GaussNodes::new(&unit()).unwrap();
        let t = lhat_terms(rates.kind(), rates.kernels().as_ref(), &g, &eta, &mut Inner::Gauss(&nodes)).unwrap();
        prop_assert!(t.death.iter().all(|&v| v <= 0.0), "{:?}", t);
        prop_assert!(t.birth.iter().all(|&v| v >= 0.0), "{:?}", t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lp_integral_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let integ = LPIntegrator::new(unit(), (3, 2), 500, seed).unwrap();
        let h1 = factorized(seed, (3, 2)).function("H1");
        let h2 = factorized(seed.wrapping_add(1), (3, 2)).function("H2");
        let both = lp_integrate(&h1.combine(a, &h2, b), &integ).unwrap();
        let i1 = lp_integrate(&h1, &integ).unwrap();
        let i2 = lp_integrate(&h2, &integ).unwrap();
        let mag = a.abs() * lp_integrate(&h1.abs(), &integ).unwrap().value + b.abs() * lp_integrate(&h2.abs(), &integ).unwrap().value;
        prop_assert!((both.value - (a * i1.value + b * i2.value)).abs() <= 1e-12 * mag.max(1e-300));
    }

    #[test]
    fn lp_integral_is_deterministic(seed in any::<u64>()) {
        let integ = LPIntegrator::new(unit(), (2, 2), 300, seed).unwrap();
        let h = factorized(seed, (2, 2)).function("H");
        let a = lp_integrate(&h, &integ).unwrap();
        let b = lp_integrate(&h, &integ).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
    }
}

#[test]
fn support_type_admits_boundary() {
    let s = Support {
        max_plus: 1,
        max_minus: 0,
        region: unit(),
    };
    assert!(s.admits(&TwoConfig::from_1d(&[1.0], &[]).unwrap()));
    assert!(!s.admits(&TwoConfig::from_1d(&[0.5], &[0.2]).unwrap()));
}
