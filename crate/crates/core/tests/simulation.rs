use twoconf::gillespie::{run_path, simulate, Estimator, Initial, SimConfig};
use twoconf::hierarchy::{evolve_truncated, Discretization, Side};
use twoconf::rates::{standard_hop, standard_pp, HopParams, Metric, PpParams, RateSet};
use twoconf::rng;
use twoconf::{ConfigFunction, LPIntegrator, Region, TwoConfig};

fn torus_pp(region: Region) -> RateSet {
    RateSet::predator_prey(PpParams {
        metric: Metric::Torus { region },
        ..standard_pp()
    })
    .unwrap()
}

fn poisson_k(rp: f64, rm: f64) -> ConfigFunction {
    ConfigFunction::new("poisson", move |c: &TwoConfig| rp.powi(c.n_plus() as i32) * rm.powi(c.n_minus() as i32))
}

fn compare_first_moments(rates: RateSet, region: Region, rho: (f64, f64), grid: usize, seed: u64) {
    let integ = LPIntegrator::new(region, (2, 2), 1, 0).unwrap();
    let s = evolve_truncated(&rates, &poisson_k(rho.0, rho.1), Side::Correlation, 1.0, 0.02, &integ, &Discretization {
        grid_points: grid,
        record_every: 10,
    })
    .unwrap();
    let cfg = SimConfig::new(region, rates, Initial::Poisson { density_plus: rho.0, density_minus: rho.1 }, 1.0, 20_000, seed)
        .with_record_points(6)
        .with_estimators(vec![Estimator::plus(), Estimator::minus()]);
    let m = simulate(&cfg).unwrap();
    let vol = region.volume();
    for (i, time) in s.times().iter().enumerate() {
        let j = m.times.iter().position(|x| (x - time).abs() < 1e-9).unwrap();
        for (e, (n, k)) in [(1, 0), (0, 1)].into_iter().enumerate() {
            let (h, emp, se) = (s.mean(i, n, k), m.mean[e][j] / vol, m.std_err[e][j] / vol);
            assert!((h - emp).abs() <= 3.0 * se, "t={time} ({n},{k}): hierarchy {h} vs simulated {emp} ± {se}");
        }
    }
}

#[test]
fn constant_rate_moments_match_truncated_hierarchy() {
    let region = Region::interval(0.0, 2.0).unwrap();
    compare_first_moments(RateSet::constant(1.0, 0.5, 2.0, 0.3).unwrap(), region, (0.5, 1.5), 6, 3);
}

#[test]
fn pp_moments_match_truncated_hierarchy() {
    let region = Region::interval(0.0, 2.0).unwrap();
    compare_first_moments(torus_pp(region), region, (1.5, 1.0), 8, 5);
}

#[test]
fn conservative_dynamics_keep_total_count() {
    let region = Region::interval(0.0, 2.0).unwrap();
    let p = HopParams {
        metric: Metric::Torus { region },
        ..standard_hop()
    };
    for rates in [RateSet::hop_keep(p.clone()).unwrap(), RateSet::hop_flip(p).unwrap()] {
        let start = TwoConfig::from_1d(&[0.1, 0.7, 1.2], &[0.4, 1.9]).unwrap();
        let mut rng = rng::stream(4, &[]);
        let mut events = 0;
        let end = run_path(&rates, &region, start, &[0.0, 5.0], 100, &mut rng, &mut |_, g| {
            assert_eq!(g.total(), 5);
            events += 1;
        })
        .unwrap();
        assert!(events > 0, "{}", rates.label);
        assert_eq!(end[1].total(), 5);
    }
}

#[test]
fn flip_only_total_column_is_constant() {
    let region = Region::interval(0.0, 1.0).unwrap();
    let cfg = SimConfig::new(region, RateSet::constant_flip(1.0, 1.0).unwrap(), Initial::Poisson { density_plus: 4.0, density_minus: 2.0 }, 1.0, 200, 1)
        .with_estimators(vec![Estimator::Total]);
    let m = simulate(&cfg).unwrap();
    assert!(m.mean[0].iter().all(|&v| v == m.mean[0][0]));
}
