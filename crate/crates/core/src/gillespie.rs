//! Continuous-time jump simulation of the finite-volume dynamics on a torus.
//!
//! Death, flip and per-particle jump-out channels use exact rates; births
//! and jump destinations are sampled uniformly over the box and thinned
//! against the rate set's declared bounds.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Point, Region, TwoConfig};
use crate::error::{Error, Result};
use crate::generators::apply_l;
use crate::lp_measure::{Estimate, LPIntegrator, Welford};
use crate::rates::{KernelRole, Kind, RateSet};
use crate::rng::{self, Stream};

pub const DEFAULT_POPULATION_CAP: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    Config { plus: Vec<f64>, minus: Vec<f64> },
    Poisson { density_plus: f64, density_minus: f64 },
}

impl Initial {
    pub fn fixed(c: &TwoConfig) -> Self {
        Initial::Config {
            plus: c.plus().iter().map(|p| p.first()).collect(),
            minus: c.minus().iter().map(|p| p.first()).collect(),
        }
    }
}

/// Per-time observable. `Moment` counts sub-configurations with `n` plus and
/// `m` minus points whose pairwise torus distances are all `≤ radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimator {
    Moment { n: usize, m: usize, radius: Option<f64> },
    Total,
}

impl Estimator {
    pub fn plus() -> Self {
        Estimator::Moment { n: 1, m: 0, radius: None }
    }

    pub fn minus() -> Self {
        Estimator::Moment { n: 0, m: 1, radius: None }
    }

    pub fn name(&self) -> String {
        match self {
            Estimator::Total => "total".into(),
            Estimator::Moment { n: 1, m: 0, radius: None } => "n_plus".into(),
            Estimator::Moment { n: 0, m: 1, radius: None } => "n_minus".into(),
            Estimator::Moment { n, m, radius: None } => format!("moment({n},{m})"),
            Estimator::Moment { n, m, radius: Some(r) } => format!("pairs({n},{m};r={r})"),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Estimator::Moment { n, m, radius } if n + m > 2 || radius.is_some_and(|r| !(r >= 0.0)) => {
                Err(Error::Config(format!("estimator {} needs n + m <= 2 and radius >= 0", self.name())))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, c: &TwoConfig, region: &Region) -> f64 {
        let close = |a: &Point, b: &Point, r: Option<f64>| r.is_none_or(|r| region.periodic_dist(a, b) <= r);
        let (p, q) = (c.plus().points(), c.minus().points());
        match *self {
            Estimator::Total => c.total() as f64,
            Estimator::Moment { n: 0, m: 0, .. } => 1.0,
            Estimator::Moment { n: 1, m: 0, .. } => p.len() as f64,
            Estimator::Moment { n: 0, m: 1, .. } => q.len() as f64,
            Estimator::Moment { n: 1, m: 1, radius } => p.iter().map(|a| q.iter().filter(|b| close(a, b, radius)).count()).sum::<usize>() as f64,
            Estimator::Moment { n, radius, .. } => {
                let s = if n == 2 { p } else { q };
                let mut k = 0usize;
                for i in 0..s.len() {
                    for j in i + 1..s.len() {
                        k += usize::from(close(&s[i], &s[j], radius));
                    }
                }
                k as f64
            }
        }
    }
}

/// A simulation run. Rates must be bounded on the torus and, for
/// distance-dependent rates, built with the torus metric of `region`.
#[derive(Clone)]
pub struct SimConfig {
    pub region: Region,
    pub rates: RateSet,
    pub initial: Initial,
    pub t_end: f64,
    pub replicas: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    /// Number of equally spaced recording times in `[0, t_end]`.
    pub record_points: usize,
    pub population_cap: usize,
}

impl SimConfig {
    pub fn new(region: Region, rates: RateSet, initial: Initial, t_end: f64, replicas: usize, seed: u64) -> Self {
        Self {
            region,
            rates,
            initial,
            t_end,
            replicas,
            seed,
            estimators: vec![Estimator::plus(), Estimator::minus()],
            record_points: 11,
            population_cap: DEFAULT_POPULATION_CAP,
        }
    }

    pub fn with_estimators(mut self, e: Vec<Estimator>) -> Self {
        self.estimators = e;
        self
    }

    pub fn with_record_points(mut self, n: usize) -> Self {
        self.record_points = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end = {} must be positive", self.t_end)));
        }
        if self.replicas == 0 || self.record_points < 2 {
            return Err(Error::Config("need replicas >= 1 and record_points >= 2".into()));
        }
        if let Initial::Poisson { density_plus, density_minus } = self.initial {
            if !(density_plus >= 0.0 && density_minus >= 0.0) {
                return Err(Error::Config("initial densities must be >= 0".into()));
            }
        }
        self.estimators.iter().try_for_each(Estimator::validate)
    }

    pub fn times(&self) -> Vec<f64> {
        let k = self.record_points - 1;
        (0..=k).map(|i| self.t_end * i as f64 / k as f64).collect()
    }

    fn initial_config(&self, rng: &mut Stream) -> Result<TwoConfig> {
        match &self.initial {
            Initial::Config { plus, minus } => {
                let pts = |v: &[f64]| v.iter().map(|&x| Point::new(&[x])).collect::<Result<Vec<_>>>();
                TwoConfig::new(pts(plus)?, pts(minus)?)
            }
            Initial::Poisson { density_plus, density_minus } => {
                let vol = self.region.volume();
                let n = rng::poisson(rng, density_plus * vol);
                let m = rng::poisson(rng, density_minus * vol);
                loop {
                    let p: Vec<Point> = (0..n).map(|_| rng::uniform_point(rng, &self.region)).collect();
                    let q: Vec<Point> = (0..m).map(|_| rng::uniform_point(rng, &self.region)).collect();
                    if let Ok(c) = TwoConfig::new(p, q) {
                        return Ok(c);
                    }
                }
            }
        }
    }
}

enum Channel {
    Death(bool, usize),
    Flip(bool, usize),
    Birth(bool, f64),
    Jump(bool, usize, f64),
}

fn thin(rate: f64, bound: f64, channel: &'static str, rng: &mut Stream) -> Result<bool> {
    if rate > bound * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::ThinningBoundViolated { channel, rate, bound });
    }
    Ok(rng.random::<f64>() * bound < rate)
}

fn channels(rates: &RateSet, vol: f64, g: &TwoConfig) -> Result<Vec<(Channel, f64)>> {
    let mut out = Vec::new();
    let bounds = || {
        rates
            .bounds
            .as_ref()
            .ok_or_else(|| Error::Config(format!("rate set '{}' declares no thinning bounds", rates.label)))
    };
    for (plus, pts) in [(true, g.plus().points()), (false, g.minus().points())] {
        for (i, x) in pts.iter().enumerate() {
            let rest = if plus { g.without_plus(x) } else { g.without_minus(x) };
            let ch = match rates.kind() {
                Kind::BirthDeath => {
                    let role = if plus { KernelRole::DPlus } else { KernelRole::DMinus };
                    (Channel::Death(plus, i), rates.rate(role, x, None, &rest)?)
                }
                Kind::Flip => {
                    let role = if plus { KernelRole::APlus } else { KernelRole::AMinus };
                    (Channel::Flip(plus, i), rates.rate(role, x, None, &rest)?)
                }
                Kind::HopKeep | Kind::HopFlip => {
                    let b = bounds()?;
                    let bf = if plus { &b.plus } else { &b.minus };
                    let bound = bf(Some(x), &rest);
                    (Channel::Jump(plus, i, bound), bound * vol)
                }
            };
            out.push(ch);
        }
    }
    if rates.kind() == Kind::BirthDeath {
        let b = bounds()?;
        for (plus, bf) in [(true, &b.plus), (false, &b.minus)] {
            let bound = bf(None, g);
            out.push((Channel::Birth(plus, bound), bound * vol));
        }
    }
    Ok(out)
}

fn step(rates: &RateSet, region: &Region, g: &TwoConfig, ch: &Channel, rng: &mut Stream) -> Result<Option<TwoConfig>> {
    let pick = |plus: bool, i: usize| if plus { g.plus().points()[i] } else { g.minus().points()[i] };
    Ok(match *ch {
        Channel::Death(plus, i) => {
            let x = pick(plus, i);
            Some(if plus { g.without_plus(&x) } else { g.without_minus(&x) })
        }
        Channel::Flip(plus, i) => {
            let x = pick(plus, i);
            if plus {
                g.without_plus(&x).with_minus(x)
            } else {
                g.without_minus(&x).with_plus(x)
            }
        }
        Channel::Birth(plus, bound) => {
            let u = rng::uniform_point(rng, region);
            let role = if plus { KernelRole::BPlus } else { KernelRole::BMinus };
            let r = rates.rate(role, &u, None, g)?;
            if !thin(r, bound, if plus { "birth+" } else { "birth-" }, rng)? {
                return Ok(None);
            }
            if plus {
                g.with_plus(u)
            } else {
                g.with_minus(u)
            }
        }
        Channel::Jump(plus, i, bound) => {
            let x = pick(plus, i);
            let u = rng::uniform_point(rng, region);
            let rest = if plus { g.without_plus(&x) } else { g.without_minus(&x) };
            let (r, next, name) = match (rates.kind(), plus) {
                (Kind::HopKeep, true) => (rates.rate(KernelRole::C1Plus, &x, Some(&u), &rest)?, rest.with_plus(u), "hop+"),
                (Kind::HopKeep, false) => (rates.rate(KernelRole::C1Minus, &x, Some(&u), &rest)?, rest.with_minus(u), "hop-"),
                // plus at x becomes minus at u
                (_, true) => (rates.rate(KernelRole::C2Plus, &x, Some(&u), &rest)?, rest.with_minus(u), "hopflip+"),
                // minus at x becomes plus at u
                (_, false) => (rates.rate(KernelRole::C2Minus, &u, Some(&x), &rest)?, rest.with_plus(u), "hopflip-"),
            };
            if !thin(r, bound, name, rng)? {
                return Ok(None);
            }
            next
        }
    })
}

/// Runs one replica from `start` over the times `times`, calling `observe`
/// after every accepted event. Returns the configurations at `times`.
pub fn run_path(
    rates: &RateSet,
    region: &Region,
    start: TwoConfig,
    times: &[f64],
    cap: usize,
    rng: &mut Stream,
    observe: &mut dyn FnMut(f64, &TwoConfig),
) -> Result<Vec<TwoConfig>> {
    let vol = region.volume();
    let t_end = *times.last().unwrap_or(&0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut g = start;
    let mut t = 0.0;
    loop {
        let ch = channels(rates, vol, &g)?;
        let total: f64 = ch.iter().map(|c| c.1).sum();
        let dt = if total > 0.0 { rng::exponential(rng, total) } else { f64::INFINITY };
        let next_t = t + dt;
        while out.len() < times.len() && times[out.len()] < next_t.min(f64::MAX) {
            out.push(g.clone());
        }
        if next_t > t_end {
            break;
        }
        t = next_t;
        let mut u = rng.random::<f64>() * total;
        let mut chosen = ch.len() - 1;
        for (k, c) in ch.iter().enumerate() {
            if u < c.1 {
                chosen = k;
                break;
            }
            u -= c.1;
        }
        if let Some(ng) = step(rates, region, &g, &ch[chosen].0, rng)? {
            if ng.n_plus() > cap || ng.n_minus() > cap {
                return Err(Error::PopulationCapExceeded { cap });
            }
            g = ng;
            observe(t, &g);
        }
    }
    while out.len() < times.len() {
        out.push(g.clone());
    }
    Ok(out)
}

/// Means and standard errors across replicas, `[estimator][time]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub estimators: Vec<String>,
    pub mean: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
    pub replicas: usize,
}

impl MomentSeries {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.estimators.iter().position(|e| e == name)
    }

    /// CSV with columns `time,estimator,mean,stderr`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,estimator,mean,stderr\n");
        for (ti, t) in self.times.iter().enumerate() {
            for (e, name) in self.estimators.iter().enumerate() {
                s.push_str(&format!("{t},{name},{:e},{:e}\n", self.mean[e][ti], self.std_err[e][ti]));
            }
        }
        s
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub rates: String,
    pub region: Region,
    pub initial: Initial,
    pub t_end: f64,
    pub replicas: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub extra: serde_json::Value,
    /// sha256 of the CSV output.
    pub content_hash: String,
}

pub fn manifest(cfg: &SimConfig, series: &MomentSeries, extra: serde_json::Value) -> Manifest {
    let hash = Sha256::digest(series.to_csv().as_bytes());
    Manifest {
        rates: cfg.rates.label.clone(),
        region: cfg.region,
        initial: cfg.initial.clone(),
        t_end: cfg.t_end,
        replicas: cfg.replicas,
        seed: cfg.seed,
        estimators: cfg.estimators.clone(),
        extra,
        content_hash: hash.iter().map(|b| format!("{b:02x}")).collect(),
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<MomentSeries> {
    cfg.validate()?;
    let times = cfg.times();
    let per: Vec<Vec<Vec<f64>>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(cfg.seed, &[r as u64]);
            let start = cfg.initial_config(&mut rng)?;
            let path = run_path(&cfg.rates, &cfg.region, start, &times, cfg.population_cap, &mut rng, &mut |_, _| {})?;
            Ok(cfg.estimators.iter().map(|e| path.iter().map(|c| e.eval(c, &cfg.region)).collect()).collect())
        })
        .collect::<Result<_>>()?;
    let (ne, nt) = (cfg.estimators.len(), times.len());
    let mut acc = vec![vec![Welford::default(); nt]; ne];
    for rep in &per {
        for e in 0..ne {
            for t in 0..nt {
                acc[e][t].push(rep[e][t]);
            }
        }
    }
    Ok(MomentSeries {
        times,
        estimators: cfg.estimators.iter().map(Estimator::name).collect(),
        mean: acc.iter().map(|r| r.iter().map(|w| w.mean).collect()).collect(),
        std_err: acc.iter().map(|r| r.iter().map(|w| w.var_of_mean().sqrt()).collect()).collect(),
        replicas: cfg.replicas,
    })
}

#[derive(Clone, Debug)]
pub struct GeneratorCheck {
    /// `(E F(γ_h) − F(γ₀))/h`.
    pub empirical: Estimate,
    /// Same at `2h`.
    pub empirical_2h: Estimate,
    /// Richardson combination `2e(h) − e(2h)`, free of the O(h) bias.
    pub extrapolated: Estimate,
    pub exact: Estimate,
}

impl GeneratorCheck {
    pub fn agrees(&self, k: f64) -> bool {
        self.extrapolated.agrees_within(&self.exact, k)
    }
}

/// Compares finite-difference estimates of `(LF)(γ₀)` from `cfg.replicas`
/// paths started at `gamma0` with `apply_l` under `integ`.
pub fn generator_check(
    cfg: &SimConfig,
    f: impl Fn(&TwoConfig) -> f64 + Sync,
    gamma0: &TwoConfig,
    h: f64,
    integ: &LPIntegrator,
) -> Result<GeneratorCheck> {
    cfg.validate()?;
    if !(h > 0.0) {
        return Err(Error::Config(format!("h = {h} must be positive")));
    }
    let f0 = f(gamma0);
    let times = [h, 2.0 * h];
    let per: Vec<[f64; 3]> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(cfg.seed, &[0x67656e, r as u64]);
            let p = run_path(&cfg.rates, &cfg.region, gamma0.clone(), &times, cfg.population_cap, &mut rng, &mut |_, _| {})?;
            let a = (f(&p[0]) - f0) / h;
            let b = (f(&p[1]) - f0) / (2.0 * h);
            Ok([a, b, 2.0 * a - b])
        })
        .collect::<Result<_>>()?;
    let mut w = [Welford::default(); 3];
    for v in &per {
        for k in 0..3 {
            w[k].push(v[k]);
        }
    }
    let est = |w: &Welford| Estimate {
        value: w.mean,
        std_err: w.var_of_mean().sqrt(),
        orders: integ.orders(),
    };
    Ok(GeneratorCheck {
        empirical: est(&w[0]),
        empirical_2h: est(&w[1]),
        extrapolated: est(&w[2]),
        exact: apply_l(&cfg.rates, &f, gamma0, integ)?,
    })
}
