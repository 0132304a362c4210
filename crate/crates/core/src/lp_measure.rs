//! Lebesgue–Poisson integration over finite two-component configurations.
//!
//! The measure `λ_z ⊗ λ_z` charges configurations with `n` plus-points and
//! `m` minus-points with weight `z^{n+m}/(n! m!)` times Lebesgue measure.
//! Integrals are truncated at per-component orders `(N⁺, N⁻)` and restricted
//! to a box `Λ`; every [`Estimate`] carries the truncation it was computed
//! at.
//!
//! Each order `(n, m)` is integrated separately:
//! - `(0, 0)` is the single value `H(∅, ∅)`;
//! - with [`Rule::Quadrature`], `d = 1` and `n + m ≤ 2`, a tensor
//!   Gauss–Legendre rule (64 nodes, 63 on the second axis so that no node
//!   pair lands on the diagonal);
//! - otherwise i.i.d. uniform sampling on `Λ^{n+m}`, drawn in fixed-size
//!   chunks from keyed streams and reduced in chunk order.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigFunction, CorrelationFunction, FiniteConfig, Point, Region, TwoConfig};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::rng::{self, Stream};
use crate::sum::Neumaier;

/// Samples per chunk; fixes the reduction tree independently of threads.
pub const CHUNK: usize = 512;

/// How integrals are evaluated when an exact rule is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MonteCarlo,
    Quadrature,
}

/// A value with its standard error and the truncation orders it used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub orders: (usize, usize),
}

impl Estimate {
    pub fn exact(value: f64, orders: (usize, usize)) -> Self {
        Self {
            value,
            std_err: 0.0,
            orders,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.std_err == 0.0
    }

    /// Standard error of `self - other` for independent estimates.
    pub fn combined_err(&self, other: &Self) -> f64 {
        self.std_err.hypot(other.std_err)
    }

    /// `|self - other| ≤ k·σ_combined`.
    pub fn agrees_within(&self, other: &Self, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.combined_err(other)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            value: self.value + other.value,
            std_err: self.std_err.hypot(other.std_err),
            orders: self.orders,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            value: a * self.value,
            std_err: a.abs() * self.std_err,
            orders: self.orders,
        }
    }
}

/// Running mean/variance (Welford), mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, o: &Self) -> Self {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let mean = self.mean + d * o.n as f64 / n as f64;
        let m2 = self.m2 + o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        Self { n, mean, m2 }
    }

    /// Variance of the mean.
    pub fn var_of_mean(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64 / self.n as f64
        }
    }
}

/// Runs `samples` draws of `f` in keyed chunks and merges them in order.
pub(crate) fn mc_chunks(
    seed: u64,
    tags: &[u64],
    samples: usize,
    f: impl Fn(&mut Stream) -> Result<f64> + Sync,
) -> Result<Welford> {
    let nchunks = samples.div_ceil(CHUNK);
    let parts: Vec<Welford> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut t = tags.to_vec();
            t.push(c as u64);
            let mut r = rng::stream(seed, &t);
            let mut w = Welford::default();
            let count = CHUNK.min(samples - c * CHUNK);
            for _ in 0..count {
                w.push(f(&mut r)?);
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().fold(Welford::default(), |a, b| a.merge(b)))
}

/// Draws `n` plus- and `m` minus-points uniformly in `region`, avoiding
/// coincidences among themselves and with `avoid` (probability-0 events are
/// resampled).
pub fn draw_config(rng: &mut Stream, region: &Region, n: usize, m: usize, avoid: Option<&TwoConfig>) -> TwoConfig {
    loop {
        let plus: Vec<Point> = (0..n).map(|_| rng::uniform_point(rng, region)).collect();
        let minus: Vec<Point> = (0..m).map(|_| rng::uniform_point(rng, region)).collect();
        let (Ok(p), Ok(q)) = (FiniteConfig::new(plus), FiniteConfig::new(minus)) else {
            continue;
        };
        let Ok(c) = TwoConfig::from_parts(p, q) else {
            continue;
        };
        if let Some(a) = avoid {
            if c.all_points().any(|x| a.contains(x)) {
                continue;
            }
        }
        return c;
    }
}

type Scratch = (TwoConfig, TwoConfig, Vec<Point>, Vec<Point>);

thread_local! {
    static SCRATCH: std::cell::RefCell<Scratch> = Default::default();
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Precomputed Gauss–Legendre nodes on a one-dimensional box.
#[derive(Clone, Debug)]
pub struct GaussNodes {
    first: Vec<(Point, f64)>,
    second: Vec<(Point, f64)>,
    // tensor nodes per order, built on first use
    orders: [OnceLock<Vec<(TwoConfig, f64)>>; 6],
}

impl GaussNodes {
    pub fn new(region: &Region) -> Result<Self> {
        if region.dim() != 1 {
            return Err(Error::QuadratureUnavailable(format!(
                "tensor Gauss-Legendre requires d = 1, got d = {}",
                region.dim()
            )));
        }
        Ok(Self {
            first: GaussLegendre::standard().on_interval(region),
            second: GaussLegendre::companion().on_interval(region),
            orders: Default::default(),
        })
    }

    pub fn nodes(&self) -> &[(Point, f64)] {
        &self.first
    }

    /// All `(configuration, weight)` pairs of the tensor rule for `(n, m)`,
    /// weights including `1/(n! m!)`.
    pub fn order_nodes(&self, n: usize, m: usize) -> Result<&[(TwoConfig, f64)]> {
        let slot = match (n, m) {
            (0, 0) => 0,
            (1, 0) => 1,
            (0, 1) => 2,
            (2, 0) => 3,
            (1, 1) => 4,
            (0, 2) => 5,
            _ => {
                return Err(Error::QuadratureUnavailable(format!(
                    "order ({n},{m}) exceeds the tensor rule (n + m <= 2)"
                )))
            }
        };
        Ok(self.orders[slot].get_or_init(|| self.build(n, m)))
    }

    fn build(&self, n: usize, m: usize) -> Vec<(TwoConfig, f64)> {
        let w0 = 1.0 / (factorial(n) * factorial(m));
        let one = |p: Point, plus: bool| {
            if plus {
                TwoConfig::from_parts_unchecked(FiniteConfig::from_sorted_unchecked(vec![p]), FiniteConfig::empty())
            } else {
                TwoConfig::from_parts_unchecked(FiniteConfig::empty(), FiniteConfig::from_sorted_unchecked(vec![p]))
            }
        };
        match (n, m) {
            (0, 0) => vec![(TwoConfig::empty(), 1.0)],
            (1, 0) | (0, 1) => self.first.iter().map(|(p, w)| (one(*p, n == 1), w * w0)).collect(),
            (2, 0) | (1, 1) | (0, 2) => {
                let mut out = Vec::with_capacity(self.first.len() * self.second.len());
                for (x, wx) in &self.first {
                    for (y, wy) in &self.second {
                        let c = match (n, m) {
                            (2, 0) => TwoConfig::new(vec![*x, *y], vec![]),
                            (1, 1) => TwoConfig::new(vec![*x], vec![*y]),
                            _ => TwoConfig::new(vec![], vec![*x, *y]),
                        }
                        .expect("companion nodes are distinct");
                        out.push((c, wx * wy * w0));
                    }
                }
                out
            }
            _ => unreachable!("checked by order_nodes"),
        }
    }
}

/// Uniform midpoint grid on a one-dimensional box. Point integrals become
/// `h Σ f(x_i)` and `∫dλ²` the tensor midpoint rule, so repeated nodes are
/// allowed. Repeated nodes are realised as distinct points displaced by a
/// tiny offset (`node + ε(2j + s)`, `s = 0` for `+`, `1` for `−`), which keeps
/// every configuration simple and the two components disjoint.
#[derive(Clone, Debug)]
pub struct GridNodes {
    nodes: Vec<Point>,
    lo: f64,
    h: f64,
}

impl GridNodes {
    pub fn new(region: &Region, points: usize) -> Result<Self> {
        if region.dim() != 1 {
            return Err(Error::InvalidRegion(format!("grid discretisation requires d = 1, got d = {}", region.dim())));
        }
        if points == 0 {
            return Err(Error::InvalidIntegrator("grid needs at least one point".into()));
        }
        let lo = region.lower().first();
        let h = region.side(0) / points as f64;
        let nodes = (0..points).map(|i| Point::x(lo + (i as f64 + 0.5) * h)).collect();
        Ok(Self { nodes, lo, h })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    fn eps(&self) -> f64 {
        self.h * 1e-9
    }

    /// Index of the node a point sits on (up to the displacement), `None`
    /// for off-grid points.
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        let t = (p.first() - self.lo) / self.h - 0.5;
        let i = t.round();
        if i < 0.0 || i >= self.nodes.len() as f64 || (t - i).abs() > 1e-6 {
            return None;
        }
        Some(i as usize)
    }

    /// Calls `f` on every size-`k` multiset of `0..n`, as a non-decreasing
    /// index list.
    pub fn for_each_multiset(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
        fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
            if cur.len() == k {
                return f(cur);
            }
            for i in start..n {
                cur.push(i);
                rec(n, k, i, cur, f)?;
                cur.pop();
            }
            Ok(())
        }
        rec(n, k, 0, &mut Vec::with_capacity(k), f)
    }

    /// `∏ 1/mult!` over the repeated entries of a sorted index list.
    pub fn multiplicity_weight(idx: &[usize]) -> f64 {
        let mut w = 1.0;
        let mut run = 1.0;
        for k in 1..idx.len() {
            if idx[k] == idx[k - 1] {
                run += 1.0;
                w /= run;
            } else {
                run = 1.0;
            }
        }
        w
    }

    fn place(&self, idx: &[usize], s: usize, avoid: Option<&TwoConfig>) -> FiniteConfig {
        let mut pts: Vec<Point> = Vec::with_capacity(idx.len());
        let mut j = 0;
        for (k, &i) in idx.iter().enumerate() {
            if k > 0 && idx[k - 1] != i {
                j = 0;
            }
            loop {
                let p = Point::x(self.nodes[i].first() + self.eps() * (2 * j + s) as f64);
                j += 1;
                if !avoid.is_some_and(|a| a.contains(&p)) {
                    pts.push(p);
                    break;
                }
            }
        }
        FiniteConfig::from_sorted_unchecked(pts)
    }

    /// Configuration with `+` points on the nodes `plus` and `−` points on
    /// `minus` (both sorted, repeats allowed), disjoint from `avoid`.
    pub fn config(&self, plus: &[usize], minus: &[usize], avoid: Option<&TwoConfig>) -> TwoConfig {
        TwoConfig::from_parts_unchecked(self.place(plus, 0, avoid), self.place(minus, 1, avoid))
    }
}

/// Evaluation rule for integrals nested inside an integrand: the
/// deterministic Gauss–Legendre rule, a single unbiased uniform draw, or a
/// fixed grid.
pub enum Inner<'a> {
    Gauss(&'a GaussNodes),
    Sample { rng: &'a mut Stream, region: Region },
    Grid(&'a GridNodes),
}

impl Inner<'_> {
    pub fn is_exact(&self) -> bool {
        matches!(self, Inner::Gauss(_))
    }

    /// `∫_Λ f(x) dx`.
    pub fn integrate_point(&mut self, mut f: impl FnMut(&Point) -> f64) -> f64 {
        match self {
            Inner::Gauss(g) => {
                let mut acc = Neumaier::new();
                for (p, w) in g.nodes() {
                    acc.add(w * f(p));
                }
                acc.value()
            }
            Inner::Sample { rng, region } => {
                let p = rng::uniform_point(*rng, region);
                region.volume() * f(&p)
            }
            Inner::Grid(g) => {
                let mut acc = Neumaier::new();
                for p in g.nodes() {
                    acc.add(f(p));
                }
                g.h * acc.value()
            }
        }
    }

    /// `∫_Λ f(x) dx` where `f` may itself integrate.
    pub fn integrate_point_nested(&mut self, mut f: impl FnMut(&Point, &mut Inner) -> Result<f64>) -> Result<f64> {
        match self {
            Inner::Gauss(g) => {
                let g: &GaussNodes = g;
                let mut acc = Neumaier::new();
                for (p, w) in g.nodes() {
                    acc.add(w * f(p, self)?);
                }
                Ok(acc.value())
            }
            Inner::Sample { rng, region } => {
                let region = *region;
                let p = rng::uniform_point(*rng, &region);
                Ok(region.volume() * f(&p, self)?)
            }
            Inner::Grid(g) => {
                let g: &GridNodes = g;
                let mut acc = Neumaier::new();
                for p in g.nodes() {
                    acc.add(f(p, self)?);
                }
                Ok(g.h * acc.value())
            }
        }
    }

    /// `∫ dλ²(ξ) f(ξ)` truncated at `max` and restricted to `Λ`, at unit
    /// intensity. Sampled points avoid those of `avoid`.
    pub fn integrate_lp(
        &mut self,
        max: (usize, usize),
        avoid: &TwoConfig,
        mut f: impl FnMut(&TwoConfig, &mut Inner) -> Result<f64>,
    ) -> Result<f64> {
        let mut acc = Neumaier::new();
        for n in 0..=max.0 {
            for m in 0..=max.1 {
                match self {
                    Inner::Gauss(g) => {
                        let g: &GaussNodes = *g;
                        for (c, w) in g.order_nodes(n, m)? {
                            if c.all_points().any(|x| avoid.contains(x)) {
                                continue;
                            }
                            acc.add(w * f(c, self)?);
                        }
                    }
                    Inner::Sample { rng, region } => {
                        let region = *region;
                        let c = draw_config(rng, &region, n, m, Some(avoid));
                        let w = region.volume().powi((n + m) as i32) / (factorial(n) * factorial(m));
                        acc.add(w * f(&c, self)?);
                    }
                    Inner::Grid(g) => {
                        let g: &GridNodes = g;
                        let mut part = Neumaier::new();
                        GridNodes::for_each_multiset(g.len(), n, &mut |pl| {
                            GridNodes::for_each_multiset(g.len(), m, &mut |mi| {
                                let w = GridNodes::multiplicity_weight(pl) * GridNodes::multiplicity_weight(mi);
                                part.add(w * f(&g.config(pl, mi, Some(avoid)), &mut Inner::Grid(g))?);
                                Ok(())
                            })
                        })?;
                        acc.add(g.h.powi((n + m) as i32) * part.value());
                    }
                }
            }
        }
        Ok(acc.value())
    }
}

/// Lebesgue–Poisson integration engine over a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LPIntegrator {
    pub region: Region,
    pub intensity: f64,
    pub max_plus: usize,
    pub max_minus: usize,
    pub samples_per_order: usize,
    pub seed: u64,
    pub rule: Rule,
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[f64; 2]> = self
            .lower()
            .coords()
            .iter()
            .zip(self.upper().coords())
            .map(|(l, u)| [*l, *u])
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        let lo: Vec<f64> = v.iter().map(|p| p[0]).collect();
        let hi: Vec<f64> = v.iter().map(|p| p[1]).collect();
        let mk = || -> Result<Region> { Region::new(Point::new(&lo)?, Point::new(&hi)?) };
        mk().map_err(serde::de::Error::custom)
    }
}

impl LPIntegrator {
    pub fn new(region: Region, orders: (usize, usize), samples_per_order: usize, seed: u64) -> Result<Self> {
        let s = Self {
            region,
            intensity: 1.0,
            max_plus: orders.0,
            max_minus: orders.1,
            samples_per_order,
            seed,
            rule: Rule::MonteCarlo,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::InvalidIntegrator(format!("intensity {} must be positive", self.intensity)));
        }
        if self.samples_per_order == 0 {
            return Err(Error::InvalidIntegrator("samples_per_order must be >= 1".into()));
        }
        Ok(())
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.max_plus, self.max_minus)
    }

    pub fn with_intensity(mut self, z: f64) -> Self {
        self.intensity = z;
        self
    }

    pub fn with_orders(mut self, orders: (usize, usize)) -> Self {
        self.max_plus = orders.0;
        self.max_minus = orders.1;
        self
    }

    pub fn with_samples(mut self, s: usize) -> Self {
        self.samples_per_order = s;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    /// A statistically independent copy (different stream keys).
    pub fn derived(&self, tag: u64) -> Self {
        self.clone().with_seed(rng::mix(self.seed, &[0x5EED, tag]))
    }

    /// `z^{n+m} |Λ|^{n+m} / (n! m!)`: the mass of order `(n, m)`.
    pub fn order_weight(&self, n: usize, m: usize) -> f64 {
        (self.intensity * self.region.volume()).powi((n + m) as i32) / (factorial(n) * factorial(m))
    }

    fn gauss(&self) -> Option<GaussNodes> {
        (self.rule == Rule::Quadrature && self.region.dim() == 1).then(|| GaussNodes::new(&self.region).ok())?
    }

    /// Integral of a deterministic integrand.
    pub fn integrate(&self, h: impl Fn(&TwoConfig) -> f64 + Sync) -> Result<Estimate> {
        self.integrate_nested(0, |c, _| Ok(h(c)), false)
    }

    /// Integral of an integrand that may itself contain nested integrals.
    ///
    /// When `stochastic` is false the integrand must not draw from the
    /// inner rule, and the `(0,0)` term is evaluated once.
    pub fn integrate_nested(
        &self,
        tag: u64,
        h: impl Fn(&TwoConfig, &mut Inner) -> Result<f64> + Sync,
        stochastic: bool,
    ) -> Result<Estimate> {
        self.validate()?;
        let gauss = self.gauss();
        let z = self.intensity;
        let mut value = Neumaier::new();
        let mut var = 0.0;
        for n in 0..=self.max_plus {
            for m in 0..=self.max_minus {
                let exact_origin = n + m == 0 && (!stochastic || gauss.is_some());
                if let (Some(g), true) = (&gauss, n + m <= 2) {
                    let nodes = g.order_nodes(n, m)?;
                    let vals: Vec<f64> = nodes
                        .par_iter()
                        .map(|(c, w)| Ok(w * h(c, &mut Inner::Gauss(g))?))
                        .collect::<Result<_>>()?;
                    value.add(z.powi((n + m) as i32) * crate::sum::csum(vals));
                    continue;
                }
                if exact_origin {
                    // deterministic integrand, so any inner rule gives the same value
                    let mut r = rng::stream(self.seed, &[tag, 0, 0]);
                    let v = h(
                        &TwoConfig::empty(),
                        &mut Inner::Sample {
                            rng: &mut r,
                            region: self.region,
                        },
                    )?;
                    value.add(v);
                    continue;
                }
                let region = self.region;
                let w = mc_chunks(self.seed, &[tag, n as u64, m as u64], self.samples_per_order, |r| {
                    let c = draw_config(r, &region, n, m, None);
                    match &gauss {
                        Some(g) => h(&c, &mut Inner::Gauss(g)),
                        None => h(&c, &mut Inner::Sample { rng: r, region }),
                    }
                })?;
                let wt = self.order_weight(n, m);
                value.add(wt * w.mean);
                var += wt * wt * w.var_of_mean();
            }
        }
        Ok(Estimate {
            value: value.value(),
            std_err: var.sqrt(),
            orders: self.orders(),
        })
    }
}

/// `∫ H dλ_z²` truncated at the integrator's orders.
pub fn lp_integrate(h: &ConfigFunction, integ: &LPIntegrator) -> Result<Estimate> {
    integ.integrate(|c| h.eval(c))
}

/// `⟨⟨G, k⟩⟩ = ∫ G k dλ²` (unit intensity).
pub fn pairing(g: &ConfigFunction, k: &CorrelationFunction, integ: &LPIntegrator) -> Result<Estimate> {
    let i = integ.clone().with_intensity(1.0);
    i.integrate(|c| {
        let a = g.eval(c);
        if a == 0.0 {
            0.0
        } else {
            a * k.eval(c)
        }
    })
}

/// `‖G‖_{L_C} = ∫ |G| C^{|η⁺|+|η⁻|} dλ²`.
pub fn norm_lc(g: &ConfigFunction, c: f64, integ: &LPIntegrator) -> Result<Estimate> {
    if !(c > 0.0) {
        return Err(Error::InvalidIntegrator(format!("C = {c} must be positive")));
    }
    let i = integ.clone().with_intensity(1.0);
    i.integrate(|x| g.eval(x).abs() * c.powi(x.total() as i32))
}

/// Empirical lower bound on `‖k‖_{K_C}` from random probes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeBound {
    /// `max |k(η)| C^{-|η|}` over the probes; never exceeds the true norm.
    pub lower_bound: f64,
    pub probes: usize,
}

/// Sweeps `probes` random configurations of orders up to the integrator's
/// truncation (uniform order, uniform points in `Λ`).
pub fn norm_kc(k: &CorrelationFunction, c: f64, integ: &LPIntegrator, probes: usize, seed: u64) -> Result<ProbeBound> {
    if !(c > 0.0) {
        return Err(Error::InvalidIntegrator(format!("C = {c} must be positive")));
    }
    let mut r = rng::stream(seed, &[0x4B43]);
    let mut best = 0.0f64;
    use rand::Rng;
    for i in 0..probes {
        // the empty configuration is always probed first
        let (n, m) = if i == 0 {
            (0, 0)
        } else {
            (r.random_range(0..=integ.max_plus), r.random_range(0..=integ.max_minus))
        };
        let cfg = draw_config(&mut r, &integ.region, n, m, None);
        let v = k.eval(&cfg).abs() / c.powi(cfg.total() as i32);
        best = best.max(v);
    }
    Ok(ProbeBound {
        lower_bound: best,
        probes,
    })
}

/// Both sides of `∫dλ²(η) Σ_{ξ⊂η} H(η,ξ) = ∫dλ²(η)∫dλ²(ξ) H(η∪ξ, ξ)`.
///
/// The left side runs over `η` up to the integrator's orders; the right side
/// over pairs with `|η⁺|+|ξ⁺| ≤ N⁺`, `|η⁻|+|ξ⁻| ≤ N⁻`, so both cover the same
/// total orders. The two sides use independent streams.
pub fn lemma2_check(
    h: impl Fn(&TwoConfig, &TwoConfig) -> f64 + Sync,
    integ: &LPIntegrator,
) -> Result<(Estimate, Estimate)> {
    let left = integ.derived(1);
    let lhs = left.integrate(|eta| {
        let mut acc = Neumaier::new();
        SCRATCH.with_borrow_mut(|(xi, ..)| {
            for mask in 0..=eta.full_mask() {
                eta.select_into(mask, xi);
                acc.add(h(eta, xi));
            }
        });
        acc.value()
    })?;

    let right = integ.derived(2);
    let (np, nm) = integ.orders();
    let z = integ.intensity;
    let vol = integ.region.volume();
    let mut value = Neumaier::new();
    let mut var = 0.0;
    for a in 0..=np {
        for b in 0..=nm {
            for c in 0..=np - a {
                for d in 0..=nm - b {
                    let total = a + b + c + d;
                    let wt = (z * vol).powi(total as i32) / (factorial(a) * factorial(b) * factorial(c) * factorial(d));
                    if total == 0 {
                        value.add(h(&TwoConfig::empty(), &TwoConfig::empty()));
                        continue;
                    }
                    let region = integ.region;
                    let w = mc_chunks(right.seed, &[a as u64, b as u64, c as u64, d as u64], right.samples_per_order, |r| {
                        // iid draws: the trailing c plus / d minus points are a
                        // uniform ξ independent of η
                        Ok(SCRATCH.with_borrow_mut(|(joint, xi, plus, minus)| loop {
                            plus.clear();
                            plus.extend((0..a + c).map(|_| rng::uniform_point(r, &region)));
                            minus.clear();
                            minus.extend((0..b + d).map(|_| rng::uniform_point(r, &region)));
                            let (jp, jm) = joint.parts_mut();
                            if jp.refill(plus) && jm.refill(minus) && jp.is_disjoint(jm) {
                                let (xp, xm) = xi.parts_mut();
                                xp.refill(&plus[a..]);
                                xm.refill(&minus[b..]);
                                break h(joint, xi);
                            }
                        }))
                    })?;
                    value.add(wt * w.mean);
                    var += wt * wt * w.var_of_mean();
                }
            }
        }
    }
    let rhs = Estimate {
        value: value.value(),
        std_err: var.sqrt(),
        orders: integ.orders(),
    };
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Region {
        Region::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn unit_element_integrates_to_one_exactly() {
        let i = LPIntegrator::new(unit_box(), (3, 3), 1000, 1).unwrap();
        let e = lp_integrate(&ConfigFunction::unit(), &i).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn product_of_singletons_matches_quadrature() {
        let f = |x: f64| 1.0 + x;
        let g = |y: f64| (-y).exp();
        let h = ConfigFunction::new("fg", move |c| {
            if c.n_plus() == 1 && c.n_minus() == 1 {
                f(c.plus().points()[0].first()) * g(c.minus().points()[0].first())
            } else {
                0.0
            }
        });
        let z: f64 = 1.7;
        // ∫_0^1 (1+x) dx = 1.5, ∫_0^1 e^{-y} dy = 1 - e^{-1}
        let want = z * z * 1.5 * (1.0 - (-1.0f64).exp());
        let q = LPIntegrator::new(unit_box(), (2, 2), 10, 3)
            .unwrap()
            .with_intensity(z)
            .with_rule(Rule::Quadrature);
        let e = lp_integrate(&h, &q).unwrap();
        assert!((e.value - want).abs() < 1e-12);
        let mc = q.clone().with_rule(Rule::MonteCarlo).with_samples(40_000);
        let e = lp_integrate(&h, &mc).unwrap();
        assert!((e.value - want).abs() < 4.0 * e.std_err, "{e:?} {want}");
    }

    #[test]
    fn deterministic_given_seed() {
        let h = ConfigFunction::new("h", |c| c.all_points().map(|p| p.first().sin()).sum::<f64>());
        let i = LPIntegrator::new(unit_box(), (2, 1), 3000, 99).unwrap();
        let a = lp_integrate(&h, &i).unwrap();
        let b = lp_integrate(&h, &i).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let h = ConfigFunction::new("h", |c| c.all_points().map(|p| p.first().cos()).product::<f64>());
        let i = LPIntegrator::new(unit_box(), (2, 2), 5000, 4).unwrap();
        let a = lp_integrate(&h, &i).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| lp_integrate(&h, &i).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn norm_lc_examples() {
        let i = LPIntegrator::new(unit_box(), (2, 2), 100, 5).unwrap().with_rule(Rule::Quadrature);
        for c in [0.5, 1.0, 3.0] {
            assert_eq!(norm_lc(&ConfigFunction::unit(), c, &i).unwrap().value, 1.0);
        }
        let g = ConfigFunction::new("g", |c| match (c.n_plus(), c.n_minus()) {
            (0, 0) => -2.0,
            (1, 0) => (c.plus().points()[0].first() - 0.5) * 3.0,
            _ => 0.0,
        });
        // |g0| + C ∫_0^1 |3(x - 1/2)| dx = 2 + C·0.75
        let c = 2.0;
        let e = norm_lc(&g, c, &i).unwrap();
        // |x - 1/2| has a kink at the midpoint; 64 nodes resolve it to ~1e-4
        assert!((e.value - (2.0 + c * 0.75)).abs() < 1e-3, "{e:?}");
        let e2 = norm_lc(&g.scaled(2.0), c, &i).unwrap();
        assert!((e2.value - 2.0 * e.value).abs() < 1e-12);
    }

    #[test]
    fn norm_kc_probe_examples() {
        let i = LPIntegrator::new(unit_box(), (3, 3), 1, 0).unwrap();
        let c: f64 = 1.7;
        let k = CorrelationFunction::new("C^n", move |x| c.powi(x.total() as i32));
        assert_eq!(norm_kc(&k, c, &i, 200, 1).unwrap().lower_bound, 1.0);
        let zero = CorrelationFunction::new("0", |_| 0.0);
        assert_eq!(norm_kc(&zero, c, &i, 200, 1).unwrap().lower_bound, 0.0);
    }

    #[test]
    fn lemma2_trivial_integrand() {
        let i = LPIntegrator::new(unit_box(), (2, 2), 100, 1).unwrap();
        let (l, r) = lemma2_check(|eta, xi| if eta.is_empty() && xi.is_empty() { 1.0 } else { 0.0 }, &i).unwrap();
        assert_eq!(l.value, 1.0);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn quadrature_rejects_high_orders_in_nested_rule() {
        let g = GaussNodes::new(&unit_box()).unwrap();
        assert!(g.order_nodes(2, 1).is_err());
        assert!(GaussNodes::new(&Region::cube(2, 0.0, 1.0).unwrap()).is_err());
    }
}
