//! Random smooth test functions with certified support, shared by the
//! verification suites and the test targets.

use rand::Rng;

use crate::config::{ConfigFunction, CorrelationFunction, Point, Region, Support, TwoConfig};
use crate::lp_measure::draw_config;
use crate::rng::Stream;

/// `x ↦ a + b cos(ω x₀ + φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave {
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub phi: f64,
}

impl Wave {
    /// Strictly positive when `lo > 0`.
    pub fn random(rng: &mut Stream, lo: f64, hi: f64) -> Self {
        let a = rng.random_range(lo..hi);
        Self {
            a,
            b: rng.random_range(-0.5..0.5) * a,
            omega: rng.random_range(0.5..6.0),
            phi: rng.random_range(0.0..std::f64::consts::TAU),
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        self.a + self.b * (self.omega * p.first() + self.phi).cos()
    }
}

/// `G(η) = c(|η⁺|, |η⁻|) ∏_{x∈η⁺} u(x) ∏_{y∈η⁻} v(y)` on `|η| ≤ max`.
#[derive(Clone, Debug)]
pub struct Factorized {
    pub coef: Vec<Vec<f64>>,
    pub plus: Wave,
    pub minus: Wave,
    pub support: Support,
}

impl Factorized {
    /// Signed coefficients in `[-1, 1]`.
    pub fn random(rng: &mut Stream, region: Region, max: (usize, usize)) -> Self {
        let coef = (0..=max.0).map(|_| (0..=max.1).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        Self::with_coef(rng, region, max, coef)
    }

    /// Coefficients in `[0.2, 1.2]`, waves bounded away from zero.
    pub fn random_positive(rng: &mut Stream, region: Region, max: (usize, usize)) -> Self {
        let coef = (0..=max.0).map(|_| (0..=max.1).map(|_| rng.random_range(0.2..1.2)).collect()).collect();
        Self::with_coef(rng, region, max, coef)
    }

    fn with_coef(rng: &mut Stream, region: Region, max: (usize, usize), coef: Vec<Vec<f64>>) -> Self {
        Self {
            coef,
            plus: Wave::random(rng, 0.4, 1.2),
            minus: Wave::random(rng, 0.4, 1.2),
            support: Support {
                max_plus: max.0,
                max_minus: max.1,
                region,
            },
        }
    }

    pub fn eval(&self, c: &TwoConfig) -> f64 {
        if !self.support.admits(c) {
            return 0.0;
        }
        let mut v = self.coef[c.n_plus()][c.n_minus()];
        for x in c.plus().iter() {
            v *= self.plus.eval(x);
        }
        for y in c.minus().iter() {
            v *= self.minus.eval(y);
        }
        v
    }

    pub fn function(&self, label: &str) -> ConfigFunction {
        let me = self.clone();
        ConfigFunction::new(label, move |c: &TwoConfig| me.eval(c)).with_support(self.support)
    }

    pub fn correlation(&self, label: &str) -> CorrelationFunction {
        CorrelationFunction(self.function(label))
    }
}

/// `x ↦ c₀ + c₁x₀ + c₂x₀²`, cheap enough for exhaustive subset sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadratic(pub [f64; 3]);

impl Quadratic {
    /// Strictly positive on `[0, 1]` when `lo > 0`.
    pub fn random(rng: &mut Stream, lo: f64, hi: f64) -> Self {
        let c0 = rng.random_range(lo..hi);
        let c1 = rng.random_range(-0.5..0.5) * c0;
        Self([c0, c1, rng.random_range(0.0..0.5) * c0])
    }

    pub fn eval(&self, p: &Point) -> f64 {
        let x = p.first();
        self.0[0] + x * (self.0[1] + x * self.0[2])
    }
}

/// Factorized two-argument integrand for the sub-configuration identity:
/// `H(η, ξ) = w(|ξ|, |η∖ξ|) ∏ over points of a factor chosen by component
/// and by membership in ξ`.
#[derive(Clone, Debug)]
pub struct FactorizedPair {
    pub weight: Vec<Vec<f64>>,
    /// `[plus in ξ, plus outside, minus in ξ, minus outside]`.
    pub factors: [Quadratic; 4],
}

impl FactorizedPair {
    pub fn random(rng: &mut Stream, max_total: usize) -> Self {
        let weight = (0..=max_total).map(|_| (0..=max_total).map(|_| rng.random_range(0.2..1.0)).collect()).collect();
        let factors = [(); 4].map(|_| Quadratic::random(rng, 0.3, 1.1));
        Self { weight, factors }
    }

    /// `ξ` must be a sub-configuration of `η`.
    pub fn eval(&self, eta: &TwoConfig, xi: &TwoConfig) -> f64 {
        let (i, o) = (xi.total(), eta.total() - xi.total());
        let mut v = self.weight.get(i).and_then(|r| r.get(o)).copied().unwrap_or(0.0);
        v *= self.product(eta.plus().points(), xi.plus().points(), 0);
        v *= self.product(eta.minus().points(), xi.minus().points(), 2);
        v
    }

    // both slices sorted, `inner` a subset of `all`
    fn product(&self, all: &[Point], inner: &[Point], k: usize) -> f64 {
        let mut v = 1.0;
        let mut j = 0;
        for x in all {
            if inner.get(j) == Some(x) {
                j += 1;
                v *= self.factors[k].eval(x);
            } else {
                v *= self.factors[k + 1].eval(x);
            }
        }
        v
    }
}

/// A uniform random configuration with `n` plus and `m` minus points.
pub fn random_config(rng: &mut Stream, region: &Region, n: usize, m: usize) -> TwoConfig {
    draw_config(rng, region, n, m, None)
}

/// Random sizes with `n + m ≤ max_total`, then a uniform configuration.
pub fn random_sized_config(rng: &mut Stream, region: &Region, max_total: usize) -> TwoConfig {
    let total = rng.random_range(0..=max_total);
    let n = rng.random_range(0..=total);
    random_config(rng, region, n, total - n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn support_is_respected() {
        let r = Region::interval(0.0, 1.0).unwrap();
        let mut rng = stream(1, &[]);
        let g = Factorized::random(&mut rng, r, (2, 1));
        let f = g.function("g");
        assert_eq!(f.eval(&TwoConfig::from_1d(&[0.1, 0.2, 0.3], &[]).unwrap()), 0.0);
        assert_eq!(f.eval(&TwoConfig::from_1d(&[0.1], &[1.5]).unwrap()), 0.0);
        assert_ne!(f.eval(&TwoConfig::from_1d(&[0.1, 0.2], &[0.3]).unwrap()), 0.0);
    }

    #[test]
    fn positive_variant_is_positive() {
        let r = Region::interval(0.0, 1.0).unwrap();
        let mut rng = stream(2, &[]);
        for _ in 0..20 {
            let g = Factorized::random_positive(&mut rng, r, (4, 4));
            let c = random_sized_config(&mut rng, &r, 4);
            assert!(g.eval(&c) > 0.0);
        }
    }
}
