//! Gauss–Legendre rules.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::config::{Point, Region};

/// Nodes per axis of the default rule.
pub const DEFAULT_NODES: usize = 64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 64-node rule.
    pub fn standard() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(DEFAULT_NODES))
    }

    /// Shared 63-node rule; its nodes never coincide with the 64-node ones.
    pub fn companion() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(DEFAULT_NODES - 1))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(point, weight)` pairs on the one-dimensional region.
    pub fn on_interval(&self, region: &Region) -> Vec<(Point, f64)> {
        let lo = region.lower().first();
        let half = region.side(0) / 2.0;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| (Point::x(lo + half * (t + 1.0)), w * half))
            .collect()
    }

    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = (hi - lo) / 2.0;
        let mid = (hi + lo) / 2.0;
        crate::sum::csum(self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(mid + half * t))) * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let g = GaussLegendre::new(8);
        // degree 15 is the exactness limit for 8 nodes
        let v = g.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn standard_rule_is_accurate() {
        let g = GaussLegendre::standard();
        assert_eq!(g.len(), 64);
        let w: f64 = g.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-13);
        let v = g.integrate(0.0, 1.0, |x| (-(x - 0.4) * (x - 0.4) / 0.02).exp());
        // ∫_0^1 exp(-(x-0.4)^2/0.02) dx via erf, frozen
        let want = 0.5 * (0.02 * PI).sqrt() * (erf(0.6 / 0.02f64.sqrt()) + erf(0.4 / 0.02f64.sqrt()));
        assert!((v - want).abs() < 1e-7, "{v} {want}");
    }

    #[test]
    fn companion_nodes_are_distinct() {
        let a = GaussLegendre::standard();
        let b = GaussLegendre::companion();
        for x in &a.nodes {
            for y in &b.nodes {
                assert!((x - y).abs() > 1e-6);
            }
        }
    }

    // Abramowitz–Stegun 7.1.26; adequate for the 1e-7 check above.
    fn erf(x: f64) -> f64 {
        let t = 1.0 / (1.0 + 0.3275911 * x.abs());
        let y = 1.0
            - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t + 0.254829592)
                * t
                * (-x * x).exp();
        y.copysign(x)
    }
}
