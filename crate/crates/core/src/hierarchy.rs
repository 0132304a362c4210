//! Truncated hierarchy evolution on a one-dimensional grid.
//!
//! Components `k^{(n,m)}` (or `G^{(n,m)}`) for `n ≤ N⁺`, `m ≤ N⁻` are stored
//! as symmetric functions on the node grid, one value per pair of node
//! multisets. The right-hand side is `L̂*k` (or `L̂G`) evaluated with grid
//! quadrature; anything above the truncation orders reads as zero.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigFunction, CorrelationFunction, Support, TwoConfig};
use crate::error::{Error, Result};
use crate::generators::{eval_lhat_star, lhat_terms};
use crate::lp_measure::{GridNodes, Inner, LPIntegrator};
use crate::rates::RateSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    QuasiObservable,
    Correlation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub grid_points: usize,
    /// Record every this many steps (the final time is always recorded).
    pub record_every: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            grid_points: 32,
            record_every: 1,
        }
    }
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

/// Indexing of the stored components.
#[derive(Clone, Debug)]
pub struct Layout {
    grid: GridNodes,
    orders: (usize, usize),
    support: Support,
}

impl Layout {
    pub fn new(integ: &LPIntegrator, grid_points: usize) -> Result<Self> {
        let grid = GridNodes::new(&integ.region, grid_points)?;
        let orders = integ.orders();
        Ok(Self {
            grid,
            orders,
            support: Support {
                max_plus: orders.0,
                max_minus: orders.1,
                region: integ.region,
            },
        })
    }

    pub fn grid(&self) -> &GridNodes {
        &self.grid
    }

    pub fn orders(&self) -> (usize, usize) {
        self.orders
    }

    fn count(&self, k: usize) -> usize {
        binom(self.grid.len() + k - 1 + usize::from(k == 0), k)
    }

    fn comp(&self, n: usize, m: usize) -> usize {
        n * (self.orders.1 + 1) + m
    }

    pub fn components(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.orders.0).flat_map(move |n| (0..=self.orders.1).map(move |m| (n, m)))
    }

    pub fn size(&self, n: usize, m: usize) -> usize {
        self.count(n) * self.count(m)
    }

    // colex rank of a multiset through the shift a_i + i
    fn rank(idx: &[usize]) -> usize {
        idx.iter().enumerate().map(|(i, &a)| binom(a + i, i + 1)).sum()
    }

    fn entries(&self, n: usize, m: usize) -> Vec<TwoConfig> {
        let cm = self.count(m);
        let mut out = vec![TwoConfig::empty(); self.size(n, m)];
        let g = self.grid.len();
        let _ = GridNodes::for_each_multiset(g, n, &mut |pl| {
            let rp = Self::rank(pl);
            GridNodes::for_each_multiset(g, m, &mut |mi| {
                out[rp * cm + Self::rank(mi)] = self.grid.config(pl, mi, None);
                Ok(())
            })
        });
        out
    }

    /// Flat position of `c` inside its component, `None` when off-grid or
    /// above truncation.
    pub fn locate(&self, c: &TwoConfig) -> Option<(usize, usize)> {
        let (n, m) = (c.n_plus(), c.n_minus());
        if n > self.orders.0 || m > self.orders.1 {
            return None;
        }
        let mut ip = Vec::with_capacity(n);
        for p in c.plus().iter() {
            ip.push(self.grid.index_of(p)?);
        }
        let mut im = Vec::with_capacity(m);
        for p in c.minus().iter() {
            im.push(self.grid.index_of(p)?);
        }
        ip.sort_unstable();
        im.sort_unstable();
        Some((self.comp(n, m), Self::rank(&ip) * self.count(m) + Self::rank(&im)))
    }

    /// `∏ n!/∏mult!` counting weights, so that a weighted mean over a
    /// component equals its spatial average.
    fn weights(&self, n: usize, m: usize) -> Vec<f64> {
        let cm = self.count(m);
        let mut out = vec![0.0; self.size(n, m)];
        let g = self.grid.len();
        let (fn_, fm) = ((1..=n).product::<usize>() as f64, (1..=m).product::<usize>() as f64);
        let _ = GridNodes::for_each_multiset(g, n, &mut |pl| {
            let rp = Self::rank(pl);
            let wp = fn_ * GridNodes::multiplicity_weight(pl);
            GridNodes::for_each_multiset(g, m, &mut |mi| {
                out[rp * cm + Self::rank(mi)] = wp * fm * GridNodes::multiplicity_weight(mi);
                Ok(())
            })
        });
        out
    }

    fn lookup(self: &Arc<Self>, state: Arc<Vec<Vec<f64>>>, label: &str) -> ConfigFunction {
        let me = Arc::clone(self);
        ConfigFunction::new(label, move |c: &TwoConfig| match me.locate(c) {
            Some((k, i)) => state[k][i],
            None => 0.0,
        })
        .with_support(self.support)
    }
}

/// Restricted components at one time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub values: Vec<Vec<f64>>,
}

/// Output of [`evolve_truncated`].
#[derive(Clone, Debug)]
pub struct Series {
    pub side: Side,
    pub layout: Arc<Layout>,
    pub snapshots: Vec<Snapshot>,
    weights: Vec<Vec<f64>>,
}

impl Series {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn component(&self, snap: usize, n: usize, m: usize) -> &[f64] {
        &self.snapshots[snap].values[self.layout.comp(n, m)]
    }

    /// Spatial average of component `(n, m)` at snapshot `snap`.
    pub fn mean(&self, snap: usize, n: usize, m: usize) -> f64 {
        let k = self.layout.comp(n, m);
        let w = &self.weights[k];
        let v = &self.snapshots[snap].values[k];
        let tot: f64 = w.iter().sum();
        w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / tot
    }

    pub fn value(&self, snap: usize, c: &TwoConfig) -> f64 {
        match self.layout.locate(c) {
            Some((k, i)) => self.snapshots[snap].values[k][i],
            None => 0.0,
        }
    }

    /// CSV with columns `time,n,m,mean,min,max`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "time,n,m,mean,min,max")?;
        for (s, snap) in self.snapshots.iter().enumerate() {
            for (n, m) in self.layout.components() {
                let v = self.component(s, n, m);
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                writeln!(w, "{},{},{},{:e},{:e},{:e}", snap.time, n, m, self.mean(s, n, m), lo, hi)?;
            }
        }
        Ok(())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Integrates `dk/dt = L̂*k` (correlation side) or `dG/dt = L̂G`
/// (quasi-observable side) with classical RK4, truncated at the
/// integrator's orders and discretised on a midpoint grid over its region.
pub fn evolve_truncated(
    rates: &RateSet,
    initial: &ConfigFunction,
    side: Side,
    t_end: f64,
    dt: f64,
    integ: &LPIntegrator,
    disc: &Discretization,
) -> Result<Series> {
    integ.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("need positive t_end and dt, got {t_end} and {dt}")));
    }
    if disc.record_every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    let layout = Arc::new(Layout::new(integ, disc.grid_points)?);
    let comps: Vec<(usize, usize)> = layout.components().collect();
    let entries: Vec<Vec<TwoConfig>> = comps.iter().map(|&(n, m)| layout.entries(n, m)).collect();
    let weights: Vec<Vec<f64>> = comps.iter().map(|&(n, m)| layout.weights(n, m)).collect();
    let kind = rates.kind();
    let fam = rates.kernels();
    let orders = layout.orders;

    let rhs = |state: Arc<Vec<Vec<f64>>>| -> Result<Vec<Vec<f64>>> {
        let f = layout.lookup(state, "grid state");
        let k = CorrelationFunction(f.clone());
        entries
            .iter()
            .map(|es| {
                es.par_iter()
                    .map(|eta| {
                        let mut inner = Inner::Grid(&layout.grid);
                        match side {
                            Side::Correlation => eval_lhat_star(kind, fam.as_ref(), &k, eta, orders, &mut inner),
                            Side::QuasiObservable => Ok(lhat_terms(kind, fam.as_ref(), &f, eta, &mut inner)?.total()),
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let axpy = |y: &[Vec<f64>], a: f64, k: &[Vec<f64>]| -> Arc<Vec<Vec<f64>>> {
        Arc::new(y.iter().zip(k).map(|(u, v)| u.iter().zip(v).map(|(p, q)| p + a * q).collect()).collect())
    };

    let mut y: Vec<Vec<f64>> = entries.iter().map(|es| es.iter().map(|c| initial.eval(c)).collect()).collect();
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut snapshots = vec![Snapshot { time: 0.0, values: y.clone() }];
    for s in 1..=steps {
        let k1 = rhs(Arc::new(y.clone()))?;
        let k2 = rhs(axpy(&y, h / 2.0, &k1))?;
        let k3 = rhs(axpy(&y, h / 2.0, &k2))?;
        let k4 = rhs(axpy(&y, h, &k3))?;
        let t = s as f64 * h;
        for c in 0..y.len() {
            let before = max_abs(&y[c]);
            for i in 0..y[c].len() {
                y[c][i] += h / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]);
            }
            let after = max_abs(&y[c]);
            if !after.is_finite() || (before > 1e-300 && after > 10.0 * before) {
                return Err(Error::StepSizeRejected { time: t, before, after });
            }
        }
        if s % disc.record_every == 0 || s == steps {
            snapshots.push(Snapshot { time: t, values: y.clone() });
        }
    }
    Ok(Series {
        side,
        layout,
        snapshots,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Region;
    use crate::rates::RateSet;

    fn poisson(rp: f64, rm: f64) -> ConfigFunction {
        ConfigFunction::new("poisson", move |c: &TwoConfig| rp.powi(c.n_plus() as i32) * rm.powi(c.n_minus() as i32))
    }

    fn integ(orders: (usize, usize)) -> LPIntegrator {
        LPIntegrator::new(Region::interval(0.0, 1.0).unwrap(), orders, 1, 0).unwrap()
    }

    #[test]
    fn multiset_ranks_are_a_bijection() {
        let l = Layout::new(&integ((3, 2)), 5).unwrap();
        for (n, m) in l.components() {
            let es = l.entries(n, m);
            let mut seen = vec![false; es.len()];
            for e in &es {
                let (k, i) = l.locate(e).unwrap();
                assert_eq!(k, l.comp(n, m));
                assert!(!seen[i]);
                seen[i] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn pure_death_decays_exponentially() {
        let rates = RateSet::constant(0.7, 0.3, 0.0, 0.0).unwrap();
        let s = evolve_truncated(&rates, &poisson(2.0, 1.5), Side::Correlation, 1.0, 1e-2, &integ((1, 1)), &Discretization {
            grid_points: 8,
            record_every: 10,
        })
        .unwrap();
        for (i, t) in s.times().iter().enumerate() {
            assert!((s.mean(i, 1, 0) - 2.0 * (-0.7 * t).exp()).abs() < 1e-9);
            assert!((s.mean(i, 0, 1) - 1.5 * (-0.3 * t).exp()).abs() < 1e-9);
            assert!((s.mean(i, 1, 1) - 3.0 * (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn free_birth_death_relaxes_to_fixed_point() {
        let rates = RateSet::constant(2.0, 1.0, 1.0, 0.5).unwrap();
        let s = evolve_truncated(&rates, &poisson(0.1, 0.0), Side::Correlation, 10.0, 1e-2, &integ((1, 1)), &Discretization {
            grid_points: 4,
            record_every: 1000,
        })
        .unwrap();
        let last = s.snapshots.len() - 1;
        assert!((s.mean(last, 1, 0) - 0.5).abs() < 1e-6);
        assert!((s.mean(last, 0, 1) - 0.5).abs() < 1e-4);
    }

    #[test]
    fn zero_rates_leave_state_unchanged() {
        let rates = RateSet::constant(0.0, 0.0, 0.0, 0.0).unwrap();
        let g = ConfigFunction::new("g", |c: &TwoConfig| c.all_points().map(|p| p.first()).sum::<f64>() + 1.0);
        for side in [Side::Correlation, Side::QuasiObservable] {
            let s = evolve_truncated(&rates, &g, side, 0.1, 1e-2, &integ((2, 1)), &Discretization {
                grid_points: 4,
                record_every: 1,
            })
            .unwrap();
            assert_eq!(s.snapshots.first().unwrap().values, s.snapshots.last().unwrap().values);
        }
    }

    #[test]
    fn quasi_observable_death_matches_closed_form() {
        // L̂G for G = 1 on singletons and constant death: dG/dt = −m G
        let rates = RateSet::constant(0.5, 0.0, 0.0, 0.0).unwrap();
        let g = ConfigFunction::new("g", |c: &TwoConfig| if c.n_plus() == 1 && c.n_minus() == 0 { 1.0 } else { 0.0 });
        let s = evolve_truncated(&rates, &g, Side::QuasiObservable, 1.0, 1e-2, &integ((1, 0)), &Discretization {
            grid_points: 4,
            record_every: 100,
        })
        .unwrap();
        assert!((s.mean(1, 1, 0) - (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn blow_up_is_rejected() {
        let rates = RateSet::constant(200.0, 0.0, 0.0, 0.0).unwrap();
        let e = evolve_truncated(&rates, &poisson(1.0, 0.0), Side::Correlation, 1.0, 0.1, &integ((1, 0)), &Discretization::default());
        assert!(matches!(e, Err(Error::StepSizeRejected { .. })));
    }
}
