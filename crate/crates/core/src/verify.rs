//! Verification suites: each check compares two computed quantities under a
//! stated tolerance and reports the outcome.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigFunction, Point, Region, TwoConfig};
use crate::error::{Error, Result};
use crate::generators::{apply_lhat, duality_check, fit_growth, fit_growth_over, growth_check, lhat_bruteforce, n_bound, norm_bound_check};
use crate::ktransform::{k_inverse, k_transform, k_transform_fn, star_convolution, star_convolution_fn, tabulate};
use crate::lp_measure::{draw_config, lemma2_check, lp_integrate, Estimate, LPIntegrator, Rule};
use crate::rates::{derive_kernel_numeric, standard_suite, KernelRole, RateSet, RateSpec};
use crate::rng::{self, Stream};
use crate::testfns::{random_config, random_sized_config, Factorized, FactorizedPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Lemma2,
    Kernels,
    Duality,
    Bounds,
    Oracle,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "algebra" => Suite::Algebra,
            "lemma2" => Suite::Lemma2,
            "kernels" => Suite::Kernels,
            "duality" => Suite::Duality,
            "bounds" => Suite::Bounds,
            "oracle" => Suite::Oracle,
            "all" => Suite::All,
            _ => return None,
        })
    }
}

/// How `lhs` and `rhs` are compared.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `lhs` is the largest relative error seen; passes when `≤ tolerance`.
    MaxRelError,
    /// `|lhs − rhs| ≤ tolerance · sigma`.
    Sigma,
    /// `lhs ≤ rhs + tolerance · sigma`.
    AtMost,
    /// `|lhs − rhs| ≤ tolerance`.
    Absolute,
    /// `lhs ≥ rhs` (counts).
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub criterion: Criterion,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub sigma: f64,
    pub pass: bool,
    /// Reported, but not part of the suite verdict.
    pub informational: bool,
}

impl Check {
    fn new(name: impl Into<String>, criterion: Criterion, lhs: f64, rhs: f64, tolerance: f64, sigma: f64) -> Self {
        let pass = match criterion {
            Criterion::MaxRelError => lhs <= tolerance,
            Criterion::Sigma => (lhs - rhs).abs() <= tolerance * sigma,
            Criterion::AtMost => lhs <= rhs + tolerance * sigma,
            Criterion::Absolute => (lhs - rhs).abs() <= tolerance,
            Criterion::AtLeast => lhs >= rhs,
        };
        Self {
            name: name.into(),
            criterion,
            lhs,
            rhs,
            tolerance,
            sigma,
            pass: pass && lhs.is_finite() && rhs.is_finite(),
            informational: false,
        }
    }

    pub fn max_rel(name: impl Into<String>, worst: f64, tolerance: f64) -> Self {
        Self::new(name, Criterion::MaxRelError, worst, 0.0, tolerance, 0.0)
    }

    pub fn sigma(name: impl Into<String>, lhs: &Estimate, rhs: &Estimate, k: f64) -> Self {
        Self::new(name, Criterion::Sigma, lhs.value, rhs.value, k, lhs.combined_err(rhs))
    }

    pub fn at_most(name: impl Into<String>, lhs: &Estimate, rhs: &Estimate, k: f64) -> Self {
        Self::new(name, Criterion::AtMost, lhs.value, rhs.value, k, lhs.combined_err(rhs))
    }

    pub fn absolute(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::new(name, Criterion::Absolute, lhs, rhs, tolerance, 0.0)
    }

    pub fn at_least(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, Criterion::AtLeast, lhs, rhs, 0.0, 0.0)
    }

    /// `lhs ≤ rhs` for deterministic values.
    pub fn bounded(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, Criterion::AtMost, lhs, rhs, 0.0, 0.0)
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.pass, self.informational) {
            (true, _) => "PASS",
            (false, true) => "info",
            (false, false) => "FAIL",
        };
        match self.criterion {
            Criterion::MaxRelError => write!(f, "{verdict} {}: max rel err {:.3e} (tol {:.0e})", self.name, self.lhs, self.tolerance),
            Criterion::Absolute => write!(f, "{verdict} {}: {:.10} vs {:.10} (tol {:.0e})", self.name, self.lhs, self.rhs, self.tolerance),
            Criterion::AtLeast => write!(f, "{verdict} {}: {} >= {}", self.name, self.lhs, self.rhs),
            Criterion::Sigma | Criterion::AtMost => write!(
                f,
                "{verdict} {}: {:.6} vs {:.6}, sigma {:.2e} ({:.2} sigma, tol {})",
                self.name,
                self.lhs,
                self.rhs,
                self.sigma,
                if self.sigma > 0.0 { (self.lhs - self.rhs).abs() / self.sigma } else { 0.0 },
                self.tolerance
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || c.informational)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{c}\n"));
        }
        let failed = self.checks.iter().filter(|c| !c.pass && !c.informational).count();
        s.push_str(&format!(
            "suite {}: {} checks, {} failed, {:.1} s\n",
            self.suite,
            self.checks.len(),
            failed,
            self.seconds
        ));
        s
    }
}

/// `|a − b| / max(|a|, |b|, scale)`: relative error, measured against the
/// magnitude of the inputs when the result itself cancels to near zero.
pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / a.abs().max(b.abs()).max(scale)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn unit() -> Region {
    Region::interval(0.0, 1.0).expect("unit interval")
}

/// Configuration with exactly `total` points, split at random.
fn config_of_size(rng: &mut Stream, region: &Region, total: usize) -> TwoConfig {
    let n = rng.random_range(0..=total);
    random_config(rng, region, n, total - n)
}

// ---------------------------------------------------------------------------
// algebra

/// `K⁻¹(KG) = G` on configurations of every size up to `n_max`.
pub fn k_roundtrip(cases: usize, n_max: usize, seed: u64) -> Result<Check> {
    let r = unit();
    let mut rng = rng::stream(seed, &[0x4B52]);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let g = Factorized::random(&mut rng, r, (2, 2)).function("G");
        for total in 0..=n_max {
            let gamma = config_of_size(&mut rng, &r, total);
            let back = k_inverse(|c| k_transform(&g, c).expect("within cap"), &gamma)?;
            let scale = max_abs(&tabulate(|c| k_transform(&g, c).expect("within cap"), &gamma)?);
            worst = worst.max(rel_err(back, g.eval(&gamma), scale));
        }
    }
    Ok(Check::max_rel(format!("K^-1 K G = G ({cases} G, |gamma| <= {n_max})"), worst, 1e-12))
}

/// `K(G₁⋆G₂) = KG₁·KG₂` and `(K⁻¹F₁)⋆(K⁻¹F₂) = K⁻¹(F₁F₂)`.
pub fn star_homomorphism(cases: usize, n_max: usize, seed: u64) -> Result<Vec<Check>> {
    let r = unit();
    let mut rng = rng::stream(seed, &[0x4853]);
    let (mut w1, mut w2) = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let g1 = Factorized::random(&mut rng, r, (2, 2)).function("G1");
        let g2 = Factorized::random(&mut rng, r, (2, 2)).function("G2");
        let f1 = Factorized::random(&mut rng, r, (n_max, n_max));
        let f2 = Factorized::random(&mut rng, r, (n_max, n_max));
        let size = rng.random_range(0..=n_max);
        let gamma = config_of_size(&mut rng, &r, size);

        let lhs = k_transform_fn(|c| star_convolution(&g1, &g2, c).expect("within cap"), &gamma)?;
        let rhs = k_transform(&g1, &gamma)? * k_transform(&g2, &gamma)?;
        let scale = max_abs(&tabulate(|c| star_convolution(&g1, &g2, c).expect("within cap"), &gamma)?);
        w1 = w1.max(rel_err(lhs, rhs, scale));

        let ki = |f: &Factorized, c: &TwoConfig| k_inverse(|s| f.eval(s), c).expect("within cap");
        let lhs = star_convolution_fn(|c| ki(&f1, c), |c| ki(&f2, c), &gamma)?;
        let rhs = k_inverse(|c| f1.eval(c) * f2.eval(c), &gamma)?;
        let scale = max_abs(&tabulate(|c| f1.eval(c) * f2.eval(c), &gamma)?);
        w2 = w2.max(rel_err(lhs, rhs, scale));
    }
    Ok(vec![
        Check::max_rel(format!("K(G1*G2) = KG1 KG2 ({cases} pairs, |gamma| <= {n_max})"), w1, 1e-12),
        Check::max_rel(format!("K^-1 F1 * K^-1 F2 = K^-1(F1 F2) ({cases} pairs, |gamma| <= {n_max})"), w2, 1e-12),
    ])
}

/// `G₁⋆G₂ = G₂⋆G₁`.
pub fn star_commutativity(cases: usize, n_max: usize, seed: u64) -> Result<Check> {
    let r = unit();
    let mut rng = rng::stream(seed, &[0x4343]);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let g1 = Factorized::random(&mut rng, r, (2, 2)).function("G1");
        let g2 = Factorized::random(&mut rng, r, (2, 2)).function("G2");
        let size = rng.random_range(0..=n_max);
        let gamma = config_of_size(&mut rng, &r, size);
        let a = star_convolution(&g1, &g2, &gamma)?;
        let b = star_convolution(&g2, &g1, &gamma)?;
        worst = worst.max(rel_err(a, b, 1e-300));
    }
    Ok(Check::max_rel(format!("G1*G2 = G2*G1 ({cases} pairs)"), worst, 1e-12))
}

pub fn algebra(n_max: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![k_roundtrip(100, n_max.max(1), seed)?];
    out.extend(star_homomorphism(50, n_max.min(6), seed)?);
    out.push(star_commutativity(50, n_max.min(6), seed)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// measure identities

/// The sub-configuration identity for `cases` random factorized `H`; each
/// case is reported, the verdict is that at least 95% agree within 3σ.
pub fn lemma2(cases: usize, orders: (usize, usize), samples: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng::stream(seed, &[0x4C32]);
    let mut out = Vec::new();
    let mut ok = 0usize;
    for i in 0..cases {
        let h = FactorizedPair::random(&mut rng, orders.0 + orders.1);
        let integ = LPIntegrator::new(unit(), orders, samples, rng::mix(seed, &[i as u64]))?;
        let (l, r) = lemma2_check(|eta, xi| h.eval(eta, xi), &integ)?;
        let c = Check::sigma(format!("sub-configuration identity, H #{i}"), &l, &r, 3.0).informational();
        ok += usize::from(c.pass);
        out.push(c);
    }
    let need = (cases * 19).div_ceil(20);
    out.push(Check::at_least(format!("cases within 3 sigma (of {cases})"), ok as f64, need as f64));
    Ok(out)
}

/// `∫ ∏_{x∈η⁺} 1_{[0,1]}(x) dλ(η) = e` over `Λ = [0, 1]`, truncated at
/// `n_max` points.
pub fn exponential_identity(n_max: usize, total_samples: usize, seed: u64) -> Result<Vec<Check>> {
    let per = (total_samples / (n_max + 1)).max(1);
    let integ = LPIntegrator::new(unit(), (n_max, 0), per, seed)?;
    let f = ConfigFunction::new("prod 1[0,1]", |c: &TwoConfig| {
        if c.plus().iter().all(|p| (0.0..=1.0).contains(&p.first())) {
            1.0
        } else {
            0.0
        }
    });
    let v = lp_integrate(&f, &integ)?;
    let partial: f64 = (0..=n_max).map(|n| 1.0 / (1..=n).map(|k| k as f64).product::<f64>()).sum();
    let e = std::f64::consts::E;
    Ok(vec![
        Check::sigma(format!("exponential identity vs partial sum (N = {n_max})"), &v, &Estimate::exact(partial, (n_max, 0)), 3.0),
        Check::absolute(format!("exponential identity vs e (N = {n_max})"), v.value, e, 1e-4),
    ])
}

// ---------------------------------------------------------------------------
// kernels

fn rate_sets(spec: Option<&RateSpec>) -> Result<Vec<(String, RateSet)>> {
    Ok(match spec {
        Some(s) => vec![(s.build()?.label.clone(), s.build()?)],
        None => standard_suite().into_iter().map(|(n, r)| (n.to_string(), r)).collect(),
    })
}

/// Closed-form kernels against `K⁻¹` of the rates at random tuples.
pub fn kernels(rates: &[(String, RateSet)], tuples: usize, seed: u64) -> Result<Vec<Check>> {
    let r = unit();
    let mut out = Vec::new();
    for (name, rs) in rates {
        let Some(fam) = rs.closed_form.clone() else {
            continue;
        };
        let mut rng = rng::stream(seed, &[0x4B45, name.len() as u64]);
        let roles = KernelRole::roles(rs.kind());
        let mut worst = 0.0f64;
        for t in 0..tuples {
            let role = roles[t % roles.len()];
            let x = rng::uniform_point(&mut rng, &r);
            let y: Option<Point> = role.is_pair().then(|| rng::uniform_point(&mut rng, &r));
            let mut avoid = TwoConfig::new(vec![x], y.into_iter().collect())?;
            let (n, m) = (rng.random_range(0..=2), rng.random_range(0..=2));
            let fixed = draw_config(&mut rng, &r, n, m, Some(&avoid));
            avoid = avoid.union(&fixed).expect("disjoint by construction");
            let (n, m) = (rng.random_range(0..=3), rng.random_range(0..=3));
            let var = draw_config(&mut rng, &r, n, m, Some(&avoid));
            let a = fam.kernel(role, &x, y.as_ref(), &fixed, &var)?;
            let b = derive_kernel_numeric(rs, role, &x, y.as_ref(), &fixed, &var)?;
            let scale = max_abs(&tabulate(
                |nu| fixed.union(nu).map_or(0.0, |c| rs.rate(role, &x, y.as_ref(), &c).unwrap_or(f64::NAN)),
                &var,
            )?);
            worst = worst.max(rel_err(a, b, scale));
        }
        out.push(Check::max_rel(format!("closed-form kernels, {name} ({tuples} tuples)"), worst, 1e-10));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// generators

/// `⟨⟨L̂G, k⟩⟩ = ⟨⟨G, L̂*k⟩⟩` with `G` signed and `k` positive, both supported
/// within the truncation.
pub fn duality(rates: &[(String, RateSet)], orders: (usize, usize), samples: usize, seed: u64) -> Result<Vec<Check>> {
    let r = unit();
    let mut out = Vec::new();
    for (i, (name, rs)) in rates.iter().enumerate() {
        let mut rng = rng::stream(seed, &[0x4455, i as u64]);
        let g = Factorized::random(&mut rng, r, orders).function("G");
        let k = Factorized::random_positive(&mut rng, r, orders).correlation("k");
        let integ = LPIntegrator::new(r, orders, samples, rng::mix(seed, &[0x4455, i as u64]))?;
        let (l, rr) = duality_check(rs, &g, &k, &integ)?;
        out.push(Check::sigma(format!("duality, {name}, orders {orders:?}"), &l, &rr, 3.0));
    }
    Ok(out)
}

/// `L̂` against the brute-force `K⁻¹LK`, both with the exact rule.
pub fn oracle(rates: &[(String, RateSet)], cases: usize, seed: u64) -> Result<Vec<Check>> {
    let r = unit();
    let integ = LPIntegrator::new(r, (2, 2), 1, seed)?.with_rule(Rule::Quadrature);
    let mut out = Vec::new();
    for (i, (name, rs)) in rates.iter().enumerate() {
        let mut rng = rng::stream(seed, &[0x4F52, i as u64]);
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let g = Factorized::random(&mut rng, r, (2, 2)).function("G");
            let eta = random_sized_config(&mut rng, &r, 4);
            let a = apply_lhat(rs, &g, &eta, &integ)?.estimate.value;
            let b = lhat_bruteforce(rs, &g, &eta, &integ)?.value;
            let scale = max_abs(&tabulate(|c| g.eval(c), &eta)?);
            worst = worst.max(rel_err(a, b, scale));
        }
        out.push(Check::max_rel(format!("L-hat vs brute-force K^-1 L K, {name} ({cases} cases)"), worst, 1e-8));
    }
    Ok(out)
}

/// `‖L̂G‖_{L_C} ≤ ‖N·G‖_{L_C}` for random `G` supported within `support`.
pub fn norm_bound(rates: &RateSet, label: &str, cases: usize, c: f64, support: (usize, usize), samples: usize, seed: u64) -> Result<Vec<Check>> {
    let r = unit();
    let mut rng = rng::stream(seed, &[0x4E42]);
    let mut out = Vec::new();
    for i in 0..cases {
        let g = Factorized::random(&mut rng, r, support).function("G");
        let integ = LPIntegrator::new(r, (support.0 + 1, support.1 + 1), samples, rng::mix(seed, &[0x4E42, i as u64]))?.with_rule(Rule::Quadrature);
        let (l, n) = norm_bound_check(rates, &g, c, &integ)?;
        out.push(Check::at_most(format!("|L-hat G| <= |N G| in L_C, {label}, C = {c}, G #{i}"), &l, &n, 3.0));
    }
    Ok(out)
}

/// Probes `N(η)` at random configurations of size `0..=max_size`, fits
/// growth constants (at the given `ν` if any) and reports the resulting
/// bound factor at `α` (default `1/(2ν)`). The fit covers its own probes by
/// construction, so the growth check here is a consistency check.
pub fn growth(rates: &RateSet, label: &str, c: f64, nu: Option<f64>, alpha: Option<f64>, max_size: usize, seed: u64) -> Result<Vec<Check>> {
    if let Some(v) = nu {
        if !(v >= 1.0) {
            return Err(Error::Config(format!("nu = {v} must be at least 1")));
        }
    }
    let r = unit();
    let integ = LPIntegrator::new(r, (2, 2), 1, seed)?.with_rule(Rule::Quadrature);
    let mut rng = rng::stream(seed, &[0x4752]);
    let mut probes = Vec::new();
    for size in 0..=max_size {
        for _ in 0..3 {
            let n = rng.random_range(0..=size);
            let eta = random_config(&mut rng, &r, n, size - n);
            probes.push((size, n_bound(rates, c, &eta, &integ)?.value));
        }
    }
    let g = match nu {
        Some(v) => fit_growth_over(&probes, &[v]),
        None => fit_growth(&probes),
    };
    let report = growth_check(&probes, &g);
    let alpha = alpha.unwrap_or(0.5 / g.nu);
    let factor = g.final_bound(alpha, 1.0)?;
    Ok(vec![
        Check::bounded(
            format!("growth of N, {label}, C = {c}: A = {:.4}, M = {}, nu = {} over {} probes", g.a, g.m, g.nu, report.probes),
            report.worst_ratio,
            1.0,
        ),
        Check::bounded(format!("L-hat-star bound factor at alpha = {alpha}, {label}: {factor:.4e} (finite)"), 0.0, factor).informational(),
    ])
}

/// Options shared by the suites; `None` picks the suite default.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub n_max: Option<usize>,
    pub seed: u64,
    pub rates: Option<RateSpec>,
    pub orders: Option<(usize, usize)>,
    pub samples: Option<usize>,
    pub cases: Option<usize>,
    /// Weight `C` of the norm-bound and growth checks.
    pub c: Option<f64>,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
}

pub fn run(suite: Suite, opts: &Options) -> Result<Report> {
    let t = Instant::now();
    let seed = opts.seed;
    let mut checks = Vec::new();
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Algebra) {
        checks.extend(algebra(opts.n_max.unwrap_or(8), seed)?);
    }
    if want(Suite::Lemma2) {
        checks.extend(lemma2(opts.cases.unwrap_or(20), opts.orders.unwrap_or((3, 3)), opts.samples.unwrap_or(100_000), seed)?);
        checks.extend(exponential_identity(12, 1_000_000, seed)?);
    }
    if want(Suite::Kernels) {
        let sets = match &opts.rates {
            Some(s) => rate_sets(Some(s))?,
            None => vec![("pp".into(), RateSpec::named("pp")?.build()?), ("ising".into(), RateSpec::named("ising")?.build()?)],
        };
        checks.extend(kernels(&sets, opts.cases.unwrap_or(200), seed)?);
    }
    if want(Suite::Duality) {
        checks.extend(duality(&rate_sets(opts.rates.as_ref())?, opts.orders.unwrap_or((2, 2)), opts.samples.unwrap_or(200_000), seed)?);
    }
    if want(Suite::Bounds) {
        let spec = opts.rates.clone().unwrap_or(RateSpec::named("pp")?);
        let rs = spec.build()?;
        let c = opts.c.unwrap_or(1.0);
        checks.extend(norm_bound(&rs, &rs.label.clone(), opts.cases.unwrap_or(20), c, (2, 1), opts.samples.unwrap_or(1_000), seed)?);
        checks.extend(growth(&rs, &rs.label.clone(), c, opts.nu, opts.alpha, 10, seed)?);
    }
    if want(Suite::Oracle) {
        checks.extend(oracle(&rate_sets(opts.rates.as_ref())?, opts.cases.unwrap_or(30), seed)?);
    }
    let name = match suite {
        Suite::Algebra => "algebra",
        Suite::Lemma2 => "lemma2",
        Suite::Kernels => "kernels",
        Suite::Duality => "duality",
        Suite::Bounds => "bounds",
        Suite::Oracle => "oracle",
        Suite::All => "all",
    };
    Ok(Report {
        suite: name.into(),
        checks,
        seconds: t.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria() {
        assert!(Check::max_rel("a", 1e-13, 1e-12).pass);
        assert!(!Check::max_rel("a", f64::NAN, 1e-12).pass);
        let e = |v, s| Estimate { value: v, std_err: s, orders: (0, 0) };
        assert!(Check::sigma("s", &e(1.0, 0.1), &e(1.2, 0.0), 3.0).pass);
        assert!(!Check::sigma("s", &e(1.0, 0.1), &e(1.5, 0.0), 3.0).pass);
        assert!(Check::at_most("m", &e(2.0, 0.1), &e(1.9, 0.0), 3.0).pass);
        assert!(Check::at_least("n", 19.0, 19.0).pass);
    }

    #[test]
    fn small_algebra_suite_passes() {
        let c = algebra(5, 3).unwrap();
        assert!(c.iter().all(|c| c.pass), "{c:?}");
    }

    #[test]
    fn informational_checks_do_not_fail_report() {
        let r = Report {
            suite: "x".into(),
            checks: vec![Check::max_rel("a", 1.0, 0.0).informational()],
            seconds: 0.0,
        };
        assert!(r.passed());
    }
}
