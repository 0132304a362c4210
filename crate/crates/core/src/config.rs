//! Finite two-component configurations and functions on them.
//!
//! A [`TwoConfig`] is a pair of finite point sets `(plus, minus)` in `R^d`
//! with no point shared between the components. Points are stored in a
//! canonical lexicographic order so that equal configurations compare equal
//! and subset enumeration by bitmask is deterministic.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

/// Hard cap on the number of points for exhaustive subset enumeration.
pub const SUBSET_CAP: usize = 20;

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A point in `R^d`, `d <= 3`. Unused trailing coordinates are zero.
#[derive(Clone, Copy)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::InvalidDimension(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    /// One-dimensional point. Panics on a non-finite coordinate.
    pub fn x(x: f64) -> Self {
        Self::new(&[x]).expect("finite coordinate")
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    /// First coordinate; the whole point when `d = 1`.
    pub fn first(&self) -> f64 {
        self.coords[0]
    }

    pub fn sub(&self, other: &Point) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for (i, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = self.coords[i] - other.coords[i];
        }
        out
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &Point) -> f64 {
        self.sub(other).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn bits(&self) -> [u64; MAX_DIM] {
        [
            self.coords[0].to_bits(),
            self.coords[1].to_bits(),
            self.coords[2].to_bits(),
        ]
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        for i in 0..MAX_DIM {
            match self.coords[i].total_cmp(&other.coords[i]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.dim.cmp(&other.dim)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.coords[0])
        } else {
            write!(f, "{:?}", self.coords())
        }
    }
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    lower: Point,
    upper: Point,
}

impl Region {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim != upper.dim {
            return Err(Error::InvalidRegion("dimension mismatch".into()));
        }
        if lower.coords().iter().zip(upper.coords()).any(|(l, u)| l >= u) {
            return Err(Error::InvalidRegion(format!(
                "lower {lower:?} must be strictly below upper {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The interval `[lo, hi]` in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Point::new(&[lo])?, Point::new(&[hi])?)
    }

    /// The cube `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(Point::new(&vec![lo; dim])?, Point::new(&vec![hi; dim])?)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .coords()
            .iter()
            .zip(self.upper.coords())
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper.coords[axis] - self.lower.coords[axis]
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim == self.lower.dim
            && p
                .coords()
                .iter()
                .zip(self.lower.coords().iter().zip(self.upper.coords()))
                .all(|(c, (l, u))| c >= l && c <= u)
    }

    /// Point at relative position `u ∈ [0,1]^d` inside the box.
    pub fn at_unit(&self, u: &[f64]) -> Point {
        let mut c = [0.0; MAX_DIM];
        for (i, ci) in c.iter_mut().enumerate().take(self.dim()) {
            *ci = self.lower.coords[i] + u[i] * self.side(i);
        }
        Point {
            coords: c,
            dim: self.lower.dim,
        }
    }

    /// Componentwise displacement `x - y` under the periodic (torus) metric.
    pub fn periodic_sub(&self, x: &Point, y: &Point) -> [f64; MAX_DIM] {
        let mut d = x.sub(y);
        for (i, di) in d.iter_mut().enumerate().take(self.dim()) {
            let l = self.side(i);
            *di -= l * (*di / l).round();
        }
        d
    }

    pub fn periodic_dist(&self, x: &Point, y: &Point) -> f64 {
        self.periodic_sub(x, y).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The box enlarged by `pad` on every side.
    pub fn padded(&self, pad: f64) -> Result<Self> {
        let lo: Vec<f64> = self.lower.coords().iter().map(|c| c - pad).collect();
        let hi: Vec<f64> = self.upper.coords().iter().map(|c| c + pad).collect();
        Self::new(Point::new(&lo)?, Point::new(&hi)?)
    }
}

/// A finite set of distinct points in canonical (sorted) order.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteConfig {
    points: Vec<Point>,
}

impl std::hash::Hash for Point {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.bits().hash(state);
        self.dim.hash(state);
    }
}

impl FiniteConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a canonical configuration; rejects repeated points.
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        points.sort();
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint);
        }
        Ok(Self { points })
    }

    /// Caller guarantees `points` are sorted and distinct.
    pub(crate) fn from_sorted_unchecked(points: Vec<Point>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// `self ∪ {p}`; `None` if `p` is already present.
    pub fn with(&self, p: Point) -> Option<Self> {
        match self.points.binary_search(&p) {
            Ok(_) => None,
            Err(pos) => {
                let mut pts = Vec::with_capacity(self.points.len() + 1);
                pts.extend_from_slice(&self.points[..pos]);
                pts.push(p);
                pts.extend_from_slice(&self.points[pos..]);
                Some(Self { points: pts })
            }
        }
    }

    /// `self ∖ {p}`; unchanged if `p` is absent.
    pub fn without(&self, p: &Point) -> Self {
        match self.points.binary_search(p) {
            Ok(pos) => {
                let mut pts = self.points.clone();
                pts.remove(pos);
                Self { points: pts }
            }
            Err(_) => self.clone(),
        }
    }

    /// Removes the point at canonical index `i`.
    pub fn without_index(&self, i: usize) -> Self {
        let mut pts = self.points.clone();
        pts.remove(i);
        Self { points: pts }
    }

    /// Union of two configurations; `None` if they share a point.
    pub fn union(&self, other: &Self) -> Option<Self> {
        let mut pts = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            match self.points[i].cmp(&other.points[j]) {
                Ordering::Less => {
                    pts.push(self.points[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    pts.push(other.points[j]);
                    j += 1;
                }
                Ordering::Equal => return None,
            }
        }
        pts.extend_from_slice(&self.points[i..]);
        pts.extend_from_slice(&other.points[j..]);
        Some(Self { points: pts })
    }

    /// Subset selected by bitmask over the canonical order.
    pub fn select(&self, mask: u32) -> Self {
        let pts = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| *p)
            .collect();
        Self { points: pts }
    }

    pub(crate) fn select_into(&self, mask: u32, out: &mut Self) {
        out.points.clear();
        out.points.extend(self.points.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p));
    }

    /// Replaces the contents in place; `false` on a repeated point.
    pub(crate) fn refill(&mut self, pts: &[Point]) -> bool {
        self.points.clear();
        self.points.extend_from_slice(pts);
        self.points.sort();
        !self.points.windows(2).any(|w| w[0] == w[1])
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            match self.points[i].cmp(&other.points[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => return false,
            }
        }
        true
    }
}

impl fmt::Debug for FiniteConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.points.iter()).finish()
    }
}

/// Iterator over all subsets of a [`FiniteConfig`] with their complements.
pub struct Subsets<'a> {
    cfg: &'a FiniteConfig,
    mask: u64,
    end: u64,
}

impl Iterator for Subsets<'_> {
    type Item = (FiniteConfig, FiniteConfig);

    fn next(&mut self) -> Option<Self::Item> {
        if self.mask >= self.end {
            return None;
        }
        let m = self.mask as u32;
        let full = (self.end - 1) as u32;
        self.mask += 1;
        Some((self.cfg.select(m), self.cfg.select(full & !m)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = (self.end - self.mask) as usize;
        (r, Some(r))
    }
}

impl ExactSizeIterator for Subsets<'_> {}

/// All `2^|cfg|` subsets of `cfg` in bitmask order, each paired with its
/// complement.
pub fn subsets(cfg: &FiniteConfig) -> Result<Subsets<'_>> {
    subsets_capped(cfg, SUBSET_CAP)
}

pub fn subsets_capped(cfg: &FiniteConfig, cap: usize) -> Result<Subsets<'_>> {
    if cfg.len() > cap {
        return Err(Error::CapExceeded {
            size: cfg.len(),
            cap,
        });
    }
    Ok(Subsets {
        cfg,
        mask: 0,
        end: 1u64 << cfg.len(),
    })
}

/// A pair `(plus, minus)` of finite configurations with disjoint supports.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TwoConfig {
    pub(crate) plus: FiniteConfig,
    pub(crate) minus: FiniteConfig,
}

impl TwoConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(plus: Vec<Point>, minus: Vec<Point>) -> Result<Self> {
        let plus = FiniteConfig::new(plus)?;
        let minus = FiniteConfig::new(minus)?;
        Self::from_parts(plus, minus)
    }

    /// One-dimensional shorthand.
    pub fn from_1d(plus: &[f64], minus: &[f64]) -> Result<Self> {
        let p = plus.iter().map(|&x| Point::new(&[x])).collect::<Result<_>>()?;
        let m = minus.iter().map(|&x| Point::new(&[x])).collect::<Result<_>>()?;
        Self::new(p, m)
    }

    pub fn from_parts(plus: FiniteConfig, minus: FiniteConfig) -> Result<Self> {
        if !plus.is_disjoint(&minus) {
            return Err(Error::DisjointnessViolation);
        }
        Ok(Self { plus, minus })
    }

    pub(crate) fn from_parts_unchecked(plus: FiniteConfig, minus: FiniteConfig) -> Self {
        debug_assert!(plus.is_disjoint(&minus));
        Self { plus, minus }
    }

    pub fn plus(&self) -> &FiniteConfig {
        &self.plus
    }

    pub fn minus(&self) -> &FiniteConfig {
        &self.minus
    }

    pub fn n_plus(&self) -> usize {
        self.plus.len()
    }

    pub fn n_minus(&self) -> usize {
        self.minus.len()
    }

    pub fn total(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.plus.contains(p) || self.minus.contains(p)
    }

    /// Sub-configuration selected by a mask over `total()` bits: the low
    /// `n_plus()` bits index the plus points, the rest the minus points.
    pub fn select(&self, mask: u32) -> Self {
        let np = self.plus.len();
        let pm = if np == 32 { u32::MAX } else { (1u32 << np) - 1 };
        Self {
            plus: self.plus.select(mask & pm),
            minus: self.minus.select(mask.checked_shr(np as u32).unwrap_or(0)),
        }
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut FiniteConfig, &mut FiniteConfig) {
        (&mut self.plus, &mut self.minus)
    }

    pub(crate) fn select_into(&self, mask: u32, out: &mut Self) {
        let np = self.plus.len();
        let pm = if np == 32 { u32::MAX } else { (1u32 << np) - 1 };
        self.plus.select_into(mask & pm, &mut out.plus);
        self.minus.select_into(mask.checked_shr(np as u32).unwrap_or(0), &mut out.minus);
    }

    pub fn full_mask(&self) -> u32 {
        if self.total() == 32 {
            u32::MAX
        } else {
            (1u32 << self.total()) - 1
        }
    }

    pub fn check_cap(&self) -> Result<()> {
        if self.total() > SUBSET_CAP {
            return Err(Error::CapExceeded {
                size: self.total(),
                cap: SUBSET_CAP,
            });
        }
        Ok(())
    }

    /// Component-wise union; `None` on any coincidence.
    pub fn union(&self, other: &Self) -> Option<Self> {
        let plus = self.plus.union(&other.plus)?;
        let minus = self.minus.union(&other.minus)?;
        plus.is_disjoint(&minus).then_some(Self { plus, minus })
    }

    pub fn with_plus(&self, p: Point) -> Option<Self> {
        if self.minus.contains(&p) {
            return None;
        }
        Some(Self {
            plus: self.plus.with(p)?,
            minus: self.minus.clone(),
        })
    }

    pub fn with_minus(&self, p: Point) -> Option<Self> {
        if self.plus.contains(&p) {
            return None;
        }
        Some(Self {
            plus: self.plus.clone(),
            minus: self.minus.with(p)?,
        })
    }

    pub fn without_plus(&self, p: &Point) -> Self {
        Self {
            plus: self.plus.without(p),
            minus: self.minus.clone(),
        }
    }

    pub fn without_minus(&self, p: &Point) -> Self {
        Self {
            plus: self.plus.clone(),
            minus: self.minus.without(p),
        }
    }

    /// All points, plus component first.
    pub fn all_points(&self) -> impl Iterator<Item = &Point> {
        self.plus.iter().chain(self.minus.iter())
    }

    /// Canonical key for memoization.
    pub(crate) fn key(&self) -> Vec<u64> {
        let mut k = Vec::with_capacity(1 + 3 * self.total());
        k.push(self.plus.len() as u64);
        for p in self.all_points() {
            k.extend_from_slice(&p.bits());
        }
        k
    }
}

impl fmt::Debug for TwoConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.plus, self.minus)
    }
}

/// Builds a canonical [`TwoConfig`] from point lists.
pub fn two_config(plus: Vec<Point>, minus: Vec<Point>) -> Result<TwoConfig> {
    TwoConfig::new(plus, minus)
}

/// Certificate of bounded support: the function vanishes whenever
/// `|η⁺| > max_plus`, `|η⁻| > max_minus`, or a point lies outside `region`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Support {
    pub max_plus: usize,
    pub max_minus: usize,
    pub region: Region,
}

impl Support {
    pub fn admits(&self, cfg: &TwoConfig) -> bool {
        cfg.n_plus() <= self.max_plus
            && cfg.n_minus() <= self.max_minus
            && cfg.all_points().all(|p| self.region.contains(p))
    }
}

type EvalFn = dyn Fn(&TwoConfig) -> f64 + Send + Sync;

/// An evaluatable real function on finite two-component configurations.
#[derive(Clone)]
pub struct ConfigFunction {
    eval: Arc<EvalFn>,
    support: Option<Support>,
    label: String,
}

impl fmt::Debug for ConfigFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConfigFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

impl ConfigFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(&TwoConfig) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            support: None,
            label: label.into(),
        }
    }

    /// Attaches a support certificate. Evaluation outside the support
    /// returns exactly zero regardless of the wrapped closure.
    pub fn with_support(self, support: Support) -> Self {
        let inner = self.eval;
        Self {
            eval: Arc::new(move |c: &TwoConfig| if support.admits(c) { inner(c) } else { 0.0 }),
            support: Some(support),
            label: self.label,
        }
    }

    pub fn eval(&self, cfg: &TwoConfig) -> f64 {
        (self.eval)(cfg)
    }

    pub fn support(&self) -> Option<&Support> {
        self.support.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The unit element of the ⋆-algebra: 1 on `(∅,∅)`, 0 elsewhere.
    pub fn unit() -> Self {
        Self::new("unit", |c: &TwoConfig| if c.is_empty() { 1.0 } else { 0.0 })
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("const({value})"), move |_: &TwoConfig| value)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `c ↦ base^{|c⁺|+|c⁻|}`.
    pub fn power(base: f64) -> Self {
        Self::new(format!("power({base})"), move |c: &TwoConfig| base.powi(c.total() as i32))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let f = self.eval.clone();
        Self {
            eval: Arc::new(move |c: &TwoConfig| a * f(c)),
            support: self.support,
            label: format!("{a}*{}", self.label),
        }
    }

    pub fn abs(&self) -> Self {
        let f = self.eval.clone();
        Self {
            eval: Arc::new(move |c: &TwoConfig| f(c).abs()),
            support: self.support,
            label: format!("|{}|", self.label),
        }
    }

    /// Pointwise product; keeps the tighter support certificate if any.
    pub fn product(&self, other: &Self) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self {
            eval: Arc::new(move |c: &TwoConfig| {
                let a = f(c);
                if a == 0.0 {
                    0.0
                } else {
                    a * g(c)
                }
            }),
            support: self.support.or(other.support),
            label: format!("{}*{}", self.label, other.label),
        }
    }

    /// Linear combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self {
            eval: Arc::new(move |c: &TwoConfig| a * f(c) + b * g(c)),
            support: None,
            label: format!("{a}*{}+{b}*{}", self.label, other.label),
        }
    }

    /// Caches values by canonical configuration. Only changes cost.
    pub fn memoized(&self) -> Self {
        let f = self.eval.clone();
        let cache: Arc<Mutex<HashMap<Vec<u64>, f64>>> = Arc::default();
        Self {
            eval: Arc::new(move |c: &TwoConfig| {
                let key = c.key();
                if let Some(v) = cache.lock().expect("cache lock").get(&key) {
                    return *v;
                }
                let v = f(c);
                cache.lock().expect("cache lock").insert(key, v);
                v
            }),
            support: self.support,
            label: self.label.clone(),
        }
    }
}

/// A correlation function `k`; same representation as a [`ConfigFunction`],
/// viewed through its components `k^{(n,m)}`.
#[derive(Clone, Debug)]
pub struct CorrelationFunction(pub ConfigFunction);

impl CorrelationFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(&TwoConfig) -> f64 + Send + Sync + 'static) -> Self {
        Self(ConfigFunction::new(label, f))
    }

    pub fn eval(&self, cfg: &TwoConfig) -> f64 {
        self.0.eval(cfg)
    }

    pub fn as_function(&self) -> &ConfigFunction {
        &self.0
    }

    /// The component `k^{(n,m)}` as a function of `n` plus-points and `m`
    /// minus-points.
    pub fn restrict(&self, n: usize, m: usize) -> Restriction<'_> {
        Restriction { k: self, n, m }
    }
}

impl From<ConfigFunction> for CorrelationFunction {
    fn from(f: ConfigFunction) -> Self {
        Self(f)
    }
}

impl std::ops::Deref for CorrelationFunction {
    type Target = ConfigFunction;
    fn deref(&self) -> &ConfigFunction {
        &self.0
    }
}

/// `k^{(n,m)}`: symmetric in the plus arguments and in the minus arguments.
pub struct Restriction<'a> {
    k: &'a CorrelationFunction,
    n: usize,
    m: usize,
}

impl Restriction<'_> {
    pub fn orders(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn eval(&self, plus: &[Point], minus: &[Point]) -> Result<f64> {
        if plus.len() != self.n || minus.len() != self.m {
            return Err(Error::ArityMismatch {
                expected: (self.n, self.m),
                got: (plus.len(), minus.len()),
            });
        }
        let cfg = TwoConfig::new(plus.to_vec(), minus.to_vec())?;
        Ok(self.k.eval(&cfg))
    }
}

/// Free-function form of [`CorrelationFunction::restrict`].
pub fn restrict(k: &CorrelationFunction, n: usize, m: usize) -> Restriction<'_> {
    k.restrict(n, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::x(x)).collect()
    }

    #[test]
    fn empty_configuration() {
        let c = two_config(vec![], vec![]).unwrap();
        assert!(c.is_empty());
        assert_eq!(c, TwoConfig::empty());
    }

    #[test]
    fn shared_point_is_rejected() {
        let e = two_config(pts(&[0.1]), pts(&[0.1])).unwrap_err();
        assert!(matches!(e, Error::DisjointnessViolation));
    }

    #[test]
    fn duplicate_within_component_is_rejected() {
        let e = two_config(pts(&[0.2, 0.2]), vec![]).unwrap_err();
        assert!(matches!(e, Error::DuplicatePoint));
    }

    #[test]
    fn canonical_order() {
        let c = two_config(pts(&[0.3, 0.1]), vec![]).unwrap();
        assert_eq!(c.plus().points(), &pts(&[0.1, 0.3])[..]);
    }

    #[test]
    fn subset_counts() {
        let empty = FiniteConfig::empty();
        let s: Vec<_> = subsets(&empty).unwrap().collect();
        assert_eq!(s.len(), 1);
        assert!(s[0].0.is_empty());

        let one = FiniteConfig::new(pts(&[0.5])).unwrap();
        let s: Vec<_> = subsets(&one).unwrap().map(|(a, _)| a).collect();
        assert_eq!(s, vec![FiniteConfig::empty(), one.clone()]);

        let three = FiniteConfig::new(pts(&[0.1, 0.2, 0.3])).unwrap();
        let all: Vec<_> = subsets(&three).unwrap().collect();
        assert_eq!(all.len(), 8);
        let mut seen = std::collections::HashSet::new();
        for (s, c) in &all {
            assert!(seen.insert(s.clone()));
            assert!(s.is_disjoint(c));
            assert_eq!(s.union(c).unwrap(), three);
        }
    }

    #[test]
    fn subset_cap() {
        let big = FiniteConfig::new((0..21).map(|i| Point::x(i as f64)).collect()).unwrap();
        assert!(matches!(subsets(&big), Err(Error::CapExceeded { size: 21, cap: 20 })));
    }

    #[test]
    fn restrict_examples() {
        let one = CorrelationFunction::new("one", |_| 1.0);
        assert_eq!(one.restrict(0, 0).eval(&[], &[]).unwrap(), 1.0);

        let count = CorrelationFunction::new("count", |c| c.n_plus() as f64);
        let r = count.restrict(2, 0);
        assert_eq!(r.eval(&pts(&[0.1, 0.9]), &[]).unwrap(), 2.0);
        assert!(matches!(r.eval(&pts(&[0.4, 0.4]), &[]), Err(Error::DuplicatePoint)));
    }

    #[test]
    fn restrict_single_points_swap() {
        let k = CorrelationFunction::new("k", |c| {
            let x = c.plus().points()[0].first();
            let y = c.minus().points()[0].first();
            (3.0 * x).sin() + y * y - x * y
        });
        let r = k.restrict(1, 1);
        let a = r.eval(&pts(&[0.3]), &pts(&[0.8])).unwrap();
        let b = r.eval(&pts(&[0.3]), &pts(&[0.8])).unwrap();
        assert_eq!(a, b);
        assert!(matches!(r.eval(&pts(&[0.3]), &pts(&[0.3])), Err(Error::DisjointnessViolation)));
    }

    #[test]
    fn support_certificate_zeroes_outside() {
        let region = Region::interval(0.0, 1.0).unwrap();
        let g = ConfigFunction::constant(2.0).with_support(Support {
            max_plus: 1,
            max_minus: 0,
            region,
        });
        assert_eq!(g.eval(&TwoConfig::from_1d(&[0.5], &[]).unwrap()), 2.0);
        assert_eq!(g.eval(&TwoConfig::from_1d(&[1.5], &[]).unwrap()), 0.0);
        assert_eq!(g.eval(&TwoConfig::from_1d(&[0.2, 0.5], &[]).unwrap()), 0.0);
        assert_eq!(g.eval(&TwoConfig::from_1d(&[], &[0.5]).unwrap()), 0.0);
    }

    #[test]
    fn mask_selection_splits_components() {
        let c = TwoConfig::from_1d(&[0.1, 0.2], &[0.3]).unwrap();
        let s = c.select(0b101);
        assert_eq!(s, TwoConfig::from_1d(&[0.1], &[0.3]).unwrap());
        assert_eq!(c.select(c.full_mask()), c);
    }

    #[test]
    fn periodic_distance_wraps() {
        let r = Region::interval(0.0, 1.0).unwrap();
        let d = r.periodic_dist(&Point::x(0.05), &Point::x(0.95));
        assert!((d - 0.1).abs() < 1e-12);
    }
}
