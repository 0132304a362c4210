//! Jump rates of the four generator types and their kernels.
//!
//! Rate callables follow one convention throughout: the moving/affected
//! point(s) come first, then the configuration *without* the affected
//! particle. So `d⁺(x, γ⁺∖x, γ⁻)`, `b⁺(x, γ⁺, γ⁻)`, `c₁⁺(x, x', γ⁺∖x, γ⁻)`,
//! `c₂⁺(x, y, γ⁺∖x, γ⁻)` (plus at `x` becomes minus at `y`),
//! `c₂⁻(x, y, γ⁺, γ⁻∖y)` (minus at `y` becomes plus at `x`),
//! `a⁺(x, γ⁺∖x, γ⁻)` and `a⁻(y, γ⁺, γ⁻∖y)`.
//!
//! A kernel is the K⁻¹-image of a rate in its configuration argument:
//! `D⁺(x; fixed; var) = (K⁻¹ d⁺(x, · ∪ fixed⁺, · ∪ fixed⁻))(var)`, and
//! likewise for every other role.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{Point, Region, TwoConfig};
use crate::error::{Error, Result};
use crate::ktransform::k_inverse;
use crate::quadrature::GaussLegendre;
use crate::sum::Neumaier;

pub type PointRate = Arc<dyn Fn(&Point, &TwoConfig) -> f64 + Send + Sync>;
pub type PairRate = Arc<dyn Fn(&Point, &Point, &TwoConfig) -> f64 + Send + Sync>;
/// Upper bound on a spatially integrated rate. Birth bounds receive `None`
/// and bound `b(·, γ)` uniformly; jump bounds receive the source point and
/// bound `c(x, ·, rest)` uniformly in the destination.
pub type BoundFn = Arc<dyn Fn(Option<&Point>, &TwoConfig) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    BirthDeath,
    HopKeep,
    HopFlip,
    Flip,
}

#[derive(Clone)]
pub enum Rates {
    BirthDeath {
        d_plus: PointRate,
        d_minus: PointRate,
        b_plus: PointRate,
        b_minus: PointRate,
    },
    HopKeep {
        c1_plus: PairRate,
        c1_minus: PairRate,
    },
    HopFlip {
        c2_plus: PairRate,
        c2_minus: PairRate,
    },
    Flip {
        a_plus: PointRate,
        a_minus: PointRate,
    },
}

impl Rates {
    pub fn kind(&self) -> Kind {
        match self {
            Rates::BirthDeath { .. } => Kind::BirthDeath,
            Rates::HopKeep { .. } => Kind::HopKeep,
            Rates::HopFlip { .. } => Kind::HopFlip,
            Rates::Flip { .. } => Kind::Flip,
        }
    }
}

/// Kernel roles. `C1*`, `C2*` take a second point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelRole {
    DPlus,
    DMinus,
    BPlus,
    BMinus,
    C1Plus,
    C1Minus,
    C2Plus,
    C2Minus,
    APlus,
    AMinus,
}

impl KernelRole {
    pub fn is_pair(self) -> bool {
        matches!(self, Self::C1Plus | Self::C1Minus | Self::C2Plus | Self::C2Minus)
    }

    pub fn kind(self) -> Kind {
        match self {
            Self::DPlus | Self::DMinus | Self::BPlus | Self::BMinus => Kind::BirthDeath,
            Self::C1Plus | Self::C1Minus => Kind::HopKeep,
            Self::C2Plus | Self::C2Minus => Kind::HopFlip,
            Self::APlus | Self::AMinus => Kind::Flip,
        }
    }

    pub fn roles(kind: Kind) -> &'static [KernelRole] {
        match kind {
            Kind::BirthDeath => &[Self::DPlus, Self::DMinus, Self::BPlus, Self::BMinus],
            Kind::HopKeep => &[Self::C1Plus, Self::C1Minus],
            Kind::HopFlip => &[Self::C2Plus, Self::C2Minus],
            Kind::Flip => &[Self::APlus, Self::AMinus],
        }
    }
}

impl fmt::Display for KernelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::DPlus => "D+",
            Self::DMinus => "D-",
            Self::BPlus => "B+",
            Self::BMinus => "B-",
            Self::C1Plus => "C1+",
            Self::C1Minus => "C1-",
            Self::C2Plus => "C2+",
            Self::C2Minus => "C2-",
            Self::APlus => "A+",
            Self::AMinus => "A-",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    NumericKinv,
    ClosedForm,
}

/// A family of kernels for one rate set.
pub trait KernelFamily: Send + Sync {
    fn label(&self) -> String;
    fn provenance(&self) -> Provenance;
    /// Kernel value; `y` is required exactly for pair roles.
    fn kernel(&self, role: KernelRole, x: &Point, y: Option<&Point>, fixed: &TwoConfig, var: &TwoConfig) -> Result<f64>;
    /// Componentwise bound on `var` beyond which the kernel vanishes.
    fn degree(&self, _role: KernelRole) -> Option<(usize, usize)> {
        None
    }
}

/// Distance used by interaction profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Metric {
    Euclidean,
    Torus { region: Region },
}

impl Metric {
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        match self {
            Metric::Euclidean => x.dist(y),
            Metric::Torus { region } => region.periodic_dist(x, y),
        }
    }
}

/// Radial interaction profile `a(|x - y|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Profile {
    Zero,
    /// `height · 1{r ≤ radius}`
    Indicator { height: f64, radius: f64 },
    /// `height · exp(-r²/(2 width²))`
    Gaussian { height: f64, width: f64 },
    /// Piecewise-linear in `r` through `(r[i], v[i])`, zero beyond the last node.
    Tabulated { r: Vec<f64>, v: Vec<f64> },
}

impl Profile {
    pub fn indicator(height: f64, radius: f64) -> Self {
        Self::Indicator { height, radius }
    }

    pub fn gaussian(height: f64, width: f64) -> Self {
        Self::Gaussian { height, width }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidRateParams(s.to_string()));
        match self {
            Profile::Zero => Ok(()),
            Profile::Indicator { height, radius } => {
                if !height.is_finite() || !(*radius >= 0.0 && radius.is_finite()) {
                    return bad("indicator needs finite height and radius >= 0");
                }
                Ok(())
            }
            Profile::Gaussian { height, width } => {
                if !height.is_finite() || !(*width > 0.0 && width.is_finite()) {
                    return bad("gaussian needs finite height and width > 0");
                }
                Ok(())
            }
            Profile::Tabulated { r, v } => {
                if r.is_empty() || r.len() != v.len() {
                    return bad("tabulated profile needs equal-length non-empty r and v");
                }
                if r[0] != 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("tabulated r must start at 0 and increase strictly");
                }
                if v.iter().chain(r).any(|x| !x.is_finite()) {
                    return bad("tabulated values must be finite");
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Indicator { height, radius } => {
                if r <= *radius {
                    *height
                } else {
                    0.0
                }
            }
            Profile::Gaussian { height, width } => height * (-0.5 * (r / width).powi(2)).exp(),
            Profile::Tabulated { r: rs, v } => {
                if r > *rs.last().unwrap() {
                    return 0.0;
                }
                let i = rs.partition_point(|&t| t <= r).saturating_sub(1);
                if i + 1 >= rs.len() {
                    return v[i];
                }
                let t = (r - rs[i]) / (rs[i + 1] - rs[i]);
                v[i] + t * (v[i + 1] - v[i])
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Indicator { height, .. } | Profile::Gaussian { height, .. } => *height == 0.0,
            Profile::Tabulated { v, .. } => v.iter().all(|x| *x == 0.0),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Indicator { height, .. } | Profile::Gaussian { height, .. } => height.max(0.0),
            Profile::Tabulated { v, .. } => v.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Indicator { height, .. } | Profile::Gaussian { height, .. } => height.min(0.0),
            Profile::Tabulated { v, .. } => v.iter().copied().fold(0.0, f64::min),
        }
    }

    /// Radius outside which the profile vanishes (numerically, for Gaussians).
    pub fn range(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Indicator { radius, .. } => *radius,
            Profile::Gaussian { width, .. } => 12.0 * width,
            Profile::Tabulated { r, .. } => *r.last().unwrap(),
        }
    }

    /// `∫_{R^d} g(a(|x|)) dx` for `g(0) = 0`, by radial Gauss–Legendre
    /// quadrature on the pieces where the profile is smooth.
    pub fn radial_integral(&self, dim: usize, g: impl Fn(f64) -> f64) -> f64 {
        let shell = |r: f64| match dim {
            1 => 2.0,
            2 => 2.0 * PI * r,
            _ => 4.0 * PI * r * r,
        };
        let breaks: Vec<f64> = match self {
            Profile::Zero => return 0.0,
            Profile::Indicator { radius, .. } => vec![0.0, *radius],
            Profile::Gaussian { width, .. } => (0..=12).map(|i| i as f64 * width).collect(),
            Profile::Tabulated { r, .. } => r.clone(),
        };
        let rule = GaussLegendre::standard();
        let mut acc = Neumaier::new();
        for w in breaks.windows(2) {
            acc.add(rule.integrate(w[0], w[1], |r| shell(r) * g(self.eval(r))));
        }
        acc.value()
    }

    /// `∫_{R^d} |a(|x|)| dx`.
    pub fn l1(&self, dim: usize) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Indicator { height, radius } => {
                let v = match dim {
                    1 => 2.0 * radius,
                    2 => PI * radius * radius,
                    _ => 4.0 / 3.0 * PI * radius.powi(3),
                };
                height.abs() * v
            }
            Profile::Gaussian { height, width } => height.abs() * (2.0 * PI * width * width).powf(dim as f64 / 2.0),
            Profile::Tabulated { .. } => self.radial_integral(dim, f64::abs),
        }
    }
}

/// Upper bounds used by the simulator to thin spatial proposals.
#[derive(Clone)]
pub struct ThinningBounds {
    pub plus: BoundFn,
    pub minus: BoundFn,
}

/// A rate set together with optional closed-form kernels and thinning bounds.
#[derive(Clone)]
pub struct RateSet {
    pub label: String,
    pub rates: Rates,
    pub closed_form: Option<Arc<dyn KernelFamily>>,
    pub bounds: Option<ThinningBounds>,
}

impl fmt::Debug for RateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateSet")
            .field("label", &self.label)
            .field("kind", &self.kind())
            .field("closed_form", &self.closed_form.is_some())
            .finish()
    }
}

fn point_rate(f: impl Fn(&Point, &TwoConfig) -> f64 + Send + Sync + 'static) -> PointRate {
    Arc::new(f)
}

fn pair_rate(f: impl Fn(&Point, &Point, &TwoConfig) -> f64 + Send + Sync + 'static) -> PairRate {
    Arc::new(f)
}

fn bound(f: impl Fn(Option<&Point>, &TwoConfig) -> f64 + Send + Sync + 'static) -> BoundFn {
    Arc::new(f)
}

impl RateSet {
    pub fn new(label: impl Into<String>, rates: Rates) -> Self {
        Self {
            label: label.into(),
            rates,
            closed_form: None,
            bounds: None,
        }
    }

    pub fn with_closed_form(mut self, k: Arc<dyn KernelFamily>) -> Self {
        self.closed_form = Some(k);
        self
    }

    pub fn with_bounds(mut self, b: ThinningBounds) -> Self {
        self.bounds = Some(b);
        self
    }

    pub fn kind(&self) -> Kind {
        self.rates.kind()
    }

    /// Closed-form kernels when attached, numeric K⁻¹ otherwise.
    pub fn kernels(&self) -> Arc<dyn KernelFamily> {
        match &self.closed_form {
            Some(k) => k.clone(),
            None => Arc::new(NumericKernels::new(self.clone())),
        }
    }

    pub fn numeric_kernels(&self) -> Arc<dyn KernelFamily> {
        Arc::new(NumericKernels::new(self.clone()))
    }

    /// Evaluates the rate behind `role` at `(x[, y], cfg)`.
    pub fn rate(&self, role: KernelRole, x: &Point, y: Option<&Point>, cfg: &TwoConfig) -> Result<f64> {
        let missing = || Error::MissingKernel(role.to_string());
        let need_y = || y.ok_or_else(|| Error::InvalidRateParams(format!("{role} needs a second point")));
        Ok(match (&self.rates, role) {
            (Rates::BirthDeath { d_plus, .. }, KernelRole::DPlus) => d_plus(x, cfg),
            (Rates::BirthDeath { d_minus, .. }, KernelRole::DMinus) => d_minus(x, cfg),
            (Rates::BirthDeath { b_plus, .. }, KernelRole::BPlus) => b_plus(x, cfg),
            (Rates::BirthDeath { b_minus, .. }, KernelRole::BMinus) => b_minus(x, cfg),
            (Rates::HopKeep { c1_plus, .. }, KernelRole::C1Plus) => c1_plus(x, need_y()?, cfg),
            (Rates::HopKeep { c1_minus, .. }, KernelRole::C1Minus) => c1_minus(x, need_y()?, cfg),
            (Rates::HopFlip { c2_plus, .. }, KernelRole::C2Plus) => c2_plus(x, need_y()?, cfg),
            (Rates::HopFlip { c2_minus, .. }, KernelRole::C2Minus) => c2_minus(x, need_y()?, cfg),
            (Rates::Flip { a_plus, .. }, KernelRole::APlus) => a_plus(x, cfg),
            (Rates::Flip { a_minus, .. }, KernelRole::AMinus) => a_minus(x, cfg),
            _ => return Err(missing()),
        })
    }

    /// The same rates with the other half of the birth–death pair zeroed.
    pub fn pure_death(&self) -> Result<Self> {
        let Rates::BirthDeath { d_plus, d_minus, .. } = &self.rates else {
            return Err(Error::InvalidRateParams("pure_death needs birth-death rates".into()));
        };
        let zero = point_rate(|_, _| 0.0);
        Ok(RateSet::new(
            format!("{} (death only)", self.label),
            Rates::BirthDeath {
                d_plus: d_plus.clone(),
                d_minus: d_minus.clone(),
                b_plus: zero.clone(),
                b_minus: zero,
            },
        ))
    }

    // ---- built-in families ----

    /// `d± ≡ m±`, `b± ≡ z±`.
    pub fn constant(m_plus: f64, m_minus: f64, z_plus: f64, z_minus: f64) -> Result<Self> {
        for (n, v) in [("m+", m_plus), ("m-", m_minus), ("z+", z_plus), ("z-", z_minus)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidRateParams(format!("{n} = {v} must be finite and >= 0")));
            }
        }
        let c = |v: f64| point_rate(move |_, _| v);
        Ok(RateSet::new(
            format!("constant(m+={m_plus}, m-={m_minus}, z+={z_plus}, z-={z_minus})"),
            Rates::BirthDeath {
                d_plus: c(m_plus),
                d_minus: c(m_minus),
                b_plus: c(z_plus),
                b_minus: c(z_minus),
            },
        )
        .with_closed_form(Arc::new(ConstantKernels {
            values: [m_plus, m_minus, z_plus, z_minus],
        }))
        .with_bounds(ThinningBounds {
            plus: bound(move |_, _| z_plus),
            minus: bound(move |_, _| z_minus),
        }))
    }

    pub fn predator_prey(p: PpParams) -> Result<Self> {
        p.validate()?;
        let p = Arc::new(p);
        let (q1, q2, q3) = (p.clone(), p.clone(), p.clone());
        let d_plus = point_rate(move |x, c| q1.m_plus + c.minus().iter().map(|y| q1.a(&q1.a1, x, y)).sum::<f64>());
        let m_minus = p.m_minus;
        let d_minus = point_rate(move |_, _| m_minus);
        let b_plus = point_rate(move |x, c| c.plus().iter().map(|x2| q2.a(&q2.a2, x, x2)).sum());
        let b_minus = point_rate(move |y, c| {
            c.minus()
                .iter()
                .map(|y2| q3.a(&q3.a3, y, y2) * (q3.kappa + c.plus().iter().map(|x| q3.a(&q3.a4, x, y2)).sum::<f64>()))
                .sum()
        });
        let (s2, s3, s4) = (p.a2.max(), p.a3.max(), p.a4.max());
        let kappa = p.kappa;
        Ok(RateSet::new(
            "predator-prey",
            Rates::BirthDeath {
                d_plus,
                d_minus,
                b_plus,
                b_minus,
            },
        )
        .with_closed_form(Arc::new(PpKernels { p: p.clone() }))
        .with_bounds(ThinningBounds {
            plus: bound(move |_, c| c.n_plus() as f64 * s2),
            minus: bound(move |_, c| c.n_minus() as f64 * s3 * (kappa + c.n_plus() as f64 * s4)),
        }))
    }

    pub fn ising(p: IsingParams) -> Result<Self> {
        p.validate()?;
        let p = Arc::new(p);
        let (q1, q2) = (p.clone(), p.clone());
        let (mp, mm) = (p.m_plus, p.m_minus);
        let b_plus = point_rate(move |x, c| (-c.minus().iter().map(|y| q1.phi(x, y)).sum::<f64>()).exp());
        let b_minus = point_rate(move |y, c| (-c.plus().iter().map(|x| q2.phi(y, x)).sum::<f64>()).exp());
        let ups = p.upsilon();
        Ok(RateSet::new(
            "ising",
            Rates::BirthDeath {
                d_plus: point_rate(move |_, _| mp),
                d_minus: point_rate(move |_, _| mm),
                b_plus,
                b_minus,
            },
        )
        .with_closed_form(Arc::new(IsingKernels { p }))
        .with_bounds(ThinningBounds {
            plus: bound(move |_, c| (ups * c.n_minus() as f64).exp()),
            minus: bound(move |_, c| (ups * c.n_plus() as f64).exp()),
        }))
    }

    /// `c₁⁺(x, x', γ) = g(x - x')·(base⁺ + Σ_{y∈γ⁻} a(x' - y))`,
    /// `c₁⁻(y, y', γ) = g(y - y')·base⁻·exp(-Σ_{x∈γ⁺} φ(y' - x))` with `φ ≥ 0`.
    pub fn hop_keep(p: HopParams) -> Result<Self> {
        p.validate()?;
        let p = Arc::new(p);
        let (q1, q2, q3, q4) = (p.clone(), p.clone(), p.clone(), p.clone());
        let c1_plus = pair_rate(move |x, x2, c| {
            q1.jump(x, x2) * (q1.base_plus + c.minus().iter().map(|y| q1.dist_eval(&q1.inter, x2, y)).sum::<f64>())
        });
        let c1_minus = pair_rate(move |y, y2, c| {
            q2.jump(y, y2) * q2.base_minus * (-c.plus().iter().map(|x| q2.dist_eval(&q2.inter, y2, x)).sum::<f64>()).exp()
        });
        let (gmax, imax) = (p.jump.max(), p.inter.max());
        Ok(RateSet::new("hop-keep", Rates::HopKeep { c1_plus, c1_minus }).with_bounds(ThinningBounds {
            plus: bound(move |_, c| gmax * (q3.base_plus + c.n_minus() as f64 * imax)),
            minus: bound(move |_, _| gmax * q4.base_minus),
        }))
    }

    /// `c₂⁺(x, y, γ) = g(x - y)·(base⁺ + Σ_{x'∈γ⁺} a(x - x'))`,
    /// `c₂⁻(x, y, γ) = g(x - y)·(base⁻ + Σ_{y'∈γ⁻} a(y - y'))`.
    pub fn hop_flip(p: HopParams) -> Result<Self> {
        p.validate()?;
        let p = Arc::new(p);
        let (q1, q2, q3, q4) = (p.clone(), p.clone(), p.clone(), p.clone());
        let c2_plus = pair_rate(move |x, y, c| {
            q1.jump(x, y) * (q1.base_plus + c.plus().iter().map(|x2| q1.dist_eval(&q1.inter, x, x2)).sum::<f64>())
        });
        let c2_minus = pair_rate(move |x, y, c| {
            q2.jump(x, y) * (q2.base_minus + c.minus().iter().map(|y2| q2.dist_eval(&q2.inter, y, y2)).sum::<f64>())
        });
        let (gmax, imax) = (p.jump.max(), p.inter.max());
        Ok(RateSet::new("hop-flip", Rates::HopFlip { c2_plus, c2_minus }).with_bounds(ThinningBounds {
            plus: bound(move |_, c| gmax * (q3.base_plus + c.n_plus() as f64 * imax)),
            minus: bound(move |_, c| gmax * (q4.base_minus + c.n_minus() as f64 * imax)),
        }))
    }

    /// `a⁺(x, γ) = base⁺ + Σ_{y∈γ⁻} a(x - y)`,
    /// `a⁻(y, γ) = base⁻·exp(-Σ_{x∈γ⁺} φ(y - x))` with `φ = a`.
    pub fn flip(p: FlipParams) -> Result<Self> {
        p.validate()?;
        let p = Arc::new(p);
        let (q1, q2) = (p.clone(), p.clone());
        let a_plus = point_rate(move |x, c| q1.base_plus + c.minus().iter().map(|y| q1.a(x, y)).sum::<f64>());
        let a_minus = point_rate(move |y, c| q2.base_minus * (-c.plus().iter().map(|x| q2.a(y, x)).sum::<f64>()).exp());
        Ok(RateSet::new("flip", Rates::Flip { a_plus, a_minus }))
    }

    /// Flip rates `a± ≡ a±` constant.
    pub fn constant_flip(a_plus: f64, a_minus: f64) -> Result<Self> {
        Self::flip(FlipParams {
            base_plus: a_plus,
            base_minus: a_minus,
            inter: Profile::Zero,
            metric: Metric::Euclidean,
        })
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRateParams(format!("{name} = {v} must be finite and >= 0")))
    }
}

fn check_profile_nonneg(name: &str, p: &Profile) -> Result<()> {
    p.validate()?;
    if p.min() < 0.0 {
        return Err(Error::InvalidRateParams(format!("{name} must be nonnegative")));
    }
    Ok(())
}

/// Predator–prey rates: `d⁺ = m⁺ + Σ_{γ⁻} a₁`, `d⁻ = m⁻`,
/// `b⁺ = Σ_{γ⁺} a₂`, `b⁻(y) = Σ_{y'∈γ⁻} a₃(y - y')(κ + Σ_{x∈γ⁺} a₄(x - y'))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpParams {
    pub m_plus: f64,
    pub m_minus: f64,
    pub kappa: f64,
    pub a1: Profile,
    pub a2: Profile,
    pub a3: Profile,
    pub a4: Profile,
    #[serde(default = "euclid")]
    pub metric: Metric,
}

fn euclid() -> Metric {
    Metric::Euclidean
}

impl PpParams {
    pub fn validate(&self) -> Result<()> {
        check_nonneg("m+", self.m_plus)?;
        check_nonneg("m-", self.m_minus)?;
        check_nonneg("kappa", self.kappa)?;
        for (n, a) in [("a1", &self.a1), ("a2", &self.a2), ("a3", &self.a3), ("a4", &self.a4)] {
            check_profile_nonneg(n, a)?;
        }
        Ok(())
    }

    fn a(&self, prof: &Profile, x: &Point, y: &Point) -> f64 {
        prof.eval(self.metric.dist(x, y))
    }
}

/// Continuous Ising birth rates `b±(x, γ) = exp(-Σ_{y∈γ∓} φ(x - y))`,
/// constant deaths `m±`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub m_plus: f64,
    pub m_minus: f64,
    pub phi: Profile,
    #[serde(default = "euclid")]
    pub metric: Metric,
}

impl IsingParams {
    pub fn validate(&self) -> Result<()> {
        check_nonneg("m+", self.m_plus)?;
        check_nonneg("m-", self.m_minus)?;
        self.phi.validate()
    }

    fn phi(&self, x: &Point, y: &Point) -> f64 {
        self.phi.eval(self.metric.dist(x, y))
    }

    /// `υ ≥ 0` with `φ ≥ -υ`.
    pub fn upsilon(&self) -> f64 {
        (-self.phi.min()).max(0.0)
    }

    /// `β = ∫ |e^{-φ} - 1| dx`.
    pub fn beta(&self, dim: usize) -> f64 {
        self.phi.radial_integral(dim, |v| ((-v).exp() - 1.0).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopParams {
    pub base_plus: f64,
    pub base_minus: f64,
    /// Jump kernel `g(x - x')`.
    pub jump: Profile,
    /// Interaction profile.
    pub inter: Profile,
    #[serde(default = "euclid")]
    pub metric: Metric,
}

impl HopParams {
    pub fn validate(&self) -> Result<()> {
        check_nonneg("base+", self.base_plus)?;
        check_nonneg("base-", self.base_minus)?;
        check_profile_nonneg("jump", &self.jump)?;
        check_profile_nonneg("inter", &self.inter)
    }

    fn jump(&self, x: &Point, y: &Point) -> f64 {
        self.jump.eval(self.metric.dist(x, y))
    }

    fn dist_eval(&self, p: &Profile, x: &Point, y: &Point) -> f64 {
        p.eval(self.metric.dist(x, y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipParams {
    pub base_plus: f64,
    pub base_minus: f64,
    pub inter: Profile,
    #[serde(default = "euclid")]
    pub metric: Metric,
}

impl FlipParams {
    pub fn validate(&self) -> Result<()> {
        check_nonneg("base+", self.base_plus)?;
        check_nonneg("base-", self.base_minus)?;
        check_profile_nonneg("inter", &self.inter)
    }

    fn a(&self, x: &Point, y: &Point) -> f64 {
        self.inter.eval(self.metric.dist(x, y))
    }
}

/// `(K⁻¹ rate(x[, y], · ∪ fixed))(var)` by the signed subset sum.
pub fn derive_kernel_numeric(
    rates: &RateSet,
    role: KernelRole,
    x: &Point,
    y: Option<&Point>,
    fixed: &TwoConfig,
    var: &TwoConfig,
) -> Result<f64> {
    if role.kind() != rates.kind() {
        return Err(Error::MissingKernel(role.to_string()));
    }
    var.check_cap()?;
    if fixed.union(var).is_none() {
        return Err(Error::DisjointnessViolation);
    }
    let mut err = None;
    let v = k_inverse(
        |nu| {
            let cfg = fixed.union(nu).expect("subsets of a disjoint union");
            match rates.rate(role, x, y, &cfg) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        },
        var,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Kernels computed by exhaustive K⁻¹ of the rates.
pub struct NumericKernels {
    rates: RateSet,
}

impl NumericKernels {
    pub fn new(rates: RateSet) -> Self {
        Self { rates }
    }
}

impl KernelFamily for NumericKernels {
    fn label(&self) -> String {
        format!("{} [numeric K^-1]", self.rates.label)
    }

    fn provenance(&self) -> Provenance {
        Provenance::NumericKinv
    }

    fn kernel(&self, role: KernelRole, x: &Point, y: Option<&Point>, fixed: &TwoConfig, var: &TwoConfig) -> Result<f64> {
        derive_kernel_numeric(&self.rates, role, x, y, fixed, var)
    }
}

/// Kernels of constant birth–death rates: `c·0^{|var|}`.
pub struct ConstantKernels {
    values: [f64; 4],
}

impl KernelFamily for ConstantKernels {
    fn label(&self) -> String {
        "constant [closed form]".into()
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }

    fn kernel(&self, role: KernelRole, _x: &Point, _y: Option<&Point>, _fixed: &TwoConfig, var: &TwoConfig) -> Result<f64> {
        let i = match role {
            KernelRole::DPlus => 0,
            KernelRole::DMinus => 1,
            KernelRole::BPlus => 2,
            KernelRole::BMinus => 3,
            _ => return Err(Error::MissingKernel(role.to_string())),
        };
        Ok(if var.is_empty() { self.values[i] } else { 0.0 })
    }

    fn degree(&self, _role: KernelRole) -> Option<(usize, usize)> {
        Some((0, 0))
    }
}

/// Closed-form predator–prey kernels.
pub struct PpKernels {
    p: Arc<PpParams>,
}

impl KernelFamily for PpKernels {
    fn label(&self) -> String {
        "predator-prey [closed form]".into()
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }

    fn kernel(&self, role: KernelRole, x: &Point, _y: Option<&Point>, fixed: &TwoConfig, var: &TwoConfig) -> Result<f64> {
        let p = &self.p;
        let (vp, vm) = (var.n_plus(), var.n_minus());
        Ok(match role {
            KernelRole::DPlus => match (vp, vm) {
                (0, 0) => p.m_plus + fixed.minus().iter().map(|y| p.a(&p.a1, x, y)).sum::<f64>(),
                (0, 1) => p.a(&p.a1, x, &var.minus().points()[0]),
                _ => 0.0,
            },
            KernelRole::DMinus => {
                if var.is_empty() {
                    p.m_minus
                } else {
                    0.0
                }
            }
            KernelRole::BPlus => match (vp, vm) {
                (0, 0) => fixed.plus().iter().map(|x2| p.a(&p.a2, x, x2)).sum(),
                (1, 0) => p.a(&p.a2, x, &var.plus().points()[0]),
                _ => 0.0,
            },
            KernelRole::BMinus => {
                let y = x;
                let a3 = |y2: &Point| p.a(&p.a3, y, y2);
                let a4 = |x: &Point, y2: &Point| p.a(&p.a4, x, y2);
                match (vp, vm) {
                    (0, 0) => fixed
                        .minus()
                        .iter()
                        .map(|y2| a3(y2) * (p.kappa + fixed.plus().iter().map(|x| a4(x, y2)).sum::<f64>()))
                        .sum(),
                    (0, 1) => {
                        let y2 = &var.minus().points()[0];
                        a3(y2) * (p.kappa + fixed.plus().iter().map(|x| a4(x, y2)).sum::<f64>())
                    }
                    (1, 0) => {
                        let xv = &var.plus().points()[0];
                        fixed.minus().iter().map(|y2| a3(y2) * a4(xv, y2)).sum()
                    }
                    (1, 1) => a3(&var.minus().points()[0]) * a4(&var.plus().points()[0], &var.minus().points()[0]),
                    _ => 0.0,
                }
            }
            _ => return Err(Error::MissingKernel(role.to_string())),
        })
    }

    fn degree(&self, role: KernelRole) -> Option<(usize, usize)> {
        match role {
            KernelRole::DPlus => Some((0, 1)),
            KernelRole::DMinus => Some((0, 0)),
            KernelRole::BPlus => Some((1, 0)),
            KernelRole::BMinus => Some((1, 1)),
            _ => None,
        }
    }
}

/// Closed-form continuous-Ising kernels.
pub struct IsingKernels {
    p: Arc<IsingParams>,
}

impl KernelFamily for IsingKernels {
    fn label(&self) -> String {
        "ising [closed form]".into()
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }

    fn kernel(&self, role: KernelRole, x: &Point, _y: Option<&Point>, fixed: &TwoConfig, var: &TwoConfig) -> Result<f64> {
        let p = &self.p;
        // B⁺ = 0^{|var⁺|} e^{-Σ_{fixed⁻} φ} Π_{var⁻} (e^{-φ} - 1), B⁻ symmetric
        let b = |same: &crate::config::FiniteConfig, other_fixed: &crate::config::FiniteConfig, other_var: &crate::config::FiniteConfig| {
            if !same.is_empty() {
                return 0.0;
            }
            let e = (-other_fixed.iter().map(|y| p.phi(x, y)).sum::<f64>()).exp();
            e * other_var.iter().map(|y| (-p.phi(x, y)).exp() - 1.0).product::<f64>()
        };
        Ok(match role {
            KernelRole::DPlus => {
                if var.is_empty() {
                    p.m_plus
                } else {
                    0.0
                }
            }
            KernelRole::DMinus => {
                if var.is_empty() {
                    p.m_minus
                } else {
                    0.0
                }
            }
            KernelRole::BPlus => b(var.plus(), fixed.minus(), var.minus()),
            KernelRole::BMinus => b(var.minus(), fixed.plus(), var.plus()),
            _ => return Err(Error::MissingKernel(role.to_string())),
        })
    }

    fn degree(&self, role: KernelRole) -> Option<(usize, usize)> {
        match role {
            KernelRole::DPlus | KernelRole::DMinus => Some((0, 0)),
            _ => None,
        }
    }
}

/// Rate families selectable by name or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum RateSpec {
    Constant {
        m_plus: f64,
        m_minus: f64,
        #[serde(default)]
        z_plus: f64,
        #[serde(default)]
        z_minus: f64,
    },
    Pp(PpParams),
    Ising(IsingParams),
    Hop(HopParams),
    Hopflip(HopParams),
    Flip(FlipParams),
}

impl RateSpec {
    pub fn build(&self) -> Result<RateSet> {
        match self {
            RateSpec::Constant {
                m_plus,
                m_minus,
                z_plus,
                z_minus,
            } => RateSet::constant(*m_plus, *m_minus, *z_plus, *z_minus),
            RateSpec::Pp(p) => RateSet::predator_prey(p.clone()),
            RateSpec::Ising(p) => RateSet::ising(p.clone()),
            RateSpec::Hop(p) => RateSet::hop_keep(p.clone()),
            RateSpec::Hopflip(p) => RateSet::hop_flip(p.clone()),
            RateSpec::Flip(p) => RateSet::flip(p.clone()),
        }
    }

    /// The same family with every distance measured by `metric`.
    pub fn with_metric(mut self, metric: Metric) -> Self {
        match &mut self {
            RateSpec::Constant { .. } => {}
            RateSpec::Pp(p) => p.metric = metric,
            RateSpec::Ising(p) => p.metric = metric,
            RateSpec::Hop(p) | RateSpec::Hopflip(p) => p.metric = metric,
            RateSpec::Flip(p) => p.metric = metric,
        }
        self
    }

    /// Built-in parameter sets by name.
    pub fn named(name: &str) -> Result<Self> {
        Ok(match name {
            "constant" => RateSpec::Constant {
                m_plus: 1.0,
                m_minus: 0.5,
                z_plus: 0.0,
                z_minus: 0.0,
            },
            "pp" => RateSpec::Pp(standard_pp()),
            "ising" => RateSpec::Ising(IsingParams {
                m_plus: 1.0,
                m_minus: 1.0,
                phi: Profile::gaussian(1.0, 0.2),
                metric: Metric::Euclidean,
            }),
            "hop" => RateSpec::Hop(standard_hop()),
            "hopflip" => RateSpec::Hopflip(standard_hop()),
            "flip" => RateSpec::Flip(standard_flip()),
            _ => return Err(Error::Config(format!("unknown rate family '{name}'"))),
        })
    }
}

/// Smooth predator–prey parameters used by the standard suite.
pub fn standard_pp() -> PpParams {
    PpParams {
        m_plus: 1.0,
        m_minus: 0.5,
        kappa: 0.8,
        a1: Profile::gaussian(0.8, 0.2),
        a2: Profile::gaussian(0.6, 0.25),
        a3: Profile::gaussian(0.5, 0.3),
        a4: Profile::gaussian(0.9, 0.2),
        metric: Metric::Euclidean,
    }
}

pub fn standard_hop() -> HopParams {
    HopParams {
        base_plus: 0.7,
        base_minus: 0.4,
        jump: Profile::gaussian(1.0, 0.25),
        inter: Profile::gaussian(0.6, 0.2),
        metric: Metric::Euclidean,
    }
}

pub fn standard_flip() -> FlipParams {
    FlipParams {
        base_plus: 1.0,
        base_minus: 0.5,
        inter: Profile::gaussian(0.7, 0.2),
        metric: Metric::Euclidean,
    }
}

/// The five generator families on smooth rates: pure death, pure birth,
/// hopping with and without mark change, and flipping.
pub fn standard_suite() -> Vec<(&'static str, RateSet)> {
    let death = RateSet::predator_prey(PpParams {
        a2: Profile::Zero,
        a3: Profile::Zero,
        a4: Profile::Zero,
        kappa: 0.0,
        ..standard_pp()
    })
    .expect("valid");
    let birth = RateSet::predator_prey(PpParams {
        m_plus: 0.0,
        m_minus: 0.0,
        a1: Profile::Zero,
        ..standard_pp()
    })
    .expect("valid");
    vec![
        ("death", RateSet { label: "death".into(), ..death }),
        ("birth", RateSet { label: "birth".into(), ..birth }),
        ("hop_keep", RateSet::hop_keep(standard_hop()).expect("valid")),
        ("hop_flip", RateSet::hop_flip(standard_hop()).expect("valid")),
        ("flip", RateSet::flip(standard_flip()).expect("valid")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(p: &[f64], m: &[f64]) -> TwoConfig {
        TwoConfig::from_1d(p, m).unwrap()
    }

    fn pp_indicator() -> RateSet {
        RateSet::predator_prey(PpParams {
            m_plus: 1.0,
            m_minus: 0.3,
            kappa: 0.5,
            a1: Profile::indicator(0.5, 1.0),
            a2: Profile::indicator(0.2, 1.0),
            a3: Profile::indicator(0.1, 1.0),
            a4: Profile::indicator(0.4, 1.0),
            metric: Metric::Euclidean,
        })
        .unwrap()
    }

    #[test]
    fn constant_rate_kernel_is_delta_at_empty() {
        let r = RateSet::constant(2.5, 1.0, 0.0, 0.0).unwrap();
        let x = Point::x(0.1);
        for (var, want) in [(c(&[], &[]), 2.5), (c(&[0.3], &[]), 0.0), (c(&[], &[0.2, 0.4]), 0.0)] {
            let v = derive_kernel_numeric(&r, KernelRole::DPlus, &x, None, &c(&[0.7], &[0.9]), &var).unwrap();
            assert_eq!(v, want);
        }
    }

    #[test]
    fn pp_death_kernel_examples() {
        let r = pp_indicator();
        let k = r.kernels();
        let x = Point::x(0.0);
        let a = k.kernel(KernelRole::DPlus, &x, None, &c(&[], &[0.4]), &TwoConfig::empty()).unwrap();
        assert!((a - 1.5).abs() < 1e-15);
        let b = k.kernel(KernelRole::DPlus, &x, None, &TwoConfig::empty(), &c(&[], &[0.3])).unwrap();
        assert!((b - 0.5).abs() < 1e-15);
        let n = derive_kernel_numeric(&r, KernelRole::DPlus, &x, None, &c(&[], &[0.4]), &TwoConfig::empty()).unwrap();
        assert!((n - 1.5).abs() < 1e-15);
    }

    #[test]
    fn ising_birth_kernel_example() {
        let r = RateSet::ising(IsingParams {
            m_plus: 1.0,
            m_minus: 1.0,
            phi: Profile::indicator(1.0, 1.0),
            metric: Metric::Euclidean,
        })
        .unwrap();
        let x = Point::x(0.0);
        let want = (-1.0f64).exp() - 1.0;
        let closed = r.kernels().kernel(KernelRole::BPlus, &x, None, &TwoConfig::empty(), &c(&[], &[0.5])).unwrap();
        let num = derive_kernel_numeric(&r, KernelRole::BPlus, &x, None, &TwoConfig::empty(), &c(&[], &[0.5])).unwrap();
        assert!((closed - want).abs() < 1e-15);
        assert!((num - want).abs() < 1e-15);
    }

    #[test]
    fn pp_bminus_cases_match_numeric() {
        let r = pp_indicator();
        let k = r.kernels();
        let y = Point::x(0.2);
        let fixed = c(&[0.1, 0.6], &[0.3]);
        for var in [c(&[], &[]), c(&[], &[0.5]), c(&[0.4], &[]), c(&[0.4], &[0.5]), c(&[0.4, 0.9], &[0.5])] {
            let a = k.kernel(KernelRole::BMinus, &y, None, &fixed, &var).unwrap();
            let b = derive_kernel_numeric(&r, KernelRole::BMinus, &y, None, &fixed, &var).unwrap();
            assert!((a - b).abs() < 1e-14, "{var:?}: {a} vs {b}");
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = standard_pp();
        p.m_plus = -1.0;
        assert!(matches!(RateSet::predator_prey(p), Err(Error::InvalidRateParams(_))));
        let mut p = standard_pp();
        p.a2 = Profile::gaussian(-0.1, 0.2);
        assert!(RateSet::predator_prey(p).is_err());
        assert!(RateSet::constant(1.0, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn missing_roles_error() {
        let r = RateSet::constant(1.0, 1.0, 0.0, 0.0).unwrap();
        let e = derive_kernel_numeric(&r, KernelRole::APlus, &Point::x(0.0), None, &TwoConfig::empty(), &TwoConfig::empty());
        assert!(matches!(e, Err(Error::MissingKernel(_))));
    }

    #[test]
    fn profile_integrals() {
        let g = Profile::gaussian(2.0, 0.3);
        assert!((g.radial_integral(1, |v| v) - g.l1(1)).abs() < 1e-10);
        assert!((g.radial_integral(2, |v| v) - g.l1(2)).abs() < 1e-9);
        let t = Profile::Tabulated {
            r: vec![0.0, 1.0],
            v: vec![1.0, 0.0],
        };
        // triangle on [-1, 1]
        assert!((t.l1(1) - 1.0).abs() < 1e-12);
        assert_eq!(t.eval(0.5), 0.5);
        assert_eq!(t.eval(2.0), 0.0);
    }

    #[test]
    fn spec_round_trips_through_json() {
        for n in ["constant", "pp", "ising", "hop", "hopflip", "flip"] {
            let s = RateSpec::named(n).unwrap();
            let j = serde_json::to_string(&s).unwrap();
            let back: RateSpec = serde_json::from_str(&j).unwrap();
            assert_eq!(s, back);
            back.build().unwrap();
        }
    }
}
