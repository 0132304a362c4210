//! The K-transform on finite two-component configurations, its Möbius
//! inverse, and the ⋆-convolution that K turns into a pointwise product.
//!
//! All sums run over sub-configurations selected by bitmask (see
//! [`TwoConfig::select`]) and are accumulated with compensated summation.

use crate::config::{ConfigFunction, Point, TwoConfig};
use crate::error::Result;
use crate::sum::Neumaier;

#[inline]
fn sign(bits: u32) -> f64 {
    if bits & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Values of `f` on every sub-configuration of `cfg`, indexed by mask.
pub fn tabulate(mut f: impl FnMut(&TwoConfig) -> f64, cfg: &TwoConfig) -> Result<Vec<f64>> {
    cfg.check_cap()?;
    Ok((0..=cfg.full_mask()).map(|m| f(&cfg.select(m))).collect())
}

/// `(KG)(γ) = Σ_{η⁺⊂γ⁺} Σ_{η⁻⊂γ⁻} G(η⁺, η⁻)`.
pub fn k_transform(g: &ConfigFunction, gamma: &TwoConfig) -> Result<f64> {
    k_transform_fn(|c| g.eval(c), gamma)
}

pub fn k_transform_fn(mut g: impl FnMut(&TwoConfig) -> f64, gamma: &TwoConfig) -> Result<f64> {
    gamma.check_cap()?;
    let mut acc = Neumaier::new();
    for m in 0..=gamma.full_mask() {
        acc.add(g(&gamma.select(m)));
    }
    Ok(acc.value())
}

/// `(K⁻¹F)(η) = Σ_{ξ⊂η} (−1)^{|η∖ξ|} F(ξ)`, both components at once.
pub fn k_inverse(mut f: impl FnMut(&TwoConfig) -> f64, eta: &TwoConfig) -> Result<f64> {
    eta.check_cap()?;
    let full = eta.full_mask();
    let mut acc = Neumaier::new();
    for m in 0..=full {
        acc.add(sign((full ^ m).count_ones()) * f(&eta.select(m)));
    }
    Ok(acc.value())
}

/// `(G₁ ⋆ G₂)(η) = Σ_{ξ⊂η} G₁(ξ) Σ_{ζ⊂ξ} G₂((η∖ξ) ∪ ζ)`.
pub fn star_convolution(g1: &ConfigFunction, g2: &ConfigFunction, eta: &TwoConfig) -> Result<f64> {
    star_convolution_fn(|c| g1.eval(c), |c| g2.eval(c), eta)
}

pub fn star_convolution_fn(
    g1: impl Fn(&TwoConfig) -> f64,
    g2: impl Fn(&TwoConfig) -> f64,
    eta: &TwoConfig,
) -> Result<f64> {
    let t1 = tabulate(g1, eta)?;
    let t2 = tabulate(g2, eta)?;
    let full = eta.full_mask();
    let mut acc = Neumaier::new();
    for xi in 0..=full {
        if t1[xi as usize] == 0.0 {
            continue;
        }
        let rest = full ^ xi;
        let mut inner = Neumaier::new();
        // submasks of xi, including xi itself and 0
        let mut zeta = xi;
        loop {
            inner.add(t2[(rest | zeta) as usize]);
            if zeta == 0 {
                break;
            }
            zeta = (zeta - 1) & xi;
        }
        acc.add(t1[xi as usize] * inner.value());
    }
    Ok(acc.value())
}

/// `Σ_{x∈η⁺} (K⁻¹h)(x, η⁺∖x, η⁻)`, i.e. `K⁻¹` of `H(γ) = Σ_{x∈γ⁺} h(x, γ⁺∖x, γ⁻)`.
pub fn sum_kernel_inverse(h: impl Fn(&Point, &TwoConfig) -> f64, eta: &TwoConfig) -> Result<f64> {
    eta.check_cap()?;
    let mut acc = Neumaier::new();
    for (i, x) in eta.plus().iter().enumerate() {
        let rest = TwoConfig::from_parts_unchecked(eta.plus().without_index(i), eta.minus().clone());
        acc.add(k_inverse(|c| h(x, c), &rest)?);
    }
    Ok(acc.value())
}
