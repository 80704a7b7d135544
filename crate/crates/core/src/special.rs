//! Modified Bessel functions of the first kind and the mean resultant ratio
//! `A(κ) = I₁(κ)/I₀(κ)`.
//!
//! Everything downstream works with exponentially scaled values
//! `e^{-x} I_r(x)` so that ratios such as `I₂(ν)/I₀(ν)` or `I₀(2ν)/I₀(ν)²`
//! can be formed without overflow for concentrations up to [`KAPPA_CAP`].

use crate::error::{Error, Result};

/// Largest concentration any estimate is allowed to take.
pub const KAPPA_CAP: f64 = 1e5;

/// Unscaled `I_r(x)` is refused above this argument (`e^x` overflows near 709.78).
pub const BESSEL_OVERFLOW_THRESHOLD: f64 = 700.0;

/// Below this argument the power series is used, above it the
/// large-argument asymptotic expansion.
const SERIES_ASYMPTOTIC_SWITCH: f64 = 30.0;

/// Order of a modified Bessel function of the first kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BesselOrder(pub u32);

impl From<u32> for BesselOrder {
    fn from(r: u32) -> Self {
        BesselOrder(r)
    }
}

/// `I_r(x)` represented as `value · exp(scale_exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBessel {
    pub value: f64,
    pub scale_exponent: f64,
}

impl ScaledBessel {
    /// Natural logarithm of the represented `I_r(x)`.
    pub fn ln(&self) -> f64 {
        self.value.ln() + self.scale_exponent
    }

    /// Reconstructs `I_r(x)`; overflows to infinity for large arguments.
    pub fn unscaled(&self) -> f64 {
        self.value * self.scale_exponent.exp()
    }
}

/// `I_r(x)` for `0 ≤ x ≤ 700`.
pub fn bessel_i(order: impl Into<BesselOrder>, x: f64) -> Result<f64> {
    let order = order.into();
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Bessel argument must be non-negative, got {x}"
        )));
    }
    if x > BESSEL_OVERFLOW_THRESHOLD {
        return Err(Error::BesselOverflow { x });
    }
    if x <= SERIES_ASYMPTOTIC_SWITCH {
        Ok(power_series(order.0, x))
    } else {
        Ok(asymptotic_scaled(order.0, x) * x.exp())
    }
}

/// `I_r(x)` in scaled form; finite for any finite non-negative `x`.
pub fn bessel_i_scaled(order: impl Into<BesselOrder>, x: f64) -> ScaledBessel {
    ScaledBessel {
        value: bessel_ie(order.into().0, x),
        scale_exponent: x,
    }
}

/// `e^{-x} I_r(x)`.
///
/// Panics in debug builds on negative `x`.
pub fn bessel_ie(order: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0, "negative Bessel argument {x}");
    if x <= SERIES_ASYMPTOTIC_SWITCH {
        power_series(order, x) * (-x).exp()
    } else {
        asymptotic_scaled(order, x)
    }
}

/// `ln I₀(x)`, finite for every finite `x ≥ 0`.
pub fn ln_bessel_i0(x: f64) -> f64 {
    bessel_ie(0, x).ln() + x
}

/// Σ_k (x/2)^{2k+r} / (k!(k+r)!). All terms are positive, so the sum is
/// accurate to rounding for the arguments it is used on.
fn power_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for j in 1..=order {
        term *= half / j as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    sum
}

/// e^{-x} I_r(x) ≈ (2πx)^{-1/2} Σ_k (-1)^k Π_{j≤k}(4r² − (2j−1)²) / (k! (8x)^k),
/// summed until the terms stop shrinking.
fn asymptotic_scaled(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64) * (order as f64);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `A(κ) = I₁(κ)/I₀(κ)`.
pub fn mean_resultant_ratio(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    bessel_ie(1, kappa) / bessel_ie(0, kappa)
}

/// Derivative `A'(κ) = 1 − A(κ)/κ − A(κ)²`.
fn mean_resultant_ratio_slope(kappa: f64, a: f64) -> f64 {
    if kappa <= 0.0 {
        0.5
    } else {
        1.0 - a / kappa - a * a
    }
}

/// A concentration obtained by inverting [`mean_resultant_ratio`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub kappa: f64,
    /// Set when the target ratio could not be reached below [`KAPPA_CAP`].
    pub saturated: bool,
}

/// Solves `A(κ) = rbar` for κ.
///
/// Starts from the Banerjee et al. approximation `R(2 − R²)/(1 − R²)` and
/// polishes with Newton steps kept inside a shrinking bisection bracket.
/// Targets at or beyond `A(KAPPA_CAP)` return the cap with `saturated` set.
pub fn inverse_mean_resultant_ratio(rbar: f64) -> KappaEstimate {
    if !(rbar > 0.0) {
        return KappaEstimate {
            kappa: 0.0,
            saturated: false,
        };
    }
    let saturated = KappaEstimate {
        kappa: KAPPA_CAP,
        saturated: true,
    };
    if rbar >= 1.0 || rbar >= mean_resultant_ratio(KAPPA_CAP) {
        return saturated;
    }

    let mut lo = 0.0_f64;
    let mut hi = KAPPA_CAP;
    let mut kappa = (rbar * (2.0 - rbar * rbar) / (1.0 - rbar * rbar)).clamp(1e-12, KAPPA_CAP);
    for _ in 0..200 {
        let a = mean_resultant_ratio(kappa);
        let residual = a - rbar;
        if residual.abs() < 1e-13 {
            break;
        }
        if residual > 0.0 {
            hi = kappa;
        } else {
            lo = kappa;
        }
        let step = residual / mean_resultant_ratio_slope(kappa, a);
        let mut next = kappa - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - kappa).abs() <= 1e-15 * kappa {
            kappa = next;
            break;
        }
        kappa = next;
    }
    KappaEstimate {
        kappa,
        saturated: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn series_reference_values() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        // mpmath, 40 digits
        assert!(rel(bessel_i(0, 1.0).unwrap(), 1.266_065_877_752_008_3) < 1e-14);
        assert!(rel(bessel_i(2, 2.0).unwrap(), 0.688_948_447_698_738_2) < 1e-14);
    }

    #[test]
    fn scaled_reference_values() {
        assert_eq!(bessel_i_scaled(0, 0.0).value, 1.0);
        assert!(rel(bessel_i_scaled(0, 1.0).value, 0.465_759_607_593_640_4) < 1e-14);
        let s = bessel_i_scaled(2, 50.0);
        assert!(rel(s.value, 0.054_321_901_691_738_38) < 1e-13);
        assert_eq!(s.scale_exponent, 50.0);
        let far = bessel_ie(2, 1e6);
        assert!(far.is_finite() && far > 0.0);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(bessel_i(0, 800.0), Err(Error::BesselOverflow { .. })));
        assert!(bessel_i(0, 700.0).unwrap().is_finite());
    }

    #[test]
    fn branches_agree_at_switchover() {
        for r in 0..3 {
            let x = SERIES_ASYMPTOTIC_SWITCH;
            let a = power_series(r, x) * (-x).exp();
            let b = asymptotic_scaled(r, x);
            assert!(rel(a, b) < 1e-12, "order {r}: {a} vs {b}");
        }
    }

    #[test]
    fn ratio_values() {
        assert_eq!(mean_resultant_ratio(0.0), 0.0);
        assert!((mean_resultant_ratio(1.0) - 0.446_389_965_896_534_5).abs() < 1e-14);
        let a = mean_resultant_ratio(100.0);
        assert!(a > 0.99 && a < 1.0);
        assert!((a - 0.994_987_373_005_168_8).abs() < 1e-13);
    }

    #[test]
    fn inverse_ratio_examples() {
        assert_eq!(inverse_mean_resultant_ratio(0.0).kappa, 0.0);
        let k = inverse_mean_resultant_ratio(0.446_389_965_896_534_5);
        assert!((k.kappa - 1.0).abs() < 1e-9);
        assert!(!k.saturated);
        let capped = inverse_mean_resultant_ratio(0.999_999);
        assert_eq!(capped.kappa, KAPPA_CAP);
        assert!(capped.saturated);
        assert!(inverse_mean_resultant_ratio(1.0).saturated);
    }

    #[test]
    fn inverse_hits_tolerance_near_one() {
        for &r in &[1e-6, 0.01, 0.3, 0.9, 0.99, 0.999, 0.9999] {
            let k = inverse_mean_resultant_ratio(r);
            assert!(!k.saturated);
            assert!((mean_resultant_ratio(k.kappa) - r).abs() < 1e-10, "rbar {r}");
        }
    }
}
