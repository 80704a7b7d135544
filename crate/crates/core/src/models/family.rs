//! Primitive circular distributions used by the simulation catalogue.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::error::{Error, Result};
use crate::special::{bessel_ie, KAPPA_CAP};

const INV_TAU: f64 = 1.0 / TAU;
const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;

/// One primitive family with its parameters. Locations are in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    CircularUniform,
    VonMises { mu: f64, kappa: f64 },
    Cardioid { mu: f64, rho: f64 },
    WrappedNormal { mu: f64, rho: f64 },
    WrappedCauchy { mu: f64, rho: f64 },
    WrappedSkewNormal { xi: f64, eta: f64, lambda: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Family::CircularUniform => Ok(()),
            Family::VonMises { mu, kappa } => {
                if !mu.is_finite() || !(0.0..=KAPPA_CAP).contains(&kappa) {
                    return bad(format!("vM({mu}, {kappa})"));
                }
                Ok(())
            }
            Family::Cardioid { mu, rho } => {
                if !mu.is_finite() || !(rho.abs() <= 0.5) {
                    return bad(format!("cardioid needs |rho| <= 1/2, got {rho}"));
                }
                Ok(())
            }
            Family::WrappedNormal { mu, rho } | Family::WrappedCauchy { mu, rho } => {
                if !mu.is_finite() || !(0.0..1.0).contains(&rho) {
                    return bad(format!("wrapped family needs rho in [0, 1), got {rho}"));
                }
                Ok(())
            }
            Family::WrappedSkewNormal { xi, eta, lambda } => {
                if !xi.is_finite() || !(eta > 0.0 && eta.is_finite()) || !lambda.is_finite() {
                    return bad(format!("WSN({xi}, {eta}, {lambda})"));
                }
                Ok(())
            }
        }
    }

    pub fn density(&self, theta: f64) -> f64 {
        match *self {
            Family::CircularUniform => INV_TAU,
            Family::VonMises { mu, kappa } => von_mises_density(theta, mu, kappa),
            Family::Cardioid { mu, rho } => (1.0 + 2.0 * rho * (theta - mu).cos()) * INV_TAU,
            Family::WrappedNormal { mu, rho } => {
                if rho == 0.0 {
                    return INV_TAU;
                }
                let sigma = (-2.0 * rho.ln()).sqrt();
                wrapped_sum(theta - mu, sigma, |x| {
                    INV_SQRT_TAU / sigma * (-0.5 * (x / sigma).powi(2)).exp()
                })
            }
            Family::WrappedCauchy { mu, rho } => {
                (1.0 - rho * rho) / (TAU * (1.0 + rho * rho - 2.0 * rho * (theta - mu).cos()))
            }
            Family::WrappedSkewNormal { xi, eta, lambda } => wrapped_sum(theta - xi, eta, |x| {
                let z = x / eta;
                2.0 / eta * INV_SQRT_TAU * (-0.5 * z * z).exp() * normal_cdf(lambda * z)
            }),
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::CircularUniform => rng.random::<f64>() * TAU,
            Family::VonMises { mu, kappa } => sample_von_mises(rng, mu, kappa),
            Family::Cardioid { mu, rho } => {
                let envelope = 1.0 + 2.0 * rho.abs();
                loop {
                    let t = rng.random::<f64>() * TAU;
                    let u = rng.random::<f64>() * envelope;
                    if u <= 1.0 + 2.0 * rho * (t - mu).cos() {
                        return wrap(t);
                    }
                }
            }
            Family::WrappedNormal { mu, rho } => {
                if rho == 0.0 {
                    return rng.random::<f64>() * TAU;
                }
                let sigma = (-2.0 * rho.ln()).sqrt();
                let z: f64 = StandardNormal.sample(rng);
                wrap(mu + sigma * z)
            }
            Family::WrappedCauchy { mu, rho } => {
                if rho == 0.0 {
                    return rng.random::<f64>() * TAU;
                }
                let scale = -rho.ln();
                let u: f64 = rng.random();
                wrap(mu + scale * (PI * (u - 0.5)).tan())
            }
            Family::WrappedSkewNormal { xi, eta, lambda } => {
                let delta = lambda / (1.0 + lambda * lambda).sqrt();
                let u0: f64 = StandardNormal.sample(rng);
                let u1: f64 = StandardNormal.sample(rng);
                let z = delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1;
                wrap(xi + eta * z)
            }
        }
    }

    pub fn rotated(&self, phi: f64) -> Family {
        match *self {
            Family::CircularUniform => Family::CircularUniform,
            Family::VonMises { mu, kappa } => Family::VonMises { mu: wrap(mu + phi), kappa },
            Family::Cardioid { mu, rho } => Family::Cardioid { mu: wrap(mu + phi), rho },
            Family::WrappedNormal { mu, rho } => Family::WrappedNormal { mu: wrap(mu + phi), rho },
            Family::WrappedCauchy { mu, rho } => Family::WrappedCauchy { mu: wrap(mu + phi), rho },
            Family::WrappedSkewNormal { xi, eta, lambda } => Family::WrappedSkewNormal {
                xi: wrap(xi + phi),
                eta,
                lambda,
            },
        }
    }

    /// Short human-readable form, e.g. `vM(3.141593, 1)`.
    pub fn label(&self) -> String {
        match *self {
            Family::CircularUniform => "U".to_string(),
            Family::VonMises { mu, kappa } => format!("vM({mu:.6}, {kappa})"),
            Family::Cardioid { mu, rho } => format!("Cardioid({mu:.6}, {rho})"),
            Family::WrappedNormal { mu, rho } => format!("WN({mu:.6}, {rho})"),
            Family::WrappedCauchy { mu, rho } => format!("WC({mu:.6}, {rho})"),
            Family::WrappedSkewNormal { xi, eta, lambda } => {
                format!("WSN({xi:.6}, {eta}, {lambda})")
            }
        }
    }
}

pub(crate) fn von_mises_density(theta: f64, mu: f64, kappa: f64) -> f64 {
    (kappa * ((theta - mu).cos() - 1.0)).exp() / (TAU * bessel_ie(0, kappa))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Σ_{k=-K..K} f(x + 2πk) for a linear density of scale `scale`, with `x`
/// first reduced to `[-π, π)`. `K` covers 7.5 scale units beyond one
/// period, where the Gaussian tail is below 1e-12.
fn wrapped_sum<F: Fn(f64) -> f64>(x: f64, scale: f64, f: F) -> f64 {
    let x = wrap(x + PI) - PI;
    let k = ((7.5 * scale / TAU).ceil() as i64 + 1).max(6);
    (-k..=k).map(|j| f(x + TAU * j as f64)).sum()
}

/// Best–Fisher rejection sampler, in the numerically stable form with
/// `r = s + √(1 + s²)`, `s = 1/(2κ)`.
pub(crate) fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return rng.random::<f64>() * TAU;
    }
    if kappa > 1e6 {
        let z: f64 = StandardNormal.sample(rng);
        return wrap(mu + z / kappa.sqrt());
    }
    let s = 0.5 / kappa;
    let r = s + (1.0 + s * s).sqrt();
    let w = loop {
        let u: f64 = rng.random();
        let z = (PI * u).cos();
        let w = (1.0 + r * z) / (r + z);
        let y = kappa * (r - w);
        let v: f64 = rng.random();
        if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
            break w;
        }
    };
    let t = w.clamp(-1.0, 1.0).acos();
    let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
    wrap(mu + sign * t)
}
