//! Angles on the circle and samples of them.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps any finite real onto its representative in `[0, 2π)`.
pub fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Shortest arc length between two angles, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    d.min(TAU - d)
}

/// An angle in radians, stored as its canonical representative in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn new(theta: f64) -> Self {
        Angle(wrap(theta))
    }

    pub fn from_degrees(deg: f64) -> Self {
        Angle::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn rotate(self, phi: f64) -> Self {
        Angle::new(self.0 + phi)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// Observations on the circle; every entry lies in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleSample(Vec<f64>);

impl AngleSample {
    /// Wraps every value into `[0, 2π)`. Non-finite values are rejected.
    pub fn from_radians<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let mut out = Vec::new();
        for (i, v) in values.into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "observation {i} is not finite ({v})"
                )));
            }
            out.push(wrap(v));
        }
        Ok(AngleSample(out))
    }

    pub fn from_degrees<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        Self::from_radians(values.into_iter().map(f64::to_radians))
    }

    pub(crate) fn from_wrapped(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..TAU).contains(v)));
        AngleSample(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Angle> + '_ {
        self.0.iter().map(|&t| Angle(t))
    }

    pub fn rotated(&self, phi: f64) -> Self {
        AngleSample(self.0.iter().map(|&t| wrap(t + phi)).collect())
    }

    /// Sums of cosines and sines.
    pub fn resultant(&self) -> (f64, f64) {
        self.0
            .iter()
            .fold((0.0, 0.0), |(c, s), &t| (c + t.cos(), s + t.sin()))
    }

    /// Mean direction in `[0, 2π)` and mean resultant length `R̄`.
    pub fn mean_direction_and_length(&self) -> Result<(Angle, f64)> {
        if self.is_empty() {
            return Err(Error::EmptySample);
        }
        let (c, s) = self.resultant();
        let n = self.len() as f64;
        let rbar = (c.hypot(s) / n).min(1.0);
        Ok((Angle::new(s.atan2(c)), rbar))
    }

    /// Counts per equal-width arc, the first arc starting at 0.
    pub fn rose_counts(&self, bins: usize) -> Vec<usize> {
        let mut counts = vec![0; bins];
        if bins == 0 {
            return counts;
        }
        let width = TAU / bins as f64;
        for &t in &self.0 {
            let idx = ((t / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
    }
}
