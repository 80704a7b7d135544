//! Circular distributions: primitive families, von Mises mixtures and the
//! twenty-model simulation catalogue.

mod catalogue;
mod family;
mod mixture;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::AngleSample;
use crate::error::{Error, Result};

pub use catalogue::{catalogue, catalogue_json, model};
pub use family::Family;
pub use mixture::{component_means, von_mises_curvature, VonMisesComponent, VonMisesMixture};

use mixture::pick_index;

/// Something with a density on the circle that can also be sampled.
pub trait CircularDensity {
    fn density(&self, theta: f64) -> f64;

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> AngleSample {
        AngleSample::from_wrapped((0..n).map(|_| self.sample_one(rng)).collect())
    }
}

impl CircularDensity for Family {
    fn density(&self, theta: f64) -> f64 {
        Family::density(self, theta)
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Family::sample_one(self, rng)
    }
}

impl CircularDensity for VonMisesMixture {
    fn density(&self, theta: f64) -> f64 {
        VonMisesMixture::density(self, theta)
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        VonMisesMixture::sample_one(self, rng)
    }
}

/// Catalogue identifier `M1` … `M20`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelId(u8);

impl ModelId {
    pub const COUNT: u8 = 20;

    pub fn new(index: u8) -> Result<Self> {
        if (1..=Self::COUNT).contains(&index) {
            Ok(ModelId(index))
        } else {
            Err(Error::UnknownModel(format!("M{index}")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ModelId> {
        (1..=Self::COUNT).map(ModelId)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .trim()
            .strip_prefix(['M', 'm'])
            .ok_or_else(|| Error::UnknownModel(s.to_string()))?;
        let idx: u8 = digits
            .parse()
            .map_err(|_| Error::UnknownModel(s.to_string()))?;
        ModelId::new(idx).map_err(|_| Error::UnknownModel(s.to_string()))
    }
}

impl Serialize for ModelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedFamily {
    pub weight: f64,
    #[serde(flatten)]
    pub family: Family,
}

/// A catalogue model: a weighted list of primitive families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: ModelId,
    pub components: Vec<WeightedFamily>,
}

impl ModelSpec {
    pub fn new(id: ModelId, components: Vec<WeightedFamily>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(format!("{id} has no components")));
        }
        for c in &components {
            if !(c.weight > 0.0) {
                return Err(Error::InvalidParameter(format!("{id}: non-positive weight")));
            }
            c.family.validate()?;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "{id}: weights sum to {total}"
            )));
        }
        Ok(ModelSpec { id, components })
    }

    /// Shifts every location parameter by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        ModelSpec {
            id: self.id,
            components: self
                .components
                .iter()
                .map(|c| WeightedFamily {
                    weight: c.weight,
                    family: c.family.rotated(phi),
                })
                .collect(),
        }
    }

    /// E.g. `1/2·vM(0.000000, 4) + 1/2·vM(3.141593, 4)` with decimal weights.
    pub fn describe(&self) -> String {
        self.components
            .iter()
            .map(|c| format!("{}*{}", fmt_weight(c.weight), c.family.label()))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

fn fmt_weight(w: f64) -> String {
    let s = format!("{w:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl CircularDensity for ModelSpec {
    fn density(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.family.density(theta))
            .sum()
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.components.len() == 1 {
            return self.components[0].family.sample_one(rng);
        }
        let weights: Vec<f64> = self.components.iter().map(|c| c.weight).collect();
        let idx = pick_index(&weights, rng);
        self.components[idx].family.sample_one(rng)
    }
}

/// Values of `density` on `gridsize` equispaced nodes `2πk/gridsize`.
pub fn density_on_grid<D: CircularDensity + ?Sized>(d: &D, gridsize: usize) -> Vec<f64> {
    (0..gridsize)
        .map(|k| d.density(std::f64::consts::TAU * k as f64 / gridsize as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_ids_parse() {
        assert_eq!("M7".parse::<ModelId>().unwrap().index(), 7);
        assert_eq!("m20".parse::<ModelId>().unwrap().index(), 20);
        assert!("M0".parse::<ModelId>().is_err());
        assert!("M21".parse::<ModelId>().is_err());
        assert!("X3".parse::<ModelId>().is_err());
        assert_eq!(ModelId::all().count(), 20);
    }

    #[test]
    fn model_construction_checks_weights() {
        let id = ModelId::new(1).unwrap();
        let half = WeightedFamily {
            weight: 0.5,
            family: Family::CircularUniform,
        };
        assert!(ModelSpec::new(id, vec![half]).is_err());
        assert!(ModelSpec::new(id, vec![half, half]).is_ok());
    }
}
