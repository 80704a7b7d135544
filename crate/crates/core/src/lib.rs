//! Kernel density estimation for circular data with a von Mises kernel.
//!
//! Three bandwidth (concentration) selectors are provided:
//!
//! * [`bandwidth::rule_of_thumb`] assumes a single von Mises reference density;
//! * [`bandwidth::plug_in`] fits a von Mises mixture by EM, picks the number of
//!   components by AIC and minimizes the resulting AMISE numerically;
//! * [`bandwidth::lcv`] maximizes the leave-one-out likelihood.
//!
//! [`sim`] runs replicated Monte Carlo comparisons of the selectors over the
//! catalogue of test densities in [`models`].

pub mod angle;
pub mod bandwidth;
pub mod em;
pub mod error;
pub mod kde;
pub mod models;
pub mod optimize;
pub mod rng;
pub mod sim;
pub mod special;

pub use angle::{Angle, AngleSample};
pub use error::{Error, Result};
