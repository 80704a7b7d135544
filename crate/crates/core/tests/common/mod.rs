#![allow(dead_code)]

use std::f64::consts::TAU;

use circkde::models::CircularDensity;
use circkde::AngleSample;

/// Upper 0.001 quantile of χ² with 35 degrees of freedom.
pub const CHI2_35_999: f64 = 66.618_828_843_701_04;

pub const GOF_ARCS: usize = 36;

/// Probability of each of `arcs` equal arcs starting at 0, by composite
/// Simpson on 64 panels per arc.
pub fn arc_probabilities<D: CircularDensity + ?Sized>(d: &D, arcs: usize) -> Vec<f64> {
    let width = TAU / arcs as f64;
    let panels = 64;
    let h = width / panels as f64;
    (0..arcs)
        .map(|a| {
            let start = a as f64 * width;
            let mut s = d.density(start) + d.density(start + width);
            for k in 1..panels {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * d.density(start + k as f64 * h);
            }
            s * h / 3.0
        })
        .collect()
}

/// Pearson χ² of the sample's arc counts against `d`.
pub fn chi_square<D: CircularDensity + ?Sized>(d: &D, sample: &AngleSample) -> f64 {
    let probs = arc_probabilities(d, GOF_ARCS);
    let counts = sample.rose_counts(GOF_ARCS);
    let n = sample.len() as f64;
    probs
        .iter()
        .zip(&counts)
        .map(|(p, &c)| {
            let e = n * p;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
