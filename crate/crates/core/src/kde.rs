//! The von Mises kernel density estimator
//!
//! ```text
//! f̂(θ; ν) = 1/(2π n I₀(ν)) Σᵢ exp{ν cos(θ − Θᵢ)}
//! ```
//!
//! evaluated as `Σᵢ exp{ν (cos(θ − Θᵢ) − 1)} / (2π n e^{-ν}I₀(ν))` so that
//! large concentrations do not overflow.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::angle::AngleSample;
use crate::error::{Error, Result};
use crate::special::{bessel_ie, KAPPA_CAP};

pub const DEFAULT_GRIDSIZE: usize = 1024;

#[derive(Debug, Clone)]
pub struct KdeFit {
    sample: AngleSample,
    nu: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    norm: f64,
}

impl KdeFit {
    pub fn new(sample: AngleSample, nu: f64) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        if !(0.0..=KAPPA_CAP).contains(&nu) {
            return Err(Error::InvalidParameter(format!(
                "concentration must lie in [0, {KAPPA_CAP}], got {nu}"
            )));
        }
        let (sin, cos) = sample.as_slice().iter().map(|t| t.sin_cos()).unzip();
        let norm = 1.0 / (TAU * bessel_ie(0, nu) * sample.len() as f64);
        Ok(KdeFit {
            sample,
            nu,
            cos,
            sin,
            norm,
        })
    }

    pub fn sample(&self) -> &AngleSample {
        &self.sample
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn evaluate(&self, theta: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        self.evaluate_at(ct, st)
    }

    fn evaluate_at(&self, ct: f64, st: f64) -> f64 {
        let nu = self.nu;
        let sum: f64 = self
            .cos
            .iter()
            .zip(&self.sin)
            .map(|(c, s)| (nu * (ct * c + st * s - 1.0)).exp())
            .sum();
        sum * self.norm
    }

    /// The estimate on `gridsize` equispaced nodes starting at 0.
    pub fn grid(&self, gridsize: usize) -> Result<DensityGrid> {
        if gridsize < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 8 nodes, got {gridsize}"
            )));
        }
        let values = (0..gridsize)
            .map(|k| {
                let (st, ct) = node(k, gridsize).sin_cos();
                self.evaluate_at(ct, st)
            })
            .collect();
        Ok(DensityGrid { values })
    }
}

/// Free-function form of [`KdeFit::evaluate`].
pub fn kde_evaluate(fit: &KdeFit, theta: f64) -> f64 {
    fit.evaluate(theta)
}

/// Free-function form of [`KdeFit::grid`].
pub fn kde_grid(fit: &KdeFit, gridsize: usize) -> Result<DensityGrid> {
    fit.grid(gridsize)
}

fn node(k: usize, gridsize: usize) -> f64 {
    TAU * k as f64 / gridsize as f64
}

/// Density values at `θ_k = 2πk / gridsize`, `k = 0 … gridsize − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 8 nodes, got {}",
                values.len()
            )));
        }
        Ok(DensityGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gridsize(&self) -> usize {
        self.values.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let g = self.gridsize();
        (0..g).map(move |k| node(k, g))
    }

    /// Periodic trapezoid integral.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * TAU / self.gridsize() as f64
    }

    /// Number of strict local maxima on the circular grid.
    pub fn local_maxima(&self) -> usize {
        let g = self.gridsize();
        (0..g)
            .filter(|&k| {
                let v = self.values[k];
                v > self.values[(k + g - 1) % g] && v > self.values[(k + 1) % g]
            })
            .count()
    }

    /// Two whitespace-separated columns `theta density`, one node per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# theta density\n");
        for (theta, v) in self.nodes().zip(&self.values) {
            let _ = writeln!(out, "{theta:.10} {v:.12e}");
        }
        out
    }
}

/// Integrated squared error `∫(a − b)²` by the periodic trapezoid rule.
pub fn ise(a: &DensityGrid, b: &DensityGrid) -> Result<f64> {
    if a.gridsize() != b.gridsize() {
        return Err(Error::GridMismatch {
            left: a.gridsize(),
            right: b.gridsize(),
        });
    }
    let ss: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(ss * TAU / a.gridsize() as f64)
}

/// Kernel evaluations for one sample on a fixed grid, reusable across many
/// concentrations. Stores `cos(θ_k − Θᵢ) − 1` for every node and observation.
#[derive(Debug, Clone)]
pub struct GridKernel {
    gridsize: usize,
    n: usize,
    shifted_cos: Vec<f64>,
}

impl GridKernel {
    pub fn new(sample: &AngleSample, gridsize: usize) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let sc: Vec<(f64, f64)> = sample.as_slice().iter().map(|t| t.sin_cos()).collect();
        let mut shifted_cos = Vec::with_capacity(gridsize * sc.len());
        for k in 0..gridsize {
            let (st, ct) = node(k, gridsize).sin_cos();
            shifted_cos.extend(sc.iter().map(|(s, c)| ct * c + st * s - 1.0));
        }
        Ok(GridKernel {
            gridsize,
            n: sc.len(),
            shifted_cos,
        })
    }

    pub fn grid(&self, nu: f64) -> DensityGrid {
        let norm = 1.0 / (TAU * bessel_ie(0, nu) * self.n as f64);
        let values = self
            .shifted_cos
            .chunks_exact(self.n)
            .map(|row| row.iter().map(|d| (nu * d).exp()).sum::<f64>() * norm)
            .collect();
        DensityGrid { values }
    }

    /// ISE of the estimate at `nu` against `truth`, without materializing the grid.
    pub fn ise(&self, nu: f64, truth: &DensityGrid) -> Result<f64> {
        if truth.gridsize() != self.gridsize {
            return Err(Error::GridMismatch {
                left: self.gridsize,
                right: truth.gridsize(),
            });
        }
        let norm = 1.0 / (TAU * bessel_ie(0, nu) * self.n as f64);
        let ss: f64 = self
            .shifted_cos
            .chunks_exact(self.n)
            .zip(&truth.values)
            .map(|(row, t)| {
                let v = row.iter().map(|d| (nu * d).exp()).sum::<f64>() * norm;
                (v - t) * (v - t)
            })
            .sum();
        Ok(ss * TAU / self.gridsize as f64)
    }
}

/// `I_p(ν)/I₀(ν)` for `p = 0 … pmax`, from the backward recurrence of
/// `r_p = I_p/I_{p−1} = 1 / (2p/ν + r_{p+1})`.
pub fn bessel_ratios(nu: f64, pmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; pmax + 1];
    out[0] = 1.0;
    if nu <= 0.0 || pmax == 0 {
        return out;
    }
    let start = pmax.max(nu.ceil() as usize) + 60;
    let mut r = 0.0;
    let mut ratios = vec![0.0; pmax + 1];
    for p in (1..=start).rev() {
        r = 1.0 / (2.0 * p as f64 / nu + r);
        if p <= pmax {
            ratios[p] = r;
        }
    }
    for p in 1..=pmax {
        out[p] = out[p - 1] * ratios[p];
    }
    out
}

/// ISE against a fixed truth grid computed from Fourier coefficients.
///
/// By the discrete Parseval identity the periodic-trapezoid ISE on a grid of
/// `G` nodes equals `(1/2π) Σ_{|p| ≤ G/2} |φ̂_p − φ_p|²`, where `φ_p` are the
/// grid's discrete Fourier coefficients. The estimator's coefficients are
/// `(I_p(ν)/I₀(ν)) · (1/n) Σᵢ e^{ipΘᵢ}`, so once a sample's empirical
/// coefficients are known each concentration costs `O(G)`. Agreement with
/// [`ise`] is exact up to the estimator's harmonics above `G/2`.
#[derive(Debug, Clone)]
pub struct SpectralIse {
    gridsize: usize,
    truth: Vec<(f64, f64)>,
}

impl SpectralIse {
    pub fn new(truth: &DensityGrid) -> Self {
        let g = truth.gridsize();
        let table: Vec<(f64, f64)> = (0..g).map(|j| node(j, g).sin_cos()).collect();
        let h = TAU / g as f64;
        let coeffs = (0..=g / 2)
            .map(|p| {
                let (mut re, mut im) = (0.0, 0.0);
                for (k, v) in truth.values.iter().enumerate() {
                    let (s, c) = table[(p * k) % g];
                    re += v * c;
                    im += v * s;
                }
                (re * h, im * h)
            })
            .collect();
        SpectralIse {
            gridsize: g,
            truth: coeffs,
        }
    }

    /// `(1/n) Σᵢ e^{ipΘᵢ}` for `p = 0 … G/2`.
    pub fn sample_coefficients(&self, sample: &AngleSample) -> Result<Vec<(f64, f64)>> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let pmax = self.gridsize / 2;
        let mut acc = vec![(0.0, 0.0); pmax + 1];
        for &t in sample.as_slice() {
            let (s1, c1) = t.sin_cos();
            let (mut c, mut s) = (1.0, 0.0);
            for a in acc.iter_mut() {
                a.0 += c;
                a.1 += s;
                let nc = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = nc;
            }
        }
        let inv = 1.0 / sample.len() as f64;
        Ok(acc.into_iter().map(|(c, s)| (c * inv, s * inv)).collect())
    }

    pub fn ise(&self, coeffs: &[(f64, f64)], nu: f64) -> f64 {
        let pmax = self.gridsize / 2;
        let rho = bessel_ratios(nu, pmax);
        let term = |p: usize| {
            let dr = rho[p] * coeffs[p].0 - self.truth[p].0;
            let di = rho[p] * coeffs[p].1 - self.truth[p].1;
            dr * dr + di * di
        };
        let interior: f64 = (1..pmax).map(term).sum();
        (term(0) + 2.0 * interior + term(pmax)) / TAU
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{density_on_grid, Family, VonMisesComponent, VonMisesMixture};
    use std::f64::consts::PI;

    fn sample(v: &[f64]) -> AngleSample {
        AngleSample::from_radians(v.iter().copied()).unwrap()
    }

    #[test]
    fn single_observation_is_a_von_mises_density() {
        let fit = KdeFit::new(sample(&[1.3]), 7.0).unwrap();
        let vm = VonMisesComponent::new(1.3, 7.0).unwrap();
        for i in 0..40 {
            let t = i as f64 * 0.17;
            assert!((fit.evaluate(t) - vm.density(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_concentration_is_uniform() {
        let fit = KdeFit::new(sample(&[0.1, 2.0, 4.0]), 0.0).unwrap();
        for i in 0..10 {
            assert!((fit.evaluate(i as f64) - 1.0 / TAU).abs() < 1e-16);
        }
        let g = fit.grid(64).unwrap();
        assert!(g.values().iter().all(|v| (v - 1.0 / TAU).abs() < 1e-16));
    }

    #[test]
    fn three_point_sum() {
        // mpmath: Σ exp(2 cos(1 − t)) / (3 · 2π I₀(2)), t ∈ {0, 1, 2}
        let fit = KdeFit::new(sample(&[0.0, 1.0, 2.0]), 2.0).unwrap();
        assert!((fit.evaluate(1.0) - 0.309_104_803_683_401_43).abs() < 1e-14);
    }

    #[test]
    fn grid_matches_pointwise() {
        let fit = KdeFit::new(sample(&[0.3, 0.5, 3.0, 6.0]), 12.0).unwrap();
        let g = fit.grid(128).unwrap();
        for (t, v) in g.nodes().zip(g.values()) {
            assert_eq!(fit.evaluate(t), *v);
        }
        assert!(fit.grid(4).is_err());
    }

    #[test]
    fn ise_examples() {
        let a = DensityGrid::from_values(vec![1.0 / TAU; 1024]).unwrap();
        assert_eq!(ise(&a, &a).unwrap(), 0.0);
        let vm = Family::VonMises { mu: 0.0, kappa: 1.0 };
        let coarse = ise(&a, &DensityGrid::from_values(density_on_grid(&vm, 1024)).unwrap()).unwrap();
        let a2 = DensityGrid::from_values(vec![1.0 / TAU; 2048]).unwrap();
        let fine = ise(&a2, &DensityGrid::from_values(density_on_grid(&vm, 2048)).unwrap()).unwrap();
        assert!((coarse - fine).abs() < 1e-8);
        // mpmath quadrature
        assert!((fine - 0.067_186_130_555_254_78).abs() < 1e-12);
        assert!(matches!(ise(&a, &a2), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn grid_kernel_matches_direct_fit() {
        let s = sample(&[0.3, 0.5, 3.0, 6.0, 1.0]);
        let gk = GridKernel::new(&s, 64).unwrap();
        let truth = DensityGrid::from_values(vec![1.0 / TAU; 64]).unwrap();
        for &nu in &[0.0, 1.0, 30.0, 900.0] {
            let direct = KdeFit::new(s.clone(), nu).unwrap().grid(64).unwrap();
            let cached = gk.grid(nu);
            for (a, b) in direct.values().iter().zip(cached.values()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
            let d = ise(&direct, &truth).unwrap();
            assert!((gk.ise(nu, &truth).unwrap() - d).abs() <= 1e-12 * d.max(1e-300));
        }
    }

    #[test]
    fn bessel_ratios_match_scaled_bessels() {
        for &nu in &[0.3, 1.0, 12.0, 250.0, 1000.0] {
            let r = bessel_ratios(nu, 8);
            let i0 = bessel_ie(0, nu);
            for p in 1..=2u32 {
                let want = bessel_ie(p, nu) / i0;
                assert!(((r[p as usize] - want) / want).abs() < 1e-12, "ν={nu} p={p}");
            }
        }
        assert_eq!(bessel_ratios(0.0, 3), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn spectral_ise_equals_grid_ise() {
        use crate::models::{model, CircularDensity, ModelId};
        let m = model(ModelId::new(13).unwrap());
        let s = m.sample(150, &mut crate::rng::stream_rng(2, 2));
        let truth = DensityGrid::from_values(density_on_grid(&m, 1024)).unwrap();
        let spec = SpectralIse::new(&truth);
        let coeffs = spec.sample_coefficients(&s).unwrap();
        let gk = GridKernel::new(&s, 1024).unwrap();
        for &nu in &[0.01, 0.5, 4.0, 40.0, 400.0] {
            let a = spec.ise(&coeffs, nu);
            let b = gk.ise(nu, &truth).unwrap();
            assert!(((a - b) / b).abs() < 1e-9, "ν={nu}: {a} vs {b}");
        }
    }

    #[test]
    fn estimator_is_a_kernel_mixture() {
        let s = sample(&[0.2, 1.0, 1.1, 4.0, PI]);
        let fit = KdeFit::new(s.clone(), 5.0).unwrap();
        let mix = VonMisesMixture::kernel_mixture(&s, 5.0).unwrap();
        for i in 0..30 {
            let t = i as f64 * 0.21;
            let (a, b) = (fit.evaluate(t), mix.density(t));
            assert!(((a - b) / b).abs() < 1e-12);
        }
    }

    #[test]
    fn local_maxima_counts_modes() {
        let g = DensityGrid::from_values(
            (0..64).map(|k| (2.0 * node(k, 64)).cos() + 2.0).collect(),
        )
        .unwrap();
        assert_eq!(g.local_maxima(), 2);
        assert_eq!(DensityGrid::from_values(vec![1.0; 16]).unwrap().local_maxima(), 0);
    }
}
