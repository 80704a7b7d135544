//! Concentration (inverse bandwidth) selectors for the von Mises kernel.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angle::AngleSample;
use crate::em::{fit_single_von_mises, select_reference_mixture, EmConfig, Invalidity, DEFAULT_CANDIDATES};
use crate::error::{Error, Result};
use crate::kde::{DensityGrid, SpectralIse};
use crate::models::{density_on_grid, CircularDensity, ModelSpec};
use crate::optimize::{probe_then_refine, ProbeOutcome};
use crate::rng::stream_rng;
use crate::special::{bessel_ie, KAPPA_CAP};

/// Relative tolerance on ν for every golden-section refinement.
pub const NU_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Selector {
    #[serde(rename = "RT")]
    RuleOfThumb,
    #[serde(rename = "PI")]
    PlugIn,
    #[serde(rename = "LCV")]
    Lcv,
    #[serde(rename = "ORACLE")]
    Oracle,
}

impl Selector {
    pub const ALL: [Selector; 4] = [
        Selector::RuleOfThumb,
        Selector::PlugIn,
        Selector::Lcv,
        Selector::Oracle,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Selector::RuleOfThumb => "RT",
            Selector::PlugIn => "PI",
            Selector::Lcv => "LCV",
            Selector::Oracle => "ORACLE",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RT" => Ok(Selector::RuleOfThumb),
            "PI" => Ok(Selector::PlugIn),
            "LCV" => Ok(Selector::Lcv),
            "ORACLE" => Ok(Selector::Oracle),
            other => Err(Error::InvalidParameter(format!("unknown selector `{other}`"))),
        }
    }
}

/// Search interval and probe count for numerical selectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuSearchDomain {
    pub nu_min: f64,
    pub nu_max: f64,
    pub probes: usize,
}

impl NuSearchDomain {
    /// `[0.01, 10 n^{2/5}]` with 50 log-spaced probes.
    pub fn for_sample_size(n: usize) -> Self {
        NuSearchDomain {
            nu_min: 0.01,
            nu_max: 10.0 * (n.max(1) as f64).powf(0.4),
            probes: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu_min > 0.0 && self.nu_min < self.nu_max && self.nu_max <= KAPPA_CAP)
            || self.probes < 3
        {
            return Err(Error::InvalidParameter(format!("bad search domain {self:?}")));
        }
        Ok(())
    }
}

/// Probe-then-refine search over the domain.
fn search<F: FnMut(f64) -> f64>(f: F, domain: &NuSearchDomain) -> (ProbeOutcome, usize) {
    let out = probe_then_refine(f, domain.nu_min, domain.nu_max, domain.probes, NU_REL_TOL);
    let evaluations = out.evaluations;
    (out, evaluations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicEntry {
    pub components: usize,
    pub aic: Option<f64>,
    pub curvature: Option<f64>,
    pub invalid: Option<Invalidity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlugInDiagnostics {
    pub selected_components: Option<usize>,
    pub curvature: Option<f64>,
    pub aic_table: Vec<AicEntry>,
    /// Set when no candidate mixture was usable and the rule of thumb was returned.
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthResult {
    pub nu: f64,
    pub selector: Selector,
    /// AMISE at the optimum (PI), log-LCV at the optimum (LCV), mean ISE (ORACLE).
    pub objective: Option<f64>,
    pub evaluations: usize,
    pub plug_in: Option<PlugInDiagnostics>,
}

impl BandwidthResult {
    pub fn fell_back(&self) -> bool {
        self.plug_in.as_ref().is_some_and(|d| d.fallback.is_some())
    }
}

/// Asymptotic MISE of the estimator,
/// `(1/16)[1 − I₂(ν)/I₀(ν)]² R + I₀(2ν) / (2nπ I₀(ν)²)`.
pub fn amise(nu: f64, n: usize, curvature: f64) -> f64 {
    let (bias, var) = amise_terms(nu, n, curvature);
    bias + var
}

/// Bias and variance parts of [`amise`].
pub fn amise_terms(nu: f64, n: usize, curvature: f64) -> (f64, f64) {
    let i0 = bessel_ie(0, nu);
    let shrink = 1.0 - bessel_ie(2, nu) / i0;
    let bias = shrink * shrink * curvature / 16.0;
    let var = bessel_ie(0, 2.0 * nu) / (2.0 * n as f64 * PI * i0 * i0);
    (bias, var)
}

/// Minimizes [`amise`] over the search domain.
pub fn minimize_amise(n: usize, curvature: f64, domain: &NuSearchDomain) -> ProbeOutcome {
    search(|nu| amise(nu, n, curvature), domain).0
}

/// `[3n κ² I₂(2κ) / (4√π I₀(κ)²)]^{2/5}`, capped at `KAPPA_CAP`.
pub fn rule_of_thumb_from_kappa(kappa: f64, n: usize) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let i0 = bessel_ie(0, kappa);
    let inner = 3.0 * n as f64 * kappa * kappa * bessel_ie(2, 2.0 * kappa)
        / (4.0 * PI.sqrt() * i0 * i0);
    inner.powf(0.4).min(KAPPA_CAP)
}

pub fn rule_of_thumb(sample: &AngleSample) -> Result<BandwidthResult> {
    let single = fit_single_von_mises(sample)?;
    Ok(BandwidthResult {
        nu: rule_of_thumb_from_kappa(single.component.kappa, sample.len()),
        selector: Selector::RuleOfThumb,
        objective: None,
        evaluations: 0,
        plug_in: None,
    })
}

/// Plug-in selector over the default candidate counts `M ∈ {2, 3, 4, 5}`.
pub fn plug_in(sample: &AngleSample, em: &EmConfig, domain: &NuSearchDomain) -> Result<BandwidthResult> {
    plug_in_with_candidates(sample, &DEFAULT_CANDIDATES, em, domain)
}

/// Fits mixture references for each candidate `M`, plugs the curvature of
/// the AIC-best usable fit into the AMISE and minimizes it. Falls back to
/// the rule of thumb when no candidate is usable.
pub fn plug_in_with_candidates(
    sample: &AngleSample,
    candidates: &[usize],
    em: &EmConfig,
    domain: &NuSearchDomain,
) -> Result<BandwidthResult> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    domain.validate()?;
    let selection = select_reference_mixture(sample, candidates, em)?;
    let aic_table = selection
        .candidates
        .iter()
        .map(|c| AicEntry {
            components: c.components,
            aic: c.aic(),
            curvature: c.curvature,
            invalid: c.invalid.clone(),
        })
        .collect();

    let Some((fit, curvature)) = selection.chosen() else {
        let mut rt = rule_of_thumb(sample)?;
        rt.selector = Selector::PlugIn;
        rt.plug_in = Some(PlugInDiagnostics {
            selected_components: None,
            curvature: None,
            aic_table,
            fallback: Some("no candidate mixture produced a valid AIC".into()),
        });
        return Ok(rt);
    };

    let (out, evaluations) = search(|nu| amise(nu, sample.len(), curvature), domain);
    Ok(BandwidthResult {
        nu: out.x,
        selector: Selector::PlugIn,
        objective: Some(out.value),
        evaluations,
        plug_in: Some(PlugInDiagnostics {
            selected_components: Some(fit.components),
            curvature: Some(curvature),
            aic_table,
            fallback: None,
        }),
    })
}

/// Leave-one-out log-likelihood `Σᵢ ln f̂₋ᵢ(Θᵢ; ν)` with pairwise cosines
/// cached, so each evaluation costs one exponential per pair.
pub struct LcvObjective {
    n: usize,
    // row-major n×n of cos(Θᵢ − Θⱼ) − rowmaxᵢ, diagonal unused
    shifted: Vec<f64>,
    row_max: Vec<f64>,
}

impl LcvObjective {
    pub fn new(sample: &AngleSample) -> Result<Self> {
        let n = sample.len();
        if n < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: n });
        }
        let sc: Vec<(f64, f64)> = sample.as_slice().iter().map(|t| t.sin_cos()).collect();
        let mut shifted = vec![0.0; n * n];
        let mut row_max = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let c = sc[i].1 * sc[j].1 + sc[i].0 * sc[j].0;
                    shifted[i * n + j] = c;
                    row_max[i] = row_max[i].max(c);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                shifted[i * n + j] -= row_max[i];
            }
        }
        Ok(LcvObjective {
            n,
            shifted,
            row_max,
        })
    }

    pub fn value(&self, nu: f64) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            let row = &self.shifted[i * n..(i + 1) * n];
            let s: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, d)| (nu * d).exp())
                .sum();
            total += nu * (self.row_max[i] - 1.0) + s.ln();
        }
        total - n as f64 * ((n - 1) as f64 * TAU * bessel_ie(0, nu)).ln()
    }
}

/// Direct evaluation of the log-LCV criterion, for checking.
pub fn lcv_objective(sample: &AngleSample, nu: f64) -> Result<f64> {
    Ok(LcvObjective::new(sample)?.value(nu))
}

pub fn lcv(sample: &AngleSample, domain: &NuSearchDomain) -> Result<BandwidthResult> {
    domain.validate()?;
    let objective = LcvObjective::new(sample)?;
    let (out, evaluations) = search(|nu| -objective.value(nu), domain);
    Ok(BandwidthResult {
        nu: out.x,
        selector: Selector::Lcv,
        objective: Some(-out.value),
        evaluations,
        plug_in: None,
    })
}

/// Default benchmark grid: 121 log-spaced values over `[0.01, 1000]`.
pub fn default_oracle_grid() -> Vec<f64> {
    crate::optimize::log_space(0.01, 1000.0, 121)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub nu0: f64,
    pub mise0: f64,
    /// Mean ISE at every grid value.
    pub curve: Vec<(f64, f64)>,
}

/// Averages ISE over the given samples for every grid value; the same
/// samples are used at every ν.
pub fn oracle_from_samples(
    truth: &DensityGrid,
    samples: &[AngleSample],
    nu_grid: &[f64],
) -> Result<OracleResult> {
    if samples.is_empty() || nu_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "oracle needs at least one replicate and one grid value".into(),
        ));
    }
    let spectral = SpectralIse::new(truth);
    let mut sums = vec![0.0; nu_grid.len()];
    for s in samples {
        let coeffs = spectral.sample_coefficients(s)?;
        for (acc, &nu) in sums.iter_mut().zip(nu_grid) {
            *acc += spectral.ise(&coeffs, nu);
        }
    }
    let reps = samples.len() as f64;
    let curve: Vec<(f64, f64)> = nu_grid.iter().zip(&sums).map(|(&nu, &s)| (nu, s / reps)).collect();
    let (nu0, mise0) = curve
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    Ok(OracleResult { nu0, mise0, curve })
}

/// Benchmark bandwidth: the grid value minimizing the average ISE over
/// `replicates` fresh samples of size `n` (replicate `r` uses stream `r`).
pub fn oracle_bandwidth(
    model: &ModelSpec,
    n: usize,
    replicates: usize,
    seed: u64,
    nu_grid: &[f64],
    gridsize: usize,
) -> Result<OracleResult> {
    let truth = DensityGrid::from_values(density_on_grid(model, gridsize))?;
    let samples: Vec<AngleSample> = (0..replicates as u64)
        .map(|r| model.sample(n, &mut stream_rng(seed, r)))
        .collect();
    oracle_from_samples(&truth, &samples, nu_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::{ise, KdeFit, DEFAULT_GRIDSIZE};
    use crate::models::{model, ModelId};
    use crate::optimize::log_space;

    fn sample(v: &[f64]) -> AngleSample {
        AngleSample::from_radians(v.iter().copied()).unwrap()
    }

    #[test]
    fn selector_codes_round_trip() {
        for s in Selector::ALL {
            assert_eq!(s.code().parse::<Selector>().unwrap(), s);
        }
        assert!("XX".parse::<Selector>().is_err());
    }

    #[test]
    fn variance_term_alone_increases() {
        let grid = log_space(1.0, 100.0, 200);
        let v: Vec<f64> = grid.iter().map(|&nu| amise(nu, 100, 0.0)).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn amise_regression_value() {
        // mpmath with R = 0.05131, ν = 4, n = 100
        let got = amise(4.0, 100, 0.05131);
        assert!((got - 0.005_925_236_651_395_054).abs() < 1e-15);
    }

    #[test]
    fn amise_large_nu_matches_surrogate() {
        let r = 0.05131;
        let exact = amise(400.0, 100, r);
        let surrogate = r / (4.0 * 400.0 * 400.0) + 400f64.sqrt() / (2.0 * PI.sqrt() * 100.0);
        assert!(((exact - surrogate) / surrogate).abs() < 0.01);
    }

    #[test]
    fn rule_of_thumb_injected_kappa() {
        // mpmath: [300 I₂(2) / (4√π I₀(1)²)]^{2/5}
        let nu = rule_of_thumb_from_kappa(1.0, 100);
        assert!((nu - 3.190_833_756_640_564_6).abs() < 1e-12);
    }

    #[test]
    fn rule_of_thumb_symmetric_sample_is_zero() {
        let s = sample(&[0.0, PI / 2.0, PI, 1.5 * PI]);
        assert!(rule_of_thumb(&s).unwrap().nu < 1e-20);
    }

    #[test]
    fn rule_of_thumb_saturated_is_capped() {
        let nu = rule_of_thumb(&sample(&[2.0; 10])).unwrap().nu;
        assert!(nu <= KAPPA_CAP && nu > 0.0);
    }

    #[test]
    fn lcv_two_point_baseline() {
        let s = sample(&[0.0, PI]);
        let base = 2.0 * (1.0 / TAU).ln();
        assert!((lcv_objective(&s, 0.0).unwrap() - base).abs() < 1e-14);
        let domain = NuSearchDomain {
            nu_min: 1e-3,
            nu_max: 100.0,
            probes: 50,
        };
        // Antipodal points: the leave-one-out likelihood peaks at nu -> 0.
        let res = lcv(&s, &domain).unwrap();
        let at_min = lcv_objective(&s, domain.nu_min).unwrap();
        assert!(res.objective.unwrap() >= at_min - 1e-12);
        assert!(res.nu < 1e-2);
        assert!(lcv(&sample(&[1.0]), &domain).is_err());
    }

    #[test]
    fn lcv_cache_matches_naive_sum() {
        let s = model(ModelId::new(2).unwrap()).sample(40, &mut stream_rng(3, 0));
        let obj = LcvObjective::new(&s).unwrap();
        for &nu in &[0.1, 2.0, 50.0, 2000.0] {
            let naive: f64 = (0..s.len())
                .map(|i| {
                    let rest: Vec<f64> = s
                        .as_slice()
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, &t)| t)
                        .collect();
                    let fit = KdeFit::new(AngleSample::from_radians(rest).unwrap(), nu).unwrap();
                    fit.evaluate(s.as_slice()[i]).ln()
                })
                .sum();
            let fast = obj.value(nu);
            assert!((fast - naive).abs() < 1e-9 * naive.abs().max(1.0), "ν={nu}");
        }
    }

    #[test]
    fn oracle_degenerate_reduction() {
        let m = model(ModelId::new(2).unwrap());
        let res = oracle_bandwidth(&m, 60, 1, 5, &[3.0], DEFAULT_GRIDSIZE).unwrap();
        let s = m.sample(60, &mut stream_rng(5, 0));
        let truth = DensityGrid::from_values(density_on_grid(&m, DEFAULT_GRIDSIZE)).unwrap();
        let direct = ise(&KdeFit::new(s, 3.0).unwrap().grid(DEFAULT_GRIDSIZE).unwrap(), &truth).unwrap();
        assert_eq!(res.nu0, 3.0);
        assert!((res.mise0 - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn plug_in_falls_back_on_tiny_sample() {
        let s = sample(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let domain = NuSearchDomain::for_sample_size(s.len());
        let res = plug_in(&s, &EmConfig::default(), &domain).unwrap();
        assert!(res.fell_back());
        assert_eq!(res.nu, rule_of_thumb(&s).unwrap().nu);
        assert_eq!(res.selector, Selector::PlugIn);
    }
}
