//! Maximum-likelihood fitting of von Mises mixtures by EM, and AIC-based
//! choice of the number of components.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{circular_distance, Angle, AngleSample};
use crate::error::{Error, Result};
use crate::models::{VonMisesComponent, VonMisesMixture};
use crate::rng::{derive_stream, stream_rng};
use crate::special::{bessel_ie, inverse_mean_resultant_ratio, KappaEstimate};

pub const DEFAULT_CANDIDATES: [usize; 4] = [2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once `|ℓ_{t+1} − ℓ_t| / |ℓ_{t+1}|` drops below this.
    pub rel_tol: f64,
    pub n_restarts: usize,
    /// Seed for the restart initializations; each (M, restart) pair gets
    /// its own stream.
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 200,
            rel_tol: 1e-6,
            n_restarts: 5,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn with_seed(seed: u64) -> Self {
        EmConfig {
            seed,
            ..EmConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.rel_tol > 0.0) || self.n_restarts == 0 {
            return Err(Error::InvalidParameter(format!(
                "EM config needs max_iter >= 1, rel_tol > 0, n_restarts >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Why a fit cannot serve as a reference density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Invalidity {
    TinyWeight { component: usize, weight: f64 },
    SaturatedConcentration { component: usize, effective_members: f64 },
    TooFewObservations { needed: usize, got: usize },
    NonFiniteCurvature,
}

impl fmt::Display for Invalidity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invalidity::TinyWeight { component, weight } => {
                write!(f, "component {component} has weight {weight:.3e}")
            }
            Invalidity::SaturatedConcentration {
                component,
                effective_members,
            } => write!(
                f,
                "component {component} saturated with {effective_members:.2} effective members"
            ),
            Invalidity::TooFewObservations { needed, got } => {
                write!(f, "needs {needed} observations, got {got}")
            }
            Invalidity::NonFiniteCurvature => write!(f, "curvature integral not finite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub mixture: VonMisesMixture,
    pub log_likelihood: f64,
    pub components: usize,
    pub converged: bool,
    pub iterations: usize,
    pub aic: f64,
    pub invalid: Option<Invalidity>,
}

impl MixtureFit {
    pub fn is_valid(&self) -> bool {
        self.invalid.is_none()
    }
}

/// `2k − 2ℓ` with `k = 3M − 1` free parameters.
pub fn aic(log_likelihood: f64, components: usize) -> f64 {
    let k = 3.0 * components as f64 - 1.0;
    2.0 * k - 2.0 * log_likelihood
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleVonMisesFit {
    pub component: VonMisesComponent,
    pub rbar: f64,
    pub saturated: bool,
}

/// Closed-form maximum likelihood for one von Mises density.
pub fn fit_single_von_mises(sample: &AngleSample) -> Result<SingleVonMisesFit> {
    let (mu, rbar) = sample.mean_direction_and_length()?;
    let KappaEstimate { kappa, saturated } = inverse_mean_resultant_ratio(rbar);
    Ok(SingleVonMisesFit {
        component: VonMisesComponent::new(mu.radians(), kappa)?,
        rbar,
        saturated,
    })
}

/// Log-likelihood of `mix` on `sample`.
pub fn log_likelihood(sample: &AngleSample, mix: &VonMisesMixture) -> f64 {
    let data = Trig::new(sample);
    let params = Params::from_mixture(mix);
    let mut row = vec![0.0; params.len()];
    (0..data.len())
        .map(|i| params.log_terms(&data, i, &mut row))
        .sum()
}

/// Posterior component probabilities, one row per observation.
pub fn responsibilities(sample: &AngleSample, mix: &VonMisesMixture) -> Vec<Vec<f64>> {
    let data = Trig::new(sample);
    let params = Params::from_mixture(mix);
    let mut row = vec![0.0; params.len()];
    (0..data.len())
        .map(|i| {
            let lse = params.log_terms(&data, i, &mut row);
            row.iter().map(|l| (l - lse).exp()).collect()
        })
        .collect()
}

/// A single EM run from a given starting mixture.
#[derive(Debug, Clone)]
pub struct EmRun {
    pub fit: MixtureFit,
    /// Log-likelihood of every iterate, starting with the initial mixture.
    pub trace: Vec<f64>,
}

/// Runs EM from `initial` until the relative log-likelihood change falls
/// below `rel_tol` or `max_iter` M-steps have been taken.
pub fn em_from(sample: &AngleSample, initial: &VonMisesMixture, max_iter: usize, rel_tol: f64) -> EmRun {
    let data = Trig::new(sample);
    let n = data.len();
    let mut params = Params::from_mixture(initial);
    let m = params.len();
    let mut resp = vec![0.0; n * m];
    let mut ll = params.e_step(&data, &mut resp);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let mut saturated = vec![false; m];
    let mut members = params.alpha.iter().map(|a| a * n as f64).collect::<Vec<_>>();

    for iter in 1..=max_iter {
        let Some(step) = params.m_step(&data, &resp) else {
            break;
        };
        params = step.params;
        saturated = step.saturated;
        members = step.members;
        let next = params.e_step(&data, &mut resp);
        trace.push(next);
        iterations = iter;
        let change = (next - ll).abs() / next.abs().max(f64::MIN_POSITIVE);
        ll = next;
        if change < rel_tol {
            converged = true;
            break;
        }
    }

    let invalid = params.invalidity(n, &saturated, &members);
    let fit = MixtureFit {
        mixture: params.to_mixture(),
        log_likelihood: ll,
        components: m,
        converged,
        iterations,
        aic: aic(ll, m),
        invalid,
    };
    EmRun { fit, trace }
}

/// Fits an `m`-component mixture, keeping the best of `cfg.n_restarts`
/// seeded restarts. Valid fits are preferred over invalid ones; among
/// equals the larger log-likelihood wins.
pub fn em_fit(sample: &AngleSample, m: usize, cfg: &EmConfig) -> Result<MixtureFit> {
    cfg.validate()?;
    if m == 0 {
        return Err(Error::InvalidParameter("mixture needs at least one component".into()));
    }
    let n = sample.len();
    if n < 3 * m {
        return Err(Error::TooFewObservations { needed: 3 * m, got: n });
    }
    if m == 1 {
        let single = fit_single_von_mises(sample)?;
        let mixture = VonMisesMixture::single(single.component);
        let ll = log_likelihood(sample, &mixture);
        let invalid = (single.saturated && (n as f64) < 2.0).then_some(
            Invalidity::SaturatedConcentration {
                component: 0,
                effective_members: n as f64,
            },
        );
        return Ok(MixtureFit {
            mixture,
            log_likelihood: ll,
            components: 1,
            converged: true,
            iterations: 1,
            aic: aic(ll, 1),
            invalid,
        });
    }

    let mut best: Option<MixtureFit> = None;
    for restart in 0..cfg.n_restarts {
        let mut rng = stream_rng(cfg.seed, derive_stream(&[m as u64, restart as u64]));
        let init = farthest_point_start(sample, m, &mut rng);
        let run = em_from(sample, &init, cfg.max_iter, cfg.rel_tol);
        let better = match &best {
            None => true,
            Some(b) => match (run.fit.is_valid(), b.is_valid()) {
                (true, false) => true,
                (false, true) => false,
                _ => run.fit.log_likelihood > b.log_likelihood,
            },
        };
        if better {
            best = Some(run.fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Initial mixture: a random observation, then repeatedly the observation
/// farthest (in arc length) from the centres chosen so far; κ = 1 and equal
/// weights throughout.
pub fn farthest_point_start<R: Rng + ?Sized>(sample: &AngleSample, m: usize, rng: &mut R) -> VonMisesMixture {
    let pts = sample.as_slice();
    let mut centres = vec![pts[rng.random_range(0..pts.len())]];
    let mut nearest: Vec<f64> = pts.iter().map(|&p| circular_distance(p, centres[0])).collect();
    while centres.len() < m {
        let (idx, _) = nearest
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        let c = pts[idx];
        centres.push(c);
        for (d, &p) in nearest.iter_mut().zip(pts) {
            *d = d.min(circular_distance(p, c));
        }
    }
    let components = centres
        .into_iter()
        .map(|c| VonMisesComponent::new(c, 1.0).expect("valid start"))
        .collect();
    let w = 1.0 / m as f64;
    let mut weights = vec![w; m];
    // keep the sum exactly 1 for awkward m
    let tail: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - tail;
    VonMisesMixture::new(components, weights).expect("valid start")
}

/// Result of AIC selection over candidate component counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceSelection {
    pub candidates: Vec<CandidateOutcome>,
    /// Index into `candidates` of the chosen fit, if any candidate is usable.
    pub chosen: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub components: usize,
    pub fit: Option<MixtureFit>,
    pub curvature: Option<f64>,
    pub invalid: Option<Invalidity>,
}

impl CandidateOutcome {
    pub fn aic(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.aic)
    }

    pub fn is_usable(&self) -> bool {
        self.invalid.is_none() && self.fit.is_some() && self.curvature.is_some()
    }
}

impl ReferenceSelection {
    pub fn chosen(&self) -> Option<(&MixtureFit, f64)> {
        let c = &self.candidates[self.chosen?];
        Some((c.fit.as_ref()?, c.curvature?))
    }
}

/// Fits every candidate `M`, discards fits that are degenerate or whose
/// curvature integral is not finite, and keeps the smallest AIC among the
/// rest.
pub fn select_reference_mixture(
    sample: &AngleSample,
    candidates: &[usize],
    cfg: &EmConfig,
) -> Result<ReferenceSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate component counts".into()));
    }
    cfg.validate()?;
    let mut outcomes = Vec::with_capacity(candidates.len());
    for &m in candidates {
        let outcome = match em_fit(sample, m, cfg) {
            Ok(fit) => {
                let mut invalid = fit.invalid.clone();
                let curvature = if invalid.is_none() {
                    let c = fit.mixture.curvature_integral();
                    if c.is_none() {
                        invalid = Some(Invalidity::NonFiniteCurvature);
                    }
                    c
                } else {
                    None
                };
                CandidateOutcome {
                    components: m,
                    fit: Some(fit),
                    curvature,
                    invalid,
                }
            }
            Err(Error::TooFewObservations { needed, got }) => CandidateOutcome {
                components: m,
                fit: None,
                curvature: None,
                invalid: Some(Invalidity::TooFewObservations { needed, got }),
            },
            Err(e) => return Err(e),
        };
        outcomes.push(outcome);
    }
    let chosen = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.is_usable())
        .min_by(|a, b| a.1.aic().unwrap().total_cmp(&b.1.aic().unwrap()))
        .map(|(i, _)| i);
    Ok(ReferenceSelection {
        candidates: outcomes,
        chosen,
    })
}

// ---------------------------------------------------------------------------

struct Trig {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Trig {
    fn new(sample: &AngleSample) -> Self {
        let (sin, cos) = sample.as_slice().iter().map(|t| t.sin_cos()).unzip();
        Trig { cos, sin }
    }

    fn len(&self) -> usize {
        self.cos.len()
    }
}

#[derive(Clone)]
struct Params {
    alpha: Vec<f64>,
    mu: Vec<f64>,
    kappa: Vec<f64>,
    // per component: (cos μ, sin μ, ln α − ln 2π − ln(e^{-κ}I₀(κ)) − κ)
    cache: Vec<(f64, f64, f64)>,
}

struct MStep {
    params: Params,
    saturated: Vec<bool>,
    members: Vec<f64>,
}

impl Params {
    fn new(alpha: Vec<f64>, mu: Vec<f64>, kappa: Vec<f64>) -> Self {
        let cache = alpha
            .iter()
            .zip(&mu)
            .zip(&kappa)
            .map(|((a, m), k)| {
                let (s, c) = m.sin_cos();
                (c, s, a.ln() - TAU.ln() - bessel_ie(0, *k).ln() - k)
            })
            .collect();
        Params {
            alpha,
            mu,
            kappa,
            cache,
        }
    }

    fn from_mixture(mix: &VonMisesMixture) -> Self {
        Params::new(
            mix.weights().to_vec(),
            mix.components().iter().map(|c| c.mu.radians()).collect(),
            mix.components().iter().map(|c| c.kappa).collect(),
        )
    }

    fn len(&self) -> usize {
        self.alpha.len()
    }

    /// Fills `row` with `ln α_j + ln vM(θ_i; μ_j, κ_j)` and returns their log-sum-exp.
    fn log_terms(&self, data: &Trig, i: usize, row: &mut [f64]) -> f64 {
        let (ci, si) = (data.cos[i], data.sin[i]);
        let mut max = f64::NEG_INFINITY;
        for ((r, &(cm, sm, off)), &k) in row.iter_mut().zip(&self.cache).zip(&self.kappa) {
            *r = off + k * (ci * cm + si * sm);
            max = max.max(*r);
        }
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + row.iter().map(|r| (r - max).exp()).sum::<f64>().ln()
    }

    fn e_step(&self, data: &Trig, resp: &mut [f64]) -> f64 {
        let m = self.len();
        let mut ll = 0.0;
        for (i, row) in resp.chunks_exact_mut(m).enumerate() {
            let (ci, si) = (data.cos[i], data.sin[i]);
            let mut max = f64::NEG_INFINITY;
            for ((r, &(cm, sm, off)), &k) in row.iter_mut().zip(&self.cache).zip(&self.kappa) {
                *r = off + k * (ci * cm + si * sm);
                max = max.max(*r);
            }
            let mut total = 0.0;
            for r in row.iter_mut() {
                *r = (*r - max).exp();
                total += *r;
            }
            ll += max + total.ln();
            for r in row.iter_mut() {
                *r /= total;
            }
        }
        ll
    }

    fn m_step(&self, data: &Trig, resp: &[f64]) -> Option<MStep> {
        let m = self.len();
        let n = data.len();
        let mut nj = vec![0.0; m];
        let mut cj = vec![0.0; m];
        let mut sj = vec![0.0; m];
        for (i, row) in resp.chunks_exact(m).enumerate() {
            for j in 0..m {
                nj[j] += row[j];
                cj[j] += row[j] * data.cos[i];
                sj[j] += row[j] * data.sin[i];
            }
        }
        if nj.iter().any(|&x| !(x > 1e-300)) {
            return None;
        }
        let total: f64 = nj.iter().sum();
        let alpha: Vec<f64> = nj.iter().map(|x| x / total).collect();
        let mut mu = Vec::with_capacity(m);
        let mut kappa = Vec::with_capacity(m);
        let mut saturated = Vec::with_capacity(m);
        for j in 0..m {
            mu.push(Angle::new(sj[j].atan2(cj[j])).radians());
            let rbar = (cj[j].hypot(sj[j]) / nj[j]).min(1.0);
            let est = inverse_mean_resultant_ratio(rbar);
            kappa.push(est.kappa);
            saturated.push(est.saturated);
        }
        debug_assert_eq!(n, resp.len() / m);
        Some(MStep {
            params: Params::new(alpha, mu, kappa),
            saturated,
            members: nj,
        })
    }

    fn invalidity(&self, n: usize, saturated: &[bool], members: &[f64]) -> Option<Invalidity> {
        let floor = 1.0 / (10.0 * n as f64);
        for (j, &a) in self.alpha.iter().enumerate() {
            if a < floor {
                return Some(Invalidity::TinyWeight { component: j, weight: a });
            }
        }
        for (j, (&sat, &mem)) in saturated.iter().zip(members).enumerate() {
            if sat && mem < 2.0 {
                return Some(Invalidity::SaturatedConcentration {
                    component: j,
                    effective_members: mem,
                });
            }
        }
        None
    }

    fn to_mixture(&self) -> VonMisesMixture {
        let floor = 1e-300;
        let w: Vec<f64> = self.alpha.iter().map(|a| a.max(floor)).collect();
        let total: f64 = w.iter().sum();
        let components = self
            .mu
            .iter()
            .zip(&self.kappa)
            .map(|(&m, &k)| VonMisesComponent::new(m, k).expect("EM keeps parameters in range"))
            .collect();
        let mut weights: Vec<f64> = w.iter().map(|x| x / total).collect();
        let tail: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - tail;
        VonMisesMixture::new(components, weights).expect("EM keeps weights normalized")
    }
}
