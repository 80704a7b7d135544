//! Monte Carlo comparison of bandwidth selectors.
//!
//! For every (model, n) cell, replicate samples are drawn from streams derived
//! from `(base_seed, model, n, replicate)` and shared by all selectors. Each
//! selector's estimate is evaluated on the grid and compared with the true
//! density by ISE; the oracle picks the grid concentration with the smallest
//! ISE averaged over the same replicates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::AngleSample;
use crate::bandwidth::{
    default_oracle_grid, lcv, oracle_from_samples, plug_in, rule_of_thumb, BandwidthResult,
    NuSearchDomain, Selector,
};
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::kde::{ise, DensityGrid, KdeFit, SpectralIse, DEFAULT_GRIDSIZE};
use crate::models::{density_on_grid, model, CircularDensity, ModelId};
use crate::rng::{derive_stream, mix64, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: Vec<ModelId>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub selectors: Vec<Selector>,
    pub base_seed: u64,
    pub gridsize: usize,
    pub em: EmConfig,
    /// `None` uses [`NuSearchDomain::for_sample_size`] per cell.
    pub nu_domain: Option<NuSearchDomain>,
    pub oracle_grid: Vec<f64>,
}

pub const SMOKE_MODELS: [u8; 6] = [1, 2, 5, 7, 12, 20];

impl ExperimentConfig {
    /// Desk-scale defaults: six models, n ∈ {100, 250}, 200 replicates.
    pub fn smoke() -> Self {
        ExperimentConfig {
            models: SMOKE_MODELS.iter().map(|&i| ModelId::new(i).unwrap()).collect(),
            sample_sizes: vec![100, 250],
            replicates: 200,
            selectors: Selector::ALL.to_vec(),
            base_seed: 20_130_101,
            gridsize: DEFAULT_GRIDSIZE,
            em: EmConfig::default(),
            nu_domain: None,
            oracle_grid: default_oracle_grid(),
        }
    }

    /// All twenty models, n ∈ {100, 250, 500}, 1000 replicates.
    pub fn full() -> Self {
        ExperimentConfig {
            models: ModelId::all().collect(),
            sample_sizes: vec![100, 250, 500],
            replicates: 1000,
            ..ExperimentConfig::smoke()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.models.is_empty() {
            return bad("models must not be empty");
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return bad("sample_sizes must be non-empty and positive");
        }
        if self.selectors.is_empty() {
            return bad("selectors must not be empty");
        }
        if self.gridsize < 8 {
            return bad("gridsize must be at least 8");
        }
        if self.selectors.contains(&Selector::Oracle)
            && (self.oracle_grid.is_empty() || self.oracle_grid.iter().any(|&v| !(v >= 0.0)))
        {
            return bad("oracle_grid must be non-empty and non-negative");
        }
        self.em.validate()?;
        if let Some(d) = &self.nu_domain {
            d.validate()?;
        }
        Ok(())
    }

    /// FNV-1a over the JSON form; identifies a configuration in reports.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelId,
    pub n: usize,
    pub selector: Selector,
    pub mean_ise: f64,
    pub sd_ise: f64,
    /// Replicates that produced an ISE.
    pub replicates: usize,
    pub failures: usize,
    pub fallback_count: usize,
    pub mean_selected_m: Option<f64>,
    pub mean_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub base_seed: u64,
    pub config_hash: String,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
}

impl SimulationReport {
    pub fn row(&self, model: ModelId, n: usize, selector: Selector) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.n == n && r.selector == selector)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One block per sample size in the layout of the published tables:
    /// MISE ×100 with the standard deviation ×100 in parentheses.
    pub fn to_table(&self) -> String {
        let order = [
            Selector::Oracle,
            Selector::RuleOfThumb,
            Selector::PlugIn,
            Selector::Lcv,
        ];
        let present: Vec<Selector> = order
            .into_iter()
            .filter(|s| self.rows.iter().any(|r| r.selector == *s))
            .collect();
        let mut by_n: BTreeMap<usize, BTreeMap<ModelId, Vec<&ReportRow>>> = BTreeMap::new();
        for r in &self.rows {
            by_n.entry(r.n).or_default().entry(r.model).or_default().push(r);
        }
        let mut out = String::new();
        for (n, models) in by_n {
            let _ = write!(out, "{:<8}", format!("n={n}"));
            for s in &present {
                let head = match s {
                    Selector::Oracle => "MISE(nu0)".to_string(),
                    other => format!("MISE({other})"),
                };
                let _ = write!(out, " | {head:>18}");
            }
            out.push('\n');
            for (model, rows) in models {
                let _ = write!(out, "{:<8}", model.to_string());
                for s in &present {
                    let cell = rows.iter().find(|r| r.selector == *s).map(|r| {
                        if *s == Selector::Oracle {
                            format!("{:.4}", 100.0 * r.mean_ise)
                        } else {
                            format!("{:.4} ({:.4})", 100.0 * r.mean_ise, 100.0 * r.sd_ise)
                        }
                    });
                    let _ = write!(out, " | {:>18}", cell.unwrap_or_else(|| "-".into()));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

struct SelectorOutcome {
    nu: f64,
    ise: f64,
    fell_back: bool,
    selected_m: Option<usize>,
}

fn replicate_stream(model: ModelId, n: usize, replicate: usize) -> u64 {
    derive_stream(&[model.index() as u64, n as u64, replicate as u64])
}

/// The sample a given replicate of a cell uses.
pub fn replicate_sample(base_seed: u64, model: ModelId, n: usize, replicate: usize) -> AngleSample {
    let spec = crate::models::model(model);
    spec.sample(n, &mut stream_rng(base_seed, replicate_stream(model, n, replicate)))
}

fn run_selector(
    selector: Selector,
    sample: &AngleSample,
    em: &EmConfig,
    domain: &NuSearchDomain,
) -> Result<BandwidthResult> {
    match selector {
        Selector::RuleOfThumb => rule_of_thumb(sample),
        Selector::PlugIn => plug_in(sample, em, domain),
        Selector::Lcv => lcv(sample, domain),
        Selector::Oracle => unreachable!("oracle is handled per cell"),
    }
}

fn evaluate(
    selector: Selector,
    sample: &AngleSample,
    truth: &DensityGrid,
    gridsize: usize,
    em: &EmConfig,
    domain: &NuSearchDomain,
) -> Result<SelectorOutcome> {
    let res = run_selector(selector, sample, em, domain)?;
    let fit = KdeFit::new(sample.clone(), res.nu)?;
    let value = ise(&fit.grid(gridsize)?, truth)?;
    Ok(SelectorOutcome {
        nu: res.nu,
        ise: value,
        fell_back: res.fell_back(),
        selected_m: res.plug_in.as_ref().and_then(|d| d.selected_components),
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn aggregate(
    model: ModelId,
    n: usize,
    selector: Selector,
    outcomes: &[Option<SelectorOutcome>],
) -> ReportRow {
    let ok: Vec<&SelectorOutcome> = outcomes.iter().flatten().collect();
    let ises: Vec<f64> = ok.iter().map(|o| o.ise).collect();
    let (mean_ise, sd_ise) = mean_sd(&ises);
    let ms: Vec<f64> = ok.iter().filter_map(|o| o.selected_m.map(|m| m as f64)).collect();
    ReportRow {
        model,
        n,
        selector,
        mean_ise,
        sd_ise,
        replicates: ok.len(),
        failures: outcomes.len() - ok.len(),
        fallback_count: ok.iter().filter(|o| o.fell_back).count(),
        mean_selected_m: (!ms.is_empty()).then(|| ms.iter().sum::<f64>() / ms.len() as f64),
        mean_nu: mean_sd(&ok.iter().map(|o| o.nu).collect::<Vec<_>>()).0,
    }
}

/// Runs every (model, n, selector) cell of the configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rows = Vec::new();
    for &model_id in &cfg.models {
        let spec = model(model_id);
        let truth = DensityGrid::from_values(density_on_grid(&spec, cfg.gridsize))?;
        for &n in &cfg.sample_sizes {
            let domain = cfg.nu_domain.unwrap_or_else(|| NuSearchDomain::for_sample_size(n));
            let samples: Vec<AngleSample> = (0..cfg.replicates)
                .map(|r| replicate_sample(cfg.base_seed, model_id, n, r))
                .collect();
            let data_driven: Vec<Selector> = cfg
                .selectors
                .iter()
                .copied()
                .filter(|s| *s != Selector::Oracle)
                .collect();
            let per_replicate: Vec<Vec<Option<SelectorOutcome>>> = samples
                .par_iter()
                .enumerate()
                .map(|(r, sample)| {
                    let em = EmConfig {
                        seed: mix64(cfg.base_seed ^ replicate_stream(model_id, n, r)),
                        ..cfg.em
                    };
                    data_driven
                        .iter()
                        .map(|&s| evaluate(s, sample, &truth, cfg.gridsize, &em, &domain).ok())
                        .collect()
                })
                .collect();
            for &selector in &cfg.selectors {
                if selector == Selector::Oracle {
                    rows.push(oracle_row(model_id, n, &truth, &samples, &cfg.oracle_grid)?);
                    continue;
                }
                let idx = data_driven.iter().position(|s| *s == selector).unwrap();
                let column: Vec<Option<SelectorOutcome>> = per_replicate
                    .iter()
                    .map(|outs| {
                        outs[idx].as_ref().map(|o| SelectorOutcome {
                            nu: o.nu,
                            ise: o.ise,
                            fell_back: o.fell_back,
                            selected_m: o.selected_m,
                        })
                    })
                    .collect();
                rows.push(aggregate(model_id, n, selector, &column));
            }
        }
    }
    Ok(SimulationReport {
        rows,
        metadata: ReportMetadata {
            base_seed: cfg.base_seed,
            config_hash: cfg.fingerprint(),
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
    })
}

fn oracle_row(
    model: ModelId,
    n: usize,
    truth: &DensityGrid,
    samples: &[AngleSample],
    grid: &[f64],
) -> Result<ReportRow> {
    let oracle = oracle_from_samples(truth, samples, grid)?;
    let spectral = SpectralIse::new(truth);
    let ises = samples
        .iter()
        .map(|s| Ok(spectral.ise(&spectral.sample_coefficients(s)?, oracle.nu0)))
        .collect::<Result<Vec<f64>>>()?;
    let (mean_ise, sd_ise) = mean_sd(&ises);
    Ok(ReportRow {
        model,
        n,
        selector: Selector::Oracle,
        mean_ise,
        sd_ise,
        replicates: samples.len(),
        failures: 0,
        fallback_count: 0,
        mean_selected_m: None,
        mean_nu: oracle.nu0,
    })
}

// ---------------------------------------------------------------------------
// Reference values

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub model: ModelId,
    pub n: usize,
    pub selector: Selector,
    pub mise_x100: f64,
    pub sd_x100: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub rows: Vec<ReferenceRow>,
}

const PUBLISHED_TABLES: &str = include_str!("../data/reference_tables.csv");

impl ReferenceTable {
    /// The published values shipped with the crate.
    pub fn published() -> Self {
        Self::parse(PUBLISHED_TABLES).expect("bundled reference table parses")
    }

    /// CSV with header `model,n,selector,mise_x100,sd_x100`; `#` lines are
    /// comments and an empty `sd_x100` means no standard deviation.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with("model") {
                    continue;
                }
            }
            let err = |message: String| Error::ReferenceParse {
                line: line_no,
                message,
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(err(format!("expected 5 fields, got {}", f.len())));
            }
            let model = f[0].parse::<ModelId>().map_err(|e| err(e.to_string()))?;
            let n = f[1].parse::<usize>().map_err(|e| err(e.to_string()))?;
            let selector = f[2].parse::<Selector>().map_err(|e| err(e.to_string()))?;
            let mise_x100 = f[3].parse::<f64>().map_err(|e| err(e.to_string()))?;
            let sd_x100 = if f[4].is_empty() {
                None
            } else {
                Some(f[4].parse::<f64>().map_err(|e| err(e.to_string()))?)
            };
            rows.push(ReferenceRow {
                model,
                n,
                selector,
                mise_x100,
                sd_x100,
            });
        }
        Ok(ReferenceTable { rows })
    }

    pub fn get(&self, model: ModelId, n: usize, selector: Selector) -> Option<&ReferenceRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.n == n && r.selector == selector)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    MissingReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellComparison {
    pub model: ModelId,
    pub n: usize,
    pub selector: Selector,
    pub observed_x100: f64,
    pub reference_x100: Option<f64>,
    /// Half-width of the acceptance window, ×100.
    pub window_x100: Option<f64>,
    pub z: Option<f64>,
    pub verdict: Verdict,
}

/// Relative slack added to the Monte Carlo window.
pub const REFERENCE_SLACK: f64 = 0.10;

/// Half a unit in the last printed digit of the reference values (×100).
pub const ROUNDING_SLACK: f64 = 0.5e-4;

/// Compares each report row with the reference: a cell passes when
/// `|observed − reference| ≤ k_sigma · sd/√replicates + 0.1 · reference`
/// plus [`ROUNDING_SLACK`] (all ×100). `z` is the deviation in Monte Carlo
/// standard errors.
pub fn compare_to_reference(
    report: &SimulationReport,
    reference: &ReferenceTable,
    k_sigma: f64,
) -> Vec<CellComparison> {
    report
        .rows
        .iter()
        .map(|row| {
            let observed_x100 = 100.0 * row.mean_ise;
            let Some(r) = reference.get(row.model, row.n, row.selector) else {
                return CellComparison {
                    model: row.model,
                    n: row.n,
                    selector: row.selector,
                    observed_x100,
                    reference_x100: None,
                    window_x100: None,
                    z: None,
                    verdict: Verdict::MissingReference,
                };
            };
            let se = r
                .sd_x100
                .map(|sd| sd / (row.replicates.max(1) as f64).sqrt());
            let window =
                k_sigma * se.unwrap_or(0.0) + REFERENCE_SLACK * r.mise_x100 + ROUNDING_SLACK;
            let dev = observed_x100 - r.mise_x100;
            let z = match se {
                Some(se) if se > 0.0 => Some(dev / se),
                _ if dev == 0.0 => Some(0.0),
                _ => None,
            };
            let pass = dev.abs() <= window && observed_x100.is_finite();
            CellComparison {
                model: row.model,
                n: row.n,
                selector: row.selector,
                observed_x100,
                reference_x100: Some(r.mise_x100),
                window_x100: Some(window),
                z,
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(i: u8) -> ModelId {
        ModelId::new(i).unwrap()
    }

    #[test]
    fn published_table_is_complete() {
        let t = ReferenceTable::published();
        assert_eq!(t.rows.len(), 240);
        let m7 = t.get(id(7), 100, Selector::RuleOfThumb).unwrap();
        assert_eq!(m7.mise_x100, 10.5487);
        assert_eq!(m7.sd_x100, Some(0.3990));
        let m5 = t.get(id(5), 250, Selector::PlugIn).unwrap();
        assert_eq!((m5.mise_x100, m5.sd_x100), (1.6012, Some(0.8717)));
        assert_eq!(t.get(id(2), 250, Selector::Oracle).unwrap().mise_x100, 0.2568);
        assert_eq!(t.get(id(2), 250, Selector::Oracle).unwrap().sd_x100, None);
    }

    #[test]
    fn reference_parse_errors_name_the_line() {
        let err = ReferenceTable::parse("model,n,selector,mise_x100,sd_x100\nM1,100,RT,abc,1\n")
            .unwrap_err();
        assert!(matches!(err, Error::ReferenceParse { line: 2, .. }));
    }

    fn report_with(mean: f64, reps: usize) -> SimulationReport {
        SimulationReport {
            rows: vec![ReportRow {
                model: id(5),
                n: 250,
                selector: Selector::PlugIn,
                mean_ise: mean,
                sd_ise: 0.0,
                replicates: reps,
                failures: 0,
                fallback_count: 0,
                mean_selected_m: None,
                mean_nu: 1.0,
            }],
            metadata: ReportMetadata {
                base_seed: 0,
                config_hash: String::new(),
                wall_time_secs: 0.0,
            },
        }
    }

    #[test]
    fn equal_to_reference_passes_with_zero_z() {
        let c = compare_to_reference(&report_with(0.016012, 200), &ReferenceTable::published(), 3.0);
        assert_eq!(c[0].verdict, Verdict::Pass);
        assert!(c[0].z.unwrap().abs() < 1e-9);
    }

    #[test]
    fn window_width() {
        let c = compare_to_reference(&report_with(0.016012, 200), &ReferenceTable::published(), 3.0);
        let expected = 3.0 * 0.8717 / 200f64.sqrt() + 0.16012 + ROUNDING_SLACK;
        assert!((c[0].window_x100.unwrap() - expected).abs() < 1e-12);
        let far = compare_to_reference(&report_with(0.03, 200), &ReferenceTable::published(), 3.0);
        assert_eq!(far[0].verdict, Verdict::Fail);
    }

    #[test]
    fn missing_reference_is_flagged() {
        let c = compare_to_reference(&report_with(0.01, 10), &ReferenceTable::default(), 3.0);
        assert_eq!(c[0].verdict, Verdict::MissingReference);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::smoke();
        assert!(cfg.validate().is_ok());
        cfg.replicates = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::smoke();
        cfg.oracle_grid.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_replicate_rule_of_thumb() {
        let cfg = ExperimentConfig {
            models: vec![id(1)],
            sample_sizes: vec![50],
            replicates: 1,
            selectors: vec![Selector::RuleOfThumb],
            ..ExperimentConfig::smoke()
        };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].sd_ise, 0.0);
        assert_eq!(report.rows[0].replicates, 1);
    }
}
