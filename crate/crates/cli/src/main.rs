//! `circkde`: fit circular kernel density estimates, sample catalogue models
//! and run selector comparisons.

mod input;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use circkde::bandwidth::{lcv, plug_in, rule_of_thumb, BandwidthResult, NuSearchDomain, Selector};
use circkde::em::EmConfig;
use circkde::kde::{KdeFit, DEFAULT_GRIDSIZE};
use circkde::models::{catalogue, catalogue_json, model, CircularDensity, ModelId};
use circkde::rng::stream_rng;
use circkde::sim::{compare_to_reference, run_experiment, ExperimentConfig, ReferenceTable, Verdict};

use input::{format_angles, read_angles, InputError, Unit};

const EXIT_USAGE: u8 = 1;
const EXIT_REFERENCE: u8 = 2;
const EXIT_UNREADABLE: u8 = 3;
const EXIT_TOO_FEW: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser)]
#[command(name = "circkde", version, about = "Kernel density estimation for circular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the density of an angle file with one or more selectors.
    Fit(FitArgs),
    /// Draw a sample from a catalogue model.
    Sample(SampleArgs),
    /// Run the Monte Carlo selector comparison.
    Simulate(SimulateArgs),
    /// List the catalogue models.
    Models {
        /// Print the catalogue as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct FitArgs {
    /// File with one angle per line; `#` starts a comment line.
    input: PathBuf,
    /// Input angles are in degrees.
    #[arg(long)]
    degrees: bool,
    /// Comma-separated subset of RT, PI, LCV.
    #[arg(long, value_delimiter = ',', default_value = "RT,PI,LCV")]
    selectors: Vec<Selector>,
    #[arg(long, default_value_t = DEFAULT_GRIDSIZE)]
    gridsize: usize,
    #[arg(long, default_value_t = 18)]
    rose_bins: usize,
    /// Seed for the EM restarts of the plug-in selector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    /// Model id, M1 to M20.
    model: ModelId,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write angles in degrees.
    #[arg(long)]
    degrees: bool,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment configuration; flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the full twenty-model, 1000-replicate configuration.
    #[arg(long)]
    full: bool,
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelId>>,
    #[arg(long, value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    selectors: Option<Vec<Selector>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gridsize: Option<usize>,
    /// Compare with reference values: the bundled tables, or a CSV file.
    #[arg(long, num_args = 0..=1, value_name = "CSV")]
    reference: Option<Option<PathBuf>>,
    #[arg(long, default_value_t = 3.0)]
    k_sigma: f64,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        let code = match e {
            InputError::Unreadable { .. } => EXIT_UNREADABLE,
            InputError::BadLine { .. } => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<circkde::Error> for Failure {
    fn from(e: circkde::Error) -> Self {
        Failure::new(EXIT_RUNTIME, e.to_string())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::new(EXIT_RUNTIME, format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::new(EXIT_RUNTIME, format!("cannot create {}: {e}", dir.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct SelectorReport {
    #[serde(flatten)]
    result: BandwidthResult,
    density_file: String,
    local_maxima: usize,
}

#[derive(Serialize)]
struct FitReport {
    input: String,
    unit: &'static str,
    n: usize,
    gridsize: usize,
    seed: u64,
    selectors: Vec<SelectorReport>,
    rose_bins: Vec<usize>,
    rose_file: String,
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    let unit = Unit::from_flag(args.degrees);
    let sample = read_angles(&args.input, unit)?;
    if sample.len() < 2 {
        return Err(Failure::new(
            EXIT_TOO_FEW,
            format!("need at least 2 angles, {} has {}", args.input.display(), sample.len()),
        ));
    }
    if args.selectors.contains(&Selector::Oracle) {
        return Err(Failure::new(EXIT_USAGE, "ORACLE needs the true density; use RT, PI or LCV"));
    }
    if args.gridsize < 8 {
        return Err(Failure::new(EXIT_USAGE, "--gridsize must be at least 8"));
    }
    if args.rose_bins == 0 {
        return Err(Failure::new(EXIT_USAGE, "--rose-bins must be at least 1"));
    }
    ensure_dir(&args.output_dir)?;

    let domain = NuSearchDomain::for_sample_size(sample.len());
    let em = EmConfig::with_seed(args.seed);
    let mut reports = Vec::new();
    for &selector in &args.selectors {
        let result = match selector {
            Selector::RuleOfThumb => rule_of_thumb(&sample)?,
            Selector::PlugIn => plug_in(&sample, &em, &domain)?,
            Selector::Lcv => lcv(&sample, &domain)?,
            Selector::Oracle => unreachable!(),
        };
        let grid = KdeFit::new(sample.clone(), result.nu)?.grid(args.gridsize)?;
        let name = format!("density_{}.txt", selector.code());
        write_file(&args.output_dir.join(&name), &grid.to_text())?;
        println!("{:<4} nu = {:.6}{}", selector.code(), result.nu, describe_pi(&result));
        reports.push(SelectorReport {
            local_maxima: grid.local_maxima(),
            result,
            density_file: name,
        });
    }

    let counts = sample.rose_counts(args.rose_bins);
    let width = 360.0 / args.rose_bins as f64;
    let mut rose = String::from("# start_deg end_deg count\n");
    for (i, c) in counts.iter().enumerate() {
        rose.push_str(&format!("{} {} {c}\n", i as f64 * width, (i + 1) as f64 * width));
    }
    let rose_file = "rose.txt".to_string();
    write_file(&args.output_dir.join(&rose_file), &rose)?;

    let report = FitReport {
        input: args.input.display().to_string(),
        unit: unit.name(),
        n: sample.len(),
        gridsize: args.gridsize,
        seed: args.seed,
        selectors: reports,
        rose_bins: counts,
        rose_file,
    };
    write_file(&args.output_dir.join("fit_report.json"), &to_json(&report))
}

fn describe_pi(r: &BandwidthResult) -> String {
    let Some(d) = &r.plug_in else {
        return String::new();
    };
    match (&d.fallback, d.selected_components) {
        (Some(reason), _) => format!("  (fallback to RT: {reason})"),
        (None, Some(m)) => format!("  (reference mixture M = {m})"),
        (None, None) => String::new(),
    }
}

fn cmd_sample(args: SampleArgs) -> Result<(), Failure> {
    let unit = Unit::from_flag(args.degrees);
    let spec = model(args.model);
    let sample = spec.sample(args.n, &mut stream_rng(args.seed, 0));
    let header = format!(
        "{} n={} seed={} unit={}",
        args.model,
        args.n,
        args.seed,
        unit.name()
    );
    let text = format_angles(&sample, unit, &header);
    match args.output {
        Some(path) => write_file(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate_config(args: &SimulateArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_UNREADABLE, format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                Failure::new(EXIT_USAGE, format!("invalid config {}: {e}", path.display()))
            })?
        }
        None if args.full => ExperimentConfig::full(),
        None => ExperimentConfig::smoke(),
    };
    if let Some(v) = &args.models {
        cfg.models = v.clone();
    }
    if let Some(v) = &args.sample_sizes {
        cfg.sample_sizes = v.clone();
    }
    if let Some(v) = args.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = &args.selectors {
        cfg.selectors = v.clone();
    }
    if let Some(v) = args.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = args.gridsize {
        cfg.gridsize = v;
    }
    cfg.validate()
        .map_err(|e| Failure::new(EXIT_USAGE, format!("invalid configuration: {e}")))?;
    Ok(cfg)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = simulate_config(&args)?;
    let reference = match &args.reference {
        None => None,
        Some(None) => Some(ReferenceTable::published()),
        Some(Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_UNREADABLE, format!("cannot read {}: {e}", path.display()))
            })?;
            Some(
                ReferenceTable::parse(&text)
                    .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?,
            )
        }
    };
    ensure_dir(&args.output_dir)?;
    let report = run_experiment(&cfg)?;
    let table = report.to_table();
    print!("{table}");
    write_file(&args.output_dir.join("report.json"), &(report.to_json() + "\n"))?;
    write_file(&args.output_dir.join("table.txt"), &table)?;

    let Some(reference) = reference else {
        return Ok(());
    };
    let cells = compare_to_reference(&report, &reference, args.k_sigma);
    write_file(&args.output_dir.join("comparison.json"), &to_json(&cells))?;
    let failing: Vec<_> = cells.iter().filter(|c| c.verdict == Verdict::Fail).collect();
    for c in &cells {
        if c.verdict == Verdict::MissingReference {
            eprintln!("no reference for {} n={} {}", c.model, c.n, c.selector);
        }
    }
    for c in &failing {
        eprintln!(
            "FAIL {} n={} {}: observed {:.4}, reference {:.4} +/- {:.4}",
            c.model,
            c.n,
            c.selector,
            c.observed_x100,
            c.reference_x100.unwrap_or(f64::NAN),
            c.window_x100.unwrap_or(f64::NAN)
        );
    }
    if failing.is_empty() {
        println!("all {} compared cells within the reference window", cells.len());
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_REFERENCE,
            format!("{} of {} cells outside the reference window", failing.len(), cells.len()),
        ))
    }
}

fn cmd_models(json: bool) -> Result<(), Failure> {
    if json {
        println!("{}", catalogue_json()?);
    } else {
        for spec in catalogue() {
            println!("{:<4} {}", spec.id.to_string(), spec.describe());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Models { json } => cmd_models(json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
