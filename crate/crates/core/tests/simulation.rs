use circkde::bandwidth::Selector;
use circkde::models::ModelId;
use circkde::sim::{
    compare_to_reference, replicate_sample, run_experiment, ExperimentConfig, ReferenceTable,
    SimulationReport, Verdict,
};

fn id(i: u8) -> ModelId {
    ModelId::new(i).unwrap()
}

fn config(models: &[u8], ns: &[usize], reps: usize, selectors: &[Selector]) -> ExperimentConfig {
    ExperimentConfig {
        models: models.iter().map(|&m| id(m)).collect(),
        sample_sizes: ns.to_vec(),
        replicates: reps,
        selectors: selectors.to_vec(),
        ..ExperimentConfig::smoke()
    }
}

fn numbers(r: &SimulationReport) -> String {
    let mut r = r.clone();
    r.metadata.wall_time_secs = 0.0;
    r.to_json()
}

#[test]
fn identical_configs_give_identical_reports() {
    let cfg = config(&[5, 12], &[60], 6, &Selector::ALL);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(numbers(&a), numbers(&b));
    assert_eq!(a.metadata.config_hash, b.metadata.config_hash);
    assert_eq!(a.rows.len(), 8);
}

#[test]
fn replicate_samples_are_stable_and_distinct() {
    let a = replicate_sample(7, id(3), 50, 0);
    assert_eq!(a, replicate_sample(7, id(3), 50, 0));
    assert_ne!(a, replicate_sample(7, id(3), 50, 1));
    assert_ne!(a, replicate_sample(7, id(4), 50, 0));
    assert_ne!(a, replicate_sample(8, id(3), 50, 0));
}

#[test]
fn report_rows_are_well_formed() {
    let cfg = config(&[2, 9], &[50], 8, &Selector::ALL);
    let report = run_experiment(&cfg).unwrap();
    for row in &report.rows {
        assert!(row.mean_ise >= 0.0 && row.sd_ise >= 0.0);
        assert!(row.fallback_count <= row.replicates);
        assert_eq!(row.replicates + row.failures, 8);
    }
    let table = report.to_table();
    assert!(table.contains("n=50"));
    assert!(table.contains("M9"));
}

#[test]
fn rule_of_thumb_m7_matches_table_two() {
    let report = run_experiment(&config(&[7], &[250], 200, &[Selector::RuleOfThumb])).unwrap();
    let v = report.rows[0].mean_ise * 100.0;
    let se = 0.1786 / 200f64.sqrt();
    assert!((v - 10.6753).abs() <= 3.0 * se, "{v}");
}

#[test]
fn oracle_is_no_worse_than_selectors() {
    let report = run_experiment(&config(&[5, 13], &[100], 60, &Selector::ALL)).unwrap();
    for m in [5u8, 13] {
        let oracle = report.row(id(m), 100, Selector::Oracle).unwrap().mean_ise;
        for s in [Selector::RuleOfThumb, Selector::PlugIn, Selector::Lcv] {
            let row = report.row(id(m), 100, s).unwrap();
            let se = row.sd_ise / (row.replicates as f64).sqrt();
            assert!(oracle <= row.mean_ise + 2.0 * se, "M{m} {s}");
        }
    }
}

#[test]
fn oracle_improves_with_sample_size() {
    let report = run_experiment(&config(&[1, 7, 16], &[100, 500], 40, &[Selector::Oracle])).unwrap();
    for m in [1u8, 7, 16] {
        let small = report.row(id(m), 100, Selector::Oracle).unwrap().mean_ise;
        let large = report.row(id(m), 500, Selector::Oracle).unwrap().mean_ise;
        assert!(large < small, "M{m}: {large} vs {small}");
    }
}

#[test]
fn plug_in_beats_rule_of_thumb_on_m7() {
    let report = run_experiment(&config(
        &[7],
        &[100, 250, 500],
        40,
        &[Selector::RuleOfThumb, Selector::PlugIn],
    ))
    .unwrap();
    for n in [100, 250, 500] {
        let pi = report.row(id(7), n, Selector::PlugIn).unwrap().mean_ise;
        let rt = report.row(id(7), n, Selector::RuleOfThumb).unwrap().mean_ise;
        assert!(pi < rt, "n={n}");
    }
}

#[test]
fn fallback_is_rare_for_m3() {
    let report = run_experiment(&config(&[3], &[100], 200, &[Selector::PlugIn])).unwrap();
    let row = &report.rows[0];
    assert!((row.fallback_count as f64) < 0.03 * row.replicates as f64, "{}", row.fallback_count);
}

#[test]
fn corrupted_reference_fails_the_cell() {
    let report = run_experiment(&config(&[7], &[250], 20, &[Selector::RuleOfThumb])).unwrap();
    let good = compare_to_reference(&report, &ReferenceTable::published(), 3.0);
    assert_eq!(good[0].verdict, Verdict::Pass);
    let mut bad = ReferenceTable::published();
    for row in &mut bad.rows {
        if row.model == id(7) && row.n == 250 && row.selector == Selector::RuleOfThumb {
            row.mise_x100 = 20.0;
        }
    }
    let cmp = compare_to_reference(&report, &bad, 3.0);
    assert_eq!(cmp[0].verdict, Verdict::Fail);
    assert!(cmp[0].z.unwrap() < -10.0);
}
