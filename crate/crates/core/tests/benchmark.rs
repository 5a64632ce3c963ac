use pedf_core::classification::ClassifierConfig;
use pedf_core::clustering::ClustererConfig;
use pedf_core::evaluation::{render_report_text, run_benchmark, write_report_csv, BenchConfig, ModelSpec};
use pedf_core::event_log::{generate_log, EventLog, GeneratorSpec};

fn chain() -> EventLog {
    let spec: GeneratorSpec = serde_json::from_str(
        r#"{
        "numeric_features": ["paid"],
        "nominal_features": ["step"],
        "duration_unit": "days",
        "edges": [
            {"from": "START", "to": "Create", "nominal": {"step": {"values": ["c"]}}},
            {"from": "Create", "to": "Send", "duration": {"dist": "constant", "value": 10},
             "numeric": {"paid": {"dist": "constant", "value": 0}}, "nominal": {"step": {"values": ["s"]}}},
            {"from": "Send", "to": "Pay", "duration": {"dist": "constant", "value": 5},
             "numeric": {"paid": {"dist": "constant", "value": 40}}, "nominal": {"step": {"values": ["p"]}}},
            {"from": "Pay", "to": "Close", "duration": {"dist": "constant", "value": 1}},
            {"from": "Close", "to": "END"}
        ]}"#,
    )
    .unwrap();
    generate_log(&spec, 40, 9).unwrap()
}

fn pedf(classifier: ClassifierConfig) -> ModelSpec {
    ModelSpec::Pedf { clusterer: ClustererConfig::KMeans { k: 5, max_iter: 100 }, classifier, seed: 1 }
}

fn models() -> Vec<ModelSpec> {
    vec![
        pedf(ClassifierConfig::NaiveBayes { laplace_alpha: 1.0 }),
        pedf(ClassifierConfig::RandomForest { n_trees: 10, max_depth: None, features_per_split: None }),
        ModelSpec::Markov,
        ModelSpec::Akom { order: 2 },
        ModelSpec::Lz78,
        ModelSpec::Ppm { max_order: 3 },
    ]
}

#[test]
fn deterministic_chain_scores_zero_everywhere() {
    let mut cfg = BenchConfig::new(models());
    cfg.dataset_name = "chain".into();
    let out = run_benchmark(&chain(), &cfg).unwrap();
    assert_eq!(out.report.rows.len(), cfg.models.len() * cfg.known_fractions.len());
    for row in &out.report.rows {
        assert_eq!(row.ee, 0, "{row:?}");
        assert_eq!(row.n_cases, 12);
        if row.model == "pedf" {
            assert_eq!((row.de, row.fe), (Some(0.0), Some(0.0)), "{row:?}");
        } else {
            assert_eq!((row.de, row.fe), (None, None));
        }
    }
    assert_eq!(out.timings.len(), cfg.models.len());
    assert_eq!(out.report.metadata["duration_unit"], "days");
}

#[test]
fn reports_are_reproducible() {
    let mut cfg = BenchConfig::new(models());
    cfg.known_fractions = vec![0.3, 0.6];
    let log = chain();
    let render = || {
        let out = run_benchmark(&log, &cfg).unwrap();
        let mut csv = Vec::new();
        write_report_csv(&out.report, &mut csv).unwrap();
        (csv, render_report_text(&out.report))
    };
    assert_eq!(render(), render());
}

#[test]
fn invalid_grid_is_rejected() {
    let mut cfg = BenchConfig::new(vec![ModelSpec::Markov]);
    cfg.train_fraction = 1.0;
    assert!(run_benchmark(&chain(), &cfg).is_err());
}
