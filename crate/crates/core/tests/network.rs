use pedf_core::classification::ClassifierConfig;
use pedf_core::clustering::ClustererConfig;
use pedf_core::event_log::{generate_log, truncate_prefix, Case, EventLog, GeneratorSpec};
use pedf_core::features::{LinkRef, MixedVector, UNCHANGED};
use pedf_core::network::{
    build_skeleton, NetworkError, PedfModel, PredictOptions, Termination, TrainingConfig, FORMAT_VERSION,
};

fn spec(json: &str) -> GeneratorSpec {
    serde_json::from_str(json).unwrap()
}

fn chain_log(n: usize) -> EventLog {
    let spec = spec(
        r#"{
        "numeric_features": ["amount"],
        "nominal_features": ["status"],
        "duration_unit": "hours",
        "edges": [
            {"from": "START", "to": "A", "numeric": {"amount": {"dist": "constant", "value": 100}},
             "nominal": {"status": {"values": ["open"]}}},
            {"from": "A", "to": "B", "duration": {"dist": "constant", "value": 2},
             "numeric": {"amount": {"dist": "constant", "value": -30}}, "nominal": {"status": {"values": ["partial"]}}},
            {"from": "B", "to": "C", "duration": {"dist": "constant", "value": 3},
             "numeric": {"amount": {"dist": "constant", "value": -70}}, "nominal": {"status": {"values": ["paid"]}}},
            {"from": "C", "to": "END"}
        ]}"#,
    );
    generate_log(&spec, n, 7).unwrap()
}

fn branching_log(n: usize, seed: u64) -> EventLog {
    let spec = spec(
        r#"{
        "numeric_features": ["amount"],
        "edges": [
            {"from": "START", "to": "A", "weight": 2, "numeric": {"amount": {"dist": "uniform", "low": 0, "high": 50}}},
            {"from": "START", "to": "C", "numeric": {"amount": {"dist": "uniform", "low": 50, "high": 100}}},
            {"from": "A", "to": "B", "duration": {"dist": "exponential", "mean": 1}},
            {"from": "C", "to": "B", "duration": {"dist": "exponential", "mean": 2}},
            {"from": "B", "to": "D", "weight": 1, "duration": {"dist": "uniform", "low": 1, "high": 4}},
            {"from": "B", "to": "E", "weight": 1, "duration": {"dist": "uniform", "low": 1, "high": 4}},
            {"from": "D", "to": "END"},
            {"from": "E", "to": "A", "weight": 1},
            {"from": "E", "to": "END", "weight": 3}
        ]}"#,
    );
    generate_log(&spec, n, seed).unwrap()
}

fn config(clusterer: ClustererConfig, classifier: ClassifierConfig) -> TrainingConfig {
    TrainingConfig { clusterer, classifier, seed: 11 }
}

fn nb_kmeans(k: usize) -> TrainingConfig {
    config(ClustererConfig::KMeans { k, max_iter: 100 }, ClassifierConfig::NaiveBayes { laplace_alpha: 1.0 })
}

fn rf_kmeans(k: usize) -> TrainingConfig {
    config(
        ClustererConfig::KMeans { k, max_iter: 100 },
        ClassifierConfig::RandomForest { n_trees: 15, max_depth: None, features_per_split: None },
    )
}

fn train(log: &EventLog, cfg: TrainingConfig) -> PedfModel {
    PedfModel::train(build_skeleton(log).unwrap(), cfg).unwrap()
}

fn prefix(case: &Case, n_real: usize) -> Case {
    Case { id: case.id.clone(), records: case.records[..=n_real].to_vec() }
}

#[test]
fn chain_log_has_four_real_nodes_and_boundaries() {
    let model = train(&chain_log(5), nb_kmeans(3));
    let nodes: Vec<&str> = model.skeleton().nodes().iter().map(String::as_str).collect();
    assert_eq!(nodes, ["A", "B", "C", "END", "START"]);
    // every link saw a single distinct transition, so k collapses to 1
    assert!(model.cluster_counts().iter().all(|(_, k)| *k == 1));
}

#[test]
fn chain_prediction_matches_hand_trace() {
    let log = chain_log(5);
    let model = train(&log, nb_kmeans(3));
    let out = model.predict_case(&prefix(&log.cases[0], 1), &PredictOptions::default()).unwrap();
    assert_eq!(out.events, ["B", "C", "END"]);
    assert_eq!(out.durations, [7200.0, 10800.0, 0.0]);
    assert_eq!(
        out.features,
        [
            MixedVector::new(vec![-30.0], vec!["partial".into()]),
            MixedVector::new(vec![-70.0], vec!["paid".into()]),
            MixedVector::new(vec![0.0], vec![UNCHANGED.into()]),
        ]
    );
    let last = out.states.last().unwrap();
    assert_eq!((last.node.as_str(), last.duration, last.numeric[0]), ("END", 18000.0, 0.0));
    assert_eq!(last.nominal, ["paid"]);
    assert_eq!(out.terminated_by, Termination::End);
    assert_eq!(out.real_len(), 2);
}

#[test]
fn start_only_prefix_predicts_whole_case() {
    let log = chain_log(3);
    let model = train(&log, nb_kmeans(2));
    let out = model.predict_case(&prefix(&log.cases[0], 0), &PredictOptions::default()).unwrap();
    assert_eq!(out.events, ["A", "B", "C", "END"]);
}

#[test]
fn finished_prefix_predicts_nothing() {
    let log = chain_log(3);
    let model = train(&log, nb_kmeans(2));
    let out = model.predict_case(&log.cases[0], &PredictOptions::default()).unwrap();
    assert!(out.events.is_empty());
    assert_eq!(out.terminated_by, Termination::End);
}

#[test]
fn unknown_prefix_event_is_reported() {
    let log = chain_log(3);
    let model = train(&log, nb_kmeans(2));
    let mut p = prefix(&log.cases[0], 2);
    p.records[2].label = "Z".into();
    assert_eq!(model.predict_case(&p, &PredictOptions::default()).unwrap_err(), NetworkError::UnknownEvent("Z".into()));
}

#[test]
fn cap_bounds_cyclic_predictions() {
    let spec = spec(
        r#"{"edges": [
            {"from": "START", "to": "A"},
            {"from": "A", "to": "A", "weight": 20},
            {"from": "A", "to": "END", "weight": 1}
        ]}"#,
    );
    let log = generate_log(&spec, 40, 3).unwrap();
    let model = train(&log, nb_kmeans(2));
    let out = model.predict_case(&prefix(&log.cases[0], 1), &PredictOptions { cap: 10, sample_seed: None }).unwrap();
    assert_eq!(out.events.len(), 10);
    assert!(out.events.iter().all(|e| e == "A"));
    assert_eq!(out.terminated_by, Termination::Cap);
}

#[test]
fn sampling_is_reproducible_per_seed() {
    let log = branching_log(200, 1);
    let model = train(&log, nb_kmeans(3));
    let p = prefix(&log.cases[0], 1);
    let opts = |s| PredictOptions { cap: 10, sample_seed: Some(s) };
    let runs: Vec<Vec<String>> = (0..20).map(|s| model.predict_case(&p, &opts(s)).unwrap().events).collect();
    for (s, events) in runs.iter().enumerate() {
        assert_eq!(&model.predict_case(&p, &opts(s as u64)).unwrap().events, events);
    }
    assert!(runs.iter().any(|r| r != &runs[0]), "sampling never varied");
}

#[test]
fn round_trip_preserves_predictions() {
    let log = branching_log(150, 2);
    let model = train(&log, rf_kmeans(4));
    let bytes = model.to_bytes().unwrap();
    let back = PedfModel::from_bytes(&bytes).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.to_bytes().unwrap(), bytes);
    for case in log.cases.iter().take(30) {
        let (p, _) = truncate_prefix(case, 0.5).unwrap();
        let opts = PredictOptions::default();
        assert_eq!(back.predict_case(&p, &opts).unwrap(), model.predict_case(&p, &opts).unwrap());
    }
}

#[test]
fn damaged_model_files_are_rejected() {
    let model = train(&chain_log(3), nb_kmeans(2));
    let bytes = model.to_bytes().unwrap();
    let cut = &bytes[..bytes.len() / 2];
    assert!(matches!(PedfModel::from_bytes(cut), Err(NetworkError::CorruptModel(_))));
    assert!(matches!(PedfModel::from_bytes(b"not json"), Err(NetworkError::CorruptModel(_))));

    let mut doc: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    doc["version"] = serde_json::json!(FORMAT_VERSION + 1);
    let err = PedfModel::from_bytes(&serde_json::to_vec(&doc).unwrap()).unwrap_err();
    assert_eq!(err, NetworkError::VersionMismatch { found: FORMAT_VERSION + 1, expected: FORMAT_VERSION });
}

#[test]
fn untrained_model_cannot_be_saved() {
    let untrained = PedfModel::untrained(build_skeleton(&chain_log(2)).unwrap(), nb_kmeans(2));
    assert_eq!(untrained.to_bytes().unwrap_err(), NetworkError::NotTrained);
}

#[test]
fn training_is_independent_of_thread_count() {
    let log = branching_log(300, 3);
    let bytes = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train(&log, rf_kmeans(5)).to_bytes().unwrap())
    };
    assert_eq!(bytes(1), bytes(6));
}

#[test]
fn update_refits_only_touched_parts() {
    let log = branching_log(200, 4);
    let model = train(&log, rf_kmeans(4));
    // a START -> A -> B -> D case leaves C, E and their links alone
    let case = log.cases.iter().find(|c| c.labels() == ["START", "A", "B", "D", "END"]).unwrap().clone();
    let updated = model.update_with_case(&case).unwrap();

    for node in ["C", "E"] {
        assert_eq!(updated.classifier_bytes(node), model.classifier_bytes(node), "node {node}");
    }
    for (s, d) in [("START", "C"), ("C", "B"), ("B", "E"), ("E", "A"), ("E", "END")] {
        let link = LinkRef::new(s, d);
        assert_eq!(updated.link_model_bytes(&link), model.link_model_bytes(&link), "link {link}");
    }
    let touched = LinkRef::new("B", "D");
    assert_eq!(
        updated.skeleton().link_records(&touched).unwrap().len(),
        model.skeleton().link_records(&touched).unwrap().len() + 1
    );
}

#[test]
fn update_with_new_event_extends_network() {
    let log = chain_log(4);
    let model = train(&log, nb_kmeans(2));
    let mut case = log.cases[0].clone();
    case.records[2].label = "X".into();
    let p = prefix(&case, 2);
    assert!(matches!(model.predict_case(&p, &PredictOptions::default()), Err(NetworkError::UnknownEvent(_))));
    let extended = model.update_with_case(&case).unwrap();
    assert!(extended.has_node("X"));
    assert!(extended.is_trained());
    let out = extended.predict_case(&p, &PredictOptions::default()).unwrap();
    assert_eq!(out.events, ["C", "END"]);
}

#[test]
fn memoryless_baseline_gap_is_closed_by_incoming_link() {
    // after B the successor depends only on whether B was entered from A or from C
    let spec = spec(
        r#"{"edges": [
            {"from": "START", "to": "A"}, {"from": "START", "to": "C"},
            {"from": "A", "to": "B"}, {"from": "C", "to": "B"},
            {"from": "B", "to": "X", "weight": 0, "rules": [{"when": {"kind": "previous_is", "label": "A"}, "weight": 1}]},
            {"from": "B", "to": "Y", "weight": 0, "rules": [{"when": {"kind": "previous_is", "label": "C"}, "weight": 1}]},
            {"from": "X", "to": "END"}, {"from": "Y", "to": "END"}
        ]}"#,
    );
    let log = generate_log(&spec, 60, 5).unwrap();
    let model = train(&log, nb_kmeans(2));
    for case in &log.cases {
        let out = model.predict_case(&prefix(case, 2), &PredictOptions::default()).unwrap();
        assert_eq!(out.events[0], case.records[3].label, "case {}", case.id);
    }
}
