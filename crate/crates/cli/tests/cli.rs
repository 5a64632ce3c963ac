use std::path::Path;
use std::process::{Command, Output};

fn pedf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pedf")).args(args).output().expect("pedf runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = r#"
version = 1

[dataset]
path = "log.csv"

[model]
clusterer = { kind = "kmeans", k = 2 }
classifier = { kind = "naive_bayes" }

[split]
train_on_split = false

[output]
generated = "log.csv"
model = "model.json"

[generate]
n_cases = 40
seed = 3

[generate.spec]
numeric_features = ["x"]

[[generate.spec.edges]]
from = "START"
to = "A"
numeric = { x = { dist = "uniform", low = 0, high = 10 } }

[[generate.spec.edges]]
from = "A"
to = "B"
duration = { dist = "constant", value = 3600 }

[[generate.spec.edges]]
from = "B"
to = "END"
"#;

fn trained(dir: &Path) -> String {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    for cmd in ["gen", "train"] {
        let o = pedf(&[cmd, "--config", cfg]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    dir.join("model.json").to_str().unwrap().to_string()
}

#[test]
fn predicts_from_event_list() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained(dir.path());
    let o = pedf(&["predict", "--model", &model, "--events", "A"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(line["events"], serde_json::json!(["B", "END"]));
    assert_eq!(line["terminated_by"], "end");
    assert_eq!(line["durations"][0], 3600.0);
}

#[test]
fn finished_prefix_has_empty_suffix() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained(dir.path());
    let o = pedf(&["predict", "--model", &model, "--events", "START,A,B,END"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(line["events"], serde_json::json!([]));
}

#[test]
fn unknown_event_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained(dir.path());
    let o = pedf(&["predict", "--model", &model, "--events", "A,Z"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[unknown-event]:"), "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn extend_adds_unseen_events() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained(dir.path());
    let o = pedf(&["predict", "--model", &model, "--events", "A,Z", "--extend"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("extended network"));
    let line: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(line["events"], serde_json::json!(["END"]));
}

#[test]
fn bad_inputs_fail_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = pedf(&["train", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[io]:"), "{}", stderr(&o));

    let corrupt = dir.path().join("model.json");
    std::fs::write(&corrupt, b"{\"format\":\"pedf-model\",\"version\":99,\"model\":{}}").unwrap();
    let o = pedf(&["predict", "--model", corrupt.to_str().unwrap(), "--events", "A"]);
    assert!(stderr(&o).starts_with("error[model-file]:"), "{}", stderr(&o));

    let o = pedf(&["predict", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[usage]:"), "{}", stderr(&o));
}
