use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::measures::{pair_duration_error, pair_event_error, pair_feature_error, MeasureError, SuffixPair, SuffixStream};
use crate::baselines::{akom_fit, complete_sequence, label_sequences, lz78_fit, markov_fit, ppm_fit, SeqPredictor};
use crate::classification::ClassifierConfig;
use crate::clustering::ClustererConfig;
use crate::event_log::{augment_boundaries, split_cases, truncate_prefix, Case, EventLog, FeatureSchema, LogError};
use crate::network::{build_skeleton, NetworkError, PedfModel, PredictOptions, TrainingConfig};

pub const DEFAULT_BASELINE_ORDER: usize = 3;

fn default_order() -> usize {
    DEFAULT_BASELINE_ORDER
}

fn default_train_fraction() -> f64 {
    0.7
}

fn default_known_fractions() -> Vec<f64> {
    vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
}

fn default_cap() -> usize {
    10
}

/// One model of the benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Pedf {
        clusterer: ClustererConfig,
        classifier: ClassifierConfig,
        #[serde(default)]
        seed: u64,
    },
    Markov,
    Akom {
        #[serde(default = "default_order")]
        order: usize,
    },
    Lz78,
    Ppm {
        #[serde(default = "default_order")]
        max_order: usize,
    },
}

impl ModelSpec {
    /// `(model, clusterer, classifier)` columns of the report.
    pub fn columns(&self) -> (String, String, String) {
        let dash = || "-".to_string();
        match self {
            ModelSpec::Pedf { clusterer, classifier, .. } => ("pedf".into(), clusterer.describe(), classifier.describe()),
            ModelSpec::Markov => ("markov".into(), dash(), dash()),
            ModelSpec::Akom { order } => (format!("akom({order})"), dash(), dash()),
            ModelSpec::Lz78 => ("lz78".into(), dash(), dash()),
            ModelSpec::Ppm { max_order } => (format!("ppm({max_order})"), dash(), dash()),
        }
    }

    pub fn label(&self) -> String {
        match self.columns() {
            (m, c, k) if c == "-" => {
                debug_assert_eq!(k, "-");
                m
            }
            (m, c, k) => format!("{m}[{c},{k}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub dataset_name: String,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_known_fractions")]
    pub known_fractions: Vec<f64>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    pub models: Vec<ModelSpec>,
}

impl BenchConfig {
    pub fn new(models: Vec<ModelSpec>) -> Self {
        BenchConfig {
            dataset_name: String::new(),
            train_fraction: default_train_fraction(),
            split_seed: 0,
            known_fractions: default_known_fractions(),
            cap: default_cap(),
            models,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let open_unit = |f: f64| f > 0.0 && f < 1.0;
        if !open_unit(self.train_fraction) {
            return Err(BenchError::Invalid(format!("train_fraction {} must lie in (0, 1)", self.train_fraction)));
        }
        if let Some(f) = self.known_fractions.iter().find(|f| !open_unit(**f)) {
            return Err(BenchError::Invalid(format!("known fraction {f} must lie in (0, 1)")));
        }
        if self.known_fractions.is_empty() || self.models.is_empty() {
            return Err(BenchError::Invalid("need at least one model and one known fraction".into()));
        }
        for m in &self.models {
            match m {
                ModelSpec::Akom { order: 0 } | ModelSpec::Ppm { max_order: 0 } => {
                    return Err(BenchError::Invalid(format!("{}: order must be at least 1", m.label())))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("training {model}: {source}")]
    Train { model: String, source: NetworkError },
    #[error("{model} at {known_pct}% known, case `{case}`: {message}")]
    Cell { model: String, known_pct: u32, case: String, message: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// One grid cell. `de` is in the schema's duration unit; `de` and `fe` are
/// absent for label-only models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub clusterer: String,
    pub classifier: String,
    pub known_pct: u32,
    pub ee: u64,
    pub de: Option<f64>,
    pub fe: Option<f64>,
    pub n_cases: usize,
    pub n_unknown: usize,
}

impl ReportRow {
    pub fn mean_ee(&self) -> f64 {
        if self.n_cases == 0 {
            0.0
        } else {
            self.ee as f64 / self.n_cases as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<ReportRow>,
}

impl ErrorReport {
    /// Rows of the model whose report label matches, in known-% order.
    pub fn rows_for<'a>(&'a self, spec: &ModelSpec) -> impl Iterator<Item = &'a ReportRow> + 'a {
        let (m, c, k) = spec.columns();
        self.rows.iter().filter(move |r| r.model == m && r.clusterer == c && r.classifier == k)
    }

    pub fn cell(&self, spec: &ModelSpec, known_pct: u32) -> Option<&ReportRow> {
        self.rows_for(spec).find(|r| r.known_pct == known_pct)
    }
}

/// Wall-clock training time; kept out of the report so reports stay
/// reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTiming {
    pub model: String,
    pub train_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: ErrorReport,
    pub timings: Vec<ModelTiming>,
}

enum Trained {
    Pedf(Box<PedfModel>),
    Seq(SeqPredictor),
}

fn train_model(spec: &ModelSpec, train: &EventLog) -> Result<Trained, BenchError> {
    let seqs = || label_sequences(train);
    Ok(match spec {
        ModelSpec::Pedf { clusterer, classifier, seed } => {
            let wrap = |source| BenchError::Train { model: spec.label(), source };
            let skeleton = build_skeleton(train).map_err(wrap)?;
            let config = TrainingConfig { clusterer: clusterer.clone(), classifier: classifier.clone(), seed: *seed };
            Trained::Pedf(Box::new(PedfModel::train(skeleton, config).map_err(wrap)?))
        }
        ModelSpec::Markov => Trained::Seq(markov_fit(&seqs())),
        ModelSpec::Akom { order } => Trained::Seq(akom_fit(&seqs(), *order)),
        ModelSpec::Lz78 => Trained::Seq(lz78_fit(&seqs())),
        ModelSpec::Ppm { max_order } => Trained::Seq(ppm_fit(&seqs(), *max_order)),
    })
}

struct CaseOutcome {
    ee: u64,
    de: f64,
    fe: f64,
    unknown: bool,
}

pub fn known_pct(fraction: f64) -> u32 {
    (fraction * 100.0).round() as u32
}

fn evaluate_case(
    trained: &Trained,
    case: &Case,
    fraction: f64,
    cap: usize,
    schema: &FeatureSchema,
) -> Result<CaseOutcome, String> {
    let (prefix, _) = truncate_prefix(case, fraction).map_err(|e| e.to_string())?;
    let real = SuffixStream::real(case, prefix.len(), schema);
    let (predicted, unknown) = match trained {
        Trained::Pedf(model) => match model.predict_case(&prefix, &PredictOptions { cap, sample_seed: None }) {
            Ok(suffix) => (SuffixStream::predicted(&suffix), false),
            // conservative: the whole real suffix counts as error
            Err(NetworkError::UnknownEvent(_)) => (SuffixStream::default(), true),
            Err(e) => return Err(e.to_string()),
        },
        Trained::Seq(p) => (SuffixStream::labels_only(complete_sequence(p, &prefix.labels(), cap).0), false),
    };
    let pair = SuffixPair::new(real, predicted);
    let (de, fe) = match trained {
        Trained::Pedf(_) => (pair_duration_error(&pair), pair_feature_error(&pair).map_err(|e| e.to_string())?),
        Trained::Seq(_) => (0.0, 0.0),
    };
    Ok(CaseOutcome { ee: pair_event_error(&pair), de, fe, unknown })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Splits the log, trains every model once on the training cases and
/// evaluates each of them on every test case at every known fraction.
///
/// Test cases without real events are skipped. Prefix events unknown to a
/// PEDF model are tallied in `n_unknown` and the case's whole real suffix is
/// charged as error.
pub fn run_benchmark(log: &EventLog, cfg: &BenchConfig) -> Result<BenchOutcome, BenchError> {
    cfg.validate()?;
    let log = if log.augmented { log.clone() } else { augment_boundaries(log.clone())? };
    let (train, test) = split_cases(&log, cfg.train_fraction, cfg.split_seed)?;
    let schema = &log.schema;
    let cases: Vec<&Case> = test.cases.iter().filter(|c| c.real_len() > 0).collect();

    let mut metadata = BTreeMap::new();
    let mut meta = |k: &str, v: String| metadata.insert(k.to_string(), v);
    meta("dataset", cfg.dataset_name.clone());
    meta("cases_total", log.cases.len().to_string());
    meta("cases_train", train.cases.len().to_string());
    meta("cases_test", cases.len().to_string());
    meta("cases_test_skipped", (test.cases.len() - cases.len()).to_string());
    meta("train_fraction", cfg.train_fraction.to_string());
    meta("split_seed", cfg.split_seed.to_string());
    meta("cap", cfg.cap.to_string());
    meta("duration_unit", schema.duration_unit.name().to_string());
    let cfg_json = serde_json::to_vec(cfg).expect("config serializes");
    meta("config_sha256", hex(&Sha256::digest(&cfg_json)));

    let unit = schema.duration_unit.seconds();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for spec in &cfg.models {
        let started = Instant::now();
        let trained = train_model(spec, &train)?;
        timings.push(ModelTiming { model: spec.label(), train_seconds: started.elapsed().as_secs_f64() });
        let (model, clusterer, classifier) = spec.columns();
        for &fraction in &cfg.known_fractions {
            let pct = known_pct(fraction);
            let outcomes: Vec<Result<CaseOutcome, String>> =
                cases.par_iter().map(|c| evaluate_case(&trained, c, fraction, cfg.cap, schema)).collect();
            let (mut ee, mut de, mut fe, mut n_unknown) = (0u64, 0.0, 0.0, 0usize);
            for (case, outcome) in cases.iter().zip(outcomes) {
                let o = outcome.map_err(|message| BenchError::Cell {
                    model: spec.label(),
                    known_pct: pct,
                    case: case.id.clone(),
                    message,
                })?;
                ee += o.ee;
                de += o.de;
                fe += o.fe;
                n_unknown += usize::from(o.unknown);
            }
            let label_only = matches!(trained, Trained::Seq(_));
            rows.push(ReportRow {
                model: model.clone(),
                clusterer: clusterer.clone(),
                classifier: classifier.clone(),
                known_pct: pct,
                ee,
                de: (!label_only).then_some(de / unit),
                fe: (!label_only).then_some(fe),
                n_cases: cases.len(),
                n_unknown,
            });
        }
    }
    Ok(BenchOutcome { report: ErrorReport { metadata, rows }, timings })
}
