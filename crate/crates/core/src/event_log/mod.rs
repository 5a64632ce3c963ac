//! Event logs: parsing, boundary augmentation, partitioning and synthetic
//! generation.

mod generate;
mod parse;

pub use generate::{
    generate_log, BranchRule, Condition, Distribution, EdgeSpec, GeneratorSpec, NominalDraw,
};
pub use parse::{
    parse_log, parse_log_with_stats, parse_timestamp, write_log_csv, ParseConfig, ParseStats,
};

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label of the dummy event prepended to every case.
pub const START: &str = "START";
/// Label of the dummy event appended to every case.
pub const END: &str = "END";

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log contains no data rows")]
    EmptyLog,
    #[error("required column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp `{value}`")]
    BadTimestamp { row: u64, value: String },
    #[error("row {row}: column `{column}` is declared numeric but holds `{value}`")]
    BadNumber { row: u64, column: String, value: String },
    #[error("row {row}: empty event label")]
    EmptyLabel { row: u64 },
    #[error("row {row}: event label `{label}` is reserved for boundary events")]
    ReservedLabel { row: u64, label: String },
    #[error("feature name `{0}` appears more than once")]
    DuplicateFeature(String),
    #[error("log is already augmented with boundary events")]
    AlreadyAugmented,
    #[error("log is not augmented with boundary events")]
    NotAugmented,
    #[error("case `{0}` has no real events")]
    DegenerateCase(String),
    #[error("fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("generator graph has no path from START to END")]
    UnreachableEnd,
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Time granularity used when reporting durations. Internally every duration is
/// kept in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DurationUnit {
    #[default]
    Seconds,
    Minutes,
    Hours,
    Days,
}

impl DurationUnit {
    pub fn seconds(self) -> f64 {
        match self {
            DurationUnit::Seconds => 1.0,
            DurationUnit::Minutes => 60.0,
            DurationUnit::Hours => 3_600.0,
            DurationUnit::Days => 86_400.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DurationUnit::Seconds => "seconds",
            DurationUnit::Minutes => "minutes",
            DurationUnit::Hours => "hours",
            DurationUnit::Days => "days",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NominalFeature {
    pub name: String,
    /// Sorted distinct values seen in the data.
    pub domain: Vec<String>,
}

/// Names and kinds of the extra features carried by every event.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub numeric: Vec<String>,
    pub nominal: Vec<NominalFeature>,
    #[serde(default)]
    pub duration_unit: DurationUnit,
}

impl FeatureSchema {
    pub fn new(
        numeric: Vec<String>,
        nominal: Vec<NominalFeature>,
        duration_unit: DurationUnit,
    ) -> Result<Self, LogError> {
        let mut seen = HashSet::new();
        for name in numeric.iter().chain(nominal.iter().map(|f| &f.name)) {
            if !seen.insert(name.as_str()) {
                return Err(LogError::DuplicateFeature(name.clone()));
            }
        }
        Ok(FeatureSchema { numeric, nominal, duration_unit })
    }

    pub fn n_numeric(&self) -> usize {
        self.numeric.len()
    }

    pub fn n_nominal(&self) -> usize {
        self.nominal.len()
    }

    pub fn nominal_names(&self) -> impl Iterator<Item = &str> {
        self.nominal.iter().map(|f| f.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub case_id: String,
    pub label: String,
    pub timestamp: Timestamp,
    /// One slot per schema numeric feature; `None` marks a blank cell.
    pub numeric: Vec<Option<f64>>,
    /// One slot per schema nominal feature; `None` marks a blank cell.
    pub nominal: Vec<Option<String>>,
}

impl EventRecord {
    /// A record with every feature missing, used for boundary events.
    pub fn bare(case_id: &str, label: &str, timestamp: Timestamp, schema: &FeatureSchema) -> Self {
        EventRecord {
            case_id: case_id.to_string(),
            label: label.to_string(),
            timestamp,
            numeric: vec![None; schema.n_numeric()],
            nominal: vec![None; schema.n_nominal()],
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.label == START || self.label == END
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub records: Vec<EventRecord>,
}

impl Case {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.records.iter().map(|r| r.label.clone()).collect()
    }

    /// Records that are not START/END.
    pub fn real_events(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter(|r| !r.is_boundary())
    }

    pub fn real_len(&self) -> usize {
        self.real_events().count()
    }

    pub fn is_augmented(&self) -> bool {
        self.records.first().is_some_and(|r| r.label == START)
            && self.records.last().is_some_and(|r| r.label == END)
    }

    fn augmented(mut self, schema: &FeatureSchema) -> Case {
        let first = self.records.first().map_or(0, |r| r.timestamp);
        let last = self.records.last().map_or(first, |r| r.timestamp);
        self.records.insert(0, EventRecord::bare(&self.id, START, first, schema));
        self.records.push(EventRecord::bare(&self.id, END, last, schema));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub schema: FeatureSchema,
    pub cases: Vec<Case>,
    pub augmented: bool,
}

impl EventLog {
    pub fn n_records(&self) -> usize {
        self.cases.iter().map(Case::len).sum()
    }

    /// Same schema and flag, different cases.
    pub fn with_cases(&self, cases: Vec<Case>) -> EventLog {
        EventLog { schema: self.schema.clone(), cases, augmented: self.augmented }
    }
}

/// Wraps every case in START/END records. START takes the first real event's
/// timestamp and END the last one's, so boundary transitions last zero seconds.
pub fn augment_boundaries(log: EventLog) -> Result<EventLog, LogError> {
    if log.augmented {
        return Err(LogError::AlreadyAugmented);
    }
    let EventLog { schema, cases, .. } = log;
    let cases = cases.into_iter().map(|c| c.augmented(&schema)).collect();
    Ok(EventLog { schema, cases, augmented: true })
}

/// Seeded case-level partition. The training half receives
/// `round(train_fraction * n)` cases (at least one when the log is non-empty);
/// both halves keep the original case order.
pub fn split_cases(
    log: &EventLog,
    train_fraction: f64,
    seed: u64,
) -> Result<(EventLog, EventLog), LogError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(LogError::InvalidFraction(train_fraction));
    }
    let n = log.cases.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut n_train = (train_fraction * n as f64).round() as usize;
    if n > 0 && n_train == 0 {
        n_train = 1;
    }
    let mut in_train = vec![false; n];
    for &i in &order[..n_train.min(n)] {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (case, keep) in log.cases.iter().zip(in_train) {
        if keep {
            train.push(case.clone());
        } else {
            test.push(case.clone());
        }
    }
    Ok((log.with_cases(train), log.with_cases(test)))
}

/// Number of real events revealed for a case of `real_len` events.
pub fn known_count(real_len: usize, known_fraction: f64) -> usize {
    // 0.7 * 30 is 20.999999999999996 in binary floating point
    let exact = known_fraction * real_len as f64 + 1e-9;
    (exact.floor() as usize).clamp(1, real_len.max(1))
}

/// Splits an augmented case into a known prefix (START plus the first
/// `max(1, floor(fraction * L))` real events) and the remaining suffix (the
/// other real events plus END).
pub fn truncate_prefix(case: &Case, known_fraction: f64) -> Result<(Case, Case), LogError> {
    if !case.is_augmented() {
        return Err(LogError::NotAugmented);
    }
    if !(known_fraction > 0.0 && known_fraction < 1.0) {
        return Err(LogError::InvalidFraction(known_fraction));
    }
    let real = case.len() - 2;
    if real == 0 {
        return Err(LogError::DegenerateCase(case.id.clone()));
    }
    let split = 1 + known_count(real, known_fraction);
    let prefix = Case { id: case.id.clone(), records: case.records[..split].to_vec() };
    let suffix = Case { id: case.id.clone(), records: case.records[split..].to_vec() };
    Ok((prefix, suffix))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(id: &str, labels: &[&str]) -> Case {
        let schema = FeatureSchema::default();
        Case {
            id: id.into(),
            records: labels
                .iter()
                .enumerate()
                .map(|(i, l)| EventRecord::bare(id, l, i as i64 * 10, &schema))
                .collect(),
        }
    }

    fn log(cases: Vec<Case>) -> EventLog {
        EventLog { schema: FeatureSchema::default(), cases, augmented: false }
    }

    #[test]
    fn augmentation_wraps_cases() {
        let out = augment_boundaries(log(vec![case("A1", &["Create Fine", "Send Fine"])])).unwrap();
        assert_eq!(out.cases[0].labels(), ["START", "Create Fine", "Send Fine", "END"]);
        assert_eq!(out.cases[0].records[0].timestamp, 0);
        assert_eq!(out.cases[0].records[3].timestamp, 10);
        assert!(out.augmented);
        assert!(matches!(augment_boundaries(out), Err(LogError::AlreadyAugmented)));
    }

    #[test]
    fn single_event_case_grows_to_three() {
        let out = augment_boundaries(log(vec![case("x", &["A"])])).unwrap();
        assert_eq!(out.cases[0].len(), 3);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let l = log((0..10).map(|i| case(&i.to_string(), &["A"])).collect());
        let (train, test) = split_cases(&l, 0.7, 3).unwrap();
        assert_eq!((train.cases.len(), test.cases.len()), (7, 3));
        let (train2, _) = split_cases(&l, 0.7, 3).unwrap();
        assert_eq!(train, train2);

        let single = log(vec![case("only", &["A"])]);
        let (train, test) = split_cases(&single, 0.3, 1).unwrap();
        assert_eq!((train.cases.len(), test.cases.len()), (1, 0));

        assert!(matches!(split_cases(&l, 1.0, 0), Err(LogError::InvalidFraction(_))));
    }

    #[test]
    fn fines_sized_split() {
        let l = log((0..14_333).map(|i| case(&i.to_string(), &["A"])).collect());
        let (train, test) = split_cases(&l, 0.7, 11).unwrap();
        assert_eq!(train.cases.len(), 10_033);
        assert_eq!(test.cases.len(), 4_300);
    }

    #[test]
    fn prefix_counts_use_floor_with_minimum_one() {
        let make = |n: usize| {
            let labels: Vec<String> = (0..n).map(|i| format!("E{i}")).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            augment_boundaries(log(vec![case("c", &refs)])).unwrap().cases.remove(0)
        };
        let count = |n, f| truncate_prefix(&make(n), f).unwrap().0.real_len();
        assert_eq!(count(4, 0.5), 2);
        assert_eq!(count(5, 0.5), 2);
        assert_eq!(count(12, 0.9), 10);
        assert_eq!(count(3, 0.2), 1);

        let (prefix, suffix) = truncate_prefix(&make(4), 0.5).unwrap();
        assert_eq!(prefix.labels(), ["START", "E0", "E1"]);
        assert_eq!(suffix.labels(), ["E2", "E3", "END"]);
    }

    #[test]
    fn truncate_rejects_degenerate_and_unaugmented() {
        let empty = augment_boundaries(log(vec![case("e", &[])])).unwrap().cases.remove(0);
        assert!(matches!(truncate_prefix(&empty, 0.5), Err(LogError::DegenerateCase(_))));
        assert!(matches!(truncate_prefix(&case("c", &["A"]), 0.5), Err(LogError::NotAugmented)));
    }

    #[test]
    fn schema_rejects_duplicate_names() {
        let nominal = vec![NominalFeature { name: "x".into(), domain: vec!["a".into()] }];
        assert!(matches!(
            FeatureSchema::new(vec!["x".into()], nominal, DurationUnit::Days),
            Err(LogError::DuplicateFeature(_))
        ));
    }
}
