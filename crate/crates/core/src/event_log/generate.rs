//! Synthetic event logs drawn from a weighted transition graph.
//!
//! Each edge carries a base weight, optional rules that override the weight when
//! a condition on the case history holds, and distributions for the duration and
//! the numeric/nominal changes it applies. Conditions see the event preceding
//! the current one, the running sum of numeric deltas and the latest nominal
//! values.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::distr::{weighted::WeightedIndex, Distribution as _};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{
    Case, DurationUnit, EventLog, EventRecord, FeatureSchema, LogError, NominalFeature, END, START,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default)]
    pub numeric_features: Vec<String>,
    #[serde(default)]
    pub nominal_features: Vec<String>,
    /// Unit in which edge duration distributions are expressed.
    #[serde(default)]
    pub duration_unit: DurationUnit,
    /// Timestamp of the first case, seconds since the Unix epoch.
    #[serde(default = "default_start_epoch")]
    pub start_epoch: i64,
    /// Offset between consecutive case start times, in seconds.
    #[serde(default = "default_case_spacing")]
    pub case_spacing_seconds: i64,
    /// Real events after which a case is closed with END regardless of the graph.
    #[serde(default = "default_max_case_length")]
    pub max_case_length: usize,
    pub edges: Vec<EdgeSpec>,
}

fn default_start_epoch() -> i64 {
    1_577_836_800
}

fn default_case_spacing() -> i64 {
    3_600
}

fn default_max_case_length() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// First matching rule replaces `weight`.
    #[serde(default)]
    pub rules: Vec<BranchRule>,
    /// Ignored on edges leaving START or entering END, which always last zero.
    #[serde(default)]
    pub duration: Option<Distribution>,
    #[serde(default)]
    pub numeric: BTreeMap<String, Distribution>,
    #[serde(default)]
    pub nominal: BTreeMap<String, NominalDraw>,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRule {
    pub when: Condition,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Condition {
    /// The event before the current one has this label.
    PreviousIs { label: String },
    /// Cumulative sum of the feature's deltas exceeds the threshold.
    NumericAbove { feature: String, threshold: f64 },
    NumericAtMost { feature: String, threshold: f64 },
    /// Latest observed value of a nominal feature.
    NominalIs { feature: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
    Exponential { mean: f64 },
    Choice { values: Vec<f64>, #[serde(default)] weights: Option<Vec<f64>> },
}

impl Distribution {
    fn validate(&self) -> Result<(), String> {
        match self {
            Distribution::Uniform { low, high } if low > high => Err("uniform low > high".into()),
            Distribution::Normal { std_dev, .. } if *std_dev < 0.0 || !std_dev.is_finite() => {
                Err("normal std_dev must be finite and >= 0".into())
            }
            Distribution::Exponential { mean } if *mean <= 0.0 => Err("exponential mean must be > 0".into()),
            Distribution::Choice { values, weights } => {
                if values.is_empty() {
                    return Err("choice needs values".into());
                }
                check_weights(weights.as_deref(), values.len())
            }
            _ => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Constant { value } => *value,
            Distribution::Uniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.random_range(*low..*high)
                }
            }
            Distribution::Normal { mean, std_dev } => {
                Normal::new(*mean, *std_dev).expect("validated").sample(rng)
            }
            Distribution::Exponential { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
            Distribution::Choice { values, weights } => values[pick(weights.as_deref(), values.len(), rng)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalDraw {
    pub values: Vec<String>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn check_weights(weights: Option<&[f64]>, n: usize) -> Result<(), String> {
    match weights {
        Some(w) if w.len() != n => Err("weights and values differ in length".into()),
        Some(w) if w.iter().any(|x| *x < 0.0 || !x.is_finite()) || w.iter().sum::<f64>() <= 0.0 => {
            Err("weights must be non-negative with a positive sum".into())
        }
        _ => Ok(()),
    }
}

fn pick<R: Rng>(weights: Option<&[f64]>, n: usize, rng: &mut R) -> usize {
    match weights {
        Some(w) => WeightedIndex::new(w).expect("validated").sample(rng),
        None => rng.random_range(0..n),
    }
}

struct Walker<'a> {
    spec: &'a GeneratorSpec,
    out_edges: BTreeMap<&'a str, Vec<&'a EdgeSpec>>,
    numeric_index: BTreeMap<&'a str, usize>,
    nominal_index: BTreeMap<&'a str, usize>,
}

impl<'a> Walker<'a> {
    fn new(spec: &'a GeneratorSpec) -> Result<Self, LogError> {
        let invalid = |m: String| LogError::InvalidSpec(m);
        let numeric_index: BTreeMap<&str, usize> =
            spec.numeric_features.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let nominal_index: BTreeMap<&str, usize> =
            spec.nominal_features.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut out_edges: BTreeMap<&str, Vec<&EdgeSpec>> = BTreeMap::new();
        for edge in &spec.edges {
            if edge.from == END || edge.to == START {
                return Err(invalid(format!("edge {} -> {} runs against the boundaries", edge.from, edge.to)));
            }
            if !(edge.weight >= 0.0 && edge.weight.is_finite()) {
                return Err(invalid(format!("edge {} -> {} has a bad weight", edge.from, edge.to)));
            }
            for rule in &edge.rules {
                if !(rule.weight >= 0.0 && rule.weight.is_finite()) {
                    return Err(invalid(format!("rule on {} -> {} has a bad weight", edge.from, edge.to)));
                }
                match &rule.when {
                    Condition::NumericAbove { feature, .. } | Condition::NumericAtMost { feature, .. }
                        if !numeric_index.contains_key(feature.as_str()) =>
                    {
                        return Err(invalid(format!("unknown numeric feature `{feature}`")));
                    }
                    Condition::NominalIs { feature, .. } if !nominal_index.contains_key(feature.as_str()) => {
                        return Err(invalid(format!("unknown nominal feature `{feature}`")));
                    }
                    _ => {}
                }
            }
            if let Some(d) = &edge.duration {
                d.validate().map_err(invalid)?;
            }
            for (name, d) in &edge.numeric {
                if !numeric_index.contains_key(name.as_str()) {
                    return Err(invalid(format!("unknown numeric feature `{name}`")));
                }
                d.validate().map_err(invalid)?;
            }
            for (name, draw) in &edge.nominal {
                if !nominal_index.contains_key(name.as_str()) {
                    return Err(invalid(format!("unknown nominal feature `{name}`")));
                }
                if draw.values.is_empty() {
                    return Err(invalid(format!("nominal draw for `{name}` has no values")));
                }
                check_weights(draw.weights.as_deref(), draw.values.len()).map_err(invalid)?;
            }
            out_edges.entry(edge.from.as_str()).or_default().push(edge);
        }

        // every node reachable from START must be able to leave, and END must be reachable
        let mut seen = BTreeSet::from([START]);
        let mut queue = VecDeque::from([START]);
        while let Some(node) = queue.pop_front() {
            if node == END {
                continue;
            }
            let Some(edges) = out_edges.get(node) else {
                return Err(invalid(format!("node `{node}` has no outgoing edge")));
            };
            for edge in edges {
                if seen.insert(edge.to.as_str()) {
                    queue.push_back(edge.to.as_str());
                }
            }
        }
        if !seen.contains(END) {
            return Err(LogError::UnreachableEnd);
        }
        Ok(Walker { spec, out_edges, numeric_index, nominal_index })
    }

    fn holds(&self, cond: &Condition, previous: Option<&str>, cumulative: &[f64], latest: &[Option<String>]) -> bool {
        match cond {
            Condition::PreviousIs { label } => previous == Some(label.as_str()),
            Condition::NumericAbove { feature, threshold } => cumulative[self.numeric_index[feature.as_str()]] > *threshold,
            Condition::NumericAtMost { feature, threshold } => cumulative[self.numeric_index[feature.as_str()]] <= *threshold,
            Condition::NominalIs { feature, value } => {
                latest[self.nominal_index[feature.as_str()]].as_deref() == Some(value.as_str())
            }
        }
    }

    fn walk(&self, case_id: &str, start: i64, schema: &FeatureSchema, rng: &mut ChaCha8Rng) -> Case {
        let n_num = self.spec.numeric_features.len();
        let n_nom = self.spec.nominal_features.len();
        let unit = self.spec.duration_unit.seconds();
        let mut records = vec![EventRecord::bare(case_id, START, start, schema)];
        let mut cumulative = vec![0.0; n_num];
        let mut latest: Vec<Option<String>> = vec![None; n_nom];
        let mut previous: Option<&str> = None;
        let mut current: &str = START;
        let mut time = start;
        let mut real = 0;
        loop {
            let edges = &self.out_edges[current];
            let weights: Vec<f64> = edges
                .iter()
                .map(|e| {
                    e.rules
                        .iter()
                        .find(|r| self.holds(&r.when, previous, &cumulative, &latest))
                        .map_or(e.weight, |r| r.weight)
                })
                .collect();
            let chosen = if weights.iter().sum::<f64>() > 0.0 {
                WeightedIndex::new(&weights).expect("non-negative weights").sample(rng)
            } else {
                rng.random_range(0..edges.len())
            };
            let edge = edges[chosen];
            if edge.to == END || real == self.spec.max_case_length {
                break;
            }
            if current != START {
                if let Some(d) = &edge.duration {
                    time += (d.sample(rng) * unit).max(0.0).round() as i64;
                }
            }
            let source = records.last().expect("non-empty");
            let mut numeric = vec![None; n_num];
            for (name, d) in &edge.numeric {
                let i = self.numeric_index[name.as_str()];
                let delta = d.sample(rng);
                cumulative[i] += delta;
                numeric[i] = Some(source.numeric[i].unwrap_or(0.0) + delta);
            }
            let mut nominal = vec![None; n_nom];
            for (name, draw) in &edge.nominal {
                let i = self.nominal_index[name.as_str()];
                let value = draw.values[pick(draw.weights.as_deref(), draw.values.len(), rng)].clone();
                latest[i] = Some(value.clone());
                nominal[i] = Some(value);
            }
            records.push(EventRecord {
                case_id: case_id.to_string(),
                label: edge.to.clone(),
                timestamp: time,
                numeric,
                nominal,
            });
            previous = Some(current);
            current = edge.to.as_str();
            real += 1;
        }
        records[0].timestamp = records.get(1).map_or(start, |r| r.timestamp);
        records.push(EventRecord::bare(case_id, END, time, schema));
        Case { id: case_id.to_string(), records }
    }
}

/// Draws `n_cases` augmented cases from `spec`. Output is a pure function of
/// `(spec, n_cases, seed)`.
pub fn generate_log(spec: &GeneratorSpec, n_cases: usize, seed: u64) -> Result<EventLog, LogError> {
    if n_cases == 0 {
        return Err(LogError::InvalidSpec("n_cases must be positive".into()));
    }
    let walker = Walker::new(spec)?;
    let nominal = spec
        .nominal_features
        .iter()
        .map(|name| {
            let domain: BTreeSet<String> = spec
                .edges
                .iter()
                .filter_map(|e| e.nominal.get(name))
                .flat_map(|d| d.values.iter().cloned())
                .collect();
            NominalFeature { name: name.clone(), domain: domain.into_iter().collect() }
        })
        .collect();
    let schema = FeatureSchema::new(spec.numeric_features.clone(), nominal, spec.duration_unit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = (0..n_cases)
        .map(|i| {
            let start = spec.start_epoch + i as i64 * spec.case_spacing_seconds;
            walker.walk(&format!("c{:06}", i + 1), start, &schema, &mut rng)
        })
        .collect();
    Ok(EventLog { schema, cases, augmented: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(from: &str, to: &str) -> EdgeSpec {
        EdgeSpec {
            from: from.into(),
            to: to.into(),
            weight: 1.0,
            rules: vec![],
            duration: None,
            numeric: BTreeMap::new(),
            nominal: BTreeMap::new(),
        }
    }

    fn chain() -> GeneratorSpec {
        GeneratorSpec {
            numeric_features: vec![],
            nominal_features: vec![],
            duration_unit: DurationUnit::Days,
            start_epoch: 0,
            case_spacing_seconds: 60,
            max_case_length: 100,
            edges: vec![edge(START, "A"), edge("A", "B"), edge("B", END)],
        }
    }

    #[test]
    fn chain_yields_identical_sequences() {
        let log = generate_log(&chain(), 5, 1).unwrap();
        assert!(log.augmented);
        assert_eq!(log.cases.len(), 5);
        for case in &log.cases {
            assert_eq!(case.labels(), ["START", "A", "B", "END"]);
        }
    }

    #[test]
    fn same_seed_same_log() {
        let mut spec = chain();
        spec.edges[1].duration = Some(Distribution::Exponential { mean: 3.0 });
        assert_eq!(generate_log(&spec, 20, 9).unwrap(), generate_log(&spec, 20, 9).unwrap());
        assert_ne!(generate_log(&spec, 20, 9).unwrap(), generate_log(&spec, 20, 10).unwrap());
    }

    #[test]
    fn unreachable_end_is_rejected() {
        let mut spec = chain();
        spec.edges = vec![edge(START, "A"), edge("A", "B"), edge("B", "A")];
        assert!(matches!(generate_log(&spec, 1, 0), Err(LogError::UnreachableEnd)));
        spec.edges = vec![edge(START, "A")];
        assert!(matches!(generate_log(&spec, 1, 0), Err(LogError::InvalidSpec(_))));
    }

    #[test]
    fn durations_and_deltas_follow_edges() {
        let mut spec = chain();
        spec.numeric_features = vec!["pay".into()];
        spec.edges[0].numeric.insert("pay".into(), Distribution::Constant { value: 35.0 });
        spec.edges[1].duration = Some(Distribution::Constant { value: 10.0 });
        spec.edges[1].numeric.insert("pay".into(), Distribution::Constant { value: 20.0 });
        let case = &generate_log(&spec, 1, 0).unwrap().cases[0];
        let ts: Vec<i64> = case.records.iter().map(|r| r.timestamp).collect();
        assert_eq!(ts, [0, 0, 864_000, 864_000]);
        assert_eq!(case.records[1].numeric[0], Some(35.0));
        assert_eq!(case.records[2].numeric[0], Some(55.0));
    }

    #[test]
    fn case_length_cap_closes_cycles() {
        let mut spec = chain();
        spec.max_case_length = 7;
        spec.edges = vec![edge(START, "A"), edge("A", "B"), edge("B", "A"), edge("B", END)];
        spec.edges[3].weight = 0.0;
        let case = &generate_log(&spec, 1, 0).unwrap().cases[0];
        assert_eq!(case.real_len(), 7);
        assert_eq!(case.records.last().unwrap().label, END);
    }
}
