//! The two data views of a case: per-transition differences (stored on links)
//! and per-event cumulative states (stored on nodes).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::{Case, FeatureSchema};

/// Nominal slot value meaning "no observation yet" / "left as it was".
pub const UNCHANGED: &str = "<unchanged>";
/// Token for an absent incoming link or cluster.
pub const NONE_TOKEN: &str = "<none>";

/// Numeric and nominal slots of one observation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MixedVector {
    pub numeric: Vec<f64>,
    pub nominal: Vec<String>,
}

impl MixedVector {
    pub fn new(numeric: Vec<f64>, nominal: Vec<String>) -> Self {
        MixedVector { numeric, nominal }
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.numeric.len(), self.nominal.len())
    }
}

/// A directed link between two event types.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkRef {
    pub source: String,
    pub dest: String,
}

impl LinkRef {
    pub fn new(source: impl Into<String>, dest: impl Into<String>) -> Self {
        LinkRef { source: source.into(), dest: dest.into() }
    }
}

impl std::fmt::Display for LinkRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -> {}", self.source, self.dest)
    }
}

/// Difference data for one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub source: String,
    pub dest: String,
    /// Seconds, never negative.
    pub duration: f64,
    pub numeric: Vec<f64>,
    /// Destination symbols, [`UNCHANGED`] where the destination cell is blank.
    pub nominal: Vec<String>,
}

impl TransitionRecord {
    pub fn link(&self) -> LinkRef {
        LinkRef::new(self.source.clone(), self.dest.clone())
    }

    /// Clustering point: `[duration, numeric deltas..]` and the nominal post-values.
    pub fn to_point(&self) -> MixedVector {
        let mut numeric = Vec::with_capacity(self.numeric.len() + 1);
        numeric.push(self.duration);
        numeric.extend_from_slice(&self.numeric);
        MixedVector { numeric, nominal: self.nominal.clone() }
    }
}

/// Memory of a case at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeState {
    pub node: String,
    pub duration: f64,
    pub numeric: Vec<f64>,
    pub nominal: Vec<String>,
}

impl CumulativeState {
    pub fn initial(node: &str, schema: &FeatureSchema) -> Self {
        CumulativeState {
            node: node.to_string(),
            duration: 0.0,
            numeric: vec![0.0; schema.n_numeric()],
            nominal: vec![UNCHANGED.to_string(); schema.n_nominal()],
        }
    }

    /// Moves to `dest` applying a transition point laid out as
    /// [`TransitionRecord::to_point`]: durations and numeric slots add up,
    /// nominal slots take the new symbol unless it is [`UNCHANGED`].
    pub fn advance(&self, dest: &str, point: &MixedVector) -> CumulativeState {
        debug_assert_eq!(point.numeric.len(), self.numeric.len() + 1);
        debug_assert_eq!(point.nominal.len(), self.nominal.len());
        CumulativeState {
            node: dest.to_string(),
            duration: self.duration + point.numeric[0],
            numeric: self.numeric.iter().zip(&point.numeric[1..]).map(|(a, d)| a + d).collect(),
            nominal: self
                .nominal
                .iter()
                .zip(&point.nominal)
                .map(|(old, new)| if new == UNCHANGED { old.clone() } else { new.clone() })
                .collect(),
        }
    }
}

/// One record per consecutive pair of events. A numeric delta is
/// `dest - source` when both cells are present, `dest` when only the source is
/// blank and `0` when the destination is blank.
pub fn extract_transitions(case: &Case, schema: &FeatureSchema) -> Vec<TransitionRecord> {
    case.records
        .windows(2)
        .map(|pair| {
            let (from, to) = (&pair[0], &pair[1]);
            let numeric = (0..schema.n_numeric())
                .map(|i| match (from.numeric.get(i).copied().flatten(), to.numeric.get(i).copied().flatten()) {
                    (Some(a), Some(b)) => b - a,
                    (None, Some(b)) => b,
                    (_, None) => 0.0,
                })
                .collect();
            let nominal = (0..schema.n_nominal())
                .map(|i| to.nominal.get(i).cloned().flatten().unwrap_or_else(|| UNCHANGED.to_string()))
                .collect();
            TransitionRecord {
                source: from.label.clone(),
                dest: to.label.clone(),
                duration: (to.timestamp - from.timestamp).max(0) as f64,
                numeric,
                nominal,
            }
        })
        .collect()
}

/// Running state at every event of the case.
pub fn cumulative_states(case: &Case, schema: &FeatureSchema) -> Vec<CumulativeState> {
    let Some(first) = case.records.first() else {
        return Vec::new();
    };
    let mut states = vec![CumulativeState::initial(&first.label, schema)];
    for record in extract_transitions(case, schema) {
        let next = states.last().expect("non-empty").advance(&record.dest, &record.to_point());
        states.push(next);
    }
    states
}

/// Classifier input for a node: nominal `[incoming source, incoming cluster,
/// latest nominals..]`, numeric `[cumulative duration, cumulative numerics..]`.
/// The incoming link is identified by its source, since its destination is the
/// node itself.
pub fn encode_classifier_input(
    state: &CumulativeState,
    incoming: Option<&LinkRef>,
    cluster: Option<usize>,
) -> MixedVector {
    debug_assert!(incoming.is_none_or(|l| l.dest == state.node));
    let mut nominal = Vec::with_capacity(state.nominal.len() + 2);
    nominal.push(incoming.map_or_else(|| NONE_TOKEN.to_string(), |l| l.source.clone()));
    nominal.push(cluster.map_or_else(|| NONE_TOKEN.to_string(), |c| c.to_string()));
    nominal.extend(state.nominal.iter().cloned());
    let mut numeric = Vec::with_capacity(state.numeric.len() + 1);
    numeric.push(state.duration);
    numeric.extend_from_slice(&state.numeric);
    MixedVector { numeric, nominal }
}

#[derive(Debug, Error, PartialEq)]
#[error("malformed classifier input: {0}")]
pub struct DecodeError(String);

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedInput {
    pub incoming: Option<LinkRef>,
    pub cluster: Option<usize>,
    pub duration: f64,
}

/// Inverse of the context slots written by [`encode_classifier_input`].
pub fn decode_classifier_input(input: &MixedVector, node: &str) -> Result<DecodedInput, DecodeError> {
    let (Some(link), Some(cluster), Some(&duration)) =
        (input.nominal.first(), input.nominal.get(1), input.numeric.first())
    else {
        return Err(DecodeError("too few slots".into()));
    };
    let incoming = (link != NONE_TOKEN).then(|| LinkRef::new(link.clone(), node));
    let cluster = if cluster == NONE_TOKEN {
        None
    } else {
        Some(cluster.parse().map_err(|_| DecodeError(format!("bad cluster token `{cluster}`")))?)
    };
    Ok(DecodedInput { incoming, cluster, duration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{EventRecord, NominalFeature};

    const DAY: i64 = 86_400;

    fn schema() -> FeatureSchema {
        FeatureSchema {
            numeric: vec!["payment".into()],
            nominal: vec![NominalFeature { name: "status".into(), domain: vec!["A".into(), "B".into()] }],
            ..FeatureSchema::default()
        }
    }

    fn rec(label: &str, day: i64, pay: Option<f64>, status: Option<&str>) -> EventRecord {
        EventRecord {
            case_id: "c".into(),
            label: label.into(),
            timestamp: day * DAY,
            numeric: vec![pay],
            nominal: vec![status.map(String::from)],
        }
    }

    #[test]
    fn ten_days_twenty_units_a_to_b() {
        let case = Case { id: "c".into(), records: vec![rec("e1", 0, Some(0.0), Some("A")), rec("e2", 10, Some(20.0), Some("B"))] };
        let t = extract_transitions(&case, &schema());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].duration, 10.0 * DAY as f64);
        assert_eq!(t[0].numeric, [20.0]);
        assert_eq!(t[0].nominal, ["B"]);
    }

    #[test]
    fn delta_rules_for_missing_cells() {
        let case = Case {
            id: "c".into(),
            records: vec![rec("a", 0, None, None), rec("b", 0, Some(5.0), None), rec("c", 1, None, None), rec("d", 2, Some(7.0), None)],
        };
        let t = extract_transitions(&case, &schema());
        let deltas: Vec<f64> = t.iter().map(|r| r.numeric[0]).collect();
        assert_eq!(deltas, [5.0, 0.0, 7.0]);
        assert_eq!(t[0].duration, 0.0);
        assert!(t.iter().all(|r| r.nominal == [UNCHANGED]));
    }

    #[test]
    fn latest_nominal_carries_forward() {
        let case = Case {
            id: "c".into(),
            records: vec![rec("START", 0, None, None), rec("x", 0, None, Some("A")), rec("y", 1, None, None), rec("z", 2, None, Some("B"))],
        };
        let states = cumulative_states(&case, &schema());
        let nominals: Vec<&str> = states.iter().map(|s| s.nominal[0].as_str()).collect();
        assert_eq!(nominals, [UNCHANGED, "A", "A", "B"]);
        assert_eq!(states[0].duration, 0.0);
        assert_eq!(states[0].numeric, [0.0]);
    }

    #[test]
    fn cumulative_payment() {
        let case = Case {
            id: "c".into(),
            records: vec![rec("START", 0, None, None), rec("Create Fine", 0, Some(35.0), None), rec("Add penalty", 3, Some(71.5), None)],
        };
        let states = cumulative_states(&case, &schema());
        assert_eq!(states[2].numeric[0], 71.5);
        assert_eq!(states[2].duration, 3.0 * DAY as f64);
    }

    #[test]
    fn encoding_slots() {
        let state = CumulativeState { node: "B".into(), duration: 42.0, numeric: vec![1.5], nominal: vec!["A".into()] };
        let start = encode_classifier_input(&CumulativeState::initial("START", &schema()), None, None);
        assert_eq!(&start.nominal[..2], [NONE_TOKEN, NONE_TOKEN]);

        let link = LinkRef::new("A", "B");
        let one = encode_classifier_input(&state, Some(&link), Some(1));
        let two = encode_classifier_input(&state, Some(&link), Some(2));
        assert_ne!(one, two);
        assert_eq!(one.numeric, [42.0, 1.5]);
        assert_eq!(one.nominal, ["A", "1", "A"]);

        let decoded = decode_classifier_input(&one, "B").unwrap();
        assert_eq!(decoded, DecodedInput { incoming: Some(link), cluster: Some(1), duration: 42.0 });
        let decoded = decode_classifier_input(&start, "START").unwrap();
        assert_eq!(decoded, DecodedInput { incoming: None, cluster: None, duration: 0.0 });
    }
}
