//! The PEDF network: one node per event type, one link per observed ordered
//! pair of event types.
//!
//! Training runs in two phases. Every link first clusters its transition
//! points; every node then trains a classifier on its cumulative states, with
//! the incoming and outgoing transitions resolved to cluster ids of the now
//! fitted links. Links are independent of each other, and so are nodes once
//! the links are done, so both phases run in parallel. Each fit draws its seed
//! from the training seed and its own identity, which keeps the result
//! independent of scheduling.

mod predict;
mod serialize;

pub use predict::{PredictOptions, PredictedSuffix, Termination};
pub use serialize::FORMAT_VERSION;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classification::{ClassifierConfig, ClassifyError, Classifier, LabeledRow};
use crate::clustering::{ClusterError, ClusterModel, ClustererConfig};
use crate::event_log::{Case, EventLog, FeatureSchema, END};
use crate::features::{
    cumulative_states, encode_classifier_input, extract_transitions, CumulativeState, LinkRef,
    TransitionRecord,
};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("training log has no cases")]
    EmptyTraining,
    #[error("case `{0}` is not wrapped in START/END")]
    NotAugmented(String),
    #[error("clustering link {link}: {source}")]
    LinkFit { link: LinkRef, source: ClusterError },
    #[error("training node `{node}`: {source}")]
    NodeFit { node: String, source: ClassifyError },
    #[error("model is not trained")]
    NotTrained,
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("event `{0}` is not part of the model")]
    UnknownEvent(String),
    #[error("node `{0}` has no classifier")]
    DeadEnd(String),
    #[error("prediction at node `{node}`: {source}")]
    Predict { node: String, source: ClassifyError },
}

/// Position of a transition record inside a link's training data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRef {
    pub link: LinkRef,
    pub index: usize,
}

/// One classifier training sample for a node, before cluster ids are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    /// `None` for the START node.
    pub incoming: Option<RecordRef>,
    pub state: CumulativeState,
    pub outgoing: RecordRef,
}

/// Links and nodes touched by one case.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Touched {
    pub links: BTreeSet<LinkRef>,
    pub nodes: BTreeSet<String>,
}

/// Network topology plus the training data attached to each link and node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSkeleton {
    pub schema: FeatureSchema,
    nodes: BTreeSet<String>,
    #[serde(with = "link_map")]
    links: BTreeMap<LinkRef, Vec<TransitionRecord>>,
    rows: BTreeMap<String, Vec<NodeRow>>,
}

impl NetworkSkeleton {
    pub fn new(schema: FeatureSchema) -> Self {
        NetworkSkeleton { schema, nodes: BTreeSet::new(), links: BTreeMap::new(), rows: BTreeMap::new() }
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkRef> {
        self.links.keys()
    }

    pub fn link_records(&self, link: &LinkRef) -> Option<&[TransitionRecord]> {
        self.links.get(link).map(Vec::as_slice)
    }

    pub fn node_rows(&self, node: &str) -> Option<&[NodeRow]> {
        self.rows.get(node).map(Vec::as_slice)
    }

    /// Appends one augmented case's transitions and node rows.
    pub fn add_case(&mut self, case: &Case) -> Result<Touched, NetworkError> {
        if !case.is_augmented() {
            return Err(NetworkError::NotAugmented(case.id.clone()));
        }
        let transitions = extract_transitions(case, &self.schema);
        let states = cumulative_states(case, &self.schema);
        let mut touched = Touched::default();
        let mut refs = Vec::with_capacity(transitions.len());
        for record in transitions {
            let link = record.link();
            let records = self.links.entry(link.clone()).or_default();
            refs.push(RecordRef { link: link.clone(), index: records.len() });
            records.push(record);
            touched.links.insert(link);
        }
        for record in &case.records {
            self.nodes.insert(record.label.clone());
        }
        for (p, outgoing) in refs.iter().enumerate() {
            let node = &case.records[p].label;
            let row = NodeRow {
                incoming: p.checked_sub(1).map(|q| refs[q].clone()),
                state: states[p].clone(),
                outgoing: outgoing.clone(),
            };
            self.rows.entry(node.clone()).or_default().push(row);
            touched.nodes.insert(node.clone());
        }
        Ok(touched)
    }
}

/// Builds the network topology and attaches training data from an augmented
/// log.
pub fn build_skeleton(train: &EventLog) -> Result<NetworkSkeleton, NetworkError> {
    if train.cases.is_empty() {
        return Err(NetworkError::EmptyTraining);
    }
    let mut skeleton = NetworkSkeleton::new(train.schema.clone());
    for case in &train.cases {
        skeleton.add_case(case)?;
    }
    Ok(skeleton)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub clusterer: ClustererConfig,
    pub classifier: ClassifierConfig,
    pub seed: u64,
}

/// Composite classifier label for moving to `dest` through cluster `cluster`.
pub fn outcome_label(dest: &str, cluster: usize) -> String {
    format!("({dest}, {cluster})")
}

/// Inverse of [`outcome_label`].
pub fn parse_outcome_label(label: &str) -> Option<(&str, usize)> {
    let inner = label.strip_prefix('(')?.strip_suffix(')')?;
    let (dest, cluster) = inner.rsplit_once(", ")?;
    Some((dest, cluster.parse().ok()?))
}

/// A trained (or partially trained) PEDF network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedfModel {
    skeleton: NetworkSkeleton,
    config: TrainingConfig,
    #[serde(with = "link_map")]
    link_models: BTreeMap<LinkRef, ClusterModel>,
    node_models: BTreeMap<String, Classifier>,
}

impl PedfModel {
    /// Topology and data only; nothing fitted yet.
    pub fn untrained(skeleton: NetworkSkeleton, config: TrainingConfig) -> Self {
        PedfModel { skeleton, config, link_models: BTreeMap::new(), node_models: BTreeMap::new() }
    }

    /// Clusters every link, then trains every node.
    pub fn train(skeleton: NetworkSkeleton, config: TrainingConfig) -> Result<Self, NetworkError> {
        let mut model = PedfModel::untrained(skeleton, config);
        let links: BTreeSet<LinkRef> = model.skeleton.links.keys().cloned().collect();
        let nodes: BTreeSet<String> = model.skeleton.rows.keys().cloned().collect();
        model.refit(&links, &nodes)?;
        Ok(model)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.skeleton.schema
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn skeleton(&self) -> &NetworkSkeleton {
        &self.skeleton
    }

    pub fn link_model(&self, link: &LinkRef) -> Option<&ClusterModel> {
        self.link_models.get(link)
    }

    pub fn classifier(&self, node: &str) -> Option<&Classifier> {
        self.node_models.get(node)
    }

    pub fn has_node(&self, node: &str) -> bool {
        self.skeleton.nodes.contains(node)
    }

    /// Every link clustered and every node except END has a classifier.
    pub fn is_trained(&self) -> bool {
        self.skeleton.links.keys().all(|l| self.link_models.contains_key(l))
            && self.skeleton.nodes.iter().all(|n| n == END || self.node_models.contains_key(n))
    }

    /// Returns a new model with `case` added to the training data. Only links
    /// and nodes the case passes through are refitted; everything else is
    /// carried over unchanged. Unseen event types extend the network.
    pub fn update_with_case(&self, case: &Case) -> Result<PedfModel, NetworkError> {
        let mut next = self.clone();
        let touched = next.skeleton.add_case(case)?;
        next.refit(&touched.links, &touched.nodes)?;
        Ok(next)
    }

    fn refit(&mut self, links: &BTreeSet<LinkRef>, nodes: &BTreeSet<String>) -> Result<(), NetworkError> {
        let fitted: Vec<Result<(LinkRef, ClusterModel), NetworkError>> = links
            .par_iter()
            .map(|link| {
                let points: Vec<_> = self.skeleton.links[link].iter().map(TransitionRecord::to_point).collect();
                let seed = seed::derive(self.config.seed, &["link", &link.source, &link.dest]);
                self.config
                    .clusterer
                    .fit(&points, seed)
                    .map(|m| (link.clone(), m))
                    .map_err(|source| NetworkError::LinkFit { link: link.clone(), source })
            })
            .collect();
        for result in fitted {
            let (link, model) = result?;
            self.link_models.insert(link, model);
        }

        let fitted: Vec<Result<(String, Classifier), NetworkError>> = nodes
            .par_iter()
            .filter(|node| node.as_str() != END)
            .map(|node| {
                let rows = self.labeled_rows(node)?;
                let seed = seed::derive(self.config.seed, &["node", node]);
                self.config
                    .classifier
                    .fit(&rows, seed)
                    .map(|c| (node.clone(), c))
                    .map_err(|source| NetworkError::NodeFit { node: node.clone(), source })
            })
            .collect();
        for result in fitted {
            let (node, classifier) = result?;
            self.node_models.insert(node, classifier);
        }
        Ok(())
    }

    fn cluster_of(&self, r: &RecordRef) -> Result<usize, NetworkError> {
        let model = self.link_models.get(&r.link).ok_or(NetworkError::NotTrained)?;
        let record = self
            .skeleton
            .links
            .get(&r.link)
            .and_then(|records| records.get(r.index))
            .ok_or_else(|| NetworkError::CorruptModel(format!("dangling record reference on {}", r.link)))?;
        Ok(model.assign(&record.to_point()))
    }

    /// Classifier rows of `node` with cluster ids resolved against the current
    /// link models.
    pub fn labeled_rows(&self, node: &str) -> Result<Vec<LabeledRow>, NetworkError> {
        let rows = self.skeleton.rows.get(node).map(Vec::as_slice).unwrap_or(&[]);
        rows.iter()
            .map(|row| {
                let incoming = match &row.incoming {
                    Some(r) => Some((&r.link, self.cluster_of(r)?)),
                    None => None,
                };
                let input = encode_classifier_input(&row.state, incoming.map(|(l, _)| l), incoming.map(|(_, c)| c));
                let label = outcome_label(&row.outgoing.link.dest, self.cluster_of(&row.outgoing)?);
                Ok(LabeledRow::new(input, label))
            })
            .collect()
    }

    /// Per-link cluster counts, in link order.
    pub fn cluster_counts(&self) -> Vec<(LinkRef, usize)> {
        self.link_models.iter().map(|(l, m)| (l.clone(), m.k())).collect()
    }
}

/// Serializes `BTreeMap<LinkRef, V>` as a list of `[link, value]` pairs, since
/// JSON object keys must be strings.
mod link_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::features::LinkRef;

    pub fn serialize<V: Serialize, S: Serializer>(map: &BTreeMap<LinkRef, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<LinkRef, V>, D::Error> {
        let pairs: Vec<(LinkRef, V)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{augment_boundaries, EventRecord};

    fn log(traces: &[&[&str]]) -> EventLog {
        let schema = FeatureSchema::default();
        let cases = traces
            .iter()
            .enumerate()
            .map(|(i, t)| Case {
                id: format!("c{i}"),
                records: t.iter().map(|l| EventRecord::bare(&format!("c{i}"), l, 0, &schema)).collect(),
            })
            .collect();
        augment_boundaries(EventLog { schema, cases, augmented: false }).unwrap()
    }

    #[test]
    fn skeleton_of_single_path() {
        let s = build_skeleton(&log(&[&["A"], &["A"]])).unwrap();
        assert_eq!(s.nodes().iter().collect::<Vec<_>>(), ["A", "END", "START"]);
        let links: Vec<String> = s.links().map(|l| l.to_string()).collect();
        assert_eq!(links, ["A -> END", "START -> A"]);
        assert_eq!(s.node_rows("A").unwrap().len(), 2);
        assert!(s.node_rows("END").is_none());
    }

    #[test]
    fn forward_and_backward_links_coexist() {
        let s = build_skeleton(&log(&[&["A", "B", "A"]])).unwrap();
        assert!(s.link_records(&LinkRef::new("A", "B")).is_some());
        assert!(s.link_records(&LinkRef::new("B", "A")).is_some());
    }

    #[test]
    fn empty_and_unaugmented_training() {
        let empty = EventLog { schema: FeatureSchema::default(), cases: vec![], augmented: true };
        assert_eq!(build_skeleton(&empty).unwrap_err(), NetworkError::EmptyTraining);
        let mut l = log(&[&["A"]]);
        l.cases[0].records.pop();
        assert!(matches!(build_skeleton(&l), Err(NetworkError::NotAugmented(_))));
    }

    #[test]
    fn outcome_labels_round_trip() {
        assert_eq!(parse_outcome_label(&outcome_label("Send, Fine", 12)), Some(("Send, Fine", 12)));
        assert_eq!(parse_outcome_label("nope"), None);
    }
}
