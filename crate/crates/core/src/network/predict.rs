use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{parse_outcome_label, NetworkError, PedfModel};
use crate::classification::argmax;
use crate::event_log::{Case, END, START};
use crate::features::{
    cumulative_states, encode_classifier_input, extract_transitions, CumulativeState, LinkRef, MixedVector,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictOptions {
    /// Maximum number of predicted events, END not counted.
    pub cap: usize,
    /// Draw each step from the classifier distribution instead of taking the
    /// most probable outcome.
    pub sample_seed: Option<u64>,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions { cap: 10, sample_seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    End,
    Cap,
}

/// Predicted continuation of a case. Per-step vectors align with `events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedSuffix {
    pub events: Vec<String>,
    /// Duration added by each step, seconds.
    pub durations: Vec<f64>,
    /// Numeric deltas and nominal post-values added by each step.
    pub features: Vec<MixedVector>,
    /// Cumulative state after each step.
    pub states: Vec<CumulativeState>,
    pub terminated_by: Termination,
}

impl PredictedSuffix {
    fn empty(terminated_by: Termination) -> Self {
        PredictedSuffix { events: vec![], durations: vec![], features: vec![], states: vec![], terminated_by }
    }

    /// Number of predicted events other than END.
    pub fn real_len(&self) -> usize {
        self.events.iter().filter(|e| *e != END).count()
    }
}

impl PedfModel {
    /// Replays `prefix` (which must start with START) to obtain the cumulative
    /// state and the incoming link/cluster, then repeatedly picks the next
    /// `(destination, cluster)`, adds that cluster's centroid to the state and
    /// moves on, until END or `cap` predicted events.
    pub fn predict_case(&self, prefix: &Case, options: &PredictOptions) -> Result<PredictedSuffix, NetworkError> {
        if prefix.records.first().is_none_or(|r| r.label != START) {
            return Err(NetworkError::NotAugmented(prefix.id.clone()));
        }
        if let Some(unknown) = prefix.records.iter().find(|r| !self.has_node(&r.label)) {
            return Err(NetworkError::UnknownEvent(unknown.label.clone()));
        }
        if prefix.records.last().is_some_and(|r| r.label == END) {
            return Ok(PredictedSuffix::empty(Termination::End));
        }
        let schema = self.schema();
        let mut state = cumulative_states(prefix, schema).pop().expect("non-empty prefix");
        let mut incoming: Option<(LinkRef, Option<usize>)> = extract_transitions(prefix, schema).pop().map(|record| {
            let link = record.link();
            // a link never seen in training still names its source; the cluster stays unknown
            let cluster = self.link_model(&link).map(|m| m.assign(&record.to_point()));
            (link, cluster)
        });

        let mut rng = options.sample_seed.map(ChaCha8Rng::seed_from_u64);
        let mut out = PredictedSuffix::empty(Termination::Cap);
        let mut produced = 0;
        while produced < options.cap {
            let node = state.node.clone();
            let classifier = self.classifier(&node).ok_or_else(|| NetworkError::DeadEnd(node.clone()))?;
            let input = encode_classifier_input(
                &state,
                incoming.as_ref().map(|(l, _)| l),
                incoming.as_ref().and_then(|(_, c)| *c),
            );
            let dist = classifier
                .predict_dist(&input)
                .map_err(|source| NetworkError::Predict { node: node.clone(), source })?;
            let choice = match rng.as_mut() {
                Some(rng) => WeightedIndex::new(&dist).map_or_else(|_| argmax(&dist), |w| w.sample(rng)),
                None => argmax(&dist),
            };
            let label = &classifier.labels()[choice];
            let (dest, cluster) = parse_outcome_label(label)
                .ok_or_else(|| NetworkError::CorruptModel(format!("bad classifier label `{label}`")))?;
            let link = LinkRef::new(node.clone(), dest);
            let centroid = self
                .link_model(&link)
                .ok_or_else(|| NetworkError::CorruptModel(format!("classifier points at unknown link {link}")))?
                .centroid(cluster)
                .map_err(|e| NetworkError::CorruptModel(format!("{link}: {e}")))?;

            state = state.advance(dest, centroid);
            out.events.push(dest.to_string());
            out.durations.push(centroid.numeric[0]);
            out.features.push(MixedVector::new(centroid.numeric[1..].to_vec(), centroid.nominal.clone()));
            out.states.push(state.clone());
            if dest == END {
                out.terminated_by = Termination::End;
                return Ok(out);
            }
            produced += 1;
            incoming = Some((link, Some(cluster)));
        }
        Ok(out)
    }
}
