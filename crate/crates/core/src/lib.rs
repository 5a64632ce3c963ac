//! PEDF: a predictive process-mining model built as a network of per-link
//! clusterers and per-node classifiers.
//!
//! An event log is turned into a directed graph whose nodes are event types and
//! whose links are observed transitions. Each link clusters the per-transition
//! differences (duration, numeric deltas, nominal post-values) it carries; each
//! node trains a classifier that maps the incoming link, its cluster and the
//! case's cumulative state to the next `(destination, cluster)` pair. Prediction
//! walks the network from the end of a known prefix, adding the chosen cluster
//! centroid to the cumulative state on every step.
//!
//! The crate also ships label-only sequence baselines, the event/duration/feature
//! error measures and a benchmark driver that sweeps the known fraction of each
//! test case.

pub mod baselines;
pub mod classification;
pub mod clustering;
pub mod evaluation;
pub mod event_log;
pub mod features;
pub mod network;
pub mod seed;

pub use baselines::{complete_sequence, SeqPredictor};
pub use classification::{Classifier, ClassifierConfig, LabeledRow};
pub use clustering::{ClusterModel, ClustererConfig};
pub use evaluation::{run_benchmark, BenchConfig, ErrorReport, ModelSpec, SuffixPair};
pub use event_log::{Case, EventLog, EventRecord, FeatureSchema, ParseConfig};
pub use features::{CumulativeState, LinkRef, MixedVector, TransitionRecord};
pub use network::{build_skeleton, NetworkSkeleton, PedfModel, PredictOptions, PredictedSuffix};
