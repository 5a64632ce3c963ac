//! Versioned JSON model container.
//!
//! ```text
//! { "format": "pedf-model", "version": 1, "model": { schema, config, training data, fitted parts } }
//! ```
//!
//! Floats are written in shortest round-trip form and read back exactly, so a
//! reloaded model predicts bit-identically.

use serde::{Deserialize, Serialize};

use super::{parse_outcome_label, NetworkError, PedfModel};
use crate::features::LinkRef;

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "pedf-model";

#[derive(Serialize)]
struct ContainerRef<'a> {
    format: &'a str,
    version: u32,
    model: &'a PedfModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct Container {
    model: PedfModel,
}

impl PedfModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>, NetworkError> {
        if !self.is_trained() {
            return Err(NetworkError::NotTrained);
        }
        serde_json::to_vec(&ContainerRef { format: FORMAT_NAME, version: FORMAT_VERSION, model: self })
            .map_err(|e| NetworkError::CorruptModel(e.to_string()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PedfModel, NetworkError> {
        let corrupt = |e: serde_json::Error| NetworkError::CorruptModel(e.to_string());
        let header: Header = serde_json::from_slice(bytes).map_err(corrupt)?;
        if header.format != FORMAT_NAME {
            return Err(NetworkError::CorruptModel(format!("unexpected format `{}`", header.format)));
        }
        if header.version != FORMAT_VERSION {
            return Err(NetworkError::VersionMismatch { found: header.version, expected: FORMAT_VERSION });
        }
        let model = serde_json::from_slice::<Container>(bytes).map_err(corrupt)?.model;
        model.validate()?;
        Ok(model)
    }

    /// Serialized form of one node's classifier.
    pub fn classifier_bytes(&self, node: &str) -> Option<Vec<u8>> {
        self.classifier(node).map(|c| serde_json::to_vec(c).expect("classifiers serialize"))
    }

    /// Serialized form of one link's cluster model.
    pub fn link_model_bytes(&self, link: &LinkRef) -> Option<Vec<u8>> {
        self.link_model(link).map(|m| serde_json::to_vec(m).expect("cluster models serialize"))
    }

    fn validate(&self) -> Result<(), NetworkError> {
        if !self.is_trained() {
            return Err(NetworkError::CorruptModel("missing fitted links or nodes".into()));
        }
        for (node, classifier) in &self.node_models {
            for label in classifier.labels() {
                let (dest, cluster) = parse_outcome_label(label)
                    .ok_or_else(|| NetworkError::CorruptModel(format!("bad label `{label}` at `{node}`")))?;
                let k = self.link_model(&LinkRef::new(node.clone(), dest)).map_or(0, |m| m.k());
                if cluster >= k {
                    return Err(NetworkError::CorruptModel(format!("label `{label}` at `{node}` does not resolve")));
                }
            }
        }
        Ok(())
    }
}
