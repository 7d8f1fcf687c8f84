use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::spec::{Layout, ACCEPT, DECLINE};
use super::BbnError;
use crate::time::Timestamp;

/// Observed states for non-query nodes, keyed by node name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evidence(BTreeMap<String, String>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, node: impl Into<String>, state: impl Into<String>) -> Self {
        self.set(node, state);
        self
    }

    pub fn set(&mut self, node: impl Into<String>, state: impl Into<String>) {
        self.0.insert(node.into(), state.into());
    }

    pub fn remove(&mut self, node: &str) -> Option<String> {
        self.0.remove(node)
    }

    pub fn get(&self, node: &str) -> Option<&str> {
        self.0.get(node).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Nodes whose assignment differs between the two evidence sets
    /// (including nodes assigned in only one of them).
    pub fn diff(&self, other: &Evidence) -> Vec<String> {
        let mut keys: Vec<&String> = self.0.keys().chain(other.0.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter().filter(|k| self.0.get(*k) != other.0.get(*k)).cloned().collect()
    }

    /// Resolves names to `(node, state)` indices, rejecting unknown names and
    /// any assignment to the query node.
    pub(crate) fn resolve(&self, layout: &Layout) -> Result<Vec<Option<usize>>, BbnError> {
        let mut out = vec![None; layout.names.len()];
        for (node, state) in &self.0 {
            let i = *layout
                .index
                .get(node)
                .ok_or_else(|| BbnError::InvalidEvidence(format!("unknown node `{node}`")))?;
            if i == layout.query {
                return Err(BbnError::InvalidEvidence(format!("query node `{node}` cannot be observed")));
            }
            let s = layout
                .state_index(i, state)
                .ok_or_else(|| BbnError::InvalidEvidence(format!("node `{node}` has no state `{state}`")))?;
            out[i] = Some(s);
        }
        Ok(out)
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accept,
    Decline,
}

impl Outcome {
    /// Column of the query node's CPT.
    pub fn state_index(self) -> usize {
        match self {
            Outcome::Accept => 0,
            Outcome::Decline => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Accept => ACCEPT,
            Outcome::Decline => DECLINE,
        }
    }
}

/// One accept/decline decision made under some observed context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub evidence: Evidence,
    pub outcome: Outcome,
    pub timestamp: Timestamp,
}
