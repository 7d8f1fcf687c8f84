use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::spec::{Layout, NetworkSpec};
use super::{factor, BbnError, Evidence};

/// Laplace smoothing.
pub const DEFAULT_SMOOTHING: f64 = 1.0;

/// Dirichlet pseudo-counts for one node, row-major: one row per parent
/// configuration, one column per node state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    card: usize,
    counts: Vec<f64>,
}

impl Cpt {
    fn uniform(rows: usize, card: usize, count: f64) -> Self {
        Self { card, counts: vec![count; rows * card] }
    }

    pub fn rows(&self) -> usize {
        self.counts.len() / self.card
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.counts[row * self.card..(row + 1) * self.card]
    }

    pub(crate) fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.counts[row * self.card..(row + 1) * self.card]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Normalised probability of `state` in `row`.
    pub fn probability(&self, row: usize, state: usize) -> f64 {
        let r = self.row(row);
        r[state] / r.iter().sum::<f64>()
    }
}

/// A validated network with its pseudo-count tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "StoredNetwork", into = "StoredNetwork")]
pub struct BayesNetwork {
    spec: NetworkSpec,
    smoothing: f64,
    cpts: Vec<Cpt>,
    pub(crate) layout: Layout,
}

impl PartialEq for BayesNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.smoothing.to_bits() == other.smoothing.to_bits() && self.cpts == other.cpts
    }
}

impl BayesNetwork {
    /// Validates `spec` and initialises every CPT cell to `smoothing`.
    pub fn build(spec: NetworkSpec, smoothing: f64) -> Result<Self, BbnError> {
        if !(smoothing.is_finite() && smoothing > 0.0) {
            return Err(BbnError::InvalidSmoothing(smoothing));
        }
        let layout = spec.compile()?;
        let cpts = (0..layout.names.len()).map(|i| Cpt::uniform(layout.rows[i], layout.card(i), smoothing)).collect();
        Ok(Self { spec, smoothing, cpts, layout })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn query_name(&self) -> &str {
        &self.layout.names[self.layout.query]
    }

    pub fn has_node(&self, node: &str) -> bool {
        self.layout.index.contains_key(node)
    }

    pub fn has_state(&self, node: &str, state: &str) -> bool {
        self.layout.index.get(node).is_some_and(|&i| self.layout.state_index(i, state).is_some())
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.layout.names.iter().map(String::as_str)
    }

    pub fn states(&self, node: &str) -> Option<&[String]> {
        self.layout.index.get(node).map(|&i| self.layout.states[i].as_slice())
    }

    /// Parents of `node` in CPT row order (most significant first).
    pub fn parents(&self, node: &str) -> Option<Vec<&str>> {
        let &i = self.layout.index.get(node)?;
        Some(self.layout.parents[i].iter().map(|&p| self.layout.names[p].as_str()).collect())
    }

    pub fn cpt(&self, node: &str) -> Option<&Cpt> {
        self.layout.index.get(node).map(|&i| &self.cpts[i])
    }

    pub(crate) fn cpt_at(&self, node: usize) -> &Cpt {
        &self.cpts[node]
    }

    pub(crate) fn cpt_at_mut(&mut self, node: usize) -> &mut Cpt {
        &mut self.cpts[node]
    }

    /// Parent assignment of a row, as `(parent, state)` labels.
    pub fn row_labels(&self, node: &str, row: usize) -> Option<Vec<(&str, &str)>> {
        let &i = self.layout.index.get(node)?;
        if row >= self.layout.rows[i] {
            return None;
        }
        let decoded = self.layout.decode_row(i, row);
        Some(
            self.layout.parents[i]
                .iter()
                .zip(decoded)
                .map(|(&p, s)| (self.layout.names[p].as_str(), self.layout.states[p][s].as_str()))
                .collect(),
        )
    }

    /// Exact `P(query = accept | evidence)`.
    pub fn infer_acceptance(&self, evidence: &Evidence) -> Result<f64, BbnError> {
        let observed = evidence.resolve(&self.layout)?;
        Ok(factor::posterior(self, self.layout.query, &observed)[0])
    }

    /// Exact posterior distribution of any unobserved node.
    pub fn posterior(&self, node: &str, evidence: &Evidence) -> Result<Vec<f64>, BbnError> {
        let &i = self.layout.index.get(node).ok_or_else(|| BbnError::UnknownNode(node.to_owned()))?;
        let observed = evidence.resolve(&self.layout)?;
        if observed[i].is_some() {
            return Err(BbnError::InvalidEvidence(format!("`{node}` is itself observed")));
        }
        Ok(factor::posterior(self, i, &observed))
    }

    /// Overwrites one CPT row. Counts must be finite and at least the
    /// smoothing floor.
    pub fn set_row(&mut self, node: &str, row: usize, counts: &[f64]) -> Result<(), BbnError> {
        let &i = self.layout.index.get(node).ok_or_else(|| BbnError::UnknownNode(node.to_owned()))?;
        let malformed = |reason: String| BbnError::MalformedCpt { node: node.to_owned(), reason };
        if row >= self.layout.rows[i] {
            return Err(malformed(format!("row {row} out of range")));
        }
        if counts.len() != self.layout.card(i) {
            return Err(malformed(format!("expected {} counts, got {}", self.layout.card(i), counts.len())));
        }
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= self.smoothing)) {
            return Err(malformed(format!("count {c} below smoothing floor {}", self.smoothing)));
        }
        self.cpts[i].row_mut(row).copy_from_slice(counts);
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct StoredNetwork {
    spec: NetworkSpec,
    smoothing: f64,
    /// node -> rows of counts
    cpts: BTreeMap<String, Vec<Vec<f64>>>,
}

impl From<BayesNetwork> for StoredNetwork {
    fn from(net: BayesNetwork) -> Self {
        let cpts = net
            .layout
            .names
            .iter()
            .zip(&net.cpts)
            .map(|(name, cpt)| (name.clone(), (0..cpt.rows()).map(|r| cpt.row(r).to_vec()).collect()))
            .collect();
        Self { spec: net.spec, smoothing: net.smoothing, cpts }
    }
}

impl TryFrom<StoredNetwork> for BayesNetwork {
    type Error = BbnError;

    fn try_from(stored: StoredNetwork) -> Result<Self, BbnError> {
        let mut net = BayesNetwork::build(stored.spec, stored.smoothing)?;
        if stored.cpts.len() != net.layout.names.len() {
            return Err(BbnError::MalformedCpt { node: "*".into(), reason: "table count does not match spec".into() });
        }
        for (name, rows) in stored.cpts {
            let &i = net.layout.index.get(&name).ok_or_else(|| BbnError::UnknownNode(name.clone()))?;
            if rows.len() != net.layout.rows[i] {
                return Err(BbnError::MalformedCpt { node: name, reason: "row count does not match spec".into() });
            }
            for (r, counts) in rows.iter().enumerate() {
                net.set_row(&name, r, counts)?;
            }
        }
        Ok(net)
    }
}
