use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{BayesNetwork, BbnError, Evidence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Knowing this factor makes acceptance more likely.
    Raises,
    Lowers,
    /// No measurable shift.
    Neutral,
}

/// How much one evidence variable moves the acceptance probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorAttribution {
    pub factor: String,
    pub state: String,
    /// `|P(accept | e) - P(accept | e without factor)|`
    pub impact: f64,
    pub direction: Direction,
}

impl BayesNetwork {
    /// Leave-one-out attribution: each evidence variable is scored by the
    /// absolute change in `P(accept)` when it is dropped. Sorted by impact
    /// descending, ties by node name; at most `k` entries.
    pub fn top_factors(&self, evidence: &Evidence, k: usize) -> Result<Vec<FactorAttribution>, BbnError> {
        if evidence.is_empty() {
            return Err(BbnError::InvalidEvidence("explanations need at least one evidence variable".into()));
        }
        let with = self.infer_acceptance(evidence)?;
        let mut out = Vec::with_capacity(evidence.len());
        for (node, state) in evidence.iter() {
            let mut reduced = evidence.clone();
            reduced.remove(node);
            let without = self.infer_acceptance(&reduced)?;
            let shift = with - without;
            let direction = match shift.partial_cmp(&0.0) {
                Some(Ordering::Greater) => Direction::Raises,
                Some(Ordering::Less) => Direction::Lowers,
                _ => Direction::Neutral,
            };
            out.push(FactorAttribution { factor: node.to_owned(), state: state.to_owned(), impact: shift.abs(), direction });
        }
        out.sort_by(|a, b| b.impact.total_cmp(&a.impact).then_with(|| a.factor.cmp(&b.factor)));
        out.truncate(k);
        Ok(out)
    }
}
