use serde::{Deserialize, Serialize};

use super::{factor, BayesNetwork, BbnError, Observation};

/// Equivalent sample size used when eliciting priors from a profile.
pub const DEFAULT_ESS: f64 = 10.0;
/// Share of the elicited mass placed on `accept` for preference-matching rows.
pub const DEFAULT_ACCEPT_SHARE: f64 = 0.8;

/// A stated preference: the driver leans towards accepting when `node` is in `state`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatePreference {
    pub node: String,
    pub state: String,
}

impl StatePreference {
    pub fn new(node: impl Into<String>, state: impl Into<String>) -> Self {
        Self { node: node.into(), state: state.into() }
    }
}

/// The query-node cell touched by one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CptCell {
    pub row: usize,
    pub state: usize,
}

impl BayesNetwork {
    /// Adds `ess` pseudo-counts, split `accept_share : 1 - accept_share`, to every
    /// query-node row whose parent configuration matches at least one stated
    /// preference. Other rows and tables are untouched.
    pub fn elicit_priors_with_share(
        &mut self,
        preferences: &[StatePreference],
        ess: f64,
        accept_share: f64,
    ) -> Result<(), BbnError> {
        if !(ess.is_finite() && ess >= 0.0) {
            return Err(BbnError::InvalidSampleSize(ess));
        }
        if !(0.0..=1.0).contains(&accept_share) {
            return Err(BbnError::InvalidSampleSize(accept_share));
        }
        let layout = &self.layout;
        let mut wanted = Vec::with_capacity(preferences.len());
        for pref in preferences {
            let unknown = || BbnError::UnknownPreferenceDimension { node: pref.node.clone(), state: pref.state.clone() };
            let &node = layout.index.get(&pref.node).ok_or_else(unknown)?;
            let state = layout.state_index(node, &pref.state).ok_or_else(unknown)?;
            wanted.push((node, state));
        }
        if ess == 0.0 || wanted.is_empty() {
            return Ok(());
        }

        let query = layout.query;
        let parents = layout.parents[query].clone();
        let matching: Vec<usize> = (0..layout.rows[query])
            .filter(|&row| {
                let states = layout.decode_row(query, row);
                wanted.iter().any(|&(node, state)| {
                    parents.iter().position(|&p| p == node).is_some_and(|slot| states[slot] == state)
                })
            })
            .collect();

        let to_accept = ess * accept_share;
        let to_decline = ess - to_accept;
        let cpt = self.cpt_at_mut(query);
        for row in matching {
            let r = cpt.row_mut(row);
            r[0] += to_accept;
            r[1] += to_decline;
        }
        Ok(())
    }

    /// [`Self::elicit_priors_with_share`] with the default 80/20 split.
    pub fn elicit_priors(&mut self, preferences: &[StatePreference], ess: f64) -> Result<(), BbnError> {
        self.elicit_priors_with_share(preferences, ess, DEFAULT_ACCEPT_SHARE)
    }

    /// Increments exactly one query-node count: the cell for the observed parent
    /// configuration and outcome. Unobserved parents are imputed one at a time,
    /// in parent order, as their MAP state given the evidence (plus parents
    /// imputed before them); ties go to the first state.
    pub fn record_observation(&mut self, obs: &Observation) -> Result<CptCell, BbnError> {
        let cell = self.observation_cell(obs)?;
        let query = self.layout.query;
        self.cpt_at_mut(query).row_mut(cell.row)[cell.state] += 1.0;
        Ok(cell)
    }

    /// The cell [`Self::record_observation`] would increment, without mutating.
    pub fn observation_cell(&self, obs: &Observation) -> Result<CptCell, BbnError> {
        let layout = &self.layout;
        let mut observed = obs.evidence.resolve(layout)?;
        let query = layout.query;
        for &p in &layout.parents[query] {
            if observed[p].is_none() {
                let dist = factor::posterior(self, p, &observed);
                let map = dist
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (s, &v)| if v > best.1 { (s, v) } else { best })
                    .0;
                observed[p] = Some(map);
            }
        }
        let row = layout.row_of(query, |p| observed[p].expect("all query parents assigned"));
        Ok(CptCell { row, state: obs.outcome.state_index() })
    }
}
