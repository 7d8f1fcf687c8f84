//! Generic discrete Bayesian belief network with Dirichlet pseudo-count CPTs.
//!
//! A [`NetworkSpec`] declares nodes, their ordered states, parent edges and a
//! binary query node whose first state is `accept`. [`BayesNetwork::build`]
//! turns the spec into uniform CPTs; the network then supports
//!
//! - exact posterior inference of `P(query = accept | evidence)` by variable
//!   elimination over the ancestral subgraph ([`BayesNetwork::infer_acceptance`]),
//! - prior elicitation onto the query node's rows ([`BayesNetwork::elicit_priors`]),
//! - online learning by single-cell count increments ([`BayesNetwork::record_observation`]),
//! - leave-one-out factor attribution ([`BayesNetwork::top_factors`]).
//!
//! CPT rows are indexed mixed-radix over the node's parents, where parents are
//! taken in node declaration order and the first parent is most significant.

mod audit;
mod error;
mod evidence;
mod explain;
mod factor;
mod learning;
mod network;
mod spec;

pub use audit::{CptEntry, export_counts, import_counts};
pub use error::BbnError;
pub use evidence::{Evidence, Observation, Outcome};
pub use explain::{Direction, FactorAttribution};
pub use learning::{CptCell, StatePreference, DEFAULT_ACCEPT_SHARE, DEFAULT_ESS};
pub use network::{BayesNetwork, Cpt, DEFAULT_SMOOTHING};
pub use spec::{NetworkSpec, NodeSpec, ACCEPT, DECLINE, MAX_CPT_ROWS};

#[cfg(test)]
mod tests;
