use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::BbnError;

pub const ACCEPT: &str = "accept";
pub const DECLINE: &str = "decline";

/// Upper bound on parent-state combinations for any one node.
pub const MAX_CPT_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub states: Vec<String>,
}

impl NodeSpec {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Self { name: name.into(), states: states.into_iter().map(Into::into).collect() }
    }
}

/// Declarative network structure. Serialized as TOML for human review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub query: String,
    /// `(parent, child)` pairs.
    pub edges: Vec<(String, String)>,
    pub nodes: Vec<NodeSpec>,
}

impl NetworkSpec {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("network spec is always representable as toml")
    }

    pub(crate) fn compile(&self) -> Result<Layout, BbnError> {
        Layout::compile(self)
    }
}

/// Index-based view of a validated spec.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub names: Vec<String>,
    pub states: Vec<Vec<String>>,
    pub index: BTreeMap<String, usize>,
    /// Parents per node, ascending by declaration index.
    pub parents: Vec<Vec<usize>>,
    /// Number of parent configurations per node.
    pub rows: Vec<usize>,
    pub query: usize,
}

impl Layout {
    fn compile(spec: &NetworkSpec) -> Result<Self, BbnError> {
        let mut index = BTreeMap::new();
        for (i, node) in spec.nodes.iter().enumerate() {
            if index.insert(node.name.clone(), i).is_some() {
                return Err(BbnError::StateCollision { node: node.name.clone(), state: "<duplicate node>".into() });
            }
            if node.states.len() < 2 {
                return Err(BbnError::TooFewStates(node.name.clone()));
            }
            let mut seen = BTreeSet::new();
            for s in &node.states {
                if !seen.insert(s.as_str()) {
                    return Err(BbnError::StateCollision { node: node.name.clone(), state: s.clone() });
                }
            }
        }

        let n = spec.nodes.len();
        let mut parents = vec![Vec::new(); n];
        for (p, c) in &spec.edges {
            let pi = *index.get(p).ok_or_else(|| BbnError::UnknownNode(p.clone()))?;
            let ci = *index.get(c).ok_or_else(|| BbnError::UnknownNode(c.clone()))?;
            if pi == ci {
                return Err(BbnError::CycleDetected(p.clone()));
            }
            if !parents[ci].contains(&pi) {
                parents[ci].push(pi);
            }
        }
        for ps in &mut parents {
            ps.sort_unstable();
        }

        // Kahn's algorithm; anything left over sits on a cycle.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(i) = ready.pop() {
            visited += 1;
            for (c, ps) in parents.iter().enumerate() {
                if ps.contains(&i) {
                    indegree[c] -= 1;
                    if indegree[c] == 0 {
                        ready.push(c);
                    }
                }
            }
        }
        if visited < n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).expect("unvisited node exists");
            return Err(BbnError::CycleDetected(spec.nodes[stuck].name.clone()));
        }

        let states: Vec<Vec<String>> = spec.nodes.iter().map(|nd| nd.states.clone()).collect();
        let mut rows = Vec::with_capacity(n);
        for (i, ps) in parents.iter().enumerate() {
            let mut r: usize = 1;
            for &p in ps {
                r = r.saturating_mul(states[p].len());
            }
            if r > MAX_CPT_ROWS {
                return Err(BbnError::CptTooLarge { node: spec.nodes[i].name.clone(), rows: r, limit: MAX_CPT_ROWS });
            }
            rows.push(r);
        }

        let query = *index.get(&spec.query).ok_or_else(|| BbnError::UnknownNode(spec.query.clone()))?;
        if states[query] != [ACCEPT, DECLINE] {
            return Err(BbnError::InvalidQueryNode {
                node: spec.query.clone(),
                reason: format!("states must be [{ACCEPT}, {DECLINE}], got {:?}", states[query]),
            });
        }

        Ok(Self { names: spec.nodes.iter().map(|nd| nd.name.clone()).collect(), states, index, parents, rows, query })
    }

    pub fn card(&self, node: usize) -> usize {
        self.states[node].len()
    }

    pub fn state_index(&self, node: usize, state: &str) -> Option<usize> {
        self.states[node].iter().position(|s| s == state)
    }

    /// Row of `node`'s CPT for a full assignment of its parents.
    pub fn row_of(&self, node: usize, assignment: impl Fn(usize) -> usize) -> usize {
        self.parents[node].iter().fold(0, |acc, &p| acc * self.card(p) + assignment(p))
    }

    /// Inverse of [`Layout::row_of`]: parent states for a row, in parent order.
    pub fn decode_row(&self, node: usize, mut row: usize) -> Vec<usize> {
        let mut out = vec![0; self.parents[node].len()];
        for (slot, &p) in self.parents[node].iter().enumerate().rev() {
            let c = self.card(p);
            out[slot] = row % c;
            row /= c;
        }
        out
    }
}
