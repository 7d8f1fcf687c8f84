//! Tabular CPT export/import: one `node,row_key,state,count` line per cell.
//!
//! The row key lists the parent assignment as `Parent=state` pairs joined by
//! `;`, in CPT row order. Root nodes use the key `-`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BayesNetwork, BbnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptEntry {
    pub node: String,
    pub row_key: String,
    pub state: String,
    pub count: f64,
}

fn row_key(net: &BayesNetwork, node: &str, row: usize) -> String {
    let labels = net.row_labels(node, row).expect("row in range");
    if labels.is_empty() {
        "-".to_owned()
    } else {
        labels.iter().map(|(p, s)| format!("{p}={s}")).collect::<Vec<_>>().join(";")
    }
}

pub fn cpt_entries(net: &BayesNetwork) -> Vec<CptEntry> {
    let mut out = Vec::new();
    for node in net.node_names() {
        let cpt = net.cpt(node).expect("declared node");
        let states = net.states(node).expect("declared node");
        for row in 0..cpt.rows() {
            let key = row_key(net, node, row);
            for (s, count) in cpt.row(row).iter().enumerate() {
                out.push(CptEntry { node: node.to_owned(), row_key: key.clone(), state: states[s].clone(), count: *count });
            }
        }
    }
    out
}

/// Writes all counts as CSV with a header line.
pub fn export_counts(net: &BayesNetwork) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for entry in cpt_entries(net) {
        w.serialize(entry).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

/// Replaces counts from CSV produced by [`export_counts`]. Every cell of every
/// mentioned row must be present; rows that are not mentioned are kept.
pub fn import_counts(net: &mut BayesNetwork, text: &str) -> Result<(), BbnError> {
    let mut rows: BTreeMap<(String, String), BTreeMap<String, f64>> = BTreeMap::new();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for (i, rec) in reader.deserialize::<CptEntry>().enumerate() {
        let line = i + 2;
        let entry = rec.map_err(|e| BbnError::CptImport { line, reason: e.to_string() })?;
        if rows.entry((entry.node, entry.row_key)).or_default().insert(entry.state, entry.count).is_some() {
            return Err(BbnError::CptImport { line, reason: "duplicate cell".into() });
        }
    }

    // Resolve everything before touching the network.
    let mut updates = Vec::with_capacity(rows.len());
    for ((node, key), cells) in rows {
        let cpt = net.cpt(&node).ok_or_else(|| BbnError::UnknownNode(node.clone()))?;
        let row = (0..cpt.rows())
            .find(|&r| row_key(net, &node, r) == key)
            .ok_or_else(|| BbnError::MalformedCpt { node: node.clone(), reason: format!("unknown row key `{key}`") })?;
        let states = net.states(&node).expect("declared node");
        let counts = states
            .iter()
            .map(|s| {
                cells.get(s).copied().ok_or_else(|| BbnError::MalformedCpt {
                    node: node.clone(),
                    reason: format!("row `{key}` is missing state `{s}`"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if cells.len() != states.len() {
            return Err(BbnError::MalformedCpt { node, reason: format!("row `{key}` has unknown states") });
        }
        updates.push((node, row, counts));
    }
    let mut staged = net.clone();
    for (node, row, counts) in updates {
        staged.set_row(&node, row, &counts)?;
    }
    *net = staged;
    Ok(())
}
