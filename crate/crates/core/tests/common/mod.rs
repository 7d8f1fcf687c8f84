//! Test-only oracles. These deliberately avoid the library's inference path:
//! acceptance probabilities are recomputed by summing the full joint.

#![allow(dead_code)]

use std::collections::BTreeMap;

use coopride_core::bbn::{BayesNetwork, Evidence, NetworkSpec, NodeSpec, ACCEPT, DECLINE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `P(query = accept | evidence)` by brute-force enumeration of every joint
/// assignment. Row indices follow the documented CPT layout: parents in node
/// declaration order, first parent most significant.
pub fn joint_enumeration_acceptance(net: &BayesNetwork, evidence: &Evidence) -> f64 {
    let names: Vec<String> = net.node_names().map(str::to_owned).collect();
    let cards: Vec<usize> = names.iter().map(|n| net.states(n).unwrap().len()).collect();
    let pos: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let fixed: Vec<Option<usize>> = names
        .iter()
        .map(|n| evidence.get(n).map(|s| net.states(n).unwrap().iter().position(|x| x == s).unwrap()))
        .collect();
    let query = pos[net.query_name()];
    let parents: Vec<Vec<usize>> = names
        .iter()
        .map(|n| {
            let mut ps: Vec<usize> = net.parents(n).unwrap().iter().map(|p| pos[p]).collect();
            ps.sort_unstable();
            ps
        })
        .collect();

    let mut assignment = vec![0usize; names.len()];
    let (mut accept, mut total) = (0.0, 0.0);
    loop {
        let consistent = fixed.iter().zip(&assignment).all(|(f, a)| f.is_none_or(|f| f == *a));
        if consistent {
            let mut p = 1.0;
            for (i, name) in names.iter().enumerate() {
                let row = parents[i].iter().fold(0, |acc, &q| acc * cards[q] + assignment[q]);
                let counts = net.cpt(name).unwrap().row(row);
                p *= counts[assignment[i]] / counts.iter().sum::<f64>();
            }
            total += p;
            if assignment[query] == 0 {
                accept += p;
            }
        }
        // odometer over all nodes
        let mut k = 0;
        loop {
            if k == names.len() {
                return accept / total;
            }
            assignment[k] += 1;
            if assignment[k] < cards[k] {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}

/// Leave-one-out impacts computed with the enumeration oracle.
pub fn oracle_impacts(net: &BayesNetwork, evidence: &Evidence) -> BTreeMap<String, f64> {
    let with = joint_enumeration_acceptance(net, evidence);
    evidence
        .nodes()
        .map(|n| {
            let mut reduced = evidence.clone();
            reduced.remove(n);
            (n.to_owned(), (with - joint_enumeration_acceptance(net, &reduced)).abs())
        })
        .collect()
}

/// A random DAG with `2..=max_nodes` nodes (one of them the query), each
/// non-query node with `2..=max_states` states, and random counts >= 1.
pub fn random_network(rng: &mut ChaCha8Rng, max_nodes: usize, max_states: usize) -> BayesNetwork {
    let n = rng.random_range(2..=max_nodes);
    let mut names: Vec<String> = (0..n - 1).map(|i| format!("N{i}")).collect();
    names.push("Accept".into());
    // Random topological order, independent of declaration order.
    let mut topo = names.clone();
    topo.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.45) {
                edges.push((topo[i].clone(), topo[j].clone()));
            }
        }
    }
    let mut decl = names.clone();
    decl.shuffle(rng);
    let nodes = decl
        .iter()
        .map(|name| {
            if name == "Accept" {
                NodeSpec::new(name.clone(), [ACCEPT, DECLINE])
            } else {
                let k = rng.random_range(2..=max_states);
                NodeSpec::new(name.clone(), (0..k).map(|s| format!("s{s}")))
            }
        })
        .collect();
    let spec = NetworkSpec { query: "Accept".into(), edges, nodes };
    let mut net = BayesNetwork::build(spec, 1.0).expect("generated spec is valid");
    let names: Vec<String> = net.node_names().map(str::to_owned).collect();
    for name in names {
        let (rows, card) = {
            let cpt = net.cpt(&name).unwrap();
            (cpt.rows(), cpt.card())
        };
        for r in 0..rows {
            let counts: Vec<f64> = (0..card).map(|_| 1.0 + rng.random_range(0.0..20.0)).collect();
            net.set_row(&name, r, &counts).unwrap();
        }
    }
    net
}

/// Random partial evidence over non-query nodes.
pub fn random_evidence(rng: &mut ChaCha8Rng, net: &BayesNetwork) -> Evidence {
    let mut e = Evidence::new();
    for name in net.node_names() {
        if name == net.query_name() || !rng.random_bool(0.5) {
            continue;
        }
        let states = net.states(name).unwrap();
        e.set(name, states[rng.random_range(0..states.len())].clone());
    }
    e
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
