mod common;

use common::*;
use coopride_core::bbn::{BayesNetwork, Evidence, NetworkSpec, NodeSpec, Observation, Outcome, ACCEPT, DECLINE};
use coopride_core::time::at;
use proptest::prelude::*;

fn four_node_fixture() -> BayesNetwork {
    // Weather -> Traffic -> Accept <- Surge, plus Weather -> Surge.
    let spec = NetworkSpec {
        query: "Accept".into(),
        edges: vec![
            ("Weather".into(), "Traffic".into()),
            ("Traffic".into(), "Accept".into()),
            ("Surge".into(), "Accept".into()),
            ("Weather".into(), "Surge".into()),
        ],
        nodes: vec![
            NodeSpec::new("Accept", [ACCEPT, DECLINE]),
            NodeSpec::new("Traffic", ["light", "heavy", "jam"]),
            NodeSpec::new("Weather", ["dry", "rain"]),
            NodeSpec::new("Surge", ["no", "yes"]),
        ],
    };
    let mut net = BayesNetwork::build(spec, 1.0).unwrap();
    let mut r = rng(4);
    for name in ["Accept", "Traffic", "Weather", "Surge"] {
        let (rows, card) = (net.cpt(name).unwrap().rows(), net.cpt(name).unwrap().card());
        for row in 0..rows {
            let counts: Vec<f64> = (0..card).map(|_| 1.0 + rand::Rng::random_range(&mut r, 0.0..9.0)).collect();
            net.set_row(name, row, &counts).unwrap();
        }
    }
    net
}

#[test]
fn four_node_partial_evidence_matches_enumeration() {
    let net = four_node_fixture();
    for e in [
        Evidence::new(),
        Evidence::new().with("Weather", "rain"),
        Evidence::new().with("Traffic", "jam"),
        Evidence::new().with("Weather", "dry").with("Surge", "yes"),
    ] {
        let got = net.infer_acceptance(&e).unwrap();
        let want = joint_enumeration_acceptance(&net, &e);
        assert!((got - want).abs() < 1e-12, "{e:?}: {got} vs {want}");
    }
}

#[test]
fn three_variable_ranking_matches_oracle() {
    let net = four_node_fixture();
    let e = Evidence::new().with("Weather", "rain").with("Traffic", "heavy").with("Surge", "no");
    let impacts = oracle_impacts(&net, &e);
    let mut expected: Vec<(String, f64)> = impacts.into_iter().collect();
    expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let got = net.top_factors(&e, 3).unwrap();
    assert_eq!(got.len(), 3);
    for (g, (name, impact)) in got.iter().zip(&expected) {
        assert_eq!(&g.factor, name);
        assert!((g.impact - impact).abs() < 1e-12);
    }
}

#[test]
fn posterior_converges_to_empirical_frequency() {
    let spec = NetworkSpec {
        query: "Accept".into(),
        edges: vec![("A".into(), "Accept".into())],
        nodes: vec![NodeSpec::new("A", ["a1", "a2"]), NodeSpec::new("Accept", [ACCEPT, DECLINE])],
    };
    let mut net = BayesNetwork::build(spec, 1.0).unwrap();
    let e = Evidence::new().with("A", "a1");
    let mut r = rng(11);
    let mut accepts = 0;
    for _ in 0..1000 {
        let outcome = if rand::Rng::random_bool(&mut r, 0.73) { Outcome::Accept } else { Outcome::Decline };
        accepts += usize::from(outcome == Outcome::Accept);
        net.record_observation(&Observation { evidence: e.clone(), outcome, timestamp: at("2024-01-01T00:00:00Z") })
            .unwrap();
    }
    let empirical = accepts as f64 / 1000.0;
    let p = net.infer_acceptance(&e).unwrap();
    assert!((p - empirical).abs() <= 0.02, "{p} vs {empirical}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inference_equals_joint_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, 6, 4);
        for _ in 0..5 {
            let e = random_evidence(&mut r, &net);
            let got = net.infer_acceptance(&e).unwrap();
            let want = joint_enumeration_acceptance(&net, &e);
            prop_assert!((got - want).abs() < 1e-9, "{:?}: {} vs {}", e, got, want);
        }
    }

    #[test]
    fn observation_conserves_counts(seed in any::<u64>(), accept in any::<bool>()) {
        let mut r = rng(seed);
        let mut net = random_network(&mut r, 6, 4);
        let e = random_evidence(&mut r, &net);
        let before = net.clone();
        let outcome = if accept { Outcome::Accept } else { Outcome::Decline };
        net.record_observation(&Observation { evidence: e, outcome, timestamp: at("2024-01-01T00:00:00Z") }).unwrap();
        let q = net.query_name().to_owned();
        let (after_t, before_t) = (net.cpt(&q).unwrap(), before.cpt(&q).unwrap());
        let mut changed = Vec::new();
        for row in 0..after_t.rows() {
            for (s, (a, b)) in after_t.row(row).iter().zip(before_t.row(row)).enumerate() {
                if a != b {
                    changed.push((row, s, *a, *b));
                }
            }
        }
        prop_assert_eq!(changed.len(), 1);
        let (_, state, a, b) = changed[0];
        prop_assert_eq!(a, b + 1.0);
        prop_assert_eq!(state, if accept { 0 } else { 1 });
        prop_assert!((after_t.total() - before_t.total() - 1.0).abs() < 1e-9);
        for name in net.node_names().filter(|n| *n != q) {
            prop_assert_eq!(net.cpt(name), before.cpt(name));
        }
    }

    #[test]
    fn top_factor_dominates_every_other_removal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, 6, 4);
        let e = random_evidence(&mut r, &net);
        prop_assume!(!e.is_empty());
        let ranked = net.top_factors(&e, e.len()).unwrap();
        let impacts = oracle_impacts(&net, &e);
        let best = impacts[&ranked[0].factor];
        for v in impacts.values() {
            prop_assert!(best + 1e-12 >= *v);
        }
        // deterministic
        prop_assert_eq!(net.top_factors(&e, e.len()).unwrap(), ranked);
        prop_assert_eq!(net.infer_acceptance(&e).unwrap().to_bits(), net.infer_acceptance(&e).unwrap().to_bits());
    }
}
