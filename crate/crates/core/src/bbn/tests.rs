use super::*;
use crate::time::at;

fn accept_node() -> NodeSpec {
    NodeSpec::new("Accept", [ACCEPT, DECLINE])
}

fn lone_accept() -> BayesNetwork {
    let spec = NetworkSpec { query: "Accept".into(), edges: vec![], nodes: vec![accept_node()] };
    BayesNetwork::build(spec, 1.0).unwrap()
}

fn chain(states: usize) -> BayesNetwork {
    let spec = NetworkSpec {
        query: "Accept".into(),
        edges: vec![("A".into(), "Accept".into())],
        nodes: vec![NodeSpec::new("A", (1..=states).map(|i| format!("a{i}"))), accept_node()],
    };
    BayesNetwork::build(spec, 1.0).unwrap()
}

fn obs(evidence: Evidence, outcome: Outcome) -> Observation {
    Observation { evidence, outcome, timestamp: at("2024-06-03T09:00:00Z") }
}

#[test]
fn build_initialises_uniform_counts() {
    let net = lone_accept();
    let cpt = net.cpt("Accept").unwrap();
    assert_eq!(cpt.rows(), 1);
    assert_eq!(cpt.row(0), &[1.0, 1.0]);

    let net = chain(3);
    let cpt = net.cpt("Accept").unwrap();
    assert_eq!(cpt.rows(), 3);
    assert!((0..3).all(|r| cpt.row(r) == [1.0, 1.0]));
}

#[test]
fn build_rejects_bad_smoothing() {
    let spec = NetworkSpec { query: "Accept".into(), edges: vec![], nodes: vec![accept_node()] };
    assert_eq!(BayesNetwork::build(spec.clone(), 0.0), Err(BbnError::InvalidSmoothing(0.0)));
    assert!(BayesNetwork::build(spec, f64::NAN).is_err());
}

#[test]
fn uniform_prior_gives_one_half() {
    assert_eq!(lone_accept().infer_acceptance(&Evidence::new()).unwrap(), 0.5);
}

#[test]
fn single_row_lookup() {
    let mut net = chain(2);
    net.set_row("Accept", 0, &[9.0, 1.0]).unwrap();
    let p = net.infer_acceptance(&Evidence::new().with("A", "a1")).unwrap();
    assert!((p - 0.9).abs() < 1e-15);
}

#[test]
fn evidence_validation() {
    let net = chain(2);
    for bad in [
        Evidence::new().with("Nope", "x"),
        Evidence::new().with("A", "zzz"),
        Evidence::new().with("Accept", "accept"),
    ] {
        assert!(matches!(net.infer_acceptance(&bad), Err(BbnError::InvalidEvidence(_))), "{bad:?}");
    }
}

#[test]
fn observation_increments_one_cell() {
    let mut net = lone_accept();
    net.record_observation(&obs(Evidence::new(), Outcome::Accept)).unwrap();
    assert_eq!(net.cpt("Accept").unwrap().row(0), &[2.0, 1.0]);
}

#[test]
fn posterior_mean_matches_dirichlet_closed_form() {
    let mut net = chain(3);
    let e = Evidence::new().with("A", "a2");
    let (n, accepts) = (37, 23);
    for i in 0..n {
        let outcome = if i < accepts { Outcome::Accept } else { Outcome::Decline };
        net.record_observation(&obs(e.clone(), outcome)).unwrap();
    }
    let p = net.infer_acceptance(&e).unwrap();
    let expected = (1.0 + accepts as f64) / (2.0 + n as f64);
    assert!((p - expected).abs() < 1e-12, "{p} vs {expected}");
}

#[test]
fn decline_leaves_other_rows_bit_identical() {
    let mut net = chain(3);
    let before = net.clone();
    net.record_observation(&obs(Evidence::new().with("A", "a3"), Outcome::Decline)).unwrap();
    let (a, b) = (before.cpt("Accept").unwrap(), net.cpt("Accept").unwrap());
    for r in 0..2 {
        assert_eq!(a.row(r), b.row(r));
    }
    assert_eq!(b.row(2), &[1.0, 2.0]);
    assert_eq!(before.cpt("A"), net.cpt("A"));
}

#[test]
fn missing_parent_is_imputed_by_map() {
    // A's prior favours a2, so an observation without A lands in row a2.
    let mut net = chain(3);
    net.set_row("A", 0, &[1.0, 5.0, 1.0]).unwrap();
    let cell = net.record_observation(&obs(Evidence::new(), Outcome::Accept)).unwrap();
    assert_eq!(cell, CptCell { row: 1, state: 0 });
}

fn airport_fixture() -> BayesNetwork {
    let spec = NetworkSpec {
        query: "Accept".into(),
        edges: vec![("DestinationCategory".into(), "Accept".into()), ("Fatigue".into(), "Accept".into())],
        nodes: vec![
            NodeSpec::new("DestinationCategory", ["airport", "downtown", "other"]),
            NodeSpec::new("Fatigue", ["fresh", "tired"]),
            accept_node(),
        ],
    };
    BayesNetwork::build(spec, 1.0).unwrap()
}

#[test]
fn elicitation_adds_ess_to_matching_rows_only() {
    let mut net = airport_fixture();
    net.elicit_priors(&[StatePreference::new("DestinationCategory", "airport")], 10.0).unwrap();
    let cpt = net.cpt("Accept").unwrap();
    for row in 0..cpt.rows() {
        let labels = net.row_labels("Accept", row).unwrap();
        let airport = labels.contains(&("DestinationCategory", "airport"));
        // By hand: 1 + 0.8 * 10 = 9 and 1 + 0.2 * 10 = 3, row sum 2 + 10.
        let expected: &[f64] = if airport { &[9.0, 3.0] } else { &[1.0, 1.0] };
        assert_eq!(cpt.row(row), expected, "{labels:?}");
    }
}

#[test]
fn elicitation_no_preferences_or_zero_mass_is_identity() {
    let base = airport_fixture();
    let mut a = base.clone();
    a.elicit_priors(&[], 10.0).unwrap();
    assert_eq!(a, base);
    let mut b = base.clone();
    b.elicit_priors(&[StatePreference::new("DestinationCategory", "airport")], 0.0).unwrap();
    assert_eq!(b, base);
}

#[test]
fn elicitation_rejects_unknown_dimension() {
    let mut net = airport_fixture();
    let err = net.elicit_priors(&[StatePreference::new("Weather", "rain")], 10.0).unwrap_err();
    assert!(matches!(err, BbnError::UnknownPreferenceDimension { .. }));
    let err = net.elicit_priors(&[StatePreference::new("Fatigue", "sleepy")], 10.0).unwrap_err();
    assert!(matches!(err, BbnError::UnknownPreferenceDimension { .. }));
}

#[test]
fn single_evidence_variable_is_the_only_factor() {
    let mut net = chain(2);
    net.set_row("Accept", 0, &[9.0, 1.0]).unwrap();
    let f = net.top_factors(&Evidence::new().with("A", "a1"), 3).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].factor, "A");
    // Without A: 0.5 * 0.9 + 0.5 * 0.5 = 0.7
    assert!((f[0].impact - 0.2).abs() < 1e-12);
    assert_eq!(f[0].direction, Direction::Raises);
}

#[test]
fn disconnected_evidence_has_zero_impact() {
    let spec = NetworkSpec {
        query: "Accept".into(),
        edges: vec![("A".into(), "Accept".into())],
        nodes: vec![NodeSpec::new("A", ["a1", "a2"]), NodeSpec::new("Z", ["z1", "z2"]), accept_node()],
    };
    let mut net = BayesNetwork::build(spec, 1.0).unwrap();
    net.set_row("Accept", 1, &[2.0, 7.0]).unwrap();
    let f = net.top_factors(&Evidence::new().with("A", "a2").with("Z", "z1"), 5).unwrap();
    assert_eq!(f[0].factor, "A");
    assert_eq!(f[1].factor, "Z");
    assert!(f[1].impact < 1e-12);
}

#[test]
fn top_factors_needs_evidence() {
    assert!(lone_accept().top_factors(&Evidence::new(), 3).is_err());
}

#[test]
fn ties_break_by_name() {
    let spec = NetworkSpec {
        query: "Accept".into(),
        edges: vec![],
        nodes: vec![NodeSpec::new("B", ["x", "y"]), NodeSpec::new("A", ["x", "y"]), accept_node()],
    };
    let net = BayesNetwork::build(spec, 1.0).unwrap();
    let f = net.top_factors(&Evidence::new().with("B", "x").with("A", "y"), 2).unwrap();
    assert_eq!(f.iter().map(|a| a.factor.as_str()).collect::<Vec<_>>(), ["A", "B"]);
}

#[test]
fn cpt_csv_round_trip_and_rejections() {
    let mut net = airport_fixture();
    net.set_row("Accept", 4, &[3.5, 1.25]).unwrap();
    let csv = export_counts(&net);
    assert!(csv.starts_with("node,row_key,state,count\n"));
    assert!(csv.contains("Accept,DestinationCategory=other;Fatigue=fresh,accept,3.5"));

    let mut fresh = airport_fixture();
    import_counts(&mut fresh, &csv).unwrap();
    assert_eq!(fresh, net);

    let below_floor = "node,row_key,state,count\nFatigue,-,fresh,0.5\nFatigue,-,tired,1\n";
    assert!(import_counts(&mut fresh, below_floor).is_err());
    let partial = "node,row_key,state,count\nFatigue,-,fresh,2\n";
    assert!(import_counts(&mut fresh, partial).is_err());
    assert_eq!(fresh, net, "failed imports leave the network untouched");
}

#[test]
fn serde_round_trip_is_exact() {
    let mut net = airport_fixture();
    net.elicit_priors(&[StatePreference::new("Fatigue", "fresh")], 7.3).unwrap();
    let json = serde_json::to_string(&net).unwrap();
    let back: BayesNetwork = serde_json::from_str(&json).unwrap();
    assert_eq!(back, net);
}
