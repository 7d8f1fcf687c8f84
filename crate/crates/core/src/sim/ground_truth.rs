use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bbn::{Evidence, Outcome};
use crate::context::{attractiveness_points, nodes};
use crate::ids::DriverId;

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Keeps P* strictly inside (0, 1) even for saturated scores.
const P_EDGE: f64 = 1e-12;

/// A simulated driver whose acceptance odds are linear in the discretized
/// offer context: P*(accept) = logistic(bias + sum of active state weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthDriver {
    pub driver: DriverId,
    pub bias: f64,
    /// node -> state -> weight; missing entries weigh 0.
    pub weights: BTreeMap<String, BTreeMap<String, f64>>,
}

impl GroundTruthDriver {
    /// All weights and the bias zero: accepts half the time.
    pub fn neutral(driver: DriverId) -> Self {
        Self { driver, bias: 0.0, weights: BTreeMap::new() }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_weight(mut self, node: &str, state: &str, weight: f64) -> Self {
        self.weights.entry(node.to_owned()).or_default().insert(state.to_owned(), weight);
        self
    }

    pub fn weight(&self, node: &str, state: &str) -> f64 {
        self.weights.get(node).and_then(|s| s.get(state)).copied().unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.values().flat_map(|s| s.values()).all(|w| w.is_finite())
    }

    pub fn score(&self, evidence: &Evidence) -> f64 {
        self.bias + evidence.iter().map(|(n, s)| self.weight(n, s)).sum::<f64>()
    }

    pub fn p_accept(&self, evidence: &Evidence) -> f64 {
        logistic(self.score(evidence)).clamp(P_EDGE, 1.0 - P_EDGE)
    }

    /// A driver the default network can fit: trip features enter through
    /// the same points the attractiveness rule uses, scaled by a per-driver
    /// strength, and time of day and day type carry no weight.
    pub fn realizable(driver: DriverId, rng: &mut impl Rng) -> Self {
        let c = rng.random_range(0.5..0.9);
        let mut gt = Self::neutral(driver).with_bias(rng.random_range(-2.6..-1.6));
        let point = |node: &str, state: &str| match node {
            nodes::PICKUP_DISTANCE => attractiveness_points(state, "", "", ""),
            nodes::TRIP_LENGTH => attractiveness_points("", state, "", ""),
            nodes::DESTINATION => attractiveness_points("", "", state, ""),
            _ => attractiveness_points("", "", "", state),
        };
        let trip_states: [(&str, &[&str]); 4] = [
            (nodes::PICKUP_DISTANCE, &["near", "far"]),
            (nodes::TRIP_LENGTH, &["short", "medium", "long"]),
            (nodes::DESTINATION, &["airport", "downtown", "restaurant", "residential", "other"]),
            (nodes::RIDER_RATING, &["low", "high"]),
        ];
        for (node, states) in trip_states {
            for s in states {
                gt = gt.with_weight(node, s, c * f64::from(point(node, s)));
            }
        }
        gt.with_weight(nodes::FATIGUE, "fresh", rng.random_range(0.0..0.4))
            .with_weight(nodes::FATIGUE, "tired", -rng.random_range(0.5..1.5))
            .with_weight(nodes::GOAL_PROGRESS, "behind", rng.random_range(0.0..0.8))
            .with_weight(nodes::GOAL_PROGRESS, "met", -rng.random_range(0.0..1.0))
            .with_weight(nodes::INCENTIVE, "yes", rng.random_range(0.5..1.5))
    }

    /// [`Self::realizable`] plus a time-of-day and weekend effect the
    /// default network has no arc for.
    pub fn misspecified(driver: DriverId, rng: &mut impl Rng) -> Self {
        Self::realizable(driver, rng)
            .with_weight(nodes::TIME_OF_DAY, "night", -rng.random_range(1.0..2.0))
            .with_weight(nodes::TIME_OF_DAY, "evening", rng.random_range(0.2..0.8))
            .with_weight(nodes::DAY_TYPE, "weekend", rng.random_range(-1.0..1.0))
    }
}

/// Accept iff `draw` (uniform on [0, 1)) falls below P*(evidence).
pub fn simulate_decision(gt: &GroundTruthDriver, evidence: &Evidence, draw: f64) -> Outcome {
    if draw < gt.p_accept(evidence) {
        Outcome::Accept
    } else {
        Outcome::Decline
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::stream_rng;

    #[test]
    fn probabilities_stay_inside_the_unit_interval() {
        let e = Evidence::new();
        for bias in [-1e6, -50.0, 0.0, 50.0, 1e6] {
            let p = GroundTruthDriver::neutral("d".into()).with_bias(bias).p_accept(&e);
            assert!(p > 0.0 && p < 1.0, "{bias} -> {p}");
        }
    }

    #[test]
    fn realizable_drivers_ignore_time() {
        let mut rng = stream_rng(3, "t");
        let gt = GroundTruthDriver::realizable("d".into(), &mut rng);
        assert!(gt.is_finite());
        assert_eq!(gt.weight(nodes::TIME_OF_DAY, "night"), 0.0);
        assert!(gt.weight(nodes::TRIP_LENGTH, "long") > gt.weight(nodes::TRIP_LENGTH, "medium"));
        let m = GroundTruthDriver::misspecified("d".into(), &mut rng);
        assert!(m.weight(nodes::TIME_OF_DAY, "night") < 0.0);
    }
}
