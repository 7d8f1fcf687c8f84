use super::MatchConfig;
use crate::money::Cents;

/// `fare * scale * max(0, threshold - p) / threshold`, rounded up to the next
/// cent so any probability below the threshold earns something, plus a flat
/// share of the fare when a stated preference is violated.
pub fn compute_incentive(p: f64, fare: Cents, violated: bool, cfg: &MatchConfig) -> Cents {
    let tau = cfg.incentive_threshold;
    let gap = (tau - p.clamp(0.0, 1.0)).max(0.0) / tau;
    let ramp = if gap > 0.0 {
        // The epsilon absorbs representation error in otherwise exact products.
        let raw = fare.0 as f64 * cfg.incentive_scale * gap;
        if raw > 0.0 {
            Cents((raw - 1e-9).ceil().max(1.0) as i64)
        } else {
            Cents::ZERO
        }
    } else {
        Cents::ZERO
    };
    let bonus = if violated { Cents::round_from(fare.0 as f64 * cfg.violation_bonus_share) } else { Cents::ZERO };
    ramp + bonus
}
