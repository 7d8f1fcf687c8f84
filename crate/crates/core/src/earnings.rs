//! Transparent per-trip earnings.
//!
//! Every trip is itemised into fuel, maintenance and amortised fixed costs
//! (depreciation, insurance, taxes spread over the driver's working hours).
//! Components are rounded to whole cents half-to-even one by one, and the
//! totals are computed from the rounded components, so
//! `net + tco - incentive - tip == fare` holds exactly.

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Cents;
use crate::time::{start_of_day, start_of_week, Timestamp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EarningsError {
    #[error("negative or non-finite input: {0}")]
    NegativeInput(&'static str),
}

/// Vehicle ownership costs, in currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostProfile {
    pub depreciation_per_year: f64,
    pub insurance_per_year: f64,
    pub taxes_per_year: f64,
    pub annual_working_hours: f64,
    pub fuel_per_km: f64,
    pub maintenance_per_km: f64,
}

impl Default for CostProfile {
    fn default() -> Self {
        Self {
            depreciation_per_year: 3650.0,
            insurance_per_year: 1825.0,
            taxes_per_year: 365.0,
            annual_working_hours: 1825.0,
            fuel_per_km: 0.10,
            maintenance_per_km: 0.05,
        }
    }
}

impl CostProfile {
    pub fn validate(&self) -> Result<(), EarningsError> {
        let fields = [
            ("depreciation_per_year", self.depreciation_per_year),
            ("insurance_per_year", self.insurance_per_year),
            ("taxes_per_year", self.taxes_per_year),
            ("fuel_per_km", self.fuel_per_km),
            ("maintenance_per_km", self.maintenance_per_km),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(EarningsError::NegativeInput(name));
        }
        if !(self.annual_working_hours.is_finite() && self.annual_working_hours > 0.0) {
            return Err(EarningsError::NegativeInput("annual_working_hours"));
        }
        Ok(())
    }

    pub fn fixed_per_year(&self) -> f64 {
        self.depreciation_per_year + self.insurance_per_year + self.taxes_per_year
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripCostBreakdown {
    pub fare: Cents,
    pub incentive: Cents,
    pub tip: Cents,
    pub fuel: Cents,
    pub maintenance: Cents,
    pub amortized_fixed: Cents,
    pub tco: Cents,
    pub net: Cents,
}

impl TripCostBreakdown {
    /// Both identities, checked exactly.
    pub fn is_consistent(&self) -> bool {
        self.tco == self.fuel + self.maintenance + self.amortized_fixed
            && self.net == self.fare + self.incentive + self.tip - self.tco
    }

    pub fn gross(&self) -> Cents {
        self.fare + self.incentive + self.tip
    }
}

/// Itemises one trip.
pub fn compute_trip_cost(
    cost: &CostProfile,
    distance_km: f64,
    duration_hours: f64,
    fare: Cents,
    incentive: Cents,
    tip: Cents,
) -> Result<TripCostBreakdown, EarningsError> {
    cost.validate()?;
    if !(distance_km.is_finite() && distance_km >= 0.0) {
        return Err(EarningsError::NegativeInput("distance_km"));
    }
    if !(duration_hours.is_finite() && duration_hours >= 0.0) {
        return Err(EarningsError::NegativeInput("duration_hours"));
    }
    for (name, amount) in [("fare", fare), ("incentive", incentive), ("tip", tip)] {
        if amount.0 < 0 {
            return Err(EarningsError::NegativeInput(name));
        }
    }

    let fuel = Cents::from_units(cost.fuel_per_km * distance_km);
    let maintenance = Cents::from_units(cost.maintenance_per_km * distance_km);
    let amortized_fixed = Cents::from_units(cost.fixed_per_year() * duration_hours / cost.annual_working_hours);
    let tco = fuel + maintenance + amortized_fixed;
    let net = fare + incentive + tip - tco;
    Ok(TripCostBreakdown { fare, incentive, tip, fuel, maintenance, amortized_fixed, tco, net })
}

/// Flat bonus for hours worked. Depends on nothing but hours and rate, so every
/// driver with the same hours gets the same amount.
pub fn hours_bonus(hours: f64, rate_per_hour: Cents) -> Result<Cents, EarningsError> {
    if !(hours.is_finite() && hours >= 0.0) {
        return Err(EarningsError::NegativeInput("hours"));
    }
    if rate_per_hour.0 < 0 {
        return Err(EarningsError::NegativeInput("rate_per_hour"));
    }
    Ok(Cents::round_from(hours * rate_per_hour.0 as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BonusPeriod {
    Monthly,
    Yearly,
}

/// Platform-wide hours bonus schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BonusPolicy {
    pub rate_per_hour: Cents,
    pub period: BonusPeriod,
}

impl Default for BonusPolicy {
    fn default() -> Self {
        Self { rate_per_hour: Cents(75), period: BonusPeriod::Monthly }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalPeriod {
    Daily,
    Weekly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarningGoal {
    pub amount: Cents,
    pub period: GoalPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalState {
    Behind,
    OnTrack,
    Met,
}

impl GoalState {
    pub fn label(self) -> &'static str {
        match self {
            GoalState::Behind => "behind",
            GoalState::OnTrack => "on_track",
            GoalState::Met => "met",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalProgress {
    pub period: GoalPeriod,
    pub goal: Cents,
    pub earned: Cents,
    pub elapsed_fraction: f64,
    pub state: GoalState,
}

/// Fraction of the goal period (UTC day, or UTC week from Monday) elapsed at `clock`.
pub fn elapsed_fraction(period: GoalPeriod, clock: Timestamp) -> f64 {
    let (start, len) = match period {
        GoalPeriod::Daily => (start_of_day(clock), Duration::days(1)),
        GoalPeriod::Weekly => (start_of_week(clock), Duration::weeks(1)),
    };
    (clock - start).num_milliseconds() as f64 / len.num_milliseconds() as f64
}

pub fn goal_progress(goal: &EarningGoal, earned: Cents, clock: Timestamp) -> GoalProgress {
    let elapsed = elapsed_fraction(goal.period, clock);
    let state = if earned >= goal.amount {
        GoalState::Met
    } else if earned.0 as f64 >= goal.amount.0 as f64 * elapsed {
        GoalState::OnTrack
    } else {
        GoalState::Behind
    };
    GoalProgress { period: goal.period, goal: goal.amount, earned, elapsed_fraction: elapsed, state }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::at;

    #[test]
    fn zero_trip_has_no_cost() {
        let b = compute_trip_cost(&CostProfile::default(), 0.0, 0.0, Cents(1200), Cents(50), Cents(25)).unwrap();
        assert_eq!(b.tco, Cents::ZERO);
        assert_eq!(b.net, Cents(1275));
        assert!(b.is_consistent());
    }

    #[test]
    fn worked_example() {
        // 10 km * 0.10 = 1.00, 10 km * 0.05 = 0.50, 5840 / 1825 * 0.5 = 1.60
        let b = compute_trip_cost(&CostProfile::default(), 10.0, 0.5, Cents(1200), Cents::ZERO, Cents::ZERO).unwrap();
        assert_eq!((b.fuel, b.maintenance, b.amortized_fixed), (Cents(100), Cents(50), Cents(160)));
        assert_eq!(b.tco, Cents(310));
        assert_eq!(b.net, Cents(890));
    }

    #[test]
    fn variable_costs_are_linear_in_distance() {
        let c = CostProfile::default();
        let one = compute_trip_cost(&c, 7.0, 0.0, Cents(1), Cents::ZERO, Cents::ZERO).unwrap();
        let two = compute_trip_cost(&c, 14.0, 0.0, Cents(1), Cents::ZERO, Cents::ZERO).unwrap();
        assert_eq!(two.fuel + two.maintenance, Cents(2 * (one.fuel + one.maintenance).0));
    }

    #[test]
    fn rejects_negative_inputs() {
        let c = CostProfile::default();
        assert!(compute_trip_cost(&c, -1.0, 0.0, Cents(1), Cents::ZERO, Cents::ZERO).is_err());
        assert!(compute_trip_cost(&c, 1.0, -0.1, Cents(1), Cents::ZERO, Cents::ZERO).is_err());
        assert!(compute_trip_cost(&c, 1.0, 0.1, Cents(-1), Cents::ZERO, Cents::ZERO).is_err());
        let bad = CostProfile { annual_working_hours: 0.0, ..c };
        assert_eq!(
            compute_trip_cost(&bad, 1.0, 0.1, Cents(1), Cents::ZERO, Cents::ZERO),
            Err(EarningsError::NegativeInput("annual_working_hours"))
        );
    }

    #[test]
    fn hours_bonus_examples() {
        assert_eq!(hours_bonus(0.0, Cents(75)).unwrap(), Cents::ZERO);
        assert_eq!(hours_bonus(160.0, Cents(75)).unwrap(), Cents(120_00));
        assert!(hours_bonus(-1.0, Cents(75)).is_err());
    }

    #[test]
    fn goal_states() {
        let daily = EarningGoal { amount: Cents(200_00), period: GoalPeriod::Daily };
        let noon = at("2024-06-05T12:00:00Z");
        assert_eq!(goal_progress(&daily, Cents(200_00), noon).state, GoalState::Met);
        assert_eq!(goal_progress(&daily, Cents(80_00), noon).state, GoalState::Behind);
        assert_eq!(goal_progress(&daily, Cents(100_00), noon).state, GoalState::OnTrack);
        let midnight = at("2024-06-05T00:00:00Z");
        assert_eq!(goal_progress(&daily, Cents::ZERO, midnight).state, GoalState::OnTrack);

        let weekly = EarningGoal { amount: Cents(700_00), period: GoalPeriod::Weekly };
        // Thursday 00:00 is 3/7 through the week.
        let p = goal_progress(&weekly, Cents(300_00), at("2024-06-06T00:00:00Z"));
        assert!((p.elapsed_fraction - 3.0 / 7.0).abs() < 1e-12);
        assert_eq!(p.state, GoalState::OnTrack);
    }
}
