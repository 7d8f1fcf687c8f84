use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbn::StatePreference;
use crate::context::{self, nodes};
use crate::dispatch::DestinationCategory;
use crate::earnings::EarningGoal;
use crate::geo::{Point, Route};
use crate::ids::DriverId;
use crate::time::{minute_of_week, Timestamp, MINUTES_PER_WEEK};

pub const DEFAULT_LOCK_WINDOW_DAYS: i64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    pub name: String,
    pub date_of_birth: NaiveDate,
    pub license: String,
    pub car: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmploymentMode {
    PartTime,
    FullTime,
}

/// How offers are matched geographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DispatchMode {
    /// Open dispatch within a radius of the driver.
    RideHailing,
    /// Trips along a declared route, within a detour budget.
    RideShare { route: Route },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    /// A break between rides; the next ride is assigned when free.
    Random,
    /// One more trip may be lined up before the current one ends.
    Queued,
}

/// `[start, end)` in minutes since Monday 00:00 UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeeklyWindow {
    pub start_minute: u32,
    pub end_minute: u32,
}

impl WeeklyWindow {
    pub fn new(start_minute: u32, end_minute: u32) -> Self {
        Self { start_minute, end_minute }
    }

    /// The same hours on all seven days. Windows crossing midnight are split.
    pub fn every_day(start_hour: u32, end_hour: u32) -> Vec<WeeklyWindow> {
        let mut out = Vec::new();
        for day in 0..7 {
            let base = day * 24 * 60;
            if start_hour < end_hour {
                out.push(Self::new(base + start_hour * 60, base + end_hour * 60));
            } else {
                out.push(Self::new(base + start_hour * 60, base + 24 * 60));
                out.push(Self::new(base, base + end_hour * 60));
            }
        }
        out.retain(|w| w.start_minute < w.end_minute);
        out.sort();
        // merge touching pieces
        let mut merged: Vec<WeeklyWindow> = Vec::new();
        for w in out {
            match merged.last_mut() {
                Some(last) if last.end_minute >= w.start_minute => last.end_minute = last.end_minute.max(w.end_minute),
                _ => merged.push(w),
            }
        }
        merged
    }

    pub fn contains(&self, clock: Timestamp) -> bool {
        let m = minute_of_week(clock);
        self.start_minute <= m && m < self.end_minute
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RideLengthBand {
    pub min_minutes: f64,
    pub max_minutes: f64,
}

impl RideLengthBand {
    pub fn contains(&self, minutes: f64) -> bool {
        self.min_minutes <= minutes && minutes <= self.max_minutes
    }
}

/// Settings whose changes are locked for a disclosed window because they
/// steer dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingField {
    RatingFloor,
    Employment,
    WorkingWindows,
    HomeRoute,
    DestinationFilter,
    PreferredDestinations,
    RideLength,
    Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    pub driver_id: DriverId,
    pub identity: Identity,
    pub earning_goal: EarningGoal,
    /// Lowest rider rating the driver is comfortable with.
    pub rating_floor: f64,
    pub prefers_tipping_riders: bool,
    pub prefers_conversation: bool,
    pub employment: EmploymentMode,
    /// Empty means no restriction.
    pub working_windows: Vec<WeeklyWindow>,
    pub home: Point,
    pub home_route: Route,
    /// "I'm going home": match only trips along the way home.
    pub going_home: bool,
    pub destination_filter: BTreeSet<DestinationCategory>,
    pub preferred_destinations: BTreeSet<DestinationCategory>,
    pub ride_length: RideLengthBand,
    pub assignment: AssignmentMode,
    #[serde(default)]
    pub locks: BTreeMap<SettingField, Timestamp>,
}

impl DriverProfile {
    /// Part-time drivers and anyone heading home get corridor matching;
    /// full-time drivers get radius matching.
    pub fn dispatch_mode(&self, current_location: Point) -> DispatchMode {
        if self.going_home {
            DispatchMode::RideShare { route: Route::new(current_location, self.home) }
        } else {
            match self.employment {
                EmploymentMode::PartTime => DispatchMode::RideShare { route: self.home_route },
                EmploymentMode::FullTime => DispatchMode::RideHailing,
            }
        }
    }

    pub fn in_working_window(&self, clock: Timestamp) -> bool {
        self.working_windows.is_empty() || self.working_windows.iter().any(|w| w.contains(clock))
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let invalid = |msg: &str| Err(ProfileError::InvalidChange(msg.to_owned()));
        if self.earning_goal.amount.0 <= 0 {
            return invalid("earning goal must be positive");
        }
        if !(1.0..=5.0).contains(&self.rating_floor) {
            return invalid("rating floor must be within 1..=5");
        }
        let band = self.ride_length;
        if !(band.min_minutes >= 0.0 && band.min_minutes <= band.max_minutes) {
            return invalid("ride length band must satisfy 0 <= min <= max");
        }
        let mut windows = self.working_windows.clone();
        windows.sort();
        for w in &windows {
            if w.start_minute >= w.end_minute || w.end_minute > MINUTES_PER_WEEK {
                return invalid("working window out of range");
            }
        }
        if windows.windows(2).any(|pair| pair[0].end_minute > pair[1].start_minute) {
            return invalid("working windows overlap");
        }
        if self.identity.name.trim().is_empty() {
            return invalid("name must not be empty");
        }
        Ok(())
    }

    /// `(node, state)` preferences for prior elicitation on the default
    /// acceptance network.
    pub fn preference_dimensions(&self) -> Vec<StatePreference> {
        let mut out = Vec::new();
        for cat in &self.preferred_destinations {
            out.push(StatePreference::new(nodes::DESTINATION, cat.label()));
        }
        if self.rating_floor >= context::HIGH_RIDER_RATING {
            out.push(StatePreference::new(nodes::RIDER_RATING, "high"));
        }
        let reachable = context::trip_length_states_within(self.ride_length.min_minutes, self.ride_length.max_minutes);
        // A band covering every length states no preference.
        if reachable.len() < 3 {
            for state in reachable {
                out.push(StatePreference::new(nodes::TRIP_LENGTH, state));
            }
        }
        out
    }
}

/// A partial update. `None` leaves the field as is.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileChanges {
    pub identity: Option<Identity>,
    pub earning_goal: Option<EarningGoal>,
    pub prefers_tipping_riders: Option<bool>,
    pub prefers_conversation: Option<bool>,
    pub going_home: Option<bool>,
    pub rating_floor: Option<f64>,
    pub employment: Option<EmploymentMode>,
    pub working_windows: Option<Vec<WeeklyWindow>>,
    pub home: Option<Point>,
    pub home_route: Option<Route>,
    pub destination_filter: Option<BTreeSet<DestinationCategory>>,
    pub preferred_destinations: Option<BTreeSet<DestinationCategory>>,
    pub ride_length: Option<RideLengthBand>,
    pub assignment: Option<AssignmentMode>,
}

impl ProfileChanges {
    /// Locked fields touched by this change.
    pub fn locked_fields(&self) -> Vec<SettingField> {
        let mut out = Vec::new();
        let mut mark = |touched: bool, f: SettingField| {
            if touched {
                out.push(f);
            }
        };
        mark(self.rating_floor.is_some(), SettingField::RatingFloor);
        mark(self.employment.is_some(), SettingField::Employment);
        mark(self.working_windows.is_some(), SettingField::WorkingWindows);
        mark(self.home.is_some() || self.home_route.is_some(), SettingField::HomeRoute);
        mark(self.destination_filter.is_some(), SettingField::DestinationFilter);
        mark(self.preferred_destinations.is_some(), SettingField::PreferredDestinations);
        mark(self.ride_length.is_some(), SettingField::RideLength);
        mark(self.assignment.is_some(), SettingField::Assignment);
        out
    }

    pub fn is_empty(&self) -> bool {
        *self == ProfileChanges::default()
    }
}

/// Disclosure returned with every successful change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockDisclosure {
    pub field: SettingField,
    pub locked_until: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileUpdate {
    pub profile: DriverProfile,
    pub lock_window_secs: i64,
    pub locks: Vec<LockDisclosure>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("setting {field:?} is locked until {until}")]
    SettingsLocked { field: SettingField, until: Timestamp },
    #[error("invalid change: {0}")]
    InvalidChange(String),
}

/// Applies `changes` unless one of the touched dispatch settings is still
/// locked. Each touched dispatch setting is then locked for `lock_window`.
/// Identity and goal edits are never locked.
pub fn update_profile(
    profile: &DriverProfile,
    changes: &ProfileChanges,
    clock: Timestamp,
    lock_window: Duration,
) -> Result<ProfileUpdate, ProfileError> {
    let touched = changes.locked_fields();
    for field in &touched {
        if let Some(&until) = profile.locks.get(field) {
            if clock < until {
                return Err(ProfileError::SettingsLocked { field: *field, until });
            }
        }
    }

    let mut next = profile.clone();
    let c = changes.clone();
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = c.$f { next.$f = v; } )* };
    }
    take!(
        identity,
        earning_goal,
        prefers_tipping_riders,
        prefers_conversation,
        going_home,
        rating_floor,
        employment,
        working_windows,
        home,
        home_route,
        destination_filter,
        preferred_destinations,
        ride_length,
        assignment
    );
    next.validate()?;

    let until = clock + lock_window;
    let locks: Vec<LockDisclosure> = touched.iter().map(|&field| LockDisclosure { field, locked_until: until }).collect();
    for l in &locks {
        next.locks.insert(l.field, l.locked_until);
    }
    Ok(ProfileUpdate { profile: next, lock_window_secs: lock_window.num_seconds(), locks })
}
