//! Time helpers. All instants are UTC and the clock is always passed in.

use chrono::{DateTime, Datelike, Duration, NaiveTime, TimeZone, Timelike, Utc};

pub type Timestamp = DateTime<Utc>;

pub const MINUTES_PER_WEEK: u32 = 7 * 24 * 60;

/// Minutes elapsed since Monday 00:00 UTC of the week containing `t`.
pub fn minute_of_week(t: Timestamp) -> u32 {
    t.weekday().num_days_from_monday() * 24 * 60 + t.hour() * 60 + t.minute()
}

pub fn start_of_day(t: Timestamp) -> Timestamp {
    Utc.from_utc_datetime(&t.date_naive().and_time(NaiveTime::MIN))
}

pub fn start_of_week(t: Timestamp) -> Timestamp {
    start_of_day(t) - Duration::days(t.weekday().num_days_from_monday() as i64)
}

/// Parses an RFC 3339 instant; panics on malformed input. Meant for fixtures.
pub fn at(rfc3339: &str) -> Timestamp {
    DateTime::parse_from_rfc3339(rfc3339)
        .unwrap_or_else(|e| panic!("bad timestamp {rfc3339:?}: {e}"))
        .with_timezone(&Utc)
}
