//! Currency in integer minor units.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// An amount of money in cents. All earnings identities are checked on this
/// type, so they hold exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cents(pub i64);

impl Cents {
    pub const ZERO: Cents = Cents(0);

    /// Rounds a fractional cent amount half-to-even.
    pub fn round_from(cents: f64) -> Cents {
        Cents(cents.round_ties_even() as i64)
    }

    /// Converts whole currency units (e.g. dollars) to cents, rounding half-to-even.
    pub fn from_units(units: f64) -> Cents {
        Self::round_from(units * 100.0)
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl Sub for Cents {
    type Output = Cents;
    fn sub(self, rhs: Cents) -> Cents {
        Cents(self.0 - rhs.0)
    }
}

impl Neg for Cents {
    type Output = Cents;
    fn neg(self) -> Cents {
        Cents(-self.0)
    }
}

impl AddAssign for Cents {
    fn add_assign(&mut self, rhs: Cents) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Cents {
    fn sub_assign(&mut self, rhs: Cents) {
        self.0 -= rhs.0;
    }
}

impl Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        iter.fold(Cents::ZERO, Add::add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_half_to_even() {
        assert_eq!(Cents::round_from(12.5), Cents(12));
        assert_eq!(Cents::round_from(13.5), Cents(14));
        assert_eq!(Cents::round_from(-0.5), Cents(0));
        assert_eq!(Cents::round_from(159.999_999_9), Cents(160));
    }

    #[test]
    fn displays_with_two_decimals() {
        assert_eq!(Cents(890).to_string(), "8.90");
        assert_eq!(Cents(-5).to_string(), "-0.05");
        assert_eq!(Cents(120_00).to_string(), "120.00");
    }
}
