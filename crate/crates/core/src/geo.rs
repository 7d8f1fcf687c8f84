//! Desk-scale geometry on a kilometre grid.

use serde::{Deserialize, Serialize};

/// Average urban driving speed used to turn distances into minutes.
pub const CITY_SPEED_KMH: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A declared driving route, e.g. the driver's way home.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub from: Point,
    pub to: Point,
}

impl Route {
    pub const fn new(from: Point, to: Point) -> Self {
        Self { from, to }
    }

    /// Extra kilometres needed to serve `pickup` then `dropoff` while driving
    /// this route, on straight-line legs.
    pub fn detour_km(&self, pickup: Point, dropoff: Point) -> f64 {
        let with_trip = self.from.distance(pickup) + pickup.distance(dropoff) + dropoff.distance(self.to);
        (with_trip - self.from.distance(self.to)).max(0.0)
    }
}

pub fn km_to_minutes(km: f64) -> f64 {
    km / CITY_SPEED_KMH * 60.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detour_on_route_is_zero() {
        let route = Route::new(Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        let d = route.detour_km(Point::new(2.0, 0.0), Point::new(7.0, 0.0));
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn detour_off_route_by_hand() {
        // 0,0 -> 3,4 (5) -> 6,0 (5) -> 10,0 (4) = 14 against a direct 10.
        let route = Route::new(Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        let d = route.detour_km(Point::new(3.0, 4.0), Point::new(6.0, 0.0));
        assert!((d - 4.0).abs() < 1e-12);
        assert!((km_to_minutes(d) - 8.0).abs() < 1e-12);
    }
}
