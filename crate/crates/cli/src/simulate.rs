//! Orbit export as CSV.

use std::fmt::Write;

use augmap_core::models::Orbit;
use augmap_core::{PlanarMap, Point};

/// `t,x,y` rows in shortest round-trip formatting. An orbit cut short by a
/// non-finite iterate ends with the last computable point.
pub fn orbit_csv(map: &PlanarMap, start: Point, steps: usize) -> (String, Orbit) {
    let orbit = map.orbit(start, steps);
    let mut s = String::from("t,x,y\n");
    for (t, p) in orbit.points.iter().enumerate() {
        let _ = writeln!(s, "{t},{},{}", p.x, p.y);
    }
    (s, orbit)
}
