//! Nullclines in explicit form, equilibria and the discrete direction field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CompetitionParams, PlanarMap, Point};
use crate::numerics::{eig2, newton2, BBox, Mat2, NewtonOptions};
use crate::trace::{polyline_intersections, trace_zero_set, TraceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Zero,
    Minus,
}

impl Sign {
    /// Sign with a symmetric zero band.
    pub fn of(v: f64, band: f64) -> Sign {
        if v > band {
            Sign::Plus
        } else if v < -band {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }

    pub fn flip(&self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Zero => Sign::Zero,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn glyph(&self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Zero => "0",
            Sign::Minus => "-",
        }
    }
}

/// `ExplicitInX` is a graph `Y = l(X)`, `ExplicitInY` a graph `X = k(Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    ExplicitInX,
    ExplicitInY,
}

/// Which component of the map is unchanged along the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    X,
    Y,
}

/// A straight nullcline `intercept + slope * t`, with `t = X` for
/// `ExplicitInX` and `t = Y` for `ExplicitInY`. The evaluator is defined on
/// all of R; `domain` is the stretch inside the closed quadrant used for
/// plotting and intersection windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullclineCurve {
    pub orientation: Orientation,
    pub annihilates: Equation,
    pub intercept: f64,
    pub slope: f64,
    pub domain: (f64, f64),
    pub label: String,
}

impl NullclineCurve {
    pub fn eval(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }

    /// Signed offset of `p` from the curve: positive above (`ExplicitInX`) or
    /// to the right (`ExplicitInY`).
    pub fn offset(&self, p: Point) -> f64 {
        match self.orientation {
            Orientation::ExplicitInX => p.y - self.eval(p.x),
            Orientation::ExplicitInY => p.x - self.eval(p.y),
        }
    }

    /// Point of the curve at parameter `t`.
    pub fn point_at(&self, t: f64) -> Point {
        match self.orientation {
            Orientation::ExplicitInX => Point::new(t, self.eval(t)),
            Orientation::ExplicitInY => Point::new(self.eval(t), t),
        }
    }

    /// Endpoints of the domain piece.
    pub fn endpoints(&self) -> (Point, Point) {
        (self.point_at(self.domain.0), self.point_at(self.domain.1))
    }
}

fn line(
    orientation: Orientation,
    annihilates: Equation,
    intercept: f64,
    slope: f64,
    domain: (f64, f64),
) -> NullclineCurve {
    let label = match annihilates {
        Equation::X => "h",
        Equation::Y => "k",
    };
    NullclineCurve { orientation, annihilates, intercept, slope, domain, label: label.to_string() }
}

/// `h` (X-equation) and `k` (Y-equation) of the competition map.
pub fn competition_nullclines(p: &CompetitionParams) -> (NullclineCurve, NullclineCurve) {
    let h = line(
        Orientation::ExplicitInX,
        Equation::X,
        p.r1 / p.alpha1,
        -p.r1 / (p.alpha1 * p.k1),
        (0.0, p.k1),
    );
    let k = line(
        Orientation::ExplicitInX,
        Equation::Y,
        p.k2,
        -p.k2 * p.alpha2 / p.r2,
        (0.0, p.r2 / p.alpha2),
    );
    (h, k)
}

/// Domain of an increasing or decreasing line restricted to `Y >= 0` and
/// `0 <= X <= x_max`.
fn quadrant_domain(intercept: f64, slope: f64, x_max: f64) -> (f64, f64) {
    let root = if slope != 0.0 { -intercept / slope } else { f64::NAN };
    if slope < 0.0 {
        (0.0, root.clamp(0.0, x_max.max(root)))
    } else if slope > 0.0 && root > 0.0 {
        (root, x_max.max(root))
    } else {
        (0.0, x_max)
    }
}

/// The two nontrivial nullclines of a built-in family, X-equation first.
pub fn model_nullclines(map: &PlanarMap) -> Result<Vec<NullclineCurve>> {
    let reach = map.default_bbox();
    match map {
        PlanarMap::Competition(p) => {
            let (h, k) = competition_nullclines(p);
            Ok(vec![h, k])
        }
        PlanarMap::Ricker(p) => Ok(vec![
            line(Orientation::ExplicitInX, Equation::X, p.k / p.a, -1.0 / p.a, (0.0, p.k)),
            line(Orientation::ExplicitInX, Equation::Y, p.l, -p.b, (0.0, p.l / p.b)),
        ]),
        PlanarMap::Mutualism(p) => {
            let (i1, s1) = ((p.big_a - p.a) / p.b, p.big_b / p.b);
            let (i2, s2) = ((p.c - p.big_c) / p.big_d, p.d / p.big_d);
            Ok(vec![
                line(Orientation::ExplicitInX, Equation::X, i1, s1, quadrant_domain(i1, s1, reach.x1)),
                line(Orientation::ExplicitInX, Equation::Y, i2, s2, quadrant_domain(i2, s2, reach.x1)),
            ])
        }
        PlanarMap::PredPrey(p) => Ok(vec![
            line(Orientation::ExplicitInX, Equation::X, p.r / p.alpha, -p.r / (p.alpha * p.k), (0.0, p.k)),
            line(Orientation::ExplicitInY, Equation::Y, p.d / p.gamma, 0.0, (0.0, reach.y1)),
        ]),
        PlanarMap::Generic(_) => Err(Error::UnsupportedFamily("generic")),
    }
}

/// `BoundaryX` lies on the positive X-axis, `BoundaryY` on the positive Y-axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Origin,
    BoundaryX,
    BoundaryY,
    Interior,
}

impl EquilibriumKind {
    pub fn of(p: Point) -> Self {
        match (p.x.abs() <= 1e-12, p.y.abs() <= 1e-12) {
            (true, true) => EquilibriumKind::Origin,
            (false, true) => EquilibriumKind::BoundaryX,
            (true, false) => EquilibriumKind::BoundaryY,
            (false, false) => EquilibriumKind::Interior,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub point: Point,
    pub kind: EquilibriumKind,
}

/// Segment of equilibria along a nullcline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuum {
    pub from: Point,
    pub to: Point,
    pub nullcline: String,
}

impl Continuum {
    pub fn distance(&self, p: Point) -> f64 {
        segment_distance(p, self.from, self.to)
    }
}

pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    pub isolated: Vec<Equilibrium>,
    pub continuum: Option<Continuum>,
    /// Newton seeds that failed to converge; reported, never fatal.
    pub failures: Vec<Error>,
}

impl EquilibriumSet {
    pub fn interior(&self) -> Option<Point> {
        self.isolated.iter().find(|e| e.kind == EquilibriumKind::Interior).map(|e| e.point)
    }

    pub fn points(&self) -> Vec<Point> {
        self.isolated.iter().map(|e| e.point).collect()
    }
}

/// Relative threshold under which an efficiency counts as zero.
pub const CONTINUUM_REL_TOL: f64 = 1e-12;

/// True when both efficiencies vanish within the relative threshold, i.e. the
/// nontrivial nullclines coincide.
pub fn is_degenerate(p: &CompetitionParams) -> bool {
    let (c12, c21) = (p.r1 / p.alpha1 - p.k2, p.r2 / p.alpha2 - p.k1);
    c12.abs() < CONTINUUM_REL_TOL * (p.r1 / p.alpha1).max(p.k2)
        && c21.abs() < CONTINUUM_REL_TOL * (p.r2 / p.alpha2).max(p.k1)
}

/// Closed-form coexistence equilibrium of the competition map; meaningful when
/// both efficiencies share a sign.
pub fn competition_coexistence(p: &CompetitionParams) -> Point {
    let den = p.alpha1 * p.alpha2 * p.k1 * p.k2 - p.r1 * p.r2;
    Point::new(
        p.r2 * p.k1 * (p.alpha1 * p.k2 - p.r1) / den,
        p.r1 * p.k2 * (p.alpha2 * p.k1 - p.r2) / den,
    )
}

const EQUILIBRIUM_RESIDUAL: f64 = 1e-10;

fn fixed_point_residual(map: &PlanarMap, p: Point) -> f64 {
    map.step(p).map_or(f64::INFINITY, |q| q.dist_inf(p))
}

/// Equilibria of a map. Built-ins intersect their analytic nullclines and
/// polish with Newton; generic maps trace `F - X` and `G - Y` over their
/// bounding box and seed Newton from every crossing of the traced curves.
pub fn equilibria(map: &PlanarMap) -> EquilibriumSet {
    let mut candidates = vec![Point::ORIGIN];
    let mut continuum = None;
    match map {
        PlanarMap::Competition(p) => {
            candidates.push(Point::new(p.k1, 0.0));
            candidates.push(Point::new(0.0, p.k2));
            let c12 = p.r1 / p.alpha1 - p.k2;
            let c21 = p.r2 / p.alpha2 - p.k1;
            if is_degenerate(p) {
                continuum = Some(Continuum {
                    from: Point::new(0.0, p.r1 / p.alpha1),
                    to: Point::new(p.k1, 0.0),
                    nullcline: "h".into(),
                });
            } else if c12 * c21 > 0.0 {
                candidates.push(competition_coexistence(p));
            }
        }
        PlanarMap::Ricker(p) => {
            candidates.push(Point::new(p.k, 0.0));
            candidates.push(Point::new(0.0, p.l));
            let x = (p.k - p.a * p.l) / (1.0 - p.a * p.b);
            candidates.push(Point::new(x, p.l - p.b * x));
        }
        PlanarMap::Mutualism(p) => {
            candidates.push(Point::new((p.a - p.big_a) / p.big_b, 0.0));
            candidates.push(Point::new(0.0, (p.c - p.big_c) / p.big_d));
            candidates.extend(p.nullcline_intersection());
        }
        PlanarMap::PredPrey(p) => {
            candidates.push(Point::new(p.k, 0.0));
            let x = p.d / p.gamma;
            candidates.push(Point::new(x, p.r / p.alpha * (1.0 - x / p.k)));
        }
        PlanarMap::Generic(_) => return generic_equilibria(map),
    }

    let mut set = EquilibriumSet { isolated: Vec::new(), continuum, failures: Vec::new() };
    for c in candidates {
        if !c.is_finite() || c.x < 0.0 || c.y < 0.0 {
            continue;
        }
        if set.isolated.iter().any(|e| e.point.dist_inf(c) < 1e-12) {
            continue;
        }
        match polish(map, c) {
            Ok(p) => set.isolated.push(Equilibrium { point: p, kind: EquilibriumKind::of(p) }),
            Err(e) => set.failures.push(e),
        }
    }
    set
}

/// Newton on `step - id`, keeping the seed when it is already a fixed point to
/// working precision.
fn polish(map: &PlanarMap, seed: Point) -> Result<Point> {
    if fixed_point_residual(map, seed) < 1e-14 {
        return Ok(seed);
    }
    let f = |q: Point| map.step(q).map(|s| [s.x - q.x, s.y - q.y]);
    let jac = |q: Point| map.jacobian_at(q).map(|j| j.sub(&Mat2::IDENTITY));
    let opts = NewtonOptions { tol: EQUILIBRIUM_RESIDUAL, ..NewtonOptions::default() };
    let p = newton2(&f, Some(&jac), seed, &opts)?;
    // Snap coordinates that are zero up to rounding so axis kinds stay exact.
    let snap = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
    Ok(Point::new(snap(p.x), snap(p.y)))
}

fn generic_equilibria(map: &PlanarMap) -> EquilibriumSet {
    let mut set = EquilibriumSet { isolated: Vec::new(), continuum: None, failures: Vec::new() };
    let bbox = map.default_bbox();
    let cfg = TraceConfig::new(bbox).with_grid(256, 256);
    let fx = |p: Point| map.eval_f(p.x, p.y) - p.x;
    let gy = |p: Point| map.eval_g(p.x, p.y) - p.y;
    let (tf, tg) = match (trace_zero_set(&fx, &cfg), trace_zero_set(&gy, &cfg)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            set.failures.push(e);
            return set;
        }
    };
    let f = |q: Point| map.step(q).map(|s| [s.x - q.x, s.y - q.y]);
    let opts = NewtonOptions { tol: EQUILIBRIUM_RESIDUAL, bounds: Some(bbox), ..NewtonOptions::default() };
    for seed in polyline_intersections(&tf.polylines, &tg.polylines) {
        match newton2(&f, None, seed, &opts) {
            Ok(p) if bbox.contains_with(p, 1e-9) => {
                if !set.isolated.iter().any(|e| e.point.dist_inf(p) < 1e-8) {
                    set.isolated.push(Equilibrium { point: p, kind: EquilibriumKind::of(p) });
                }
            }
            Ok(_) => {}
            Err(e) => set.failures.push(e),
        }
    }
    set.isolated.sort_by(|a, b| a.point.x.total_cmp(&b.point.x).then(a.point.y.total_cmp(&b.point.y)));
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSigns {
    pub dx: Sign,
    pub dy: Sign,
}

/// Default zero band for direction-sign queries.
pub const DIRECTION_BAND: f64 = 1e-9;

/// Component-wise monotonicity of one step at `p`.
pub fn direction_signs(map: &PlanarMap, p: Point, band: f64) -> DirectionSigns {
    DirectionSigns {
        dx: Sign::of(map.eval_f(p.x, p.y) - p.x, band),
        dy: Sign::of(map.eval_g(p.x, p.y) - p.y, band),
    }
}

/// Linear stability of a fixed point from its Jacobian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    /// Both moduli below one.
    Attracting,
    /// Both moduli above one.
    Repelling,
    Saddle,
    /// Some modulus within `1e-9` of one.
    NonHyperbolic,
}

pub fn stability(map: &PlanarMap, p: Point) -> Result<(Stability, [f64; 2])> {
    let e = eig2(&map.jacobian_at(p)?);
    let m = [e[0].norm(), e[1].norm()];
    let tag = if m.iter().any(|v| (v - 1.0).abs() <= 1e-9) {
        Stability::NonHyperbolic
    } else if m[0] < 1.0 {
        Stability::Attracting
    } else if m[1] > 1.0 {
        Stability::Repelling
    } else {
        Stability::Saddle
    };
    Ok((tag, m))
}

/// A solution of `f^n(p) = p` with its least period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub point: Point,
    pub least_period: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSearch {
    pub period: usize,
    pub seeds: usize,
    /// Seeds whose Newton run met the residual target.
    pub converged: usize,
    /// Distinct solutions in the closed quadrant.
    pub solutions: Vec<PeriodicPoint>,
}

impl PeriodSearch {
    /// Solutions whose least period equals the searched period (for period > 1).
    pub fn prime(&self) -> Vec<PeriodicPoint> {
        self.solutions.iter().filter(|s| s.least_period == self.period && self.period > 1).copied().collect()
    }
}

const PERIOD_RESIDUAL: f64 = 1e-10;
const PERIOD_MATCH: f64 = 1e-7;

/// Newton on `f^n - id` from an `m x m` grid of cell-center seeds in `window`.
/// The Jacobian of `f^n` is the product of the map's Jacobians along the orbit.
pub fn periodic_point_search(map: &PlanarMap, period: usize, window: &BBox, m: usize) -> PeriodSearch {
    let period = period.max(1);
    let f = |q: Point| map.iterate(q, period).map(|s| [s.x - q.x, s.y - q.y]);
    let jac = |q: Point| -> Result<Mat2> {
        let mut j = Mat2::IDENTITY;
        let mut p = q;
        for _ in 0..period {
            j = map.jacobian_at(p)?.mul(&j);
            p = map.step(p)?;
        }
        Ok(j.sub(&Mat2::IDENTITY))
    };
    let opts = NewtonOptions { tol: PERIOD_RESIDUAL, bounds: Some(*window), ..NewtonOptions::default() };
    let seeds: Vec<Point> = (0..m * m)
        .map(|idx| {
            let (i, j) = (idx % m, idx / m);
            Point::new(
                window.x0 + (i as f64 + 0.5) * window.width() / m as f64,
                window.y0 + (j as f64 + 0.5) * window.height() / m as f64,
            )
        })
        .collect();
    let results: Vec<Option<Point>> =
        seeds.par_iter().map(|&s| newton2(&f, Some(&jac), s, &opts).ok()).collect();
    let converged = results.iter().flatten().count();
    let mut solutions: Vec<PeriodicPoint> = Vec::new();
    for p in results.into_iter().flatten() {
        if p.x < -PERIOD_MATCH || p.y < -PERIOD_MATCH {
            continue;
        }
        if solutions.iter().any(|s| s.point.dist_inf(p) < PERIOD_MATCH) {
            continue;
        }
        let least = (1..=period)
            .filter(|d| period % d == 0)
            .find(|&d| map.iterate(p, d).map_or(false, |q| q.dist_inf(p) < PERIOD_MATCH))
            .unwrap_or(period);
        solutions.push(PeriodicPoint { point: p, least_period: least });
    }
    solutions.sort_by(|a, b| a.point.x.total_cmp(&b.point.x).then(a.point.y.total_cmp(&b.point.y)));
    PeriodSearch { period, seeds: seeds.len(), converged, solutions }
}
