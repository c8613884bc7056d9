//! Planar map families and the shared map abstraction.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fd_jacobian, BBox, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn in_closed_quadrant(&self) -> bool {
        self.x >= 0.0 && self.y >= 0.0
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_inf(&self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn dist(&self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn dist_inf(&self, o: Point) -> f64 {
        (self.x - o.x).abs().max((self.y - o.y).abs())
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

fn check_positive(pairs: &[(&'static str, f64)]) -> Result<()> {
    for &(name, value) in pairs {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter { name, value });
        }
    }
    Ok(())
}

/// Leslie-Gower competition map
/// `F = (1+r1)X / (1 + r1 X/K1 + alpha1 Y)`, `G = (1+r2)Y / (1 + r2 Y/K2 + alpha2 X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetitionParams {
    pub r1: f64,
    pub r2: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl CompetitionParams {
    pub fn new(r1: f64, r2: f64, k1: f64, k2: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        let p = CompetitionParams { r1, r2, k1, k2, alpha1, alpha2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive(&[
            ("r1", self.r1),
            ("r2", self.r2),
            ("K1", self.k1),
            ("K2", self.k2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ])
    }

    /// Indices 1 and 2 exchanged; conjugate to the original map by `(X,Y) -> (Y,X)`.
    pub fn swapped(&self) -> Self {
        CompetitionParams {
            r1: self.r2,
            r2: self.r1,
            k1: self.k2,
            k2: self.k1,
            alpha1: self.alpha2,
            alpha2: self.alpha1,
        }
    }
}

/// Competitive Ricker map `F = X e^{K - X - aY}`, `G = Y e^{L - bX - Y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RickerParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl RickerParams {
    pub fn new(k: f64, l: f64, a: f64, b: f64) -> Result<Self> {
        let p = RickerParams { k, l, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive(&[("K", self.k), ("L", self.l), ("a", self.a), ("b", self.b)])
    }
}

/// Mutualism map `F = (a + bY)X / (A + BX)`, `G = (c + dX)Y / (C + DY)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualismParams {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "D")]
    pub big_d: f64,
}

impl MutualismParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: f64, b: f64, big_a: f64, big_b: f64, c: f64, d: f64, big_c: f64, big_d: f64) -> Result<Self> {
        let p = MutualismParams { a, b, big_a, big_b, c, d, big_c, big_d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive(&[
            ("a", self.a),
            ("b", self.b),
            ("A", self.big_a),
            ("B", self.big_b),
            ("c", self.c),
            ("d", self.d),
            ("C", self.big_c),
            ("D", self.big_d),
        ])
    }

    /// Intersection of the two nontrivial nullclines, if the lines are not parallel.
    pub fn nullcline_intersection(&self) -> Option<Point> {
        let den = self.big_d * self.big_b - self.b * self.d;
        if den == 0.0 {
            return None;
        }
        let x = (self.b * (self.c - self.big_c) - self.big_d * (self.big_a - self.a)) / den;
        let y = (self.big_a - self.a + self.big_b * x) / self.b;
        Some(Point::new(x, y))
    }
}

/// Predator-prey map `F = (1+r)X / (1 + rX/K + alpha Y)`, `G = (1 + gamma X)Y / (1 + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredPreyParams {
    pub r: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub d: f64,
}

impl PredPreyParams {
    pub fn new(r: f64, k: f64, alpha: f64, gamma: f64, d: f64) -> Result<Self> {
        let p = PredPreyParams { r, k, alpha, gamma, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive(&[
            ("r", self.r),
            ("K", self.k),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("d", self.d),
        ])
    }
}

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(f64, f64) -> Mat2 + Send + Sync>;

/// User-supplied map given by two scalar fields.
#[derive(Clone)]
pub struct GenericMap {
    pub f: ScalarField,
    pub g: ScalarField,
    pub jacobian: Option<MatrixField>,
    pub bbox: Option<BBox>,
}

impl fmt::Debug for GenericMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericMap")
            .field("jacobian", &self.jacobian.is_some())
            .field("bbox", &self.bbox)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Competition,
    Ricker,
    Mutualism,
    PredPrey,
    Generic,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Competition => "competition",
            Family::Ricker => "ricker",
            Family::Mutualism => "mutualism",
            Family::PredPrey => "predprey",
            Family::Generic => "generic",
        }
    }
}

/// A planar map `(X, Y) -> (F(X,Y), G(X,Y))`. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub enum PlanarMap {
    Competition(CompetitionParams),
    Ricker(RickerParams),
    Mutualism(MutualismParams),
    PredPrey(PredPreyParams),
    Generic(GenericMap),
}

/// Orbit prefix. `non_finite_at` is the index of the first iterate that could
/// not be computed; `points` then holds everything before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub points: Vec<Point>,
    pub non_finite_at: Option<usize>,
}

impl Orbit {
    pub fn last(&self) -> Point {
        *self.points.last().expect("orbit holds its start point")
    }

    pub fn is_complete(&self) -> bool {
        self.non_finite_at.is_none()
    }
}

impl PlanarMap {
    pub fn generic(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        bbox: Option<BBox>,
    ) -> Self {
        PlanarMap::Generic(GenericMap { f: Arc::new(f), g: Arc::new(g), jacobian: None, bbox })
    }

    pub fn family(&self) -> Family {
        match self {
            PlanarMap::Competition(_) => Family::Competition,
            PlanarMap::Ricker(_) => Family::Ricker,
            PlanarMap::Mutualism(_) => Family::Mutualism,
            PlanarMap::PredPrey(_) => Family::PredPrey,
            PlanarMap::Generic(_) => Family::Generic,
        }
    }

    pub fn eval_f(&self, x: f64, y: f64) -> f64 {
        match self {
            PlanarMap::Competition(p) => (1.0 + p.r1) * x / (1.0 + p.r1 * x / p.k1 + p.alpha1 * y),
            PlanarMap::Ricker(p) => x * (p.k - x - p.a * y).exp(),
            PlanarMap::Mutualism(p) => (p.a + p.b * y) * x / (p.big_a + p.big_b * x),
            PlanarMap::PredPrey(p) => (1.0 + p.r) * x / (1.0 + p.r * x / p.k + p.alpha * y),
            PlanarMap::Generic(m) => (m.f)(x, y),
        }
    }

    pub fn eval_g(&self, x: f64, y: f64) -> f64 {
        match self {
            PlanarMap::Competition(p) => (1.0 + p.r2) * y / (1.0 + p.r2 * y / p.k2 + p.alpha2 * x),
            PlanarMap::Ricker(p) => y * (p.l - p.b * x - y).exp(),
            PlanarMap::Mutualism(p) => (p.c + p.d * x) * y / (p.big_c + p.big_d * y),
            PlanarMap::PredPrey(p) => (1.0 + p.gamma * x) * y / (1.0 + p.d),
            PlanarMap::Generic(m) => (m.g)(x, y),
        }
    }

    /// One iterate. Non-finite images are reported, never clamped.
    pub fn step(&self, p: Point) -> Result<Point> {
        let q = Point::new(self.eval_f(p.x, p.y), self.eval_g(p.x, p.y));
        if q.is_finite() {
            Ok(q)
        } else {
            Err(Error::NonFinite { index: 0, at: p })
        }
    }

    /// `n`-fold composition.
    pub fn iterate(&self, p: Point, n: usize) -> Result<Point> {
        let mut q = p;
        for t in 0..n {
            q = self.step(q).map_err(|_| Error::NonFinite { index: t + 1, at: q })?;
        }
        Ok(q)
    }

    /// `p0` followed by up to `n` iterates, stopping at the first non-finite one.
    pub fn orbit(&self, p0: Point, n: usize) -> Orbit {
        let mut points = Vec::with_capacity(n + 1);
        points.push(p0);
        let mut q = p0;
        for t in 0..n {
            match self.step(q) {
                Ok(next) => {
                    points.push(next);
                    q = next;
                }
                Err(_) => return Orbit { points, non_finite_at: Some(t + 1) },
            }
        }
        Orbit { points, non_finite_at: None }
    }

    pub fn analytic_jacobian(&self, p: Point) -> Option<Mat2> {
        let (x, y) = (p.x, p.y);
        let j = match self {
            PlanarMap::Competition(c) => {
                let d1 = 1.0 + c.r1 * x / c.k1 + c.alpha1 * y;
                let d2 = 1.0 + c.r2 * y / c.k2 + c.alpha2 * x;
                Mat2::new(
                    (1.0 + c.r1) * (1.0 + c.alpha1 * y) / (d1 * d1),
                    -(1.0 + c.r1) * c.alpha1 * x / (d1 * d1),
                    -(1.0 + c.r2) * c.alpha2 * y / (d2 * d2),
                    (1.0 + c.r2) * (1.0 + c.alpha2 * x) / (d2 * d2),
                )
            }
            PlanarMap::Ricker(r) => {
                let e1 = (r.k - x - r.a * y).exp();
                let e2 = (r.l - r.b * x - y).exp();
                Mat2::new(e1 * (1.0 - x), -r.a * x * e1, -r.b * y * e2, e2 * (1.0 - y))
            }
            PlanarMap::Mutualism(m) => {
                let dx = m.big_a + m.big_b * x;
                let dy = m.big_c + m.big_d * y;
                Mat2::new(
                    (m.a + m.b * y) * m.big_a / (dx * dx),
                    m.b * x / dx,
                    m.d * y / dy,
                    (m.c + m.d * x) * m.big_c / (dy * dy),
                )
            }
            PlanarMap::PredPrey(q) => {
                let d1 = 1.0 + q.r * x / q.k + q.alpha * y;
                Mat2::new(
                    (1.0 + q.r) * (1.0 + q.alpha * y) / (d1 * d1),
                    -(1.0 + q.r) * q.alpha * x / (d1 * d1),
                    q.gamma * y / (1.0 + q.d),
                    (1.0 + q.gamma * x) / (1.0 + q.d),
                )
            }
            PlanarMap::Generic(m) => return m.jacobian.as_ref().map(|j| j(x, y)),
        };
        Some(j)
    }

    /// Central-difference Jacobian with step `1e-7 * max(1, ||p||)`.
    pub fn fd_jacobian(&self, p: Point) -> Result<Mat2> {
        let f = |q: Point| self.step(q).map(|s| [s.x, s.y]);
        let j = fd_jacobian(&f, p)?;
        if j.is_finite() {
            Ok(j)
        } else {
            Err(Error::NonFinite { index: 0, at: p })
        }
    }

    /// Analytic Jacobian when the family has one, finite differences otherwise.
    pub fn jacobian_at(&self, p: Point) -> Result<Mat2> {
        match self.analytic_jacobian(p) {
            Some(j) if j.is_finite() => Ok(j),
            Some(_) => Err(Error::NonFinite { index: 0, at: p }),
            None => self.fd_jacobian(p),
        }
    }

    /// Working window used when the caller supplies none.
    pub fn default_bbox(&self) -> BBox {
        let (w, h) = match self {
            PlanarMap::Competition(c) => (
                1.2 * c.k1.max(c.r2 / c.alpha2),
                1.2 * c.k2.max(c.r1 / c.alpha1),
            ),
            PlanarMap::Ricker(r) => (1.5 * r.k.max(r.l / r.b), 1.5 * r.l.max(r.k / r.a)),
            PlanarMap::Mutualism(m) => {
                let reach = m
                    .nullcline_intersection()
                    .filter(|e| e.x > 0.0 && e.y > 0.0)
                    .map_or(0.0, |e| 1.5 * e.x.max(e.y));
                let s = reach.max(6.0);
                (s, s)
            }
            PlanarMap::PredPrey(q) => (1.5 * q.k.max(q.d / q.gamma), 1.5 * q.r / q.alpha),
            PlanarMap::Generic(m) => return m.bbox.unwrap_or(BBox { x0: 0.0, x1: 2.0, y0: 0.0, y1: 2.0 }),
        };
        BBox { x0: 0.0, x1: w, y0: 0.0, y1: h }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::numerics::{eig2, seeded_rng};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn invalid_parameters_rejected() {
        let e = CompetitionParams::new(0.5, 0.5, 1.0, 1.0, -1.0, 1.0).unwrap_err();
        assert_eq!(e, Error::InvalidParameter { name: "alpha1", value: -1.0 });
        assert!(RickerParams::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
        assert!(PredPreyParams::new(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn origin_fixed_for_competition() {
        let m = PlanarMap::Competition(fig5b());
        assert_eq!(m.step(Point::ORIGIN).unwrap(), Point::ORIGIN);
    }

    #[test]
    fn coexistence_point_fixed_fig6b() {
        let m = PlanarMap::Competition(fig6b());
        let e = Point::new(2.0 / 3.0, 2.0 / 3.0);
        assert!(m.step(e).unwrap().dist_inf(e) < 1e-15);
    }

    #[test]
    fn ricker_x_axis_is_one_dimensional_ricker() {
        let m = PlanarMap::Ricker(ricker_eq2());
        for x in [0.1, 0.5, 1.3, 2.0] {
            let q = m.step(Point::new(x, 0.0)).unwrap();
            assert_eq!(q.y, 0.0);
            assert!((q.x - x * (0.9 - x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn orbit_of_origin_is_constant() {
        let m = PlanarMap::Ricker(ricker_eq2());
        let o = m.orbit(Point::ORIGIN, 5);
        assert_eq!(o.points, vec![Point::ORIGIN; 6]);
        assert!(o.is_complete());
    }

    #[test]
    fn orbit_reports_overflow_index() {
        let m = PlanarMap::Ricker(ricker_eq2());
        let o = m.orbit(Point::new(-800.0, 0.0), 3);
        assert_eq!(o.non_finite_at, Some(1));
        assert_eq!(o.points.len(), 1);
        assert!(matches!(m.step(Point::new(-800.0, 0.0)), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn fig4b_orbit_reaches_e2() {
        let m = PlanarMap::Competition(fig4b());
        let o = m.orbit(Point::new(1.0, 1.0), 10_000);
        assert!(o.last().dist(Point::new(0.0, 2.0)) < 1e-6);
    }

    #[test]
    fn case1_eigenvalues_on_segment() {
        let m = PlanarMap::Competition(case1());
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let e = eig2(&m.jacobian_at(Point::new(x, 1.0 - x)).unwrap());
            assert!((e[0].re - 1.0).abs() < 1e-12 && e[0].im == 0.0);
            assert!((e[1].re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_matches_analytic_jacobian() {
        let mut rng = seeded_rng(7, 0);
        for m in all_builtin() {
            let b = m.default_bbox();
            for _ in 0..100 {
                let p = Point::new(rng.random_range(b.x0..b.x1) + 1e-3, rng.random_range(b.y0..b.y1) + 1e-3);
                let ja = m.analytic_jacobian(p).unwrap();
                let jf = m.fd_jacobian(p).unwrap();
                for (a, f) in [(ja.a, jf.a), (ja.b, jf.b), (ja.c, jf.c), (ja.d, jf.d)] {
                    assert!((a - f).abs() <= 1e-5 * a.abs().max(1.0), "{:?} {a} {f}", m.family());
                }
            }
        }
    }

    #[test]
    fn generic_map_uses_finite_differences() {
        let m = PlanarMap::generic(|x, y| x * y, |x, y| x + y * y, None);
        assert!(m.analytic_jacobian(Point::new(1.0, 2.0)).is_none());
        let j = m.jacobian_at(Point::new(1.0, 2.0)).unwrap();
        assert!((j.a - 2.0).abs() < 1e-8 && (j.b - 1.0).abs() < 1e-8);
        assert!((j.c - 1.0).abs() < 1e-8 && (j.d - 4.0).abs() < 1e-8);
    }

    #[test]
    fn competition_image_is_bounded() {
        for p in [fig4b(), fig5b(), fig6b(), case1()] {
            let m = PlanarMap::Competition(p);
            let bound = (1.0 + p.r1) * p.k1 / p.r1;
            let mut max_f = 0.0f64;
            for i in 0..=400 {
                for j in 0..=400 {
                    let x = 100.0 * (i as f64 / 400.0).powi(3);
                    let y = 100.0 * (j as f64 / 400.0).powi(3);
                    max_f = max_f.max(m.eval_f(x, y));
                }
            }
            assert!(max_f <= bound);
        }
    }

    #[test]
    fn params_serde_names() {
        let p: CompetitionParams =
            serde_json::from_str(r#"{"r1":2,"r2":2,"K1":1,"K2":1,"alpha1":1,"alpha2":1}"#).unwrap();
        assert_eq!(p, fig6b());
    }

    #[test]
    fn mutualism_intersection_8a() {
        let e = mutualism_8a().nullcline_intersection().unwrap();
        assert!((e.x - 25.0 / 3.0).abs() < 1e-12 && (e.y - 14.0 / 3.0).abs() < 1e-12);
    }

    fn any_map() -> impl Strategy<Value = PlanarMap> {
        let comp = (0.1..4.0f64, 0.1..4.0f64, 0.1..4.0f64, 0.1..4.0f64, 0.1..4.0f64, 0.1..4.0f64)
            .prop_map(|(a, b, c, d, e, f)| PlanarMap::Competition(CompetitionParams::new(a, b, c, d, e, f).unwrap()));
        let ricker = (0.1..2.0f64, 0.1..2.0f64, 0.1..2.0f64, 0.1..2.0f64)
            .prop_map(|(a, b, c, d)| PlanarMap::Ricker(RickerParams::new(a, b, c, d).unwrap()));
        let mutualism = proptest::collection::vec(0.1..10.0f64, 8).prop_map(|v| {
            PlanarMap::Mutualism(MutualismParams::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]).unwrap())
        });
        let predprey = (0.1..3.0f64, 0.1..3.0f64, 0.1..3.0f64, 0.1..3.0f64, 0.1..3.0f64)
            .prop_map(|(a, b, c, d, e)| PlanarMap::PredPrey(PredPreyParams::new(a, b, c, d, e).unwrap()));
        prop_oneof![comp, ricker, mutualism, predprey]
    }

    proptest! {
        #[test]
        fn axes_are_invariant(m in any_map(), s in 0.0..20.0f64) {
            prop_assert_eq!(m.step(Point::new(0.0, s)).unwrap().x, 0.0);
            prop_assert_eq!(m.step(Point::new(s, 0.0)).unwrap().y, 0.0);
        }

        #[test]
        fn quadrant_is_preserved(m in any_map(), x in 0.0..20.0f64, y in 0.0..20.0f64) {
            let q = m.step(Point::new(x, y)).unwrap();
            prop_assert!(q.in_closed_quadrant());
        }
    }
}
