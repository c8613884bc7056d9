//! Case classification and empirical theorem checks for the Leslie-Gower
//! competition map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CompetitionParams, PlanarMap, Point};
use crate::next_iterate::competition_quadratics;
use crate::nullclines::{competition_coexistence, competition_nullclines, segment_distance, CONTINUUM_REL_TOL};
use crate::numerics::{eig2, low_discrepancy_points, BBox};

/// `c12 = r1/alpha1 - K2`, `c21 = r2/alpha2 - K1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPair {
    pub c12: f64,
    pub c21: f64,
}

pub fn efficiencies(p: &CompetitionParams) -> EfficiencyPair {
    EfficiencyPair { c12: p.r1 / p.alpha1 - p.k2, c21: p.r2 / p.alpha2 - p.k1 }
}

/// Sign of each efficiency with the relative zero threshold used for the
/// degenerate line of equilibria.
pub fn efficiency_signs(p: &CompetitionParams) -> (i8, i8) {
    let e = efficiencies(p);
    let sign = |v: f64, scale: f64| {
        if v.abs() < CONTINUUM_REL_TOL * scale {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    (sign(e.c12, (p.r1 / p.alpha1).max(p.k2)), sign(e.c21, (p.r2 / p.alpha2).max(p.k1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompetitionCase {
    DegenerateLine,
    ExclusionYWins,
    ExclusionXWins,
    Bistable,
    Coexistence,
}

impl CompetitionCase {
    /// Roman numeral of the case.
    pub fn label(&self) -> &'static str {
        match self {
            CompetitionCase::DegenerateLine => "I",
            CompetitionCase::ExclusionYWins | CompetitionCase::ExclusionXWins => "II",
            CompetitionCase::Bistable => "III",
            CompetitionCase::Coexistence => "IV",
        }
    }
}

/// A limit set used for orbit attribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Attractor {
    Point { name: String, at: Point },
    Segment { name: String, from: Point, to: Point },
}

impl Attractor {
    pub fn point(name: &str, at: Point) -> Self {
        Attractor::Point { name: name.to_string(), at }
    }

    pub fn name(&self) -> &str {
        match self {
            Attractor::Point { name, .. } | Attractor::Segment { name, .. } => name,
        }
    }

    pub fn distance(&self, p: Point) -> f64 {
        match self {
            Attractor::Point { at, .. } => at.dist(p),
            Attractor::Segment { from, to, .. } => segment_distance(p, *from, *to),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePrediction {
    pub case: CompetitionCase,
    pub efficiencies: EfficiencyPair,
    /// Every interior orbit converges to one of these.
    pub limits: Vec<Attractor>,
    /// Names of the equilibria that are not locally attracting.
    pub unstable: Vec<String>,
}

/// Predicted global outcome from the efficiency signs alone. One zero and one
/// nonzero efficiency is resolved toward the exclusion case whose winner the
/// nonzero sign already favors.
pub fn classify(p: &CompetitionParams) -> CasePrediction {
    let e1 = Point::new(p.k1, 0.0);
    let e2 = Point::new(0.0, p.k2);
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let (case, limits, unstable) = match efficiency_signs(p) {
        (0, 0) => (
            CompetitionCase::DegenerateLine,
            vec![Attractor::Segment { name: "E*_X".into(), from: Point::new(0.0, p.r1 / p.alpha1), to: e1 }],
            names(&["E0"]),
        ),
        (-1, 1) | (-1, 0) | (0, 1) => {
            (CompetitionCase::ExclusionYWins, vec![Attractor::point("E2", e2)], names(&["E0", "E1"]))
        }
        (1, -1) | (1, 0) | (0, -1) => {
            (CompetitionCase::ExclusionXWins, vec![Attractor::point("E1", e1)], names(&["E0", "E2"]))
        }
        (-1, -1) => (
            CompetitionCase::Bistable,
            vec![Attractor::point("E1", e1), Attractor::point("E2", e2), Attractor::point("E*", competition_coexistence(p))],
            names(&["E0", "E*"]),
        ),
        _ => (
            CompetitionCase::Coexistence,
            vec![Attractor::point("E*", competition_coexistence(p))],
            names(&["E0", "E1", "E2"]),
        ),
    };
    CasePrediction { case, efficiencies: efficiencies(p), limits, unstable }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    pub n_orbits: usize,
    /// Orbits attributed to each attractor, in attractor order.
    pub counts: Vec<(String, usize)>,
    /// Orbits not attributed, including the non-finite ones.
    pub unresolved: usize,
    pub non_finite: usize,
    pub max_steps: usize,
    pub tol: f64,
    /// Up to ten unresolved starting points.
    pub unresolved_starts: Vec<Point>,
}

impl ConvergenceStats {
    pub fn count(&self, name: &str) -> usize {
        self.counts.iter().find(|(n, _)| n == name).map_or(0, |(_, c)| *c)
    }
}

/// Consecutive steps an orbit must stay within `tol` of an attractor.
pub const DWELL_STEPS: usize = 100;

enum Fate {
    Attractor(usize),
    Unresolved,
    NonFinite,
}

/// Attributes each orbit to the first attractor it stays within `tol` of for
/// [`DWELL_STEPS`] consecutive iterates.
pub fn attribute_orbits(
    map: &PlanarMap,
    attractors: &[Attractor],
    starts: &[Point],
    max_steps: usize,
    tol: f64,
) -> ConvergenceStats {
    let fates: Vec<Fate> = starts
        .par_iter()
        .map(|&p0| {
            let mut streak = vec![0usize; attractors.len()];
            let mut p = p0;
            for _ in 0..=max_steps {
                for (a, s) in attractors.iter().zip(streak.iter_mut()) {
                    *s = if a.distance(p) < tol { *s + 1 } else { 0 };
                }
                if let Some(i) = streak.iter().position(|&s| s >= DWELL_STEPS) {
                    return Fate::Attractor(i);
                }
                match map.step(p) {
                    Ok(q) => p = q,
                    Err(_) => return Fate::NonFinite,
                }
            }
            Fate::Unresolved
        })
        .collect();
    let mut counts = vec![0usize; attractors.len()];
    let (mut unresolved, mut non_finite) = (0, 0);
    let mut unresolved_starts = Vec::new();
    for (f, s) in fates.iter().zip(starts) {
        match f {
            Fate::Attractor(i) => counts[*i] += 1,
            Fate::Unresolved | Fate::NonFinite => {
                unresolved += 1;
                if matches!(f, Fate::NonFinite) {
                    non_finite += 1;
                }
                if unresolved_starts.len() < 10 {
                    unresolved_starts.push(*s);
                }
            }
        }
    }
    ConvergenceStats {
        n_orbits: starts.len(),
        counts: attractors.iter().map(|a| a.name().to_string()).zip(counts).collect(),
        unresolved,
        non_finite,
        max_steps,
        tol,
        unresolved_starts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeConfig {
    pub n_orbits: usize,
    pub max_steps: usize,
    pub tol: f64,
    /// Starts are drawn from `(x0, x1] x (y0, y1]`.
    pub window: BBox,
    pub seed: u64,
}

impl Default for OutcomeConfig {
    fn default() -> Self {
        OutcomeConfig {
            n_orbits: 1000,
            max_steps: 10_000,
            tol: 1e-6,
            window: BBox { x0: 0.0, x1: 4.0, y0: 0.0, y1: 4.0 },
            seed: 0,
        }
    }
}

/// Axis orbits: each should approach its carrying capacity monotonically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub samples_per_axis: usize,
    pub x_axis_converged: usize,
    pub y_axis_converged: usize,
    pub monotonicity_violations: usize,
}

impl BoundaryReport {
    pub fn holds(&self) -> bool {
        self.x_axis_converged == self.samples_per_axis
            && self.y_axis_converged == self.samples_per_axis
            && self.monotonicity_violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub prediction: CasePrediction,
    pub stats: ConvergenceStats,
    pub boundary: BoundaryReport,
}

/// Simulates low-discrepancy interior starts and attributes them to the
/// predicted limits, then checks the axis dynamics separately.
pub fn verify_global_outcome(p: &CompetitionParams, cfg: &OutcomeConfig) -> Result<OutcomeReport> {
    cfg.window.validate()?;
    let prediction = classify(p);
    let map = PlanarMap::Competition(*p);
    let starts = low_discrepancy_points(&cfg.window, cfg.n_orbits, cfg.seed);
    let stats = attribute_orbits(&map, &prediction.limits, &starts, cfg.max_steps, cfg.tol);
    let boundary = boundary_check(&map, p, &cfg.window, cfg.max_steps, cfg.tol);
    Ok(OutcomeReport { prediction, stats, boundary })
}

fn boundary_check(map: &PlanarMap, p: &CompetitionParams, window: &BBox, steps: usize, tol: f64) -> BoundaryReport {
    let n = 100;
    let mut report =
        BoundaryReport { samples_per_axis: n, x_axis_converged: 0, y_axis_converged: 0, monotonicity_violations: 0 };
    for axis in 0..2 {
        let (target, hi) = if axis == 0 { (p.k1, window.x1) } else { (p.k2, window.y1) };
        for i in 1..=n {
            let s = hi * i as f64 / n as f64;
            let mut q = if axis == 0 { Point::new(s, 0.0) } else { Point::new(0.0, s) };
            let coord = |q: Point| if axis == 0 { q.x } else { q.y };
            let mut gap = (coord(q) - target).abs();
            let mut monotone = true;
            for _ in 0..steps {
                q = match map.step(q) {
                    Ok(q) => q,
                    Err(_) => break,
                };
                let g = (coord(q) - target).abs();
                if g > gap * (1.0 + 1e-12) + 1e-15 {
                    monotone = false;
                }
                gap = g;
                if gap < 1e-3 * tol {
                    break;
                }
            }
            if !monotone {
                report.monotonicity_violations += 1;
            }
            let off_axis = if axis == 0 { q.y } else { q.x };
            if gap < tol && off_axis == 0.0 {
                if axis == 0 {
                    report.x_axis_converged += 1;
                } else {
                    report.y_axis_converged += 1;
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    /// Item letter of the case lemma, e.g. `a`.
    pub item: String,
    pub claim: String,
    pub cells_checked: usize,
    pub violations: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignLemmaReport {
    pub case: CompetitionCase,
    pub grid: usize,
    pub checks: Vec<LemmaCheck>,
}

impl SignLemmaReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations.len()).sum()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    H,
    K,
}

/// Cell predicate over `(x, y, h(x), k(x), X*, Y*)`.
type Region = fn(f64, f64, f64, f64, Point) -> bool;

fn r1(_: f64, y: f64, h: f64, k: f64, _: Point) -> bool {
    y < h.min(k)
}
/// `h <= Y <= k`.
fn r2(_: f64, y: f64, h: f64, k: f64, _: Point) -> bool {
    h <= y && y <= k
}
fn r3(_: f64, y: f64, h: f64, k: f64, _: Point) -> bool {
    y > h.max(k)
}
/// `k <= Y <= h`.
fn r4(_: f64, y: f64, h: f64, k: f64, _: Point) -> bool {
    k <= y && y <= h
}
fn r1_above(x: f64, y: f64, h: f64, k: f64, e: Point) -> bool {
    r1(x, y, h, k, e) && y > e.y
}
fn r1_right(x: f64, y: f64, h: f64, k: f64, e: Point) -> bool {
    r1(x, y, h, k, e) && x > e.x
}
fn r3_below(x: f64, y: f64, h: f64, k: f64, e: Point) -> bool {
    r3(x, y, h, k, e) && y < e.y
}
fn r3_left(x: f64, y: f64, h: f64, k: f64, e: Point) -> bool {
    r3(x, y, h, k, e) && x < e.x
}
fn above_h(_: f64, y: f64, h: f64, _: f64, _: Point) -> bool {
    y > h
}
fn below_h(_: f64, y: f64, h: f64, _: f64, _: Point) -> bool {
    y < h
}

struct Claim {
    item: &'static str,
    text: &'static str,
    op: Op,
    positive: bool,
    regions: &'static [Region],
}

fn claims(case: CompetitionCase) -> Result<Vec<Claim>> {
    use CompetitionCase::*;
    let c = |item, text, op, positive, regions| Claim { item, text, op, positive, regions };
    Ok(match case {
        // R1 below both nullclines, R3 above both
        DegenerateLine => vec![
            c("a", "L_h < 0 below h", Op::H, false, &[below_h]),
            c("a", "L_k < 0 below h", Op::K, false, &[below_h]),
            c("b", "L_h > 0 above h", Op::H, true, &[above_h]),
            c("b", "L_k > 0 above h", Op::K, true, &[above_h]),
        ],
        ExclusionYWins => vec![
            c("a", "L_h > 0 on R2 and R3", Op::H, true, &[r2, r3]),
            c("b", "L_k < 0 on R1 and R2", Op::K, false, &[r1, r2]),
        ],
        ExclusionXWins => {
            return Err(Error::CaseMismatch(
                "sign lemmas are stated for the case where Y wins; swap the species to check this one".into(),
            ))
        }
        // here the band h <= Y <= k lies left of E* and k <= Y <= h right of it
        Bistable => vec![
            c("a", "L_h > 0 on h <= Y <= k and R3 left of E*", Op::H, true, &[r2, r3_left]),
            c("b", "L_h < 0 on k <= Y <= h and R1 right of E*", Op::H, false, &[r4, r1_right]),
            c("c", "L_k > 0 on k <= Y <= h and R3 below E*", Op::K, true, &[r4, r3_below]),
            c("d", "L_k < 0 on h <= Y <= k and R1 above E*", Op::K, false, &[r2, r1_above]),
        ],
        Coexistence => vec![
            c("a", "L_h < 0 on R4 and R1 above E*", Op::H, false, &[r4, r1_above]),
            c("b", "L_h > 0 on R2 and R3 below E*", Op::H, true, &[r2, r3_below]),
            c("c", "L_k > 0 on R4 and R3 left of E*", Op::K, true, &[r4, r3_left]),
            c("d", "L_k < 0 on R2 and R1 right of E*", Op::K, false, &[r2, r1_right]),
        ],
    })
}

/// Evaluates both operators at the cell centers of an `n x n` grid over the
/// default window, restricted to the regions named by the case lemma and
/// excluding cells within 1.5 cells of `h`, `k`, `X = X*` and `Y = Y*`.
pub fn verify_sign_lemmas(p: &CompetitionParams, n: usize) -> Result<SignLemmaReport> {
    let prediction = classify(p);
    let claims = claims(prediction.case)?;
    let window = PlanarMap::Competition(*p).default_bbox();
    let (h, k) = competition_nullclines(p);
    let q = competition_quadratics(p);
    let e = match prediction.case {
        CompetitionCase::Bistable | CompetitionCase::Coexistence => competition_coexistence(p),
        _ => Point::new(f64::NAN, f64::NAN),
    };
    let (dx, dy) = (window.width() / n as f64, window.height() / n as f64);
    let band = 1.5;
    // distance in cell units from a point to the line through a and b
    let grid_dist = |pt: Point, a: Point, b: Point| {
        let g = |v: Point| Point::new(v.x / dx, v.y / dy);
        let (pt, a, b) = (g(pt), g(a), g(b));
        let (ux, uy) = (b.x - a.x, b.y - a.y);
        ((pt.x - a.x) * uy - (pt.y - a.y) * ux).abs() / ux.hypot(uy)
    };
    let lines = [
        (h.point_at(0.0), h.point_at(1.0)),
        (k.point_at(0.0), k.point_at(1.0)),
        (Point::new(e.x, 0.0), Point::new(e.x, 1.0)),
        (Point::new(0.0, e.y), Point::new(1.0, e.y)),
    ];
    let cells: Vec<Point> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| Point::new(window.x0 + (i as f64 + 0.5) * dx, window.y0 + (j as f64 + 0.5) * dy))
        .filter(|c| lines.iter().all(|&(a, b)| !(grid_dist(*c, a, b) <= band)))
        .collect();

    let checks = claims
        .iter()
        .map(|cl| {
            let in_scope: Vec<Point> = cells
                .iter()
                .copied()
                .filter(|c| cl.regions.iter().any(|r| r(c.x, c.y, h.eval(c.x), k.eval(c.x), e)))
                .collect();
            let violations = in_scope
                .iter()
                .copied()
                .filter(|c| {
                    let v = match cl.op {
                        Op::H => q.rational_lh(*c),
                        Op::K => q.rational_lk(*c),
                    };
                    if cl.positive {
                        !(v > 0.0)
                    } else {
                        !(v < 0.0)
                    }
                })
                .collect();
            LemmaCheck { item: cl.item.into(), claim: cl.text.into(), cells_checked: in_scope.len(), violations }
        })
        .collect();
    Ok(SignLemmaReport { case: prediction.case, grid: n, checks })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEigen {
    pub x: f64,
    /// Jacobian eigenvalue moduli, descending.
    pub computed: [f64; 2],
    /// `(1 + r1(1 - X/K1) + r2 X/K1) / ((1 + r1)(1 + r2))`; the other one is 1.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleCheck {
    pub center_x: f64,
    pub rect: BBox,
    pub starts: usize,
    pub exits: usize,
    /// Largest distance from a final iterate to the equilibrium segment.
    pub max_limit_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case1Report {
    pub eigen: Vec<SegmentEigen>,
    /// Largest deviation of a computed eigenvalue from its prediction.
    pub max_eigen_error: f64,
    pub rectangles: Vec<RectangleCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case1Config {
    pub eps: f64,
    pub starts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for Case1Config {
    fn default() -> Self {
        Case1Config { eps: 0.05, starts: 1000, steps: 10_000, seed: 0 }
    }
}

/// For the degenerate line of equilibria: eigenvalues along the segment, and
/// invariance of small rectangles whose opposite corners sit on the line.
pub fn case1_stability_demo(p: &CompetitionParams, cfg: &Case1Config) -> Result<Case1Report> {
    let prediction = classify(p);
    if prediction.case != CompetitionCase::DegenerateLine {
        return Err(Error::CaseMismatch(format!("expected case I, parameters give case {}", prediction.case.label())));
    }
    let map = PlanarMap::Competition(*p);
    let (h, _) = competition_nullclines(p);
    let segment = &prediction.limits[0];

    let mut eigen = Vec::new();
    let mut max_err = 0.0f64;
    for i in 0..=20 {
        let x = p.k1 * i as f64 / 20.0;
        let ev = eig2(&map.jacobian_at(h.point_at(x))?);
        let computed = [ev[0].norm(), ev[1].norm()];
        let predicted = (1.0 + p.r1 * (1.0 - x / p.k1) + x / p.k1 * p.r2) / ((1.0 + p.r1) * (1.0 + p.r2));
        let mut want = [1.0, predicted];
        want.sort_by(|a, b| b.total_cmp(a));
        max_err = max_err.max((computed[0] - want[0]).abs()).max((computed[1] - want[1]).abs());
        eigen.push(SegmentEigen { x, computed, predicted });
    }

    let delta = cfg.eps / h.slope.abs().max(1.0);
    let mut rectangles = Vec::new();
    for frac in [0.25, 0.5, 0.75] {
        let xc = p.k1 * frac;
        let (xl, xr) = (xc - delta, xc + delta);
        let rect = BBox::new(xl, xr, h.eval(xr), h.eval(xl))?;
        let starts: Vec<Point> =
            low_discrepancy_points(&rect, cfg.starts, cfg.seed).into_iter().filter(|q| q.x < xr && q.y < rect.y1).collect();
        let outcomes: Vec<(bool, f64)> = starts
            .par_iter()
            .map(|&s| {
                let mut q = s;
                for _ in 0..cfg.steps {
                    q = match map.step(q) {
                        Ok(q) => q,
                        Err(_) => return (true, f64::INFINITY),
                    };
                    if !rect.contains_with(q, 1e-12) {
                        return (true, segment.distance(q));
                    }
                }
                (false, segment.distance(q))
            })
            .collect();
        rectangles.push(RectangleCheck {
            center_x: xc,
            rect,
            starts: starts.len(),
            exits: outcomes.iter().filter(|o| o.0).count(),
            max_limit_distance: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        });
    }
    Ok(Case1Report { eigen, max_eigen_error: max_err, rectangles })
}
