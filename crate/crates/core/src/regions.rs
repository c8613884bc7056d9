//! Sign-labeled region decomposition, invariance certification and
//! oscillation-risk detection.
//!
//! Regions live on the cell grid of a [`TraceConfig`]: every curve is
//! rasterized with an exclusion band, the remaining cells are flood-filled,
//! and each component is labeled with the signs sampled at its cell centers.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CompetitionParams, PlanarMap, Point};
use crate::next_iterate::{NextIterateOperator, RootCurve};
use crate::nullclines::{
    competition_coexistence, competition_nullclines, direction_signs, DirectionSigns, NullclineCurve, Sign,
    DIRECTION_BAND,
};
use crate::numerics::{BBox, R2Sequence};
use crate::trace::{Polyline, TraceConfig};

/// Half-width of the exclusion band around every curve, in cells.
pub const BAND_CELLS: f64 = 1.5;

/// Zero band for operator sign samples.
pub const OPERATOR_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRegion {
    pub id: usize,
    /// Grid cell indices `j * nx + i`.
    pub cells: Vec<usize>,
    pub direction: DirectionSigns,
    /// One entry per nontrivial nullcline, in nullcline order.
    pub op_signs: Vec<(String, Sign)>,
    /// Position relative to each nullcline: `Plus` above / right of it.
    pub sides: Vec<(String, Sign)>,
    pub adjacency: Vec<usize>,
    pub area_fraction: f64,
    /// A cell center inside the region, nearest to its centroid.
    pub representative: Point,
}

impl SignedRegion {
    pub fn op_sign(&self, label: &str) -> Option<Sign> {
        self.op_signs.iter().find(|(l, _)| l == label).map(|(_, s)| *s)
    }

    pub fn side(&self, label: &str) -> Option<Sign> {
        self.sides.iter().find(|(l, _)| l == label).map(|(_, s)| *s)
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub cfg: TraceConfig,
    pub regions: Vec<SignedRegion>,
    /// Region id per cell; `None` inside the exclusion band.
    pub labels: Vec<Option<usize>>,
    pub band_cells: usize,
}

impl Decomposition {
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        let b = &self.cfg.bbox;
        if !b.contains(p) {
            return None;
        }
        let i = (((p.x - b.x0) / self.cfg.dx()) as usize).min(self.cfg.nx - 1);
        let j = (((p.y - b.y0) / self.cfg.dy()) as usize).min(self.cfg.ny - 1);
        Some(j * self.cfg.nx + i)
    }

    pub fn region_at(&self, p: Point) -> Option<usize> {
        self.cell_of(p).and_then(|c| self.labels[c])
    }

    pub fn cell_center(&self, cell: usize) -> Point {
        self.cfg.cell_center(cell % self.cfg.nx, cell / self.cfg.nx)
    }
}

/// A curve as seen by the rasterizer.
fn curve_segments(map: &PlanarMap, nullclines: &[NullclineCurve], root_curves: &[RootCurve], cfg: &TraceConfig) -> Vec<(Point, Point)> {
    let b = cfg.bbox;
    let mut segs = Vec::new();
    for n in nullclines {
        let (lo, hi) = match n.orientation {
            crate::nullclines::Orientation::ExplicitInX => (b.x0, b.x1),
            crate::nullclines::Orientation::ExplicitInY => (b.y0, b.y1),
        };
        segs.push((n.point_at(lo), n.point_at(hi)));
    }
    // The axes are the trivial nullclines; they only cut windows reaching
    // past them.
    if b.x0 < 0.0 && b.x1 > 0.0 {
        segs.push((Point::new(0.0, b.y0), Point::new(0.0, b.y1)));
    }
    if b.y0 < 0.0 && b.y1 > 0.0 {
        segs.push((Point::new(b.x0, 0.0), Point::new(b.x1, 0.0)));
    }
    let params = match map {
        PlanarMap::Competition(p) => Some(p),
        _ => None,
    };
    let samples = 4 * cfg.nx.max(cfg.ny);
    for rc in root_curves {
        for pl in rc.pieces(params, samples) {
            segs.extend(pl.segments());
        }
    }
    segs
}

fn rasterize(segs: &[(Point, Point)], cfg: &TraceConfig) -> Vec<bool> {
    let (nx, ny) = (cfg.nx, cfg.ny);
    let (dx, dy) = (cfg.dx(), cfg.dy());
    let b = cfg.bbox;
    // grid coordinates: cell (i, j) has center (i + 0.5, j + 0.5)
    let to_grid = |p: Point| Point::new((p.x - b.x0) / dx, (p.y - b.y0) / dy);
    let mut blocked = vec![false; nx * ny];
    for &(p, q) in segs {
        let (gp, gq) = (to_grid(p), to_grid(q));
        if !(gp.is_finite() && gq.is_finite()) {
            continue;
        }
        let clamp_lo = |v: f64, n: usize| (v - BAND_CELLS - 1.0).floor().clamp(0.0, n as f64) as usize;
        let clamp_hi = |v: f64, n: usize| (v + BAND_CELLS + 1.0).ceil().clamp(0.0, n as f64) as usize;
        let (i0, i1) = (clamp_lo(gp.x.min(gq.x), nx), clamp_hi(gp.x.max(gq.x), nx));
        let (j0, j1) = (clamp_lo(gp.y.min(gq.y), ny), clamp_hi(gp.y.max(gq.y), ny));
        for j in j0..j1 {
            for i in i0..i1 {
                let c = Point::new(i as f64 + 0.5, j as f64 + 0.5);
                if crate::nullclines::segment_distance(c, gp, gq) <= BAND_CELLS {
                    blocked[j * nx + i] = true;
                }
            }
        }
    }
    blocked
}

fn flood_fill(blocked: &[bool], nx: usize, ny: usize) -> (Vec<Option<usize>>, usize) {
    let mut labels = vec![None; nx * ny];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..nx * ny {
        if blocked[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let (i, j) = (c % nx, c / nx);
            let mut visit = |n: usize| {
                if !blocked[n] && labels[n].is_none() {
                    labels[n] = Some(next);
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(c - 1);
            }
            if i + 1 < nx {
                visit(c + 1);
            }
            if j > 0 {
                visit(c - nx);
            }
            if j + 1 < ny {
                visit(c + nx);
            }
        }
        next += 1;
    }
    (labels, next)
}

/// Regions touching across the band, from a multi-source BFS that assigns
/// every band cell to its nearest labeled cell.
fn adjacency(labels: &[Option<usize>], nx: usize, ny: usize, n_regions: usize) -> Vec<Vec<usize>> {
    let mut owner: Vec<Option<usize>> = labels.to_vec();
    let mut queue: VecDeque<usize> = (0..nx * ny).filter(|&c| owner[c].is_some()).collect();
    while let Some(c) = queue.pop_front() {
        let (i, j) = (c % nx, c / nx);
        let o = owner[c];
        for n in neighbors(i, j, nx, ny) {
            if owner[n].is_none() {
                owner[n] = o;
                queue.push_back(n);
            }
        }
    }
    let mut adj = vec![Vec::new(); n_regions];
    for c in 0..nx * ny {
        let (i, j) = (c % nx, c / nx);
        if let Some(a) = owner[c] {
            for n in neighbors(i, j, nx, ny) {
                if let Some(b) = owner[n] {
                    if a != b && !adj[a].contains(&b) {
                        adj[a].push(b);
                    }
                }
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

fn neighbors(i: usize, j: usize, nx: usize, ny: usize) -> impl Iterator<Item = usize> {
    let c = j * nx + i;
    [
        (i > 0).then(|| c - 1),
        (i + 1 < nx).then(|| c + 1),
        (j > 0).then(|| c - nx),
        (j + 1 < ny).then(|| c + nx),
    ]
    .into_iter()
    .flatten()
}

struct CellSigns {
    direction: [Sign; 2],
    ops: Vec<Sign>,
    sides: Vec<Sign>,
}

fn merge(acc: &mut Sign, s: Sign) -> bool {
    match (*acc, s) {
        (_, Sign::Zero) => true,
        (Sign::Zero, s) => {
            *acc = s;
            true
        }
        (a, s) => a == s,
    }
}

/// Splits `cfg.bbox` into sign-labeled regions cut by the nullclines,
/// root-curves and axes. Fails with `InconsistentSigns` when a component carries two
/// different signs for the same quantity, which means the grid is too coarse.
pub fn decompose(
    map: &PlanarMap,
    nullclines: &[NullclineCurve],
    root_curves: &[RootCurve],
    cfg: &TraceConfig,
) -> Result<Decomposition> {
    cfg.validate()?;
    let (nx, ny) = (cfg.nx, cfg.ny);
    let segs = curve_segments(map, nullclines, root_curves, cfg);
    let blocked = rasterize(&segs, cfg);
    let (labels, n_regions) = flood_fill(&blocked, nx, ny);

    let ops: Vec<NextIterateOperator<'_>> = nullclines.iter().map(|n| NextIterateOperator::new(map, n)).collect();
    let samples: Vec<Option<CellSigns>> = (0..nx * ny)
        .into_par_iter()
        .map(|c| {
            labels[c]?;
            let p = cfg.cell_center(c % nx, c / nx);
            let d = direction_signs(map, p, DIRECTION_BAND);
            Some(CellSigns {
                direction: [d.dx, d.dy],
                ops: ops.iter().map(|op| Sign::of(op.eval_or_nan(p), OPERATOR_BAND)).collect(),
                sides: nullclines.iter().map(|n| Sign::of(n.offset(p), 0.0)).collect(),
            })
        })
        .collect();

    let k = nullclines.len();
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); n_regions];
    let mut dir = vec![[Sign::Zero; 2]; n_regions];
    let mut op = vec![vec![Sign::Zero; k]; n_regions];
    let mut side = vec![vec![Sign::Zero; k]; n_regions];
    for (c, s) in samples.iter().enumerate() {
        let (Some(r), Some(s)) = (labels[c], s) else { continue };
        cells[r].push(c);
        let mut ok = merge(&mut dir[r][0], s.direction[0]) && merge(&mut dir[r][1], s.direction[1]);
        for m in 0..k {
            ok &= merge(&mut op[r][m], s.ops[m]);
            ok &= merge(&mut side[r][m], s.sides[m]);
        }
        if !ok {
            return Err(Error::InconsistentSigns { region: r });
        }
    }

    let adj = adjacency(&labels, nx, ny, n_regions);
    let total = (nx * ny) as f64;
    let regions = (0..n_regions)
        .map(|r| {
            let pts: Vec<Point> = cells[r].iter().map(|&c| cfg.cell_center(c % nx, c / nx)).collect();
            let n = pts.len() as f64;
            let centroid = Point::new(pts.iter().map(|p| p.x).sum::<f64>() / n, pts.iter().map(|p| p.y).sum::<f64>() / n);
            let representative = *pts
                .iter()
                .min_by(|a, b| a.dist(centroid).total_cmp(&b.dist(centroid)))
                .expect("regions are nonempty");
            SignedRegion {
                id: r,
                cells: cells[r].clone(),
                direction: DirectionSigns { dx: dir[r][0], dy: dir[r][1] },
                op_signs: nullclines.iter().zip(&op[r]).map(|(n, s)| (n.label.clone(), *s)).collect(),
                sides: nullclines.iter().zip(&side[r]).map(|(n, s)| (n.label.clone(), *s)).collect(),
                adjacency: adj[r].clone(),
                area_fraction: n / total,
                representative,
            }
        })
        .collect();
    let band_cells = blocked.iter().filter(|b| **b).count();
    Ok(Decomposition { cfg: *cfg, regions, labels, band_cells })
}

/// Side of a nullcline: `Above` is above (or to the right of) it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Above,
    Below,
}

impl Side {
    fn sign(&self) -> Sign {
        match self {
            Side::Above => Sign::Plus,
            Side::Below => Sign::Minus,
        }
    }
}

/// A set cut out of the closed quadrant by sides of nullclines, e.g. the band
/// `{h <= Y <= k}` is `[(h, Above), (k, Below)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullclineRegion {
    pub name: String,
    /// `(index into the nullcline list, side)`.
    pub constraints: Vec<(usize, Side)>,
}

impl NullclineRegion {
    pub fn new(name: impl Into<String>, constraints: Vec<(usize, Side)>) -> Self {
        NullclineRegion { name: name.into(), constraints }
    }

    pub fn contains(&self, nullclines: &[NullclineCurve], p: Point, tol: f64) -> bool {
        p.x >= -tol
            && p.y >= -tol
            && self.constraints.iter().all(|&(n, side)| {
                let off = nullclines[n].offset(p);
                match side {
                    Side::Above => off >= -tol,
                    Side::Below => off <= tol,
                }
            })
    }

    /// Two constraints on different nullclines, on opposite sides.
    pub fn is_band(&self) -> bool {
        match self.constraints.as_slice() {
            [(a, sa), (b, sb)] => a != b && sa != sb,
            _ => false,
        }
    }

    /// The four sets bounded by two nullclines: below both, above both and
    /// the two bands.
    pub fn standard(nullclines: &[NullclineCurve]) -> Vec<NullclineRegion> {
        if nullclines.len() != 2 {
            return Vec::new();
        }
        let (a, b) = (&nullclines[0].label, &nullclines[1].label);
        vec![
            NullclineRegion::new(format!("below {a} and {b}"), vec![(0, Side::Below), (1, Side::Below)]),
            NullclineRegion::new(format!("above {a} and {b}"), vec![(0, Side::Above), (1, Side::Above)]),
            NullclineRegion::new(format!("{a} <= . <= {b}"), vec![(0, Side::Above), (1, Side::Below)]),
            NullclineRegion::new(format!("{b} <= . <= {a}"), vec![(1, Side::Above), (0, Side::Below)]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    ProvenBySigns,
    /// No orbit left the set. `samples == 0` means the set had no sampled
    /// interior inside the window.
    EmpiricallySupported { samples: usize, steps: usize },
    Counterexample { start: Point, exit_step: usize, exit_point: Point },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub region: String,
    /// Decomposition regions contained in the set.
    pub region_ids: Vec<usize>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalConfig {
    pub starts: usize,
    pub steps: usize,
    pub seed: u64,
    /// Slack on set membership.
    pub tol: f64,
}

impl Default for EmpiricalConfig {
    fn default() -> Self {
        EmpiricalConfig { starts: 1000, steps: 100, seed: 0, tol: 1e-9 }
    }
}

/// Decomposition regions lying in `set` (judged by their side signs).
pub fn regions_in(decomp: &Decomposition, nullclines: &[NullclineCurve], set: &NullclineRegion) -> Vec<usize> {
    decomp
        .regions
        .iter()
        .filter(|r| set.constraints.iter().all(|&(n, side)| r.side(&nullclines[n].label) == Some(side.sign())))
        .map(|r| r.id)
        .collect()
}

/// Certifies positive invariance of `set`.
///
/// A band is `ProvenBySigns` when every region inside it has the operator
/// sign pushing images back across both bounding nullclines (positive for
/// the lower one, negative for the upper one). Anything else is tested by
/// iterating sampled starts and checking membership after every step.
pub fn certify_invariance(
    map: &PlanarMap,
    nullclines: &[NullclineCurve],
    decomp: &Decomposition,
    set: &NullclineRegion,
    emp: &EmpiricalConfig,
) -> InvarianceVerdict {
    let ids = regions_in(decomp, nullclines, set);
    if set.is_band() && !ids.is_empty() {
        let inward = ids.iter().all(|&r| {
            set.constraints
                .iter()
                .all(|&(n, side)| decomp.regions[r].op_sign(&nullclines[n].label) == Some(side.sign()))
        });
        if inward && inward_on_every_cell(map, nullclines, decomp, set) {
            return InvarianceVerdict { region: set.name.clone(), region_ids: ids, verdict: Verdict::ProvenBySigns };
        }
    }
    let verdict = empirical_invariance(map, nullclines, set, &decomp.cfg.bbox, emp);
    InvarianceVerdict { region: set.name.clone(), region_ids: ids, verdict }
}

/// Inward operator signs at every cell center inside `set`, including the
/// cells of the exclusion band, which can hide thin slivers between a
/// nullcline and a nearby root-curve.
fn inward_on_every_cell(
    map: &PlanarMap,
    nullclines: &[NullclineCurve],
    decomp: &Decomposition,
    set: &NullclineRegion,
) -> bool {
    let cfg = &decomp.cfg;
    (0..cfg.nx * cfg.ny).into_par_iter().all(|cell| {
        let c = decomp.cell_center(cell);
        if !set.contains(nullclines, c, 0.0) {
            return true;
        }
        set.constraints.iter().all(|&(n, side)| {
            let v = NextIterateOperator::new(map, &nullclines[n]).eval_or_nan(c);
            let s = Sign::of(v, OPERATOR_BAND);
            !v.is_nan() && s != side.sign().flip()
        })
    })
}

/// Iterates low-discrepancy starts from `set` inside `window` and reports the
/// first start (in sample order) whose orbit leaves the set.
pub fn empirical_invariance(
    map: &PlanarMap,
    nullclines: &[NullclineCurve],
    set: &NullclineRegion,
    window: &BBox,
    emp: &EmpiricalConfig,
) -> Verdict {
    let starts = sample_in(window, emp.starts, emp.seed, |p| set.contains(nullclines, p, 0.0));
    let exits: Vec<Option<(usize, Point)>> = starts
        .par_iter()
        .map(|&p0| {
            let mut p = p0;
            for t in 1..=emp.steps {
                match map.step(p) {
                    Ok(q) if set.contains(nullclines, q, emp.tol) => p = q,
                    Ok(q) => return Some((t, q)),
                    Err(_) => return Some((t, Point::new(f64::NAN, f64::NAN))),
                }
            }
            None
        })
        .collect();
    match starts.iter().zip(exits).find_map(|(s, e)| e.map(|e| (*s, e))) {
        Some((start, (exit_step, exit_point))) => Verdict::Counterexample { start, exit_step, exit_point },
        None => Verdict::EmpiricallySupported { samples: starts.len(), steps: emp.steps },
    }
}

/// Up to `n` low-discrepancy points of `window` accepted by `keep`, drawing
/// at most `1000 * n` candidates.
pub fn sample_in(window: &BBox, n: usize, seed: u64, keep: impl Fn(Point) -> bool) -> Vec<Point> {
    R2Sequence::new(seed)
        .take(1000 * n.max(1))
        .map(|u| window.sample_half_open(u))
        .filter(|p| p.x > 0.0 && p.y > 0.0 && keep(*p))
        .take(n)
        .collect()
}

/// Pairs `(A, B)` where `A` has every operator positive and lies below every
/// nullcline, and `B` has every operator negative and lies above every
/// nullcline: orbits may alternate between such regions indefinitely.
pub fn oscillation_risk(decomp: &Decomposition) -> Vec<(usize, usize)> {
    let all = |v: &[(String, Sign)], s: Sign| !v.is_empty() && v.iter().all(|(_, x)| *x == s);
    let low: Vec<usize> = decomp
        .regions
        .iter()
        .filter(|r| all(&r.op_signs, Sign::Plus) && all(&r.sides, Sign::Minus))
        .map(|r| r.id)
        .collect();
    let high: Vec<usize> = decomp
        .regions
        .iter()
        .filter(|r| all(&r.op_signs, Sign::Minus) && all(&r.sides, Sign::Plus))
        .map(|r| r.id)
        .collect();
    low.iter().flat_map(|&a| high.iter().map(move |&b| (a, b))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxLemmaReport {
    pub samples: usize,
    /// Sampled points of the lower box whose image lands in the upper box.
    pub violations: Vec<Point>,
}

impl BoxLemmaReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Membership in the lower box: below both nullclines, `0 < X <= X*`,
/// `0 < Y <= Y*`, excluding the coexistence point.
pub fn in_lower_box(params: &CompetitionParams, p: Point) -> bool {
    let (h, k) = competition_nullclines(params);
    let e = competition_coexistence(params);
    p != e && p.x > 0.0 && p.y > 0.0 && p.x <= e.x && p.y <= e.y && h.offset(p) < 0.0 && k.offset(p) < 0.0
}

/// Membership in the upper box: above both nullclines, `X >= X*`, `Y >= Y*`,
/// excluding the coexistence point.
pub fn in_upper_box(params: &CompetitionParams, p: Point) -> bool {
    let (h, k) = competition_nullclines(params);
    let e = competition_coexistence(params);
    p != e && p.x >= e.x && p.y >= e.y && h.offset(p) > 0.0 && k.offset(p) > 0.0
}

/// Checks that no sampled point of the lower box maps into the upper box.
/// Needs an interior equilibrium, i.e. efficiencies of equal nonzero sign.
pub fn box_lemma_check(params: &CompetitionParams, n_samples: usize, seed: u64) -> Result<BoxLemmaReport> {
    let c12 = params.r1 / params.alpha1 - params.k2;
    let c21 = params.r2 / params.alpha2 - params.k1;
    if !(c12 * c21 > 0.0) {
        return Err(Error::CaseMismatch(format!(
            "box lemma needs efficiencies of equal nonzero sign, got ({c12}, {c21})"
        )));
    }
    let e = competition_coexistence(params);
    let window = BBox::new(0.0, e.x, 0.0, e.y)?;
    let map = PlanarMap::Competition(*params);
    let pts = sample_in(&window, n_samples, seed, |p| in_lower_box(params, p));
    let violations: Vec<Point> = pts
        .par_iter()
        .filter(|p| map.step(**p).map_or(false, |q| in_upper_box(params, q)))
        .copied()
        .collect();
    Ok(BoxLemmaReport { samples: pts.len(), violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub grid: usize,
    /// `(start, image)` pairs whose single step crosses every nullcline.
    pub crossings: Vec<(Point, Point)>,
    /// `(start, image)` pairs starting in a band between two nullclines whose
    /// image leaves that band.
    pub band_exits: Vec<(Point, Point)>,
}

/// Scans an `n x n` grid of cell-center starts in `window` for one-step jumps
/// across all nullclines and for one-step exits from the bands.
pub fn jump_scan(map: &PlanarMap, nullclines: &[NullclineCurve], window: &BBox, n: usize) -> JumpReport {
    let bands: Vec<NullclineRegion> =
        NullclineRegion::standard(nullclines).into_iter().filter(NullclineRegion::is_band).collect();
    let starts: Vec<Point> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx % n, idx / n);
            Point::new(
                window.x0 + (i as f64 + 0.5) * window.width() / n as f64,
                window.y0 + (j as f64 + 0.5) * window.height() / n as f64,
            )
        })
        .filter(|p| p.x > 0.0 && p.y > 0.0)
        .collect();
    let side = |n: &NullclineCurve, p: Point| Sign::of(n.offset(p), OPERATOR_BAND);
    let mut crossings = Vec::new();
    let mut band_exits = Vec::new();
    for p in starts {
        let Ok(q) = map.step(p) else { continue };
        let crossed = !nullclines.is_empty()
            && nullclines.iter().all(|n| {
                let (a, b) = (side(n, p), side(n, q));
                a != Sign::Zero && b != Sign::Zero && a != b
            });
        if crossed {
            crossings.push((p, q));
        }
        if bands.iter().any(|b| b.contains(nullclines, p, 0.0) && !b.contains(nullclines, q, 0.0)) {
            band_exits.push((p, q));
        }
    }
    JumpReport { grid: n, crossings, band_exits }
}

/// Rasterizable polylines of a decomposition's curves, exposed for plotting.
pub fn curve_polylines(map: &PlanarMap, root_curves: &[RootCurve], cfg: &TraceConfig) -> Vec<(String, Vec<Polyline>)> {
    let params = match map {
        PlanarMap::Competition(p) => Some(p),
        _ => None,
    };
    let samples = 4 * cfg.nx.max(cfg.ny);
    root_curves.iter().map(|rc| (rc.nullcline.clone(), rc.pieces(params, samples))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures::*;
    use crate::next_iterate::{closed_form_root_curves, joint_root_preimage_check, JOINT_ZERO_TOL};
    use crate::nullclines::model_nullclines;

    fn competition_decomp(p: CompetitionParams, n: usize) -> (PlanarMap, Vec<NullclineCurve>, Decomposition) {
        let map = PlanarMap::Competition(p);
        let ncs = model_nullclines(&map).unwrap();
        let cfg = TraceConfig::new(map.default_bbox()).with_grid(n, n);
        let rcs = closed_form_root_curves(&p, cfg.bbox);
        let d = decompose(&map, &ncs, &rcs, &cfg).unwrap();
        (map, ncs, d)
    }

    fn large_regions(d: &Decomposition) -> Vec<&SignedRegion> {
        d.regions.iter().filter(|r| r.area_fraction > 1e-3).collect()
    }

    #[test]
    fn case1_two_regions() {
        let (_, _, d) = competition_decomp(case1(), 200);
        let big = large_regions(&d);
        assert_eq!(big.len(), 2);
        for r in big {
            let s = r.side("h").unwrap();
            assert_eq!(r.op_sign("h"), Some(s));
            assert_eq!(r.op_sign("k"), Some(s));
        }
        assert!(oscillation_risk(&d).is_empty());
    }

    #[test]
    fn fig6b_left_band_signs() {
        let (_, _, d) = competition_decomp(fig6b(), 240);
        let e = competition_coexistence(&fig6b());
        // k < Y < h, left of the coexistence point
        let r = d.region_at(Point::new(0.3, 1.0)).unwrap();
        assert!(0.3 < e.x);
        assert_eq!(d.regions[r].op_sign("h"), Some(Sign::Minus));
        assert_eq!(d.regions[r].op_sign("k"), Some(Sign::Plus));
    }

    #[test]
    fn fig4b_band_signs_and_proof() {
        let (map, ncs, d) = competition_decomp(fig4b(), 240);
        let r = d.region_at(Point::new(0.2, 0.8)).unwrap();
        assert_eq!(d.regions[r].op_sign("h"), Some(Sign::Plus));
        assert_eq!(d.regions[r].op_sign("k"), Some(Sign::Minus));
        let band = NullclineRegion::new("R2", vec![(0, Side::Above), (1, Side::Below)]);
        let v = certify_invariance(&map, &ncs, &d, &band, &EmpiricalConfig::default());
        assert_eq!(v.verdict, Verdict::ProvenBySigns);
        assert!(v.region_ids.contains(&r));
    }

    #[test]
    fn fig6b_bands_proven_and_stress_tested() {
        let (map, ncs, d) = competition_decomp(fig6b(), 240);
        for set in NullclineRegion::standard(&ncs).into_iter().filter(|s| s.is_band()) {
            let v = certify_invariance(&map, &ncs, &d, &set, &EmpiricalConfig::default());
            assert_eq!(v.verdict, Verdict::ProvenBySigns, "{}", set.name);
            let emp = EmpiricalConfig { starts: 2000, steps: 500, seed: 3, tol: 1e-12 };
            assert!(matches!(
                empirical_invariance(&map, &ncs, &set, &d.cfg.bbox, &emp),
                Verdict::EmpiricallySupported { samples: 2000, .. }
            ));
        }
    }

    #[test]
    fn non_bands_are_never_proven() {
        let (map, ncs, d) = competition_decomp(case1(), 100);
        let below = NullclineRegion::new("below", vec![(0, Side::Below)]);
        let v = certify_invariance(&map, &ncs, &d, &below, &EmpiricalConfig::default());
        assert!(!matches!(v.verdict, Verdict::ProvenBySigns));
    }

    #[test]
    fn counterexample_orbit_leaves_the_set() {
        // orbits above both nullclines head down to the coexistence point
        let (map, ncs, d) = competition_decomp(fig6b(), 100);
        let set = NullclineRegion::new("above both", vec![(0, Side::Above), (1, Side::Above)]);
        match certify_invariance(&map, &ncs, &d, &set, &EmpiricalConfig::default()).verdict {
            Verdict::Counterexample { start, exit_step, exit_point } => {
                assert!(set.contains(&ncs, start, 0.0));
                assert!(!set.contains(&ncs, exit_point, 1e-9));
                let orbit = map.orbit(start, exit_step);
                assert_eq!(orbit.last(), exit_point);
            }
            v => panic!("expected a counterexample, got {v:?}"),
        }
    }

    #[test]
    fn partition_and_adjacency() {
        let (_, _, d) = competition_decomp(fig5b(), 120);
        let mut seen = vec![false; d.labels.len()];
        for r in &d.regions {
            for &c in &r.cells {
                assert!(!seen[c]);
                seen[c] = true;
                assert_eq!(d.labels[c], Some(r.id));
            }
            assert!(!r.adjacency.contains(&r.id));
            for &a in &r.adjacency {
                assert!(d.regions[a].adjacency.contains(&r.id));
            }
            assert_eq!(d.region_at(r.representative), Some(r.id));
        }
        let covered = seen.iter().filter(|s| **s).count() + d.band_cells;
        assert_eq!(covered, d.labels.len());
        let total: f64 = d.regions.iter().map(|r| r.area_fraction).sum();
        assert!((total + d.band_cells as f64 / d.labels.len() as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_lemmas_hold() {
        for p in [fig5b(), fig6b()] {
            let r = box_lemma_check(&p, 20_000, 0).unwrap();
            assert_eq!(r.samples, 20_000);
            assert!(r.holds());
        }
        assert!(matches!(box_lemma_check(&fig4b(), 10, 0), Err(Error::CaseMismatch(_))));
    }

    #[test]
    fn lower_box_never_hits_coexistence_without_joint_root() {
        let p = fig6b();
        let e = competition_coexistence(&p);
        let map = PlanarMap::Competition(p);
        let window = BBox::new(0.0, e.x, 0.0, e.y).unwrap();
        for q in sample_in(&window, 20_000, 1, |q| in_lower_box(&p, q)) {
            let img = map.step(q).unwrap();
            if img.dist_inf(e) < 1e-12 {
                assert!(joint_root_preimage_check(&p, q, JOINT_ZERO_TOL));
            }
        }
    }

    #[test]
    fn inconsistent_signs_are_reported() {
        // no root-curves given: the operator sign changes inside a region
        let map = PlanarMap::Competition(fig6b());
        let ncs = model_nullclines(&map).unwrap();
        let cfg = TraceConfig::new(map.default_bbox()).with_grid(64, 64);
        assert!(matches!(decompose(&map, &ncs, &[], &cfg), Err(Error::InconsistentSigns { .. })));
    }
}
