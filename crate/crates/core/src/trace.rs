//! Zero-set tracing for scalar fields on a rectangle.
//!
//! Marching squares on a uniform node grid, with every edge crossing refined
//! by bisection and the cell segments stitched into maximal chains.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Point;
use crate::numerics::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Any rectangle of positive area. Windows reaching below the axes are
    /// allowed so that curves closing outside the quadrant can be followed.
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    pub refine_tol: f64,
}

pub const MIN_GRID: usize = 16;

impl TraceConfig {
    pub fn new(bbox: BBox) -> Self {
        TraceConfig { bbox, nx: 512, ny: 512, refine_tol: 1e-10 }
    }

    pub fn with_grid(mut self, nx: usize, ny: usize) -> Self {
        self.nx = nx;
        self.ny = ny;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        if self.nx < MIN_GRID || self.ny < MIN_GRID {
            return Err(Error::InvalidConfig(format!(
                "grid {}x{} below the {MIN_GRID}x{MIN_GRID} minimum",
                self.nx, self.ny
            )));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("refine_tol {} must be positive", self.refine_tol)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.bbox.width() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.bbox.height() / self.ny as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.bbox.x0 + i as f64 * self.dx(), self.bbox.y0 + j as f64 * self.dy())
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.bbox.x0 + (i as f64 + 0.5) * self.dx(),
            self.bbox.y0 + (j as f64 + 0.5) * self.dy(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
    /// Closed chains repeat their first point at the end.
    pub closed: bool,
}

impl Polyline {
    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceResult {
    pub polylines: Vec<Polyline>,
    /// Cells skipped because a corner value was not finite.
    pub masked_cells: usize,
}

impl TraceResult {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.polylines.iter().flat_map(|p| p.points.iter().copied())
    }
}

/// How the four crossings of an alternating-sign cell are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleChoice {
    /// Each negative corner gets cut off by its own segment.
    SeparateNegatives,
    /// Each positive corner gets cut off by its own segment.
    SeparatePositives,
}

/// Resolves an ambiguous cell from the field value at its center. A center
/// within `tol` of zero falls back to the mean of the four quarter-cell
/// centers, and to `SeparateNegatives` if that is still inside the band.
pub fn saddle_disambiguation(center: f64, quarter_centers: impl FnOnce() -> [f64; 4], tol: f64) -> SaddleChoice {
    let decide = |v: f64| {
        if v > tol {
            Some(SaddleChoice::SeparateNegatives)
        } else if v < -tol {
            Some(SaddleChoice::SeparatePositives)
        } else {
            None
        }
    };
    decide(center)
        .or_else(|| {
            let q = quarter_centers();
            decide(0.25 * (q[0] + q[1] + q[2] + q[3]))
        })
        .unwrap_or(SaddleChoice::SeparateNegatives)
}

// Cell corner order: 0 bottom-left, 1 bottom-right, 2 top-right, 3 top-left.
// Cell edge order: 0 bottom, 1 right, 2 top, 3 left.
const CORNER_EDGES: [(usize, usize); 4] = [(0, 3), (0, 1), (1, 2), (2, 3)];
const EDGE_CORNERS: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 2), (0, 3)];

struct Grid<'a, F> {
    f: &'a F,
    cfg: &'a TraceConfig,
    values: Vec<f64>,
}

impl<'a, F: Fn(Point) -> f64 + Sync> Grid<'a, F> {
    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.cfg.nx + 1) + i]
    }

    fn n_horizontal(&self) -> usize {
        (self.cfg.ny + 1) * self.cfg.nx
    }

    fn n_edges(&self) -> usize {
        self.n_horizontal() + self.cfg.ny * (self.cfg.nx + 1)
    }

    /// Node endpoints of a global edge id.
    fn edge_nodes(&self, id: usize) -> ((usize, usize), (usize, usize)) {
        let nx = self.cfg.nx;
        let nh = self.n_horizontal();
        if id < nh {
            let (i, j) = (id % nx, id / nx);
            ((i, j), (i + 1, j))
        } else {
            let k = id - nh;
            let (i, j) = (k % (nx + 1), k / (nx + 1));
            ((i, j), (i, j + 1))
        }
    }

    fn cell_edge_ids(&self, i: usize, j: usize) -> [usize; 4] {
        let nx = self.cfg.nx;
        let nh = self.n_horizontal();
        [
            j * nx + i,
            nh + j * (nx + 1) + i + 1,
            (j + 1) * nx + i,
            nh + j * (nx + 1) + i,
        ]
    }

    fn crossing(&self, id: usize) -> Option<Point> {
        let (a, b) = self.edge_nodes(id);
        let (va, vb) = (self.value(a.0, a.1), self.value(b.0, b.1));
        if !(va.is_finite() && vb.is_finite()) || (va > 0.0) == (vb > 0.0) {
            return None;
        }
        let (pa, pb) = (self.cfg.node(a.0, a.1), self.cfg.node(b.0, b.1));
        if va == 0.0 {
            return Some(pa);
        }
        if vb == 0.0 {
            return Some(pb);
        }
        Some(refine_edge(self.f, pa, pb, va, self.cfg.refine_tol))
    }

    fn cell_segments(&self, i: usize, j: usize) -> CellOutcome {
        let v = [self.value(i, j), self.value(i + 1, j), self.value(i + 1, j + 1), self.value(i, j + 1)];
        if v.iter().any(|x| !x.is_finite()) {
            return CellOutcome::Masked;
        }
        let pos = v.map(|x| x > 0.0);
        let ids = self.cell_edge_ids(i, j);
        let crossed: Vec<usize> = (0..4).filter(|&e| pos[EDGE_CORNERS[e].0] != pos[EDGE_CORNERS[e].1]).collect();
        match crossed.len() {
            0 => CellOutcome::Segments(Vec::new()),
            2 => CellOutcome::Segments(vec![(ids[crossed[0]], ids[crossed[1]])]),
            4 => {
                let center = (self.f)(self.cfg.cell_center(i, j));
                let quarters = || {
                    let c = self.cfg.cell_center(i, j);
                    let (qx, qy) = (0.25 * self.cfg.dx(), 0.25 * self.cfg.dy());
                    [
                        (self.f)(Point::new(c.x - qx, c.y - qy)),
                        (self.f)(Point::new(c.x + qx, c.y - qy)),
                        (self.f)(Point::new(c.x + qx, c.y + qy)),
                        (self.f)(Point::new(c.x - qx, c.y + qy)),
                    ]
                    .map(|x| if x.is_finite() { x } else { 0.0 })
                };
                let center = if center.is_finite() { center } else { 0.0 };
                let isolate_positive = match saddle_disambiguation(center, quarters, self.cfg.refine_tol) {
                    SaddleChoice::SeparateNegatives => false,
                    SaddleChoice::SeparatePositives => true,
                };
                let segs = (0..4)
                    .filter(|&c| pos[c] == isolate_positive)
                    .map(|c| (ids[CORNER_EDGES[c].0], ids[CORNER_EDGES[c].1]))
                    .collect();
                CellOutcome::Segments(segs)
            }
            _ => unreachable!("a square has an even number of sign changes"),
        }
    }
}

enum CellOutcome {
    Masked,
    Segments(Vec<(usize, usize)>),
}

/// Bisection along the segment `pa -> pb`, stopping once `|f| <= tol` or the
/// bracket collapses to rounding level.
fn refine_edge<F: Fn(Point) -> f64>(f: &F, pa: Point, pb: Point, va: f64, tol: f64) -> Point {
    let at = |t: f64| Point::new(pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let lo_pos = va > 0.0;
    let mut best = at(0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        best = at(mid);
        let vm = f(best);
        if !vm.is_finite() || vm.abs() <= tol || hi - lo < 1e-17 {
            break;
        }
        if (vm > 0.0) == lo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// Traces the zero set of `f` over `cfg.bbox`. An empty result is legal.
pub fn trace_zero_set<F: Fn(Point) -> f64 + Sync>(f: &F, cfg: &TraceConfig) -> Result<TraceResult> {
    cfg.validate()?;
    let (nx, ny) = (cfg.nx, cfg.ny);
    let values: Vec<f64> = (0..=ny)
        .into_par_iter()
        .flat_map_iter(|j| (0..=nx).map(move |i| (i, j)))
        .map(|(i, j)| f(cfg.node(i, j)))
        .collect();
    let grid = Grid { f, cfg, values };

    let crossings: Vec<Option<Point>> = (0..grid.n_edges()).into_par_iter().map(|id| grid.crossing(id)).collect();

    let outcomes: Vec<CellOutcome> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| grid.cell_segments(i, j))
        .collect();
    let mut masked_cells = 0;
    let mut segments = Vec::new();
    for o in outcomes {
        match o {
            CellOutcome::Masked => masked_cells += 1,
            CellOutcome::Segments(s) => segments.extend(s),
        }
    }
    let polylines = assemble_chains(&segments, &crossings);
    Ok(TraceResult { polylines, masked_cells })
}

/// Stitches edge-pair segments into maximal chains: open chains start from
/// edges used once, the remaining segments form loops.
fn assemble_chains(segments: &[(usize, usize)], crossings: &[Option<Point>]) -> Vec<Polyline> {
    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();

    let walk = |start_edge: usize, first_seg: usize, used: &mut Vec<bool>| -> Vec<usize> {
        let mut edges = vec![start_edge];
        let mut edge = start_edge;
        let mut seg = first_seg;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            edge = if a == edge { b } else { a };
            edges.push(edge);
            match by_edge[&edge].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        edges
    };

    let mut ends: Vec<usize> = by_edge.iter().filter(|(_, s)| s.len() == 1).map(|(&e, _)| e).collect();
    ends.sort_unstable();
    for e in ends {
        let seg = by_edge[&e][0];
        if used[seg] {
            continue;
        }
        let edges = walk(e, seg, &mut used);
        chains.push((edges, false));
    }
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let start = segments[s].0;
        let edges = walk(start, s, &mut used);
        let closed = edges.last() == edges.first();
        chains.push((edges, closed));
    }

    chains
        .into_iter()
        .map(|(edges, closed)| {
            let mut points: Vec<Point> = Vec::with_capacity(edges.len());
            for e in edges {
                let p = crossings[e].expect("segment edges carry a crossing");
                if points.last() != Some(&p) {
                    points.push(p);
                }
            }
            if closed && points.len() > 1 && points.first() != points.last() {
                points.push(points[0]);
            }
            Polyline { points, closed }
        })
        .filter(|p| p.points.len() > 1)
        .collect()
}

fn segment_intersection(p1: Point, p2: Point, q1: Point, q2: Point) -> Option<Point> {
    let r = (p2.x - p1.x, p2.y - p1.y);
    let s = (q2.x - q1.x, q2.y - q1.y);
    let den = r.0 * s.1 - r.1 * s.0;
    if den == 0.0 {
        return None;
    }
    let w = (q1.x - p1.x, q1.y - p1.y);
    let t = (w.0 * s.1 - w.1 * s.0) / den;
    let u = (w.0 * r.1 - w.1 * r.0) / den;
    let eps = 1e-12;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        Some(Point::new(p1.x + t * r.0, p1.y + t * r.1))
    } else {
        None
    }
}

/// All crossings between two sets of polylines, deduplicated to `1e-9`.
pub fn polyline_intersections(a: &[Polyline], b: &[Polyline]) -> Vec<Point> {
    let segs_a: Vec<(Point, Point)> = a.iter().flat_map(|p| p.segments()).collect();
    let segs_b: Vec<(Point, Point)> = b.iter().flat_map(|p| p.segments()).collect();
    if segs_a.is_empty() || segs_b.is_empty() {
        return Vec::new();
    }
    let all = segs_a.iter().chain(segs_b.iter()).flat_map(|&(p, q)| [p, q]);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let cells = ((segs_a.len() + segs_b.len()) as f64).sqrt().ceil().max(1.0) as usize;
    let cw = ((x1 - x0) / cells as f64).max(f64::MIN_POSITIVE);
    let ch = ((y1 - y0) / cells as f64).max(f64::MIN_POSITIVE);
    let bucket = |v: f64, lo: f64, w: f64| (((v - lo) / w).floor().max(0.0) as usize).min(cells - 1);
    let span = |p: Point, q: Point| {
        (
            bucket(p.x.min(q.x), x0, cw)..=bucket(p.x.max(q.x), x0, cw),
            bucket(p.y.min(q.y), y0, ch)..=bucket(p.y.max(q.y), y0, ch),
        )
    };
    let mut index: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, &(p, q)) in segs_b.iter().enumerate() {
        let (xs, ys) = span(p, q);
        for bx in xs {
            for by in ys.clone() {
                index.entry((bx, by)).or_default().push(k);
            }
        }
    }
    let mut out: Vec<Point> = Vec::new();
    for &(p, q) in &segs_a {
        let (xs, ys) = span(p, q);
        for bx in xs {
            for by in ys.clone() {
                for &k in index.get(&(bx, by)).into_iter().flatten() {
                    let (r, s) = segs_b[k];
                    if let Some(hit) = segment_intersection(p, q, r, s) {
                        if !out.iter().any(|o| o.dist(hit) < 1e-9) {
                            out.push(hit);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Directed Hausdorff distance from the vertices of `from` to the segments of `to`.
pub fn directed_hausdorff(from: &[Polyline], to: &[Polyline]) -> f64 {
    let segs: Vec<(Point, Point)> = to.iter().flat_map(|p| p.segments()).collect();
    from.par_iter()
        .flat_map_iter(|p| p.points.iter().copied())
        .map(|v| {
            segs.iter()
                .map(|&(a, b)| crate::nullclines::segment_distance(v, a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}
