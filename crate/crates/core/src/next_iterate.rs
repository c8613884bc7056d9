//! Next-iterate operators and competition root-curves.
//!
//! For a nullcline `Y = l(X)` the operator is `G - l(F)`; for `X = k(Y)` it
//! is `F - k(G)`. Positive values put the image of a point above (resp. to
//! the right of) the nullcline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CompetitionParams, PlanarMap, Point};
use crate::numerics::{bisect, BBox};
use crate::nullclines::NullclineCurve;
use crate::trace::{trace_zero_set, Polyline, TraceConfig};

#[derive(Debug, Clone, Copy)]
pub struct NextIterateOperator<'a> {
    pub map: &'a PlanarMap,
    pub nullcline: &'a NullclineCurve,
}

impl<'a> NextIterateOperator<'a> {
    pub fn new(map: &'a PlanarMap, nullcline: &'a NullclineCurve) -> Self {
        NextIterateOperator { map, nullcline }
    }

    pub fn eval(&self, p: Point) -> Result<f64> {
        let q = self.map.step(p)?;
        Ok(self.nullcline.offset(q))
    }

    /// Like [`eval`](Self::eval) but returns NaN instead of an error, for
    /// grid sweeps that mask bad cells.
    pub fn eval_or_nan(&self, p: Point) -> f64 {
        self.eval(p).unwrap_or(f64::NAN)
    }
}

/// Quadratic forms of the competition numerators `N_h`, `N_k`.
///
/// `N_h = a0(X) + a1(X) Y + a2 Y^2 = A0(Y) + A1(Y) X + A2 X^2`, and the same
/// for `N_k` with `b`/`B`. The operators are
/// `L_h = N_h / (alpha1 D1 D2)`, `L_k = N_k / (r2 D1 D2)` with
/// `D1 = K1 + r1 X + alpha1 K1 Y`, `D2 = K2 + alpha2 K2 X + r2 Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticRootCoeffs {
    pub params: CompetitionParams,
}

pub fn competition_quadratics(params: &CompetitionParams) -> QuadraticRootCoeffs {
    QuadraticRootCoeffs { params: *params }
}

impl QuadraticRootCoeffs {
    pub fn a0(&self, x: f64) -> f64 {
        let p = &self.params;
        -p.r1 * p.k2 * (p.k1 - x) * (1.0 + p.alpha2 * x)
    }

    pub fn a1(&self, x: f64) -> f64 {
        let p = &self.params;
        -p.r1 * p.r2 * (p.k1 - x)
            - p.alpha1 * p.k2 * (-p.r1 * (1.0 + p.r2) * x + p.k1 * (-1.0 + p.r1 - p.r2 + p.alpha2 * p.r1 * x))
    }

    pub fn a2(&self) -> f64 {
        let p = &self.params;
        p.alpha1 * p.k1 * (p.alpha1 * p.k2 * (1.0 + p.r2) - p.r1 * p.r2)
    }

    pub fn big_a0(&self, y: f64) -> f64 {
        let p = &self.params;
        p.k1 * (1.0 + p.alpha1 * y) * (-p.r1 * p.r2 * y + p.k2 * (-p.r1 + p.alpha1 * (1.0 + p.r2) * y))
    }

    pub fn big_a1(&self, y: f64) -> f64 {
        let p = &self.params;
        p.r1 * (p.r2 * y + p.k2 * (1.0 + p.alpha1 * (1.0 + p.r2) * y - p.alpha2 * (p.k1 + p.alpha1 * p.k1 * y)))
    }

    pub fn big_a2(&self) -> f64 {
        let p = &self.params;
        p.alpha2 * p.k2 * p.r1
    }

    pub fn b0(&self, x: f64) -> f64 {
        let p = &self.params;
        p.k2 * p.k2 * (1.0 + p.alpha2 * x) * (p.k1 * (p.alpha2 * (1.0 + p.r1) * x - p.r2) - p.r1 * p.r2 * x)
    }

    pub fn b1(&self, x: f64) -> f64 {
        let p = &self.params;
        p.k2 * p.r2 * (p.r1 * x + p.k1 * (1.0 + p.alpha2 * (1.0 + p.r1) * x - p.alpha1 * (p.k2 + p.alpha2 * p.k2 * x)))
    }

    pub fn b2(&self) -> f64 {
        let p = &self.params;
        p.alpha1 * p.r2 * p.k1 * p.k2
    }

    pub fn big_b0(&self, y: f64) -> f64 {
        let p = &self.params;
        -p.k1 * p.k2 * p.r2 * (p.k2 - y) * (1.0 + p.alpha1 * y)
    }

    pub fn big_b1(&self, y: f64) -> f64 {
        let p = &self.params;
        p.k2 * (p.r1 * p.r2 * (y - p.k2)
            + p.alpha2 * p.k1 * ((1.0 + p.r1) * p.r2 * y + p.k2 * (1.0 + p.r1 - p.r2 * (1.0 + p.alpha1 * y))))
    }

    pub fn big_b2(&self) -> f64 {
        let p = &self.params;
        p.alpha2 * p.k2 * p.k2 * (p.alpha2 * p.k1 * (1.0 + p.r1) - p.r1 * p.r2)
    }

    fn denominators(&self, pt: Point) -> f64 {
        let p = &self.params;
        let d1 = p.k1 + p.r1 * pt.x + p.alpha1 * p.k1 * pt.y;
        let d2 = p.k2 + p.alpha2 * p.k2 * pt.x + p.r2 * pt.y;
        d1 * d2
    }

    /// `N_h` from the Y-quadratic.
    pub fn n_h(&self, pt: Point) -> f64 {
        self.a0(pt.x) + self.a1(pt.x) * pt.y + self.a2() * pt.y * pt.y
    }

    /// `N_h` from the X-quadratic.
    pub fn n_h_in_x(&self, pt: Point) -> f64 {
        self.big_a0(pt.y) + self.big_a1(pt.y) * pt.x + self.big_a2() * pt.x * pt.x
    }

    pub fn n_k(&self, pt: Point) -> f64 {
        self.b0(pt.x) + self.b1(pt.x) * pt.y + self.b2() * pt.y * pt.y
    }

    pub fn n_k_in_x(&self, pt: Point) -> f64 {
        self.big_b0(pt.y) + self.big_b1(pt.y) * pt.x + self.big_b2() * pt.x * pt.x
    }

    /// `L_h` through the quotient form.
    pub fn rational_lh(&self, pt: Point) -> f64 {
        self.n_h(pt) / (self.params.alpha1 * self.denominators(pt))
    }

    /// `L_k` through the quotient form.
    pub fn rational_lk(&self, pt: Point) -> f64 {
        self.n_k(pt) / (self.params.r2 * self.denominators(pt))
    }

    /// Coefficients `(c0(t), c1(t), c2)` of the quadratic solved by `branch`.
    fn quadratic(&self, op: OperatorId, over: Axis, t: f64) -> (f64, f64, f64) {
        match (op, over) {
            (OperatorId::H, Axis::X) => (self.a0(t), self.a1(t), self.a2()),
            (OperatorId::H, Axis::Y) => (self.big_a0(t), self.big_a1(t), self.big_a2()),
            (OperatorId::K, Axis::X) => (self.b0(t), self.b1(t), self.b2()),
            (OperatorId::K, Axis::Y) => (self.big_b0(t), self.big_b1(t), self.big_b2()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorId {
    /// Operator of the X-equation nullcline `h`.
    H,
    /// Operator of the Y-equation nullcline `k`.
    K,
}

impl OperatorId {
    pub fn label(&self) -> &'static str {
        match self {
            OperatorId::H => "h",
            OperatorId::K => "k",
        }
    }
}

/// Independent variable of a branch: `X` gives `Y = r(X)`, `Y` gives `X = R(Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// One of the eight closed-form branches. `root` 1 takes `+sqrt(disc)`,
/// root 2 takes `-sqrt(disc)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchId {
    pub op: OperatorId,
    pub over: Axis,
    pub root: u8,
}

impl BranchId {
    pub const ALL: [BranchId; 8] = [
        BranchId { op: OperatorId::H, over: Axis::X, root: 1 },
        BranchId { op: OperatorId::H, over: Axis::X, root: 2 },
        BranchId { op: OperatorId::H, over: Axis::Y, root: 1 },
        BranchId { op: OperatorId::H, over: Axis::Y, root: 2 },
        BranchId { op: OperatorId::K, over: Axis::X, root: 1 },
        BranchId { op: OperatorId::K, over: Axis::X, root: 2 },
        BranchId { op: OperatorId::K, over: Axis::Y, root: 1 },
        BranchId { op: OperatorId::K, over: Axis::Y, root: 2 },
    ];

    /// Short name: `rh1`, `Rk2`, ...
    pub fn name(&self) -> String {
        let head = match self.over {
            Axis::X => "r",
            Axis::Y => "R",
        };
        format!("{head}{}{}", self.op.label(), self.root)
    }

    /// Value of the branch at parameter `t`.
    ///
    /// A vanishing leading coefficient leaves the linear root `-c0/c1` as
    /// branch 1; branch 2 is then undefined.
    pub fn eval(&self, q: &QuadraticRootCoeffs, t: f64) -> Result<f64> {
        let (c0, c1, c2) = q.quadratic(self.op, self.over, t);
        if c2 == 0.0 {
            if self.root == 1 && c1 != 0.0 {
                return Ok(-c0 / c1);
            }
            return Err(Error::DegenerateBranch { at: t });
        }
        let mut disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            let clip = DISC_CLIP * (c1 * c1 + (4.0 * c2 * c0).abs()).max(1.0);
            if disc > -clip {
                disc = 0.0;
            } else {
                return Err(Error::DiscriminantNegative { at: t });
            }
        }
        let s = disc.sqrt();
        // cancellation-free pair: q/c2 and c0/q
        let qq = -0.5 * (c1 + if c1 >= 0.0 { s } else { -s });
        let (plus, minus) = if qq == 0.0 {
            (0.0, 0.0)
        } else if c1 >= 0.0 {
            (c0 / qq, qq / c2)
        } else {
            (qq / c2, c0 / qq)
        };
        Ok(if self.root == 1 { plus } else { minus })
    }

    pub fn point(&self, q: &QuadraticRootCoeffs, t: f64) -> Result<Point> {
        let v = self.eval(q, t)?;
        Ok(match self.over {
            Axis::X => Point::new(t, v),
            Axis::Y => Point::new(v, t),
        })
    }
}

/// Discriminants in `(-DISC_CLIP * scale, 0)` count as tangencies.
pub const DISC_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum RootCurveKind {
    ClosedForm(BranchId),
    Traced(Polyline),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootCurve {
    pub kind: RootCurveKind,
    /// Label of the nullcline whose operator vanishes on this curve.
    pub nullcline: String,
    pub window: BBox,
    /// False when the branch has no defined value inside the window.
    pub in_window: bool,
    /// Abscissae (out of the probe samples) where the branch was undefined.
    pub undefined_samples: usize,
}

const PROBE_SAMPLES: usize = 401;

impl RootCurve {
    /// Polyline pieces of the curve inside its window. Closed-form branches
    /// are sampled at `n` parameters across the window.
    pub fn pieces(&self, params: Option<&CompetitionParams>, n: usize) -> Vec<Polyline> {
        match &self.kind {
            RootCurveKind::Traced(p) => vec![p.clone()],
            RootCurveKind::ClosedForm(b) => {
                let q = competition_quadratics(params.expect("closed-form curves need their parameters"));
                sample_branch(b, &q, &self.window, n)
            }
        }
    }
}

fn branch_range(b: &BranchId, w: &BBox) -> (f64, f64) {
    match b.over {
        Axis::X => (w.x0, w.x1),
        Axis::Y => (w.y0, w.y1),
    }
}

/// Samples a branch over its window axis and splits it into runs of defined,
/// in-window points.
pub fn sample_branch(b: &BranchId, q: &QuadraticRootCoeffs, w: &BBox, n: usize) -> Vec<Polyline> {
    let (lo, hi) = branch_range(b, w);
    let n = n.max(2);
    let mut out = Vec::new();
    let mut run: Vec<Point> = Vec::new();
    for i in 0..n {
        let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        match b.point(q, t) {
            Ok(p) if p.is_finite() && w.contains(p) => run.push(p),
            _ => {
                if run.len() > 1 {
                    out.push(Polyline { points: std::mem::take(&mut run), closed: false });
                }
                run.clear();
            }
        }
    }
    if run.len() > 1 {
        out.push(Polyline { points: run, closed: false });
    }
    out
}

/// The eight closed-form branches over `window`, each flagged by whether it
/// has any defined value inside the window. Nothing is dropped.
pub fn closed_form_root_curves(params: &CompetitionParams, window: BBox) -> Vec<RootCurve> {
    let q = competition_quadratics(params);
    BranchId::ALL
        .iter()
        .map(|b| {
            let (lo, hi) = branch_range(b, &window);
            let mut undefined = 0;
            let mut inside = false;
            for i in 0..PROBE_SAMPLES {
                let t = lo + (hi - lo) * i as f64 / (PROBE_SAMPLES - 1) as f64;
                match b.point(&q, t) {
                    Ok(p) => inside |= p.is_finite() && window.contains(p),
                    Err(_) => undefined += 1,
                }
            }
            RootCurve {
                kind: RootCurveKind::ClosedForm(*b),
                nullcline: b.op.label().to_string(),
                window,
                in_window: inside,
                undefined_samples: undefined,
            }
        })
        .collect()
}

/// Root-curves of every nullcline's operator, traced over `cfg.bbox`. One
/// curve per traced chain; also returns the total number of masked cells.
pub fn traced_root_curves(
    map: &PlanarMap,
    nullclines: &[NullclineCurve],
    cfg: &TraceConfig,
) -> Result<(Vec<RootCurve>, usize)> {
    let mut curves = Vec::new();
    let mut masked = 0;
    for n in nullclines {
        let op = NextIterateOperator::new(map, n);
        let t = trace_zero_set(&|p: Point| op.eval_or_nan(p), cfg)?;
        masked += t.masked_cells;
        curves.extend(t.polylines.into_iter().map(|pl| RootCurve {
            kind: RootCurveKind::Traced(pl),
            nullcline: n.label.clone(),
            window: cfg.bbox,
            in_window: true,
            undefined_samples: 0,
        }));
    }
    Ok((curves, masked))
}

/// Zeros of the operator restricted to its own nullcline, over the parameter
/// interval `window`, found by a scan at `resolution` with bisection on every
/// sign change. Samples whose value is below `1e-12` count as zeros; when the
/// operator vanishes along most of the scan every sample is returned.
pub fn root_set_nullcline_intersections(
    op: &NextIterateOperator<'_>,
    window: (f64, f64),
    resolution: f64,
) -> Vec<Point> {
    let (t0, t1) = window;
    let n = (((t1 - t0) / resolution).ceil() as usize).max(1);
    let ts: Vec<f64> = (0..=n).map(|i| if i == n { t1 } else { t0 + i as f64 * resolution }).collect();
    let g = |t: f64| op.eval_or_nan(op.nullcline.point_at(t));
    let vals: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let zero = |v: f64| v.abs() <= 1e-12;

    let n_zero = vals.iter().filter(|v| zero(**v)).count();
    if 2 * n_zero > vals.len() {
        return ts.iter().zip(&vals).filter(|(_, v)| zero(**v)).map(|(t, _)| op.nullcline.point_at(*t)).collect();
    }

    let mut roots: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < ts.len() {
        if zero(vals[i]) {
            // take the smallest sample of a run of near-zero samples
            let mut best = i;
            while i + 1 < ts.len() && zero(vals[i + 1]) {
                i += 1;
                if vals[i].abs() < vals[best].abs() {
                    best = i;
                }
            }
            roots.push(ts[best]);
        } else if i + 1 < ts.len() && !zero(vals[i + 1]) && vals[i].is_finite() && vals[i + 1].is_finite() && vals[i].signum() != vals[i + 1].signum() {
            if let Ok(t) = bisect(g, ts[i], ts[i + 1], 1e-15 * (1.0 + ts[i].abs())) {
                roots.push(t);
            }
        }
        i += 1;
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < resolution);
    roots.into_iter().map(|t| op.nullcline.point_at(t)).collect()
}

/// Joint zero of both competition operators at `p` within `tol`.
pub fn joint_root_preimage_check(params: &CompetitionParams, p: Point, tol: f64) -> bool {
    let q = competition_quadratics(params);
    q.rational_lh(p).abs() < tol && q.rational_lk(p).abs() < tol
}

/// Default tolerance for joint zeros.
pub const JOINT_ZERO_TOL: f64 = 1e-8;
