//! Analysis pipeline shared by `analyze`, `portrait` and `verify`.

use std::collections::BTreeMap;

use augmap_core::competition::{attribute_orbits, classify, Attractor, ConvergenceStats};
use augmap_core::next_iterate::{closed_form_root_curves, traced_root_curves, RootCurve, RootCurveKind};
use augmap_core::nullclines::{
    equilibria, model_nullclines, stability, Continuum, EquilibriumKind, EquilibriumSet, NullclineCurve, Sign,
    Stability,
};
use augmap_core::numerics::low_discrepancy_points;
use augmap_core::regions::{
    certify_invariance, decompose, oscillation_risk, Decomposition, EmpiricalConfig, InvarianceVerdict,
    NullclineRegion,
};
use augmap_core::trace::{Polyline, TraceConfig};
use augmap_core::{BBox, PlanarMap, Point};
use serde::Serialize;
use serde_json::Value;

use crate::config::Config;

/// Everything computed for one configuration.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub equilibria: EquilibriumSet,
    pub names: Vec<String>,
    pub stabilities: Vec<Option<(Stability, [f64; 2])>>,
    pub nullclines: Vec<NullclineCurve>,
    pub root_curves: Vec<RootCurve>,
    /// Polyline pieces per root curve, with the label of its nullcline.
    pub curve_pieces: Vec<(String, Vec<Polyline>)>,
    pub decomposition: Option<Decomposition>,
    pub invariance: Vec<InvarianceVerdict>,
    pub oscillation_risk: Vec<(usize, usize)>,
    pub errors: Vec<String>,
}

impl Analysis {
    /// Interior equilibrium that is linearly attracting, if any.
    pub fn attracting_interior(&self) -> Option<Point> {
        self.equilibria
            .isolated
            .iter()
            .zip(&self.stabilities)
            .find(|(e, s)| e.kind == EquilibriumKind::Interior && matches!(s, Some((Stability::Attracting, _))))
            .map(|(e, _)| e.point)
    }

    /// Attractors used to attribute orbits: the predicted limits for
    /// competition maps, the linearly attracting equilibria otherwise.
    pub fn attractors(&self, map: &PlanarMap) -> Vec<Attractor> {
        if let PlanarMap::Competition(p) = map {
            return classify(p).limits;
        }
        self.equilibria
            .isolated
            .iter()
            .zip(&self.stabilities)
            .zip(&self.names)
            .filter(|((_, s), _)| matches!(s, Some((Stability::Attracting, _))))
            .map(|((e, _), n)| Attractor::point(n, e.point))
            .collect()
    }
}

/// Names equilibria `E0` (origin), `E1` (X-axis), `E2` (Y-axis) and `E*`
/// (interior), with a numeric suffix when a kind repeats.
fn equilibrium_names(set: &EquilibriumSet) -> Vec<String> {
    let base = |k: EquilibriumKind| match k {
        EquilibriumKind::Origin => "E0",
        EquilibriumKind::BoundaryX => "E1",
        EquilibriumKind::BoundaryY => "E2",
        EquilibriumKind::Interior => "E*",
    };
    let kinds: Vec<EquilibriumKind> = set.isolated.iter().map(|e| e.kind).collect();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    kinds
        .iter()
        .map(|&k| {
            let b = base(k);
            let total = kinds.iter().filter(|&&o| o == k).count();
            let i = seen.entry(b).or_insert(0);
            *i += 1;
            if total > 1 {
                format!("{b}_{i}")
            } else {
                b.to_string()
            }
        })
        .collect()
}

pub fn run(cfg: &Config) -> Analysis {
    let map = &cfg.map;
    let mut errors = Vec::new();
    let eq = equilibria(map);
    errors.extend(eq.failures.iter().map(|e| e.to_string()));
    let names = equilibrium_names(&eq);
    let stabilities = eq
        .isolated
        .iter()
        .map(|e| match stability(map, e.point) {
            Ok(s) => Some(s),
            Err(err) => {
                errors.push(format!("stability at ({}, {}): {err}", e.point.x, e.point.y));
                None
            }
        })
        .collect();

    let trace_cfg = TraceConfig::new(cfg.bbox).with_grid(cfg.grid, cfg.grid);
    let nullclines = match model_nullclines(map) {
        Ok(n) => n,
        Err(e) => {
            errors.push(e.to_string());
            Vec::new()
        }
    };
    let root_curves = match map {
        PlanarMap::Competition(p) => closed_form_root_curves(p, cfg.bbox),
        _ if nullclines.is_empty() => Vec::new(),
        _ => match traced_root_curves(map, &nullclines, &trace_cfg) {
            Ok((rcs, masked)) => {
                if masked > 0 {
                    errors.push(format!("{masked} grid cells masked while tracing root-curves"));
                }
                rcs
            }
            Err(e) => {
                errors.push(e.to_string());
                Vec::new()
            }
        },
    };
    let params = match map {
        PlanarMap::Competition(p) => Some(p),
        _ => None,
    };
    let samples = 4 * cfg.grid;
    let curve_pieces = root_curves.iter().map(|rc| (rc.nullcline.clone(), rc.pieces(params, samples))).collect();

    let mut decomposition = None;
    let mut invariance = Vec::new();
    let mut risk = Vec::new();
    if !nullclines.is_empty() {
        match decompose(map, &nullclines, &root_curves, &trace_cfg) {
            Ok(d) => {
                let emp = EmpiricalConfig { seed: cfg.seed, ..EmpiricalConfig::default() };
                invariance = NullclineRegion::standard(&nullclines)
                    .iter()
                    .map(|set| certify_invariance(map, &nullclines, &d, set, &emp))
                    .collect();
                risk = oscillation_risk(&d);
                decomposition = Some(d);
            }
            Err(e) => errors.push(e.to_string()),
        }
    }

    Analysis {
        equilibria: eq,
        names,
        stabilities,
        nullclines,
        root_curves,
        curve_pieces,
        decomposition,
        invariance,
        oscillation_risk: risk,
        errors,
    }
}

/// Orbit batch from the configured start window toward the analysis attractors.
pub fn convergence(cfg: &Config, analysis: &Analysis) -> ConvergenceStats {
    let o = cfg.orbit_settings();
    let starts = low_discrepancy_points(&cfg.start_window(), o.n, cfg.seed);
    attribute_orbits(&cfg.map, &analysis.attractors(&cfg.map), &starts, o.steps, o.tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumEntry {
    pub name: String,
    pub point: [f64; 2],
    pub kind: EquilibriumKind,
    pub stability: Option<Stability>,
    /// Eigenvalue moduli of the Jacobian, largest first.
    pub moduli: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootCurveEntry {
    pub nullcline: String,
    /// Closed-form branch name, absent for traced curves.
    pub branch: Option<String>,
    pub in_window: bool,
    pub pieces: usize,
    pub vertices: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionEntry {
    pub id: usize,
    pub cells: usize,
    pub area_fraction: f64,
    pub representative: [f64; 2],
    pub direction: [Sign; 2],
    pub op_signs: BTreeMap<String, Sign>,
    pub sides: BTreeMap<String, Sign>,
    pub adjacency: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub model: String,
    pub params: Value,
    pub bbox: BBox,
    pub grid: usize,
    pub seed: u64,
    pub equilibria: Vec<EquilibriumEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuum: Option<Continuum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attractor: Option<[f64; 2]>,
    pub nullclines: Vec<NullclineCurve>,
    pub root_curves: Vec<RootCurveEntry>,
    pub regions: Vec<RegionEntry>,
    pub invariance: Vec<InvarianceVerdict>,
    pub oscillation_risk: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceStats>,
    pub errors: Vec<String>,
}

pub fn report(cfg: &Config, analysis: &Analysis, with_convergence: bool) -> AnalysisReport {
    let equilibria = analysis
        .equilibria
        .isolated
        .iter()
        .zip(&analysis.stabilities)
        .zip(&analysis.names)
        .map(|((e, s), name)| EquilibriumEntry {
            name: name.clone(),
            point: [e.point.x, e.point.y],
            kind: e.kind,
            stability: s.map(|s| s.0),
            moduli: s.map(|s| s.1),
        })
        .collect();
    let root_curves = analysis
        .root_curves
        .iter()
        .zip(&analysis.curve_pieces)
        .map(|(rc, (_, pieces))| RootCurveEntry {
            nullcline: rc.nullcline.clone(),
            branch: match &rc.kind {
                RootCurveKind::ClosedForm(b) => Some(b.name()),
                RootCurveKind::Traced(_) => None,
            },
            in_window: rc.in_window,
            pieces: pieces.len(),
            vertices: pieces.iter().map(|p| p.points.len()).sum(),
        })
        .collect();
    let regions = analysis
        .decomposition
        .iter()
        .flat_map(|d| &d.regions)
        .map(|r| RegionEntry {
            id: r.id,
            cells: r.cells.len(),
            area_fraction: r.area_fraction,
            representative: [r.representative.x, r.representative.y],
            direction: [r.direction.dx, r.direction.dy],
            op_signs: r.op_signs.iter().cloned().collect(),
            sides: r.sides.iter().cloned().collect(),
            adjacency: r.adjacency.clone(),
        })
        .collect();
    let case = match &cfg.map {
        PlanarMap::Competition(p) => Some(classify(p).case.label().to_string()),
        _ => None,
    };
    AnalysisReport {
        model: cfg.model.clone(),
        params: cfg.params.clone(),
        bbox: cfg.bbox,
        grid: cfg.grid,
        seed: cfg.seed,
        equilibria,
        continuum: analysis.equilibria.continuum.clone(),
        case,
        attractor: analysis.attracting_interior().map(|p| [p.x, p.y]),
        nullclines: analysis.nullclines.clone(),
        root_curves,
        regions,
        invariance: analysis.invariance.clone(),
        oscillation_risk: analysis.oscillation_risk.iter().map(|&(a, b)| [a, b]).collect(),
        convergence: with_convergence.then(|| convergence(cfg, analysis)),
        errors: analysis.errors.clone(),
    }
}
