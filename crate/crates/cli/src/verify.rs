//! Verification suites per model family.
//!
//! Checks backed by a proven statement for the configured parameters are
//! `pass`/`fail`; observations without such a statement are `info` and never
//! affect the exit code.

use std::fmt::Write;

use augmap_core::competition::{
    case1_stability_demo, classify, verify_global_outcome, verify_sign_lemmas, Case1Config, CompetitionCase,
    OutcomeConfig,
};
use augmap_core::next_iterate::{closed_form_root_curves, root_set_nullcline_intersections, NextIterateOperator};
use augmap_core::nullclines::{competition_nullclines, equilibria, periodic_point_search, NullclineCurve};
use augmap_core::regions::{
    box_lemma_check, empirical_invariance, jump_scan, EmpiricalConfig, NullclineRegion, Verdict,
};
use augmap_core::trace::{directed_hausdorff, trace_zero_set, TraceConfig};
use augmap_core::{BBox, CompetitionParams, PlanarMap, Point, PredPreyParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{self, Analysis};
use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub summary: String,
    pub data: Value,
}

impl Check {
    fn new(name: &str, ok: bool, summary: String, data: Value) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Check { name: name.to_string(), status, summary, data }
    }

    fn info(name: &str, summary: String, data: Value) -> Self {
        Check { name: name.to_string(), status: Status::Info, summary, data }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub model: String,
    pub params: Value,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    /// One line per check, then an overall verdict.
    pub fn human(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} (seed {})", self.model, self.seed);
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Info => "info",
            };
            let _ = writeln!(s, "  [{tag}] {}: {}", c.name, c.summary);
        }
        let _ = writeln!(
            s,
            "{}",
            if self.passed() { "all checks passed".to_string() } else { format!("{} check(s) failed", self.failures()) }
        );
        s
    }
}

/// Trials for stress-testing sets certified by signs.
const STRESS_STARTS: usize = 1000;
const STRESS_STEPS: usize = 1000;

pub fn run(cfg: &Config) -> VerifyReport {
    let analysis = analysis::run(cfg);
    let mut checks = Vec::new();
    match &cfg.map {
        PlanarMap::Competition(p) => competition_checks(cfg, p, &mut checks),
        _ => {
            convergence_check(cfg, &analysis, &mut checks);
            if let PlanarMap::PredPrey(p) = &cfg.map {
                predprey_checks(cfg, p, &mut checks);
            }
            if !analysis.nullclines.is_empty() {
                jump_check(cfg, &analysis.nullclines, &mut checks);
                root_component_check(&analysis, &mut checks);
            }
        }
    }
    invariance_checks(cfg, &analysis, &mut checks);
    if !analysis.errors.is_empty() {
        checks.push(Check::info(
            "numerical notes",
            format!("{} note(s)", analysis.errors.len()),
            json!(analysis.errors),
        ));
    }
    VerifyReport { model: cfg.model.clone(), params: cfg.params.clone(), seed: cfg.seed, checks }
}

fn competition_checks(cfg: &Config, p: &CompetitionParams, checks: &mut Vec<Check>) {
    let prediction = classify(p);
    let case = prediction.case;
    checks.push(Check::info(
        "case",
        format!("case {} ({:?})", case.label(), case),
        json!({"case": case.label(), "efficiencies": prediction.efficiencies}),
    ));

    // The exclusion lemmas are stated for the Y-wins orientation; the X-wins
    // case is checked on the mirrored parameters.
    let (lemma_params, mirrored) =
        if case == CompetitionCase::ExclusionXWins { (p.swapped(), true) } else { (*p, false) };
    match verify_sign_lemmas(&lemma_params, 200) {
        Ok(r) => {
            let n = r.violations();
            let summary = format!("{n} violations{}", if mirrored { " (mirrored parameters)" } else { "" });
            checks.push(Check::new("sign lemmas", n == 0, summary, serde_json::to_value(&r).unwrap_or_default()));
        }
        Err(e) => checks.push(Check::new("sign lemmas", false, e.to_string(), Value::Null)),
    }

    let o = cfg.orbit_settings();
    let ocfg = OutcomeConfig { n_orbits: o.n, max_steps: o.steps, tol: o.tol, window: cfg.start_window(), seed: cfg.seed };
    match verify_global_outcome(p, &ocfg) {
        Ok(r) => {
            let mut ok = r.stats.unresolved == 0 && r.boundary.holds();
            if case == CompetitionCase::Bistable {
                ok &= r.stats.count("E1") > 0 && r.stats.count("E2") > 0;
            }
            let counts: Vec<String> = r.stats.counts.iter().map(|(n, c)| format!("{c}/{} \u{2192} {n}", r.stats.n_orbits)).collect();
            let mut summary = counts.join(", ");
            if r.stats.unresolved > 0 {
                let _ = write!(summary, ", {} unresolved", r.stats.unresolved);
            }
            if !r.boundary.holds() {
                summary.push_str(", axis dynamics violated");
            }
            checks.push(Check::new("global outcome", ok, summary, serde_json::to_value(&r).unwrap_or_default()));
        }
        Err(e) => checks.push(Check::new("global outcome", false, e.to_string(), Value::Null)),
    }

    if case == CompetitionCase::DegenerateLine {
        match case1_stability_demo(p, &Case1Config { seed: cfg.seed, ..Case1Config::default() }) {
            Ok(r) => {
                let exits: usize = r.rectangles.iter().map(|c| c.exits).sum();
                let ok = r.max_eigen_error < 1e-9 && exits == 0;
                checks.push(Check::new(
                    "line of equilibria",
                    ok,
                    format!("eigenvalue error {:.1e}, {exits} rectangle exits", r.max_eigen_error),
                    serde_json::to_value(&r).unwrap_or_default(),
                ));
            }
            Err(e) => checks.push(Check::new("line of equilibria", false, e.to_string(), Value::Null)),
        }
    } else {
        nullcline_zero_check(cfg, p, checks);
    }

    if matches!(case, CompetitionCase::Bistable | CompetitionCase::Coexistence) {
        match box_lemma_check(p, 100_000, cfg.seed) {
            Ok(r) => checks.push(Check::new(
                "box lemma",
                r.holds(),
                format!("{} of {} lower-box samples map into the upper box", r.violations.len(), r.samples),
                serde_json::to_value(&r).unwrap_or_default(),
            )),
            Err(e) => checks.push(Check::new("box lemma", false, e.to_string(), Value::Null)),
        }
    }

    root_curve_cross_check(cfg, p, checks);
}

/// Zeros of each operator along its own nullcline are exactly the
/// equilibria on that nullcline.
fn nullcline_zero_check(cfg: &Config, p: &CompetitionParams, checks: &mut Vec<Check>) {
    let map = &cfg.map;
    let eq = equilibria(map);
    let (h, k) = competition_nullclines(p);
    let mut worst = 0.0f64;
    let mut extra = 0;
    let mut missing = 0;
    let mut found = Vec::new();
    for n in [&h, &k] {
        let op = NextIterateOperator::new(map, n);
        let zeros = root_set_nullcline_intersections(&op, n.domain, 1e-4);
        let on: Vec<Point> = eq.points().into_iter().filter(|e| n.offset(*e).abs() < 1e-9).collect();
        for z in &zeros {
            match on.iter().map(|e| e.dist(*z)).min_by(f64::total_cmp) {
                Some(d) if d < 1e-8 => worst = worst.max(d),
                _ => extra += 1,
            }
        }
        missing += on.iter().filter(|e| !zeros.iter().any(|z| z.dist(**e) < 1e-8)).count();
        found.push(json!({"nullcline": n.label, "zeros": zeros, "equilibria": on}));
    }
    checks.push(Check::new(
        "operator zeros on nullclines",
        extra == 0 && missing == 0,
        format!("{extra} extra, {missing} missing, max distance {worst:.1e}"),
        json!(found),
    ));
}

fn root_curve_cross_check(cfg: &Config, p: &CompetitionParams, checks: &mut Vec<Check>) {
    let map = &cfg.map;
    let (h, k) = competition_nullclines(p);
    let tcfg = TraceConfig::new(cfg.bbox).with_grid(512, 512);
    let curves = closed_form_root_curves(p, cfg.bbox);
    let mut worst = 0.0f64;
    let mut per = Vec::new();
    for n in [&h, &k] {
        let op = NextIterateOperator::new(map, n);
        let traced = match trace_zero_set(&|q: Point| op.eval_or_nan(q), &tcfg) {
            Ok(t) => t.polylines,
            Err(e) => {
                checks.push(Check::new("root-curve cross-check", false, e.to_string(), Value::Null));
                return;
            }
        };
        let closed: Vec<_> = curves
            .iter()
            .filter(|c| c.nullcline == n.label)
            .flat_map(|c| c.pieces(Some(p), 4 * 512))
            .collect();
        let d = match (traced.is_empty(), closed.is_empty()) {
            (true, true) => 0.0,
            (false, false) => directed_hausdorff(&traced, &closed).max(directed_hausdorff(&closed, &traced)),
            _ => f64::INFINITY,
        };
        worst = worst.max(d);
        per.push(json!({"nullcline": n.label, "hausdorff": d}));
    }
    let cell = tcfg.cell_diagonal();
    checks.push(Check::new(
        "root-curve cross-check",
        worst < cell,
        format!("Hausdorff {worst:.2e} vs cell diagonal {cell:.2e}"),
        json!({"curves": per, "cell_diagonal": cell}),
    ));
}

fn convergence_check(cfg: &Config, analysis: &Analysis, checks: &mut Vec<Check>) {
    let stats = analysis::convergence(cfg, analysis);
    let mut summary: Vec<String> =
        stats.counts.iter().map(|(n, c)| format!("{c}/{} \u{2192} {n}", stats.n_orbits)).collect();
    if stats.unresolved > 0 {
        summary.push(format!("{} unresolved", stats.unresolved));
    }
    let summary = if summary.is_empty() { "no attracting equilibrium".to_string() } else { summary.join(", ") };
    let data = serde_json::to_value(&stats).unwrap_or_default();
    // A global claim exists for the prey-only regime of the predator-prey map.
    match &cfg.map {
        PlanarMap::PredPrey(p) if p.gamma * p.k < p.d => {
            let ok = stats.unresolved == 0 && stats.counts.iter().all(|(n, c)| n == "E1" || *c == 0);
            checks.push(Check::new("global outcome", ok, summary, data));
        }
        _ => checks.push(Check::info("convergence", summary, data)),
    }
}

fn predprey_checks(cfg: &Config, p: &PredPreyParams, checks: &mut Vec<Check>) {
    let gk = p.gamma * p.k;
    if !(p.d < gk && gk < 1.0 + 2.0 * p.d) {
        return;
    }
    let window = BBox { x0: 0.0, x1: cfg.bbox.x1.max(2.0 * p.k), y0: 0.0, y1: cfg.bbox.y1.max(2.0 * p.k) };
    let mut prime = Vec::new();
    let mut data = Vec::new();
    for period in [2, 3] {
        let s = periodic_point_search(&cfg.map, period, &window, 100);
        prime.extend(s.prime());
        data.push(s);
    }
    checks.push(Check::new(
        "no period-2 or period-3 orbits",
        prime.is_empty(),
        format!("{} prime periodic point(s) from 2 x 10^4 seeds", prime.len()),
        serde_json::to_value(&data).unwrap_or_default(),
    ));
}

fn jump_check(cfg: &Config, nullclines: &[NullclineCurve], checks: &mut Vec<Check>) {
    let r = jump_scan(&cfg.map, nullclines, &cfg.bbox, 100);
    checks.push(Check::info(
        "one-step jumps",
        format!(
            "{} start(s) jump across every nullcline, {} leave a band in one step",
            r.crossings.len(),
            r.band_exits.len()
        ),
        json!({
            "grid": r.grid,
            "crossings": r.crossings.len(),
            "band_exits": r.band_exits.len(),
            "first_crossing": r.crossings.first(),
            "first_band_exit": r.band_exits.first(),
        }),
    ));
}

fn root_component_check(analysis: &Analysis, checks: &mut Vec<Check>) {
    let per: Vec<(String, usize)> = analysis
        .nullclines
        .iter()
        .map(|n| (n.label.clone(), analysis.root_curves.iter().filter(|c| c.nullcline == n.label).count()))
        .collect();
    let summary = per.iter().map(|(l, c)| format!("{l}: {c}")).collect::<Vec<_>>().join(", ");
    checks.push(Check::info("root-curve components", summary, json!(per)));
}

/// Reports every verdict; sets certified by signs are stress-tested with long
/// orbits and fail the check if one escapes.
fn invariance_checks(cfg: &Config, analysis: &Analysis, checks: &mut Vec<Check>) {
    let Some(d) = &analysis.decomposition else { return };
    let sets = NullclineRegion::standard(&analysis.nullclines);
    for v in &analysis.invariance {
        let name = format!("invariance of {}", v.region);
        match &v.verdict {
            Verdict::ProvenBySigns => {
                let set = sets.iter().find(|s| s.name == v.region).expect("verdict refers to a standard set");
                let emp = EmpiricalConfig { starts: STRESS_STARTS, steps: STRESS_STEPS, seed: cfg.seed, tol: 1e-9 };
                let stress = empirical_invariance(&cfg.map, &analysis.nullclines, set, &d.cfg.bbox, &emp);
                let ok = !matches!(stress, Verdict::Counterexample { .. });
                checks.push(Check::new(
                    &name,
                    ok,
                    format!("proven by signs; stress test {}", if ok { "found no exit" } else { "found an exit" }),
                    json!({"verdict": v, "stress": stress}),
                ));
            }
            Verdict::EmpiricallySupported { samples, steps } => checks.push(Check::info(
                &name,
                format!("no exit in {samples} sampled orbits of {steps} steps"),
                json!(v),
            )),
            Verdict::Counterexample { start, exit_step, exit_point } => checks.push(Check::info(
                &name,
                format!(
                    "orbit from ({:.4}, {:.4}) leaves at step {exit_step} to ({:.4}, {:.4})",
                    start.x, start.y, exit_point.x, exit_point.y
                ),
                json!(v),
            )),
        }
    }
    if !analysis.oscillation_risk.is_empty() {
        checks.push(Check::info(
            "oscillation risk",
            format!("{} region pair(s) with all-plus below and all-minus above the nullclines", analysis.oscillation_risk.len()),
            json!(analysis.oscillation_risk),
        ));
    }
}
