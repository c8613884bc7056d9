//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use augmap_core::competition::{
    attribute_orbits, case1_stability_demo, classify, verify_global_outcome, verify_sign_lemmas, Attractor,
    Case1Config, CompetitionCase, OutcomeConfig,
};
use augmap_core::next_iterate::{
    closed_form_root_curves, root_set_nullcline_intersections, traced_root_curves, NextIterateOperator,
};
use augmap_core::nullclines::{
    competition_nullclines, equilibria, model_nullclines, periodic_point_search, stability, Stability,
};
use augmap_core::numerics::low_discrepancy_points;
use augmap_core::regions::{
    box_lemma_check, certify_invariance, decompose, jump_scan, oscillation_risk, EmpiricalConfig, NullclineRegion,
    Verdict,
};
use augmap_core::trace::{directed_hausdorff, trace_zero_set, TraceConfig};
use augmap_core::{BBox, CompetitionParams, MutualismParams, PlanarMap, Point, PredPreyParams, RickerParams};

fn comp(r1: f64, r2: f64, k1: f64, k2: f64, a1: f64, a2: f64) -> CompetitionParams {
    CompetitionParams::new(r1, r2, k1, k2, a1, a2).unwrap()
}

fn exclusion() -> CompetitionParams {
    comp(0.5, 0.625, 0.5, 2.0, 1.0, 1.0)
}

fn bistable() -> CompetitionParams {
    comp(0.5, 2.0, 2.0, 1.3, 1.0, 3.0)
}

fn coexistence() -> CompetitionParams {
    comp(2.0, 2.0, 1.0, 1.0, 1.0, 1.0)
}

fn degenerate() -> CompetitionParams {
    comp(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
}

fn ricker(k: f64, l: f64, a: f64, b: f64) -> PlanarMap {
    PlanarMap::Ricker(RickerParams::new(k, l, a, b).unwrap())
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn outcome(p: &CompetitionParams) -> augmap_core::competition::OutcomeReport {
    verify_global_outcome(p, &OutcomeConfig::default()).unwrap()
}

fn c1_exclusion() -> Outcome {
    let t = Instant::now();
    let r = outcome(&exclusion());
    let secs = t.elapsed().as_secs_f64();
    let e2 = r.stats.count("E2");
    check(
        e2 == 1000 && r.stats.unresolved == 0 && secs < 5.0,
        format!("{e2}/1000 -> E2=(0,2), {} unresolved, {secs:.2} s", r.stats.unresolved),
    )
}

fn c2_bistable() -> Outcome {
    let r = outcome(&bistable());
    let (e1, e2, es) = (r.stats.count("E1"), r.stats.count("E2"), r.stats.count("E*"));
    check(
        e1 + e2 + es == 1000 && e1 >= 1 && e2 >= 1 && r.stats.unresolved == 0,
        format!("E1 {e1}, E2 {e2}, E* {es}, {} unresolved", r.stats.unresolved),
    )
}

fn c3_coexistence() -> Outcome {
    let p = coexistence();
    let limit = &classify(&p).limits[0];
    let at_two_thirds = limit.distance(Point::new(2.0 / 3.0, 2.0 / 3.0)) < 1e-12;
    let r = outcome(&p);
    let es = r.stats.count("E*");
    check(at_two_thirds && es == 1000, format!("{es}/1000 -> E*=(2/3,2/3), limit at (2/3,2/3): {at_two_thirds}"))
}

fn c4_degenerate() -> Outcome {
    let p = degenerate();
    let r = outcome(&p);
    let on_segment = match &r.prediction.limits[..] {
        [Attractor::Segment { from, to, .. }] => {
            from.dist(Point::new(0.0, 1.0)) < 1e-12 && to.dist(Point::new(1.0, 0.0)) < 1e-12
                || to.dist(Point::new(0.0, 1.0)) < 1e-12 && from.dist(Point::new(1.0, 0.0)) < 1e-12
        }
        _ => false,
    };
    let converged: usize = r.stats.counts.iter().map(|(_, c)| c).sum();
    let demo = case1_stability_demo(&p, &Case1Config::default()).unwrap();
    // all ones: the predicted modulus is 1/2 everywhere on the segment
    let half = demo.eigen.iter().all(|e| (e.computed[0] - 1.0).abs() < 1e-9 && (e.computed[1] - 0.5).abs() < 1e-9);
    check(
        on_segment && converged == 1000 && half,
        format!(
            "{converged}/1000 on Y=1-X, eigenvalues {{0.5, 1}} error {:.1e} over {} points",
            demo.max_eigen_error,
            demo.eigen.len()
        ),
    )
}

fn c5_sign_lemmas() -> Outcome {
    let mut parts = Vec::new();
    let mut total = 0;
    for (name, p, want) in [
        ("II", exclusion(), CompetitionCase::ExclusionYWins),
        ("III", bistable(), CompetitionCase::Bistable),
        ("IV", coexistence(), CompetitionCase::Coexistence),
        ("I", degenerate(), CompetitionCase::DegenerateLine),
    ] {
        let r = verify_sign_lemmas(&p, 200).map_err(|e| format!("case {name}: {e}"))?;
        if r.case != want || r.checks.is_empty() {
            return Err(format!("case {name}: got {:?} with {} checks", r.case, r.checks.len()));
        }
        total += r.violations();
        parts.push(format!("{name}: {}", r.violations()));
    }
    check(total == 0, format!("violations at 200x200: {}", parts.join(", ")))
}

fn c6_nullcline_zeros() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, p) in [("II", exclusion()), ("III", bistable()), ("IV", coexistence()), ("I", degenerate())] {
        let map = PlanarMap::Competition(p);
        let eq = equilibria(&map);
        let (h, k) = competition_nullclines(&p);
        let (mut extra, mut missing) = (0, 0);
        for n in [&h, &k] {
            let op = NextIterateOperator::new(&map, n);
            let zeros = root_set_nullcline_intersections(&op, n.domain, 1e-4);
            let on: Vec<Point> = eq.points().into_iter().filter(|e| n.offset(*e).abs() < 1e-9).collect();
            let near_equilibrium = |z: &Point| {
                on.iter().any(|e| e.dist(*z) < 1e-8)
                    || eq.continuum.as_ref().is_some_and(|c| c.distance(*z) < 1e-8)
            };
            extra += zeros.iter().filter(|z| !near_equilibrium(z)).count();
            missing += on.iter().filter(|e| !zeros.iter().any(|z| z.dist(**e) < 1e-8)).count();
        }
        ok &= extra == 0 && missing == 0;
        parts.push(format!("{name}: {extra} extra, {missing} missing"));
    }
    check(ok, parts.join("; "))
}

fn c7_root_curves() -> Outcome {
    let p = coexistence();
    let map = PlanarMap::Competition(p);
    let window = BBox::square(0.0, 2.4).unwrap();
    let tcfg = TraceConfig::new(window).with_grid(512, 512);
    let curves = closed_form_root_curves(&p, window);
    let (h, k) = competition_nullclines(&p);
    let mut worst = 0.0f64;
    for n in [&h, &k] {
        let op = NextIterateOperator::new(&map, n);
        let traced = trace_zero_set(&|q: Point| op.eval_or_nan(q), &tcfg).map_err(|e| e.to_string())?.polylines;
        let closed: Vec<_> =
            curves.iter().filter(|c| c.nullcline == n.label).flat_map(|c| c.pieces(Some(&p), 4 * 512)).collect();
        if traced.is_empty() || closed.is_empty() {
            return Err(format!("{}: {} traced vs {} closed-form pieces", n.label, traced.len(), closed.len()));
        }
        worst = worst.max(directed_hausdorff(&traced, &closed)).max(directed_hausdorff(&closed, &traced));
    }
    let cell = tcfg.cell_diagonal();
    check(worst < cell, format!("Hausdorff {worst:.2e} < cell diagonal {cell:.2e}"))
}

fn c8_box_lemma() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, p) in [("III", bistable()), ("IV", coexistence())] {
        let r = box_lemma_check(&p, 100_000, 0).map_err(|e| e.to_string())?;
        ok &= r.samples == 100_000 && r.holds();
        parts.push(format!("{name}: {} of {} images in D2", r.violations.len(), r.samples));
    }
    check(ok, parts.join("; "))
}

fn c9_jumps() -> Outcome {
    let map = ricker(0.9, 1.6, 0.4, 0.3);
    let ncs = model_nullclines(&map).map_err(|e| e.to_string())?;
    let r = jump_scan(&map, &ncs, &map.default_bbox(), 100);
    let genuine = r.crossings.iter().all(|(p, q)| ncs.iter().all(|n| n.offset(*p) * n.offset(*q) < 0.0));
    check(
        !r.crossings.is_empty() && genuine && !r.band_exits.is_empty(),
        format!("{} jumps over both nullclines, {} band exits", r.crossings.len(), r.band_exits.len()),
    )
}

fn zero_exit(v: &Verdict) -> bool {
    match v {
        Verdict::ProvenBySigns => true,
        Verdict::EmpiricallySupported { samples, steps } => samples * steps >= 100_000,
        Verdict::Counterexample { .. } => false,
    }
}

fn c10_ricker() -> Outcome {
    let mut msgs = Vec::new();
    let mut ok = true;

    let map = ricker(0.6, 0.6, 0.35, 0.4);
    let ncs = model_nullclines(&map).map_err(|e| e.to_string())?;
    let cfg = TraceConfig::new(map.default_bbox()).with_grid(200, 200);
    let (rcs, _) = traced_root_curves(&map, &ncs, &cfg).map_err(|e| e.to_string())?;
    let d = decompose(&map, &ncs, &rcs, &cfg).map_err(|e| e.to_string())?;
    let sets = NullclineRegion::standard(&ncs);
    // the two triangles between the nullclines, touching the X and Y axes
    for (tag, set) in [("i", &sets[2]), ("ii", &sets[3])] {
        let v = certify_invariance(&map, &ncs, &d, set, &EmpiricalConfig::default());
        let good = zero_exit(&v.verdict);
        ok &= good;
        msgs.push(match v.verdict {
            Verdict::Counterexample { start, exit_step, exit_point } => format!(
                "7a {tag}) exits: ({:.4}, {:.4}) -> ({:.4}, {:.4}) at step {exit_step}",
                start.x, start.y, exit_point.x, exit_point.y
            ),
            other => format!("7a {tag}) {other:?}"),
        });
    }
    let e = equilibria(&map).interior().ok_or("7a: no interior equilibrium")?;
    let starts = low_discrepancy_points(&BBox::square(0.0, 2.0).unwrap(), 1000, 0);
    let stats = attribute_orbits(&map, &[Attractor::point("E*", e)], &starts, 10_000, 1e-6);
    ok &= stats.count("E*") == 1000;
    msgs.push(format!("7a {}/1000 -> E*", stats.count("E*")));

    let map = ricker(0.9, 1.6, 0.4, 0.3);
    let ncs = model_nullclines(&map).map_err(|e| e.to_string())?;
    let (rcs, _) = traced_root_curves(&map, &ncs, &cfg).map_err(|e| e.to_string())?;
    let d = decompose(&map, &ncs, &rcs, &cfg).map_err(|e| e.to_string())?;
    let e = equilibria(&map).interior().ok_or("7b: no interior equilibrium")?;
    let (tag, moduli) = stability(&map, e).map_err(|e| e.to_string())?;
    let risk = oscillation_risk(&d);
    let proven = NullclineRegion::standard(&ncs)
        .iter()
        .filter(|s| certify_invariance(&map, &ncs, &d, s, &EmpiricalConfig::default()).verdict == Verdict::ProvenBySigns)
        .count();
    ok &= tag == Stability::Attracting && moduli[0] < 1.0 && !risk.is_empty() && proven == 0;
    msgs.push(format!(
        "7b moduli ({:.3}, {:.3}), {} risk pair(s), {proven} proven",
        moduli[0],
        moduli[1],
        risk.len()
    ));
    check(ok, msgs.join("; "))
}

fn c11_mutualism() -> Outcome {
    let map = PlanarMap::Mutualism(MutualismParams::new(16.0, 1.0, 4.0, 2.0, 4.0, 1.0, 3.0, 2.0).unwrap());
    let ncs = model_nullclines(&map).map_err(|e| e.to_string())?;
    let cfg = TraceConfig::new(map.default_bbox()).with_grid(256, 256);
    let (rcs, _) = traced_root_curves(&map, &ncs, &cfg).map_err(|e| e.to_string())?;
    let comps: Vec<usize> = ncs.iter().map(|n| rcs.iter().filter(|c| c.nullcline == n.label).count()).collect();

    let map = PlanarMap::Mutualism(MutualismParams::new(8.0, 1.0, 4.0, 2.0, 4.8, 1.0, 3.0, 2.0).unwrap());
    let e = equilibria(&map).interior().ok_or("8b: no interior equilibrium")?;
    let starts = low_discrepancy_points(&BBox::square(0.0, 6.0).unwrap(), 1000, 0);
    let stats = attribute_orbits(&map, &[Attractor::point("E*", e)], &starts, 10_000, 1e-6);
    check(
        comps.iter().all(|&c| c >= 2) && stats.count("E*") == 1000,
        format!("8a components per operator {comps:?}; 8b {}/1000 -> E*", stats.count("E*")),
    )
}

fn c12_predprey() -> Outcome {
    let map = PlanarMap::PredPrey(PredPreyParams::new(1.0, 1.0, 1.0, 0.5, 1.0).unwrap());
    let starts = low_discrepancy_points(&BBox::square(0.0, 2.0).unwrap(), 1000, 0);
    let stats = attribute_orbits(&map, &[Attractor::point("E1", Point::new(1.0, 0.0))], &starts, 10_000, 1e-6);

    let map = PlanarMap::PredPrey(PredPreyParams::new(1.0, 1.0, 1.0, 1.5, 1.0).unwrap());
    let window = BBox::square(0.0, 2.0).unwrap();
    let mut prime = 0;
    let mut converged = 0;
    for period in [2, 3] {
        let s = periodic_point_search(&map, period, &window, 100);
        if s.seeds != 10_000 {
            return Err(format!("period {period}: {} seeds", s.seeds));
        }
        converged += s.converged;
        prime += s.prime().len();
    }
    check(
        stats.count("E1") == 1000 && prime == 0 && converged > 0,
        format!("{}/1000 -> (K,0); {prime} prime period-2/3 points ({converged} Newton runs converged)", stats.count("E1")),
    )
}

fn c13_determinism() -> Outcome {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let dir = std::env::temp_dir().join(format!("augmap-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for cfg in ["competition_coexistence", "ricker_jump"] {
        let mut outs = Vec::new();
        for run in 0..2 {
            let out = dir.join(format!("{cfg}-{run}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_augmap"))
                .arg("verify")
                .arg(root.join("configs").join(format!("{cfg}.json")))
                .arg("-o")
                .arg(&out)
                .env("AUGMAP_SEED", "7")
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{cfg}: verify exited with {}", status.status));
            }
            outs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        let same = outs[0] == outs[1] && !outs[0].is_empty();
        ok &= same;
        parts.push(format!("{cfg}: {} bytes, identical {same}", outs[0].len()));
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("1 case II exclusion", c1_exclusion),
        ("2 case III bistability", c2_bistable),
        ("3 case IV coexistence", c3_coexistence),
        ("4 case I line of equilibria", c4_degenerate),
        ("5 sign lemmas", c5_sign_lemmas),
        ("6 operator zeros on nullclines", c6_nullcline_zeros),
        ("7 root-curve cross-validation", c7_root_curves),
        ("8 box lemma", c8_box_lemma),
        ("9 one-step jumps", c9_jumps),
        ("10 Ricker regions and convergence", c10_ricker),
        ("11 mutualism", c11_mutualism),
        ("12 predator-prey", c12_predprey),
        ("13 verify determinism", c13_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS {name}: {d} [{secs:.2} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{secs:.2} s]");
            }
        }
    }
    println!("{} passed, {failed} failed", 13 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
