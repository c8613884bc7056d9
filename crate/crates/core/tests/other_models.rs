use augmap_core::competition::{attribute_orbits, Attractor};
use augmap_core::next_iterate::{traced_root_curves, RootCurveKind};
use augmap_core::nullclines::{equilibria, model_nullclines, periodic_point_search, stability, Stability};
use augmap_core::numerics::low_discrepancy_points;
use augmap_core::regions::{
    certify_invariance, decompose, jump_scan, oscillation_risk, EmpiricalConfig, NullclineRegion, Verdict,
};
use augmap_core::trace::TraceConfig;
use augmap_core::{BBox, MutualismParams, PlanarMap, Point, PredPreyParams, RickerParams};

fn ricker(k: f64, l: f64, a: f64, b: f64) -> PlanarMap {
    PlanarMap::Ricker(RickerParams::new(k, l, a, b).unwrap())
}

fn mutualism_8a() -> PlanarMap {
    PlanarMap::Mutualism(MutualismParams::new(16.0, 1.0, 4.0, 2.0, 4.0, 1.0, 3.0, 2.0).unwrap())
}

fn mutualism_8b() -> PlanarMap {
    PlanarMap::Mutualism(MutualismParams::new(8.0, 1.0, 4.0, 2.0, 4.8, 1.0, 3.0, 2.0).unwrap())
}

fn all_to(map: &PlanarMap, target: Point, window: BBox, n: usize) {
    let starts = low_discrepancy_points(&window, n, 0);
    let stats = attribute_orbits(map, &[Attractor::point("E", target)], &starts, 10_000, 1e-6);
    assert_eq!(stats.count("E"), n, "unresolved starts: {:?}", stats.unresolved_starts);
}

#[test]
fn ricker_7a_bands_and_convergence() {
    let map = ricker(0.6, 0.6, 0.35, 0.4);
    let e = equilibria(&map).interior().unwrap();
    // X + aY = K, bX + Y = L
    let x = (0.6 - 0.35 * 0.6) / (1.0 - 0.35 * 0.4);
    assert!((e.x - x).abs() < 1e-12 && (e.y - (0.6 - 0.4 * x)).abs() < 1e-12);

    let ncs = model_nullclines(&map).unwrap();
    let cfg = TraceConfig::new(map.default_bbox()).with_grid(200, 200);
    let (rcs, _) = traced_root_curves(&map, &ncs, &cfg).unwrap();
    let d = decompose(&map, &ncs, &rcs, &cfg).unwrap();
    let emp = EmpiricalConfig::default();
    let bands = NullclineRegion::standard(&ncs);

    // Band touching the X-axis: no exits.
    let v = certify_invariance(&map, &ncs, &d, &bands[2], &emp);
    match v.verdict {
        Verdict::ProvenBySigns => {}
        Verdict::EmpiricallySupported { samples, steps } => assert!(samples * steps >= 100_000, "{v:?}"),
        Verdict::Counterexample { .. } => panic!("{v:?}"),
    }

    // Band touching the Y-axis: starts close to its upper corner drop below k.
    let v = certify_invariance(&map, &ncs, &d, &bands[3], &emp);
    let Verdict::Counterexample { start, exit_point, .. } = v.verdict else { panic!("{v:?}") };
    assert!(start.x < 0.05 && start.y > 1.5);
    assert!(ncs[1].offset(exit_point) < 0.0);
    let p = Point::new(0.01, 1.65);
    let q = map.step(p).unwrap();
    assert!(bands[3].contains(&ncs, p, 0.0) && !bands[3].contains(&ncs, q, 0.0));

    all_to(&map, e, BBox::square(0.0, 2.0).unwrap(), 1000);
}

#[test]
fn ricker_7b_no_certified_region_and_oscillation_risk() {
    let map = ricker(0.9, 1.6, 0.4, 0.3);
    let e = equilibria(&map).interior().unwrap();
    let (tag, m) = stability(&map, e).unwrap();
    assert_eq!(tag, Stability::Attracting, "{m:?}");

    let ncs = model_nullclines(&map).unwrap();
    let cfg = TraceConfig::new(map.default_bbox()).with_grid(200, 200);
    let (rcs, _) = traced_root_curves(&map, &ncs, &cfg).unwrap();
    let d = decompose(&map, &ncs, &rcs, &cfg).unwrap();
    assert!(!oscillation_risk(&d).is_empty());
    let emp = EmpiricalConfig::default();
    for set in NullclineRegion::standard(&ncs) {
        let v = certify_invariance(&map, &ncs, &d, &set, &emp);
        assert_ne!(v.verdict, Verdict::ProvenBySigns, "{}", v.region);
    }
    let below = &NullclineRegion::standard(&ncs)[0];
    let v = certify_invariance(&map, &ncs, &d, below, &emp);
    assert!(matches!(v.verdict, Verdict::Counterexample { .. }), "{v:?}");
}

#[test]
fn ricker_jump_over_both_nullclines() {
    let map = ricker(0.9, 1.6, 0.4, 0.3);
    let ncs = model_nullclines(&map).unwrap();
    let r = jump_scan(&map, &ncs, &map.default_bbox(), 100);
    assert!(!r.crossings.is_empty());
    assert!(!r.band_exits.is_empty());
    for (p, q) in &r.crossings {
        for n in &ncs {
            assert!(n.offset(*p) * n.offset(*q) < 0.0);
        }
    }
    // A start high above both nullclines lands below both.
    let p = Point::new(0.1, 3.0);
    let q = map.step(p).unwrap();
    assert!(ncs.iter().all(|n| n.offset(p) > 0.0 && n.offset(q) < 0.0));
}

#[test]
fn ricker_root_curves_close_below_the_axes() {
    let map = ricker(0.9, 1.6, 0.4, 0.3);
    let ncs = model_nullclines(&map).unwrap();
    let cfg = TraceConfig::new(BBox::square(-1.0, 6.0).unwrap()).with_grid(256, 256);
    let (rcs, _) = traced_root_curves(&map, &ncs, &cfg).unwrap();
    let closed = rcs.iter().filter(|c| matches!(&c.kind, RootCurveKind::Traced(p) if p.closed)).count();
    assert!(closed >= 1);
}

#[test]
fn mutualism_8a_has_two_root_components_per_operator() {
    let map = mutualism_8a();
    let e = equilibria(&map).interior().unwrap();
    assert!((e.x - 25.0 / 3.0).abs() < 1e-10 && (e.y - 14.0 / 3.0).abs() < 1e-10);
    let ncs = model_nullclines(&map).unwrap();
    let cfg = TraceConfig::new(map.default_bbox()).with_grid(256, 256);
    let (rcs, _) = traced_root_curves(&map, &ncs, &cfg).unwrap();
    for n in &ncs {
        let count = rcs.iter().filter(|c| c.nullcline == n.label).count();
        assert!(count >= 2, "{}: {count}", n.label);
    }
}

#[test]
fn mutualism_8b_converges_on_the_box() {
    let map = mutualism_8b();
    let e = equilibria(&map).interior().unwrap();
    assert!((e.x - 49.0 / 15.0).abs() < 1e-10);
    all_to(&map, e, BBox::square(0.0, 6.0).unwrap(), 1000);
}

#[test]
fn predprey_prey_only_attracts() {
    let map = PlanarMap::PredPrey(PredPreyParams::new(1.0, 1.0, 1.0, 0.5, 1.0).unwrap());
    all_to(&map, Point::new(1.0, 0.0), BBox::square(0.0, 2.0).unwrap(), 1000);
}

#[test]
fn predprey_has_no_period_two_or_three_points() {
    let map = PlanarMap::PredPrey(PredPreyParams::new(1.0, 1.0, 1.0, 1.5, 1.0).unwrap());
    let window = BBox::square(0.0, 2.0).unwrap();
    let fixed = equilibria(&map).points();
    for period in [2, 3] {
        let s = periodic_point_search(&map, period, &window, 100);
        assert_eq!(s.seeds, 10_000);
        assert!(s.converged > 0);
        assert!(s.prime().is_empty(), "{:?}", s.prime());
        for sol in &s.solutions {
            assert_eq!(sol.least_period, 1);
            assert!(fixed.iter().any(|f| f.dist_inf(sol.point) < 1e-7), "{:?}", sol.point);
        }
    }
}
