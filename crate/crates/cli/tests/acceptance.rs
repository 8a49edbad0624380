//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqcap::acpf::{check_limits, PowerFlowModel, ViolationKind};
use pqcap::bundled;
use pqcap::capability::{branch_polygon_rows, ReducedDemand};
use pqcap::polytope2d::{contains, convex_hull, intersect, polygon_from_halfspaces};
use pqcap::scanner::benchmark;
use pqcap::{analyze, compute_metrics, scan, AnalysisOptions, ConvexPolygon, NetworkCase, Point, ScanConfig};
use pqcap_cli::{cmd_validate, CaseSource, RunConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn analytic_two_bus_tdf() -> Check {
    let case = bundled::two_bus();
    let br = &case.branches[0];
    let den = br.r_s * br.r_s + br.x_s * br.x_s;
    let (g, b) = (br.r_s / den, -br.x_s / den);
    let d = g * g + b * b;
    let expected = [[-b / d, -g / d], [g / d, -b / d]];

    let a = analyze(&case, AnalysisOptions::default()).map_err(|e| e.to_string())?;
    let got = [
        [a.tdf.theta_tdf[(0, 0)], a.tdf.theta_tdf[(0, 1)]],
        [a.tdf.v_tdf[(0, 0)], a.tdf.v_tdf[(0, 1)]],
    ];
    let worst = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (got[i][j] - expected[i][j]).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-9, format!("max abs deviation {worst:.2e} (tol 1e-9)"))
}

fn voltage_error(case: &NetworkCase, u: f64) -> Result<f64, String> {
    let a = analyze(case, AnalysisOptions::default()).map_err(|e| e.to_string())?;
    let none = ReducedDemand {
        p: vec![0.0; a.tdf.n_reduced()],
        q: vec![0.0; a.tdf.n_reduced()],
    };
    let (p, q) = a.gsk.dispatch(Point::new(u, 0.5 * u), &none);
    let (_, v_lin) = a.tdf.eval_voltages(&p, &q).map_err(|e| e.to_string())?;
    let sol = PowerFlowModel::new(case, Default::default())
        .and_then(|m| m.solve(&p, &q, case.v0()))
        .map_err(|e| e.to_string())?;
    if !sol.converged {
        return Err(format!("{}: AC power flow did not converge at u = {u}", case.name));
    }
    Ok(sol
        .v
        .iter()
        .zip(&v_lin)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn linearization_convergence() -> Check {
    let scales = [0.1, 0.05, 0.025, 0.0125];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, case) in bundled::all() {
        let errs: Vec<f64> = scales
            .iter()
            .map(|&u| voltage_error(&case, u))
            .collect::<Result<_, _>>()?;
        let worst_ratio = errs
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max);
        ok &= errs[0] > 0.0 && worst_ratio <= 0.35;
        details.push(format!("{name} err(0.1)={:.2e} worst ratio {worst_ratio:.3}", errs[0]));
    }
    ensure(ok, format!("{} (limit 0.35)", details.join(", ")))
}

/// Even-odd ray casting, independent of the polygon's own membership test.
fn ray_cast(poly: &[Point], x: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a.q > x.q) != (b.q > x.q) {
            let p_cross = a.p + (x.q - a.q) * (b.p - a.p) / (b.q - a.q);
            if x.p < p_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn boundary_distance(poly: &[Point], x: Point) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (dx, dy) = (b.p - a.p, b.q - a.q);
            let t = (((x.p - a.p) * dx + (x.q - a.q) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            ((a.p + t * dx - x.p).powi(2) + (a.q + t * dy - x.q).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn random_convex(rng: &mut ChaCha8Rng) -> ConvexPolygon {
    let (cx, cy) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let r = rng.random_range(0.2..1.5);
    let pts: Vec<Point> = (0..rng.random_range(3..12))
        .map(|_| {
            let a = rng.random_range(0.0..2.0 * PI);
            let rr = r * rng.random_range(0.3..1.0);
            Point::new(cx + rr * a.cos(), cy + rr * a.sin())
        })
        .collect();
    convex_hull(&pts)
}

fn polytope_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = 1e-9;
    let mut disagreements = 0;
    let mut points = 0;
    for (_, case) in bundled::all() {
        let a = analyze(&case, AnalysisOptions::default()).map_err(|e| e.to_string())?;
        let cap = &a.capability;
        let hs = cap.families.combined();
        let poly = polygon_from_halfspaces(&hs, &cap.bbox);
        let bb = cap.bbox.inflated(0.1);
        for _ in 0..10_000 {
            let x = Point::new(
                rng.random_range(bb.p_min..bb.p_max),
                rng.random_range(bb.q_min..bb.q_max),
            );
            points += 1;
            let in_box = x.p >= cap.bbox.p_min && x.p <= cap.bbox.p_max && x.q >= cap.bbox.q_min && x.q <= cap.bbox.q_max;
            let by_halfspaces = in_box && contains(&hs, x, 0.0);
            let by_ray = poly.vertices.len() >= 3 && ray_cast(&poly.vertices, x);
            if by_halfspaces != by_ray && boundary_distance(&poly.vertices, x) > tol {
                disagreements += 1;
            }
        }
    }

    let mut identity_failures = 0;
    for _ in 0..100 {
        let a = random_convex(&mut rng);
        let b = random_convex(&mut rng);
        let aa = intersect(&a, &a);
        let ab = intersect(&a, &b);
        let ba = intersect(&b, &a);
        let scale = a.area().max(b.area());
        let same = (aa.area() - a.area()).abs() <= 1e-9 * scale
            && a.vertices.iter().all(|v| aa.contains_point(*v, 1e-9));
        let monotone = ab.area() <= a.area().min(b.area()) + 1e-9 * scale;
        let commutative = (ab.area() - ba.area()).abs() <= 1e-9 * scale;
        if !(same && monotone && commutative) {
            identity_failures += 1;
        }
    }
    ensure(
        disagreements == 0 && identity_failures == 0,
        format!("{disagreements} disagreements in {points} points, {identity_failures}/100 identity failures"),
    )
}

fn octagon_geometry() -> Check {
    let mut worst_vertex: f64 = 0.0;
    let mut worst_mid: f64 = 0.0;
    for s in [0.25, 1.0, 3.7] {
        let approx = branch_polygon_rows(8, &[s]).map_err(|e| e.to_string())?;
        let poly = approx.realized(s);
        if poly.vertices.len() != 8 {
            return Err(format!("{} vertices for s = {s}", poly.vertices.len()));
        }
        let n = poly.vertices.len();
        for i in 0..n {
            let (a, b) = (poly.vertices[i], poly.vertices[(i + 1) % n]);
            worst_vertex = worst_vertex.max((a.p.hypot(a.q) - s).abs());
            let mid = ((a.p + b.p) / 2.0).hypot((a.q + b.q) / 2.0);
            worst_mid = worst_mid.max((mid - s * (PI / 8.0).cos()).abs());
        }
    }
    ensure(
        worst_vertex <= 1e-9 && worst_mid <= 1e-9,
        format!("vertex radius error {worst_vertex:.1e}, midpoint error {worst_mid:.1e}"),
    )
}

fn accuracy_on_desk_cases() -> Check {
    let config = ScanConfig::default();
    let run = |case: &NetworkCase| -> Result<_, String> {
        let a = analyze(case, AnalysisOptions::default()).map_err(|e| e.to_string())?;
        let s = scan(case, &a.gsk, &config).map_err(|e| e.to_string())?;
        let m = compute_metrics(&s.admissible, &a.capability.polygon);
        let shift = match (s.resulting.centroid(), s.admissible.centroid()) {
            (Some(r), Some(c)) => Point::new(r.p - c.p, r.q - c.q),
            _ => return Err(format!("{}: degenerate scan areas", case.name)),
        };
        Ok((m, shift))
    };
    let (lv, _) = run(&bundled::lv_feeder())?;
    let (mv, shift) = run(&bundled::mv_feeder())?;
    let lv_err = lv.error.unwrap_or(1.0);
    let lv_fill = lv.fill_factor.unwrap_or(0.0);
    let mv_err = mv.error.unwrap_or(1.0);
    let ok = lv_err <= 0.05 && lv_fill >= 0.80 && mv_err <= 0.10 && shift.q.abs() > shift.p.abs();
    ensure(
        ok,
        format!(
            "LV error {:.2}% fill {:.1}%; MV error {:.2}%, loss shift dP {:.4} dQ {:.4}",
            100.0 * lv_err,
            100.0 * lv_fill,
            100.0 * mv_err,
            shift.p,
            shift.q
        ),
    )
}

fn conservatism() -> Check {
    let case = bundled::lv_feeder();
    let a = analyze(&case, AnalysisOptions::default()).map_err(|e| e.to_string())?;
    let poly = &a.capability.polygon;
    let c = poly.centroid().ok_or("empty capability polygon")?;
    let demand = ReducedDemand::from_case(&case);
    let model = PowerFlowModel::new(&case, Default::default()).map_err(|e| e.to_string())?;
    let mut worst_v: f64 = 0.0;
    let mut worst_rating: f64 = 0.0;
    let mut diverged = 0;
    for v in &poly.vertices {
        let x = Point::new(c.p + 0.95 * (v.p - c.p), c.q + 0.95 * (v.q - c.q));
        let (p, q) = a.gsk.dispatch(x, &demand);
        let sol = model.solve(&p, &q, case.v0()).map_err(|e| e.to_string())?;
        if !sol.converged {
            diverged += 1;
            continue;
        }
        for viol in check_limits(&sol, &case) {
            match viol.kind {
                ViolationKind::VoltageHigh | ViolationKind::VoltageLow => worst_v = worst_v.max(viol.margin),
                ViolationKind::RatingFrom | ViolationKind::RatingTo => {
                    worst_rating = worst_rating.max(viol.margin / viol.limit)
                }
            }
        }
    }
    ensure(
        diverged == 0 && worst_v <= 0.005 && worst_rating <= 0.01,
        format!(
            "{} vertices, worst voltage excess {worst_v:.5} pu, worst rating excess {:.3}%, {diverged} diverged",
            poly.vertices.len(),
            100.0 * worst_rating
        ),
    )
}

fn complexity_ordering() -> Check {
    let case = bundled::synthetic_radial(120);
    let rec = benchmark(&case, AnalysisOptions::default(), &ScanConfig::default()).map_err(|e| e.to_string())?;
    let ratio = rec.t_scan / rec.t_poly;
    ensure(
        ratio >= 10.0,
        format!(
            "{} buses: t_poly {:.3e} s, t_scan {:.3e} s, ratio {ratio:.0}",
            rec.n_buses, rec.t_poly, rec.t_scan
        ),
    )
}

fn metric_identities() -> Check {
    let square = |p0: f64| {
        ConvexPolygon::from_ccw(vec![
            Point::new(p0, 0.0),
            Point::new(p0 + 1.0, 0.0),
            Point::new(p0 + 1.0, 1.0),
            Point::new(p0, 1.0),
        ])
    };
    let same = compute_metrics(&square(0.0), &square(0.0));
    let half = compute_metrics(&square(0.0), &square(0.5));
    let close = |x: Option<f64>, y: f64| x.is_some_and(|x| (x - y).abs() <= 1e-12);
    ensure(
        close(same.error, 0.0) && close(same.fill_factor, 1.0) && close(half.error, 0.5) && close(half.fill_factor, 0.5),
        format!(
            "identical {:?}/{:?}, half overlap {:?}/{:?}",
            same.error, same.fill_factor, half.error, half.fill_factor
        ),
    )
}

fn determinism() -> Check {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut reports = Vec::new();
    for dir in &dirs {
        let mut config = RunConfig::new(vec![CaseSource::Bundled("lv_feeder".into())]);
        config.parallel = false;
        config.out_dir = dir.path().to_path_buf();
        cmd_validate(&config).map_err(|e| e.to_string())?;
        reports.push(std::fs::read(dir.path().join("lv_feeder.report.json")).map_err(|e| e.to_string())?);
    }
    ensure(
        reports[0] == reports[1],
        format!("two reports of {} bytes, identical: {}", reports[0].len(), reports[0] == reports[1]),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("analytic two-bus TDF", analytic_two_bus_tdf),
        ("linearization error is second order", linearization_convergence),
        ("halfspace membership and polygon identities", polytope_oracle),
        ("octagon geometry", octagon_geometry),
        ("accuracy on LV and MV desk cases", accuracy_on_desk_cases),
        ("contracted vertices are AC feasible", conservatism),
        ("scan is at least 10x slower than the polygon", complexity_ordering),
        ("metric identities", metric_identities),
        ("validate report is deterministic", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", k + 1)
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
