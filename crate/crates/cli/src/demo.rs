//! Bundled end-to-end scenarios, one per acceptance property.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use dustmotion::boxdim::{estimate_dimension, CountMethod, EstimatorConfig};
use dustmotion::cspace::{minkowski_difference, product_distance};
use dustmotion::setgen::{cantor_dust, manifold_samples, sierpinski, Manifold};
use dustmotion::shadow::{make_cone_frame, Outcome, WitnessKind};
use dustmotion::tube::TUBE_FIXTURES;
use dustmotion::{distance, segment_clearance, Point, PointCloud, Segment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{run_escape, run_plan, run_tube, PlanStatus};
use crate::scenario::{Resolved, Scenario};
use crate::{to_json, Output, Status};

pub const THM21_CANTOR: &str = include_str!("../scenarios/thm21-cantor.json");
pub const REMARK24_PLANES: &str = include_str!("../scenarios/remark24-planes.json");
pub const THM22_DUST: &str = include_str!("../scenarios/thm22-dust.json");
pub const THM22_ANCHORED: &str = include_str!("../scenarios/thm22-anchored.json");
pub const REMARK23_SMALL: &str = include_str!("../scenarios/remark23-small.json");
pub const REMARK24_GRID: &str = include_str!("../scenarios/remark24-grid.json");

pub const DEMOS: [&str; 10] = [
    "dim-fixtures",
    "thm21-cantor",
    "remark24-planes",
    "cone-lipschitz",
    "thm22-dust",
    "remark23-small",
    "remark24-grid",
    "cspace-props",
    "tube-bound",
    "determinism",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub data: Value,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn report(self, name: &str, seed: u64, data: Value) -> DemoReport {
        DemoReport {
            name: name.into(),
            seed,
            passed: self.0.iter().all(|c| c.passed),
            checks: self.0,
            data,
        }
    }
}

fn resolve(text: &str, names: &[&str], seed: u64) -> Result<Resolved> {
    Scenario::from_json(text)?.resolve(names, None, Some(seed))
}

pub fn run_demo(name: &str, seed: u64) -> Result<DemoReport> {
    match name {
        "dim-fixtures" => dim_fixtures(seed),
        "thm21-cantor" => thm21_cantor(seed),
        "remark24-planes" => remark24_planes(seed),
        "cone-lipschitz" => cone_lipschitz(seed),
        "thm22-dust" => thm22_dust(seed),
        "remark23-small" => remark23_small(seed),
        "remark24-grid" => remark24_grid(seed),
        "cspace-props" => cspace_props(seed),
        "tube-bound" => tube_bound(seed),
        "determinism" => determinism(seed),
        other => bail!("unknown demo `{other}`; try `dustmotion demo list`"),
    }
}

pub fn table(reports: &[DemoReport]) -> String {
    let mut s = String::new();
    for r in reports {
        for c in &r.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{mark}  {:<16} {:<40} {}", r.name, c.name, c.detail);
        }
    }
    s
}

pub fn command(name: &str, seed: u64) -> Result<Output> {
    if name == "list" {
        let list = DEMOS.iter().map(|d| format!("{d}\n")).collect::<String>();
        return Ok(Output {
            status: Status::Success,
            json: to_json(&DEMOS)?,
            table: Some(list),
            csv: None,
        });
    }
    let reports = if name == "all" {
        DEMOS
            .iter()
            .filter(|&&d| d != "determinism")
            .map(|d| run_demo(d, seed))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![run_demo(name, seed)?]
    };
    let status = if reports.iter().all(|r| r.passed) {
        Status::Success
    } else {
        Status::Negative
    };
    let json = if reports.len() == 1 {
        to_json(&reports[0])?
    } else {
        to_json(&reports)?
    };
    Ok(Output {
        status,
        json,
        table: Some(table(&reports)),
        csv: None,
    })
}

struct DimFixture {
    name: &'static str,
    cloud: PointCloud,
    delta_max: f64,
    delta_min: f64,
    levels: usize,
    expected: f64,
    tol: f64,
}

fn dim_fixture_set() -> Result<Vec<DimFixture>> {
    let third = 1.0 / 3.0;
    let p = |c: &[f64]| Point::new(c.to_vec());
    Ok(vec![
        DimFixture {
            name: "cantor_dust(1, 1/3, 8)",
            cloud: cantor_dust(1, third, 8)?,
            delta_max: third,
            delta_min: third.powi(7),
            levels: 7,
            expected: 2f64.ln() / 3f64.ln(),
            tol: 0.05,
        },
        DimFixture {
            name: "cantor_dust(2, 1/3, 6)",
            cloud: cantor_dust(2, third, 6)?,
            delta_max: third,
            delta_min: third.powi(6),
            levels: 6,
            expected: 2.0 * 2f64.ln() / 3f64.ln(),
            tol: 0.10,
        },
        DimFixture {
            name: "sierpinski(8)",
            cloud: sierpinski(8)?,
            delta_max: 0.25,
            delta_min: 2f64.powi(-8),
            levels: 7,
            expected: 3f64.ln() / 2f64.ln(),
            tol: 0.10,
        },
        DimFixture {
            name: "unit segment",
            cloud: manifold_samples(
                &Manifold::Segment {
                    a: p(&[0.0, 0.0])?,
                    b: p(&[1.0, 0.0])?,
                },
                1e-4,
            )?,
            delta_max: 0.25,
            delta_min: 0.001,
            levels: 9,
            expected: 1.0,
            tol: 0.05,
        },
        DimFixture {
            name: "unit square",
            cloud: manifold_samples(
                &Manifold::PlanePatch {
                    origin: p(&[0.0, 0.0])?,
                    u: p(&[1.0, 0.0])?,
                    v: p(&[0.0, 1.0])?,
                    width: 1.0,
                    height: 1.0,
                },
                0.001,
            )?,
            delta_max: 0.05,
            delta_min: 0.005,
            levels: 7,
            expected: 2.0,
            tol: 0.10,
        },
        DimFixture {
            name: "single point",
            cloud: PointCloud::new(2, vec![p(&[0.3, 0.7])?], 1e-6, "point")?,
            delta_max: 0.1,
            delta_min: 0.001,
            levels: 5,
            expected: 0.0,
            tol: 0.02,
        },
    ])
}

fn dim_fixtures(seed: u64) -> Result<DemoReport> {
    let mut checks = Checks::default();
    let mut data = Vec::new();
    for f in dim_fixture_set()? {
        let mut slopes = Vec::new();
        for method in [CountMethod::Packing, CountMethod::Boxes] {
            let cfg = EstimatorConfig::new(f.delta_max, f.delta_min, f.levels, method);
            let e = estimate_dimension(&f.cloud, &cfg)?;
            checks.add(
                format!("{} {method}", f.name),
                (e.slope - f.expected).abs() <= f.tol,
                format!("{:.4} vs {:.4} +- {}", e.slope, f.expected, f.tol),
            );
            slopes.push(e.slope);
        }
        let gap = (slopes[0] - slopes[1]).abs();
        checks.add(
            format!("{} methods agree", f.name),
            gap <= 0.1,
            format!("|packing - boxes| = {gap:.4}"),
        );
        data.push(json!({
            "fixture": f.name,
            "samples": f.cloud.len(),
            "expected": f.expected,
            "packing": slopes[0],
            "boxes": slopes[1],
        }));
    }
    Ok(checks.report("dim-fixtures", seed, Value::Array(data)))
}

fn thm21_cantor(seed: u64) -> Result<DemoReport> {
    let r = resolve(THM21_CANTOR, &["X", "Y"], seed)?;
    let (x, y) = (r.set("X"), r.set("Y"));
    let mut checks = Checks::default();
    checks.add("target samples", y.len() == 500, format!("{}", y.len()));
    checks.add(
        "epsilon = 2 * resolution(X)",
        (r.epsilon - 2.0 * x.resolution).abs() <= 1e-15,
        format!("{:.6e}", r.epsilon),
    );
    let result = run_escape(&r)?;
    checks.add("escape found", result.outcome == Outcome::Escape, format!("{:?}", result.outcome));
    let verified = match &result.segment {
        Some(seg) => segment_clearance(seg, x, None)?,
        None => 0.0,
    };
    checks.add(
        "exhaustive clearance >= epsilon",
        verified >= r.epsilon,
        format!("{verified:.6} >= {:.6}", r.epsilon),
    );
    let dim_x = estimate_dimension(x, &r.scenario.estimator.expect("bundled estimator"))?;
    let data = json!({
        "result": result,
        "exhaustive_clearance": verified,
        "dim_x_estimate": dim_x.slope,
    });
    Ok(checks.report("thm21-cantor", seed, data))
}

fn remark24_planes(seed: u64) -> Result<DemoReport> {
    let r = resolve(REMARK24_PLANES, &["X", "Y"], seed)?;
    let (x, y) = (r.set("X"), r.set("Y"));
    let source = r.scenario.source.clone().expect("bundled source");
    let result = run_escape(&r)?;
    let mut checks = Checks::default();
    checks.add("outcome covered", result.outcome == Outcome::Covered, format!("{:?}", result.outcome));
    let cert = result.covered_certificate.clone().unwrap_or_default();
    let complete = cert.len() == y.len()
        && cert
            .iter()
            .enumerate()
            .all(|(k, w)| w.target == k && w.obstacle < x.len());
    checks.add("one witness per target", complete, format!("{} of {}", cert.len(), y.len()));
    let mut worst = 0.0f64;
    for t in &y.points {
        worst = worst.max(segment_clearance(&Segment::new(source.clone(), t.clone())?, x, None)?);
    }
    checks.add(
        "every segment blocked (exhaustive)",
        worst < r.epsilon,
        format!("max clearance {worst:.4} < {}", r.epsilon),
    );
    let shadow = cert.iter().filter(|w| w.kind == WitnessKind::Shadow).count();
    let data = json!({
        "outcome": result.outcome,
        "targets": y.len(),
        "shadow_witnesses": shadow,
        "clearance_witnesses": cert.len() - shadow,
        "uncovered_fraction": result.uncovered_fraction,
        "lipschitz_bound": result.lipschitz_bound,
        "max_clearance": worst,
    });
    Ok(checks.report("remark24-planes", seed, data))
}

/// `pairs` random pairs of cone points outside the safe ball; returns
/// (violations, largest quotient over the bound).
pub fn lipschitz_trial(
    source: &Point,
    y: &PointCloud,
    x: &PointCloud,
    pairs: usize,
    seed: u64,
) -> Result<(usize, f64)> {
    let frame = make_cone_frame(source, y, x)?;
    let lip = frame.lipschitz_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<(Point, &Point)> {
        let i = rng.gen_range(0..y.len());
        let lo = frame.safe_radius / frame.target_distance(i) * (1.0 + 1e-9);
        let tau = lo + (1.0 - lo) * rng.gen::<f64>();
        let a = frame.cone_point(i, tau)?;
        let fa = frame.project_to_target(&a, 1e-9)?;
        Ok((a, fa))
    };
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (a1, f1) = draw(&mut rng)?;
        let (a2, f2) = draw(&mut rng)?;
        let lhs = distance(f1, f2)?;
        let da = distance(&a1, &a2)?;
        if lhs > lip * da + 1e-9 {
            violations += 1;
        }
        if da > 0.0 {
            worst = worst.max(lhs / (lip * da));
        }
    }
    Ok((violations, worst))
}

fn cone_lipschitz(seed: u64) -> Result<DemoReport> {
    let r = resolve(THM21_CANTOR, &["X", "Y"], seed)?;
    let source = r.scenario.source.clone().expect("bundled source");
    let (sx, sy) = (source[0], source[1]);
    let arc = PointCloud::new(
        2,
        (0..500)
            .map(|k| {
                let a = (60.0 + 60.0 * k as f64 / 499.0f64).to_radians();
                Point::new(vec![sx + 2.0 * a.cos(), sy + 2.0 * a.sin()])
            })
            .collect::<dustmotion::Result<Vec<_>>>()?,
        0.005,
        "arc centred at s",
    )?;
    let mut checks = Checks::default();
    let mut data = Vec::new();
    for (k, (label, y)) in [("arc centred at s", &arc), ("segment target", r.set("Y"))].into_iter().enumerate() {
        let (violations, worst) = lipschitz_trial(&source, y, r.set("X"), 5000, seed.wrapping_add(k as u64))?;
        checks.add(
            format!("{label}: zero violations"),
            violations == 0,
            format!("{violations} of 5000, max quotient/bound {worst:.4}"),
        );
        data.push(json!({ "fixture": label, "pairs": 5000, "violations": violations, "max_ratio": worst }));
    }
    Ok(checks.report("cone-lipschitz", seed, Value::Array(data)))
}

fn plan_checks(checks: &mut Checks, report: &crate::commands::PlanReport, epsilon: f64) {
    checks.add(
        "gate passes",
        report.gate.passes,
        format!("dim X {:.4} < {:.4}", report.gate.dim_x, report.gate.budget),
    );
    checks.add("plan verified", report.status == PlanStatus::Verified, format!("{:?}", report.status));
    if let (Some(plan), Some(av)) = (&report.plan, &report.avoidance) {
        let v = plan.verification.as_ref().expect("verified plan");
        checks.add("isometry", v.isometry_ok, format!("{}", v.isometry_ok));
        checks.add(
            "avoidance: min clearance >= epsilon",
            av.ok && av.min_clearance >= epsilon,
            format!("{:.6} >= {epsilon} over {} times", av.min_clearance, av.time_samples),
        );
        checks.add(
            "X-space / K-space cross-check",
            av.cross_check_ok,
            format!("full product {}, K min {:.6}", av.k_is_full_product, av.k_space_min),
        );
    }
}

fn plan_data(report: &crate::commands::PlanReport) -> Value {
    json!({
        "status": report.status,
        "gate": report.gate,
        "dim_x": report.dim_x.slope,
        "cspace": report.cspace,
        "path": report.plan.as_ref().map(|p| &p.path),
        "verification": report.plan.as_ref().and_then(|p| p.verification.as_ref()),
        "avoidance": report.avoidance,
    })
}

fn thm22_dust(seed: u64) -> Result<DemoReport> {
    let mut checks = Checks::default();
    let r = resolve(THM22_DUST, &["M", "X"], seed)?;
    let report = run_plan(&r, None)?;
    plan_checks(&mut checks, &report, r.epsilon);
    checks.add(
        "K is the full product",
        report.cspace.as_ref().is_some_and(|c| c.full_product),
        format!("{} points", report.cspace.as_ref().map_or(0, |c| c.points)),
    );

    let ra = resolve(THM22_ANCHORED, &["M", "X"], seed)?;
    let anchored = run_plan(&ra, None)?;
    let anchor_ok = anchored
        .plan
        .as_ref()
        .and_then(|p| p.verification.as_ref())
        .and_then(|v| v.anchor_ok)
        .unwrap_or(false);
    checks.add("anchored plan verified", anchored.status == PlanStatus::Verified, format!("{:?}", anchored.status));
    checks.add("anchor reached", anchor_ok, format!("{anchor_ok}"));
    let data = json!({ "free": plan_data(&report), "anchored": plan_data(&anchored) });
    Ok(checks.report("thm22-dust", seed, data))
}

fn remark23_small(seed: u64) -> Result<DemoReport> {
    let mut checks = Checks::default();
    let r = resolve(REMARK23_SMALL, &["M", "X"], seed)?;
    let max = r.scenario.max_displacement.expect("bundled bound");
    let report = run_plan(&r, None)?;
    plan_checks(&mut checks, &report, r.epsilon);
    if let Some(plan) = &report.plan {
        let outer = plan.path.max_norm();
        checks.add("outermost vertex within bound", outer <= max, format!("{outer:.6} <= {max}"));
        let mut sampled = 0.0f64;
        for t in plan.sweep_times(DEFAULT_SWEEP) {
            sampled = sampled.max(plan.path.evaluate(t)?.norm());
        }
        checks.add("sampled |alpha(t)| within bound", sampled <= max, format!("{sampled:.6} <= {max}"));
    }
    Ok(checks.report("remark23-small", seed, plan_data(&report)))
}

const DEFAULT_SWEEP: usize = crate::commands::DEFAULT_T_SAMPLES;

fn remark24_grid(seed: u64) -> Result<DemoReport> {
    let mut checks = Checks::default();
    let r = resolve(REMARK24_GRID, &["M", "X"], seed)?;
    let report = run_plan(&r, None)?;
    checks.add(
        "dim X estimate >= 2.5",
        report.dim_x.slope >= 2.5,
        format!("{:.4} over delta in [{}, {}]", report.dim_x.slope, r.scenario.estimator.unwrap().delta_min, r.scenario.estimator.unwrap().delta_max),
    );
    checks.add(
        "gate fails",
        report.status == PlanStatus::GateFailed && report.status() == Status::Negative,
        format!("{:?}, exit {}", report.status, report.status().code()),
    );
    let data = json!({
        "status": report.status,
        "gate": report.gate,
        "dim_x": report.dim_x,
        "obstacle_samples": r.set("X").len(),
    });
    Ok(checks.report("remark24-grid", seed, data))
}

fn cspace_props(seed: u64) -> Result<DemoReport> {
    let mut checks = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_point = |rng: &mut ChaCha8Rng| Point::new((0..3).map(|_| rng.gen_range(-10.0..10.0)).collect());
    let pairs = 100_000;
    let mut violations = 0;
    for _ in 0..pairs {
        let (x1, y1, x2, y2) = (
            random_point(&mut rng)?,
            random_point(&mut rng)?,
            random_point(&mut rng)?,
            random_point(&mut rng)?,
        );
        let lhs = distance(&y1.sub(&x1)?, &y2.sub(&x2)?)?;
        let rhs = product_distance(&x1, &y1, &x2, &y2)?;
        if lhs > rhs * (1.0 + 4.0 * f64::EPSILON) {
            violations += 1;
        }
    }
    checks.add(
        "difference map 1-Lipschitz",
        violations == 0,
        format!("{violations} violations in {pairs} pairs"),
    );

    let r = resolve(THM22_DUST, &["M", "X"], seed)?;
    let (m, x) = (r.set("M"), r.set("X"));
    let k = minkowski_difference(m, x, usize::MAX)?;
    let x_cfg = r.scenario.estimator.expect("bundled estimator");
    let mut data = Vec::new();
    for method in [CountMethod::Packing, CountMethod::Boxes] {
        let mk_cfg = EstimatorConfig::new(0.2, 0.01, 5, method);
        let dk = estimate_dimension(&k.points, &mk_cfg)?.slope;
        let dm = estimate_dimension(m, &mk_cfg)?.slope;
        let dx = estimate_dimension(x, &EstimatorConfig { method, ..x_cfg })?.slope;
        checks.add(
            format!("sub-additivity ({method})"),
            dk <= dm + dx + 0.15,
            format!("K {dk:.4} <= M {dm:.4} + X {dx:.4} + 0.15"),
        );
        data.push(json!({ "method": method, "k": dk, "m": dm, "x": dx, "k_points": k.points.len() }));
    }
    Ok(checks.report("cspace-props", seed, json!({ "lipschitz_pairs": pairs, "violations": violations, "subadditivity": data })))
}

fn tube_bound(seed: u64) -> Result<DemoReport> {
    let mut checks = Checks::default();
    let mut data = Vec::new();
    for name in TUBE_FIXTURES {
        let t = run_tube(name, CountMethod::Packing)?;
        checks.add(
            format!("{name}: dimension bound"),
            t.bound.satisfied,
            format!("{:.4} <= {:.4} + 0.2", t.bound.dim_tube_est, t.bound.bound),
        );
        checks.add(
            format!("{name}: orthonormal frame"),
            t.max_normal_tangent_dot <= 1e-9 && t.max_normal_length_error <= 1e-12,
            format!("{:.1e}, {:.1e}", t.max_normal_tangent_dot, t.max_normal_length_error),
        );
        checks.add(
            format!("{name}: projection and embedding"),
            t.projection_exact && t.embedded,
            format!("exact {}, embedded {}", t.projection_exact, t.embedded),
        );
        data.push(serde_json::to_value(&t)?);
    }
    Ok(checks.report("tube-bound", seed, Value::Array(data)))
}

fn determinism(seed: u64) -> Result<DemoReport> {
    let mut checks = Checks::default();
    for name in DEMOS.iter().filter(|&&d| d != "determinism") {
        let a = to_json(&run_demo(name, seed)?)?;
        let b = to_json(&run_demo(name, seed)?)?;
        checks.add(format!("{name} rerun identical"), a == b, format!("{} bytes", a.len()));
    }
    Ok(checks.report("determinism", seed, Value::Null))
}
