use dustmotion::boxdim::{estimate_dimension, CountMethod, EstimatorConfig};
use dustmotion::cspace::{dimension_gate, minkowski_difference};
use dustmotion::motion::{verify_anchor, verify_avoidance, verify_isometry, MotionPlan};
use dustmotion::pathfind::Planner;
use dustmotion::setgen::{cantor_dust, hyperplane_samples, manifold_samples, Manifold};
use dustmotion::shadow::{find_escape_line, Outcome};
use dustmotion::{segment_clearance, Point, PointCloud, Window};

fn p(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

fn dust_3d() -> PointCloud {
    cantor_dust(3, 1.0 / 9.0, 3)
        .unwrap()
        .transformed(0.6, &p(&[0.4, 0.4, 0.2]))
        .unwrap()
}

fn z_segment(len: f64) -> PointCloud {
    let m = Manifold::Segment {
        a: p(&[0.0, 0.0, 0.0]),
        b: p(&[0.0, 0.0, len]),
    };
    manifold_samples(&m, len / 63.0).unwrap()
}

#[test]
fn escape_segment_is_exhaustively_clear() {
    let x = cantor_dust(2, 1.0 / 3.0, 5).unwrap();
    let y = manifold_samples(
        &Manifold::Segment {
            a: p(&[-0.15, 1.5]),
            b: p(&[1.15, 1.5]),
        },
        1.3 / 499.0,
    )
    .unwrap();
    let eps = 2.0 * x.resolution;
    let r = find_escape_line(&p(&[0.5, -0.5]), &y, &x, eps, y.resolution / 1.0).unwrap();
    assert_eq!(r.outcome, Outcome::Escape);
    let seg = r.segment.unwrap();
    let clearance = segment_clearance(&seg, &x, None).unwrap();
    assert!(clearance >= eps, "{clearance} < {eps}");
    assert_eq!(Some(clearance), r.clearance);
}

#[test]
fn stacked_planes_cover_the_target() {
    let w = Window::cube(2, -1.0, 3.0).unwrap();
    let x = hyperplane_samples(3, 1.0, 0.1, &w).unwrap();
    let y = hyperplane_samples(3, 0.0, 0.1, &Window::cube(2, 0.0, 2.0).unwrap()).unwrap();
    let r = find_escape_line(&p(&[1.0, 1.0, 2.0]), &y, &x, 0.2, 0.02).unwrap();
    assert_eq!(r.outcome, Outcome::Covered);
    assert!(r.segment.is_none());
    assert_eq!(r.covered_certificate.unwrap().len(), y.len());
}

#[test]
fn thin_dust_gate_cspace_plan_verify() {
    let x = dust_3d();
    let m = z_segment(0.5);
    let est = estimate_dimension(
        &x,
        &EstimatorConfig::with_ratio(0.6 / 9.0 * 1.001, 1.0 / 9.0, 3, CountMethod::Packing),
    )
    .unwrap();
    assert!(dimension_gate(est.slope, 1.0, 3), "dim X {}", est.slope);

    let k = minkowski_difference(&m, &x, usize::MAX).unwrap();
    assert!(k.is_full_product());
    assert_eq!(k.points.len(), m.len() * x.len());

    let eps = 0.01;
    let planner = Planner::new(&k, eps).unwrap();
    let outer = k.points.points.iter().map(Point::norm).fold(0.0, f64::max);
    let b1 = planner.find_clear_point(outer + 2.0 * eps, 3).unwrap();
    let path = planner.build_escape_path(&b1, 3).unwrap();
    assert!(planner.path_clearance(&path).unwrap() >= eps);

    let plan = MotionPlan::new(m, path, x, eps).unwrap();
    assert!(verify_isometry(&plan, 21));
    let (ok, min) = verify_avoidance(&plan, 21).unwrap();
    assert!(ok && min >= eps);
}

#[test]
fn anchored_plan_hits_the_target() {
    let x = dust_3d();
    let m = z_segment(0.5);
    let k = minkowski_difference(&m, &x, usize::MAX).unwrap();
    let planner = Planner::new(&k, 0.01).unwrap();
    let (x0, y0) = (p(&[0.0, 0.0, 0.5]), p(&[1.5, 1.5, 0.75]));
    let path = planner.anchored_escape_path(&y0.sub(&x0).unwrap(), 1).unwrap();
    let plan = MotionPlan::new(m, path, x, 0.01).unwrap();
    assert!(verify_anchor(&plan, &x0, &y0).unwrap());
    assert!(verify_avoidance(&plan, 11).unwrap().0);
}

#[test]
fn planner_respects_displacement_budget() {
    let x = dust_3d();
    let m = z_segment(0.5);
    let k = minkowski_difference(&m, &x, usize::MAX).unwrap();
    let planner = Planner::new(&k, 0.01).unwrap();
    let path = planner.small_displacement_path(0.05, 0).unwrap();
    assert!(path.max_norm() <= 0.05);
    assert!(planner.path_clearance(&path).unwrap() >= 0.01);
}

#[test]
fn cloud_json_round_trip() {
    let x = dust_3d();
    let text = serde_json::to_string(&x).unwrap();
    let back: PointCloud = serde_json::from_str(&text).unwrap();
    assert_eq!(back, x);
}
