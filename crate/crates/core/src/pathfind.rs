//! Piecewise-linear translation paths that start at the origin and avoid a
//! configuration-space obstacle `K` for every positive time.
//!
//! Starting from an endpoint `b1`, waypoints are placed on spheres whose radii
//! halve at each step, each one joined to the previous by a segment with
//! clearance at least `epsilon` from `K`. Once the radius drops to a quarter
//! of the origin's clearance the path runs straight into the origin, inside a
//! ball that `K` does not reach.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cspace::CSpaceObstacle;
use crate::error::{Error, Result};
use crate::geom::{check_dims, dist, Point, PointCloud};
use crate::index::Obstacle;

/// Default number of sphere candidates tried per waypoint.
pub const DEFAULT_MAX_TRIES: usize = 4096;

/// `alpha: [0, 1] -> R^n`, affine between knots, `alpha(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct PolyPath {
    vertices: Vec<Point>,
    knots: Vec<f64>,
    epsilon: f64,
    terminal_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    vertices: Vec<Point>,
    knots: Vec<f64>,
    epsilon: f64,
    #[serde(default)]
    terminal_radius: f64,
}

impl TryFrom<RawPath> for PolyPath {
    type Error = Error;

    fn try_from(raw: RawPath) -> Result<Self> {
        PolyPath::new(raw.vertices, raw.knots, raw.epsilon, raw.terminal_radius)
    }
}

impl From<PolyPath> for RawPath {
    fn from(p: PolyPath) -> Self {
        RawPath {
            vertices: p.vertices,
            knots: p.knots,
            epsilon: p.epsilon,
            terminal_radius: p.terminal_radius,
        }
    }
}

impl PolyPath {
    pub fn new(vertices: Vec<Point>, knots: Vec<f64>, epsilon: f64, terminal_radius: f64) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::param("vertices", "a path needs at least two vertices"));
        }
        if !vertices[0].is_origin() {
            return Err(Error::param("vertices", "the first vertex must be the origin"));
        }
        let dim = vertices[0].dim();
        for v in &vertices {
            check_dims(dim, v.dim())?;
        }
        if knots.len() != vertices.len() {
            return Err(Error::param("knots", "one knot per vertex"));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return Err(Error::param("knots", "knots must run from 0 to 1"));
        }
        if !knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::param("knots", "knots must be strictly increasing"));
        }
        Ok(PolyPath {
            vertices,
            knots,
            epsilon,
            terminal_radius,
        })
    }

    /// Knots proportional to arc length.
    fn from_vertices(vertices: Vec<Point>, epsilon: f64, terminal_radius: f64) -> Result<Self> {
        let mut cumulative = vec![0.0];
        for w in vertices.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + dist(w[0].coords(), w[1].coords()));
        }
        let total = *cumulative.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::param("vertices", "path has zero length"));
        }
        let n = cumulative.len();
        let knots = cumulative
            .iter()
            .enumerate()
            .map(|(i, c)| if i + 1 == n { 1.0 } else { c / total })
            .collect();
        PolyPath::new(vertices, knots, epsilon, terminal_radius)
    }

    /// The segment from the origin to `end`.
    pub fn straight(end: Point, epsilon: f64) -> Result<Self> {
        let origin = Point::origin(end.dim());
        PolyPath::new(vec![origin, end], vec![0.0, 1.0], epsilon, 0.0)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Norm of the vertex where the path turns straight into the origin.
    pub fn terminal_radius(&self) -> f64 {
        self.terminal_radius
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn endpoint(&self) -> &Point {
        self.vertices.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| dist(w[0].coords(), w[1].coords()))
            .sum()
    }

    /// Largest vertex norm, which bounds `|alpha(t)|` for every `t`.
    pub fn max_norm(&self) -> f64 {
        self.vertices.iter().map(Point::norm).fold(0.0, f64::max)
    }

    pub fn evaluate(&self, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange { what: "t", value: t });
        }
        let i = self
            .knots
            .partition_point(|&k| k <= t)
            .clamp(1, self.knots.len() - 1);
        let (k0, k1) = (self.knots[i - 1], self.knots[i]);
        let s = ((t - k0) / (k1 - k0)).clamp(0.0, 1.0);
        Ok(self.vertices[i - 1].lerp(&self.vertices[i], s))
    }

    /// All knots plus a uniform refinement so consecutive times are at most
    /// `spacing` apart in arc length.
    pub fn sample_times(&self, spacing: f64) -> Vec<f64> {
        let total = self.length();
        let mut times = Vec::new();
        for (i, w) in self.vertices.windows(2).enumerate() {
            let len = dist(w[0].coords(), w[1].coords());
            let steps = ((len / spacing).ceil() as usize).max(1);
            let (k0, k1) = (self.knots[i], self.knots[i + 1]);
            for j in 0..steps {
                times.push(k0 + (k1 - k0) * j as f64 / steps as f64);
            }
        }
        times.push(1.0);
        debug_assert!(total > 0.0);
        times
    }
}

/// `alpha(t)` for a path.
pub fn evaluate_path(path: &PolyPath, t: f64) -> Result<Point> {
    path.evaluate(t)
}

/// Deterministic low-discrepancy directions on the unit sphere of `R^dim`,
/// shifted by a seeded random offset.
#[derive(Debug, Clone)]
pub struct SphereSequence {
    dim: usize,
    alphas: Vec<f64>,
    offset: Vec<f64>,
    k: u64,
}

/// Positive root of `x^(d+1) = x + 1`.
fn generalized_golden(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

impl SphereSequence {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1);
        let uniforms = match dim {
            1 => 1,
            2 => 1,
            3 => 2,
            d => 2 * d.div_ceil(2),
        };
        let g = generalized_golden(uniforms);
        let alphas = (1..=uniforms).map(|i| g.powi(-(i as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset = (0..uniforms).map(|_| rng.gen::<f64>()).collect();
        SphereSequence {
            dim,
            alphas,
            offset,
            k: 0,
        }
    }

    fn uniforms(&self, k: u64) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.offset)
            .map(|(a, o)| (o + a * k as f64).fract())
            .collect()
    }

    /// Unit vector number `k` of the sequence.
    pub fn direction(&self, k: u64) -> Vec<f64> {
        use std::f64::consts::TAU;
        let u = self.uniforms(k);
        let v = match self.dim {
            1 => vec![if u[0] < 0.5 { 1.0 } else { -1.0 }],
            2 => vec![(TAU * u[0]).cos(), (TAU * u[0]).sin()],
            3 => {
                let z = 1.0 - 2.0 * u[0];
                let r = (1.0 - z * z).max(0.0).sqrt();
                vec![r * (TAU * u[1]).cos(), r * (TAU * u[1]).sin(), z]
            }
            d => {
                // Box-Muller on pairs of uniforms, then normalize.
                let mut g = Vec::with_capacity(u.len());
                for pair in u.chunks(2) {
                    let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
                    g.push(r * (TAU * pair[1]).cos());
                    g.push(r * (TAU * pair[1]).sin());
                }
                g.truncate(d);
                g
            }
        };
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            let mut e = vec![0.0; self.dim];
            e[0] = 1.0;
            return e;
        }
        v.iter().map(|x| x / norm).collect()
    }
}

impl Iterator for SphereSequence {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let d = self.direction(self.k);
        self.k += 1;
        Some(d)
    }
}

fn on_sphere(direction: &[f64], radius: f64) -> Point {
    Point::from_vec(direction.iter().map(|u| radius * u).collect())
}

const BATCH: usize = 64;

/// A configuration-space obstacle prepared for path queries at clearance
/// `epsilon`.
#[derive(Debug)]
pub struct Planner<'a> {
    obstacle: Obstacle<'a>,
    dim: usize,
    epsilon: f64,
    max_tries: usize,
}

impl<'a> Planner<'a> {
    pub fn new(k: &'a CSpaceObstacle, epsilon: f64) -> Result<Self> {
        Self::for_cloud(&k.points, epsilon)
    }

    pub fn for_cloud(cloud: &'a PointCloud, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        Ok(Planner {
            obstacle: Obstacle::new(cloud, epsilon),
            dim: cloud.ambient_dim,
            epsilon,
            max_tries: DEFAULT_MAX_TRIES,
        })
    }

    pub fn with_max_tries(mut self, max_tries: usize) -> Self {
        self.max_tries = max_tries;
        self
    }

    pub fn obstacle(&self) -> &Obstacle<'a> {
        &self.obstacle
    }

    pub fn origin_clearance(&self) -> f64 {
        self.obstacle.nearest_raw(&vec![0.0; self.dim], &vec![0.0; self.dim], None).0
    }

    pub fn point_clearance(&self, p: &Point) -> Result<f64> {
        self.obstacle.point_distance(p)
    }

    /// Clearance of the whole polyline (exact, not sampled).
    pub fn path_clearance(&self, path: &PolyPath) -> Result<f64> {
        check_dims(self.dim, path.dim())?;
        Ok(path
            .vertices
            .windows(2)
            .map(|w| self.obstacle.nearest_raw(w[0].coords(), w[1].coords(), None).0)
            .fold(f64::INFINITY, f64::min))
    }

    /// First candidate on the sphere of `radius` accepted by `accept`;
    /// candidates are tested in parallel batches, lowest index wins.
    fn search_sphere(
        &self,
        radius: f64,
        seed: u64,
        accept: impl Fn(&Point) -> bool + Sync,
    ) -> Result<Point> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::OutOfRange { what: "radius", value: radius });
        }
        let seq = SphereSequence::new(self.dim, seed);
        let mut start = 0usize;
        while start < self.max_tries {
            let end = (start + BATCH).min(self.max_tries);
            let found = (start..end)
                .into_par_iter()
                .map(|k| on_sphere(&seq.direction(k as u64), radius))
                .find_first(|b| accept(b));
            if let Some(b) = found {
                return Ok(b);
            }
            start = end;
        }
        Err(Error::NoWaypointFound {
            radius,
            tries: self.max_tries,
        })
    }

    /// A point `b` with `|b| = radius` whose segment from `prev` keeps
    /// clearance `epsilon` from the obstacle.
    pub fn find_sphere_waypoint(&self, radius: f64, prev: &Point, seed: u64) -> Result<Point> {
        check_dims(self.dim, prev.dim())?;
        let eps = self.epsilon;
        self.search_sphere(radius, seed, |b| {
            self.obstacle.nearest_raw(prev.coords(), b.coords(), None).0 >= eps
        })
    }

    /// A point `b` with `|b| = radius` and point clearance `epsilon`.
    pub fn find_clear_point(&self, radius: f64, seed: u64) -> Result<Point> {
        let eps = self.epsilon;
        self.search_sphere(radius, seed, |b| {
            self.obstacle.nearest_raw(b.coords(), b.coords(), None).0 >= eps
        })
    }

    /// Path ending at `b1`, clear of the obstacle for every `t > 0`.
    pub fn build_escape_path(&self, b1: &Point, seed: u64) -> Result<PolyPath> {
        check_dims(self.dim, b1.dim())?;
        let eps = self.epsilon;
        let r1 = b1.norm();
        if !(r1 > 0.0) {
            return Err(Error::param("b1", "endpoint must differ from the origin"));
        }
        let d0 = self.origin_clearance();
        if d0 <= 2.0 * eps {
            return Err(Error::ObstacleAtOrigin {
                clearance: d0,
                epsilon: eps,
            });
        }
        let c1 = self.point_clearance(b1)?;
        if c1 < eps {
            return Err(Error::TargetBlocked {
                clearance: c1,
                epsilon: eps,
            });
        }
        let origin = Point::origin(self.dim);
        if self.obstacle.nearest_raw(origin.coords(), b1.coords(), None).0 >= eps {
            return PolyPath::straight(b1.clone(), eps);
        }

        let mut outward = vec![b1.clone()];
        let mut radius = r1;
        let mut level = 0u64;
        while radius > d0 / 4.0 {
            radius /= 2.0;
            level += 1;
            let prev = outward.last().unwrap();
            let b = self.find_sphere_waypoint(radius, prev, seed.wrapping_add(level))?;
            outward.push(b);
        }
        let terminal_radius = outward.last().unwrap().norm();
        let mut vertices = vec![origin];
        vertices.extend(outward.into_iter().rev());
        PolyPath::from_vertices(vertices, eps, terminal_radius)
    }

    /// Path whose endpoint is exactly `target_offset`.
    pub fn anchored_escape_path(&self, target_offset: &Point, seed: u64) -> Result<PolyPath> {
        check_dims(self.dim, target_offset.dim())?;
        let c = self.point_clearance(target_offset)?;
        if c < self.epsilon {
            return Err(Error::TargetBlocked {
                clearance: c,
                epsilon: self.epsilon,
            });
        }
        self.build_escape_path(target_offset, seed)
    }

    /// Path that never leaves the ball of radius `max_displacement`.
    pub fn small_displacement_path(&self, max_displacement: f64, seed: u64) -> Result<PolyPath> {
        if !(max_displacement > 4.0 * self.epsilon) {
            return Err(Error::OutOfRange {
                what: "max_displacement (must exceed 4 * epsilon)",
                value: max_displacement,
            });
        }
        let b1 = self.find_clear_point(max_displacement / 2.0, seed)?;
        self.build_escape_path(&b1, seed)
    }
}

pub fn find_sphere_waypoint(
    k: &CSpaceObstacle,
    radius: f64,
    prev: &Point,
    epsilon: f64,
    seed: u64,
    max_tries: usize,
) -> Result<Point> {
    Planner::new(k, epsilon)?
        .with_max_tries(max_tries)
        .find_sphere_waypoint(radius, prev, seed)
}

pub fn build_escape_path(k: &CSpaceObstacle, b1: &Point, epsilon: f64, seed: u64) -> Result<PolyPath> {
    Planner::new(k, epsilon)?.build_escape_path(b1, seed)
}

pub fn anchored_escape_path(
    k: &CSpaceObstacle,
    target_offset: &Point,
    epsilon: f64,
    seed: u64,
) -> Result<PolyPath> {
    Planner::new(k, epsilon)?.anchored_escape_path(target_offset, seed)
}

pub fn small_displacement_path(
    k: &CSpaceObstacle,
    max_displacement: f64,
    epsilon: f64,
    seed: u64,
) -> Result<PolyPath> {
    Planner::new(k, epsilon)?.small_displacement_path(max_displacement, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::seg_dist;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn k_of(pts: Vec<Point>, dim: usize) -> CSpaceObstacle {
        CSpaceObstacle {
            points: PointCloud::new(dim, pts, 1e-3, "K").unwrap(),
            source_pairs: None,
            m_label: "M".into(),
            x_label: "X".into(),
            subsampling: None,
        }
    }

    fn brute_clearance(p: &Point, k: &CSpaceObstacle) -> f64 {
        k.points
            .points
            .iter()
            .map(|q| dist(p.coords(), q.coords()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sphere shell of radius 1 with a cap of angular radius `cap_deg` around
    /// +z removed.
    fn shell_with_cap(spacing: f64, cap_deg: f64) -> Vec<Point> {
        let s = crate::setgen::manifold_samples(
            &crate::setgen::Manifold::Sphere {
                center: Point::origin(3),
                radius: 1.0,
            },
            spacing,
        )
        .unwrap();
        let cos_cap = cap_deg.to_radians().cos();
        s.points.into_iter().filter(|p| p[2] < cos_cap).collect()
    }

    #[test]
    fn empty_obstacle_accepts_first_candidate() {
        let k = k_of(vec![], 3);
        let b = find_sphere_waypoint(&k, 2.5, &pt(&[5.0, 0.0, 0.0]), 0.1, 7, 10).unwrap();
        assert_relative_eq!(b.norm(), 2.5, max_relative = 1e-15);
        let seq = SphereSequence::new(3, 7);
        assert_eq!(b, on_sphere(&seq.direction(0), 2.5));
    }

    #[test]
    fn waypoint_found_inside_the_cap() {
        let k = k_of(shell_with_cap(0.05, 30.0), 3);
        let prev = pt(&[0.0, 0.0, 2.0]);
        let eps = 0.05;
        let b = find_sphere_waypoint(&k, 1.0, &prev, eps, 1, 20000).unwrap();
        assert_relative_eq!(b.norm(), 1.0, max_relative = 1e-15);
        // exhaustive clearance check of the accepted segment
        let c = k
            .points
            .points
            .iter()
            .map(|q| seg_dist(prev.coords(), b.coords(), q.coords()))
            .fold(f64::INFINITY, f64::min);
        assert!(c >= eps);
        assert!(b[2] > 30f64.to_radians().cos());
    }

    #[test]
    fn dense_shell_has_no_waypoint() {
        let k = k_of(shell_with_cap(0.02, 0.0), 3);
        let r = find_sphere_waypoint(&k, 1.0, &pt(&[0.0, 0.0, 2.0]), 0.05, 1, 500);
        assert!(matches!(r, Err(Error::NoWaypointFound { tries: 500, .. })));
    }

    #[test]
    fn empty_obstacle_short_circuits() {
        let k = k_of(vec![], 3);
        let b1 = pt(&[1.0, 0.0, 0.0]);
        let path = build_escape_path(&k, &b1, 0.01, 0).unwrap();
        assert_eq!(path.vertices(), &[Point::origin(3), b1]);
        assert_eq!(path.knots(), &[0.0, 1.0]);
    }

    #[test]
    fn single_blocking_point_is_avoided() {
        let obstacle = pt(&[0.5, 0.01, 0.0]);
        let k = k_of(vec![obstacle.clone()], 3);
        let eps = 0.02;
        let path = build_escape_path(&k, &pt(&[1.0, 0.0, 0.0]), eps, 3).unwrap();
        // dense sampling at eps / 4 in arc length
        let times = path.sample_times(eps / 4.0);
        let d0 = brute_clearance(&Point::origin(3), &k);
        let floor = eps.min(d0 / 2.0 - path.terminal_radius());
        for &t in times.iter().filter(|&&t| t > 0.0) {
            let p = path.evaluate(t).unwrap();
            assert!(dist(p.coords(), obstacle.coords()) >= floor - 1e-9, "t = {t}");
        }
        assert!(path.vertices().len() > 2);
    }

    #[test]
    fn obstacle_at_origin_is_reported() {
        let k = k_of(vec![pt(&[0.01, 0.0])], 2);
        assert!(matches!(
            build_escape_path(&k, &pt(&[1.0, 0.0]), 0.01, 0),
            Err(Error::ObstacleAtOrigin { .. })
        ));
    }

    #[test]
    fn anchored_examples() {
        let k = k_of(vec![], 2);
        let target = pt(&[0.0, 1.0]);
        let path = anchored_escape_path(&k, &target, 0.01, 0).unwrap();
        assert_eq!(path.evaluate(1.0).unwrap(), target);

        let k = k_of(vec![pt(&[0.3, 0.71]), pt(&[2.0, 2.0])], 2);
        let target = pt(&[0.3, 0.7]);
        assert!(matches!(
            anchored_escape_path(&k, &target, 0.05, 0),
            Err(Error::TargetBlocked { .. })
        ));
    }

    #[test]
    fn small_displacement_examples() {
        let k = k_of(vec![], 3);
        let path = small_displacement_path(&k, 0.1, 0.01, 0).unwrap();
        for t in path.sample_times(0.001) {
            assert!(path.evaluate(t).unwrap().norm() <= 0.1);
        }
        assert!(path.max_norm() <= 0.1);
        assert!(matches!(
            small_displacement_path(&k, 0.03, 0.01, 0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn evaluation_examples() {
        let v = vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[1.0, 3.0])];
        let path = PolyPath::from_vertices(v, 0.1, 0.0).unwrap();
        assert_eq!(path.knots(), &[0.0, 0.25, 1.0]);
        assert_eq!(path.evaluate(0.0).unwrap(), Point::origin(2));
        assert_eq!(path.evaluate(1.0).unwrap(), pt(&[1.0, 3.0]));
        assert_eq!(path.evaluate(0.125).unwrap(), pt(&[0.5, 0.0]));
        assert_eq!(path.evaluate(0.625).unwrap(), pt(&[1.0, 1.5]));
        assert!(path.evaluate(1.5).is_err());
        assert!(path.evaluate(-0.1).is_err());
    }

    #[test]
    fn path_json_validation() {
        let ok = r#"{"vertices":[[0.0,0.0],[1.0,0.0]],"knots":[0.0,1.0],"epsilon":0.1}"#;
        assert!(serde_json::from_str::<PolyPath>(ok).is_ok());
        let not_origin = r#"{"vertices":[[0.1,0.0],[1.0,0.0]],"knots":[0.0,1.0],"epsilon":0.1}"#;
        assert!(serde_json::from_str::<PolyPath>(not_origin).is_err());
        let bad_knots = r#"{"vertices":[[0.0,0.0],[1.0,0.0],[2.0,0.0]],"knots":[0.0,0.7,0.5],"epsilon":0.1}"#;
        assert!(serde_json::from_str::<PolyPath>(bad_knots).is_err());
    }

    #[test]
    fn sphere_sequence_is_unit_and_seeded() {
        for dim in 1..=5 {
            let a: Vec<_> = SphereSequence::new(dim, 9).take(50).collect();
            let b: Vec<_> = SphereSequence::new(dim, 9).take(50).collect();
            assert_eq!(a, b);
            for d in &a {
                assert_eq!(d.len(), dim);
                assert_relative_eq!(d.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
        let c: Vec<_> = SphereSequence::new(3, 10).take(5).collect();
        let a: Vec<_> = SphereSequence::new(3, 9).take(5).collect();
        assert_ne!(a, c);
    }

    fn random_blockers(seed: u64) -> CSpaceObstacle {
        let w = crate::Window::new(pt(&[0.3, -0.4, -0.4]), pt(&[1.2, 0.4, 0.4])).unwrap();
        let c = crate::setgen::random_dust(3, 60, &w, seed).unwrap();
        k_of(c.points, 3)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn halving_paths_avoid_and_halve(seed in 0u64..10_000) {
            let k = random_blockers(seed);
            let eps = 0.01;
            let b1 = pt(&[1.6, 0.0, 0.0]);
            let planner = Planner::new(&k, eps).unwrap();
            let Ok(path) = planner.build_escape_path(&b1, seed) else {
                // b1 itself may be blocked by a random sample
                prop_assume!(false);
                unreachable!()
            };
            let v = path.vertices();
            prop_assert!(v[0].is_origin());
            prop_assert_eq!(path.endpoint(), &b1);
            for i in 1..v.len() - 1 {
                let ratio = v[i + 1].norm() / (2.0 * v[i].norm());
                prop_assert!((ratio - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(path.max_norm(), b1.norm());

            let d0 = planner.origin_clearance();
            let floor = eps.min(d0 / 2.0 - path.terminal_radius());
            for t in path.sample_times(eps / 4.0) {
                if t == 0.0 { continue; }
                let p = path.evaluate(t).unwrap();
                prop_assert!(brute_clearance(&p, &k) >= floor - 1e-9);
            }
            prop_assert_eq!(planner.build_escape_path(&b1, seed).unwrap(), path);
        }
    }
}
