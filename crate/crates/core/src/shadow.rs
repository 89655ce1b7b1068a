//! Straight escape segments from a source point to a target set.
//!
//! Every obstacle sample inside the cone over the target casts a shadow: the
//! target sample whose ray from the source passes through it. Radial
//! projection onto the target is Lipschitz outside a ball around the source
//! with constant `reach / safe_radius`, so an obstacle thickened by `epsilon`
//! can only shadow targets within `lipschitz_bound * epsilon` of the shadow of
//! its sample. A target left uncovered is a candidate escape; the segment to it
//! is then checked against the obstacle directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{check_dims, dist, segment_clearance, Point, PointCloud, Segment};
use crate::index::Obstacle;

#[derive(Debug, Clone, PartialEq)]
pub struct ConeFrame {
    pub source: Point,
    pub target: PointCloud,
    /// Radius of a ball around the source that misses the obstacle.
    pub safe_radius: f64,
    /// Largest distance from the source to a target sample.
    pub reach: f64,
    dirs: Vec<Vec<f64>>,
    lens: Vec<f64>,
}

/// Ray match returned by [`ConeFrame::cone_membership`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeHit {
    /// Position along the ray, `p = t * s + (1 - t) * y`.
    pub t: f64,
    pub index: usize,
    /// Angle between the rays towards `p` and towards the target sample.
    pub angle: f64,
}

/// Sets up the cone over `target` with vertex `source`.
///
/// The safe radius is half the distance from the source to the nearest
/// obstacle sample, capped at half the reach; with no obstacle it is half the
/// reach.
pub fn make_cone_frame(source: &Point, target: &PointCloud, obstacle: &PointCloud) -> Result<ConeFrame> {
    check_dims(source.dim(), target.ambient_dim)?;
    check_dims(source.dim(), obstacle.ambient_dim)?;
    if target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let s = source.coords();
    let mut dirs = Vec::with_capacity(target.len());
    let mut lens = Vec::with_capacity(target.len());
    for y in &target.points {
        let len = dist(s, y.coords());
        if len == 0.0 {
            return Err(Error::SourceOnTarget);
        }
        dirs.push(y.coords().iter().zip(s).map(|(a, b)| (a - b) / len).collect());
        lens.push(len);
    }
    let reach = lens.iter().copied().fold(0.0, f64::max);
    let safe_radius = if obstacle.is_empty() {
        reach / 2.0
    } else {
        let nearest = Obstacle::exhaustive(obstacle).point_distance(source)?;
        if nearest <= obstacle.resolution {
            return Err(Error::SourceTooClose {
                distance: nearest,
                resolution: obstacle.resolution,
            });
        }
        nearest.min(reach) / 2.0
    };
    Ok(ConeFrame {
        source: source.clone(),
        target: target.clone(),
        safe_radius,
        reach,
        dirs,
        lens,
    })
}

/// Angle between unit vectors, stable for nearly parallel inputs.
fn unit_angle(u: &[f64], w: &[f64]) -> f64 {
    let chord = dist(u, w);
    2.0 * (chord / 2.0).min(1.0).asin()
}

impl ConeFrame {
    /// Ratio of reach to safe radius.
    pub fn lipschitz_bound(&self) -> f64 {
        self.reach / self.safe_radius
    }

    fn hit_raw(&self, p: &[f64], angular_tol: f64) -> Option<ConeHit> {
        let s = self.source.coords();
        let rho = dist(s, p);
        if rho == 0.0 {
            return None;
        }
        let u: Vec<f64> = p.iter().zip(s).map(|(a, b)| (a - b) / rho).collect();
        let mut best: Option<ConeHit> = None;
        for (i, (w, &len)) in self.dirs.iter().zip(&self.lens).enumerate() {
            if rho > len {
                continue;
            }
            let angle = unit_angle(&u, w);
            if angle <= angular_tol && best.is_none_or(|b| angle < b.angle) {
                best = Some(ConeHit {
                    t: 1.0 - rho / len,
                    index: i,
                    angle,
                });
            }
        }
        best
    }

    /// `s + tau (y_i - s)`, a point of the cone on the ray towards target `i`.
    pub fn cone_point(&self, i: usize, tau: f64) -> Result<Point> {
        let y = self.target.points.get(i).ok_or(Error::OutOfRange {
            what: "target index",
            value: i as f64,
        })?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::OutOfRange { what: "tau", value: tau });
        }
        Ok(self.source.lerp(y, tau))
    }

    /// Distance from the source to target sample `i`.
    pub fn target_distance(&self, i: usize) -> f64 {
        self.lens[i]
    }

    /// Target sample whose ray from the source passes within `angular_tol`
    /// radians of `p`, with `p` between the source and that sample. The
    /// smallest angle wins; ties go to the lowest index.
    pub fn cone_membership(&self, p: &Point, angular_tol: f64) -> Result<Option<ConeHit>> {
        check_dims(self.source.dim(), p.dim())?;
        Ok(self.hit_raw(p.coords(), angular_tol))
    }

    /// The shadow of `a` on the target.
    pub fn project_to_target(&self, a: &Point, angular_tol: f64) -> Result<&Point> {
        check_dims(self.source.dim(), a.dim())?;
        let d = dist(self.source.coords(), a.coords());
        if d <= self.safe_radius {
            return Err(Error::InsideSafeBall {
                distance: d,
                safe_radius: self.safe_radius,
            });
        }
        let hit = self.hit_raw(a.coords(), angular_tol).ok_or(Error::NotInCone)?;
        Ok(&self.target.points[hit.index])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Escape,
    Covered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    /// The obstacle sample's shadow lies within `lipschitz_bound * epsilon`.
    Shadow,
    /// The target was unshadowed but the obstacle sample sits closer than
    /// `epsilon` to the segment from the source.
    Clearance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub target: usize,
    pub obstacle: usize,
    pub kind: WitnessKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeResult {
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_index: Option<usize>,
    /// Verified clearance of the escape segment; `null` when unbounded.
    #[serde(default)]
    pub clearance: Option<f64>,
    pub uncovered_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covered_certificate: Option<Vec<Witness>>,
    pub lipschitz_bound: f64,
    pub epsilon: f64,
}

/// Searches for a straight segment from `source` to a target sample whose
/// clearance from `obstacle` is at least `epsilon`.
pub fn find_escape_line(
    source: &Point,
    target: &PointCloud,
    obstacle: &PointCloud,
    epsilon: f64,
    angular_tol: f64,
) -> Result<EscapeResult> {
    if !(epsilon >= obstacle.resolution.max(target.resolution) && epsilon.is_finite()) {
        return Err(Error::param(
            "epsilon",
            format!(
                "{epsilon} is below the sampling resolution {}",
                obstacle.resolution.max(target.resolution)
            ),
        ));
    }
    if !(angular_tol > 0.0) {
        return Err(Error::param("angular_tol", "must be positive"));
    }
    let frame = make_cone_frame(source, target, obstacle)?;
    let lip = frame.lipschitz_bound();
    let blur = lip * epsilon;
    let s = source.coords();

    // Targets within the Lipschitz blur of each target.
    let near: Vec<Vec<usize>> = (0..target.len())
        .into_par_iter()
        .map(|i| {
            let yi = target.points[i].coords();
            (0..target.len())
                .filter(|&k| dist(yi, target.points[k].coords()) <= blur)
                .collect()
        })
        .collect();

    // Shadow of every obstacle sample outside the safe ball; order of the
    // result follows the obstacle index regardless of scheduling.
    let shadows: Vec<Option<usize>> = obstacle
        .points
        .par_iter()
        .map(|a| {
            if dist(s, a.coords()) <= frame.safe_radius {
                return None;
            }
            frame.hit_raw(a.coords(), angular_tol).map(|h| h.index)
        })
        .collect();

    let mut witness: Vec<Option<Witness>> = vec![None; target.len()];
    for (j, hit) in shadows.iter().enumerate() {
        let Some(i) = *hit else { continue };
        for &k in &near[i] {
            witness[k].get_or_insert(Witness {
                target: k,
                obstacle: j,
                kind: WitnessKind::Shadow,
            });
        }
    }

    let uncovered: Vec<usize> = (0..target.len()).filter(|&k| witness[k].is_none()).collect();
    let uncovered_fraction = uncovered.len() as f64 / target.len() as f64;

    let index = Obstacle::new(obstacle, epsilon);
    let mut ranked: Vec<(f64, Option<usize>, usize)> = uncovered
        .par_iter()
        .map(|&k| {
            let (c, arg) = index.nearest_raw(s, target.points[k].coords(), None);
            (c, arg, k)
        })
        .collect();
    ranked.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.2.cmp(&y.2)));

    // Shadow-covered targets come last. The blur constant is not a true
    // Lipschitz bound for targets seen at oblique incidence, so any of them
    // with enough clearance is still an escape.
    let mut confirm: Vec<(f64, Option<usize>, usize)> = (0..target.len())
        .into_par_iter()
        .filter(|&k| witness[k].is_some())
        .map(|k| {
            let (c, arg) = index.nearest_raw(s, target.points[k].coords(), None);
            (c, arg, k)
        })
        .filter(|&(c, _, _)| c >= epsilon)
        .collect();
    confirm.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.2.cmp(&y.2)));
    ranked.extend(confirm);

    for &(_, arg, k) in &ranked {
        let seg = Segment::new(source.clone(), target.points[k].clone())?;
        let verified = segment_clearance(&seg, obstacle, None)?;
        if verified >= epsilon {
            return Ok(EscapeResult {
                outcome: Outcome::Escape,
                segment: Some(seg),
                target_index: Some(k),
                clearance: verified.is_finite().then_some(verified),
                uncovered_fraction,
                covered_certificate: None,
                lipschitz_bound: lip,
                epsilon,
            });
        }
        if witness[k].is_none() {
            witness[k] = Some(Witness {
                target: k,
                obstacle: arg.expect("finite clearance has a nearest sample"),
                kind: WitnessKind::Clearance,
            });
        }
    }

    Ok(EscapeResult {
        outcome: Outcome::Covered,
        segment: None,
        target_index: None,
        clearance: None,
        uncovered_fraction,
        covered_certificate: Some(witness.into_iter().map(|w| w.expect("every target has a witness")).collect()),
        lipschitz_bound: lip,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setgen::{hyperplane_samples, manifold_samples, Manifold};
    use crate::Window;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn cloud(pts: &[&[f64]], res: f64) -> PointCloud {
        let dim = pts.first().map_or(2, |p| p.len());
        PointCloud::new(dim, pts.iter().map(|p| pt(p)).collect(), res, "t").unwrap()
    }

    fn empty(dim: usize) -> PointCloud {
        PointCloud::new(dim, vec![], 1e-3, "empty").unwrap()
    }

    #[test]
    fn frame_examples() {
        let s = pt(&[0.0, 0.0]);
        let f = make_cone_frame(&s, &cloud(&[&[0.0, 2.0]], 0.01), &cloud(&[&[1.0, 0.0]], 0.01)).unwrap();
        assert_eq!(f.safe_radius, 0.5);
        assert_eq!(f.reach, 2.0);
        assert_eq!(f.lipschitz_bound(), 4.0);

        let f = make_cone_frame(&s, &cloud(&[&[0.0, 2.0]], 0.01), &empty(2)).unwrap();
        assert_eq!(f.safe_radius, 1.0);

        let err = make_cone_frame(&s, &cloud(&[&[0.0, 2.0]], 0.01), &cloud(&[&[0.0, 0.0]], 0.01));
        assert!(matches!(err, Err(Error::SourceTooClose { .. })));
        let err = make_cone_frame(&s, &cloud(&[&[0.0, 0.0]], 0.01), &empty(2));
        assert_eq!(err, Err(Error::SourceOnTarget));
    }

    #[test]
    fn lipschitz_bound_is_a_quotient() {
        let s = pt(&[0.0, 0.0]);
        for k in [1.5, 3.0, 10.0] {
            let y = cloud(&[&[k, 0.0]], 0.01);
            let x = cloud(&[&[0.0, -2.0]], 0.01);
            let f = make_cone_frame(&s, &y, &x).unwrap();
            assert_relative_eq!(f.reach, f.safe_radius * f.lipschitz_bound(), max_relative = 1e-15);
        }
    }

    #[test]
    fn membership_examples() {
        let s = pt(&[0.0, 0.0]);
        let y = cloud(&[&[2.0, 0.0], &[0.0, 2.0]], 0.01);
        let f = make_cone_frame(&s, &y, &empty(2)).unwrap();

        let hit = f.cone_membership(&pt(&[0.0, 1.0]), 1e-6).unwrap().unwrap();
        assert_eq!(hit.index, 1);
        assert_relative_eq!(hit.t, 0.5, epsilon = 1e-15);

        assert!(f.cone_membership(&pt(&[-1.0, -1.0]), 0.1).unwrap().is_none());

        // ray through (1, 0.01) deviates from the x-axis by atan(0.01)
        let off = pt(&[1.0, 0.01]);
        let dev = 0.01f64.atan();
        let hit = f.cone_membership(&off, dev * 1.01).unwrap().unwrap();
        assert_eq!(hit.index, 0);
        assert_relative_eq!(hit.angle, dev, max_relative = 1e-9);
        assert!(f.cone_membership(&off, dev * 0.99).unwrap().is_none());

        // beyond the target sample along the ray
        assert!(f.cone_membership(&pt(&[3.0, 0.0]), 0.1).unwrap().is_none());
    }

    #[test]
    fn projection_examples() {
        let s = pt(&[0.0, 0.0]);
        let y = cloud(&[&[2.0, 1.0], &[-1.0, 2.0]], 0.01);
        let x = cloud(&[&[0.0, -1.0]], 0.01);
        let f = make_cone_frame(&s, &y, &x).unwrap();
        let y0 = &y.points[0];
        let a = s.lerp(y0, 0.7);
        assert_eq!(f.project_to_target(&a, 1e-9).unwrap(), y0);
        assert_eq!(f.project_to_target(y0, 1e-9).unwrap(), y0);
        let inside = s.lerp(y0, 0.1);
        assert!(matches!(
            f.project_to_target(&inside, 1e-9),
            Err(Error::InsideSafeBall { .. })
        ));
        assert_eq!(f.project_to_target(&pt(&[0.0, -3.0]), 1e-3), Err(Error::NotInCone));
    }

    #[test]
    fn empty_obstacle_escapes_everywhere() {
        let s = pt(&[0.0, -1.0]);
        let y = manifold_samples(
            &Manifold::Segment {
                a: pt(&[-1.0, 1.0]),
                b: pt(&[1.0, 1.0]),
            },
            0.1,
        )
        .unwrap();
        let r = find_escape_line(&s, &y, &empty(2), 0.1, 0.01).unwrap();
        assert_eq!(r.outcome, Outcome::Escape);
        assert_eq!(r.clearance, None);
        assert_eq!(r.uncovered_fraction, 1.0);
        assert_eq!(r.target_index, Some(0));
    }

    #[test]
    fn parallel_planes_cover_the_far_plane() {
        let wy = Window::cube(2, 0.0, 2.0).unwrap();
        let wx = Window::cube(2, -1.0, 3.0).unwrap();
        let y = hyperplane_samples(3, 0.0, 0.1, &wy).unwrap();
        let x = hyperplane_samples(3, 1.0, 0.1, &wx).unwrap();
        let s = pt(&[1.0, 1.0, 2.0]);
        let r = find_escape_line(&s, &y, &x, 0.2, 0.02).unwrap();
        assert_eq!(r.outcome, Outcome::Covered);
        let cert = r.covered_certificate.unwrap();
        assert_eq!(cert.len(), y.len());
        for (k, w) in cert.iter().enumerate() {
            assert_eq!(w.target, k);
        }
    }

    #[test]
    fn wall_with_gap_escapes_through_the_gap() {
        // obstacle: the line y = 1 minus the gap |x| < 0.2
        let mut pts = Vec::new();
        for i in -100..=100 {
            let xv = i as f64 * 0.01;
            if xv.abs() >= 0.2 {
                pts.push(pt(&[xv, 1.0]));
            }
        }
        let x = PointCloud::new(2, pts, 0.01, "wall").unwrap();
        let y = manifold_samples(
            &Manifold::Segment {
                a: pt(&[-1.0, 2.0]),
                b: pt(&[1.0, 2.0]),
            },
            0.01,
        )
        .unwrap();
        let s = pt(&[0.0, 0.0]);
        let r = find_escape_line(&s, &y, &x, 0.02, 0.005).unwrap();
        assert_eq!(r.outcome, Outcome::Escape);
        let seg = r.segment.unwrap();
        assert!(seg.b[0].abs() < 0.2);
        assert!(segment_clearance(&seg, &x, None).unwrap() >= 0.02);
        // the straight-up target is the best one
        assert_relative_eq!(seg.b[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_below_resolution_is_rejected() {
        let y = cloud(&[&[0.0, 2.0]], 0.1);
        let r = find_escape_line(&pt(&[0.0, 0.0]), &y, &empty(2), 0.05, 0.01);
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }

    fn arc_frame(radius: f64) -> (Point, PointCloud, ConeFrame) {
        let s = pt(&[0.3, -0.2]);
        let pts = (0..200)
            .map(|k| {
                let a = 0.2 + 1.2 * k as f64 / 199.0;
                pt(&[0.3 + radius * a.cos(), -0.2 + radius * a.sin()])
            })
            .collect();
        let y = PointCloud::new(2, pts, 0.02, "arc").unwrap();
        let x = cloud(&[&[0.3, -0.7]], 0.01);
        let f = make_cone_frame(&s, &y, &x).unwrap();
        (s, y, f)
    }

    #[test]
    fn oblique_targets_exceed_the_radial_bound() {
        // Grazing targets spread out by 1 / cos^2 of the incidence angle, so
        // reach / safe_radius underestimates the quotient there.
        let s = pt(&[0.0, 0.0]);
        let y = cloud(&[&[3.0, 1.0], &[2.99, 1.0]], 0.01);
        let x = cloud(&[&[0.0, -10.0]], 0.01);
        let f = make_cone_frame(&s, &y, &x).unwrap();
        let tau = 1.01 * f.safe_radius / f.target_distance(0);
        let a1 = f.cone_point(0, tau).unwrap();
        let a2 = f.cone_point(1, tau * f.target_distance(0) / f.target_distance(1)).unwrap();
        let lhs = dist(
            f.project_to_target(&a1, 1e-9).unwrap().coords(),
            f.project_to_target(&a2, 1e-9).unwrap().coords(),
        );
        let rhs = f.lipschitz_bound() * dist(a1.coords(), a2.coords());
        assert!(lhs > 2.0 * rhs);

        // The escape search does not rely on the constant for its answer.
        let r = find_escape_line(&s, &y, &x, 0.01, 1e-6).unwrap();
        assert_eq!(r.outcome, Outcome::Escape);
    }

    proptest! {
        // targets on an arc centred at the source: the shadow map is the radial
        // projection, whose Lipschitz constant outside the safe ball is R / r
        #[test]
        fn shadow_map_respects_lipschitz_bound(
            i in 0usize..200, j in 0usize..200,
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
        ) {
            let (s, y, f) = arc_frame(2.0);
            let lo = f.safe_radius / f.reach;
            let l1 = lo + (1.0 - lo) * (1.0 - t1) * 0.999 + 1e-3;
            let l2 = lo + (1.0 - lo) * (1.0 - t2) * 0.999 + 1e-3;
            let a1 = s.lerp(&y.points[i], l1);
            let a2 = s.lerp(&y.points[j], l2);
            let f1 = f.project_to_target(&a1, 1e-9).unwrap();
            let f2 = f.project_to_target(&a2, 1e-9).unwrap();
            let lhs = dist(f1.coords(), f2.coords());
            let rhs = f.lipschitz_bound() * dist(a1.coords(), a2.coords()) + 1e-9;
            prop_assert!(lhs <= rhs, "{lhs} > {rhs}");
        }

        #[test]
        fn projection_is_collinear_within_tolerance(
            px in -3.0f64..3.0, py in -3.0f64..3.0, tol in 0.001f64..0.2,
        ) {
            let (s, _, f) = arc_frame(2.0);
            let a = pt(&[px, py]);
            if let Ok(y) = f.project_to_target(&a, tol) {
                let u: Vec<f64> = a.coords().iter().zip(s.coords()).map(|(p, q)| p - q).collect();
                let w: Vec<f64> = y.coords().iter().zip(s.coords()).map(|(p, q)| p - q).collect();
                let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nw = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                let u: Vec<f64> = u.iter().map(|v| v / nu).collect();
                let w: Vec<f64> = w.iter().map(|v| v / nw).collect();
                prop_assert!(unit_angle(&u, &w) <= tol);
            }
        }

        #[test]
        fn escape_persists_under_smaller_epsilon(seed in 0u64..200, shrink in 0.1f64..1.0) {
            let w = Window::new(pt(&[-1.0, 0.5]), pt(&[1.0, 1.5])).unwrap();
            let x = crate::setgen::random_dust(2, 40, &w, seed).unwrap();
            let x = PointCloud { resolution: 0.005, ..x };
            let y = manifold_samples(
                &Manifold::Segment { a: pt(&[-1.0, 2.0]), b: pt(&[1.0, 2.0]) },
                0.02,
            ).unwrap();
            let s = pt(&[0.0, 0.0]);
            let eps = 0.05;
            let r = find_escape_line(&s, &y, &x, eps, 0.01).unwrap();
            if r.outcome == Outcome::Escape {
                prop_assert!(r.clearance.is_none_or(|c| c >= eps));
                let r2 = find_escape_line(&s, &y, &x, (eps * shrink).max(0.02), 0.01).unwrap();
                prop_assert_eq!(r2.outcome, Outcome::Escape);
            } else {
                let cert = r.covered_certificate.unwrap();
                prop_assert_eq!(cert.len(), y.len());
            }
        }
    }
}
