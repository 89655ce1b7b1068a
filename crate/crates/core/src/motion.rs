//! Translation motions `F(x, t) = x + alpha(t)` of a sampled manifold and
//! their verification against an obstacle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cspace::minkowski_difference;
use crate::error::{Error, Result};
use crate::geom::{check_dims, dist, Point, PointCloud};
use crate::index::Obstacle;
use crate::pathfind::PolyPath;

/// Product size up to which avoidance is cross-checked against the full `K`.
pub const DEFAULT_CROSS_CHECK_CAP: usize = 1 << 22;

/// Manifolds larger than this are checked on a seeded subsample of pairs.
const ISOMETRY_FULL_LIMIT: usize = 200;
const ISOMETRY_SEED: u64 = 0x150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub isometry_ok: bool,
    pub avoidance_ok: bool,
    /// `None` when the obstacle is empty.
    pub min_clearance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchored_target: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_ok: Option<bool>,
}

impl Verification {
    pub fn all_ok(&self) -> bool {
        self.isometry_ok && self.avoidance_ok && self.anchor_ok != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlan")]
pub struct MotionPlan {
    pub manifold: PointCloud,
    pub path: PolyPath,
    pub obstacle: PointCloud,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
}

#[derive(Deserialize)]
struct RawPlan {
    manifold: PointCloud,
    path: PolyPath,
    obstacle: PointCloud,
    epsilon: f64,
    #[serde(default)]
    verification: Option<Verification>,
}

impl TryFrom<RawPlan> for MotionPlan {
    type Error = Error;

    fn try_from(raw: RawPlan) -> Result<Self> {
        let mut plan = MotionPlan::new(raw.manifold, raw.path, raw.obstacle, raw.epsilon)?;
        plan.verification = raw.verification;
        Ok(plan)
    }
}

impl MotionPlan {
    pub fn new(manifold: PointCloud, path: PolyPath, obstacle: PointCloud, epsilon: f64) -> Result<Self> {
        check_dims(manifold.ambient_dim, obstacle.ambient_dim)?;
        check_dims(manifold.ambient_dim, path.dim())?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        Ok(MotionPlan {
            manifold,
            path,
            obstacle,
            epsilon,
            verification: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.manifold.ambient_dim
    }

    /// Times used by the avoidance sweep: all knots, arc-length refinement at
    /// `epsilon / 4`, and `t_samples` uniform times, `t = 0` excluded.
    pub fn sweep_times(&self, t_samples: usize) -> Vec<f64> {
        let mut times = self.path.sample_times(self.epsilon / 4.0);
        let n = t_samples.max(2);
        times.extend((1..n).map(|i| i as f64 / (n - 1) as f64));
        times.retain(|&t| t > 0.0);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    /// Runs every check, stores the record, and returns the avoidance details.
    pub fn verify(&mut self, t_samples: usize, anchor: Option<(&Point, &Point)>) -> Result<AvoidanceReport> {
        let isometry_ok = verify_isometry(self, t_samples);
        let report = avoidance_report(self, t_samples, DEFAULT_CROSS_CHECK_CAP)?;
        let (anchored_target, anchor_ok) = match anchor {
            Some((x0, y0)) => (Some(y0.clone()), Some(verify_anchor(self, x0, y0)?)),
            None => (None, None),
        };
        self.verification = Some(Verification {
            isometry_ok,
            avoidance_ok: report.ok,
            min_clearance: report.min_clearance.is_finite().then_some(report.min_clearance),
            anchored_target,
            anchor_ok,
        });
        Ok(report)
    }
}

/// `F(x, t) = x + alpha(t)`.
pub fn evaluate_motion(plan: &MotionPlan, x: &Point, t: f64) -> Result<Point> {
    check_dims(plan.dim(), x.dim())?;
    let shift = plan.path.evaluate(t)?;
    x.add(&shift)
}

fn uniform_times(t_samples: usize) -> Vec<f64> {
    let n = t_samples.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn isometry_pairs(len: usize) -> Vec<(usize, usize)> {
    if len <= ISOMETRY_FULL_LIMIT {
        (0..len)
            .flat_map(|i| (i + 1..len).map(move |j| (i, j)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(ISOMETRY_SEED);
        (0..ISOMETRY_FULL_LIMIT * ISOMETRY_FULL_LIMIT)
            .map(|_| (rng.gen_range(0..len), rng.gen_range(0..len)))
            .collect()
    }
}

/// Isometry check for an arbitrary motion `f(index, x, t)`.
pub fn verify_isometry_with<F>(manifold: &PointCloud, t_samples: usize, motion: F) -> bool
where
    F: Fn(usize, &Point, f64) -> Point + Sync,
{
    let pairs = isometry_pairs(manifold.len());
    let pts = &manifold.points;
    uniform_times(t_samples).into_par_iter().all(|t| {
        let moved: Vec<Point> = pts.iter().enumerate().map(|(i, x)| motion(i, x, t)).collect();
        pairs.iter().all(|&(i, j)| {
            let before = dist(pts[i].coords(), pts[j].coords());
            let after = dist(moved[i].coords(), moved[j].coords());
            // Four ulps of the operands entering each subtraction.
            let scale = pts[i].norm() + pts[j].norm() + moved[i].norm() + moved[j].norm();
            (after - before).abs() <= 4.0 * f64::EPSILON * scale
        })
    })
}

pub fn verify_isometry(plan: &MotionPlan, t_samples: usize) -> bool {
    let path = &plan.path;
    verify_isometry_with(&plan.manifold, t_samples, |_, x, t| {
        let shift = path.evaluate(t).expect("t in [0, 1]");
        Point::from_vec(x.coords().iter().zip(shift.coords()).map(|(a, b)| a + b).collect())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceReport {
    pub ok: bool,
    /// Minimum over sampled `(x, t)` of the distance from `F(x, t)` to the
    /// obstacle; infinite when the obstacle is empty.
    pub min_clearance: f64,
    /// The same minimum computed as `min_t dist(alpha(t), K)`.
    pub k_space_min: f64,
    pub k_is_full_product: bool,
    pub cross_check_ok: bool,
    pub time_samples: usize,
}

/// Avoidance sweep in both `M x X` space and `K` space.
///
/// With the full product the two minima agree up to rounding. With a
/// subsampled `K` the `K`-space minimum can only be larger.
pub fn avoidance_report(plan: &MotionPlan, t_samples: usize, cross_check_cap: usize) -> Result<AvoidanceReport> {
    let times = plan.sweep_times(t_samples);
    let shifts: Vec<Point> = times
        .iter()
        .map(|&t| plan.path.evaluate(t))
        .collect::<Result<_>>()?;

    let cell = plan.epsilon.max(plan.obstacle.resolution);
    let x_index = Obstacle::new(&plan.obstacle, cell);
    let manifold = &plan.manifold.points;
    let per_time_x: Vec<f64> = shifts
        .par_iter()
        .map(|a| {
            manifold
                .iter()
                .map(|x| {
                    let moved: Vec<f64> = x.coords().iter().zip(a.coords()).map(|(p, q)| p + q).collect();
                    x_index.nearest_raw(&moved, &moved, None).0
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let k = minkowski_difference(&plan.manifold, &plan.obstacle, cross_check_cap)?;
    let k_index = Obstacle::new(&k.points, cell);
    let per_time_k: Vec<f64> = shifts
        .par_iter()
        .map(|a| k_index.nearest_raw(a.coords(), a.coords(), None).0)
        .collect();

    let magnitude = plan.manifold.points.iter().map(Point::norm).fold(0.0, f64::max)
        + plan.obstacle.points.iter().map(Point::norm).fold(0.0, f64::max)
        + plan.path.max_norm();
    let tol = 8.0 * f64::EPSILON * magnitude.max(1.0);
    let full = k.is_full_product();
    let cross_check_ok = per_time_x.iter().zip(&per_time_k).all(|(&dx, &dk)| {
        if dx.is_infinite() || dk.is_infinite() {
            dx == dk
        } else if full {
            (dx - dk).abs() <= tol
        } else {
            dk >= dx - tol
        }
    });

    let min_clearance = per_time_x.iter().copied().fold(f64::INFINITY, f64::min);
    let k_space_min = per_time_k.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AvoidanceReport {
        ok: min_clearance >= plan.epsilon && cross_check_ok,
        min_clearance,
        k_space_min,
        k_is_full_product: full,
        cross_check_ok,
        time_samples: times.len(),
    })
}

/// `(ok, min_clearance)`; the minimum is infinite for an empty obstacle.
pub fn verify_avoidance(plan: &MotionPlan, t_samples: usize) -> Result<(bool, f64)> {
    let r = avoidance_report(plan, t_samples, DEFAULT_CROSS_CHECK_CAP)?;
    Ok((r.ok, r.min_clearance))
}

/// Whether `F(x0, 1)` lands on `y0` up to four ulps per coordinate.
pub fn verify_anchor(plan: &MotionPlan, x0: &Point, y0: &Point) -> Result<bool> {
    check_dims(plan.dim(), y0.dim())?;
    let end = evaluate_motion(plan, x0, 1.0)?;
    Ok(end
        .coords()
        .iter()
        .zip(x0.coords())
        .zip(y0.coords())
        .all(|((f, x), y)| (f - y).abs() <= 4.0 * f64::EPSILON * (x.abs() + y.abs())))
}
