//! Tubular thickening of a subset of an explicitly embedded manifold.
//!
//! A subset `Y` of an `n`-manifold `N` in `R^m` is thickened along unit
//! normals, `x + t v` with `|t| < epsilon`. The thickened set has box
//! dimension at most `dim Y + (m - n)`, which is checked numerically here
//! on a few analytic embeddings with closed-form normal frames.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxdim::{estimate_dimension, CountMethod, EstimatorConfig};
use crate::error::{Error, Result};
use crate::geom::{dist, dot, Point, PointCloud};
use crate::setgen::cantor_endpoints;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddedManifold {
    /// `c + r (cos u, sin u)`.
    CircleInR2 { center: [f64; 2], radius: f64 },
    /// `c + r (sin u cos v, sin u sin v, cos u)`, `u` in `[0, pi]`.
    SphereInR3 { center: [f64; 3], radius: f64 },
    /// Graph `(u, a sin(w u))` in the plane.
    CurveGraph { amplitude: f64, frequency: f64 },
}

/// Base point with tangent and unit normal bases.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub point: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

impl EmbeddedManifold {
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            EmbeddedManifold::CircleInR2 { .. } | EmbeddedManifold::CurveGraph { .. } => 1,
            EmbeddedManifold::SphereInR3 { .. } => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            EmbeddedManifold::CircleInR2 { .. } | EmbeddedManifold::CurveGraph { .. } => 2,
            EmbeddedManifold::SphereInR3 { .. } => 3,
        }
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.intrinsic_dim()
    }

    /// Largest `epsilon` for which the normal segments stay disjoint.
    pub fn reach(&self) -> f64 {
        match *self {
            EmbeddedManifold::CircleInR2 { radius, .. } | EmbeddedManifold::SphereInR3 { radius, .. } => radius,
            EmbeddedManifold::CurveGraph { amplitude, frequency } => {
                let k = amplitude.abs() * frequency * frequency;
                if k == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / k
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            EmbeddedManifold::CircleInR2 { center, radius } => {
                radius > 0.0 && radius.is_finite() && center.iter().all(|c| c.is_finite())
            }
            EmbeddedManifold::SphereInR3 { center, radius } => {
                radius > 0.0 && radius.is_finite() && center.iter().all(|c| c.is_finite())
            }
            EmbeddedManifold::CurveGraph { amplitude, frequency } => amplitude.is_finite() && frequency.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("manifold", "non-finite or non-positive shape parameter"))
        }
    }

    /// Frame at parameter `u` (length `intrinsic_dim`).
    pub fn frame(&self, u: &[f64]) -> Result<Frame> {
        self.validate()?;
        if u.len() != self.intrinsic_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.intrinsic_dim(),
                found: u.len(),
            });
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfRange {
                what: "manifold parameter",
                value: u.iter().copied().find(|x| !x.is_finite()).unwrap(),
            });
        }
        Ok(match *self {
            EmbeddedManifold::CircleInR2 { center, radius } => {
                let (s, c) = u[0].sin_cos();
                Frame {
                    point: vec![center[0] + radius * c, center[1] + radius * s],
                    tangents: vec![vec![-s, c]],
                    normals: vec![vec![c, s]],
                }
            }
            EmbeddedManifold::SphereInR3 { center, radius } => {
                let (polar, azimuth) = (u[0], u[1]);
                if !(0.0..=std::f64::consts::PI).contains(&polar) {
                    return Err(Error::OutOfRange {
                        what: "polar angle",
                        value: polar,
                    });
                }
                let (sp, cp) = polar.sin_cos();
                let (sa, ca) = azimuth.sin_cos();
                let n = vec![sp * ca, sp * sa, cp];
                Frame {
                    point: (0..3).map(|i| center[i] + radius * n[i]).collect(),
                    // The azimuthal direction is well defined even at the poles.
                    tangents: vec![vec![cp * ca, cp * sa, -sp], vec![-sa, ca, 0.0]],
                    normals: vec![n],
                }
            }
            EmbeddedManifold::CurveGraph { amplitude, frequency } => {
                let slope = amplitude * frequency * (frequency * u[0]).cos();
                Frame {
                    point: vec![u[0], amplitude * (frequency * u[0]).sin()],
                    tangents: vec![normalized(vec![1.0, slope])],
                    normals: vec![normalized(vec![-slope, 1.0])],
                }
            }
        })
    }

    /// Distance from `p` to the embedded manifold (closed form for circle and
    /// sphere; for the graph, the vertical offset bounds it from above).
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        match *self {
            EmbeddedManifold::CircleInR2 { center, radius } => (dist(p, &center) - radius).abs(),
            EmbeddedManifold::SphereInR3 { center, radius } => (dist(p, &center) - radius).abs(),
            EmbeddedManifold::CurveGraph { amplitude, frequency } => {
                (p[1] - amplitude * (frequency * p[0]).sin()).abs()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSample {
    pub point: Point,
    pub base: Point,
    pub t: f64,
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub samples: Vec<TubeSample>,
    pub epsilon: f64,
    pub normal_steps: usize,
}

impl Tube {
    /// The thickened set as a cloud whose resolution is the normal spacing.
    pub fn cloud(&self, label: impl Into<String>) -> Result<PointCloud> {
        let dim = self.samples.first().map_or(1, |s| s.point.dim());
        PointCloud::new(
            dim,
            self.samples.iter().map(|s| s.point.clone()).collect(),
            2.0 * self.epsilon / self.normal_steps as f64,
            label,
        )
    }
}

/// `x + t v` for base points `x` of `Y`, unit normals `v`, and
/// `t = -epsilon + (2k + 1) epsilon / normal_steps`, all inside `(-epsilon, epsilon)`.
pub fn tube_thicken(
    manifold: &EmbeddedManifold,
    y_params: &[Vec<f64>],
    epsilon: f64,
    normal_steps: usize,
) -> Result<Tube> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    if normal_steps < 2 {
        return Err(Error::param("normal_steps", "at least 2 levels are required"));
    }
    if epsilon >= manifold.reach() {
        return Err(Error::param("epsilon", "the tube would self-intersect"));
    }
    let frames: Vec<Frame> = y_params
        .par_iter()
        .map(|u| manifold.frame(u))
        .collect::<Result<_>>()?;
    let ts: Vec<f64> = (0..normal_steps)
        .map(|k| -epsilon + (2 * k + 1) as f64 * epsilon / normal_steps as f64)
        .collect();
    let samples = frames
        .par_iter()
        .flat_map_iter(|f| {
            let base = Point::from_vec(f.point.clone());
            let ts = &ts;
            f.normals.iter().flat_map(move |v| {
                let base = base.clone();
                ts.iter().map(move |&t| TubeSample {
                    point: Point::from_vec(base.coords().iter().zip(v).map(|(x, n)| x + t * n).collect()),
                    base: base.clone(),
                    t,
                    normal: v.clone(),
                })
            })
        })
        .collect();
    Ok(Tube {
        samples,
        epsilon,
        normal_steps,
    })
}

/// `pi(x + t v) = x`.
pub fn tube_project(sample: &TubeSample) -> &Point {
    &sample.base
}

/// Largest deviations of the frames at `y_params` from orthonormality:
/// `(max |v . tangent|, max ||v| - 1|)`.
pub fn frame_defects(manifold: &EmbeddedManifold, y_params: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut worst = (0.0f64, 0.0f64);
    for u in y_params {
        let f = manifold.frame(u)?;
        for v in &f.normals {
            worst.1 = worst.1.max((dot(v, v).sqrt() - 1.0).abs());
            for tan in &f.tangents {
                worst.0 = worst.0.max(dot(v, tan).abs());
            }
        }
    }
    Ok(worst)
}

/// No two samples closer than `1e-6` whose base points are more than
/// `10 epsilon` apart.
pub fn tube_is_embedded(tube: &Tube) -> bool {
    const TOUCH: f64 = 1e-6;
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, s) in tube.samples.iter().enumerate() {
        let key = s.point.coords().iter().map(|x| (x / TOUCH).floor() as i64).collect();
        grid.entry(key).or_default().push(i);
    }
    let far = 10.0 * tube.epsilon;
    tube.samples.par_iter().enumerate().all(|(i, s)| {
        let key: Vec<i64> = s.point.coords().iter().map(|x| (x / TOUCH).floor() as i64).collect();
        let dim = key.len();
        (0..3usize.pow(dim as u32)).all(|mut code| {
            let nb: Vec<i64> = key
                .iter()
                .map(|k| {
                    let d = (code % 3) as i64 - 1;
                    code /= 3;
                    k + d
                })
                .collect();
            grid.get(&nb).is_none_or(|ids| {
                ids.iter().all(|&j| {
                    let o = &tube.samples[j];
                    j == i
                        || dist(s.point.coords(), o.point.coords()) >= TOUCH
                        || dist(s.base.coords(), o.base.coords()) <= far
                })
            })
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeBoundReport {
    pub dim_y_est: f64,
    pub dim_tube_est: f64,
    /// `dim_y_est + (m - n)`.
    pub bound: f64,
    pub satisfied: bool,
}

/// Slack allowed on top of the bound for estimator noise.
pub const TUBE_BOUND_SLACK: f64 = 0.2;

pub fn check_tube_dimension_bound(
    manifold: &EmbeddedManifold,
    y_params: &[Vec<f64>],
    y_resolution: f64,
    epsilon: f64,
    normal_steps: usize,
    config: &EstimatorConfig,
) -> Result<TubeBoundReport> {
    if config.delta_max >= epsilon {
        return Err(Error::Estimator(format!(
            "delta_max {} must be well below epsilon {epsilon}",
            config.delta_max
        )));
    }
    let frames: Vec<Frame> = y_params.iter().map(|u| manifold.frame(u)).collect::<Result<_>>()?;
    let y = PointCloud::new(
        manifold.ambient_dim(),
        frames.into_iter().map(|f| Point::from_vec(f.point)).collect(),
        y_resolution,
        "Y",
    )?;
    let tube = tube_thicken(manifold, y_params, epsilon, normal_steps)?.cloud("tube")?;
    let dim_y_est = estimate_dimension(&y, config)?.slope;
    let dim_tube_est = estimate_dimension(&tube, config)?.slope;
    let bound = dim_y_est + manifold.codim() as f64;
    Ok(TubeBoundReport {
        dim_y_est,
        dim_tube_est,
        bound,
        satisfied: dim_tube_est <= bound + TUBE_BOUND_SLACK,
    })
}

/// A manifold, a sampled subset, and the scales at which to check the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeFixture {
    pub name: String,
    pub manifold: EmbeddedManifold,
    pub y_params: Vec<Vec<f64>>,
    pub y_resolution: f64,
    pub epsilon: f64,
    pub normal_steps: usize,
    pub estimator: EstimatorConfig,
}

pub const TUBE_FIXTURES: [&str; 3] = ["circle-points", "circle-cantor", "sphere-arc"];

impl TubeFixture {
    pub fn named(name: &str, method: CountMethod) -> Result<Self> {
        use std::f64::consts::{FRAC_PI_2, TAU};
        let unit_circle = EmbeddedManifold::CircleInR2 {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let fixture = match name {
            // Eight points: dimension 0, tube of eight normal segments.
            "circle-points" => TubeFixture {
                name: name.into(),
                manifold: unit_circle,
                y_params: (0..8).map(|k| vec![TAU * k as f64 / 8.0]).collect(),
                y_resolution: 1e-9,
                epsilon: 0.2,
                normal_steps: 4000,
                estimator: EstimatorConfig::new(0.02, 0.0005, 6, method),
            },
            // Middle-thirds dust along a quarter arc.
            "circle-cantor" => {
                let depth = 8;
                TubeFixture {
                    name: name.into(),
                    manifold: unit_circle,
                    y_params: cantor_endpoints(1.0 / 3.0, depth)
                        .into_iter()
                        .map(|c| vec![FRAC_PI_2 * c])
                        .collect(),
                    y_resolution: FRAC_PI_2 * 3f64.powi(-(depth as i32)),
                    epsilon: 0.3,
                    normal_steps: 3000,
                    estimator: EstimatorConfig::with_ratio(FRAC_PI_2 / 27.0, 1.0 / 3.0, 5, method),
                }
            }
            // Meridian arc on the unit sphere.
            "sphere-arc" => {
                let count = 2000;
                let (a, b) = (0.4, 2.7);
                TubeFixture {
                    name: name.into(),
                    manifold: EmbeddedManifold::SphereInR3 {
                        center: [0.0, 0.0, 0.0],
                        radius: 1.0,
                    },
                    y_params: (0..count)
                        .map(|k| vec![a + (b - a) * k as f64 / (count - 1) as f64, 0.0])
                        .collect(),
                    y_resolution: (b - a) / (count - 1) as f64,
                    epsilon: 0.2,
                    normal_steps: 300,
                    estimator: EstimatorConfig::new(0.03, 0.006, 5, method),
                }
            }
            other => return Err(Error::UnknownKind(other.into())),
        };
        Ok(fixture)
    }

    pub fn check(&self) -> Result<TubeBoundReport> {
        check_tube_dimension_bound(
            &self.manifold,
            &self.y_params,
            self.y_resolution,
            self.epsilon,
            self.normal_steps,
            &self.estimator,
        )
    }

    pub fn thicken(&self) -> Result<Tube> {
        tube_thicken(&self.manifold, &self.y_params, self.epsilon, self.normal_steps)
    }
}
