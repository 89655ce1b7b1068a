//! Deterministic generators for test sets: self-similar dusts, lattices,
//! sampled manifolds and uniform random dust.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geom::{check_dims, Point, PointCloud, Window};
use crate::index::Obstacle;

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio <= 0.5 {
        Ok(())
    } else {
        Err(Error::param("ratio", format!("{ratio} not in (0, 1/2]")))
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if spacing > 0.0 && spacing.is_finite() {
        Ok(())
    } else {
        Err(Error::param("spacing", "must be positive and finite"))
    }
}

/// Endpoints of the level-`depth` middle-interval-removal construction on
/// [0, 1], in increasing order. Keeps the two end subintervals of relative
/// length `ratio` at every step.
pub fn cantor_endpoints(ratio: f64, depth: u32) -> Vec<f64> {
    let mut starts = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 0..depth {
        let child = len * ratio;
        starts = starts
            .iter()
            .flat_map(|&a| [a, a + len - child])
            .collect();
        len = child;
    }
    starts.iter().flat_map(|&a| [a, a + len]).collect()
}

/// n-fold product of the Cantor construction, sampled at interval endpoints.
pub fn cantor_dust(n: usize, ratio: f64, depth: u32) -> Result<PointCloud> {
    check_ratio(ratio)?;
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let axis = cantor_endpoints(ratio, depth);
    let total = axis
        .len()
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 26)
        .ok_or_else(|| Error::param("depth", "product too large"))?;
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        points.push(Point::from_vec(idx.iter().map(|&i| axis[i]).collect()));
        // odometer, last axis fastest
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let true_dim = n as f64 * 2f64.ln() / (1.0 / ratio).ln();
    PointCloud::new(
        n,
        points,
        ratio.powi(depth as i32),
        format!("cantor_dust(n={n}, ratio={ratio}, depth={depth})"),
    )?
    .with_true_dim(true_dim.min(n as f64))
}

/// Lattice coordinates `lo + k * spacing` that stay within `hi`.
fn axis_ticks(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let steps = ((hi - lo) / spacing + 1e-9).floor() as usize;
    (0..=steps).map(|k| lo + k as f64 * spacing).collect()
}

fn lattice(window: &Window, spacing: f64) -> Vec<Vec<f64>> {
    let ticks: Vec<Vec<f64>> = (0..window.dim())
        .map(|i| axis_ticks(window.lo()[i], window.hi()[i], spacing))
        .collect();
    let mut out = vec![vec![]];
    for axis in &ticks {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// Regular lattice of pitch `spacing` inside `window`, minus every lattice
/// point within `exclude_radius` of an `exclude` sample.
pub fn grid_dust(
    n: usize,
    spacing: f64,
    window: &Window,
    exclude: Option<&PointCloud>,
    exclude_radius: f64,
) -> Result<PointCloud> {
    check_spacing(spacing)?;
    check_dims(n, window.dim())?;
    for i in 0..n {
        if window.hi()[i] - window.lo()[i] < spacing {
            return Err(Error::EmptyResult(format!(
                "window axis {i} is narrower than the spacing {spacing}"
            )));
        }
    }
    let mut coords = lattice(window, spacing);
    if let Some(ex) = exclude.filter(|c| !c.is_empty()) {
        check_dims(n, ex.ambient_dim)?;
        let obstacle = Obstacle::new(ex, exclude_radius.max(spacing));
        coords.retain(|c| {
            let p = Point::from_vec(c.clone());
            obstacle.point_distance(&p).map_or(true, |d| d >= exclude_radius)
        });
    }
    if coords.is_empty() {
        return Err(Error::EmptyResult("every lattice point was excluded".into()));
    }
    PointCloud::new(
        n,
        coords.into_iter().map(Point::from_vec).collect(),
        spacing,
        format!("grid_dust(n={n}, spacing={spacing})"),
    )?
    // a finite piece of a dense set: its box dimension is that of the closure
    .with_true_dim(n as f64)
}

/// Lattice on the affine hyperplane `{x_n = height}`; `window` covers the
/// first `n - 1` coordinates.
pub fn hyperplane_samples(
    n: usize,
    height: f64,
    spacing: f64,
    window: &Window,
) -> Result<PointCloud> {
    check_spacing(spacing)?;
    if n < 2 {
        return Err(Error::param("n", "hyperplane needs n >= 2"));
    }
    if !height.is_finite() {
        return Err(Error::param("height", "must be finite"));
    }
    check_dims(n - 1, window.dim())?;
    let points = lattice(window, spacing)
        .into_iter()
        .map(|mut c| {
            c.push(height);
            Point::from_vec(c)
        })
        .collect();
    PointCloud::new(
        n,
        points,
        spacing,
        format!("hyperplane(n={n}, height={height}, spacing={spacing})"),
    )?
    .with_true_dim((n - 1) as f64)
}

/// A sampled smooth submanifold.
#[derive(Debug, Clone, PartialEq)]
pub enum Manifold {
    Segment { a: Point, b: Point },
    Sphere { center: Point, radius: f64 },
    /// `origin + s * u + t * v` for `s in [0, width]`, `t in [0, height]`;
    /// `u`, `v` orthonormal.
    PlanePatch {
        origin: Point,
        u: Point,
        v: Point,
        width: f64,
        height: f64,
    },
}

impl Manifold {
    pub fn topological_dim(&self) -> usize {
        match self {
            Manifold::Segment { .. } => 1,
            Manifold::Sphere { center, .. } => center.dim() - 1,
            Manifold::PlanePatch { .. } => 2,
        }
    }
}

fn sphere_directions(n: usize, spacing_over_radius: f64) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match n {
        2 => {
            let count = ((2.0 * PI / spacing_over_radius).round() as usize).max(3);
            (0..count)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / count as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        3 => {
            // Fibonacci lattice: equal-area bands, golden-angle longitudes.
            let count = ((4.0 * PI / (spacing_over_radius * spacing_over_radius)).round() as usize)
                .max(4);
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            // Faces of the cube [-1, 1]^n, projected radially.
            let per_axis = ((2.0 / spacing_over_radius).ceil() as usize).max(1);
            let ticks: Vec<f64> = (0..=per_axis)
                .map(|k| -1.0 + 2.0 * k as f64 / per_axis as f64)
                .collect();
            let mut out = Vec::new();
            let mut idx = vec![0usize; n];
            loop {
                let c: Vec<f64> = idx.iter().map(|&i| ticks[i]).collect();
                if c.iter().any(|x| x.abs() == 1.0) {
                    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                    out.push(c.iter().map(|x| x / norm).collect());
                }
                let mut k = n;
                loop {
                    if k == 0 {
                        return out;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] <= per_axis {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
    }
}

/// Near-uniform samples of a manifold at the given spacing.
pub fn manifold_samples(manifold: &Manifold, spacing: f64) -> Result<PointCloud> {
    check_spacing(spacing)?;
    let (dim, points, label) = match manifold {
        Manifold::Segment { a, b } => {
            check_dims(a.dim(), b.dim())?;
            let len = crate::geom::dist(a.coords(), b.coords());
            let steps = ((len / spacing - 1e-9).ceil() as usize).max(1);
            let pts = (0..=steps)
                .map(|k| a.lerp(b, k as f64 / steps as f64))
                .collect();
            (a.dim(), pts, "segment".to_string())
        }
        Manifold::Sphere { center, radius } => {
            if !(*radius > 0.0) {
                return Err(Error::param("radius", "must be positive"));
            }
            let n = center.dim();
            if n < 2 {
                return Err(Error::param("center", "sphere needs ambient dimension >= 2"));
            }
            let pts = sphere_directions(n, spacing / radius)
                .into_iter()
                .map(|d| {
                    Point::from_vec(
                        d.iter()
                            .zip(center.coords())
                            .map(|(u, c)| c + radius * u)
                            .collect(),
                    )
                })
                .collect();
            (n, pts, format!("sphere(n={n}, radius={radius})"))
        }
        Manifold::PlanePatch {
            origin,
            u,
            v,
            width,
            height,
        } => {
            check_dims(origin.dim(), u.dim())?;
            check_dims(origin.dim(), v.dim())?;
            if origin.dim() < 2 {
                return Err(Error::param("origin", "plane patch needs ambient dimension >= 2"));
            }
            if !(*width > 0.0 && *height > 0.0) {
                return Err(Error::param("width", "patch sides must be positive"));
            }
            let su = axis_ticks(0.0, *width, spacing);
            let sv = axis_ticks(0.0, *height, spacing);
            let mut pts = Vec::with_capacity(su.len() * sv.len());
            for &s in &su {
                for &t in &sv {
                    pts.push(Point::from_vec(
                        (0..origin.dim())
                            .map(|i| origin[i] + s * u[i] + t * v[i])
                            .collect(),
                    ));
                }
            }
            (origin.dim(), pts, format!("plane_patch({width}x{height})"))
        }
    };
    PointCloud::new(dim, points, spacing, format!("{label}, spacing={spacing}"))?
        .with_true_dim(manifold.topological_dim() as f64)
}

/// Vertex set of the level-`depth` Sierpinski triangle with corners
/// (0,0), (1,0), (1/2, sqrt(3)/2).
pub fn sierpinski(depth: u32) -> Result<PointCloud> {
    if depth > 16 {
        return Err(Error::param("depth", "at most 16"));
    }
    // Vertices in lattice units of 2^-depth along the two triangle edges.
    let side = 1i64 << depth;
    let mut tris = vec![(0i64, 0i64, side)];
    for _ in 0..depth {
        tris = tris
            .into_iter()
            .flat_map(|(i, j, s)| {
                let h = s / 2;
                [(i, j, h), (i + h, j, h), (i, j + h, h)]
            })
            .collect();
    }
    let mut verts = BTreeSet::new();
    for (i, j, s) in tris {
        verts.insert((i, j));
        verts.insert((i + s, j));
        verts.insert((i, j + s));
    }
    let unit = 1.0 / side as f64;
    let h = 3f64.sqrt() / 2.0;
    let points = verts
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (i as f64 * unit, j as f64 * unit);
            Point::from_vec(vec![a + 0.5 * b, h * b])
        })
        .collect();
    PointCloud::new(2, points, unit, format!("sierpinski(depth={depth})"))?
        .with_true_dim(3f64.ln() / 2f64.ln())
}

/// `count` uniform samples in `window` from a ChaCha stream seeded by `seed`.
pub fn random_dust(n: usize, count: usize, window: &Window, seed: u64) -> Result<PointCloud> {
    check_dims(n, window.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|_| {
            Point::from_vec(
                (0..n)
                    .map(|i| rng.gen_range(window.lo()[i]..window.hi()[i]))
                    .collect(),
            )
        })
        .collect();
    // mean spacing of a uniform sample
    let vol: f64 = (0..n).map(|i| window.hi()[i] - window.lo()[i]).product();
    let resolution = (vol / count.max(1) as f64).powf(1.0 / n as f64);
    PointCloud::new(
        n,
        points,
        resolution,
        format!("random_dust(n={n}, count={count}, seed={seed})"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    CantorDust,
    Sierpinski,
    GridDust,
    Hyperplane,
    Segment,
    Sphere,
    PlanePatch,
    RandomDust,
}

/// JSON generator description: `{"kind": "...", "params": {...}, "seed": k}`.
///
/// Every kind also accepts optional `scale` and `offset` params, applied as
/// `x -> scale * x + offset` after generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

struct Params<'a>(&'a BTreeMap<String, Value>);

impl Params<'_> {
    fn opt_f64(&self, name: &str) -> Result<Option<f64>> {
        match self.0.get(name) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::param(name, "expected a number")),
        }
    }

    fn f64(&self, name: &str) -> Result<f64> {
        self.opt_f64(name)?
            .ok_or_else(|| Error::param(name, "missing"))
    }

    fn opt_usize(&self, name: &str) -> Result<Option<usize>> {
        match self.0.get(name) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|x| Some(x as usize))
                .ok_or_else(|| Error::param(name, "expected a nonnegative integer")),
        }
    }

    fn usize(&self, name: &str) -> Result<usize> {
        self.opt_usize(name)?
            .ok_or_else(|| Error::param(name, "missing"))
    }

    fn opt_point(&self, name: &str) -> Result<Option<Point>> {
        match self.0.get(name) {
            None => Ok(None),
            Some(v) => serde_json::from_value::<Point>(v.clone())
                .map(Some)
                .map_err(|e| Error::param(name, e.to_string())),
        }
    }

    fn point(&self, name: &str) -> Result<Point> {
        self.opt_point(name)?
            .ok_or_else(|| Error::param(name, "missing"))
    }

    fn window(&self) -> Result<Window> {
        Window::new(self.point("lo")?, self.point("hi")?)
    }
}

fn unit_axis(dim: usize, axis: usize) -> Point {
    let mut c = vec![0.0; dim];
    c[axis] = 1.0;
    Point::from_vec(c)
}

impl GeneratorSpec {
    pub fn new(kind: &str, params: serde_json::Value) -> Result<Self> {
        let params = match params {
            Value::Object(map) => map.into_iter().collect(),
            Value::Null => BTreeMap::new(),
            _ => return Err(Error::param("params", "expected an object")),
        };
        Ok(GeneratorSpec {
            kind: kind.to_string(),
            params,
            seed: 0,
        })
    }

    pub fn kind(&self) -> Result<GeneratorKind> {
        serde_json::from_value(Value::String(self.kind.clone()))
            .map_err(|_| Error::UnknownKind(self.kind.clone()))
    }

    /// Runs the generator.
    pub fn generate(&self) -> Result<PointCloud> {
        let p = Params(&self.params);
        let depth = |p: &Params| -> Result<u32> {
            let d = p.usize("depth")?;
            u32::try_from(d).map_err(|_| Error::param("depth", "too large"))
        };
        let cloud = match self.kind()? {
            GeneratorKind::CantorDust => cantor_dust(p.usize("n")?, p.f64("ratio")?, depth(&p)?)?,
            GeneratorKind::Sierpinski => sierpinski(depth(&p)?)?,
            GeneratorKind::GridDust => {
                let exclude = match self.params.get("exclude") {
                    None => None,
                    Some(v) => Some(SetSource::from_value(v)?.resolve()?),
                };
                grid_dust(
                    p.usize("n")?,
                    p.f64("spacing")?,
                    &p.window()?,
                    exclude.as_ref(),
                    p.opt_f64("exclude_radius")?.unwrap_or(0.0),
                )?
            }
            GeneratorKind::Hyperplane => hyperplane_samples(
                p.usize("n")?,
                p.opt_f64("height")?.unwrap_or(0.0),
                p.f64("spacing")?,
                &p.window()?,
            )?,
            GeneratorKind::Segment => manifold_samples(
                &Manifold::Segment {
                    a: p.point("a")?,
                    b: p.point("b")?,
                },
                p.f64("spacing")?,
            )?,
            GeneratorKind::Sphere => {
                let center = match p.opt_point("center")? {
                    Some(c) => c,
                    None => Point::origin(p.usize("n")?.max(1)),
                };
                manifold_samples(
                    &Manifold::Sphere {
                        center,
                        radius: p.opt_f64("radius")?.unwrap_or(1.0),
                    },
                    p.f64("spacing")?,
                )?
            }
            GeneratorKind::PlanePatch => {
                let origin = match p.opt_point("origin")? {
                    Some(o) => o,
                    None => Point::origin(p.opt_usize("n")?.unwrap_or(3)),
                };
                let dim = origin.dim();
                manifold_samples(
                    &Manifold::PlanePatch {
                        u: p.opt_point("u")?.unwrap_or_else(|| unit_axis(dim, 0)),
                        v: p.opt_point("v")?.unwrap_or_else(|| unit_axis(dim, 1.min(dim - 1))),
                        origin,
                        width: p.opt_f64("width")?.unwrap_or(1.0),
                        height: p.opt_f64("height")?.unwrap_or(1.0),
                    },
                    p.f64("spacing")?,
                )?
            }
            GeneratorKind::RandomDust => {
                random_dust(p.usize("n")?, p.usize("count")?, &p.window()?, self.seed)?
            }
        };
        let scale = p.opt_f64("scale")?;
        let offset = p.opt_point("offset")?;
        if scale.is_none() && offset.is_none() {
            return Ok(cloud);
        }
        let offset = offset.unwrap_or_else(|| Point::origin(cloud.ambient_dim));
        cloud.transformed(scale.unwrap_or(1.0), &offset)
    }
}

/// Either a generator description or an inline point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSource {
    Inline(PointCloud),
    Generator(GeneratorSpec),
}

impl SetSource {
    pub fn from_value(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone())
            .map_err(|e| Error::param("set", format!("neither a point cloud nor a generator: {e}")))
    }

    pub fn resolve(&self) -> Result<PointCloud> {
        match self {
            SetSource::Inline(c) => Ok(c.clone()),
            SetSource::Generator(g) => g.generate(),
        }
    }
}
