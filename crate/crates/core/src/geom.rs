//! Points, sampled sets and the exact distance predicates everything else is
//! built on.
//!
//! A closed set is represented by a finite [`PointCloud`] together with a
//! sampling resolution `h`: every point of the intended set lies within `h` of
//! some sample. "Does not meet the set" is then checked as "clearance is at
//! least `epsilon`" for some caller-chosen `epsilon >= h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of n-dimensional Euclidean space with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Point(coords))
    }

    /// Skips validation; callers guarantee finiteness and nonzero length.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim > 0, "origin of a zero-dimensional space");
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn add(&self, other: &Point) -> Result<Point> {
        check_dims(self.dim(), other.dim())?;
        Ok(Point(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Point) -> Result<Point> {
        check_dims(self.dim(), other.dim())?;
        Ok(Point(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|c| c * factor).collect())
    }

    /// `(1 - s) * self + s * other`; returns `self` at `s = 0` and `other`
    /// at `s = 1` bit-exactly.
    pub fn lerp(&self, other: &Point, s: f64) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (1.0 - s) * a + s * b)
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Distance from `p` to the closed segment `a`–`b`.
///
/// Clamped projection; at the clamps the endpoint itself is used so the result
/// never exceeds the endpoint distances.
#[inline]
pub(crate) fn seg_dist(a: &[f64], b: &[f64], p: &[f64]) -> f64 {
    let mut len2 = 0.0;
    let mut proj = 0.0;
    for i in 0..a.len() {
        let d = b[i] - a[i];
        len2 += d * d;
        proj += (p[i] - a[i]) * d;
    }
    if len2 == 0.0 || proj <= 0.0 {
        return dist(a, p);
    }
    if proj >= len2 {
        return dist(b, p);
    }
    let t = proj / len2;
    let mut s = 0.0;
    for i in 0..a.len() {
        let c = a[i] + t * (b[i] - a[i]);
        let d = p[i] - c;
        s += d * d;
    }
    s.sqrt().min(dist(a, p)).min(dist(b, p))
}

/// Euclidean distance.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    Ok(dist(&p.0, &q.0))
}

/// A closed line segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        check_dims(a.dim(), b.dim())?;
        Ok(Segment { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn length(&self) -> f64 {
        dist(&self.a.0, &self.b.0)
    }
}

/// Minimum distance from `p` to the closed segment `s`.
pub fn segment_point_distance(s: &Segment, p: &Point) -> Result<f64> {
    check_dims(s.dim(), p.dim())?;
    Ok(seg_dist(&s.a.0, &s.b.0, &p.0))
}

/// Obstacle samples inside this closed ball are ignored by clearance queries.
#[derive(Debug, Clone, Copy)]
pub struct Exclusion<'a> {
    pub center: &'a Point,
    pub radius: f64,
}

impl Exclusion<'_> {
    #[inline]
    pub(crate) fn skips(&self, q: &[f64]) -> bool {
        dist(&self.center.0, q) <= self.radius
    }
}

/// Exhaustive clearance of a segment against an obstacle sample set.
///
/// Returns `f64::INFINITY` when no sample counts (empty obstacle, or all
/// samples excluded).
pub fn segment_clearance(
    s: &Segment,
    obstacle: &PointCloud,
    exclude: Option<Exclusion<'_>>,
) -> Result<f64> {
    check_dims(s.dim(), obstacle.ambient_dim)?;
    if let Some(ex) = &exclude {
        check_dims(s.dim(), ex.center.dim())?;
    }
    Ok(scan_clearance(&s.a.0, &s.b.0, &obstacle.points, exclude).0)
}

/// Linear scan returning the minimum distance and the lowest index attaining it.
pub(crate) fn scan_clearance(
    a: &[f64],
    b: &[f64],
    points: &[Point],
    exclude: Option<Exclusion<'_>>,
) -> (f64, Option<usize>) {
    let mut best = f64::INFINITY;
    let mut arg = None;
    for (i, q) in points.iter().enumerate() {
        if exclude.is_some_and(|ex| ex.skips(&q.0)) {
            continue;
        }
        let d = seg_dist(a, b, &q.0);
        if d < best {
            best = d;
            arg = Some(i);
        }
    }
    (best, arg)
}

/// Axis-aligned box with `lo[i] < hi[i]` on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct Window {
    lo: Point,
    hi: Point,
}

#[derive(Deserialize)]
struct RawWindow {
    lo: Point,
    hi: Point,
}

impl TryFrom<RawWindow> for Window {
    type Error = Error;

    fn try_from(raw: RawWindow) -> Result<Self> {
        Window::new(raw.lo, raw.hi)
    }
}

impl Window {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        check_dims(lo.dim(), hi.dim())?;
        for i in 0..lo.dim() {
            if !(lo[i] < hi[i]) {
                return Err(Error::InvalidWindow(format!(
                    "axis {i}: lo {} is not below hi {}",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(Window { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Window::new(Point::new(vec![lo; dim])?, Point::new(vec![hi; dim])?)
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains_closed(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    pub fn contains_open(&self, p: &Point) -> bool {
        p.dim() == self.dim() && (0..self.dim()).all(|i| self.lo[i] < p[i] && p[i] < self.hi[i])
    }
}

/// A finite sample of a subset of n-dimensional space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCloud", into = "RawCloud")]
pub struct PointCloud {
    pub ambient_dim: usize,
    pub points: Vec<Point>,
    pub resolution: f64,
    pub label: String,
    pub true_dim: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCloud {
    dim: usize,
    resolution: f64,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_dim: Option<f64>,
    points: Vec<Point>,
}

impl TryFrom<RawCloud> for PointCloud {
    type Error = Error;

    fn try_from(raw: RawCloud) -> Result<Self> {
        let cloud = PointCloud::new(raw.dim, raw.points, raw.resolution, raw.label)?;
        match raw.true_dim {
            Some(d) => cloud.with_true_dim(d),
            None => Ok(cloud),
        }
    }
}

impl From<PointCloud> for RawCloud {
    fn from(c: PointCloud) -> Self {
        RawCloud {
            dim: c.ambient_dim,
            resolution: c.resolution,
            label: c.label,
            true_dim: c.true_dim,
            points: c.points,
        }
    }
}

impl PointCloud {
    pub fn new(
        ambient_dim: usize,
        points: Vec<Point>,
        resolution: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::param("dim", "ambient dimension must be positive"));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::param("resolution", "must be positive and finite"));
        }
        for p in &points {
            check_dims(ambient_dim, p.dim())?;
        }
        Ok(PointCloud {
            ambient_dim,
            points,
            resolution,
            label: label.into(),
            true_dim: None,
        })
    }

    pub fn with_true_dim(mut self, true_dim: f64) -> Result<Self> {
        if !(0.0..=self.ambient_dim as f64).contains(&true_dim) {
            return Err(Error::param(
                "true_dim",
                format!("{true_dim} outside [0, {}]", self.ambient_dim),
            ));
        }
        self.true_dim = Some(true_dim);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Corners of the tight bounding box; `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let first = self.points.first()?;
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for p in &self.points[1..] {
            for i in 0..self.ambient_dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        Some((lo, hi))
    }

    /// Applies `x -> scale * x + offset` to every sample. Resolution scales
    /// with `|scale|`.
    pub fn transformed(&self, scale: f64, offset: &Point) -> Result<PointCloud> {
        check_dims(self.ambient_dim, offset.dim())?;
        if !(scale.is_finite() && scale != 0.0) {
            return Err(Error::param("scale", "must be finite and nonzero"));
        }
        let points = self
            .points
            .iter()
            .map(|p| {
                Point::new(
                    p.0.iter()
                        .zip(&offset.0)
                        .map(|(x, o)| scale * x + o)
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PointCloud {
            points,
            resolution: self.resolution * scale.abs(),
            ..self.clone()
        })
    }

    /// Samples strictly inside `window`.
    pub fn clip(&self, window: &Window) -> Result<PointCloud> {
        check_dims(self.ambient_dim, window.dim())?;
        Ok(PointCloud {
            points: self
                .points
                .iter()
                .filter(|p| window.contains_open(p))
                .cloned()
                .collect(),
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn cloud(pts: &[&[f64]]) -> PointCloud {
        let dim = pts.first().map_or(2, |p| p.len());
        PointCloud::new(dim, pts.iter().map(|p| pt(p)).collect(), 0.01, "t").unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pt(&[0.0, 0.0]), &pt(&[3.0, 4.0])).unwrap(), 5.0);
        let p = pt(&[0.3, -2.0]);
        assert_eq!(distance(&p, &p).unwrap(), 0.0);
        assert_relative_eq!(
            distance(&pt(&[1.0, 1.0, 1.0]), &pt(&[2.0, 2.0, 2.0])).unwrap(),
            3f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(matches!(
            distance(&pt(&[0.0]), &pt(&[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_validation() {
        assert_eq!(Point::new(vec![]), Err(Error::EmptyPoint));
        assert_eq!(
            Point::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        );
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(serde_json::from_str::<Point>("[]").is_err());
    }

    #[test]
    fn segment_point_distance_examples() {
        let s = Segment::new(pt(&[0.0, 0.0]), pt(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(
            segment_point_distance(&s, &pt(&[0.5, 0.3])).unwrap(),
            0.3,
            epsilon = 1e-15
        );
        assert_eq!(segment_point_distance(&s, &pt(&[2.0, 0.0])).unwrap(), 1.0);
        let degenerate = Segment::new(pt(&[0.0, 0.0]), pt(&[0.0, 0.0])).unwrap();
        assert_eq!(
            segment_point_distance(&degenerate, &pt(&[1.0, 1.0])).unwrap(),
            2f64.sqrt()
        );
    }

    #[test]
    fn segment_clearance_examples() {
        let s = Segment::new(pt(&[0.0, 0.0]), pt(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(
            segment_clearance(&s, &cloud(&[&[0.5, 0.2]]), None).unwrap(),
            0.2,
            epsilon = 1e-15
        );
        let empty = PointCloud::new(2, vec![], 0.1, "empty").unwrap();
        assert_eq!(segment_clearance(&s, &empty, None).unwrap(), f64::INFINITY);

        let s3 = Segment::new(pt(&[0.0, 0.0, 0.0]), pt(&[1.0, 0.0, 0.0])).unwrap();
        let obs = cloud(&[&[0.25, 0.1, 0.0], &[0.75, -0.05, 0.0]]);
        assert_relative_eq!(
            segment_clearance(&s3, &obs, None).unwrap(),
            0.05,
            epsilon = 1e-15
        );
    }

    #[test]
    fn exclusion_ball_skips_nearby_samples() {
        let s = Segment::new(pt(&[0.0, 0.0]), pt(&[1.0, 0.0])).unwrap();
        let obs = cloud(&[&[1.0, 0.01], &[0.5, 0.4]]);
        let end = pt(&[1.0, 0.0]);
        let ex = Exclusion {
            center: &end,
            radius: 0.05,
        };
        assert_relative_eq!(
            segment_clearance(&s, &obs, Some(ex)).unwrap(),
            0.4,
            epsilon = 1e-15
        );
    }

    #[test]
    fn window_rejects_inverted_axes() {
        assert!(Window::new(pt(&[0.0, 1.0]), pt(&[1.0, 1.0])).is_err());
        assert!(Window::cube(2, 0.0, 1.0).is_ok());
        assert!(serde_json::from_str::<Window>(r#"{"lo":[1.0],"hi":[0.0]}"#).is_err());
    }

    #[test]
    fn cloud_json_schema() {
        let c = cloud(&[&[0.0, 1.0], &[2.0, 3.0]]).with_true_dim(0.0).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"dim":2,"resolution":0.01,"label":"t","true_dim":0.0,"points":[[0.0,1.0],[2.0,3.0]]}"#
        );
        let back: PointCloud = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);

        let bad = r#"{"dim":3,"resolution":0.1,"label":"x","points":[[0.0,1.0]]}"#;
        assert!(serde_json::from_str::<PointCloud>(bad).is_err());
        let bad = r#"{"dim":1,"resolution":0.0,"label":"x","points":[]}"#;
        assert!(serde_json::from_str::<PointCloud>(bad).is_err());
        let bad = r#"{"dim":1,"resolution":0.1,"label":"x","true_dim":2.0,"points":[]}"#;
        assert!(serde_json::from_str::<PointCloud>(bad).is_err());
    }

    #[test]
    fn lerp_hits_endpoints_exactly() {
        let a = pt(&[0.1, 0.7]);
        let b = pt(&[0.3, -1.9]);
        assert_eq!(a.lerp(&b, 0.0), a);
        assert_eq!(a.lerp(&b, 1.0), b);
    }

    #[test]
    fn transform_and_clip() {
        let c = cloud(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let t = c.transformed(2.0, &pt(&[1.0, 0.0])).unwrap();
        assert_eq!(t.points[1], pt(&[3.0, 2.0]));
        assert_eq!(t.resolution, 0.02);
        let w = Window::cube(2, -0.5, 0.5).unwrap();
        assert_eq!(c.clip(&w).unwrap().len(), 1);
    }
}
