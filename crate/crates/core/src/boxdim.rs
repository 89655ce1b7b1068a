//! Box-dimension estimation from sampled sets.
//!
//! Two counting functions are provided: greedy disjoint-ball packing (the
//! packing number `m_delta`) and occupied grid cells. Either is regressed as
//! `log count` against `log(1/delta)` over a geometric ladder of scales.

use std::collections::HashMap;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{check_dims, dist, Point, PointCloud, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Packing,
    Boxes,
}

impl std::fmt::Display for CountMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CountMethod::Packing => "packing",
            CountMethod::Boxes => "boxes",
        })
    }
}

impl std::str::FromStr for CountMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "packing" => Ok(CountMethod::Packing),
            "boxes" => Ok(CountMethod::Boxes),
            other => Err(Error::param("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCount {
    pub delta: f64,
    pub count: usize,
    pub method: CountMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// The dimension estimate.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope; zero for an exact fit.
    pub slope_stderr: f64,
    /// Set when every count was equal and no slope could be fitted.
    pub degenerate: bool,
    /// Scales entering the regression, largest first.
    pub deltas: Vec<f64>,
    /// Counts at every ladder level, including discarded extremes.
    pub counts: Vec<ScaleCount>,
    pub method: CountMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

/// Scale ladder and counting method for [`estimate_dimension`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub delta_max: f64,
    pub delta_min: f64,
    pub levels: usize,
    pub method: CountMethod,
}

impl EstimatorConfig {
    pub fn new(delta_max: f64, delta_min: f64, levels: usize, method: CountMethod) -> Self {
        EstimatorConfig {
            delta_max,
            delta_min,
            levels,
            method,
        }
    }

    /// Ladder with a fixed ratio between consecutive scales, e.g. the
    /// contraction ratio of a self-similar set.
    pub fn with_ratio(delta_max: f64, ratio: f64, levels: usize, method: CountMethod) -> Self {
        let delta_min = delta_max * ratio.powi(levels as i32 - 1);
        Self::new(delta_max, delta_min, levels, method)
    }

    /// Geometric ladder from `delta_max` down to `delta_min`.
    pub fn ladder(&self) -> Vec<f64> {
        let n = self.levels;
        let log_ratio = (self.delta_min / self.delta_max).ln();
        (0..n)
            .map(|k| {
                if k == 0 {
                    self.delta_max
                } else if k + 1 == n {
                    self.delta_min
                } else {
                    self.delta_max * (log_ratio * k as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }

    fn validate(&self, resolution: f64) -> Result<()> {
        if !(self.delta_min > 0.0 && self.delta_min.is_finite() && self.delta_max.is_finite()) {
            return Err(Error::Estimator("scales must be positive and finite".into()));
        }
        if self.delta_max <= self.delta_min {
            return Err(Error::Estimator(format!(
                "delta_max {} must exceed delta_min {}",
                self.delta_max, self.delta_min
            )));
        }
        if self.levels < 3 {
            return Err(Error::Estimator("at least 3 levels are required".into()));
        }
        // small slack: ladders built from a ratio land on the resolution up to rounding
        if self.delta_min < resolution * (1.0 - 1e-9) {
            return Err(Error::Estimator(format!(
                "delta_min {} is below the sampling resolution {resolution}",
                self.delta_min
            )));
        }
        Ok(())
    }
}

fn lexicographic_order(points: &[Point]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .coords()
            .iter()
            .zip(points[j].coords())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    order
}

fn cell_key(p: &[f64], anchor: &[f64], size: f64, out: &mut Vec<i64>) {
    out.clear();
    out.extend(p.iter().zip(anchor).map(|(x, a)| ((x - a) / size).floor() as i64));
}

/// Greedy maximal packing in the given visiting order: a point becomes a
/// centre when it is farther than `2 * delta` from every centre so far.
fn greedy_packing(points: &[Point], order: &[usize], delta: f64) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    let dim = first.dim();
    let reach = 2.0 * delta;
    if dim > 6 {
        let mut centres: Vec<&[f64]> = Vec::new();
        for &i in order {
            let p = points[i].coords();
            if centres.iter().all(|c| dist(c, p) > reach) {
                centres.push(p);
            }
        }
        return centres.len();
    }

    let origin = vec![0.0; dim];
    let mut grid: HashMap<Box<[i64]>, Vec<usize>> = HashMap::new();
    let mut key = Vec::with_capacity(dim);
    let mut probe = vec![0i64; dim];
    let mut count = 0;
    let neighbours = 3usize.pow(dim as u32);
    for &i in order {
        let p = points[i].coords();
        cell_key(p, &origin, reach, &mut key);
        let mut clear = true;
        'scan: for code in 0..neighbours {
            let mut c = code;
            for k in 0..dim {
                probe[k] = key[k] + (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(members) = grid.get(probe.as_slice()) {
                for &j in members {
                    if dist(points[j].coords(), p) <= reach {
                        clear = false;
                        break 'scan;
                    }
                }
            }
        }
        if clear {
            grid.entry(key.clone().into_boxed_slice()).or_default().push(i);
            count += 1;
        }
    }
    count
}

/// Size of a greedy maximal set of samples with pairwise distances above
/// `2 * delta`, visiting samples in lexicographic coordinate order.
pub fn packing_count(cloud: &PointCloud, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let order = lexicographic_order(&cloud.points);
    Ok(greedy_packing(&cloud.points, &order, delta))
}

/// Number of distinct cells of side `delta` (grid anchored at `anchor`)
/// holding at least one sample.
pub fn box_count(cloud: &PointCloud, delta: f64, anchor: &Point) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    check_dims(cloud.ambient_dim, anchor.dim())?;
    let mut cells: HashSet<Box<[i64]>> = HashSet::new();
    let mut key = Vec::with_capacity(cloud.ambient_dim);
    for p in &cloud.points {
        cell_key(p.coords(), anchor.coords(), delta, &mut key);
        if !cells.contains(key.as_slice()) {
            cells.insert(key.clone().into_boxed_slice());
        }
    }
    Ok(cells.len())
}

/// Counts at each scale of the ladder. Box grids are anchored half a cell
/// below the cloud's lower bounding corner, which makes the count invariant
/// under translation of the cloud.
pub fn scale_counts(cloud: &PointCloud, deltas: &[f64], method: CountMethod) -> Result<Vec<ScaleCount>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let lo = cloud.bounds().map(|b| b.0).unwrap_or_default();
    let order = match method {
        CountMethod::Packing => lexicographic_order(&cloud.points),
        CountMethod::Boxes => Vec::new(),
    };
    deltas
        .par_iter()
        .map(|&delta| {
            let count = match method {
                CountMethod::Packing => greedy_packing(&cloud.points, &order, delta),
                CountMethod::Boxes => {
                    let anchor = Point::from_vec(lo.iter().map(|x| x - 0.5 * delta).collect());
                    box_count(cloud, delta, &anchor)?
                }
            };
            Ok(ScaleCount { delta, count, method })
        })
        .collect()
}

struct Fit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    slope_stderr: f64,
    degenerate: bool,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Fit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if syy == 0.0 {
        return Fit {
            slope: 0.0,
            intercept: my,
            r_squared: 0.0,
            slope_stderr: 0.0,
            degenerate: true,
        };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = (1.0 - sse / syy).clamp(0.0, 1.0);
    let slope_stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Fit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        degenerate: false,
    }
}

/// Least-squares slope of `log count` against `log(1/delta)`.
///
/// With six or more levels the largest and smallest scales are counted but
/// left out of the fit.
pub fn estimate_dimension(cloud: &PointCloud, config: &EstimatorConfig) -> Result<DimensionEstimate> {
    config.validate(cloud.resolution)?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let ladder = config.ladder();
    let counts = scale_counts(cloud, &ladder, config.method)?;
    let used = if config.levels >= 6 {
        &counts[1..counts.len() - 1]
    } else {
        &counts[..]
    };
    let xs: Vec<f64> = used.iter().map(|c| (1.0 / c.delta).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|c| (c.count as f64).ln()).collect();
    let fit = least_squares(&xs, &ys);
    Ok(DimensionEstimate {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        slope_stderr: fit.slope_stderr,
        degenerate: fit.degenerate,
        deltas: used.iter().map(|c| c.delta).collect(),
        counts,
        method: config.method,
        window: None,
    })
}

/// Dimension of a possibly unbounded set: the largest estimate over the
/// bounded open windows. Windows whose clip is empty are skipped.
pub fn estimate_dimension_unbounded(
    cloud: &PointCloud,
    windows: &[Window],
    config: &EstimatorConfig,
) -> Result<DimensionEstimate> {
    if windows.is_empty() {
        return Err(Error::param("windows", "at least one window is required"));
    }
    let mut best: Option<DimensionEstimate> = None;
    for w in windows {
        let clipped = cloud.clip(w)?;
        if clipped.is_empty() {
            continue;
        }
        let mut est = estimate_dimension(&clipped, config)?;
        est.window = Some(w.clone());
        if best.as_ref().is_none_or(|b| est.slope > b.slope) {
            best = Some(est);
        }
    }
    best.ok_or(Error::EmptyCloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setgen::{cantor_dust, manifold_samples, Manifold};
    use approx::assert_relative_eq;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn cloud(pts: Vec<Point>, res: f64) -> PointCloud {
        let dim = pts.first().map_or(1, Point::dim);
        PointCloud::new(dim, pts, res, "t").unwrap()
    }

    fn unit_segment(spacing: f64) -> PointCloud {
        manifold_samples(
            &Manifold::Segment {
                a: pt(&[0.0, 0.0]),
                b: pt(&[1.0, 0.0]),
            },
            spacing,
        )
        .unwrap()
    }

    /// Largest subset with pairwise distances above 2 delta, by exhaustive
    /// branch and bound.
    fn max_packing_oracle(points: &[Point], delta: f64) -> usize {
        fn go(i: usize, chosen: &mut Vec<usize>, pts: &[Point], reach: f64, best: &mut usize) {
            if chosen.len() + (pts.len() - i) <= *best {
                return;
            }
            if i == pts.len() {
                *best = chosen.len();
                return;
            }
            if chosen
                .iter()
                .all(|&j| dist(pts[j].coords(), pts[i].coords()) > reach)
            {
                chosen.push(i);
                go(i + 1, chosen, pts, reach, best);
                chosen.pop();
            }
            go(i + 1, chosen, pts, reach, best);
        }
        let mut best = 0;
        go(0, &mut Vec::new(), points, 2.0 * delta, &mut best);
        best
    }

    #[test]
    fn packing_examples() {
        let c = cloud(vec![pt(&[0.0]), pt(&[1.0])], 0.1);
        assert_eq!(packing_count(&c, 0.4).unwrap(), 2);
        let single = cloud(vec![pt(&[0.3, 0.4])], 0.1);
        for delta in [1e-3, 0.5, 100.0] {
            assert_eq!(packing_count(&single, delta).unwrap(), 1);
        }
        let cantor = cantor_dust(1, 1.0 / 3.0, 4).unwrap();
        let delta = 3f64.powi(-4) / 3.0;
        assert_eq!(max_packing_oracle(&cantor.points, delta), 32);
        assert_eq!(packing_count(&cantor, delta).unwrap(), 32);
        let empty = PointCloud::new(1, vec![], 0.1, "e").unwrap();
        assert_eq!(packing_count(&empty, 0.1), Err(Error::EmptyCloud));
    }

    #[test]
    fn greedy_is_close_to_the_maximum_on_small_sets() {
        for seed in 0..20 {
            let w = Window::cube(2, 0.0, 1.0).unwrap();
            let c = crate::setgen::random_dust(2, 30, &w, seed).unwrap();
            for delta in [0.05, 0.1, 0.2] {
                let greedy = packing_count(&c, delta).unwrap();
                let best = max_packing_oracle(&c.points, delta);
                assert!(greedy <= best);
                // a maximal packing is within a dimension-dependent factor of the maximum
                assert!(greedy * 5 >= best, "seed {seed} delta {delta}: {greedy} vs {best}");
            }
        }
    }

    #[test]
    fn box_count_examples() {
        let empty = PointCloud::new(2, vec![], 0.1, "e").unwrap();
        assert_eq!(box_count(&empty, 0.1, &Point::origin(2)).unwrap(), 0);
        let single = cloud(vec![pt(&[0.3, 0.4])], 0.1);
        assert_eq!(box_count(&single, 0.1, &Point::origin(2)).unwrap(), 1);

        let seg = unit_segment(1e-3);
        // oracle: cell index floor(x / 0.25) for every sample
        let oracle: HashSet<i64> = seg
            .points
            .iter()
            .map(|p| (p[0] / 0.25).floor() as i64)
            .collect();
        assert_eq!(oracle.len(), 5);
        assert_eq!(box_count(&seg, 0.25, &Point::origin(2)).unwrap(), 5);
    }

    #[test]
    fn estimate_examples() {
        let c = cantor_dust(1, 1.0 / 3.0, 8).unwrap();
        for method in [CountMethod::Packing, CountMethod::Boxes] {
            let cfg = EstimatorConfig::with_ratio(1.0 / 3.0, 1.0 / 3.0, 7, method);
            let est = estimate_dimension(&c, &cfg).unwrap();
            assert!((est.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{method}: {}", est.slope);
            assert_eq!(est.deltas.len(), 5);
        }

        let single = cloud(vec![pt(&[0.5, 0.5])], 1e-3);
        let est = estimate_dimension(
            &single,
            &EstimatorConfig::new(0.5, 0.01, 5, CountMethod::Packing),
        )
        .unwrap();
        assert_eq!(est.slope, 0.0);
        assert!(est.degenerate);

        let seg = unit_segment(1e-4);
        for method in [CountMethod::Packing, CountMethod::Boxes] {
            let est =
                estimate_dimension(&seg, &EstimatorConfig::new(0.25, 0.001, 8, method)).unwrap();
            assert!((est.slope - 1.0).abs() < 0.05, "{method}: {}", est.slope);
            assert!(est.r_squared > 0.99);
        }
    }

    #[test]
    fn estimator_preconditions() {
        let c = cantor_dust(1, 1.0 / 3.0, 3).unwrap();
        let below = EstimatorConfig::new(0.3, 1e-3, 4, CountMethod::Boxes);
        assert!(matches!(estimate_dimension(&c, &below), Err(Error::Estimator(_))));
        let few = EstimatorConfig::new(0.3, 0.1, 2, CountMethod::Boxes);
        assert!(matches!(estimate_dimension(&c, &few), Err(Error::Estimator(_))));
        let inverted = EstimatorConfig::new(0.1, 0.3, 4, CountMethod::Boxes);
        assert!(matches!(estimate_dimension(&c, &inverted), Err(Error::Estimator(_))));
    }

    #[test]
    fn ladder_is_geometric_and_decreasing() {
        let cfg = EstimatorConfig::with_ratio(1.0, 0.5, 5, CountMethod::Packing);
        let l = cfg.ladder();
        assert_eq!(l.len(), 5);
        for (k, d) in l.iter().enumerate() {
            assert_relative_eq!(*d, 0.5f64.powi(k as i32), max_relative = 1e-12);
        }
        assert!(l.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn unbounded_examples() {
        let seg = unit_segment(1e-3);
        let cfg = EstimatorConfig::new(0.25, 0.004, 5, CountMethod::Boxes);
        let whole = estimate_dimension(&seg, &cfg).unwrap();
        let big = Window::cube(2, -1.0, 2.0).unwrap();
        let clipped = estimate_dimension_unbounded(&seg, std::slice::from_ref(&big), &cfg).unwrap();
        assert_eq!(clipped.slope, whole.slope);
        assert_eq!(clipped.window, Some(big));

        let w = Window::cube(1, -10.0, 10.0).unwrap();
        let plane = crate::setgen::hyperplane_samples(2, 0.0, 0.01, &w).unwrap();
        let a = Window::new(pt(&[-5.0, -1.0]), pt(&[-4.0, 1.0])).unwrap();
        let b = Window::new(pt(&[0.0, -1.0]), pt(&[3.0, 1.0])).unwrap();
        let cfg = EstimatorConfig::new(0.5, 0.02, 5, CountMethod::Packing);
        let ea = estimate_dimension_unbounded(&plane, std::slice::from_ref(&a), &cfg).unwrap();
        let eb = estimate_dimension_unbounded(&plane, std::slice::from_ref(&b), &cfg).unwrap();
        let both = estimate_dimension_unbounded(&plane, &[a, b], &cfg).unwrap();
        assert_eq!(both.slope, ea.slope.max(eb.slope));

        let far = Window::cube(2, 50.0, 60.0).unwrap();
        assert_eq!(
            estimate_dimension_unbounded(&seg, &[far], &cfg),
            Err(Error::EmptyCloud)
        );
        assert!(estimate_dimension_unbounded(&seg, &[], &cfg).is_err());
    }
}
