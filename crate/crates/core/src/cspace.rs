//! Configuration-space obstacle for translations.
//!
//! Translating a set `M` by `v` makes it meet `X` exactly when
//! `v = y - x` for some `x` in `M`, `y` in `X`. The set of such differences is
//! the obstacle `K` a translation path has to avoid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxdim::DimensionEstimate;
use crate::error::{Error, Result};
use crate::geom::{check_dims, dist, Point, PointCloud};

/// Record of a capped product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsampling {
    pub total_pairs: u64,
    pub kept: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CSpaceObstacle {
    pub points: PointCloud,
    /// `(m_index, x_index)` for every sample of `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_pairs: Option<Vec<(u32, u32)>>,
    pub m_label: String,
    pub x_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsampling: Option<Subsampling>,
}

impl CSpaceObstacle {
    pub fn is_full_product(&self) -> bool {
        self.subsampling.is_none()
    }

    pub fn dim(&self) -> usize {
        self.points.ambient_dim
    }
}

/// All differences `x - m` for `m` in `manifold`, `x` in `obstacle`.
///
/// When `|M| * |X|` exceeds `cap`, one pair is drawn uniformly from each of
/// `cap` equal strata of the pair index range, with a ChaCha stream seeded by
/// `cap`. Pair index `p` stands for `(p / |X|, p % |X|)`.
pub fn minkowski_difference(
    manifold: &PointCloud,
    obstacle: &PointCloud,
    cap: usize,
) -> Result<CSpaceObstacle> {
    check_dims(manifold.ambient_dim, obstacle.ambient_dim)?;
    if cap == 0 {
        return Err(Error::param("cap", "must be at least 1"));
    }
    let nm = manifold.len() as u64;
    let nx = obstacle.len() as u64;
    if nm > u32::MAX as u64 || nx > u32::MAX as u64 {
        return Err(Error::param("cap", "factor too large"));
    }
    let total = nm * nx;
    let (pairs, subsampling): (Vec<u64>, Option<Subsampling>) = if total <= cap as u64 {
        ((0..total).collect(), None)
    } else {
        let cap64 = cap as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(cap64);
        let picks = (0..cap64)
            .map(|k| {
                let lo = (k as u128 * total as u128 / cap64 as u128) as u64;
                let hi = ((k + 1) as u128 * total as u128 / cap64 as u128) as u64;
                rng.gen_range(lo..hi)
            })
            .collect();
        (
            picks,
            Some(Subsampling {
                total_pairs: total,
                kept: cap64,
                seed: cap64,
            }),
        )
    };

    let points: Vec<Point> = pairs
        .par_iter()
        .map(|&p| {
            let m = &manifold.points[(p / nx) as usize];
            let x = &obstacle.points[(p % nx) as usize];
            Point::from_vec(
                x.coords()
                    .iter()
                    .zip(m.coords())
                    .map(|(a, b)| a - b)
                    .collect(),
            )
        })
        .collect();
    let source_pairs = pairs
        .iter()
        .map(|&p| ((p / nx) as u32, (p % nx) as u32))
        .collect();

    let cloud = PointCloud::new(
        manifold.ambient_dim,
        points,
        manifold.resolution + obstacle.resolution,
        format!("K = ({}) - ({})", obstacle.label, manifold.label),
    )?;
    Ok(CSpaceObstacle {
        points: cloud,
        source_pairs: Some(source_pairs),
        m_label: manifold.label.clone(),
        x_label: obstacle.label.clone(),
        subsampling,
    })
}

/// Sum metric on pairs: `|x1 - x2| + |y1 - y2|`.
pub fn product_distance(x1: &Point, y1: &Point, x2: &Point, y2: &Point) -> Result<f64> {
    let n = x1.dim();
    for p in [y1, x2, y2] {
        check_dims(n, p.dim())?;
    }
    Ok(dist(x1.coords(), x2.coords()) + dist(y1.coords(), y2.coords()))
}

/// Whether the obstacle is thin enough for a translation escape:
/// `dim_x < n - dim_m - 1`, strictly.
pub fn dimension_gate(dim_x: f64, dim_m: f64, n: usize) -> bool {
    dim_x < n as f64 - dim_m - 1.0
}

/// Gate decision with the obstacle estimate shifted by two standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub dim_x: f64,
    pub dim_m: f64,
    pub n: usize,
    pub budget: f64,
    pub passes: bool,
    /// Gate at `dim_x - 2 * stderr`.
    pub passes_optimistic: bool,
    /// Gate at `dim_x + 2 * stderr`.
    pub passes_pessimistic: bool,
}

pub fn gate_report(dim_x: &DimensionEstimate, dim_m: f64, n: usize) -> GateReport {
    let band = 2.0 * dim_x.slope_stderr;
    GateReport {
        dim_x: dim_x.slope,
        dim_m,
        n,
        budget: n as f64 - dim_m - 1.0,
        passes: dimension_gate(dim_x.slope, dim_m, n),
        passes_optimistic: dimension_gate(dim_x.slope - band, dim_m, n),
        passes_pessimistic: dimension_gate(dim_x.slope + band, dim_m, n),
    }
}
