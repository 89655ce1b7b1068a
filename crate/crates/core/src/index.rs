//! Uniform-grid bucketing for clearance and nearest-sample queries.
//!
//! Samples are bucketed into fine cells of a caller-chosen size, and fine
//! cells are grouped into coarse blocks. A query visits blocks and cells in
//! order of a lower bound on their distance and stops once the bound exceeds
//! the best distance seen. The minimum is taken over exactly the same
//! per-sample distance function as the linear scan, so results are
//! bit-identical to [`crate::geom::segment_clearance`].

use std::collections::BTreeMap;

use crate::geom::{check_dims, scan_clearance, seg_dist, Exclusion, Point, PointCloud, Segment};
use crate::error::Result;

/// Clouds at or below this size are scanned linearly.
pub const DEFAULT_INDEX_THRESHOLD: usize = 256;

type CellKey = Vec<i64>;

#[derive(Debug)]
struct Cell {
    center: Vec<f64>,
    half_diag: f64,
    start: usize,
    end: usize,
}

#[derive(Debug)]
struct Block {
    center: Vec<f64>,
    half_diag: f64,
    cells: std::ops::Range<usize>,
}

#[derive(Debug)]
pub struct GridIndex {
    dim: usize,
    cell_size: f64,
    blocks: Vec<Block>,
    cells: Vec<Cell>,
    /// Original sample indices, grouped by cell.
    order: Vec<usize>,
}

fn key_of(p: &[f64], size: f64) -> Vec<i64> {
    p.iter().map(|&x| (x / size).floor() as i64).collect()
}

fn box_center(key: &[i64], size: f64) -> Vec<f64> {
    key.iter().map(|&k| (k as f64 + 0.5) * size).collect()
}

impl GridIndex {
    pub fn build(points: &[Point], cell_size: f64) -> GridIndex {
        assert!(cell_size > 0.0 && cell_size.is_finite());
        let dim = points.first().map_or(1, Point::dim);

        let mut fine: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            fine.entry(key_of(p.coords(), cell_size)).or_default().push(i);
        }

        // Roughly sqrt(#cells) blocks keeps both sweep levels short.
        let per_axis = (fine.len() as f64).powf(1.0 / (2.0 * dim as f64)).round().max(1.0) as i64;
        let block_size = cell_size * per_axis as f64;

        let mut grouped: BTreeMap<CellKey, Vec<(CellKey, Vec<usize>)>> = BTreeMap::new();
        for (key, members) in fine {
            let bkey = key.iter().map(|k| k.div_euclid(per_axis)).collect();
            grouped.entry(bkey).or_default().push((key, members));
        }

        // Slack absorbs rounding in the key computation and in the bound itself.
        let cell_half_diag = 0.5 * cell_size * (dim as f64).sqrt() * (1.0 + 1e-6);
        let block_half_diag = 0.5 * block_size * (dim as f64).sqrt() * (1.0 + 1e-6);
        let mut blocks = Vec::with_capacity(grouped.len());
        let mut cells = Vec::new();
        let mut order = Vec::with_capacity(points.len());
        for (bkey, members) in grouped {
            let first = cells.len();
            for (key, ids) in members {
                let start = order.len();
                order.extend(ids);
                cells.push(Cell {
                    center: box_center(&key, cell_size),
                    half_diag: cell_half_diag,
                    start,
                    end: order.len(),
                });
            }
            blocks.push(Block {
                center: box_center(&bkey, block_size),
                half_diag: block_half_diag,
                cells: first..cells.len(),
            });
        }
        GridIndex {
            dim,
            cell_size,
            blocks,
            cells,
            order,
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Minimum distance from the segment `a`–`b` to the indexed samples,
    /// with the lowest sample index attaining it.
    pub(crate) fn nearest_to_segment(
        &self,
        points: &[Point],
        a: &[f64],
        b: &[f64],
        exclude: Option<Exclusion<'_>>,
    ) -> (f64, Option<usize>) {
        let mut ranked: Vec<(f64, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, blk)| (seg_dist(a, b, &blk.center) - blk.half_diag, i))
            .collect();
        ranked.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

        let mut best = f64::INFINITY;
        let mut arg: Option<usize> = None;
        for (lb, bi) in ranked {
            if lb > best {
                break;
            }
            for cell in &self.cells[self.blocks[bi].cells.clone()] {
                if seg_dist(a, b, &cell.center) - cell.half_diag > best {
                    continue;
                }
                for &idx in &self.order[cell.start..cell.end] {
                    let q = points[idx].coords();
                    if exclude.is_some_and(|ex| ex.skips(q)) {
                        continue;
                    }
                    let d = seg_dist(a, b, q);
                    if d < best || (d == best && arg.is_some_and(|j| idx < j)) {
                        best = d;
                        arg = Some(idx);
                    }
                }
            }
        }
        (best, arg)
    }
}

/// An obstacle sample set prepared for repeated clearance queries.
///
/// Uses a [`GridIndex`] above the size threshold and a linear scan below it;
/// both paths return identical values.
#[derive(Debug)]
pub struct Obstacle<'a> {
    cloud: &'a PointCloud,
    index: Option<GridIndex>,
}

impl<'a> Obstacle<'a> {
    /// `cell_size` should be on the order of the clearance being tested.
    pub fn new(cloud: &'a PointCloud, cell_size: f64) -> Self {
        Self::with_threshold(cloud, cell_size, DEFAULT_INDEX_THRESHOLD)
    }

    pub fn with_threshold(cloud: &'a PointCloud, cell_size: f64, threshold: usize) -> Self {
        let index = (cloud.len() > threshold).then(|| GridIndex::build(&cloud.points, cell_size));
        Obstacle { cloud, index }
    }

    /// Always scans linearly.
    pub fn exhaustive(cloud: &'a PointCloud) -> Self {
        Obstacle { cloud, index: None }
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    pub fn is_indexed(&self) -> bool {
        self.index.is_some()
    }

    pub(crate) fn nearest_raw(
        &self,
        a: &[f64],
        b: &[f64],
        exclude: Option<Exclusion<'_>>,
    ) -> (f64, Option<usize>) {
        match &self.index {
            Some(ix) => ix.nearest_to_segment(&self.cloud.points, a, b, exclude),
            None => scan_clearance(a, b, &self.cloud.points, exclude),
        }
    }

    /// Segment clearance; `f64::INFINITY` when no sample counts.
    pub fn clearance(&self, s: &Segment, exclude: Option<Exclusion<'_>>) -> Result<f64> {
        Ok(self.nearest_segment(s, exclude)?.0)
    }

    /// Segment clearance together with the lowest-index sample attaining it.
    pub fn nearest_segment(
        &self,
        s: &Segment,
        exclude: Option<Exclusion<'_>>,
    ) -> Result<(f64, Option<usize>)> {
        check_dims(self.cloud.ambient_dim, s.dim())?;
        Ok(self.nearest_raw(s.a.coords(), s.b.coords(), exclude))
    }

    /// Distance from a point to the nearest sample.
    pub fn point_distance(&self, p: &Point) -> Result<f64> {
        check_dims(self.cloud.ambient_dim, p.dim())?;
        Ok(self.nearest_raw(p.coords(), p.coords(), None).0)
    }
}
