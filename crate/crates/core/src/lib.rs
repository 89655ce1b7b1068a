//! Motion planning through sampled fractal obstacles.
//!
//! The crate estimates box dimensions of sampled sets, finds straight escape
//! segments from a source to a target that avoid an obstacle dust, and plans
//! translation motions of a sampled submanifold around a thin obstacle by
//! routing a path through its configuration-space obstacle.

// `!(a < b)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxdim;
pub mod cspace;
pub mod error;
pub mod geom;
pub mod index;
pub mod motion;
pub mod pathfind;
pub mod setgen;
pub mod shadow;
pub mod tube;

pub use error::{Error, Result};
pub use geom::{distance, segment_clearance, segment_point_distance, Point, PointCloud, Segment, Window};
