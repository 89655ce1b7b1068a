use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point must have at least one coordinate")]
    EmptyPoint,

    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown generator kind `{0}`")]
    UnknownKind(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("generator produced no points: {0}")]
    EmptyResult(String),

    #[error("estimator precondition violated: {0}")]
    Estimator(String),

    #[error("source lies within {resolution} of the obstacle (distance {distance})")]
    SourceTooClose { distance: f64, resolution: f64 },

    #[error("source coincides with a target sample")]
    SourceOnTarget,

    #[error("point is not in the cone over the target")]
    NotInCone,

    #[error("point at distance {distance} lies inside the safe ball of radius {safe_radius}")]
    InsideSafeBall { distance: f64, safe_radius: f64 },

    #[error("no clear waypoint on the sphere of radius {radius} after {tries} candidates")]
    NoWaypointFound { radius: f64, tries: usize },

    #[error("obstacle too close to the origin: clearance {clearance} <= 2 * epsilon ({epsilon})")]
    ObstacleAtOrigin { clearance: f64, epsilon: f64 },

    #[error("target offset has clearance {clearance} < epsilon {epsilon}")]
    TargetBlocked { clearance: f64, epsilon: f64 },

    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
