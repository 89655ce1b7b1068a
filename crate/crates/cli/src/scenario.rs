//! Scenario files: named sets plus the parameters each subcommand needs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dustmotion::boxdim::EstimatorConfig;
use dustmotion::setgen::SetSource;
use dustmotion::{Point, PointCloud};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub x0: Point,
    pub y0: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub ambient_dim: usize,
    /// `X` (obstacle), `Y` (target), `M` (moving set).
    pub sets: BTreeMap<String, SetSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Anchor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_displacement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_samples: Option<usize>,
}

/// A scenario with its referenced sets generated and epsilon settled.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub sets: BTreeMap<String, PointCloud>,
    pub epsilon: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("malformed scenario")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Generates the sets in `names`, which must all be present, and fixes
    /// epsilon: the override, else the scenario value, else twice the
    /// largest resolution.
    pub fn resolve(&self, names: &[&str], epsilon: Option<f64>, seed: Option<u64>) -> Result<Resolved> {
        let mut sets = BTreeMap::new();
        for &name in names {
            let source = self
                .sets
                .get(name)
                .ok_or_else(|| anyhow!("scenario has no set `{name}`"))?;
            let cloud = source.resolve().with_context(|| format!("generating set `{name}`"))?;
            if cloud.ambient_dim != self.ambient_dim {
                bail!(
                    "set `{name}` lives in dimension {} but the scenario is {}-dimensional",
                    cloud.ambient_dim,
                    self.ambient_dim
                );
            }
            sets.insert(name.to_string(), cloud);
        }
        let max_res = sets.values().map(|c| c.resolution).fold(0.0, f64::max);
        let epsilon = epsilon.or(self.epsilon).unwrap_or(2.0 * max_res);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            bail!("epsilon must be positive, got {epsilon}");
        }
        if epsilon < max_res {
            bail!("epsilon {epsilon} is below the sampling resolution {max_res}");
        }
        for p in self.source.iter().chain(self.anchor.iter().flat_map(|a| [&a.x0, &a.y0])) {
            if p.dim() != self.ambient_dim {
                bail!("point {:?} does not have dimension {}", p.coords(), self.ambient_dim);
            }
        }
        Ok(Resolved {
            scenario: self.clone(),
            sets,
            epsilon,
            seed: seed.unwrap_or(self.seed),
        })
    }
}

impl Resolved {
    pub fn set(&self, name: &str) -> &PointCloud {
        &self.sets[name]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLANES: &str = include_str!("../scenarios/remark24-planes.json");

    #[test]
    fn bundled_scenario_resolves() {
        let s = Scenario::from_json(PLANES).unwrap();
        let r = s.resolve(&["X", "Y"], None, None).unwrap();
        assert_eq!(r.epsilon, 0.2);
        assert_eq!(r.set("Y").len(), 21 * 21);
        assert_eq!(r.seed, 0);
    }

    #[test]
    fn epsilon_defaults_to_twice_resolution() {
        let mut s = Scenario::from_json(PLANES).unwrap();
        s.epsilon = None;
        let r = s.resolve(&["X", "Y"], None, Some(9)).unwrap();
        assert_eq!(r.epsilon, 0.2);
        assert_eq!(r.seed, 9);
        let r = s.resolve(&["X"], Some(0.5), None).unwrap();
        assert_eq!(r.epsilon, 0.5);
        assert!(s.resolve(&["X"], Some(0.01), None).is_err());
    }

    #[test]
    fn missing_set_and_unknown_field_are_errors() {
        let s = Scenario::from_json(PLANES).unwrap();
        assert!(s.resolve(&["M"], None, None).is_err());
        let bad = PLANES.replacen("\"seed\"", "\"sead\"", 1);
        assert!(Scenario::from_json(&bad).is_err());
        assert!(Scenario::from_json("{").is_err());
    }
}
