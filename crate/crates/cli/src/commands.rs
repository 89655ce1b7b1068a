use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dustmotion::boxdim::{estimate_dimension, CountMethod, DimensionEstimate, EstimatorConfig};
use dustmotion::cspace::{gate_report, minkowski_difference, GateReport, Subsampling};
use dustmotion::motion::{AvoidanceReport, MotionPlan, Verification, DEFAULT_CROSS_CHECK_CAP};
use dustmotion::pathfind::{Planner, PolyPath};
use dustmotion::setgen::GeneratorSpec;
use dustmotion::shadow::{find_escape_line, EscapeResult, Outcome};
use dustmotion::tube::{frame_defects, tube_is_embedded, tube_project, TubeBoundReport, TubeFixture};
use dustmotion::{distance, Error, Point, PointCloud};
use serde::{Deserialize, Serialize};

use crate::scenario::{Resolved, Scenario};
use crate::{Output, Status};

pub const DEFAULT_T_SAMPLES: usize = 101;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn gen(spec_path: &Path) -> Result<Output> {
    let spec: GeneratorSpec = serde_json::from_str(&read(spec_path)?).context("malformed generator spec")?;
    let cloud = spec.generate()?;
    Output::json(Status::Success, &cloud)
}

/// Ladder from a quarter of the largest bounding-box side down by a factor
/// of 64, never below twice the resolution.
pub fn default_estimator(cloud: &PointCloud, method: CountMethod) -> EstimatorConfig {
    let extent = cloud
        .bounds()
        .map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max))
        .unwrap_or(0.0);
    let extent = if extent > 0.0 { extent } else { 100.0 * cloud.resolution };
    let delta_max = extent / 4.0;
    let mut delta_min = (2.0 * cloud.resolution).max(delta_max / 64.0);
    if delta_min >= delta_max {
        delta_min = delta_max / 4.0;
    }
    EstimatorConfig::new(delta_max, delta_min, 7, method)
}

pub fn csv_rows(estimate: &DimensionEstimate) -> String {
    let mut s = String::from("method,delta,count\n");
    for c in &estimate.counts {
        let _ = writeln!(s, "{},{},{}", c.method, c.delta, c.count);
    }
    s
}

pub fn dim(
    cloud_path: &Path,
    delta_max: Option<f64>,
    delta_min: Option<f64>,
    levels: Option<usize>,
    method: CountMethod,
) -> Result<Output> {
    let cloud: PointCloud = serde_json::from_str(&read(cloud_path)?).context("malformed point cloud")?;
    if cloud.is_empty() {
        bail!(Error::EmptyCloud);
    }
    let d = default_estimator(&cloud, method);
    let config = EstimatorConfig::new(
        delta_max.unwrap_or(d.delta_max),
        delta_min.unwrap_or(d.delta_min),
        levels.unwrap_or(d.levels),
        method,
    );
    let estimate = estimate_dimension(&cloud, &config)?;
    let mut out = Output::json(Status::Success, &estimate)?;
    out.csv = Some(csv_rows(&estimate));
    Ok(out)
}

/// Angular spacing of the target samples as seen from the source.
fn default_angular_tol(source: &Point, y: &PointCloud) -> Result<f64> {
    let nearest = y
        .points
        .iter()
        .map(|p| distance(source, p))
        .collect::<dustmotion::Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(y.resolution / nearest)
}

pub fn run_escape(r: &Resolved) -> Result<EscapeResult> {
    let source = r
        .scenario
        .source
        .as_ref()
        .ok_or_else(|| anyhow!("scenario has no source point"))?;
    let (x, y) = (r.set("X"), r.set("Y"));
    let tol = match r.scenario.angular_tol {
        Some(t) => t,
        None => default_angular_tol(source, y)?,
    };
    Ok(find_escape_line(source, y, x, r.epsilon, tol)?)
}

pub fn escape(path: &Path, epsilon: Option<f64>, seed: Option<u64>) -> Result<Output> {
    let scenario = Scenario::load(path)?;
    if scenario.source.is_none() {
        bail!("scenario has no source point");
    }
    let r = scenario.resolve(&["X", "Y"], epsilon, seed)?;
    let result = run_escape(&r)?;
    let status = match result.outcome {
        Outcome::Escape => Status::Success,
        Outcome::Covered => Status::Negative,
    };
    Output::json(status, &result)
}

pub fn cspace(path: &Path, cap: Option<usize>, epsilon: Option<f64>, seed: Option<u64>) -> Result<Output> {
    let scenario = Scenario::load(path)?;
    let r = scenario.resolve(&["M", "X"], epsilon, seed)?;
    let cap = cap.or(scenario.cap).unwrap_or(DEFAULT_CROSS_CHECK_CAP);
    let k = minkowski_difference(r.set("M"), r.set("X"), cap)?;
    Output::json(Status::Success, &k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Verified,
    GateFailed,
    NoWaypoint,
    VerificationFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CSpaceSummary {
    pub points: usize,
    pub full_product: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsampling: Option<Subsampling>,
    /// `dist(0, K)`, i.e. the distance between M and X.
    pub origin_clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub status: PlanStatus,
    pub gate: GateReport,
    pub dim_x: DimensionEstimate,
    /// `topological` when the set carries it, `estimated` otherwise.
    pub dim_m_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cspace: Option<CSpaceSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoidance: Option<AvoidanceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<MotionPlan>,
}

impl PlanReport {
    pub fn status(&self) -> Status {
        match self.status {
            PlanStatus::Verified => Status::Success,
            _ => Status::Negative,
        }
    }
}

/// The full translation pipeline on a resolved scenario with sets `M`, `X`.
pub fn run_plan(r: &Resolved, t_samples: Option<usize>) -> Result<PlanReport> {
    let (m, x) = (r.set("M"), r.set("X"));
    let sc = &r.scenario;
    let config = sc
        .estimator
        .unwrap_or_else(|| default_estimator(x, CountMethod::Packing));
    let dim_x = estimate_dimension(x, &config).context("estimating dim X")?;
    let (dim_m, dim_m_source) = match m.true_dim {
        Some(d) => (d, "topological"),
        None => {
            let e = estimate_dimension(m, &default_estimator(m, config.method)).context("estimating dim M")?;
            (e.slope, "estimated")
        }
    };
    let gate = gate_report(&dim_x, dim_m, sc.ambient_dim);
    let mut report = PlanReport {
        status: PlanStatus::GateFailed,
        gate,
        dim_x,
        dim_m_source: dim_m_source.into(),
        cspace: None,
        failure: None,
        avoidance: None,
        plan: None,
    };
    if !gate.passes {
        report.failure = Some(format!(
            "dim X estimate {:.4} is not below n - dim M - 1 = {:.4}",
            gate.dim_x, gate.budget
        ));
        return Ok(report);
    }

    let cap = sc.cap.unwrap_or(DEFAULT_CROSS_CHECK_CAP);
    let k = minkowski_difference(m, x, cap)?;
    let planner = Planner::new(&k, r.epsilon)?;
    let d0 = planner.origin_clearance();
    report.cspace = Some(CSpaceSummary {
        points: k.points.len(),
        full_product: k.is_full_product(),
        subsampling: k.subsampling,
        origin_clearance: d0,
    });

    let path = match (&sc.anchor, sc.max_displacement) {
        (Some(a), _) => planner.anchored_escape_path(&a.y0.sub(&a.x0)?, r.seed),
        (None, Some(max)) => planner.small_displacement_path(max, r.seed),
        (None, None) => {
            // End beyond every sample of K so the moved set clears X entirely.
            let outer = k.points.points.iter().map(Point::norm).fold(0.0, f64::max);
            planner
                .find_clear_point(outer + 2.0 * r.epsilon, r.seed)
                .and_then(|b1| planner.build_escape_path(&b1, r.seed))
        }
    };
    let path: PolyPath = match path {
        Ok(p) => p,
        Err(e @ Error::NoWaypointFound { .. }) => {
            report.status = PlanStatus::NoWaypoint;
            report.failure = Some(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };

    let mut plan = MotionPlan::new(m.clone(), path, x.clone(), r.epsilon)?;
    let anchor = sc.anchor.as_ref().map(|a| (&a.x0, &a.y0));
    let avoidance = plan.verify(t_samples.or(sc.t_samples).unwrap_or(DEFAULT_T_SAMPLES), anchor)?;
    let ok = plan.verification.as_ref().is_some_and(Verification::all_ok);
    report.status = if ok {
        PlanStatus::Verified
    } else {
        PlanStatus::VerificationFailed
    };
    report.avoidance = Some(avoidance);
    report.plan = Some(plan);
    Ok(report)
}

pub fn plan(path: &Path, t_samples: Option<usize>, epsilon: Option<f64>, seed: Option<u64>) -> Result<Output> {
    let scenario = Scenario::load(path)?;
    let r = scenario.resolve(&["M", "X"], epsilon, seed)?;
    let report = run_plan(&r, t_samples)?;
    Output::json(report.status(), &report)
}

fn parse_point(s: &str) -> Result<Point> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().with_context(|| format!("bad coordinate `{c}`")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Point::new(coords)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub verification: Verification,
    pub avoidance: AvoidanceReport,
}

pub fn verify(path: &Path, t_samples: usize, x0: Option<&str>, y0: Option<&str>) -> Result<Output> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).context("malformed plan")?;
    // Accept a bare plan or the report written by `plan`.
    let plan_value = match value.get("plan") {
        Some(inner) if value.get("status").is_some() => inner.clone(),
        _ => value,
    };
    let mut plan: MotionPlan = serde_json::from_value(plan_value).context("malformed plan")?;
    let anchor = match (x0, y0) {
        (Some(a), Some(b)) => Some((parse_point(a)?, parse_point(b)?)),
        _ => None,
    };
    let avoidance = plan.verify(t_samples, anchor.as_ref().map(|(a, b)| (a, b)))?;
    let verification = plan.verification.clone().expect("verify stores a record");
    let status = if verification.all_ok() {
        Status::Success
    } else {
        Status::Negative
    };
    Output::json(
        status,
        &VerifyReport {
            verification,
            avoidance,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    pub fixture: String,
    pub bound: TubeBoundReport,
    pub max_normal_tangent_dot: f64,
    pub max_normal_length_error: f64,
    pub projection_exact: bool,
    pub embedded: bool,
    pub samples: usize,
}

impl TubeReport {
    pub fn passed(&self) -> bool {
        self.bound.satisfied
            && self.max_normal_tangent_dot <= 1e-9
            && self.max_normal_length_error <= 1e-12
            && self.projection_exact
            && self.embedded
    }
}

pub fn run_tube(name: &str, method: CountMethod) -> Result<TubeReport> {
    let f = TubeFixture::named(name, method)?;
    let bound = f.check()?;
    let (dot, unit) = frame_defects(&f.manifold, &f.y_params)?;
    let tube = f.thicken()?;
    let per_base = tube.samples.len() / f.y_params.len();
    let projection_exact = tube.samples.iter().enumerate().all(|(i, s)| {
        f.manifold
            .frame(&f.y_params[i / per_base])
            .is_ok_and(|fr| tube_project(s).coords() == &fr.point[..])
    });
    Ok(TubeReport {
        fixture: name.into(),
        bound,
        max_normal_tangent_dot: dot,
        max_normal_length_error: unit,
        projection_exact,
        embedded: tube_is_embedded(&tube),
        samples: tube.samples.len(),
    })
}

pub fn tube(name: &str, method: CountMethod) -> Result<Output> {
    let report = run_tube(name, method)?;
    let status = if report.passed() {
        Status::Success
    } else {
        Status::Negative
    };
    Output::json(status, &report)
}
