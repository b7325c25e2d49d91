//! Batch tasks driven by a JSON configuration.
//!
//! [`execute`] validates the configuration and computes every output in
//! memory; [`write_outputs`] then writes the files and a `manifest.json`
//! listing each with its SHA-256. Nothing is written when validation or the
//! computation fails. Data files depend only on the configuration and seed;
//! the manifest alone carries a timestamp.
//!
//! ```json
//! {
//!   "system": {"A": [[0.4, -0.3], [0.5, 1.7]], "B": [[1.0], [0.0]]},
//!   "task": {"T": 1.0, "p": 6, "grid": {"kind": "shells", "radii": [5, 100], "directions": 760}},
//!   "seed": 0
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::{boundary_curve, reach_hull_planar, ControlBounds, DEFAULT_N_ETA};
use crate::design::{
    optimize, Constraint, DesignProblem, DesignVariables, LongitudinalModel, ModelBuilder, Objective, SqpOptions,
    SurrogateTable, SyntheticModel, TrimPoint, VolumeGrid,
};
use crate::error::{ReachError, Result};
use crate::geometry::convex_hull_of;
use crate::gramian::{ellipsoid, reachability_gramian};
use crate::lp::{
    budget_normalized_grid, costate_grid_seeded, inner_approx, sample_reach, unit_directions, LpSpec, DEFAULT_NODES,
};
use crate::lti::{matrix_from_rows, matrix_to_rows, LtiSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Boundary,
    Gramian,
    LpSample,
    InnerApprox,
    Volume,
    Optimize,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Boundary,
        Task::Gramian,
        Task::LpSample,
        Task::InnerApprox,
        Task::Volume,
        Task::Optimize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Boundary => "boundary",
            Task::Gramian => "gramian",
            Task::LpSample => "lp-sample",
            Task::InnerApprox => "inner-approx",
            Task::Volume => "volume",
            Task::Optimize => "optimize",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = ReachError;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ReachError::Config(format!("unknown task `{s}`")))
    }
}

/// System source: inline matrices or a named model builder.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `"longitudinal"` or `"synthetic"`; inline matrices when absent.
    pub model: Option<String>,
    #[serde(rename = "A")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    pub b: Option<Vec<Vec<f64>>>,
    /// Synthetic model: constant part of `B`.
    #[serde(rename = "B0")]
    pub b0: Option<Vec<Vec<f64>>>,
    /// Synthetic model: `B` coefficient matrix per design variable.
    pub terms: Option<BTreeMap<String, Vec<Vec<f64>>>>,
    pub design: Option<DesignVariables>,
    pub trim: Option<TrimConfig>,
    pub derivatives: Option<SurrogateTable>,
}

/// Trim condition in aviation units, converted to SI on ingestion.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrimConfig {
    pub alpha0_deg: f64,
    pub v0_knots: f64,
    pub h0_ft: f64,
    pub q0: f64,
    pub gamma0_deg: f64,
}

impl Default for TrimConfig {
    fn default() -> Self {
        Self {
            alpha0_deg: 12.0,
            v0_knots: 150.0,
            h0_ft: 5000.0,
            q0: 0.0,
            gamma0_deg: 0.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Costate grid layout.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    /// Listed radii, each with `directions` unit directions plus sign corners.
    Shells { radii: Vec<f64>, directions: usize },
    /// `shells` geometrically spaced radii from `min` to `max`.
    Geometric {
        min: f64,
        max: f64,
        shells: usize,
        directions: usize,
    },
    /// Unit directions rescaled so each control spends the whole budget.
    Normalized { directions: usize },
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Shells {
            radii: vec![5.0, 100.0],
            directions: 760,
        }
    }
}

fn radii(min: f64, max: f64, shells: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && shells >= 2) {
        return Err(ReachError::Config("geometric grid needs 0 < min < max and shells >= 2".into()));
    }
    Ok((0..shells)
        .map(|i| min * (max / min).powf(i as f64 / (shells - 1) as f64))
        .collect())
}

impl GridConfig {
    /// Costates for `sys`; the normalized layout needs the system and spec.
    pub fn costates(&self, sys: &LtiSystem, spec: &LpSpec, seed: u64) -> Result<Vec<DVector<f64>>> {
        match self {
            GridConfig::Shells { radii, directions } => costate_grid_seeded(sys.n(), radii, *directions, seed),
            GridConfig::Geometric {
                min,
                max,
                shells,
                directions,
            } => costate_grid_seeded(sys.n(), &radii(*min, *max, *shells)?, *directions, seed),
            GridConfig::Normalized { directions } => {
                budget_normalized_grid(sys, spec, &unit_directions(sys.n(), *directions, seed)?)
            }
        }
    }

    fn volume_grid(&self, n: usize, seed: u64) -> Result<VolumeGrid> {
        Ok(match self {
            GridConfig::Shells { radii, directions } => VolumeGrid::Fixed(costate_grid_seeded(n, radii, *directions, seed)?),
            GridConfig::Geometric {
                min,
                max,
                shells,
                directions,
            } => VolumeGrid::Fixed(costate_grid_seeded(n, &radii(*min, *max, *shells)?, *directions, seed)?),
            GridConfig::Normalized { directions } => VolumeGrid::Normalized(unit_directions(n, *directions, seed)?),
        })
    }
}

fn default_factor() -> f64 {
    1.1
}

fn default_horizon() -> f64 {
    1.0
}

fn default_volume_grid() -> GridConfig {
    GridConfig::Normalized { directions: 200 }
}

/// Reachability constraint of the `optimize` task.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintConfig {
    GramianTrace {
        #[serde(default = "default_factor")]
        factor: f64,
        #[serde(rename = "T", default = "default_horizon")]
        horizon: f64,
    },
    /// Uses the task's `p`, `budget`, `T` and `nodes`.
    LpVolume {
        #[serde(default = "default_factor")]
        factor: f64,
        #[serde(default = "default_volume_grid")]
        grid: GridConfig,
        projection: Option<Vec<usize>>,
    },
    Eccentricity {
        max_ratio: f64,
        #[serde(rename = "T", default = "default_horizon")]
        horizon: f64,
    },
}

/// Task parameters; every field has a default.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    /// Optional task name; must agree with the requested task when present.
    pub name: Option<String>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub bounds: Option<BoundsConfig>,
    pub n_eta: usize,
    pub p: u32,
    pub budget: f64,
    pub nodes: usize,
    /// Energy budget `c` bounding `‖u‖²_{L2}` for the Gramian ellipsoid.
    pub energy: f64,
    pub grid: GridConfig,
    pub projection: Option<Vec<usize>>,
    pub constraints: Vec<ConstraintConfig>,
    /// Design variable box `name -> [lower, upper]`.
    pub design_box: Option<BTreeMap<String, [f64; 2]>>,
    pub objective: Option<Objective>,
    pub optimizer: SqpOptions,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            name: None,
            horizon: 1.0,
            bounds: None,
            n_eta: DEFAULT_N_ETA,
            p: 6,
            budget: 1.0,
            nodes: DEFAULT_NODES,
            energy: 1.0,
            grid: GridConfig::default(),
            projection: None,
            constraints: vec![ConstraintConfig::GramianTrace {
                factor: 1.1,
                horizon: 1.0,
            }],
            design_box: None,
            objective: None,
            optimizer: SqpOptions::default(),
        }
    }
}

impl TaskConfig {
    pub fn lp_spec(&self) -> Result<LpSpec> {
        Ok(LpSpec::new(self.p, self.budget, self.horizon)?.with_nodes(self.nodes)?)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads and parses a config file; an unreadable file is a configuration error.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReachError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

enum Source {
    Inline(LtiSystem),
    Model(Arc<dyn ModelBuilder>, DesignVariables, Option<LongitudinalModel>),
}

impl Source {
    fn system(&self) -> Result<LtiSystem> {
        match self {
            Source::Inline(sys) => Ok(sys.clone()),
            Source::Model(m, dv, _) => m.build(dv),
        }
    }
}

fn source(cfg: &SystemConfig) -> Result<Source> {
    let unused = |what: &str, present: bool| {
        if present {
            Err(ReachError::Config(format!("`{what}` does not apply to this system source")))
        } else {
            Ok(())
        }
    };
    match cfg.model.as_deref() {
        None => {
            unused("B0", cfg.b0.is_some())?;
            unused("terms", cfg.terms.is_some())?;
            unused("design", cfg.design.is_some())?;
            unused("trim", cfg.trim.is_some())?;
            unused("derivatives", cfg.derivatives.is_some())?;
            let a = cfg.a.as_ref().ok_or_else(|| ReachError::Config("system needs `A` or `model`".into()))?;
            let b = cfg.b.as_ref().ok_or_else(|| ReachError::Config("system needs `B`".into()))?;
            Ok(Source::Inline(LtiSystem::from_rows(a, b)?))
        }
        Some("longitudinal") => {
            unused("A", cfg.a.is_some())?;
            unused("B", cfg.b.is_some())?;
            unused("B0", cfg.b0.is_some())?;
            unused("terms", cfg.terms.is_some())?;
            let t = cfg.trim.clone().unwrap_or_default();
            let trim = TrimPoint::from_aviation_units(t.alpha0_deg, t.v0_knots, t.h0_ft, t.q0, t.gamma0_deg)?;
            let model = LongitudinalModel {
                trim,
                table: cfg.derivatives.clone().unwrap_or_default(),
            };
            let design = cfg.design.clone().unwrap_or_else(|| model.table.reference_design());
            Ok(Source::Model(Arc::new(model.clone()), design, Some(model)))
        }
        Some("synthetic") => {
            unused("B", cfg.b.is_some())?;
            unused("trim", cfg.trim.is_some())?;
            unused("derivatives", cfg.derivatives.is_some())?;
            let a = matrix_from_rows(
                cfg.a.as_ref().ok_or_else(|| ReachError::Config("synthetic model needs `A`".into()))?,
            )?;
            let terms: Vec<(String, DMatrix<f64>)> = cfg
                .terms
                .as_ref()
                .ok_or_else(|| ReachError::Config("synthetic model needs `terms`".into()))?
                .iter()
                .map(|(k, rows)| Ok((k.clone(), matrix_from_rows(rows)?)))
                .collect::<Result<_>>()?;
            let (n, m) = (a.nrows(), terms.first().map_or(1, |(_, t)| t.ncols()));
            let b0 = match &cfg.b0 {
                Some(rows) => matrix_from_rows(rows)?,
                None => DMatrix::zeros(n, m),
            };
            let design = cfg
                .design
                .clone()
                .ok_or_else(|| ReachError::Config("synthetic model needs `design`".into()))?;
            Ok(Source::Model(Arc::new(SyntheticModel::new(a, b0, terms)?), design, None))
        }
        Some(other) => Err(ReachError::Config(format!("unknown model `{other}`"))),
    }
}

/// One output file held in memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: &str, text: String) -> Self {
        Self {
            name: name.to_string(),
            bytes: text.into_bytes(),
        }
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct GramianOutput<'a> {
    #[serde(rename = "T")]
    horizon: f64,
    c: f64,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    trace: f64,
    eigenvalues: &'a [f64],
    axes: Vec<crate::gramian::EllipsoidAxis>,
}

/// Validates `config` for `task` and computes its outputs without touching the filesystem.
pub fn execute(task: Task, config: &RunConfig, seed: u64) -> Result<Vec<Artifact>> {
    if let Some(name) = &config.task.name {
        if name.parse::<Task>()? != task {
            return Err(ReachError::Config(format!("config names task `{name}` but `{task}` was requested")));
        }
    }
    let source = source(&config.system)?;
    let tc = &config.task;
    match task {
        Task::Boundary => {
            let sys = source.system()?;
            let bounds = match &tc.bounds {
                Some(b) => ControlBounds::new(DVector::from_vec(b.lower.clone()), DVector::from_vec(b.upper.clone()))?,
                None => ControlBounds::symmetric(sys.m(), 1.0)?,
            };
            let curve = boundary_curve(&sys, &bounds, tc.horizon, tc.n_eta)?;
            if let Some(w) = &curve.warning {
                log::warn!("{w}");
            }
            let hull = reach_hull_planar(&curve)?;
            Ok(vec![
                Artifact {
                    name: "boundary.csv".into(),
                    bytes: csv_bytes(|b| curve.write_csv(b))?,
                },
                Artifact::text("hull.json", hull.to_json()),
            ])
        }
        Task::Gramian => {
            let sys = source.system()?;
            let g = reachability_gramian(&sys, tc.horizon)?;
            let e = ellipsoid(&g, tc.energy)?;
            let out = GramianOutput {
                horizon: tc.horizon,
                c: tc.energy,
                w: matrix_to_rows(&g.w),
                trace: g.trace(),
                eigenvalues: &g.eigenvalues,
                axes: e.axes,
            };
            Ok(vec![Artifact::text(
                "gramian.json",
                serde_json::to_string_pretty(&out).expect("gramian output serializes"),
            )])
        }
        Task::LpSample | Task::InnerApprox => {
            let sys = source.system()?;
            let spec = tc.lp_spec()?;
            let grid = tc.grid.costates(&sys, &spec, seed)?;
            let cloud = if task == Task::LpSample {
                sample_reach(&sys, &spec, &grid)?
            } else {
                inner_approx(&sys, &spec, &grid)?
            };
            log::info!("{} samples, {} reachable", cloud.samples.len(), cloud.reachable_count());
            let mut out = vec![Artifact {
                name: "cloud.csv".into(),
                bytes: csv_bytes(|b| cloud.write_csv(b))?,
            }];
            if let Some(h) = &cloud.hull {
                out.push(Artifact::text("hull.json", h.to_json()));
            }
            Ok(out)
        }
        Task::Volume => {
            let sys = source.system()?;
            let spec = tc.lp_spec()?;
            let grid = tc.grid.costates(&sys, &spec, seed)?;
            let cloud = sample_reach(&sys, &spec, &grid)?;
            let coords: Vec<usize> = tc.projection.clone().unwrap_or_else(|| (0..sys.n()).collect());
            if let Some(&bad) = coords.iter().find(|&&i| i >= sys.n()) {
                return Err(ReachError::Config(format!("projection index {bad} exceeds state dimension")));
            }
            let pts: Vec<DVector<f64>> = cloud
                .samples
                .iter()
                .filter(|s| s.reachable)
                .map(|s| DVector::from_iterator(coords.len(), coords.iter().map(|&i| s.endpoint[i])))
                .collect();
            if pts.is_empty() {
                return Err(ReachError::Numeric("no reachable endpoint in the costate grid".into()));
            }
            let hull = convex_hull_of(&pts, coords.len())?;
            log::info!("volume {}", hull.volume);
            Ok(vec![Artifact::text("hull.json", hull.to_json())])
        }
        Task::Optimize => {
            let Source::Model(model, baseline, wing) = source else {
                return Err(ReachError::Config("optimize needs a model-based system".into()));
            };
            let n = model.build(&baseline)?.n();
            let constraints = tc
                .constraints
                .iter()
                .map(|c| {
                    Ok(match c {
                        ConstraintConfig::GramianTrace { factor, horizon } => Constraint::GramianTrace {
                            factor: *factor,
                            horizon: *horizon,
                        },
                        ConstraintConfig::LpVolume {
                            factor,
                            grid,
                            projection,
                        } => Constraint::LpVolume {
                            spec: tc.lp_spec()?,
                            factor: *factor,
                            grid: grid.volume_grid(n, seed)?,
                            projection: projection.clone(),
                        },
                        ConstraintConfig::Eccentricity { max_ratio, horizon } => Constraint::Eccentricity {
                            max_ratio: *max_ratio,
                            horizon: *horizon,
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let bounds: Vec<(String, f64, f64)> = match (&tc.design_box, &wing) {
                (Some(b), _) => b.iter().map(|(k, [lo, hi])| (k.clone(), *lo, *hi)).collect(),
                (None, Some(w)) => vec![
                    ("b".into(), 0.5 * w.table.b0, 1.5 * w.table.b0),
                    ("c_bar".into(), 0.5 * w.table.c_bar0, 1.5 * w.table.c_bar0),
                ],
                (None, None) => return Err(ReachError::Config("synthetic optimize needs `design_box`".into())),
            };
            let bounds: Vec<(&str, f64, f64)> = bounds.iter().map(|(k, l, h)| (k.as_str(), *l, *h)).collect();
            let problem = DesignProblem::new(
                model,
                baseline,
                &bounds,
                tc.objective.clone().unwrap_or_default(),
                constraints,
            )?;
            let result = optimize(&problem, &tc.optimizer)?;
            log::info!(
                "optimize: {} iterations, converged = {}, objective {}",
                result.iterations,
                result.converged,
                result.objective_value
            );
            Ok(vec![Artifact::text("optresult.json", result.to_json())])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub task: String,
    pub seed: u64,
    pub created_unix_seconds: u64,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the artifacts and `manifest.json` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, task: Task, seed: u64, artifacts: &[Artifact]) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
        files.push(ManifestEntry {
            name: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len(),
        });
    }
    let created_unix_seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let manifest = Manifest {
        task: task.name().to_string(),
        seed,
        created_unix_seconds,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}

/// Output directory precedence: explicit argument, then config, then `out`.
pub fn run(task: Task, config: &RunConfig, out: Option<&Path>, seed: Option<u64>) -> Result<Manifest> {
    let seed = seed.unwrap_or(config.seed);
    let artifacts = execute(task, config, seed)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    write_outputs(&dir, task, seed, &artifacts)
}

/// Process exit status: 2 for invalid input, 1 for I/O failures, 3 for numeric failures.
pub fn exit_code(e: &ReachError) -> i32 {
    if e.is_validation() {
        2
    } else if matches!(e, ReachError::Io(_)) {
        1
    } else {
        3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{"system": {"A": [[0.4, -0.3], [0.5, 1.7]], "B": [[1.0], [0.0]]}}"#;

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
        }
        assert!("bogus".parse::<Task>().unwrap_err().is_validation());
    }

    #[test]
    fn boundary_outputs() {
        let cfg = RunConfig::from_json(EXAMPLE).unwrap();
        let out = execute(Task::Boundary, &cfg, 0).unwrap();
        assert_eq!(out.len(), 2);
        let csv = String::from_utf8(out[0].bytes.clone()).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * DEFAULT_N_ETA);
        let hull: serde_json::Value = serde_json::from_slice(&out[1].bytes).unwrap();
        assert_eq!(hull["dim"], 2);
        assert_eq!(out, execute(Task::Boundary, &cfg, 0).unwrap());
    }

    #[test]
    fn lp_sample_default_shells() {
        let cfg = RunConfig::from_json(EXAMPLE).unwrap();
        let out = execute(Task::LpSample, &cfg, 0).unwrap();
        let csv = String::from_utf8(out[0].bytes.clone()).unwrap();
        assert_eq!(csv.lines().count(), 1 + 1528);
    }

    #[test]
    fn validation_errors() {
        for bad in [
            r#"{"system": {"A": [[1.0]]}}"#,
            r#"{"system": {"A": [[1.0]], "B": [[1.0]]}, "task": {"p": 3}}"#,
            r#"{"system": {"A": [[1.0]], "B": [[1.0]]}, "bogus": 1}"#,
            r#"{"system": {"model": "glider"}}"#,
            r#"{"system": {"A": [[1.0]], "B": [[1.0]]}, "task": {"name": "volume"}}"#,
        ] {
            let err = RunConfig::from_json(bad).and_then(|c| execute(Task::LpSample, &c, 0)).unwrap_err();
            assert_eq!(exit_code(&err), 2, "{bad}: {err}");
        }
        let cfg = RunConfig::from_json(EXAMPLE).unwrap();
        assert_eq!(exit_code(&execute(Task::Optimize, &cfg, 0).unwrap_err()), 2);
    }

    #[test]
    fn manifest_hashes_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_json(EXAMPLE).unwrap();
        let m = run(Task::Gramian, &cfg, Some(dir.path()), None).unwrap();
        assert_eq!(m.files.len(), 1);
        let bytes = std::fs::read(dir.path().join("gramian.json")).unwrap();
        assert_eq!(m.files[0].sha256, sha256_hex(&bytes));
        assert!(dir.path().join("manifest.json").exists());
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn longitudinal_optimize_runs() {
        let cfg = RunConfig::from_json(r#"{"system": {"model": "longitudinal"}}"#).unwrap();
        let out = execute(Task::Optimize, &cfg, 0).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out[0].bytes).unwrap();
        assert_eq!(v["converged"], true);
        assert!(v["history"].as_array().unwrap().len() > 1);
    }
}
