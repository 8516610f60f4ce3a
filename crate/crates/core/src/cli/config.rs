use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    build_path, model_by_name, reference_waypoints, ConstantManipulator, ElbowManipulator, ElbowParameters,
    JointLimits, PathSpline, RobotModel,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantModelSpec {
    /// Row-major mass matrix.
    pub mass_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub external_force: Option<Vec<f64>>,
}

/// Which dynamics to use: a registry name, elbow parameters, or a constant
/// mass matrix and load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Named(String),
    Elbow { elbow: ElbowParameters },
    Constant { constant: ConstantModelSpec },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Named("murray-3dof".into())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Solve,
    Benchmark,
    OracleCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub include_discretization: bool,
    /// Largest size at which the propagation oracle is also timed.
    pub oracle_max_n: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1000, 10000],
            repeats: 21,
            include_discretization: false,
            oracle_max_n: 10000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_nodes: usize,
    pub max_constraints: usize,
    /// Also check the discretized model instance at `n`.
    pub include_model: bool,
    pub max_sweeps: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 1,
            max_nodes: 50,
            max_constraints: 8,
            include_model: true,
            max_sweeps: 10_000_000,
        }
    }
}

/// Contents of a run configuration file (JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Defaults to the reference path of the bundled robot.
    pub waypoints: Option<Vec<Vec<f64>>>,
    /// Defaults to the limits of the bundled robot.
    pub bounds: Option<JointLimits>,
    pub n: usize,
    pub mode: Mode,
    pub dt: f64,
    pub output: PathBuf,
    /// Arc-length table resolution of the path.
    pub path_samples: usize,
    /// Dense grid used by the continuous audit; 0 means `10·n`.
    pub audit_grid: usize,
    pub benchmark: BenchmarkConfig,
    pub check: CheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            waypoints: None,
            bounds: None,
            n: 1000,
            mode: Mode::default(),
            dt: 1e-3,
            output: PathBuf::from("pathspeed-out"),
            path_samples: 2001,
            audit_grid: 0,
            benchmark: BenchmarkConfig::default(),
            check: CheckConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n < 2 {
            return fail("n must be at least 2");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt must be positive");
        }
        if self.path_samples < 2 {
            return fail("path_samples must be at least 2");
        }
        if self.benchmark.repeats == 0 {
            return fail("benchmark.repeats must be positive");
        }
        if self.benchmark.sizes.iter().any(|&n| n < 2) {
            return fail("benchmark sizes must be at least 2");
        }
        if self.check.max_nodes < 2 {
            return fail("check.max_nodes must be at least 2");
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<RobotModel> {
        match &self.model {
            ModelSpec::Named(name) => {
                let model = model_by_name(name)?;
                match &self.bounds {
                    Some(b) => model.with_limits(b.clone()),
                    None => Ok(model),
                }
            }
            ModelSpec::Elbow { elbow } => {
                let limits = self
                    .bounds
                    .clone()
                    .unwrap_or_else(|| crate::dynamics::bundled_3dof_model().limits().clone());
                RobotModel::new(Arc::new(ElbowManipulator::new(*elbow)), limits)
            }
            ModelSpec::Constant { constant } => {
                let p = constant.mass_matrix.len();
                if constant.mass_matrix.iter().any(|row| row.len() != p) {
                    return Err(Error::InvalidModel("mass_matrix must be square".into()));
                }
                let mass = DMatrix::from_fn(p, p, |i, j| constant.mass_matrix[i][j]);
                let force = DVector::from_vec(constant.external_force.clone().unwrap_or_else(|| vec![0.0; p]));
                let bounds = self
                    .bounds
                    .clone()
                    .ok_or_else(|| Error::Config("a constant model needs explicit bounds".into()))?;
                RobotModel::new(Arc::new(ConstantManipulator::new(mass, force)?), bounds)
            }
        }
    }

    pub fn waypoints(&self) -> Vec<Vec<f64>> {
        self.waypoints.clone().unwrap_or_else(reference_waypoints)
    }

    pub fn build_path(&self) -> Result<PathSpline> {
        build_path(&self.waypoints(), self.path_samples)
    }

    pub fn audit_grid(&self) -> usize {
        if self.audit_grid == 0 {
            10 * self.n
        } else {
            self.audit_grid
        }
    }
}
