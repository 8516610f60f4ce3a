//! Manipulator models, joint limits and the projection of the equations of
//! motion onto a path.
//!
//! Along `q = γ(s)` with `ṡ² = b(s)` and `s̈ = a(s) = b′(s)/2`,
//! `D(q)q̈ + C(q, q̇)q̇ + ℓ(q) = τ` becomes `τ = d·a + c·b + g` with
//!
//! ```text
//! d = D(γ) γ′
//! c = D(γ) γ″ + C(γ, γ′) γ′
//! g = ℓ(γ)
//! ```

mod elbow;
mod path;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use elbow::{bundled_3dof_model, reference_waypoints, ElbowManipulator, ElbowParameters, LinkParameters};
pub use path::{build_path, PathPoint, PathSpline};

/// Rigid-body dynamics `D(q)q̈ + C(q, q̇)q̇ + ℓ(q) = τ`.
///
/// Implementations must be pure: the solver may evaluate them from several
/// threads and in any order.
pub trait Manipulator: Send + Sync {
    fn dof(&self) -> usize;

    /// Symmetric positive definite mass matrix `D(q)`.
    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64>;

    /// Coriolis and centrifugal matrix `C(q, q̇)`, linear in `q̇`.
    fn coriolis_matrix(&self, q: &DVector<f64>, qd: &DVector<f64>) -> DMatrix<f64>;

    /// Configuration-dependent load `ℓ(q)`, typically gravity.
    fn external_force(&self, q: &DVector<f64>) -> DVector<f64>;

    fn name(&self) -> &str {
        "custom"
    }
}

/// Builds `C(q, q̇)` from the partial derivatives `∂D/∂q_k` with Christoffel
/// symbols of the first kind.
pub fn coriolis_from_partials(partials: &[DMatrix<f64>], qd: &DVector<f64>) -> DMatrix<f64> {
    let p = qd.len();
    DMatrix::from_fn(p, p, |i, j| {
        (0..p)
            .map(|k| {
                0.5 * (partials[k][(i, j)] + partials[j][(i, k)] - partials[i][(k, j)]) * qd[k]
            })
            .sum()
    })
}

/// Constant mass matrix and constant load, no velocity coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantManipulator {
    pub mass: DMatrix<f64>,
    pub force: DVector<f64>,
}

impl ConstantManipulator {
    pub fn new(mass: DMatrix<f64>, force: DVector<f64>) -> Result<Self> {
        let p = force.len();
        if mass.nrows() != p || mass.ncols() != p || p == 0 {
            return Err(Error::InvalidModel(format!(
                "mass matrix is {}x{} but the load has {p} entries",
                mass.nrows(),
                mass.ncols()
            )));
        }
        if (&mass - mass.transpose()).amax() > 1e-12 * mass.amax().max(1.0) {
            return Err(Error::InvalidModel("mass matrix is not symmetric".into()));
        }
        if mass.clone().cholesky().is_none() {
            return Err(Error::InvalidModel("mass matrix is not positive definite".into()));
        }
        Ok(Self { mass, force })
    }

    /// Identity mass matrix, no load.
    pub fn identity(dof: usize) -> Self {
        Self {
            mass: DMatrix::identity(dof, dof),
            force: DVector::zeros(dof),
        }
    }
}

impl Manipulator for ConstantManipulator {
    fn dof(&self) -> usize {
        self.force.len()
    }

    fn mass_matrix(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        self.mass.clone()
    }

    fn coriolis_matrix(&self, _q: &DVector<f64>, _qd: &DVector<f64>) -> DMatrix<f64> {
        let p = self.dof();
        DMatrix::zeros(p, p)
    }

    fn external_force(&self, _q: &DVector<f64>) -> DVector<f64> {
        self.force.clone()
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// One row of a limit table: per-joint values at arc length `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSample {
    pub s: f64,
    pub values: Vec<f64>,
}

/// Per-joint bound, either constant or tabulated along the path.
///
/// Tables are interpolated linearly in arc length and held constant beyond
/// their first and last rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Limit {
    Constant(Vec<f64>),
    Table(Vec<LimitSample>),
}

impl Limit {
    pub fn uniform(dof: usize, value: f64) -> Self {
        Limit::Constant(vec![value; dof])
    }

    pub fn dof(&self) -> usize {
        match self {
            Limit::Constant(v) => v.len(),
            Limit::Table(rows) => rows.first().map_or(0, |r| r.values.len()),
        }
    }

    pub fn at(&self, s: f64, out: &mut [f64]) {
        match self {
            Limit::Constant(v) => out.copy_from_slice(v),
            Limit::Table(rows) => {
                let i = rows.partition_point(|r| r.s <= s);
                if i == 0 {
                    out.copy_from_slice(&rows[0].values);
                } else if i == rows.len() {
                    out.copy_from_slice(&rows[i - 1].values);
                } else {
                    let (r0, r1) = (&rows[i - 1], &rows[i]);
                    let t = (s - r0.s) / (r1.s - r0.s);
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = r0.values[j] + t * (r1.values[j] - r0.values[j]);
                    }
                }
            }
        }
    }

    fn validate(&self, family: &str, dof: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(format!("{family} limit: {msg}")));
        let check_values = |values: &[f64]| -> Result<()> {
            if values.len() != dof {
                return bad(format!("{} values for {dof} joints", values.len()));
            }
            if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return bad(format!("value {v} must be finite and positive"));
            }
            Ok(())
        };
        match self {
            Limit::Constant(v) => check_values(v),
            Limit::Table(rows) => {
                if rows.is_empty() {
                    return bad("empty table".into());
                }
                for (k, row) in rows.iter().enumerate() {
                    check_values(&row.values)?;
                    if !row.s.is_finite() || (k > 0 && row.s <= rows[k - 1].s) {
                        return bad(format!("row {k}: positions must increase"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Velocity `ψ`, acceleration `α` and torque `μ` bounds, applied
/// symmetrically: `|q̇| <= ψ`, `|q̈| <= α`, `|τ| <= μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLimits {
    pub velocity: Limit,
    pub acceleration: Limit,
    pub torque: Limit,
}

impl JointLimits {
    pub fn uniform(dof: usize, velocity: f64, acceleration: f64, torque: f64) -> Self {
        Self {
            velocity: Limit::uniform(dof, velocity),
            acceleration: Limit::uniform(dof, acceleration),
            torque: Limit::uniform(dof, torque),
        }
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        self.velocity.validate("velocity", dof)?;
        self.acceleration.validate("acceleration", dof)?;
        self.torque.validate("torque", dof)
    }
}

/// Dynamics together with joint limits.
#[derive(Clone)]
pub struct RobotModel {
    dynamics: Arc<dyn Manipulator>,
    limits: JointLimits,
}

impl fmt::Debug for RobotModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RobotModel")
            .field("dynamics", &self.dynamics.name())
            .field("dof", &self.dof())
            .field("limits", &self.limits)
            .finish()
    }
}

/// `d`, `c`, `g` at one path position.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedCoefficients {
    pub d: DVector<f64>,
    pub c: DVector<f64>,
    pub g: DVector<f64>,
}

impl RobotModel {
    pub fn new(dynamics: Arc<dyn Manipulator>, limits: JointLimits) -> Result<Self> {
        limits.validate(dynamics.dof())?;
        Ok(Self { dynamics, limits })
    }

    pub fn dof(&self) -> usize {
        self.dynamics.dof()
    }

    pub fn dynamics(&self) -> &dyn Manipulator {
        self.dynamics.as_ref()
    }

    pub fn limits(&self) -> &JointLimits {
        &self.limits
    }

    pub fn with_limits(&self, limits: JointLimits) -> Result<Self> {
        Self::new(self.dynamics.clone(), limits)
    }

    pub fn project(&self, point: &PathPoint) -> ProjectedCoefficients {
        let q = &point.position;
        let mass = self.dynamics.mass_matrix(q);
        let coriolis = self.dynamics.coriolis_matrix(q, &point.tangent);
        ProjectedCoefficients {
            d: &mass * &point.tangent,
            c: &mass * &point.curvature + coriolis * &point.tangent,
            g: self.dynamics.external_force(q),
        }
    }

    /// Smallest torque margin `μ_j(s) − |g_j(s)|` over `grid` evenly spaced
    /// positions. Fails, naming the worst position, if a margin is not
    /// positive: the robot could not even hold still there.
    pub fn check_static_load(&self, path: &PathSpline, grid: usize) -> Result<f64> {
        let grid = grid.max(2);
        let p = self.dof();
        let mut mu = vec![0.0; p];
        let mut worst = (f64::INFINITY, 0, 0.0);
        for k in 0..grid {
            let s = path.length() * k as f64 / (grid - 1) as f64;
            let g = self.dynamics.external_force(&path.position(s));
            self.limits.torque.at(s, &mut mu);
            for j in 0..p {
                let margin = mu[j] - g[j].abs();
                if margin < worst.0 {
                    worst = (margin, j, s);
                }
            }
        }
        if !(worst.0 > 0.0) {
            return Err(Error::AssumptionViolated {
                family: "torque",
                joint: worst.1,
                position: worst.2,
                margin: worst.0,
            });
        }
        Ok(worst.0)
    }
}

/// `d`, `c`, `g` of `model` along `path` at arc length `s`.
pub fn project_dynamics(model: &RobotModel, path: &PathSpline, s: f64) -> ProjectedCoefficients {
    model.project(&path.eval(s))
}

/// A model by registry name. Only `"murray-3dof"` is bundled.
pub fn model_by_name(name: &str) -> Result<RobotModel> {
    match name {
        "murray-3dof" => Ok(bundled_3dof_model()),
        other => Err(Error::InvalidModel(format!("unknown model {other:?}"))),
    }
}
