//! Continuous speed profiles built from a discrete solution, trajectory
//! generation and feasibility audits.

mod audit;
mod spline;
mod trajectory;

use nalgebra::DVector;

use crate::discretize::DiscretizedProblem;
use crate::error::{Error, Result};

pub use audit::{audit_feasibility, AuditReport, FamilyViolation};
pub use spline::{travel_time, QuadraticSpline};
pub use trajectory::{integrate_duration, time_parametrize, Trajectory, TrajectorySample};

/// Squared-speed profile with its derived quantities.
#[derive(Clone, Debug)]
pub struct SpeedProfile {
    /// Node positions.
    pub s: Vec<f64>,
    /// Squared speed at the nodes.
    pub b: Vec<f64>,
    /// Path acceleration on each edge.
    pub a: Vec<f64>,
    /// Joint torques on each edge.
    pub torque: Vec<DVector<f64>>,
    pub travel_time: f64,
    spline: QuadraticSpline,
    torque_splines: Vec<QuadraticSpline>,
}

impl SpeedProfile {
    pub fn new(problem: &DiscretizedProblem, b: Vec<f64>) -> Result<Self> {
        let n = problem.nodes();
        if b.len() != n {
            return Err(Error::Precondition(format!("expected {n} squared speeds, got {}", b.len())));
        }
        let h = problem.step();
        let travel_time = travel_time(&b, h)?;
        let a = problem.path_acceleration(&b)?;
        let torque = problem.recover_torque(&b)?;
        let spline = QuadraticSpline::new(&b, h)?;
        // edge torques extended to the nodes by repeating the last edge
        let torque_splines = (0..problem.dof())
            .map(|j| {
                let mut nodes: Vec<f64> = torque.iter().map(|t| t[j]).collect();
                nodes.push(nodes[n - 2]);
                QuadraticSpline::new(&nodes, h)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            s: (0..n).map(|i| problem.s(i)).collect(),
            b,
            a,
            torque,
            travel_time,
            spline,
            torque_splines,
        })
    }

    pub fn nodes(&self) -> usize {
        self.b.len()
    }

    pub fn length(&self) -> f64 {
        *self.s.last().expect("at least two nodes")
    }

    /// Lift of `b`.
    pub fn spline(&self) -> &QuadraticSpline {
        &self.spline
    }

    /// Per-joint lift of the torques.
    pub fn torque_splines(&self) -> &[QuadraticSpline] {
        &self.torque_splines
    }

    /// `v_i = √b_i`.
    pub fn speed(&self) -> Vec<f64> {
        self.b.iter().map(|b| b.max(0.0).sqrt()).collect()
    }

    /// Speed of the lifted profile, clamped at zero where the lift
    /// undershoots.
    pub fn speed_at(&self, s: f64) -> f64 {
        self.spline.eval(s).max(0.0).sqrt()
    }

    pub fn torque_at(&self, s: f64) -> DVector<f64> {
        DVector::from_iterator(self.torque_splines.len(), self.torque_splines.iter().map(|sp| sp.eval(s)))
    }

    /// How far the lift of `b` dips below zero (0 when it never does).
    pub fn undershoot(&self) -> f64 {
        (-self.spline.minimum()).max(0.0)
    }
}
