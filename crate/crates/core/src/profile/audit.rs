//! Post-hoc check of the lifted profile against the continuous limits.
//!
//! The discrete constraints hold exactly only at the samples. Between them
//! the lift `b_c` of `b` with `a_c = b_c′/2` is checked against
//! `|d·a_c + c·b_c + g| <= μ`, `|γ′·a_c + γ″·b_c| <= α` and
//! `γ′²·b_c <= ψ²` on a dense grid; the violation is expected to be of order
//! `h`.

use nalgebra::DVector;

use super::SpeedProfile;
use crate::discretize::DiscretizedProblem;

/// Largest relative violation `(|value| - limit)/limit` of one family, with
/// where it happened.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FamilyViolation {
    pub relative: f64,
    pub position: f64,
    pub joint: usize,
}

impl FamilyViolation {
    fn record(&mut self, value: f64, limit: f64, position: f64, joint: usize) {
        let relative = (value.abs() - limit) / limit;
        if relative > self.relative {
            *self = Self {
                relative,
                position,
                joint,
            };
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub grid: usize,
    pub torque: FamilyViolation,
    pub acceleration: FamilyViolation,
    pub velocity: FamilyViolation,
    /// Largest relative violation at the samples themselves.
    pub at_samples: f64,
    /// Depth of the largest dip of `b_c` below zero (clamped for the checks).
    pub undershoot: f64,
}

impl AuditReport {
    /// Largest relative violation over the three families on the grid.
    pub fn max_relative(&self) -> f64 {
        self.torque
            .relative
            .max(self.acceleration.relative)
            .max(self.velocity.relative)
    }
}

/// Audits `profile` (built from `problem`) on `grid` evenly spaced points.
pub fn audit_feasibility(profile: &SpeedProfile, problem: &DiscretizedProblem, grid: usize) -> AuditReport {
    let grid = grid.max(2);
    let model = problem.model();
    let path = problem.path();
    let limits = model.limits();
    let p = model.dof();
    let spline = profile.spline();
    let end = spline.end();
    let (mut psi, mut alpha, mut mu) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut report = AuditReport {
        grid,
        undershoot: profile.undershoot(),
        ..Default::default()
    };

    for k in 0..grid {
        let s = end * k as f64 / (grid - 1) as f64;
        let piece = spline.piece(s);
        let b = spline.eval_piece(piece, s).max(0.0);
        let a = 0.5 * spline.derivative_piece(piece, s);
        let point = path.eval(s);
        let coef = model.project(&point);
        limits.velocity.at(s, &mut psi);
        limits.acceleration.at(s, &mut alpha);
        limits.torque.at(s, &mut mu);
        for j in 0..p {
            let tau = coef.d[j] * a + coef.c[j] * b + coef.g[j];
            report.torque.record(tau, mu[j], s, j);
            let acc = point.tangent[j] * a + point.curvature[j] * b;
            report.acceleration.record(acc, alpha[j], s, j);
            let vel = point.tangent[j] * b.sqrt();
            report.velocity.record(vel, psi[j], s, j);
        }
    }

    let b = &profile.b;
    let mut at_samples = 0.0f64;
    if let Ok(t) = problem.recover_torque(b) {
        at_samples = at_samples.max(sample_excess(&t, |i| problem.torque_limit(i)));
    }
    if let Ok(a) = problem.recover_joint_acceleration(b) {
        at_samples = at_samples.max(sample_excess(&a, |i| problem.acceleration_limit(i)));
    }
    if let Ok(v) = problem.recover_joint_velocity(b) {
        at_samples = at_samples.max(sample_excess(&v, |i| problem.velocity_limit(i)));
    }
    report.at_samples = at_samples;
    report
}

fn sample_excess<'a>(values: &[DVector<f64>], limit: impl Fn(usize) -> &'a [f64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        for (x, l) in v.iter().zip(limit(i)) {
            worst = worst.max((x.abs() - l) / l);
        }
    }
    worst
}
