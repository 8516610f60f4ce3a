//! Discretization of the speed-planning problem into a linear chain.
//!
//! The path is sampled at `s_i = i·h`, `h = s_f/(n-1)`, and the unknowns are
//! the squared speeds `b_i`. On edge `i` the path acceleration is
//! `a_i = (b_{i+1} - b_i)/(2h)` and the velocity-dependent terms use
//! `λ·b_{i+1} + (1-λ)·b_i`, so each joint torque becomes
//!
//! ```text
//! 2h·(τ - g) = P·b_{i+1} + Q·b_i,   P = d + 2hcλ,   Q = -d + 2hc(1-λ)
//! ```
//!
//! With `λ = 1` iff `d·c >= 0`, `P` and `Q` never share a sign, so the
//! two-sided bound `|τ| <= μ` splits into one increasing line bounding
//! `b_{i+1}` by `b_i` and one bounding `b_i` by `b_{i+1}`. Joint
//! accelerations are handled the same way with `γ′`, `γ″` and selector `η`.
//! Velocity limits are plain boxes `γ′_j² b_i <= ψ_j²`.

use nalgebra::DVector;

use crate::chain::{ChainBuilder, ChainProblem, ChainSolution, Constraint, LinearConstraint, Subsolver};
use crate::dynamics::{PathSpline, RobotModel};
use crate::error::{Error, Result};

/// `λ = 1` iff `first·second >= 0`.
#[inline]
pub fn selector(first: f64, second: f64) -> bool {
    first * second >= 0.0
}

/// `(P, Q)` of `2h·value = P·b_{i+1} + Q·b_i` for `value = first·a + second·b̂`.
#[inline]
pub fn edge_coefficients(first: f64, second: f64, select_next: bool, h: f64) -> (f64, f64) {
    let w = 2.0 * h * second;
    if select_next {
        (first + w, -first)
    } else {
        (first, -first + w)
    }
}

/// Constraints implied by `-lower <= P·b_{i+1} + Q·b_i <= upper`, with
/// `lower, upper > 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TwoSided {
    /// `b_{i+1} <= slope·b_i + intercept`
    pub forward: Option<LinearConstraint>,
    /// `b_i <= slope·b_{i+1} + intercept`
    pub backward: Option<LinearConstraint>,
    /// `b_{i+1} <= value` when `Q = 0`
    pub next_box: Option<f64>,
    /// `b_i <= value` when `P = 0`
    pub current_box: Option<f64>,
}

/// Splits a two-sided bound into its forward and backward halves.
///
/// Only the side of the bound that can be active for nonnegative `b` is
/// kept: for `P > 0` the upper side caps `b_{i+1}`, for `P < 0` the lower
/// side does, and likewise for `Q` and `b_i`. The result is sign-correct for
/// any `(P, Q)`; whether the slopes come out positive depends on the
/// selector that produced `P` and `Q`.
pub fn emit_two_sided(p: f64, q: f64, lower: f64, upper: f64) -> TwoSided {
    let mut out = TwoSided::default();
    if p != 0.0 {
        let intercept = if p > 0.0 { upper } else { lower } / p.abs();
        if q == 0.0 {
            out.next_box = Some(intercept);
        } else {
            out.forward = Some(LinearConstraint::new(-q / p, intercept));
        }
    }
    if q != 0.0 {
        let intercept = if q > 0.0 { upper } else { lower } / q.abs();
        if p == 0.0 {
            out.current_box = Some(intercept);
        } else {
            out.backward = Some(LinearConstraint::new(-p / q, intercept));
        }
    }
    out
}

/// The sampled problem: per-node path and dynamics data plus the assembled
/// chain over `b_0 .. b_{n-1}`. Arrays indexed by node hold `dof` entries per
/// node; edge `i` uses the data of its left node `i`.
#[derive(Clone, Debug)]
pub struct DiscretizedProblem {
    n: usize,
    dof: usize,
    h: f64,
    length: f64,
    position: Vec<f64>,
    tangent: Vec<f64>,
    curvature: Vec<f64>,
    d: Vec<f64>,
    c: Vec<f64>,
    g: Vec<f64>,
    velocity_limit: Vec<f64>,
    acceleration_limit: Vec<f64>,
    torque_limit: Vec<f64>,
    chain: ChainProblem,
    model: RobotModel,
    path: PathSpline,
}

/// Samples `model` along `path` at `n` nodes and builds the chain problem.
///
/// Fails with [`Error::AssumptionViolated`] when some torque limit does not
/// exceed the static load `|g|` at a sample.
pub fn discretize(model: &RobotModel, path: &PathSpline, n: usize) -> Result<DiscretizedProblem> {
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    let p = model.dof();
    if path.dof() != p {
        return Err(Error::InvalidModel(format!(
            "model has {p} joints but the path has {} coordinates",
            path.dof()
        )));
    }
    let length = path.length();
    let h = length / (n - 1) as f64;
    let mut problem = DiscretizedProblem {
        n,
        dof: p,
        h,
        length,
        position: vec![0.0; n * p],
        tangent: vec![0.0; n * p],
        curvature: vec![0.0; n * p],
        d: vec![0.0; n * p],
        c: vec![0.0; n * p],
        g: vec![0.0; n * p],
        velocity_limit: vec![0.0; n * p],
        acceleration_limit: vec![0.0; n * p],
        torque_limit: vec![0.0; n * p],
        chain: ChainProblem::new(vec![0.0, 0.0], vec![Default::default()])?,
        model: model.clone(),
        path: path.clone(),
    };
    problem.sample()?;
    problem.chain = problem.assemble()?;
    Ok(problem)
}

impl DiscretizedProblem {
    fn sample(&mut self) -> Result<()> {
        let p = self.dof;
        let limits = self.model.limits().clone();
        for i in 0..self.n {
            let s = self.s(i);
            let range = i * p..(i + 1) * p;
            let point = self.path.eval(s);
            let coef = self.model.project(&point);
            self.position[range.clone()].copy_from_slice(point.position.as_slice());
            self.tangent[range.clone()].copy_from_slice(point.tangent.as_slice());
            self.curvature[range.clone()].copy_from_slice(point.curvature.as_slice());
            self.d[range.clone()].copy_from_slice(coef.d.as_slice());
            self.c[range.clone()].copy_from_slice(coef.c.as_slice());
            self.g[range.clone()].copy_from_slice(coef.g.as_slice());
            limits.velocity.at(s, &mut self.velocity_limit[range.clone()]);
            limits.acceleration.at(s, &mut self.acceleration_limit[range.clone()]);
            limits.torque.at(s, &mut self.torque_limit[range.clone()]);
            for j in 0..p {
                let margin = self.torque_limit[i * p + j] - self.g[i * p + j].abs();
                if !(margin > 0.0) {
                    return Err(Error::AssumptionViolated {
                        family: "torque",
                        joint: j,
                        position: s,
                        margin,
                    });
                }
            }
        }
        Ok(())
    }

    fn assemble(&self) -> Result<ChainProblem> {
        let (n, p, h) = (self.n, self.dof, self.h);
        let mut upper: Vec<f64> = (0..n)
            .map(|i| {
                self.tangent(i)
                    .iter()
                    .zip(self.velocity_limit(i))
                    .filter(|(t, _)| **t != 0.0)
                    .map(|(t, psi)| psi * psi / (t * t))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        upper[0] = 0.0;
        upper[n - 1] = 0.0;

        let mut builder = ChainBuilder::with_capacity(n, 4 * p);
        for i in 0..n - 1 {
            for j in 0..p {
                let k = i * p + j;
                let (d, c, g) = (self.d[k], self.c[k], self.g[k]);
                let mu = self.torque_limit[k];
                let (pp, qq) = edge_coefficients(d, c, selector(d, c), h);
                let torque = emit_two_sided(pp, qq, 2.0 * h * (mu + g), 2.0 * h * (mu - g));
                self.push(&mut builder, &mut upper, i, torque);

                let (t, kappa) = (self.tangent[k], self.curvature[k]);
                let alpha = self.acceleration_limit[k];
                let (pp, qq) = edge_coefficients(t, kappa, selector(t, kappa), h);
                let accel = emit_two_sided(pp, qq, 2.0 * h * alpha, 2.0 * h * alpha);
                self.push(&mut builder, &mut upper, i, accel);
            }
            builder.end_edge();
        }
        builder.finish(upper)
    }

    fn push(&self, builder: &mut ChainBuilder, upper: &mut [f64], i: usize, emitted: TwoSided) {
        if let Some(l) = emitted.forward.filter(|l| l.slope.is_finite() && l.intercept.is_finite()) {
            builder.push_forward(Constraint::Linear(l));
        }
        if let Some(l) = emitted.backward.filter(|l| l.slope.is_finite() && l.intercept.is_finite()) {
            builder.push_backward(Constraint::Linear(l));
        }
        if let Some(v) = emitted.next_box {
            upper[i + 1] = upper[i + 1].min(v);
        }
        if let Some(v) = emitted.current_box {
            upper[i] = upper[i].min(v);
        }
    }

    /// Number of nodes `n`.
    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Node spacing `h`.
    pub fn step(&self) -> f64 {
        self.h
    }

    /// Path length `s_f`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Arc length of node `i`.
    pub fn s(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.length
        } else {
            i as f64 * self.h
        }
    }

    pub fn chain(&self) -> &ChainProblem {
        &self.chain
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn path(&self) -> &PathSpline {
        &self.path
    }

    fn row<'a>(&self, data: &'a [f64], i: usize) -> &'a [f64] {
        &data[i * self.dof..(i + 1) * self.dof]
    }

    pub fn position(&self, i: usize) -> &[f64] {
        self.row(&self.position, i)
    }

    pub fn tangent(&self, i: usize) -> &[f64] {
        self.row(&self.tangent, i)
    }

    pub fn curvature(&self, i: usize) -> &[f64] {
        self.row(&self.curvature, i)
    }

    pub fn d(&self, i: usize) -> &[f64] {
        self.row(&self.d, i)
    }

    pub fn c(&self, i: usize) -> &[f64] {
        self.row(&self.c, i)
    }

    pub fn g(&self, i: usize) -> &[f64] {
        self.row(&self.g, i)
    }

    pub fn velocity_limit(&self, i: usize) -> &[f64] {
        self.row(&self.velocity_limit, i)
    }

    pub fn acceleration_limit(&self, i: usize) -> &[f64] {
        self.row(&self.acceleration_limit, i)
    }

    pub fn torque_limit(&self, i: usize) -> &[f64] {
        self.row(&self.torque_limit, i)
    }

    /// Torque selector `λ` of joint `j` on edge `i`.
    pub fn torque_selector(&self, i: usize, j: usize) -> bool {
        let k = i * self.dof + j;
        selector(self.d[k], self.c[k])
    }

    /// Acceleration selector `η` of joint `j` on edge `i`.
    pub fn acceleration_selector(&self, i: usize, j: usize) -> bool {
        let k = i * self.dof + j;
        selector(self.tangent[k], self.curvature[k])
    }

    pub fn solve(&self, subsolver: Subsolver) -> Result<ChainSolution> {
        crate::chain::solve_chain(&self.chain, subsolver)
    }

    fn check_len(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::Precondition(format!(
                "expected {} squared speeds, got {}",
                self.n,
                b.len()
            )));
        }
        Ok(())
    }

    /// `a_i = (b_{i+1} - b_i)/(2h)` for each edge.
    pub fn path_acceleration(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        Ok(b.windows(2).map(|w| (w[1] - w[0]) / (2.0 * self.h)).collect())
    }

    fn recover(&self, b: &[f64], first: &[f64], second: &[f64], offset: Option<&[f64]>) -> Result<Vec<DVector<f64>>> {
        self.check_len(b)?;
        let p = self.dof;
        Ok((0..self.n - 1)
            .map(|i| {
                let a = (b[i + 1] - b[i]) / (2.0 * self.h);
                DVector::from_fn(p, |j, _| {
                    let k = i * p + j;
                    let hat = if selector(first[k], second[k]) { b[i + 1] } else { b[i] };
                    first[k] * a + second[k] * hat + offset.map_or(0.0, |g| g[k])
                })
            })
            .collect())
    }

    /// Joint torques `τ_i = d_i a_i + c_i b̂_i + g_i`, one per edge.
    pub fn recover_torque(&self, b: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.recover(b, &self.d, &self.c, Some(&self.g))
    }

    /// Joint accelerations `q̈_i = γ′_i a_i + γ″_i b̂_i`, one per edge.
    pub fn recover_joint_acceleration(&self, b: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.recover(b, &self.tangent, &self.curvature, None)
    }

    /// Joint velocities `γ′_i √b_i`, one per node.
    pub fn recover_joint_velocity(&self, b: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.check_len(b)?;
        Ok((0..self.n)
            .map(|i| DVector::from_row_slice(self.tangent(i)) * b[i].max(0.0).sqrt())
            .collect())
    }

    /// Largest absolute excess over the limits at the samples, per family.
    pub fn sample_violation(&self, b: &[f64]) -> Result<SampleViolation> {
        let p = self.dof;
        let mut out = SampleViolation::default();
        for (i, tau) in self.recover_torque(b)?.iter().enumerate() {
            for j in 0..p {
                out.torque = out.torque.max(tau[j].abs() - self.torque_limit[i * p + j]);
            }
        }
        for (i, acc) in self.recover_joint_acceleration(b)?.iter().enumerate() {
            for j in 0..p {
                out.acceleration = out
                    .acceleration
                    .max(acc[j].abs() - self.acceleration_limit[i * p + j]);
            }
        }
        for (i, vel) in self.recover_joint_velocity(b)?.iter().enumerate() {
            for j in 0..p {
                out.velocity = out.velocity.max(vel[j].abs() - self.velocity_limit[i * p + j]);
            }
        }
        Ok(out)
    }
}

/// Excess of recovered quantities over their limits; zero or negative
/// entries are clamped to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SampleViolation {
    pub torque: f64,
    pub acceleration: f64,
    pub velocity: f64,
}

impl SampleViolation {
    pub fn max(&self) -> f64 {
        self.torque.max(self.acceleration).max(self.velocity).max(0.0)
    }
}
