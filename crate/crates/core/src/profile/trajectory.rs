//! Time parametrization: integrate `λ̇ = √(b_c(λ))` from rest at `λ = 0`.
//!
//! The boundary pieces of the lift are linear, `b = w₀ + β(λ - λ₀)`, where
//! the ODE has the closed form `√b(t) = √w₀ + βt/2`. That is what lets the
//! trajectory leave (and reach) a point of zero speed; a step-by-step
//! integrator started at `b = 0` would never move. Interior pieces use
//! fixed-step RK4.

use nalgebra::DVector;

use super::{QuadraticSpline, SpeedProfile};
use crate::dynamics::PathSpline;
use crate::error::{Error, Result};

/// Below this path speed the profile is considered stalled.
const STALL_SPEED: f64 = 1e-12;
const MAX_STEPS: usize = 200_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    /// Path position `λ(t)`.
    pub s: f64,
    /// `q_r = γ(λ)`
    pub position: DVector<f64>,
    /// `q̇_r = γ′(λ)·λ̇`
    pub velocity: DVector<f64>,
    /// Torque lift evaluated at `λ`.
    pub torque: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub duration: f64,
}

struct Integrator<'a> {
    spline: &'a QuadraticSpline,
    lambda: f64,
    t: f64,
    end: f64,
    start_hi: f64,
    end_lo: f64,
}

impl<'a> Integrator<'a> {
    fn new(spline: &'a QuadraticSpline) -> Self {
        let last = spline.len() - 1;
        Self {
            spline,
            lambda: 0.0,
            t: 0.0,
            end: spline.end(),
            start_hi: spline.piece_bounds(0).1,
            end_lo: spline.piece_bounds(last).0,
        }
    }

    fn rate(&self, s: f64) -> f64 {
        self.spline.eval(s.clamp(0.0, self.end)).max(0.0).sqrt()
    }

    fn finished(&self) -> bool {
        self.lambda >= self.end
    }

    /// Advances time by `dt`, or less if the end of the path comes first.
    fn advance(&mut self, dt: f64) -> Result<()> {
        let mut remaining = dt;
        while remaining > 0.0 && !self.finished() {
            remaining = if self.lambda < self.start_hi {
                self.linear(0, self.start_hi, remaining)?
            } else if self.lambda >= self.end_lo {
                self.linear(self.spline.len() - 1, self.end, remaining)?
            } else {
                self.rk4(remaining)?;
                0.0
            };
        }
        Ok(())
    }

    fn rk4(&mut self, dt: f64) -> Result<()> {
        let x = self.lambda;
        let k1 = self.rate(x);
        if k1 < STALL_SPEED {
            return Err(Error::Stall { position: x });
        }
        let k2 = self.rate(x + 0.5 * dt * k1);
        let k3 = self.rate(x + 0.5 * dt * k2);
        let k4 = self.rate(x + dt * k3);
        self.lambda = (x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).min(self.end);
        self.t += dt;
        Ok(())
    }

    /// Exact motion on linear piece `k` up to `hi`. Returns the part of
    /// `dt` left over after reaching `hi`.
    fn linear(&mut self, k: usize, hi: f64, dt: f64) -> Result<f64> {
        let beta = self.spline.coefficients(k)[1];
        let w0 = self.spline.eval_piece(k, self.lambda).max(0.0);
        let r0 = w0.sqrt();
        let mut w_hi = self.spline.eval_piece(k, hi);
        let is_last = k + 1 == self.spline.len();
        if is_last && w_hi < 0.0 && w_hi > -1e-12 * w0.max(1.0) {
            w_hi = 0.0;
        }
        let to_hi = if w_hi < 0.0 {
            f64::INFINITY
        } else if beta == 0.0 {
            if r0 == 0.0 {
                f64::INFINITY
            } else {
                (hi - self.lambda) / r0
            }
        } else {
            2.0 * (w_hi.sqrt() - r0) / beta
        };
        if to_hi <= dt {
            self.lambda = hi;
            self.t += to_hi;
            return Ok(dt - to_hi);
        }
        let r = r0 + 0.5 * beta * dt;
        if r <= 0.0 || (r0 == 0.0 && beta <= 0.0) {
            let position = if beta < 0.0 { self.lambda - w0 / beta } else { self.lambda };
            return Err(Error::Stall { position });
        }
        self.lambda = if beta == 0.0 {
            self.lambda + r0 * dt
        } else {
            self.lambda + (r * r - w0) / beta
        };
        self.t += dt;
        Ok(0.0)
    }
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// Time needed to traverse the lifted profile, integrating with step `dt`.
pub fn integrate_duration(spline: &QuadraticSpline, dt: f64) -> Result<f64> {
    check_step(dt)?;
    let mut integ = Integrator::new(spline);
    let mut steps = 0;
    while !integ.finished() {
        integ.advance(dt)?;
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Stall { position: integ.lambda });
        }
    }
    Ok(integ.t)
}

/// Samples the reference trajectory every `dt` seconds, plus a final sample
/// at the arrival time.
pub fn time_parametrize(profile: &SpeedProfile, path: &PathSpline, dt: f64) -> Result<Trajectory> {
    check_step(dt)?;
    let spline = profile.spline();
    let mut integ = Integrator::new(spline);
    let sample = |integ: &Integrator<'_>| {
        let point = path.eval(integ.lambda);
        let rate = integ.rate(integ.lambda);
        TrajectorySample {
            t: integ.t,
            s: integ.lambda,
            velocity: point.tangent * rate,
            position: point.position,
            torque: profile.torque_at(integ.lambda),
        }
    };
    let mut samples = vec![sample(&integ)];
    while !integ.finished() {
        integ.advance(dt)?;
        samples.push(sample(&integ));
        if samples.len() > MAX_STEPS {
            return Err(Error::Stall { position: integ.lambda });
        }
    }
    Ok(Trajectory {
        duration: integ.t,
        samples,
    })
}
