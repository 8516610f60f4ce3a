//! Joint-space paths parametrized by arc length.
//!
//! A natural cubic spline `σ(λ)`, `λ ∈ [0, 1]` with uniform knots, is fitted
//! through the waypoints. Arc length `L(λ)` is tabulated by adaptive Simpson
//! quadrature and inverted with a monotone cubic Hermite interpolant whose
//! node slopes are the exact `dλ/ds = 1/‖σ′(λ)‖`. The curve is then
//! `γ(s) = σ(λ(s))` with
//!
//! ```text
//! γ′ = σ′ / ‖σ′‖
//! γ″ = σ″ / ‖σ′‖² − σ′ (σ′·σ″) / ‖σ′‖⁴
//! ```

use nalgebra::DVector;

use crate::error::{Error, Result};

const QUADRATURE_TOL: f64 = 1e-9;

/// Geometric data of the path at one arc-length position.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPoint {
    pub s: f64,
    /// `γ(s)`
    pub position: DVector<f64>,
    /// `γ′(s)`, unit length
    pub tangent: DVector<f64>,
    /// `γ″(s)`
    pub curvature: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct PathSpline {
    dof: usize,
    segments: usize,
    /// waypoint `k`, joint `j` at `k * dof + j`
    points: Vec<f64>,
    /// second derivatives of `σ` at the knots, same layout
    moments: Vec<f64>,
    table_lambda: Vec<f64>,
    table_length: Vec<f64>,
    table_rate: Vec<f64>,
    length: f64,
}

/// Fits the spline through `waypoints` (one row per waypoint) and builds an
/// arc-length table with at least `samples` entries.
pub fn build_path(waypoints: &[Vec<f64>], samples: usize) -> Result<PathSpline> {
    let m = waypoints.len();
    if m < 2 {
        return Err(Error::InvalidPath(format!("need at least 2 waypoints, got {m}")));
    }
    let dof = waypoints[0].len();
    if dof == 0 {
        return Err(Error::InvalidPath("waypoints have no coordinates".into()));
    }
    let mut points = Vec::with_capacity(m * dof);
    for (k, w) in waypoints.iter().enumerate() {
        if w.len() != dof {
            return Err(Error::InvalidPath(format!(
                "waypoint {k} has {} coordinates, expected {dof}",
                w.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPath(format!("waypoint {k} is not finite")));
        }
        points.extend_from_slice(w);
    }
    let mut scale = 0.0f64;
    for k in 0..m - 1 {
        let chord = (0..dof)
            .map(|j| (points[(k + 1) * dof + j] - points[k * dof + j]).powi(2))
            .sum::<f64>()
            .sqrt();
        if chord == 0.0 {
            return Err(Error::CoincidentWaypoints { index: k });
        }
        scale = scale.max(chord);
    }

    let segments = m - 1;
    let moments = natural_moments(&points, m, dof);
    let mut path = PathSpline {
        dof,
        segments,
        points,
        moments,
        table_lambda: Vec::new(),
        table_length: Vec::new(),
        table_rate: Vec::new(),
        length: 0.0,
    };
    path.tabulate(samples, scale)?;
    Ok(path)
}

/// Knot second derivatives of the natural cubic spline on uniform knots
/// `k / (m - 1)`, one tridiagonal solve per coordinate.
fn natural_moments(points: &[f64], m: usize, dof: usize) -> Vec<f64> {
    let mut moments = vec![0.0; m * dof];
    if m < 3 {
        return moments;
    }
    let delta = 1.0 / (m - 1) as f64;
    let inner = m - 2;
    let mut diag = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    for j in 0..dof {
        let p = |k: usize| points[k * dof + j];
        for i in 0..inner {
            let k = i + 1;
            diag[i] = 4.0;
            rhs[i] = 6.0 * (p(k + 1) - 2.0 * p(k) + p(k - 1)) / (delta * delta);
        }
        // Thomas algorithm, unit off-diagonals
        for i in 1..inner {
            let w = 1.0 / diag[i - 1];
            diag[i] -= w;
            rhs[i] -= w * rhs[i - 1];
        }
        let mut next = 0.0;
        for i in (0..inner).rev() {
            let value = (rhs[i] - next) / diag[i];
            moments[(i + 1) * dof + j] = value;
            next = value;
        }
    }
    moments
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

impl PathSpline {
    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Total arc length `s_f`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn waypoint_count(&self) -> usize {
        self.segments + 1
    }

    /// Number of entries in the arc-length table.
    pub fn table_len(&self) -> usize {
        self.table_lambda.len()
    }

    fn tabulate(&mut self, samples: usize, scale: f64) -> Result<()> {
        // table nodes include every knot so each interval sees one cubic
        let per_segment = samples.saturating_sub(1).div_ceil(self.segments).max(16);
        let count = per_segment * self.segments + 1;
        let speed = |lambda: f64| self.speed(lambda);

        let mut lambda = Vec::with_capacity(count);
        let mut length = Vec::with_capacity(count);
        let mut rate = Vec::with_capacity(count);
        let floor = 1e-9 * scale;
        let mut total = 0.0;
        for i in 0..count {
            let l = i as f64 / (count - 1) as f64;
            let v = speed(l);
            if !(v > floor) {
                return Err(Error::InvalidPath(format!(
                    "tangent vanishes near spline parameter {l:.6}"
                )));
            }
            if i > 0 {
                let a = lambda[i - 1];
                total += adaptive_simpson(&speed, a, l, QUADRATURE_TOL * (l - a));
            }
            lambda.push(l);
            length.push(total);
            rate.push(1.0 / v);
        }

        // Fritsch-Carlson limiter; exact slopes almost never trigger it
        for i in 0..count - 1 {
            let secant = (lambda[i + 1] - lambda[i]) / (length[i + 1] - length[i]);
            let a = rate[i] / secant;
            let b = rate[i + 1] / secant;
            let norm = a * a + b * b;
            if norm > 9.0 {
                let t = 3.0 / norm.sqrt();
                rate[i] = t * a * secant;
                rate[i + 1] = t * b * secant;
            }
        }

        self.length = total;
        self.table_lambda = lambda;
        self.table_length = length;
        self.table_rate = rate;
        Ok(())
    }

    /// `‖σ′(λ)‖`
    fn speed(&self, lambda: f64) -> f64 {
        let mut sq = 0.0;
        let mut buf = [0.0; 8];
        if self.dof <= buf.len() {
            self.raw(lambda, None, Some(&mut buf[..self.dof]), None);
            sq = buf[..self.dof].iter().map(|x| x * x).sum();
        } else {
            let mut v = vec![0.0; self.dof];
            self.raw(lambda, None, Some(&mut v), None);
            sq += v.iter().map(|x| x * x).sum::<f64>();
        }
        sq.sqrt()
    }

    /// `σ`, `σ′`, `σ″` at spline parameter `lambda`, written into whichever
    /// buffers are given.
    fn raw(
        &self,
        lambda: f64,
        d0: Option<&mut [f64]>,
        d1: Option<&mut [f64]>,
        d2: Option<&mut [f64]>,
    ) {
        let segs = self.segments as f64;
        let lambda = lambda.clamp(0.0, 1.0);
        let k = ((lambda * segs) as usize).min(self.segments - 1);
        let delta = 1.0 / segs;
        let a = (k + 1) as f64 * delta - lambda;
        let b = lambda - k as f64 * delta;
        let p = self.dof;
        let (p0, p1) = (&self.points[k * p..(k + 1) * p], &self.points[(k + 1) * p..(k + 2) * p]);
        let (m0, m1) = (&self.moments[k * p..(k + 1) * p], &self.moments[(k + 1) * p..(k + 2) * p]);
        let coef0 = |j: usize| p0[j] / delta - m0[j] * delta / 6.0;
        let coef1 = |j: usize| p1[j] / delta - m1[j] * delta / 6.0;
        if let Some(out) = d0 {
            for j in 0..p {
                out[j] = (m0[j] * a * a * a + m1[j] * b * b * b) / (6.0 * delta)
                    + coef0(j) * a
                    + coef1(j) * b;
            }
        }
        if let Some(out) = d1 {
            for j in 0..p {
                out[j] = (m1[j] * b * b - m0[j] * a * a) / (2.0 * delta) - coef0(j) + coef1(j);
            }
        }
        if let Some(out) = d2 {
            for j in 0..p {
                out[j] = (m0[j] * a + m1[j] * b) / delta;
            }
        }
    }

    /// Spline parameter `λ(s)`; `s` is clamped to `[0, s_f]`.
    pub fn parameter_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length);
        let last = self.table_length.len() - 2;
        let i = self
            .table_length
            .partition_point(|&x| x <= s)
            .saturating_sub(1)
            .min(last);
        let (s0, s1) = (self.table_length[i], self.table_length[i + 1]);
        let (l0, l1) = (self.table_lambda[i], self.table_lambda[i + 1]);
        let w = s1 - s0;
        let t = (s - s0) / w;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * l0 + h10 * w * self.table_rate[i] + h01 * l1 + h11 * w * self.table_rate[i + 1]
    }

    /// Writes `γ(s)`, `γ′(s)`, `γ″(s)` into the given slices (length `dof`).
    pub fn eval_into(&self, s: f64, position: &mut [f64], tangent: &mut [f64], curvature: &mut [f64]) {
        let lambda = self.parameter_at(s);
        self.raw(lambda, Some(position), Some(tangent), Some(curvature));
        let sq: f64 = tangent.iter().map(|x| x * x).sum();
        let dot: f64 = tangent.iter().zip(curvature.iter()).map(|(a, b)| a * b).sum();
        let speed = sq.sqrt();
        for j in 0..self.dof {
            curvature[j] = curvature[j] / sq - tangent[j] * dot / (sq * sq);
            tangent[j] /= speed;
        }
    }

    pub fn eval(&self, s: f64) -> PathPoint {
        let mut position = DVector::zeros(self.dof);
        let mut tangent = DVector::zeros(self.dof);
        let mut curvature = DVector::zeros(self.dof);
        self.eval_into(
            s,
            position.as_mut_slice(),
            tangent.as_mut_slice(),
            curvature.as_mut_slice(),
        );
        PathPoint {
            s,
            position,
            tangent,
            curvature,
        }
    }

    /// `γ(s)` only.
    pub fn position(&self, s: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dof);
        self.raw(self.parameter_at(s), Some(out.as_mut_slice()), None, None);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line() {
        let path = build_path(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], 100).unwrap();
        assert!((path.length() - 1.0).abs() < 1e-12);
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let p = path.eval(s);
            assert!((p.position[0] - s).abs() < 1e-12);
            assert!((p.tangent[0] - 1.0).abs() < 1e-12);
            assert!(p.curvature.norm() < 1e-12);
        }
    }

    #[test]
    fn unit_speed_by_finite_differences() {
        let path = build_path(
            &[
                vec![0.0, 0.0, 0.0],
                vec![1.288, -0.2864, -0.2982],
                vec![2.59, -0.03045, -0.5995],
                vec![4.374, -0.04647, -0.582],
                vec![5.334, -0.1657, -0.4504],
            ],
            2001,
        )
        .unwrap();
        let sf = path.length();
        let eps = 1e-5;
        for k in 1..200 {
            let s = sf * k as f64 / 200.0;
            let fd = (path.position(s + eps) - path.position(s - eps)) / (2.0 * eps);
            assert!((fd.norm() - 1.0).abs() < 1e-6, "s = {s}: {}", fd.norm());
            let p = path.eval(s);
            assert!((p.tangent.norm() - 1.0).abs() < 1e-12);
            assert!((&fd - &p.tangent).norm() < 1e-6);
            let fd2 = (path.eval(s + eps).tangent - path.eval(s - eps).tangent) / (2.0 * eps);
            assert!((&fd2 - &p.curvature).norm() < 1e-4 * (1.0 + p.curvature.norm()));
            // γ″ is orthogonal to γ′ for a unit-speed curve
            assert!(p.tangent.dot(&p.curvature).abs() < 1e-9);
        }
    }

    #[test]
    fn circle_curvature() {
        let radius = 2.0;
        let waypoints: Vec<Vec<f64>> = (0..=24)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / 24.0;
                vec![radius * t.cos(), radius * t.sin()]
            })
            .collect();
        let path = build_path(&waypoints, 4000).unwrap();
        assert!((path.length() - std::f64::consts::PI * radius).abs() < 1e-3);
        let sf = path.length();
        // the natural end conditions flatten the first and last few segments
        for k in 4..=16 {
            let s = sf * k as f64 / 20.0;
            let kappa = path.eval(s).curvature.norm();
            assert!((kappa * radius - 1.0).abs() < 0.02, "s = {s}: {kappa}");
        }
    }

    #[test]
    fn rejects_bad_waypoints() {
        assert!(matches!(
            build_path(&[vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]], 10),
            Err(Error::CoincidentWaypoints { index: 0 })
        ));
        assert!(build_path(&[vec![0.0]], 10).is_err());
        assert!(build_path(&[vec![0.0], vec![f64::NAN]], 10).is_err());
        assert!(build_path(&[vec![0.0, 1.0], vec![1.0]], 10).is_err());
    }

    #[test]
    fn parameter_round_trip() {
        let path = build_path(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 2.5]], 500).unwrap();
        assert_eq!(path.parameter_at(0.0), 0.0);
        assert!((path.parameter_at(path.length()) - 1.0).abs() < 1e-14);
        let mut prev = -1.0;
        for k in 0..=1000 {
            let l = path.parameter_at(path.length() * k as f64 / 1000.0);
            assert!(l > prev);
            prev = l;
        }
    }
}
