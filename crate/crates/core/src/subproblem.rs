//! The two-variable problem attached to one edge of a chain:
//!
//! ```text
//! maximize  x + y
//!           x <= f_j(y)   (backward constraints)
//!           y <= b_k(x)   (forward constraints)
//!           0 <= x <= box_current,  0 <= y <= box_next
//! ```
//!
//! Its solution is also the component-wise maximum of the feasible set.
//! Both solvers below walk `x` down from its box bound: at each iterate they
//! compare `y = min_k b_k(x)` (box included) with `z = max_j f_j⁻¹(x)` and
//! stop as soon as `y >= z`, which is exactly feasibility of `(x, y)`.
//! Otherwise the next iterate is where the two active constraints cross.

use crate::chain::{self, Constraint, Edge, LinearConstraint, FIXED_POINT_TOL};
use crate::error::{Error, Result};
use crate::numeric;

/// Relative tolerance of the stopping test `y >= z`.
pub const STOP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubproblemResult {
    /// Optimal value of the first variable.
    pub current: f64,
    /// Optimal value of the second variable.
    pub next: f64,
    /// Number of envelope evaluations, the terminating one included.
    pub iterations: usize,
}

/// State of one iteration, for tracing.
///
/// Constraint indices refer to the edge's own lists; the `box_next` bound
/// has forward index `edge.forward.len()`. The pointer fields give the
/// position of the active line inside the pruned, sorted lists of the linear
/// solver (the general solver stores the constraint index there).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub forward_index: usize,
    pub backward_index: Option<usize>,
    pub forward_pointer: usize,
    pub backward_pointer: usize,
}

#[inline]
fn stop_tolerance(x: f64) -> f64 {
    STOP_TOL * x.abs().max(1.0)
}

fn check_boxes(box_current: f64, box_next: f64) -> Result<()> {
    if !(box_current >= 0.0) || !(box_next >= 0.0) {
        return Err(Error::Precondition(format!(
            "box bounds must be nonnegative, got ({box_current}, {box_next})"
        )));
    }
    Ok(())
}

/// Starting iterate. An infinite first box is replaced by the tightest
/// upper bound the edge itself implies: `B(box_next)` and the fixed point
/// of `B∘F`.
fn start_point(edge: &Edge<'_>, box_current: f64, box_next: f64) -> Result<f64> {
    if box_current.is_finite() {
        return Ok(box_current);
    }
    let mut x = edge.backward_envelope(box_next);
    if let Some((bar_current, _)) = chain::fixed_point(edge, FIXED_POINT_TOL)? {
        x = x.min(bar_current);
    }
    Ok(x)
}

fn unbounded(edge: &Edge<'_>, box_next: f64) -> SubproblemResult {
    SubproblemResult {
        current: f64::INFINITY,
        next: box_next.min(edge.forward_envelope(f64::INFINITY)),
        iterations: 0,
    }
}

/// Solves `f(b(s)) = s` on `(0, x)` where `b` is either a forward constraint
/// or the constant `box_next`. The caller guarantees a sign change.
fn crossing(b: Option<&Constraint>, box_next: f64, f: &Constraint, x: f64) -> f64 {
    let forward = match b {
        Some(Constraint::Linear(l)) => Some(*l),
        Some(Constraint::Concave(_)) => None,
        None => Some(LinearConstraint::new(0.0, box_next)),
    };
    if let (Some(b), Some(f)) = (forward, f.as_linear()) {
        let denom = 1.0 - b.slope * f.slope;
        if denom > 0.0 {
            let s = (b.intercept * f.slope + f.intercept) / denom;
            if s.is_finite() {
                return s.clamp(0.0, x);
            }
        }
    }
    let eval_b = |s: f64| b.map_or(box_next, |c| c.eval(s));
    numeric::bisect(0.0, x, |s| f.eval(eval_b(s)) > s, 1e-15).0
}

/// Envelope iteration for arbitrary concave increasing constraints.
///
/// Each step picks the binding forward constraint (lowest index on ties, the
/// box counting as the last one) and the backward constraint with the
/// largest inverse, and moves `x` to where they cross. Iterates decrease
/// strictly. Fails with [`Error::IterationBudgetExceeded`] after
/// `(t + 1)·max(r, 1) + 2` envelope evaluations.
pub fn solve_2d_general(edge: Edge<'_>, box_current: f64, box_next: f64) -> Result<SubproblemResult> {
    general(edge, box_current, box_next, None)
}

/// [`solve_2d_general`] recording every iteration into `trace`.
pub fn solve_2d_general_traced(
    edge: Edge<'_>,
    box_current: f64,
    box_next: f64,
    trace: &mut Vec<IterationRecord>,
) -> Result<SubproblemResult> {
    general(edge, box_current, box_next, Some(trace))
}

fn general(
    edge: Edge<'_>,
    box_current: f64,
    box_next: f64,
    mut trace: Option<&mut Vec<IterationRecord>>,
) -> Result<SubproblemResult> {
    check_boxes(box_current, box_next)?;
    let mut x = start_point(&edge, box_current, box_next)?;
    if x.is_infinite() {
        return Ok(unbounded(&edge, box_next));
    }
    let t = edge.forward.len();
    let r = edge.backward.len();
    let budget = (t + 1) * r.max(1) + 2;
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > budget {
            return Err(Error::IterationBudgetExceeded { budget });
        }
        let (mut y, mut k) = (box_next, t);
        for (idx, c) in edge.forward.iter().enumerate() {
            let val = c.eval(x);
            if val < y || (val == y && k == t) {
                y = val;
                k = idx;
            }
        }
        let (mut z, mut j) = (f64::NEG_INFINITY, None);
        for (idx, c) in edge.backward.iter().enumerate() {
            let val = c.inverse(x);
            if val > z {
                z = val;
                j = Some(idx);
            }
        }
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(IterationRecord {
                x,
                y,
                z,
                forward_index: k,
                backward_index: j,
                forward_pointer: k,
                backward_pointer: j.unwrap_or(0),
            });
        }
        let Some(j) = j else { break };
        if y >= z - stop_tolerance(x) {
            break;
        }
        let next = crossing(edge.forward.get(k), box_next, &edge.backward[j], x);
        if !(next < x) {
            break;
        }
        x = next;
    }
    let y = edge.forward_envelope(x).min(box_next);
    Ok(SubproblemResult {
        current: x,
        next: y,
        iterations,
    })
}

#[derive(Clone, Copy, Debug)]
struct Line {
    slope: f64,
    intercept: f64,
    index: usize,
}

impl Line {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        if self.slope == 0.0 {
            self.intercept
        } else {
            self.slope * x + self.intercept
        }
    }
}

/// Drops lines that never attain the envelope. Works for the lower envelope
/// of lines sorted by decreasing slope and, unchanged, for the upper
/// envelope of lines sorted by increasing slope. Slopes must be distinct.
fn prune_envelope(lines: &mut Vec<Line>) {
    let mut len = 0;
    for i in 0..lines.len() {
        let c = lines[i];
        while len >= 2 {
            let a = lines[len - 2];
            let b = lines[len - 1];
            // b is redundant iff the a/c crossing is not right of the a/b one
            let lhs = (c.intercept - a.intercept) * (a.slope - b.slope);
            let rhs = (b.intercept - a.intercept) * (a.slope - c.slope);
            if lhs <= rhs {
                len -= 1;
            } else {
                break;
            }
        }
        lines[len] = c;
        len += 1;
    }
    lines.truncate(len);
}

/// Subsolver for linear constraints with reusable buffers.
///
/// Forward lines (box included as a constant) are sorted by decreasing
/// slope, inverse backward lines by increasing slope, and lines that never
/// touch their envelope are pruned. As `x` decreases the active line of each
/// envelope can then only move towards the front of its list, so two
/// pointers that never move back find the active pairs; the number of
/// iterations is at most `t + r + 1`.
#[derive(Clone, Debug, Default)]
pub struct LinearSolver {
    forward: Vec<Line>,
    inverse: Vec<Line>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, edge: Edge<'_>, box_current: f64, box_next: f64) -> Result<SubproblemResult> {
        self.run(edge, box_current, box_next, None)
    }

    pub fn solve_traced(
        &mut self,
        edge: Edge<'_>,
        box_current: f64,
        box_next: f64,
        trace: &mut Vec<IterationRecord>,
    ) -> Result<SubproblemResult> {
        self.run(edge, box_current, box_next, Some(trace))
    }

    fn load(&mut self, edge: &Edge<'_>, box_next: f64) -> Result<()> {
        let not_linear = || Error::NonLinearConstraint { edge: edge.index };
        self.forward.clear();
        for (index, c) in edge.forward.iter().enumerate() {
            let l = c.as_linear().ok_or_else(not_linear)?;
            self.forward.push(Line {
                slope: l.slope,
                intercept: l.intercept,
                index,
            });
        }
        if box_next.is_finite() {
            self.forward.push(Line {
                slope: 0.0,
                intercept: box_next,
                index: edge.forward.len(),
            });
        }
        self.inverse.clear();
        for (index, c) in edge.backward.iter().enumerate() {
            let l = c.as_linear().ok_or_else(not_linear)?;
            self.inverse.push(Line {
                slope: 1.0 / l.slope,
                intercept: -l.intercept / l.slope,
                index,
            });
        }

        // Equal slopes: keep the line that can bind (stable sort keeps the
        // lowest index among exact duplicates).
        self.forward.sort_by(|a, b| {
            b.slope
                .total_cmp(&a.slope)
                .then(a.intercept.total_cmp(&b.intercept))
        });
        self.forward.dedup_by(|later, kept| later.slope == kept.slope);
        prune_envelope(&mut self.forward);

        self.inverse.sort_by(|a, b| {
            a.slope
                .total_cmp(&b.slope)
                .then(b.intercept.total_cmp(&a.intercept))
        });
        self.inverse.dedup_by(|later, kept| later.slope == kept.slope);
        prune_envelope(&mut self.inverse);
        Ok(())
    }

    fn run(
        &mut self,
        edge: Edge<'_>,
        box_current: f64,
        box_next: f64,
        mut trace: Option<&mut Vec<IterationRecord>>,
    ) -> Result<SubproblemResult> {
        check_boxes(box_current, box_next)?;
        self.load(&edge, box_next)?;
        let mut x = start_point(&edge, box_current, box_next)?;
        if x.is_infinite() {
            return Ok(unbounded(&edge, box_next));
        }
        let budget = edge.forward.len() + edge.backward.len() + 3;
        let mut xi = self.forward.len().saturating_sub(1);
        let mut phi = self.inverse.len().saturating_sub(1);
        let mut iterations = 0;
        let mut y;
        loop {
            iterations += 1;
            if iterations > budget {
                return Err(Error::IterationBudgetExceeded { budget });
            }
            while xi > 0 && self.forward[xi - 1].eval(x) < self.forward[xi].eval(x) {
                xi -= 1;
            }
            while phi > 0 && self.inverse[phi - 1].eval(x) > self.inverse[phi].eval(x) {
                phi -= 1;
            }
            y = self.forward.get(xi).map_or(f64::INFINITY, |l| l.eval(x));
            let z = self.inverse.get(phi).map_or(f64::NEG_INFINITY, |l| l.eval(x));
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(IterationRecord {
                    x,
                    y,
                    z,
                    forward_index: self.forward.get(xi).map_or(edge.forward.len(), |l| l.index),
                    backward_index: self.inverse.get(phi).map(|l| l.index),
                    forward_pointer: xi,
                    backward_pointer: phi,
                });
            }
            if y >= z - stop_tolerance(x) {
                break;
            }
            let (b, g) = (self.forward[xi], self.inverse[phi]);
            let next = (b.intercept - g.intercept) / (g.slope - b.slope);
            if !(next < x) {
                break;
            }
            x = next.max(0.0);
        }
        Ok(SubproblemResult {
            current: x,
            next: y.min(box_next),
            iterations,
        })
    }
}

/// One-shot convenience wrapper around [`LinearSolver`].
pub fn solve_2d_linear(edge: Edge<'_>, box_current: f64, box_next: f64) -> Result<SubproblemResult> {
    LinearSolver::new().solve(edge, box_current, box_next)
}

/// Reference solver by vertex enumeration: intersects every pair of
/// constraint lines (boxes and axes included), keeps the feasible
/// intersections and returns the one maximizing `x + y`. Quadratic in the
/// number of lines times a linear feasibility check; only meant for tests
/// and self-checks. Needs finite boxes and linear constraints.
pub fn oracle_2d(edge: Edge<'_>, box_current: f64, box_next: f64) -> Result<SubproblemResult> {
    check_boxes(box_current, box_next)?;
    if !box_current.is_finite() || !box_next.is_finite() {
        return Err(Error::Precondition("the vertex oracle needs finite boxes".into()));
    }
    // a·x + b·y <= c
    let mut planes: Vec<(f64, f64, f64)> = vec![
        (-1.0, 0.0, 0.0),
        (0.0, -1.0, 0.0),
        (1.0, 0.0, box_current),
        (0.0, 1.0, box_next),
    ];
    for c in edge.forward {
        let l = c.as_linear().ok_or(Error::NonLinearConstraint { edge: edge.index })?;
        planes.push((-l.slope, 1.0, l.intercept));
    }
    for c in edge.backward {
        let l = c.as_linear().ok_or(Error::NonLinearConstraint { edge: edge.index })?;
        planes.push((1.0, -l.slope, l.intercept));
    }
    let feasible = |x: f64, y: f64| {
        planes.iter().all(|&(a, b, c)| {
            a * x + b * y <= c + 1e-9 * (1.0 + c.abs() + (a * x).abs() + (b * y).abs())
        })
    };
    let mut best: Option<(f64, f64)> = None;
    let mut checked = 0;
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            let (a1, b1, c1) = planes[i];
            let (a2, b2, c2) = planes[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-14 {
                continue;
            }
            let x = (c1 * b2 - c2 * b1) / det;
            let y = (a1 * c2 - a2 * c1) / det;
            checked += 1;
            if !feasible(x, y) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bx, by)) => x + y > bx + by || (x + y == bx + by && x > bx),
            };
            if better {
                best = Some((x, y));
            }
        }
    }
    // (0, 0) is always a vertex and always feasible
    let (x, y) = best.unwrap_or((0.0, 0.0));
    Ok(SubproblemResult {
        current: x.max(0.0),
        next: y.max(0.0),
        iterations: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> (Vec<Constraint>, Vec<Constraint>) {
        (
            vec![
                Constraint::linear(1.5, 2.0),
                Constraint::linear(1.0, 3.0),
                Constraint::linear(0.5, 5.0),
            ],
            vec![
                Constraint::linear(1.0, 1.0),
                Constraint::linear(1.0 / 4.5, 8.0 / 4.5),
                Constraint::linear(0.2, 2.0),
            ],
        )
    }

    #[test]
    fn worked_instance_trace() {
        let (f, b) = worked();
        let edge = Edge::new(0, &f, &b);
        let mut trace = Vec::new();
        let res = LinearSolver::new()
            .solve_traced(edge, 8.0, 8.0, &mut trace)
            .unwrap();
        assert!((res.current - 22.0 / 7.0).abs() < 1e-12);
        assert!((res.next - 43.0 / 7.0).abs() < 1e-12);
        let xs: Vec<f64> = trace.iter().map(|r| r.x).collect();
        assert_eq!(xs.len(), 3);
        assert!((xs[0] - 8.0).abs() < 1e-15);
        assert!((xs[1] - 3.6).abs() < 1e-12);
        assert!((xs[2] - 22.0 / 7.0).abs() < 1e-12);
        assert_eq!((trace[0].y, trace[0].z), (8.0, 30.0));
        let active: Vec<(usize, Option<usize>)> = trace
            .iter()
            .map(|r| (r.forward_index, r.backward_index))
            .collect();
        assert_eq!(active, vec![(3, Some(2)), (1, Some(1)), (1, Some(1))]);

        let mut general_trace = Vec::new();
        let res2 = solve_2d_general_traced(edge, 8.0, 8.0, &mut general_trace).unwrap();
        assert!((res2.current - res.current).abs() < 1e-13);
        let xs2: Vec<f64> = general_trace.iter().map(|r| r.x).collect();
        assert_eq!(xs2.len(), 3);
        for (a, b) in xs.iter().zip(&xs2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_agrees_on_worked_instance() {
        let (f, b) = worked();
        let res = oracle_2d(Edge::new(0, &f, &b), 8.0, 8.0).unwrap();
        assert!((res.current - 22.0 / 7.0).abs() < 1e-12);
        assert!((res.next - 43.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn pruning_removes_hidden_line() {
        let mut lines = vec![
            Line { slope: 3.0, intercept: 0.1, index: 0 },
            Line { slope: 2.0, intercept: 9.0, index: 1 },
            Line { slope: 1.0, intercept: 10.0, index: 2 },
        ];
        prune_envelope(&mut lines);
        let kept: Vec<usize> = lines.iter().map(|l| l.index).collect();
        assert_eq!(kept, vec![0, 2]);
    }

    #[test]
    fn hidden_line_does_not_mislead_pointers() {
        // without pruning the walk would stop on the middle line
        let f = vec![
            Constraint::linear(3.0, 0.1),
            Constraint::linear(2.0, 9.0),
            Constraint::linear(1.0, 10.0),
        ];
        let b = vec![Constraint::linear(0.25, 0.5)];
        let edge = Edge::new(0, &f, &b);
        let fast = solve_2d_linear(edge, 20.0, 30.0).unwrap();
        let slow = oracle_2d(edge, 20.0, 30.0).unwrap();
        assert!((fast.current - slow.current).abs() < 1e-9, "{fast:?} {slow:?}");
        assert!((fast.next - slow.next).abs() < 1e-9, "{fast:?} {slow:?}");
    }

    #[test]
    fn zero_boxes() {
        let (f, b) = worked();
        let edge = Edge::new(0, &f, &b);
        for res in [
            solve_2d_linear(edge, 0.0, 0.0).unwrap(),
            solve_2d_general(edge, 0.0, 0.0).unwrap(),
        ] {
            assert_eq!((res.current, res.next), (0.0, 0.0));
        }
        let res = solve_2d_linear(edge, 8.0, 0.0).unwrap();
        // y = 0 forces x <= f(0) = min(1, 8/4.5, 2)
        assert!((res.current - 1.0).abs() < 1e-12);
        assert_eq!(res.next, 0.0);
    }

    #[test]
    fn no_backward_constraints() {
        let f = vec![Constraint::linear(1.0, 1.0)];
        let edge = Edge::new(0, &f, &[]);
        let res = solve_2d_linear(edge, 2.0, 10.0).unwrap();
        assert_eq!((res.current, res.next), (2.0, 3.0));
        let res = solve_2d_general(edge, 2.0, 10.0).unwrap();
        assert_eq!((res.current, res.next), (2.0, 3.0));
    }

    #[test]
    fn concave_crossing() {
        // x <= sqrt(y), y <= 2 + x: crossing at x = 2
        let f = vec![Constraint::linear(1.0, 2.0)];
        let b = vec![Constraint::concave(|y: f64| y.max(0.0).sqrt() + 1e-300)];
        let edge = Edge::new(0, &f, &b);
        let res = solve_2d_general(edge, 10.0, 100.0).unwrap();
        assert!((res.current - 2.0).abs() < 1e-9, "{res:?}");
        assert!((res.next - 4.0).abs() < 1e-9, "{res:?}");
    }

    #[test]
    fn negative_box_rejected() {
        let (f, b) = worked();
        assert!(solve_2d_linear(Edge::new(0, &f, &b), -1.0, 1.0).is_err());
        assert!(oracle_2d(Edge::new(0, &f, &b), f64::INFINITY, 1.0).is_err());
    }
}
