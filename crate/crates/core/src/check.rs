//! Random chain instances and cross-checks between independent solvers.
//!
//! Every instance is solved three ways: forward-backward with the
//! sorted-slope subsolver, forward-backward with the general envelope
//! subsolver, and plain bound propagation. All three must agree.

use rand::Rng;

use crate::chain::{propagate_bounds, solve_chain, ChainProblem, Constraint, EdgeConstraints, Subsolver};
use crate::error::Result;

/// Deviation above which a cross-check fails.
pub const CHECK_TOLERANCE: f64 = 1e-8;

/// Shape of randomly generated linear chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomChainSpec {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Forward constraints per edge are drawn from `0..=max_forward`.
    pub max_forward: usize,
    /// Backward constraints per edge are drawn from `0..=max_backward`.
    pub max_backward: usize,
    /// Box bounds are drawn from `[0, max_box]`.
    pub max_box: f64,
}

impl Default for RandomChainSpec {
    fn default() -> Self {
        Self {
            min_nodes: 2,
            max_nodes: 50,
            max_forward: 8,
            max_backward: 8,
            max_box: 20.0,
        }
    }
}

/// Forward line `b(x) = m·x + q`: about one in ten is constant.
pub fn random_forward<R: Rng + ?Sized>(rng: &mut R) -> Constraint {
    let slope = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..3.0) };
    Constraint::linear(slope, rng.gen_range(0.1..10.0))
}

/// Backward line `f(y) = m·y + q` with `m > 0`.
pub fn random_backward<R: Rng + ?Sized>(rng: &mut R) -> Constraint {
    Constraint::linear(rng.gen_range(0.05..3.0), rng.gen_range(0.1..10.0))
}

pub fn random_edge<R: Rng + ?Sized>(rng: &mut R, forward: usize, backward: usize) -> EdgeConstraints {
    EdgeConstraints::new(
        (0..forward).map(|_| random_forward(rng)).collect(),
        (0..backward).map(|_| random_backward(rng)).collect(),
    )
}

pub fn random_chain<R: Rng + ?Sized>(rng: &mut R, spec: &RandomChainSpec) -> ChainProblem {
    let n = rng.gen_range(spec.min_nodes.max(2)..=spec.max_nodes.max(spec.min_nodes.max(2)));
    let upper = (0..n)
        .map(|_| {
            if rng.gen_bool(0.05) {
                0.0
            } else {
                rng.gen_range(0.0..=spec.max_box)
            }
        })
        .collect();
    let edges = (0..n - 1)
        .map(|_| {
            let t = rng.gen_range(0..=spec.max_forward);
            let r = rng.gen_range(0..=spec.max_backward);
            random_edge(rng, t, r)
        })
        .collect();
    ChainProblem::new(upper, edges).expect("generated constraints are valid")
}

/// The two-node instance with forward lines `1.5x + 2`, `x + 3`,
/// `0.5x + 5`, backward lines whose inverses are `x - 1`, `4.5x - 8`,
/// `5x - 10`, and boxes `(8, 8)`. Its solution is `(22/7, 43/7)`.
pub fn worked_instance() -> ChainProblem {
    ChainProblem::new(
        vec![8.0, 8.0],
        vec![EdgeConstraints::new(
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
        )],
    )
    .expect("valid instance")
}

#[derive(Clone, Debug)]
pub struct CheckInstance {
    pub name: String,
    pub problem: ChainProblem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceReport {
    pub name: String,
    pub nodes: usize,
    /// Largest pairwise deviation, relative to `max(1, |v|)`.
    pub deviation: f64,
    pub sweeps: usize,
    pub converged: bool,
}

impl InstanceReport {
    pub fn passed(&self) -> bool {
        self.converged && self.deviation <= CHECK_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub instances: Vec<InstanceReport>,
    pub max_deviation: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.instances.iter().all(InstanceReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InstanceReport> {
        self.instances.iter().filter(|r| !r.passed())
    }
}

fn deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x == y {
                0.0
            } else {
                (x - y).abs() / y.abs().max(1.0)
            }
        })
        .fold(0.0, |acc, d| if d.is_nan() { f64::INFINITY } else { acc.max(d) })
}

/// Solves one instance three ways and reports their disagreement.
pub fn cross_check(name: &str, problem: &ChainProblem, max_sweeps: usize) -> Result<InstanceReport> {
    let general = solve_chain(problem, Subsolver::General)?;
    let oracle = propagate_bounds(problem, max_sweeps);
    let mut dev = deviation(&general.v, &oracle.v);
    if problem.is_linear() {
        let linear = solve_chain(problem, Subsolver::Linear)?;
        dev = dev
            .max(deviation(&linear.v, &oracle.v))
            .max(deviation(&linear.v, &general.v));
    }
    Ok(InstanceReport {
        name: name.to_string(),
        nodes: problem.len(),
        deviation: dev,
        sweeps: oracle.sweeps,
        converged: oracle.converged,
    })
}

/// Worker count: `PATHSPEED_THREADS` if set, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("PATHSPEED_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Cross-checks every instance on up to `threads` workers. The report lists
/// instances in input order whatever the scheduling.
pub fn run_checks(instances: &[CheckInstance], max_sweeps: usize, threads: usize) -> Result<CheckReport> {
    let threads = threads.clamp(1, instances.len().max(1));
    let chunk = instances.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<InstanceReport>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|inst| cross_check(&inst.name, &inst.problem, max_sweeps))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("check worker panicked"))
            .collect()
    });
    let mut reports = Vec::with_capacity(instances.len());
    for part in results {
        reports.extend(part?);
    }
    let max_deviation = reports.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(CheckReport {
        instances: reports,
        max_deviation,
    })
}
