use crate::chain::{ChainSolution, Subsolver};
use crate::discretize::{discretize, DiscretizedProblem};
use crate::dynamics::{PathSpline, RobotModel};
use crate::error::Result;
use crate::profile::SpeedProfile;

/// Everything produced by one end-to-end solve.
#[derive(Clone, Debug)]
pub struct Plan {
    pub problem: DiscretizedProblem,
    pub solution: ChainSolution,
    pub profile: SpeedProfile,
}

/// Discretizes `path` at `n` nodes, solves the chain with the sorted-slope
/// subsolver and lifts the result.
pub fn plan(model: &RobotModel, path: &PathSpline, n: usize) -> Result<Plan> {
    let problem = discretize(model, path, n)?;
    let solution = problem.solve(Subsolver::Linear)?;
    let profile = SpeedProfile::new(&problem, solution.v.clone())?;
    Ok(Plan {
        problem,
        solution,
        profile,
    })
}
