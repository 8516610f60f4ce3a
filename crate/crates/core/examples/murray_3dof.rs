//! Full pipeline on the bundled three-joint elbow robot: discretize, solve,
//! lift and report.

use std::time::Instant;

use pathspeed::dynamics::{build_path, bundled_3dof_model, reference_waypoints};
use pathspeed::profile::audit_feasibility;

fn main() -> pathspeed::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let model = bundled_3dof_model();
    let path = build_path(&reference_waypoints(), 2001)?;
    println!("path length {:.6} rad", path.length());

    let t0 = Instant::now();
    let plan = pathspeed::plan(&model, &path, n)?;
    let elapsed = t0.elapsed();
    let stats = plan.solution.stats;
    println!(
        "n = {n}: {} constraints, {} subproblem iterations (at most {} on one edge)",
        plan.problem.chain().constraint_count(),
        stats.iterations,
        stats.max_iterations
    );
    println!("travel time {:.9} s, pipeline {:.2?}", plan.profile.travel_time, elapsed);

    let peak = plan.profile.speed().into_iter().fold(0.0, f64::max);
    println!("peak path speed {peak:.4}");

    let audit = audit_feasibility(&plan.profile, &plan.problem, 10 * n);
    println!(
        "between samples: torque {:.3e} (joint {} at s = {:.3}), acceleration {:.3e}, velocity {:.3e}",
        audit.torque.relative, audit.torque.joint, audit.torque.position, audit.acceleration.relative, audit.velocity.relative
    );
    println!("at samples: {:.3e}", audit.at_samples);
    Ok(())
}
