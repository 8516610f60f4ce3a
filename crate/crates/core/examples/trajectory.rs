//! Turns a speed profile into a time-stamped joint trajectory.

use pathspeed::dynamics::{build_path, bundled_3dof_model, reference_waypoints};
use pathspeed::profile::time_parametrize;

fn main() -> pathspeed::Result<()> {
    let model = bundled_3dof_model();
    let path = build_path(&reference_waypoints(), 2001)?;
    let plan = pathspeed::plan(&model, &path, 1000)?;
    let traj = time_parametrize(&plan.profile, &path, 1e-3)?;
    println!(
        "duration {:.6} s (discrete objective {:.6} s), {} samples",
        traj.duration,
        plan.profile.travel_time,
        traj.samples.len()
    );
    println!("{:>8} {:>8} {:>28} {:>28}", "t", "s", "q", "tau");
    let step = traj.samples.len() / 10;
    for smp in traj.samples.iter().step_by(step.max(1)) {
        let q: Vec<String> = smp.position.iter().map(|x| format!("{x:8.4}")).collect();
        let tau: Vec<String> = smp.torque.iter().map(|x| format!("{x:8.4}")).collect();
        println!("{:8.3} {:8.4} {} {}", smp.t, smp.s, q.join(" "), tau.join(" "));
    }
    Ok(())
}
