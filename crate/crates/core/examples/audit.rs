//! How far the lifted profile strays past the continuous limits between
//! samples, and how that shrinks as the grid is refined.

use pathspeed::dynamics::{build_path, bundled_3dof_model, reference_waypoints};
use pathspeed::profile::audit_feasibility;

fn main() -> pathspeed::Result<()> {
    let model = bundled_3dof_model();
    let path = build_path(&reference_waypoints(), 2001)?;
    let mut last: Option<f64> = None;
    println!("{:>6} {:>12} {:>12} {:>8}", "n", "travel time", "violation", "ratio");
    for n in [250, 500, 1000, 2000, 4000] {
        let plan = pathspeed::plan(&model, &path, n)?;
        let v = audit_feasibility(&plan.profile, &plan.problem, 40_000).max_relative();
        let ratio = last.map_or(String::from("-"), |l| format!("{:.3}", l / v));
        println!("{n:>6} {:>12.6} {v:>12.3e} {ratio:>8}", plan.profile.travel_time);
        last = Some(v);
    }
    Ok(())
}
