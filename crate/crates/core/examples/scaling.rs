//! Solve time against problem size, next to bound propagation.

use std::time::Instant;

use pathspeed::chain::{propagate_bounds, solve_chain, Subsolver};
use pathspeed::discretize::discretize;
use pathspeed::dynamics::{build_path, bundled_3dof_model, reference_waypoints};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn main() -> pathspeed::Result<()> {
    let model = bundled_3dof_model();
    let path = build_path(&reference_waypoints(), 2001)?;
    let sizes = [1_000, 3_000, 10_000, 30_000, 100_000];
    let problems = sizes
        .iter()
        .map(|&n| discretize(&model, &path, n))
        .collect::<pathspeed::Result<Vec<_>>>()?;
    let mut times = vec![Vec::new(); sizes.len()];
    for _ in 0..31 {
        for (k, p) in problems.iter().enumerate() {
            let t0 = Instant::now();
            std::hint::black_box(solve_chain(p.chain(), Subsolver::Linear)?);
            times[k].push(t0.elapsed().as_secs_f64());
        }
    }
    let base = median(times[0].clone());
    println!("{:>8} {:>12} {:>10} {:>14}", "n", "median ms", "vs n=1000", "ns per node");
    for (k, &n) in sizes.iter().enumerate() {
        let t = median(times[k].clone());
        println!("{n:>8} {:>12.4} {:>10.2} {:>14.1}", t * 1e3, t / base, t * 1e9 / n as f64);
    }
    for (k, &n) in sizes.iter().enumerate().take(2) {
        let t0 = Instant::now();
        let r = propagate_bounds(problems[k].chain(), usize::MAX);
        println!(
            "propagation at n = {n}: {:.2} ms over {} sweeps",
            t0.elapsed().as_secs_f64() * 1e3,
            r.sweeps
        );
    }
    Ok(())
}
