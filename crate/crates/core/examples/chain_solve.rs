//! Builds a chain by hand, including one concave constraint, and compares
//! the forward-backward solution with plain bound propagation.

use pathspeed::chain::{propagate_bounds, solve_chain, ChainBuilder, Constraint, Subsolver};

fn main() -> pathspeed::Result<()> {
    let n = 6;
    let mut builder = ChainBuilder::with_capacity(n, 3);
    for i in 0..n - 1 {
        // v_{i+1} <= 1.2 v_i + 0.5 and v_{i+1} <= 3 + sqrt(v_i)
        builder.push_forward(Constraint::linear(1.2, 0.5));
        builder.push_forward(Constraint::concave(|x| 3.0 + x.sqrt()));
        // v_i <= 0.8 v_{i+1} + 1 (braking)
        builder.push_backward(Constraint::linear(0.8, 1.0 + 0.1 * i as f64));
        builder.end_edge();
    }
    let upper = vec![0.0, 10.0, 10.0, 10.0, 10.0, 0.0];
    let problem = builder.finish(upper)?;

    let v = solve_chain(&problem, Subsolver::General)?;
    let prop = propagate_bounds(&problem, 100_000);
    println!("{:>4} {:>14} {:>14}", "i", "forward-back", "propagation");
    for i in 0..n {
        println!("{i:>4} {:>14.10} {:>14.10}", v.v[i], prop.v[i]);
    }
    println!(
        "{} subproblem iterations; propagation needed {} sweeps",
        v.stats.iterations, prop.sweeps
    );
    println!("max violation {:.2e}", problem.max_violation(&v.v));
    Ok(())
}
