//! The two-variable subproblem on a small instance, with every iteration
//! printed.

use pathspeed::check::worked_instance;
use pathspeed::subproblem::{oracle_2d, solve_2d_general_traced, LinearSolver};

fn main() -> pathspeed::Result<()> {
    let problem = worked_instance();
    let edge = problem.edge(0);

    let mut trace = Vec::new();
    let res = LinearSolver::new().solve_traced(edge, 8.0, 8.0, &mut trace)?;
    println!("sorted-slope solver");
    for (k, r) in trace.iter().enumerate() {
        println!(
            "  {k}: x = {:<10.6} y = {:<10.6} z = {:<10.6} active forward {} backward {:?}",
            r.x, r.y, r.z, r.forward_index, r.backward_index
        );
    }
    println!("  -> ({:.12}, {:.12}) in {} iterations", res.current, res.next, res.iterations);

    trace.clear();
    let gen = solve_2d_general_traced(edge, 8.0, 8.0, &mut trace)?;
    println!("general solver -> ({:.12}, {:.12}) in {} iterations", gen.current, gen.next, gen.iterations);

    let oracle = oracle_2d(edge, 8.0, 8.0)?;
    println!("vertex enumeration -> ({:.12}, {:.12})", oracle.current, oracle.next);
    println!("exact: (22/7, 43/7) = ({:.12}, {:.12})", 22.0 / 7.0, 43.0 / 7.0);
    Ok(())
}
