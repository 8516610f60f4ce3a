//! The C¹ quadratic lift of node values and the travel time it implies.

use pathspeed::profile::{travel_time, QuadraticSpline};

fn main() -> pathspeed::Result<()> {
    let h = 0.25;
    let b = [0.0, 0.5, 1.5, 2.0, 1.0, 0.0];
    let sp = QuadraticSpline::new(&b, h)?;
    for k in 0..sp.len() {
        let (lo, hi) = sp.piece_bounds(k);
        let [x, y, z] = sp.coefficients(k);
        println!("piece {k} on [{lo:.3}, {hi:.3}]: {x:.4} + {y:.4} u + {z:.4} u^2");
    }
    println!("{:>6} {:>8} {:>8}", "s", "b(s)", "b'(s)");
    for k in 0..=20 {
        let s = sp.end() * k as f64 / 20.0;
        println!("{s:6.3} {:8.4} {:8.4}", sp.eval(s), sp.derivative(s));
    }
    println!("minimum {:.4}, travel time {:.6}", sp.minimum(), travel_time(&b, h)?);
    Ok(())
}
