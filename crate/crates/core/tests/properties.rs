use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pathspeed::chain::{propagate_bounds, solve_chain, ChainProblem, Constraint, EdgeConstraints, Subsolver};
use pathspeed::check::{random_chain, RandomChainSpec};
use pathspeed::discretize::{edge_coefficients, emit_two_sided, selector};
use pathspeed::dynamics::bundled_3dof_model;
use pathspeed::profile::{travel_time, QuadraticSpline};
use pathspeed::subproblem::{oracle_2d, solve_2d_general, solve_2d_general_traced, LinearSolver};

fn forward_line() -> impl Strategy<Value = Constraint> {
    (prop_oneof![Just(0.0), 0.0..3.0f64], 0.1..10.0f64).prop_map(|(m, q)| Constraint::linear(m, q))
}

fn backward_line() -> impl Strategy<Value = Constraint> {
    (0.05..3.0f64, 0.1..10.0f64).prop_map(|(m, q)| Constraint::linear(m, q))
}

fn edge() -> impl Strategy<Value = EdgeConstraints> {
    (
        prop::collection::vec(forward_line(), 0..=8),
        prop::collection::vec(backward_line(), 0..=8),
    )
        .prop_map(|(f, b)| EdgeConstraints::new(f, b))
}

fn bound() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 19 => 0.0..20.0f64]
}

fn chain() -> impl Strategy<Value = ChainProblem> {
    (2usize..20)
        .prop_flat_map(|n| (prop::collection::vec(bound(), n), prop::collection::vec(edge(), n - 1)))
        .prop_map(|(upper, edges)| ChainProblem::new(upper, edges).unwrap())
}

fn single_edge() -> impl Strategy<Value = (ChainProblem, f64, f64)> {
    (edge(), bound(), bound()).prop_map(|(e, a, b)| (ChainProblem::new(vec![a, b], vec![e]).unwrap(), a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn solution_is_feasible_and_matches_propagation(problem in chain()) {
        let v = solve_chain(&problem, Subsolver::Linear).unwrap().v;
        prop_assert!(problem.is_feasible(&v, 1e-9));
        for (x, u) in v.iter().zip(problem.upper()) {
            prop_assert!(*x >= 0.0 && x <= u);
        }
        let oracle = propagate_bounds(&problem, 1_000_000);
        prop_assert!(oracle.converged);
        for (a, b) in v.iter().zip(&oracle.v) {
            prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
        }
        let general = solve_chain(&problem, Subsolver::General).unwrap().v;
        for (a, b) in v.iter().zip(&general) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn solving_again_from_the_solution_is_idempotent(problem in chain()) {
        let v = solve_chain(&problem, Subsolver::Linear).unwrap().v;
        let again = solve_chain(&problem.with_upper(v.clone()).unwrap(), Subsolver::Linear).unwrap().v;
        for (a, b) in v.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn dominates_shrunk_and_reprojected_points(problem in chain(), seed in any::<u64>()) {
        use rand::Rng;
        let v = solve_chain(&problem, Subsolver::Linear).unwrap().v;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let shrunk: Vec<f64> = v.iter().map(|x| x * rng.gen_range(0.0..=1.0)).collect();
            let w = propagate_bounds(&problem.with_upper(shrunk).unwrap(), 1_000_000).v;
            prop_assert!(problem.is_feasible(&w, 1e-9));
            for (a, b) in w.iter().zip(&v) {
                prop_assert!(a <= &(b + 1e-12));
            }
        }
    }

    #[test]
    fn envelopes_are_concave(e in edge(), x in 0.0..50.0f64, y in 0.0..50.0f64, theta in 0.0..=1.0f64) {
        let problem = ChainProblem::new(vec![f64::INFINITY; 2], vec![e]).unwrap();
        let edge = problem.edge(0);
        let mid = theta * x + (1.0 - theta) * y;
        for env in [|e: &pathspeed::chain::Edge<'_>, s| e.forward_envelope(s), |e: &pathspeed::chain::Edge<'_>, s| e.backward_envelope(s)] {
            let (fx, fy, fm) = (env(&edge, x), env(&edge, y), env(&edge, mid));
            if fx.is_finite() && fy.is_finite() {
                prop_assert!(fm >= theta * fx + (1.0 - theta) * fy - 1e-12 * fm.abs().max(1.0));
            }
        }
    }

    #[test]
    fn subsolvers_agree_with_vertex_enumeration((problem, a, b) in single_edge()) {
        let edge = problem.edge(0);
        let lin = LinearSolver::new().solve(edge, a, b).unwrap();
        let gen = solve_2d_general(edge, a, b).unwrap();
        let oracle = oracle_2d(edge, a, b).unwrap();
        for r in [lin, gen] {
            prop_assert!((r.current - oracle.current).abs() <= 1e-9);
            prop_assert!((r.next - oracle.next).abs() <= 1e-9);
            prop_assert!(r.current <= a && r.next <= b);
        }
        let r = edge.backward.len();
        prop_assert!(gen.iterations <= (edge.forward.len() + 1) * r.max(1) + 1);
    }

    #[test]
    fn pointers_only_move_down((problem, a, b) in single_edge()) {
        let mut trace = Vec::new();
        LinearSolver::new().solve_traced(problem.edge(0), a, b, &mut trace).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1].forward_pointer <= w[0].forward_pointer);
            prop_assert!(w[1].backward_pointer <= w[0].backward_pointer);
            prop_assert!(w[1].x < w[0].x);
        }
        let mut trace = Vec::new();
        solve_2d_general_traced(problem.edge(0), a, b, &mut trace).unwrap();
        prop_assert!(trace.windows(2).all(|w| w[1].x < w[0].x));
    }

    #[test]
    fn selector_rule_keeps_slopes_positive(
        first in -10.0..10.0f64,
        second in -10.0..10.0f64,
        h in 1e-4..1.0f64,
        lower in 0.1..10.0f64,
        upper in 0.1..10.0f64,
    ) {
        let sel = selector(first, second);
        let (p, q) = edge_coefficients(first, second, sel, h);
        let out = emit_two_sided(p, q, lower, upper);
        for line in [out.forward, out.backward].into_iter().flatten() {
            prop_assert!(line.slope > 0.0 && line.intercept > 0.0);
        }
        // against the rule, a line with negative slope appears once the
        // velocity term dominates
        if first != 0.0 && second != 0.0 && (2.0 * h * second).abs() > first.abs() {
            let (p, q) = edge_coefficients(first, second, !sel, h);
            let out = emit_two_sided(p, q, lower, upper);
            let negative = [out.forward, out.backward].into_iter().flatten().any(|l| l.slope < 0.0);
            prop_assert!(negative, "p={p} q={q}");
        }
    }

    #[test]
    fn coriolis_is_linear_in_velocity(
        q in prop::array::uniform3(-3.0..3.0f64),
        qd in prop::array::uniform3(-2.0..2.0f64),
        scale in -5.0..5.0f64,
    ) {
        let model = bundled_3dof_model();
        let dyn_ = model.dynamics();
        let q = DVector::from_row_slice(&q);
        let qd = DVector::from_row_slice(&qd);
        let base = dyn_.coriolis_matrix(&q, &qd) * &qd;
        let scaled = dyn_.coriolis_matrix(&q, &(&qd * scale)) * (&qd * scale);
        let want = &base * (scale * scale);
        prop_assert!((scaled - &want).amax() <= 1e-10 * want.amax().max(1.0));
    }

    #[test]
    fn lift_meets_conditions_and_redundant_slope(b in prop::collection::vec(0.0..10.0f64, 2..200), h in 1e-2..1.0f64) {
        let sp = QuadraticSpline::new(&b, h).unwrap();
        let n = b.len();
        for k in 1..n - 1 {
            let [_, y, z] = sp.coefficients(k);
            // slope at the right midpoint follows from the other conditions
            let delta = (b[k + 1] - b[k]) / h;
            prop_assert!((y + h * z - delta).abs() <= 1e-10 * delta.abs().max(1.0));
        }
        prop_assert!(sp.minimum() >= -1e-12);
        for k in 0..=50 {
            let s = sp.end() * k as f64 / 50.0;
            prop_assert!(sp.eval(s) >= -1e-12);
        }
    }

    #[test]
    fn travel_time_never_grows_with_speed(
        b in prop::collection::vec(0.0..10.0f64, 2..60),
        i in any::<prop::sample::Index>(),
        extra in 0.0..5.0f64,
        h in 1e-3..1.0f64,
    ) {
        let before = travel_time(&b, h).unwrap();
        let mut c = b.clone();
        c[i.index(b.len())] += extra;
        let after = travel_time(&c, h).unwrap();
        prop_assert!(after <= before || (before.is_infinite() && after.is_infinite()));
    }
}

#[test]
fn random_chain_generator_is_reproducible() {
    let spec = RandomChainSpec::default();
    let a = random_chain(&mut ChaCha8Rng::seed_from_u64(5), &spec);
    let b = random_chain(&mut ChaCha8Rng::seed_from_u64(5), &spec);
    assert_eq!(a.upper(), b.upper());
    assert_eq!(
        solve_chain(&a, Subsolver::Linear).unwrap(),
        solve_chain(&b, Subsolver::Linear).unwrap()
    );
}
