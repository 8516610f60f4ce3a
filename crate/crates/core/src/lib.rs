//! Time-optimal speed planning along a fixed path.
//!
//! A robot path `q(s)` is discretized into `n` nodes; the squared path speed
//! `b_i` at each node is constrained by torque, joint acceleration and
//! joint velocity limits. Those become a chain problem: maximize every `b_i`
//! subject to `b_i <= f(b_{i+1})`, `b_{i+1} <= g(b_i)` and a box, with
//! concave increasing `f` and `g`. [`chain::solve_chain`] solves it with
//! one forward and one backward pass.
//!
//! ```
//! use pathspeed::dynamics::{bundled_3dof_model, build_path, reference_waypoints};
//!
//! let model = bundled_3dof_model();
//! let path = build_path(&reference_waypoints(), 501).unwrap();
//! let plan = pathspeed::plan(&model, &path, 200).unwrap();
//! assert!(plan.profile.travel_time.is_finite());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod check;
pub mod cli;
pub mod discretize;
pub mod dynamics;
pub mod error;
mod numeric;
pub mod plan;
pub mod profile;
pub mod subproblem;

pub use error::{Error, Result};
pub use plan::{plan, Plan};
