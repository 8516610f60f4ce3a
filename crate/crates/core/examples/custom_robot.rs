//! Plugging in user dynamics: a two-link planar arm without gravity,
//! implemented through the `Manipulator` trait.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use pathspeed::dynamics::{build_path, coriolis_from_partials, JointLimits, Manipulator, RobotModel};

struct PlanarArm {
    m: [f64; 2],
    l: [f64; 2],
}

impl PlanarArm {
    fn coefficients(&self) -> (f64, f64, f64) {
        let [m1, m2] = self.m;
        let [l1, l2] = self.l;
        // point masses at the link tips
        (m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2), m2 * l1 * l2, m2 * l2 * l2)
    }
}

impl Manipulator for PlanarArm {
    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let (a, b, c) = self.coefficients();
        let cos = q[1].cos();
        DMatrix::from_row_slice(2, 2, &[a + 2.0 * b * cos, c + b * cos, c + b * cos, c])
    }

    fn coriolis_matrix(&self, q: &DVector<f64>, qd: &DVector<f64>) -> DMatrix<f64> {
        let (_, b, _) = self.coefficients();
        let sin = q[1].sin();
        let d_q2 = DMatrix::from_row_slice(2, 2, &[-2.0 * b * sin, -b * sin, -b * sin, 0.0]);
        coriolis_from_partials(&[DMatrix::zeros(2, 2), d_q2], qd)
    }

    fn external_force(&self, _q: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(2)
    }

    fn name(&self) -> &str {
        "planar-2r"
    }
}

fn main() -> pathspeed::Result<()> {
    let arm = PlanarArm { m: [1.0, 0.5], l: [0.6, 0.4] };
    let model = RobotModel::new(Arc::new(arm), JointLimits::uniform(2, 3.0, 8.0, 4.0))?;
    let path = build_path(&[vec![0.0, 0.0], vec![0.8, 0.5], vec![1.5, -0.2], vec![2.0, 0.6]], 2001)?;
    for n in [100, 1000, 10000] {
        let plan = pathspeed::plan(&model, &path, n)?;
        println!("{} n = {n:>6}: travel time {:.6} s", model.dynamics().name(), plan.profile.travel_time);
    }
    Ok(())
}
