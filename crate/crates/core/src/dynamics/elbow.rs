//! Serial 3R elbow manipulator: a base joint rotating about the vertical
//! axis followed by two parallel pitch joints (shoulder and elbow). Joint
//! angles of the pitch joints are measured from the horizontal.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{coriolis_from_partials, JointLimits, Manipulator, RobotModel};

/// Principal inertias `(Ix, Iy, Iz)` about the link frame, mass, length and
/// distance from the joint to the center of mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParameters {
    pub inertia: [f64; 3],
    pub mass: f64,
    pub length: f64,
    pub com: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElbowParameters {
    pub links: [LinkParameters; 3],
    #[serde(default = "standard_gravity")]
    pub gravity: f64,
}

fn standard_gravity() -> f64 {
    9.81
}

impl Default for ElbowParameters {
    /// The reference robot. The inertias are large for such light links but
    /// are kept as published.
    fn default() -> Self {
        let link = |i: f64, mass, length, com| LinkParameters {
            inertia: [i; 3],
            mass,
            length,
            com,
        };
        Self {
            links: [
                link(7.5, 1.5, 0.2, 0.08),
                link(5.7, 1.2, 0.3, 0.12),
                link(4.75, 1.0, 0.325, 0.13),
            ],
            gravity: standard_gravity(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElbowManipulator {
    params: ElbowParameters,
}

impl ElbowManipulator {
    pub fn new(params: ElbowParameters) -> Self {
        Self { params }
    }

    pub fn parameters(&self) -> &ElbowParameters {
        &self.params
    }

    pub fn mass_matrix3(&self, q: &Vector3<f64>) -> Matrix3<f64> {
        let [_, l2, l3] = &self.params.links;
        let (s2, c2) = q[1].sin_cos();
        let (s23, c23) = (q[1] + q[2]).sin_cos();
        let c3 = q[2].cos();
        let (m2, m3) = (l2.mass, l3.mass);
        let (len2, r2, r3) = (l2.length, l2.com, l3.com);
        let [ix2, iy2, iz2] = l2.inertia;
        let [ix3, iy3, iz3] = l3.inertia;
        let iz1 = self.params.links[0].inertia[2];
        let reach = len2 * c2 + r3 * c23;

        let m11 = iz1
            + iy2 * s2 * s2
            + iz2 * c2 * c2
            + iy3 * s23 * s23
            + iz3 * c23 * c23
            + m2 * r2 * r2 * c2 * c2
            + m3 * reach * reach;
        let m22 = ix2 + ix3 + m2 * r2 * r2 + m3 * (len2 * len2 + r3 * r3 + 2.0 * len2 * r3 * c3);
        let m23 = ix3 + m3 * (r3 * r3 + len2 * r3 * c3);
        let m33 = ix3 + m3 * r3 * r3;
        Matrix3::new(m11, 0.0, 0.0, 0.0, m22, m23, 0.0, m23, m33)
    }

    /// `∂D/∂q_k` for k = 0, 1, 2.
    pub fn mass_matrix_partials(&self, q: &Vector3<f64>) -> [Matrix3<f64>; 3] {
        let [_, l2, l3] = &self.params.links;
        let (s2, c2) = q[1].sin_cos();
        let (s23, c23) = (q[1] + q[2]).sin_cos();
        let s3 = q[2].sin();
        let (m2, m3) = (l2.mass, l3.mass);
        let (len2, r2, r3) = (l2.length, l2.com, l3.com);
        let [_, iy2, iz2] = l2.inertia;
        let [_, iy3, iz3] = l3.inertia;
        let reach = len2 * c2 + r3 * c23;

        let mut d2 = Matrix3::zeros();
        d2[(0, 0)] = 2.0 * s2 * c2 * (iy2 - iz2 - m2 * r2 * r2)
            + 2.0 * s23 * c23 * (iy3 - iz3)
            - 2.0 * m3 * reach * (len2 * s2 + r3 * s23);

        let mut d3 = Matrix3::zeros();
        d3[(0, 0)] = 2.0 * s23 * c23 * (iy3 - iz3) - 2.0 * m3 * reach * r3 * s23;
        d3[(1, 1)] = -2.0 * m3 * len2 * r3 * s3;
        d3[(1, 2)] = -m3 * len2 * r3 * s3;
        d3[(2, 1)] = d3[(1, 2)];
        [Matrix3::zeros(), d2, d3]
    }

    pub fn gravity3(&self, q: &Vector3<f64>) -> Vector3<f64> {
        let [_, l2, l3] = &self.params.links;
        let g = self.params.gravity;
        let c2 = q[1].cos();
        let c23 = (q[1] + q[2]).cos();
        let shoulder = (l2.mass * l2.com + l3.mass * l2.length) * g * c2 + l3.mass * l3.com * g * c23;
        let elbow = l3.mass * l3.com * g * c23;
        Vector3::new(0.0, shoulder, elbow)
    }

    /// Potential energy up to a constant; its gradient is the gravity load.
    pub fn potential_energy(&self, q: &Vector3<f64>) -> f64 {
        let [_, l2, l3] = &self.params.links;
        let g = self.params.gravity;
        (l2.mass * l2.com + l3.mass * l2.length) * g * q[1].sin() + l3.mass * l3.com * g * (q[1] + q[2]).sin()
    }

    pub fn kinetic_energy(&self, q: &Vector3<f64>, qd: &Vector3<f64>) -> f64 {
        0.5 * qd.dot(&(self.mass_matrix3(q) * qd))
    }
}

fn to3(q: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(q[0], q[1], q[2])
}

impl Manipulator for ElbowManipulator {
    fn dof(&self) -> usize {
        3
    }

    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let m = self.mass_matrix3(&to3(q));
        DMatrix::from_iterator(3, 3, m.iter().copied())
    }

    fn coriolis_matrix(&self, q: &DVector<f64>, qd: &DVector<f64>) -> DMatrix<f64> {
        let partials = self
            .mass_matrix_partials(&to3(q))
            .map(|m| DMatrix::from_iterator(3, 3, m.iter().copied()));
        coriolis_from_partials(&partials, qd)
    }

    fn external_force(&self, q: &DVector<f64>) -> DVector<f64> {
        let g = self.gravity3(&to3(q));
        DVector::from_column_slice(g.as_slice())
    }

    fn name(&self) -> &str {
        "murray-3dof"
    }
}

/// The bundled 3-DOF elbow robot with limits `ψ = 2 rad/s`,
/// `α = 1.5 rad/s²` and `μ = 9 N·m` on every joint.
pub fn bundled_3dof_model() -> RobotModel {
    RobotModel::new(
        Arc::new(ElbowManipulator::new(ElbowParameters::default())),
        JointLimits::uniform(3, 2.0, 1.5, 9.0),
    )
    .expect("bundled limits are valid")
}

/// Joint-space waypoints of the reference test path.
pub fn reference_waypoints() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0, 0.0],
        vec![1.288, -0.2864, -0.2982],
        vec![2.59, -0.03045, -0.5995],
        vec![4.374, -0.04647, -0.582],
        vec![5.334, -0.1657, -0.4504],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn robot() -> ElbowManipulator {
        ElbowManipulator::new(ElbowParameters::default())
    }

    fn random_q(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        Vector3::from_fn(|_, _| rng.gen_range(-3.0..3.0))
    }

    #[test]
    fn parameters_round_trip() {
        let params = ElbowParameters::default();
        let json = serde_json::to_string(&params).unwrap();
        assert_eq!(serde_json::from_str::<ElbowParameters>(&json).unwrap(), params);
        assert_eq!(params.links[0].inertia, [7.5; 3]);
        assert_eq!(params.links[1].inertia, [5.7; 3]);
        assert_eq!(params.links[2].inertia, [4.75; 3]);
        assert_eq!(params.links.map(|l| l.mass), [1.5, 1.2, 1.0]);
        assert_eq!(params.links.map(|l| l.length), [0.2, 0.3, 0.325]);
        assert_eq!(params.links.map(|l| l.com), [0.08, 0.12, 0.13]);
    }

    #[test]
    fn mass_matrix_symmetric_positive() {
        let robot = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m = robot.mass_matrix3(&random_q(&mut rng));
            assert!((m - m.transpose()).norm() < 1e-12);
            assert!(m.cholesky().is_some());
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let robot = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eps = 1e-6;
        for _ in 0..50 {
            let q = random_q(&mut rng);
            let partials = robot.mass_matrix_partials(&q);
            for (k, partial) in partials.iter().enumerate() {
                let mut e = Vector3::zeros();
                e[k] = eps;
                let fd = (robot.mass_matrix3(&(q + e)) - robot.mass_matrix3(&(q - e))) / (2.0 * eps);
                assert!((fd - partial).norm() < 1e-7, "k = {k}");
            }
        }
    }

    #[test]
    fn gravity_is_potential_gradient() {
        let robot = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eps = 1e-6;
        for _ in 0..50 {
            let q = random_q(&mut rng);
            let g = robot.gravity3(&q);
            for k in 0..3 {
                let mut e = Vector3::zeros();
                e[k] = eps;
                let fd = (robot.potential_energy(&(q + e)) - robot.potential_energy(&(q - e))) / (2.0 * eps);
                assert!((fd - g[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn skew_symmetry_of_mass_rate() {
        // q̇ᵀ(Ḋ − 2C)q̇ = 0 for any q, q̇
        let robot = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let q = DVector::from_column_slice(random_q(&mut rng).as_slice());
            let qd = DVector::from_column_slice(random_q(&mut rng).as_slice());
            let partials = robot.mass_matrix_partials(&to3(&q));
            let mdot = partials
                .iter()
                .zip(qd.iter())
                .fold(Matrix3::zeros(), |acc, (p, v)| acc + p * *v);
            let mdot = DMatrix::from_iterator(3, 3, mdot.iter().copied());
            let n = mdot - 2.0 * robot.coriolis_matrix(&q, &qd);
            assert!((&n + n.transpose()).norm() < 1e-10);
        }
    }

    #[test]
    fn coriolis_is_linear_in_velocity() {
        let robot = robot();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let q = DVector::from_column_slice(random_q(&mut rng).as_slice());
            let qd = DVector::from_column_slice(random_q(&mut rng).as_slice());
            let a: f64 = rng.gen_range(-5.0..5.0);
            let lhs = robot.coriolis_matrix(&q, &(&qd * a)) * &qd;
            let rhs = robot.coriolis_matrix(&q, &qd) * &qd * a;
            assert!((&lhs - &rhs).norm() <= 1e-10 * rhs.norm().max(1e-300));
        }
    }

    #[test]
    fn free_motion_conserves_energy() {
        let robot = robot();
        let accel = |q: &Vector3<f64>, qd: &Vector3<f64>| {
            let qdyn = DVector::from_column_slice(q.as_slice());
            let qddyn = DVector::from_column_slice(qd.as_slice());
            let c = robot.coriolis_matrix(&qdyn, &qddyn) * &qddyn;
            let rhs = -Vector3::new(c[0], c[1], c[2]) - robot.gravity3(q);
            robot.mass_matrix3(q).cholesky().unwrap().solve(&rhs)
        };
        let energy =
            |q: &Vector3<f64>, qd: &Vector3<f64>| robot.kinetic_energy(q, qd) + robot.potential_energy(q);
        let mut q = Vector3::new(0.1, 0.4, -0.7);
        let mut qd = Vector3::new(1.5, -0.8, 2.0);
        let e0 = energy(&q, &qd);
        let dt = 1e-3;
        for _ in 0..2000 {
            let k1q = qd;
            let k1v = accel(&q, &qd);
            let k2q = qd + k1v * (dt / 2.0);
            let k2v = accel(&(q + k1q * (dt / 2.0)), &k2q);
            let k3q = qd + k2v * (dt / 2.0);
            let k3v = accel(&(q + k2q * (dt / 2.0)), &k3q);
            let k4q = qd + k3v * dt;
            let k4v = accel(&(q + k3q * dt), &k4q);
            q += (k1q + 2.0 * k2q + 2.0 * k3q + k4q) * (dt / 6.0);
            qd += (k1v + 2.0 * k2v + 2.0 * k3v + k4v) * (dt / 6.0);
        }
        let e1 = energy(&q, &qd);
        assert!((e1 - e0).abs() < 1e-8 * e0.abs().max(1.0), "{e0} -> {e1}");
    }

    #[test]
    fn bundled_limits() {
        let model = bundled_3dof_model();
        assert_eq!(model.dof(), 3);
        assert_eq!(model.dynamics().name(), "murray-3dof");
        let mut out = [0.0; 3];
        model.limits().torque.at(0.0, &mut out);
        assert_eq!(out, [9.0; 3]);
    }
}
