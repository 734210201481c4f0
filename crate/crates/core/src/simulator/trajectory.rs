//! Task-space trajectories resolved once per trial into joint paths.

use std::f64::consts::PI;

use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{solve_ik, IkOptions, KinematicChain};
use crate::se3::RigidTransform;

/// `offset + amplitude * sin(2 pi t / period + phase)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    #[serde(default)]
    pub offset: f64,
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Sinusoid {
    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (2.0 * PI * t / self.period + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub steps: usize,
    /// Per-axis end-effector position cycle around the nominal pose (mm, base frame).
    pub position_cycle: [Sinusoid; 3],
    /// Standard deviation of the Gaussian jitter added to each position sample (mm).
    pub position_jitter: f64,
    /// Largest per-step angle of the orientation random walk (rad).
    pub orientation_step_max: f64,
    /// Joint driven directly, e.g. a gripper: `(joint index from 1, cycle)`.
    #[serde(default)]
    pub driven_joints: Vec<(usize, Sinusoid)>,
    /// Camera-arm joint cycles around the nominal arm pose (eye-in-hand only).
    #[serde(default)]
    pub camera_cycle: Vec<Sinusoid>,
}

impl TrajectorySpec {
    pub fn validate(&self, n_j: usize) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("trajectory needs at least one step".into()));
        }
        if !(self.position_jitter >= 0.0 && self.orientation_step_max >= 0.0) {
            return Err(Error::Config(
                "jitter and orientation step must be non-negative".into(),
            ));
        }
        let periods = self
            .position_cycle
            .iter()
            .chain(self.driven_joints.iter().map(|(_, s)| s))
            .chain(&self.camera_cycle);
        for s in periods {
            if !(s.period > 0.0) {
                return Err(Error::Config("sinusoid periods must be positive".into()));
            }
        }
        for (j, _) in &self.driven_joints {
            if *j == 0 || *j > n_j {
                return Err(Error::Config(format!(
                    "driven joint {j} out of range 1..={n_j}"
                )));
            }
        }
        Ok(())
    }
}

/// Unit axis drawn uniformly on the sphere via `theta = acos(u)`, `u ~ U(-1, 1)`,
/// `phi ~ U(0, 2 pi)`.
pub fn sample_axis<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let theta = rng.random_range(-1.0f64..1.0).acos();
    let phi = rng.random_range(0.0..2.0 * PI);
    // polar angle theta measured from z
    Vector3::new(
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    )
}

/// Right-multiplies `current` by a rotation of angle `U(0, max_angle)` about a
/// uniformly random axis.
pub fn random_walk_orientation<R: Rng + ?Sized>(
    current: &UnitQuaternion<f64>,
    max_angle: f64,
    rng: &mut R,
) -> UnitQuaternion<f64> {
    let axis = sample_axis(rng);
    let angle = if max_angle > 0.0 {
        rng.random_range(0.0..max_angle)
    } else {
        0.0
    };
    let step = UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle);
    let out = current * step;
    UnitQuaternion::new_normalize(out.into_inner())
}

/// A precomputed trial path.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPath {
    /// True tool joints at steps `1..=steps` (index 0 is step 1).
    pub q: Vec<Vec<f64>>,
    /// End-effector targets that were requested.
    pub targets: Vec<RigidTransform>,
    /// True camera-arm joints, empty for a stationary camera.
    pub q_camera: Vec<Vec<f64>>,
    /// Steps where IK stopped short of its tolerance.
    pub ik_shortfalls: usize,
}

/// Samples targets and resolves them with damped least squares, warm-started
/// from the previous step. Joints driven directly are excluded from IK.
pub fn plan_joint_path<R: Rng + ?Sized>(
    chain: &KinematicChain,
    nominal: &[f64],
    camera_nominal: Option<&[f64]>,
    spec: &TrajectorySpec,
    rng: &mut R,
) -> Result<JointPath> {
    spec.validate(chain.n_j())?;
    let ee = chain.end_effector();
    let start = chain.product(nominal, 0, ee);
    let mut orientation = UnitQuaternion::from_matrix(&start.rotation);
    let mut active = vec![true; chain.n_j()];
    for (j, _) in &spec.driven_joints {
        active[j - 1] = false;
    }
    let opts = IkOptions {
        position_tolerance: 1e-6,
        orientation_tolerance: 1e-7,
        ..IkOptions::default()
    };
    let mut q = nominal.to_vec();
    let mut path = JointPath {
        q: Vec::with_capacity(spec.steps),
        targets: Vec::with_capacity(spec.steps),
        q_camera: Vec::new(),
        ik_shortfalls: 0,
    };
    for step in 1..=spec.steps {
        let t = step as f64;
        let mut offset = Vector3::zeros();
        for (o, cycle) in offset.iter_mut().zip(&spec.position_cycle) {
            let z: f64 = rng.sample(StandardNormal);
            *o = cycle.at(t) + spec.position_jitter * z;
        }
        orientation = random_walk_orientation(&orientation, spec.orientation_step_max, rng);
        let target = RigidTransform::from_parts(
            orientation.to_rotation_matrix().into_inner(),
            start.translation + offset,
        );
        for (j, cycle) in &spec.driven_joints {
            q[j - 1] = nominal[j - 1] + cycle.at(t);
        }
        let sol = solve_ik(chain, &q, &target, ee, &active, true, &opts)?;
        if !sol.converged {
            path.ik_shortfalls += 1;
        }
        q = sol.q;
        path.q.push(q.clone());
        path.targets.push(target);
        if let Some(cn) = camera_nominal {
            let qc: Vec<f64> = cn
                .iter()
                .enumerate()
                .map(|(i, v)| v + spec.camera_cycle.get(i).map_or(0.0, |s| s.at(t)))
                .collect();
            path.q_camera.push(qc);
        }
    }
    Ok(path)
}
