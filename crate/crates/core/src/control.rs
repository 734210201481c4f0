//! Camera-frame regulators driven by the tracked lump.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{solve_ik, IkOptions};
use crate::se3::RigidTransform;
use crate::simulator::{CameraMode, Scene, SceneRow};
use crate::tracker::{ParticleFilter, StepInput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Largest end-effector translation per iteration (mm).
    pub step_max: f64,
    /// Stop once the estimated camera-frame error is below this (mm).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            step_max: 3.0,
            tolerance: 0.5,
            max_iterations: 100,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_max > 0.0 && self.step_max.is_finite()) {
            return Err(Error::Config("step_max must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Target in the reference camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goal {
    pub position: Vector3<f64>,
    pub orientation: Option<Matrix3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionStep {
    /// Base-frame error `d^e`.
    pub error: Vector3<f64>,
    /// Next end-effector position.
    pub target: Vector3<f64>,
}

/// `d^e = (T^c_{b-} L)^-1 p_g - b^e`, then a step of length
/// `min(|d^e|, step_max)` along `d^e`.
pub fn position_step(
    goal: &Vector3<f64>,
    current: &Vector3<f64>,
    calibration: &RigidTransform,
    lump: &RigidTransform,
    step_max: f64,
) -> PositionStep {
    let error = (calibration * lump).inverse().transform_point(goal) - current;
    let n = error.norm();
    let target = if n > step_max {
        current + error * (step_max / n)
    } else {
        current + error
    };
    PositionStep { error, target }
}

/// `R^e = (R^c_{b-} R_L)^T R^c_g`
pub fn orientation_target(
    goal: &Matrix3<f64>,
    calibration: &Matrix3<f64>,
    lump: &Matrix3<f64>,
) -> Matrix3<f64> {
    (calibration * lump).transpose() * goal
}

/// Where the servo loop takes its lump from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LumpSource {
    /// Particle filter estimate.
    Tracker,
    /// Injected ground truth (perfect tracking).
    Oracle,
    /// No correction: identity lump and zero joint errors.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServoRecord {
    pub iteration: usize,
    /// `|d^e|` as seen by the controller (mm).
    pub estimated_error: f64,
    /// Distance between goal and true end effector in the camera (mm).
    pub true_error: f64,
    /// Translation commanded this iteration (mm); zero on the last record.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServoOutcome {
    pub converged: bool,
    /// Position steps taken.
    pub iterations: usize,
    pub terminal_error: f64,
    pub log: Vec<ServoRecord>,
}

/// Runs the tracker along the planned path for `steps` steps so that it has
/// settled before servoing. Returns the last row.
pub fn warm_up(
    scene: &mut Scene,
    mut filter: Option<&mut ParticleFilter>,
    steps: usize,
) -> Result<SceneRow> {
    let mut last = None;
    for _ in 0..steps.max(1) {
        let Some(row) = scene.step()? else { break };
        if let Some(f) = filter.as_deref_mut() {
            f.update(&step_input(&row))?;
        }
        last = Some(row);
    }
    last.ok_or_else(|| Error::InvalidInput("scene has no steps to warm up on".into()))
}

fn step_input(row: &SceneRow) -> StepInput<'_> {
    StepInput {
        q_measured: &row.q_measured,
        q_camera: row.q_camera_measured.as_deref(),
        batches: &row.batches,
    }
}

/// Iterates position (and orientation) steps until the estimated error is
/// within tolerance. Motion is commanded as measured joint readings and
/// realized through the scene's joint error process; the camera arm, if
/// any, holds its nominal pose.
pub fn servo_loop(
    scene: &mut Scene,
    mut filter: Option<&mut ParticleFilter>,
    source: LumpSource,
    cfg: &ControllerConfig,
    goal: &Goal,
    start_q: &[f64],
) -> Result<ServoOutcome> {
    cfg.validate()?;
    if source == LumpSource::Tracker && filter.is_none() {
        return Err(Error::InvalidInput(
            "tracker lump source needs a filter".into(),
        ));
    }
    let model = scene.tracking_model();
    let chain = model.chain.clone();
    let ee = chain.end_effector();
    let q_camera = match scene.mode() {
        CameraMode::EyeInHand => scene.scenario().arm.as_ref().map(|a| a.nominal.clone()),
        CameraMode::Stationary => None,
    };
    let opts = IkOptions::default();
    let active = vec![true; chain.n_j()];
    let mut q = start_q.to_vec();
    let mut log = Vec::new();
    for iteration in 0..=cfg.max_iterations {
        let row = scene.render(q.clone(), q_camera.clone())?;
        let (lump, n_b, joint_errors, camera_errors) = match (source, filter.as_deref_mut()) {
            (LumpSource::Tracker, Some(f)) => {
                let est = f.update(&step_input(&row))?;
                (
                    est.lump.to_transform(),
                    f.n_b(),
                    est.joint_errors,
                    est.camera_joint_errors,
                )
            }
            (LumpSource::Oracle, _) => {
                let n_b = chain.n_b();
                (
                    row.true_lump,
                    n_b,
                    row.joint_errors[n_b..].to_vec(),
                    Vec::new(),
                )
            }
            _ => (
                RigidTransform::identity(),
                chain.n_b(),
                Vec::new(),
                Vec::new(),
            ),
        };
        let q_hat: Vec<f64> = row
            .q_measured
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v + if i >= n_b {
                    joint_errors.get(i - n_b).copied().unwrap_or(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let q_cam_hat: Option<Vec<f64>> = row.q_camera_measured.as_ref().map(|qc| {
            qc.iter()
                .enumerate()
                .map(|(i, v)| v + camera_errors.get(i).copied().unwrap_or(0.0))
                .collect()
        });
        let head = model.mount.head(q_cam_hat.as_deref())?;
        let current = chain.product(&q_hat, 0, ee);
        let step = position_step(
            &goal.position,
            &current.translation,
            &head,
            &lump,
            cfg.step_max,
        );
        let true_error = (goal.position - row.ee_in_camera.translation).norm();
        let estimated_error = step.error.norm();
        if estimated_error <= cfg.tolerance || iteration == cfg.max_iterations {
            log.push(ServoRecord {
                iteration,
                estimated_error,
                true_error,
                step: 0.0,
            });
            return Ok(ServoOutcome {
                converged: estimated_error <= cfg.tolerance,
                iterations: iteration,
                terminal_error: true_error,
                log,
            });
        }
        log.push(ServoRecord {
            iteration,
            estimated_error,
            true_error,
            step: (step.target - current.translation).norm(),
        });
        let rotation = match &goal.orientation {
            Some(r) => orientation_target(r, &head.rotation, &lump.rotation),
            None => current.rotation,
        };
        let target = RigidTransform::from_parts(rotation, step.target);
        let sol = solve_ik(&chain, &q_hat, &target, ee, &active, true, &opts)?;
        let q_cmd: Vec<f64> = sol
            .q
            .iter()
            .zip(q_hat.iter().zip(&row.q_measured))
            .map(|(s, (h, m))| s - (h - m))
            .collect();
        q = scene.actuate(&q_cmd);
    }
    unreachable!("loop returns on its last iteration")
}
