//! Scenarios and per-trial ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::detect::{synthesize_features, DetectionNoise};
use super::noise::{
    calibrated, camera_joint_errors, measured, realized_from_command, sample_biases,
    sample_calibration_error, tool_joint_errors, NoiseModel,
};
use super::trajectory::{plan_joint_path, JointPath, TrajectorySpec};
use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::kinematics::{analytical_lump, eye_in_hand_lump, KinematicChain};
use crate::se3::{AxisAnglePose, RigidTransform};
use crate::tracker::{CameraMount, FeatureBatch, ProjectedFeatures, TrackingModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CameraMode {
    Stationary,
    EyeInHand,
}

impl std::str::FromStr for CameraMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(Self::Stationary),
            "eye-in-hand" => Ok(Self::EyeInHand),
            other => Err(Error::Config(format!("unknown camera mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for CameraMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Stationary => "stationary",
            Self::EyeInHand => "eye-in-hand",
        })
    }
}

/// Camera carried by a second arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSetup {
    /// Camera-arm chain; its `n_b` equals its joint count.
    pub arm: KinematicChain,
    pub flange_to_camera: RigidTransform,
    /// True transform from the tool base into the arm base.
    pub base_to_arm_base: RigidTransform,
    pub nominal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub chain: KinematicChain,
    pub nominal_q: Vec<f64>,
    pub rig: Vec<CameraModel>,
    /// True base-to-camera transform for the stationary camera.
    pub base_to_camera: RigidTransform,
    pub arm: Option<ArmSetup>,
    pub noise: NoiseModel,
    pub trajectory: TrajectorySpec,
    pub detection: DetectionNoise,
}

impl Scenario {
    pub fn validate(&self, mode: CameraMode) -> Result<()> {
        let n_j = self.chain.n_j();
        if self.nominal_q.len() != n_j {
            return Err(Error::Config(format!(
                "nominal pose has {} joints, chain has {n_j}",
                self.nominal_q.len()
            )));
        }
        if self.rig.is_empty() {
            return Err(Error::Config("scenario has no cameras".into()));
        }
        let n_cam = match (mode, &self.arm) {
            (CameraMode::Stationary, _) => 0,
            (CameraMode::EyeInHand, Some(a)) => {
                if a.nominal.len() != a.arm.n_j() {
                    return Err(Error::Config(
                        "camera-arm nominal pose has the wrong length".into(),
                    ));
                }
                a.arm.n_j()
            }
            (CameraMode::EyeInHand, None) => {
                return Err(Error::Config(format!(
                    "scenario `{}` has no camera arm",
                    self.name
                )));
            }
        };
        self.noise.validate(n_j, n_cam)?;
        self.trajectory.validate(n_j)?;
        self.detection.validate()
    }
}

/// Tracker model for `scenario` given the calibrated base-to-camera (or,
/// eye-in-hand, base-to-arm-base) transform.
pub fn tracking_model(
    scenario: &Scenario,
    mode: CameraMode,
    calibration: &RigidTransform,
) -> Result<TrackingModel> {
    let mount = match (mode, &scenario.arm) {
        (CameraMode::Stationary, _) => CameraMount::Stationary {
            calibration: *calibration,
        },
        (CameraMode::EyeInHand, Some(a)) => CameraMount::EyeInHand {
            arm: a.arm.clone(),
            flange_to_camera: a.flange_to_camera,
            calibration: *calibration,
        },
        (CameraMode::EyeInHand, None) => {
            return Err(Error::Config(format!(
                "scenario `{}` has no camera arm",
                scenario.name
            )));
        }
    };
    Ok(TrackingModel {
        chain: scenario.chain.clone(),
        rig: scenario.rig.clone(),
        mount,
    })
}

/// Ground truth and detections at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRow {
    pub t: usize,
    pub q: Vec<f64>,
    pub q_measured: Vec<f64>,
    pub joint_errors: Vec<f64>,
    pub q_camera: Option<Vec<f64>>,
    pub q_camera_measured: Option<Vec<f64>>,
    pub camera_joint_errors: Option<Vec<f64>>,
    /// The lump the tracker should recover (stationary or eye-in-hand form).
    pub true_lump: RigidTransform,
    /// True end-effector pose in the reference camera.
    pub ee_in_camera: RigidTransform,
    pub projected: Vec<ProjectedFeatures>,
    pub batches: Vec<FeatureBatch>,
}

/// One trial: fixed calibration error, biases and path.
#[derive(Debug, Clone)]
pub struct Scene {
    scenario: Scenario,
    mode: CameraMode,
    truth_model: TrackingModel,
    rng: ChaCha8Rng,
    base_error: RigidTransform,
    base_error_pose: AxisAnglePose,
    calibration: RigidTransform,
    tool_biases: Vec<f64>,
    camera_biases: Vec<f64>,
    path: JointPath,
    t: usize,
}

impl Scene {
    pub fn new(scenario: &Scenario, mode: CameraMode, seed: u64) -> Result<Self> {
        scenario.validate(mode)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (base_error, base_error_pose) =
            sample_calibration_error(&scenario.noise.calibration_var, &mut rng);
        let tool_biases = sample_biases(&scenario.noise.joint_bias_bounds, &mut rng);
        let camera_biases = match mode {
            CameraMode::EyeInHand => {
                sample_biases(&scenario.noise.camera_joint_bias_bounds, &mut rng)
            }
            CameraMode::Stationary => Vec::new(),
        };
        let arm_nominal = match mode {
            CameraMode::EyeInHand => scenario.arm.as_ref().map(|a| a.nominal.as_slice()),
            CameraMode::Stationary => None,
        };
        let path = plan_joint_path(
            &scenario.chain,
            &scenario.nominal_q,
            arm_nominal,
            &scenario.trajectory,
            &mut rng,
        )?;
        let (calibration, mount) = match mode {
            CameraMode::Stationary => (
                calibrated(&scenario.base_to_camera, &base_error),
                CameraMount::Stationary {
                    calibration: scenario.base_to_camera,
                },
            ),
            CameraMode::EyeInHand => {
                let a = scenario.arm.as_ref().expect("validated");
                (
                    calibrated(&a.base_to_arm_base, &base_error),
                    CameraMount::EyeInHand {
                        arm: a.arm.clone(),
                        flange_to_camera: a.flange_to_camera,
                        calibration: a.base_to_arm_base,
                    },
                )
            }
        };
        let truth_model = TrackingModel {
            chain: scenario.chain.clone(),
            rig: scenario.rig.clone(),
            mount,
        };
        Ok(Self {
            scenario: scenario.clone(),
            mode,
            truth_model,
            rng,
            base_error,
            base_error_pose,
            calibration,
            tool_biases,
            camera_biases,
            path,
            t: 0,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn mode(&self) -> CameraMode {
        self.mode
    }

    pub fn base_error(&self) -> &RigidTransform {
        &self.base_error
    }

    pub fn base_error_pose(&self) -> &AxisAnglePose {
        &self.base_error_pose
    }

    /// Calibrated transform the tracker is given.
    pub fn calibration(&self) -> &RigidTransform {
        &self.calibration
    }

    pub fn tool_biases(&self) -> &[f64] {
        &self.tool_biases
    }

    pub fn path(&self) -> &JointPath {
        &self.path
    }

    pub fn steps(&self) -> usize {
        self.path.q.len()
    }

    pub fn time(&self) -> usize {
        self.t
    }

    /// The model a tracker uses: same chain and rig, calibrated mount.
    pub fn tracking_model(&self) -> TrackingModel {
        tracking_model(&self.scenario, self.mode, &self.calibration).expect("validated scenario")
    }

    /// Reference camera from the true tool base.
    pub fn true_camera_from_base(&self, q_camera: Option<&[f64]>) -> Result<RigidTransform> {
        self.truth_model.mount.head(q_camera)
    }

    /// True joints reached when the measured reading `q_cmd` is commanded.
    pub fn actuate(&self, q_cmd: &[f64]) -> Vec<f64> {
        realized_from_command(&self.scenario.noise, &self.tool_biases, q_cmd)
    }

    /// Advances along the planned path.
    pub fn step(&mut self) -> Result<Option<SceneRow>> {
        if self.t >= self.path.q.len() {
            return Ok(None);
        }
        let q = self.path.q[self.t].clone();
        let qc = self.path.q_camera.get(self.t).cloned();
        self.render(q, qc).map(Some)
    }

    /// Advances one step with the given true joints instead of the path.
    pub fn render(&mut self, q: Vec<f64>, q_camera: Option<Vec<f64>>) -> Result<SceneRow> {
        self.t += 1;
        let chain = &self.scenario.chain;
        let e = tool_joint_errors(&self.scenario.noise, &self.tool_biases, &q);
        let q_measured = measured(&q, &e);
        let (q_camera, q_camera_measured, cam_e) = match (self.mode, q_camera) {
            (CameraMode::EyeInHand, Some(qc)) => {
                let ec =
                    camera_joint_errors(&self.scenario.noise, &self.camera_biases, &mut self.rng);
                let qcm = measured(&qc, &ec);
                (Some(qc), Some(qcm), Some(ec))
            }
            (CameraMode::EyeInHand, None) => {
                return Err(Error::InvalidInput(
                    "eye-in-hand step needs camera-arm joints".into(),
                ));
            }
            (CameraMode::Stationary, _) => (None, None, None),
        };
        let cam_from_base = self.true_camera_from_base(q_camera.as_deref())?;
        let links = chain.link_frames(&q);
        let features = self.truth_model.base_features(&links);
        let projected = self
            .truth_model
            .project_base_features(&cam_from_base, &features);
        let batches = projected
            .iter()
            .enumerate()
            .map(|(c, p)| {
                synthesize_features(
                    c,
                    &self.scenario.rig[c],
                    p,
                    &self.scenario.detection,
                    &mut self.rng,
                )
            })
            .collect();
        let beta = vec![0.0; chain.n_b()];
        let tool_lump = self.base_error * analytical_lump(chain, &q_measured, &e, &beta)?;
        let true_lump = match (&self.truth_model.mount, &q_camera_measured, &cam_e) {
            (CameraMount::EyeInHand { arm, .. }, Some(qcm), Some(ec)) => {
                let cam_beta = vec![0.0; arm.n_b()];
                let cam_lump = analytical_lump(arm, qcm, ec, &cam_beta)?;
                eye_in_hand_lump(
                    &self.calibration,
                    &cam_lump.to_axis_angle(),
                    &tool_lump.to_axis_angle(),
                )
                .to_transform()
            }
            _ => tool_lump,
        };
        let ee_in_camera = cam_from_base * links[chain.end_effector()];
        Ok(SceneRow {
            t: self.t,
            q,
            q_measured,
            joint_errors: e,
            q_camera,
            q_camera_measured,
            camera_joint_errors: cam_e,
            true_lump,
            ee_in_camera,
            projected,
            batches,
        })
    }
}
