//! TOML scenario, filter and experiment files.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::camera::{look_at, CameraModel, CylinderPrimitive};
use crate::control::ControllerConfig;
use crate::error::{Error, Result};
use crate::harness::{ExperimentSpec, DEFAULT_BURN_IN};
use crate::kinematics::{KinematicChain, MdhJoint, ToolPoint};
use crate::presets::Preset;
use crate::se3::{AxisAnglePose, RigidTransform};
use crate::simulator::{
    ArmSetup, CameraMode, DetectionNoise, NoiseModel, Scenario, TrajectorySpec,
};
use crate::tracker::{FilterConfig, TrackingMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub n_b: usize,
    pub end_effector: usize,
    pub joints: Vec<MdhJoint>,
    #[serde(default)]
    pub tool_points: Vec<ToolPoint>,
    #[serde(default)]
    pub cylinders: Vec<CylinderPrimitive>,
}

impl ChainFile {
    pub fn build(&self) -> Result<KinematicChain> {
        KinematicChain::new(
            self.joints.clone(),
            self.n_b,
            self.end_effector,
            self.tool_points.clone(),
            self.cylinders.clone(),
        )
    }

    pub fn from_chain(chain: &KinematicChain) -> Self {
        Self {
            n_b: chain.n_b(),
            end_effector: chain.end_effector(),
            joints: chain.joints().to_vec(),
            tool_points: chain.tool_points().to_vec(),
            cylinders: chain.cylinders().to_vec(),
        }
    }
}

/// Pinhole camera. Give either `hfov` (rad, square pixels, centred
/// principal point) or `intrinsics = [fx, fy, cu, cv]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hfov: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<[f64; 4]>,
    /// Pose of this camera relative to the reference camera.
    #[serde(default)]
    pub extrinsic: AxisAnglePose,
}

impl CameraFile {
    pub fn build(&self) -> Result<CameraModel> {
        let ext = self.extrinsic.to_transform();
        match (self.hfov, self.intrinsics) {
            (Some(f), None) => CameraModel::from_horizontal_fov(self.width, self.height, f, ext),
            (None, Some([fx, fy, cu, cv])) => {
                CameraModel::new(fx, fy, cu, cv, self.width, self.height, ext)
            }
            _ => Err(Error::Config(
                "camera needs exactly one of `hfov` or `intrinsics`".into(),
            )),
        }
    }
}

/// Where the stationary camera sits relative to the tool base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Placement {
    LookAt {
        eye: [f64; 3],
        target: [f64; 3],
        up: [f64; 3],
    },
    /// Base-to-camera transform given directly.
    Pose(AxisAnglePose),
}

impl Placement {
    pub fn build(&self) -> Result<RigidTransform> {
        match self {
            Placement::LookAt { eye, target, up } => look_at(
                &Vector3::from(*eye),
                &Vector3::from(*target),
                &Vector3::from(*up),
            ),
            Placement::Pose(p) => Ok(p.to_transform()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmFile {
    pub chain: ChainFile,
    pub nominal: Vec<f64>,
    #[serde(default)]
    pub flange_to_camera: AxisAnglePose,
    /// Tool base to arm base. When absent it is chosen so that the camera
    /// coincides with the stationary placement at the nominal arm pose.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_to_arm_base: Option<AxisAnglePose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub nominal_q: Vec<f64>,
    pub chain: ChainFile,
    pub rig: Vec<CameraFile>,
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_arm: Option<ArmFile>,
    pub noise: NoiseModel,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub detection: DetectionNoise,
}

impl ScenarioFile {
    pub fn build(&self) -> Result<Scenario> {
        let base_to_camera = self.placement.build()?;
        let arm = match &self.camera_arm {
            None => None,
            Some(a) => {
                let chain = a.chain.build()?;
                if a.nominal.len() != chain.n_j() {
                    return Err(Error::Config(
                        "camera-arm nominal pose has the wrong length".into(),
                    ));
                }
                let flange_to_camera = a.flange_to_camera.to_transform();
                let base_to_arm_base = match &a.base_to_arm_base {
                    Some(p) => p.to_transform(),
                    None => {
                        chain.product(&a.nominal, 0, chain.n_j())
                            * flange_to_camera.inverse()
                            * base_to_camera
                    }
                };
                Some(ArmSetup {
                    arm: chain,
                    flange_to_camera,
                    base_to_arm_base,
                    nominal: a.nominal.clone(),
                })
            }
        };
        Ok(Scenario {
            name: self.name.clone(),
            chain: self.chain.build()?,
            nominal_q: self.nominal_q.clone(),
            rig: self
                .rig
                .iter()
                .map(CameraFile::build)
                .collect::<Result<_>>()?,
            base_to_camera,
            arm,
            noise: self.noise.clone(),
            trajectory: self.trajectory.clone(),
            detection: self.detection,
        })
    }
}

/// Experiment description. `scenario` and `filter` are paths relative to
/// the experiment file; when absent the preset's values are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<PathBuf>,
    pub mode: TrackingMode,
    pub camera: CameraMode,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub controller: ControllerConfig,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// A loaded experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedExperiment {
    pub spec: ExperimentSpec,
    pub controller: ControllerConfig,
}

fn parse_error(path: &Path, message: impl ToString) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Reads and deserializes a TOML file; syntax and schema errors carry the
/// file name, line and column.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(path, e))?;
    toml::from_str(&text).map_err(|e| parse_error(path, e))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    load_toml::<ScenarioFile>(path)?
        .build()
        .map_err(|e| parse_error(path, e))
}

pub fn load_filter(path: &Path) -> Result<FilterConfig> {
    load_toml(path)
}

pub fn load_experiment(path: &Path) -> Result<LoadedExperiment> {
    let file: ExperimentFile = load_toml(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let preset = file
        .preset
        .as_deref()
        .map(str::parse::<Preset>)
        .transpose()?;
    let scenario = match (&file.scenario, preset) {
        (Some(p), _) => load_scenario(&dir.join(p))?,
        (None, Some(p)) => p.scenario(),
        (None, None) => return Err(parse_error(path, "needs `scenario` or `preset`")),
    };
    let filter = match (&file.filter, preset) {
        (Some(p), _) => load_filter(&dir.join(p))?,
        (None, Some(p)) => p.filter(file.camera),
        (None, None) => return Err(parse_error(path, "needs `filter` or `preset`")),
    };
    let spec = ExperimentSpec {
        scenario,
        filter,
        mode: file.mode,
        camera: file.camera,
        trials: file.trials,
        seed: file.seed,
        burn_in: file.burn_in,
    };
    spec.validate()?;
    file.controller.validate()?;
    Ok(LoadedExperiment {
        spec,
        controller: file.controller,
    })
}
