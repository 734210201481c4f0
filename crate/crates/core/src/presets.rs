//! Built-in robot, rig and noise setups.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use nalgebra::Vector3;

use crate::camera::{look_at, CameraModel, CylinderPrimitive};
use crate::error::{Error, Result};
use crate::kinematics::{KinematicChain, MdhJoint, ToolPoint};
use crate::se3::RigidTransform;
use crate::simulator::{
    ArmSetup, CameraMode, DetectionNoise, NoiseModel, Scenario, Sinusoid, TrajectorySpec,
};
use crate::tracker::FilterConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    DaVinci,
    Baxter,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "da-vinci" => Ok(Self::DaVinci),
            "baxter" => Ok(Self::Baxter),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

impl Preset {
    pub fn scenario(self) -> Scenario {
        match self {
            Self::DaVinci => da_vinci_scenario(),
            Self::Baxter => baxter_scenario(),
        }
    }

    pub fn filter(self, camera: CameraMode) -> FilterConfig {
        match (self, camera) {
            (Self::DaVinci, CameraMode::Stationary) => FilterConfig::da_vinci(),
            (Self::DaVinci, CameraMode::EyeInHand) => FilterConfig::da_vinci_eye_in_hand(),
            (Self::Baxter, _) => FilterConfig::baxter(),
        }
    }
}

/// Patient-side manipulator with a gripper; lengths in mm.
pub fn da_vinci_psm() -> Result<KinematicChain> {
    let joints = vec![
        MdhJoint::revolute(FRAC_PI_2, 0.0, FRAC_PI_2, 0.0),
        MdhJoint::revolute(-FRAC_PI_2, 0.0, -FRAC_PI_2, 0.0),
        MdhJoint::prismatic(FRAC_PI_2, 0.0, 0.0, -431.8),
        MdhJoint::revolute(0.0, 0.0, 0.0, 416.2),
        MdhJoint::revolute(-FRAC_PI_2, 0.0, -FRAC_PI_2, 0.0),
        MdhJoint::revolute(-FRAC_PI_2, 9.1, -FRAC_PI_2, 0.0),
        MdhJoint::revolute(0.0, 0.0, 0.0, 0.0),
    ];
    let pt = |link, x, y, z| ToolPoint {
        link,
        position: Vector3::new(x, y, z),
    };
    let points = vec![
        pt(4, 4.2, 0.0, -6.0),
        pt(4, 0.0, 4.2, -12.0),
        pt(5, 4.5, 0.0, 2.5),
        pt(6, 1.5, 3.0, 0.0),
        pt(6, -1.5, 3.0, 0.0),
        pt(7, 0.0, 6.0, 0.0),
        pt(7, 0.0, 10.0, 0.0),
    ];
    let shaft = CylinderPrimitive::new(4, 4.2, Vector3::z(), Vector3::new(0.0, 0.0, -20.0))?;
    KinematicChain::new(joints, 4, 6, points, vec![shaft])
}

/// Approximate 7-DoF arm; lengths in mm.
pub fn baxter_arm() -> Result<KinematicChain> {
    let joints = vec![
        MdhJoint::revolute(0.0, 0.0, 0.0, 270.35),
        MdhJoint::revolute(-FRAC_PI_2, 69.0, FRAC_PI_2, 0.0),
        MdhJoint::revolute(FRAC_PI_2, 0.0, 0.0, 364.35),
        MdhJoint::revolute(-FRAC_PI_2, 69.0, 0.0, 0.0),
        MdhJoint::revolute(FRAC_PI_2, 0.0, 0.0, 374.29),
        MdhJoint::revolute(-FRAC_PI_2, 10.0, 0.0, 0.0),
        MdhJoint::revolute(FRAC_PI_2, 0.0, 0.0, 229.525),
    ];
    let pt = |link, x, y, z| ToolPoint {
        link,
        position: Vector3::new(x, y, z),
    };
    let points = vec![
        pt(6, 50.0, 0.0, 0.0),
        pt(6, 0.0, 50.0, 0.0),
        pt(6, 0.0, 0.0, 50.0),
        pt(7, 40.0, 0.0, 0.0),
        pt(7, -40.0, 0.0, 0.0),
        pt(7, 0.0, 40.0, 20.0),
        pt(7, 0.0, -40.0, 20.0),
    ];
    let wrist = CylinderPrimitive::new(7, 40.0, Vector3::z(), Vector3::new(0.0, 0.0, -120.0))?;
    KinematicChain::new(joints, 6, 7, points, vec![wrist])
}

/// Endoscope holder; the camera sits on its last frame.
pub fn da_vinci_ecm() -> Result<KinematicChain> {
    let joints = vec![
        MdhJoint::revolute(FRAC_PI_2, 0.0, FRAC_PI_2, 0.0),
        MdhJoint::revolute(-FRAC_PI_2, 0.0, -FRAC_PI_2, 0.0),
        MdhJoint::prismatic(FRAC_PI_2, 0.0, 0.0, -382.2),
        MdhJoint::revolute(0.0, 0.0, 0.0, 370.0),
    ];
    KinematicChain::new(joints, 4, 4, vec![], vec![])
}

/// 540x432 stereo pair, 60 degree field of view, 5 mm baseline.
pub fn da_vinci_rig() -> Vec<CameraModel> {
    let left =
        CameraModel::from_horizontal_fov(540.0, 432.0, FRAC_PI_3, RigidTransform::identity())
            .expect("valid intrinsics");
    let right = CameraModel {
        extrinsic: RigidTransform::from_translation(Vector3::new(-5.0, 0.0, 0.0)),
        ..left
    };
    vec![left, right]
}

pub const DA_VINCI_EYE: [f64; 3] = [86.6, 0.0, -63.5];
pub const DA_VINCI_TARGET: [f64; 3] = [0.0, 0.0, -105.0];
pub const BAXTER_EYE: [f64; 3] = [750.0, -600.0, 50.0];
pub const BAXTER_TARGET: [f64; 3] = [750.0, 0.0, 50.0];

fn camera_from_base(eye: [f64; 3], target: [f64; 3]) -> RigidTransform {
    look_at(&Vector3::from(eye), &Vector3::from(target), &Vector3::z()).expect("valid placement")
}

pub fn da_vinci_scenario() -> Scenario {
    let chain = da_vinci_psm().expect("valid chain");
    let arm = da_vinci_ecm().expect("valid arm");
    let arm_nominal = vec![0.0, 0.0, 60.0, 0.0];
    let base_to_camera = camera_from_base(DA_VINCI_EYE, DA_VINCI_TARGET);
    let base_to_arm_base = arm.product(&arm_nominal, 0, arm.n_j()) * base_to_camera;
    let s = |amplitude, period| Sinusoid {
        offset: 0.0,
        amplitude,
        period,
        phase: 0.0,
    };
    Scenario {
        name: "da-vinci".into(),
        chain,
        nominal_q: vec![0.0, 0.0, 120.0, 0.0, 0.0, 0.0, 0.4],
        rig: da_vinci_rig(),
        base_to_camera,
        arm: Some(ArmSetup {
            arm,
            flange_to_camera: RigidTransform::identity(),
            base_to_arm_base,
            nominal: arm_nominal,
        }),
        noise: NoiseModel {
            calibration_var: [0.005, 0.005, 0.005, 5.0, 5.0, 5.0],
            joint_bias_bounds: vec![0.004, 0.004, 2.0, 0.004, 0.004, 0.004, 0.01],
            joint_stretch: vec![0.02, 0.02, 0.0025, 0.02, 0.02, 0.02, 0.05],
            camera_joint_bias_bounds: vec![0.004, 0.004, 2.0, 0.004],
            camera_joint_std: vec![0.0075, 0.0075, 0.75, 0.0075],
        },
        trajectory: TrajectorySpec {
            steps: 140,
            position_cycle: [s(10.0, 70.0), s(10.0, 35.0), s(5.0, 140.0)],
            position_jitter: 1.0,
            orientation_step_max: 0.07,
            driven_joints: vec![(
                7,
                Sinusoid {
                    offset: 0.1,
                    amplitude: 0.4,
                    period: 40.0,
                    phase: 0.0,
                },
            )],
            camera_cycle: vec![s(0.05, 70.0), s(0.05, 50.0), s(5.0, 90.0), s(0.1, 60.0)],
        },
        detection: DetectionNoise::default(),
    }
}

pub fn baxter_scenario() -> Scenario {
    let s = |amplitude, period| Sinusoid {
        offset: 0.0,
        amplitude,
        period,
        phase: 0.0,
    };
    let rig =
        vec![
            CameraModel::from_horizontal_fov(640.0, 480.0, FRAC_PI_3, RigidTransform::identity())
                .expect("valid intrinsics"),
        ];
    Scenario {
        name: "baxter".into(),
        chain: baxter_arm().expect("valid chain"),
        nominal_q: vec![0.0, -0.55, 0.0, 1.28, 0.0, 0.26, 0.0],
        rig,
        base_to_camera: camera_from_base(BAXTER_EYE, BAXTER_TARGET),
        arm: None,
        noise: NoiseModel {
            calibration_var: [0.001, 0.001, 0.001, 4.0, 4.0, 4.0],
            joint_bias_bounds: vec![0.01; 7],
            joint_stretch: vec![0.0; 7],
            camera_joint_bias_bounds: Vec::new(),
            camera_joint_std: Vec::new(),
        },
        trajectory: TrajectorySpec {
            steps: 140,
            position_cycle: [s(30.0, 70.0), s(30.0, 35.0), s(20.0, 140.0)],
            position_jitter: 1.0,
            orientation_step_max: 0.02,
            driven_joints: Vec::new(),
            camera_cycle: Vec::new(),
        },
        detection: DetectionNoise {
            confidence: Some([8.0, 2.0]),
            ..DetectionNoise::default()
        },
    }
}
