//! Ground-truth scenes, injected errors and synthetic detections.

pub mod detect;
pub mod noise;
pub mod scene;
pub mod trajectory;

pub use detect::{synthesize_features, DetectionNoise};
pub use noise::{sample_calibration_error, NoiseModel};
pub use scene::{tracking_model, ArmSetup, CameraMode, Scenario, Scene, SceneRow};
pub use trajectory::{random_walk_orientation, JointPath, Sinusoid, TrajectorySpec};
