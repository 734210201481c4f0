//! Calibration and joint-reading error processes.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::{AxisAnglePose, RigidTransform};

/// Error sources injected by the simulator. Variances are diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Calibration error variances `[w (rad^2) x3, b (mm^2) x3]`.
    pub calibration_var: [f64; 6],
    /// Per-joint bias bounds; biases are drawn once per trial from `U(-a, a)`.
    pub joint_bias_bounds: Vec<f64>,
    /// Linear cable-stretch coefficients: `e = bias + coeff * q`.
    pub joint_stretch: Vec<f64>,
    #[serde(default)]
    pub camera_joint_bias_bounds: Vec<f64>,
    /// Per-step standard deviations of the camera-arm reading noise.
    #[serde(default)]
    pub camera_joint_std: Vec<f64>,
}

impl NoiseModel {
    pub fn zero(n_j: usize, n_cam: usize) -> Self {
        Self {
            calibration_var: [0.0; 6],
            joint_bias_bounds: vec![0.0; n_j],
            joint_stretch: vec![0.0; n_j],
            camera_joint_bias_bounds: vec![0.0; n_cam],
            camera_joint_std: vec![0.0; n_cam],
        }
    }

    pub fn validate(&self, n_j: usize, n_cam: usize) -> Result<()> {
        let ok = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if self.joint_bias_bounds.len() != n_j || self.joint_stretch.len() != n_j {
            return Err(Error::Config(format!(
                "noise model joint vectors must have {n_j} entries"
            )));
        }
        if n_cam > 0
            && (self.camera_joint_bias_bounds.len() != n_cam
                || self.camera_joint_std.len() != n_cam)
        {
            return Err(Error::Config(format!(
                "noise model camera-arm vectors must have {n_cam} entries"
            )));
        }
        if !ok(&self.calibration_var)
            || !ok(&self.joint_bias_bounds)
            || !ok(&self.camera_joint_bias_bounds)
            || !ok(&self.camera_joint_std)
        {
            return Err(Error::Config(
                "noise bounds, variances and deviations must be non-negative".into(),
            ));
        }
        if self.joint_stretch.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(
                "cable-stretch coefficients must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Draws `(w, b) ~ N(0, diag(var))` and returns the error transform
/// `T^{b-}_b` together with its parameters.
pub fn sample_calibration_error<R: Rng + ?Sized>(
    var: &[f64; 6],
    rng: &mut R,
) -> (RigidTransform, AxisAnglePose) {
    let mut v = [0.0; 6];
    for (x, s2) in v.iter_mut().zip(var) {
        let z: f64 = rng.sample(StandardNormal);
        *x = s2.sqrt() * z;
    }
    let pose = AxisAnglePose::from_array(&v);
    (pose.to_transform(), pose)
}

/// Calibrated transform handed to the tracker: `truth * error^-1`.
pub fn calibrated(truth: &RigidTransform, error: &RigidTransform) -> RigidTransform {
    *truth * error.inverse()
}

pub fn sample_biases<R: Rng + ?Sized>(bounds: &[f64], rng: &mut R) -> Vec<f64> {
    bounds
        .iter()
        .map(|&a| {
            if a > 0.0 {
                rng.random_range(-a..a)
            } else {
                0.0
            }
        })
        .collect()
}

/// Tool joint reading error `e_i = bias_i + stretch_i * q_i` for true joints `q`.
pub fn tool_joint_errors(noise: &NoiseModel, biases: &[f64], q: &[f64]) -> Vec<f64> {
    biases
        .iter()
        .zip(&noise.joint_stretch)
        .zip(q)
        .map(|((b, c), qi)| b + c * qi)
        .collect()
}

/// Camera-arm reading error: bias plus fresh Gaussian noise each call.
pub fn camera_joint_errors<R: Rng + ?Sized>(
    noise: &NoiseModel,
    biases: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    biases
        .iter()
        .zip(&noise.camera_joint_std)
        .map(|(b, s)| {
            let z: f64 = rng.sample(StandardNormal);
            b + s * z
        })
        .collect()
}

/// Measured joints from true joints, `q~ = q - e`.
pub fn measured(q: &[f64], e: &[f64]) -> Vec<f64> {
    q.iter().zip(e).map(|(a, b)| a - b).collect()
}

/// True joints realized when a controller commands the measured reading
/// `q_cmd` on a tool with stretch `c` and bias `b`: `q = (q_cmd + b) / (1 - c)`.
pub fn realized_from_command(noise: &NoiseModel, biases: &[f64], q_cmd: &[f64]) -> Vec<f64> {
    q_cmd
        .iter()
        .zip(biases)
        .zip(&noise.joint_stretch)
        .map(|((q, b), c)| (q + b) / (1.0 - c))
        .collect()
}
