use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which parameters the filter estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackingMode {
    /// Base-to-camera error plus every joint error (`n_b = 0` in the filter).
    /// Eye-in-hand runs also track the camera-arm joint errors.
    AllUnknowns,
    /// Only the 6-DoF lumped error; observable joint errors are assumed zero.
    Lumped,
    /// Lumped error plus the errors of joints `n_b+1..=n_j`.
    LumpedPlusJoints,
}

impl std::str::FromStr for TrackingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-unknowns" => Ok(Self::AllUnknowns),
            "lumped" => Ok(Self::Lumped),
            "lumped-plus-joints" => Ok(Self::LumpedPlusJoints),
            other => Err(Error::Config(format!("unknown tracking mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for TrackingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AllUnknowns => "all-unknowns",
            Self::Lumped => "lumped",
            Self::LumpedPlusJoints => "lumped-plus-joints",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationModel {
    /// Greedy association with clipped Gaussians for points and edges.
    ClippedGaussian,
    /// Detections arrive labeled with landmark and confidence; points use the
    /// confidence-weighted sum, edges stay clipped-Gaussian.
    ConfidenceWeighted,
}

/// How a predicted particle's weight is set before the observation update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionWeighting {
    /// Weight is the Gaussian density of the sampled perturbation.
    PerturbationDensity,
    /// Uniform weight after the ancestor draw (plain SIR).
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleRule {
    /// Resample when ESS/N drops below the threshold.
    BelowThreshold,
    /// Resample when ESS/N exceeds the threshold (literal listing reading).
    AboveThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RngMode {
    /// One generator, consumed particle by particle.
    Sequential,
    /// Independent stream per (step, particle); predictions run in parallel.
    Substreams,
}

/// Particle filter parameters. Covariances are diagonal and given as
/// variances (rad^2, mm^2). Joint vectors cover every joint of the chain;
/// the filter slices out the ones it tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub particles: usize,
    /// ESS fraction threshold in (0, 1].
    pub ess_threshold: f64,
    /// `[w_x, w_y, w_z, b_x, b_y, b_z]`
    pub lump_var_init: [f64; 6],
    pub lump_var_step: [f64; 6],
    pub joint_error_bounds: Vec<f64>,
    pub joint_error_var_step: Vec<f64>,
    #[serde(default)]
    pub camera_joint_error_bounds: Vec<f64>,
    #[serde(default)]
    pub camera_joint_error_var_step: Vec<f64>,
    pub gamma_m: f64,
    pub gamma_rho: f64,
    pub gamma_phi: f64,
    pub point_cost_max: f64,
    pub edge_cost_max: f64,
    pub mode: TrackingMode,
    pub observation: ObservationModel,
    pub prediction_weighting: PredictionWeighting,
    pub resample_rule: ResampleRule,
    pub rng: RngMode,
}

impl FilterConfig {
    /// da Vinci tool tracking parameters (stationary camera).
    pub fn da_vinci() -> Self {
        let lump_var_step = [0.005, 0.005, 0.005, 0.25, 0.25, 0.25];
        let gamma_m = 0.15;
        let gamma_phi = 40.0;
        let gamma_rho = 0.1;
        Self {
            particles: 1000,
            ess_threshold: 0.5,
            lump_var_init: lump_var_step.map(|v| 10.0 * v),
            lump_var_step,
            joint_error_bounds: vec![0.004, 0.004, 2.0, 0.004, 0.004, 0.004, 0.01],
            joint_error_var_step: vec![0.0025, 0.0025, 1.0, 0.0025, 0.0025, 0.0025, 0.005],
            camera_joint_error_bounds: vec![0.004, 0.004, 2.0, 0.004],
            camera_joint_error_var_step: vec![0.01, 0.01, 2.5, 0.01],
            gamma_m,
            gamma_rho,
            gamma_phi,
            point_cost_max: 25.0 * gamma_m,
            edge_cost_max: 0.1 * gamma_phi + 25.0 * gamma_rho,
            mode: TrackingMode::Lumped,
            observation: ObservationModel::ClippedGaussian,
            prediction_weighting: PredictionWeighting::PerturbationDensity,
            resample_rule: ResampleRule::BelowThreshold,
            rng: RngMode::Sequential,
        }
    }

    /// The same table with the third rotation variance read as a literal 5.
    pub fn da_vinci_literal_table() -> Self {
        let mut cfg = Self::da_vinci();
        cfg.lump_var_step[2] = 5.0;
        cfg.lump_var_init = cfg.lump_var_step.map(|v| 10.0 * v);
        cfg
    }

    /// Moving-endoscope variant: lump step variances doubled, initial
    /// variances kept at ten times the step variances.
    pub fn da_vinci_eye_in_hand() -> Self {
        let mut cfg = Self::da_vinci();
        cfg.lump_var_step = cfg.lump_var_step.map(|v| 2.0 * v);
        cfg.lump_var_init = cfg.lump_var_step.map(|v| 10.0 * v);
        cfg
    }

    /// Baxter arm with a mono camera and labeled, confidence-scored detections.
    pub fn baxter() -> Self {
        let lump_var_step = [0.001, 0.001, 0.001, 0.25, 0.25, 0.25];
        Self {
            particles: 200,
            ess_threshold: 0.5,
            lump_var_init: lump_var_step.map(|v| 10.0 * v),
            lump_var_step,
            joint_error_bounds: vec![0.01; 7],
            joint_error_var_step: vec![0.001; 7],
            camera_joint_error_bounds: Vec::new(),
            camera_joint_error_var_step: Vec::new(),
            gamma_m: 5.0,
            gamma_rho: 0.1,
            gamma_phi: 40.0,
            point_cost_max: 25.0 * 5.0,
            edge_cost_max: 0.1 * 40.0 + 25.0 * 0.1,
            mode: TrackingMode::LumpedPlusJoints,
            observation: ObservationModel::ConfidenceWeighted,
            prediction_weighting: PredictionWeighting::PerturbationDensity,
            resample_rule: ResampleRule::BelowThreshold,
            rng: RngMode::Sequential,
        }
    }

    /// Checks internal consistency against a tool chain with `n_j` joints and
    /// a camera arm with `n_cam` joints (0 for a stationary camera).
    pub fn validate(&self, n_j: usize, n_cam: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.particles == 0 {
            return bad("particles must be at least 1".into());
        }
        if !(self.ess_threshold > 0.0 && self.ess_threshold <= 1.0) {
            return bad(format!(
                "ess_threshold {} must lie in (0, 1]",
                self.ess_threshold
            ));
        }
        if self
            .lump_var_init
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return bad("lump_var_init must be strictly positive".into());
        }
        let nonneg = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !nonneg(&self.lump_var_step) {
            return bad("lump_var_step must be non-negative".into());
        }
        if self.joint_error_bounds.len() != n_j || self.joint_error_var_step.len() != n_j {
            return bad(format!(
                "joint error vectors have lengths {} and {}, chain has {n_j} joints",
                self.joint_error_bounds.len(),
                self.joint_error_var_step.len()
            ));
        }
        if !nonneg(&self.joint_error_bounds) || !nonneg(&self.joint_error_var_step) {
            return bad("joint error bounds and variances must be non-negative".into());
        }
        if n_cam > 0 && self.mode == TrackingMode::AllUnknowns {
            if self.camera_joint_error_bounds.len() != n_cam
                || self.camera_joint_error_var_step.len() != n_cam
            {
                return bad(format!(
                    "camera joint error vectors must have {n_cam} entries"
                ));
            }
            if !nonneg(&self.camera_joint_error_bounds)
                || !nonneg(&self.camera_joint_error_var_step)
            {
                return bad("camera joint error bounds and variances must be non-negative".into());
            }
        }
        for (name, v) in [
            ("gamma_m", self.gamma_m),
            ("gamma_rho", self.gamma_rho),
            ("gamma_phi", self.gamma_phi),
            ("point_cost_max", self.point_cost_max),
            ("edge_cost_max", self.edge_cost_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}
