//! Simulate-and-track trials and their per-step metrics.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::se3::{pose_error, RigidTransform};
use crate::simulator::{CameraMode, Scenario, Scene, SceneRow};
use crate::tracker::{
    Estimate, FilterConfig, ParticleFilter, StepInput, TrackingMode, TrackingModel,
};

pub const DEFAULT_BURN_IN: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub filter: FilterConfig,
    pub mode: TrackingMode,
    pub camera: CameraMode,
    pub trials: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.scenario.validate(self.camera)?;
        let n_cam = match self.camera {
            CameraMode::EyeInHand => self.scenario.arm.as_ref().map_or(0, |a| a.arm.n_j()),
            CameraMode::Stationary => 0,
        };
        self.filter_config()
            .validate(self.scenario.chain.n_j(), n_cam)
    }

    /// Filter parameters with the experiment's tracking mode applied.
    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            mode: self.mode,
            ..self.filter.clone()
        }
    }
}

/// One step of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub trial: usize,
    pub t: usize,
    /// End-effector position error in the camera frame (mm).
    pub eps_b: f64,
    /// End-effector orientation error (rad).
    pub eps_w: f64,
    /// `|q_hat - q|` for joints `n_b+1..=n_j` of the chain (rad or mm).
    pub eps_q: Vec<f64>,
    pub ess: f64,
    pub n_pts: usize,
    pub n_edges: usize,
    /// Translation and rotation error of the estimated lump against the
    /// injected one. In all-unknowns mode this is the base-to-camera error.
    pub eps_lump_b: f64,
    pub eps_lump_w: f64,
    /// The filter lost all weight this step and was re-initialized.
    pub degenerate: bool,
}

/// Scene and filter seeds for a trial; identical across tracking modes so
/// that runs in different modes are paired.
pub fn trial_seeds(seed: u64, trial: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (rng.next_u64(), rng.next_u64())
}

/// Pose estimate implied by a filter estimate.
pub fn estimated_end_effector(
    model: &TrackingModel,
    n_b: usize,
    estimate: &Estimate,
    row: &SceneRow,
) -> Result<(RigidTransform, Vec<f64>)> {
    let q_hat: Vec<f64> = row
        .q_measured
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if i >= n_b {
                v + estimate.joint_errors[i - n_b]
            } else {
                *v
            }
        })
        .collect();
    let q_cam: Option<Vec<f64>> = row.q_camera_measured.as_ref().map(|qc| {
        qc.iter()
            .enumerate()
            .map(|(i, v)| v + estimate.camera_joint_errors.get(i).copied().unwrap_or(0.0))
            .collect()
    });
    let head = model.mount.head(q_cam.as_deref())?;
    let chain = &model.chain;
    let pose = head * estimate.lump.to_transform() * chain.product(&q_hat, 0, chain.end_effector());
    Ok((pose, q_hat))
}

pub fn run_trial(spec: &ExperimentSpec, trial: usize) -> Result<Vec<ResultRow>> {
    let (scene_seed, filter_seed) = trial_seeds(spec.seed, trial);
    let mut scene = Scene::new(&spec.scenario, spec.camera, scene_seed)?;
    let model = scene.tracking_model();
    let mut filter = ParticleFilter::new(spec.filter_config(), model.clone(), filter_seed)?;
    let n_b_chain = spec.scenario.chain.n_b();
    let mut rows = Vec::with_capacity(scene.steps());
    while let Some(row) = scene.step()? {
        let input = StepInput {
            q_measured: &row.q_measured,
            q_camera: row.q_camera_measured.as_deref(),
            batches: &row.batches,
        };
        let (estimate, degenerate) = match filter.update(&input) {
            Ok(e) => (e, false),
            Err(Error::DegenerateFilter(_)) => {
                filter.initialize()?;
                (filter.estimate(), true)
            }
            Err(e) => return Err(e),
        };
        let n_b = filter.n_b();
        let (pose, q_hat) = estimated_end_effector(&model, n_b, &estimate, &row)?;
        let (eps_b, eps_w) = pose_error(&row.ee_in_camera, &pose);
        let eps_q = (n_b_chain..row.q.len())
            .map(|i| (q_hat[i] - row.q[i]).abs())
            .collect();
        let true_lump = if n_b == 0 {
            *scene.base_error()
        } else {
            row.true_lump
        };
        let (eps_lump_b, eps_lump_w) = pose_error(&true_lump, &estimate.lump.to_transform());
        let (n_pts, n_edges) = filter.match_counts(&estimate, &input)?;
        rows.push(ResultRow {
            trial,
            t: row.t,
            eps_b,
            eps_w,
            eps_q,
            ess: estimate.ess_fraction,
            n_pts,
            n_edges,
            eps_lump_b,
            eps_lump_w,
            degenerate,
        });
    }
    Ok(rows)
}

/// All trials, run in parallel and returned in `(trial, t)` order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let per_trial: Result<Vec<Vec<ResultRow>>> = (0..spec.trials)
        .into_par_iter()
        .map(|k| run_trial(spec, k))
        .collect();
    Ok(per_trial?.into_iter().flatten().collect())
}
