//! The particle filter over lumped error and joint errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::association::{associate_edges, associate_points};
use super::config::{
    FilterConfig, ObservationModel, PredictionWeighting, ResampleRule, RngMode, TrackingMode,
};
use super::model::{BaseFeatures, FeatureBatch, ProjectedFeatures, TrackingModel};
use super::observation::{
    confidence_point_likelihood, edge_obs_likelihood, point_obs_likelihood, LabeledDetection,
};
use super::resample::{
    effective_sample_size, normalize_log_weights, sample_index, stratified_indices,
};
use crate::error::{ensure_finite, Error, Result};
use crate::se3::{AxisAnglePose, RigidTransform};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Stream id reserved for resampling draws in substream mode.
const RESAMPLE_STREAM: u64 = 0xFFFF_FFFF;

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub weight: f64,
    pub lump: AxisAnglePose,
    /// Errors of joints `n_b+1..=n_j` (the filter's `n_b`).
    pub joint_errors: Vec<f64>,
    /// Camera-arm joint errors; empty unless tracked.
    pub camera_joint_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub lump: AxisAnglePose,
    pub joint_errors: Vec<f64>,
    pub camera_joint_errors: Vec<f64>,
    pub ess_fraction: f64,
}

/// Joint readings and detections for one time step.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub q_measured: &'a [f64],
    pub q_camera: Option<&'a [f64]>,
    pub batches: &'a [FeatureBatch],
}

/// Per-step quantities shared by all particles.
struct StepGeometry {
    /// Reference camera from calibrated base; `None` when it depends on
    /// per-particle camera-arm errors.
    head: Option<RigidTransform>,
    /// Base-frame features when they do not depend on the particle.
    shared: Option<BaseFeatures>,
    /// `prod_{i<=n_b} T_i(q~_i)`
    prefix: RigidTransform,
    q_measured: Vec<f64>,
    q_camera: Option<Vec<f64>>,
    top_link: usize,
}

#[derive(Debug, Clone)]
pub struct ParticleFilter {
    cfg: FilterConfig,
    model: TrackingModel,
    n_b: usize,
    track_joints: bool,
    track_camera_joints: bool,
    seed: u64,
    step: u64,
    rng: ChaCha8Rng,
    particles: Vec<Particle>,
    log_weights: Vec<f64>,
    last_ess: f64,
    resampled: bool,
}

fn log_density(x: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(var)
        .filter(|(_, v)| **v > 0.0)
        .map(|(xi, v)| -0.5 * (xi * xi / v + LN_2PI + v.ln()))
        .sum()
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

impl ParticleFilter {
    /// Validates the configuration and draws the initial particle set.
    pub fn new(cfg: FilterConfig, model: TrackingModel, seed: u64) -> Result<Self> {
        let n_arm = model.mount.arm_joints();
        cfg.validate(model.chain.n_j(), n_arm)?;
        if model.rig.is_empty() {
            return Err(Error::Config("camera rig is empty".into()));
        }
        let n_b = match cfg.mode {
            TrackingMode::AllUnknowns => 0,
            _ => model.chain.n_b(),
        };
        if let Some(low) = model.chain.lowest_feature_link() {
            if low < n_b {
                return Err(Error::Config(format!(
                    "feature on link {low} lies before the visibility boundary n_b = {n_b}"
                )));
            }
        }
        let track_joints = cfg.mode != TrackingMode::Lumped;
        let track_camera_joints = cfg.mode == TrackingMode::AllUnknowns && n_arm > 0;
        let mut filter = Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            model,
            n_b,
            track_joints,
            track_camera_joints,
            seed,
            step: 0,
            particles: Vec::new(),
            log_weights: Vec::new(),
            last_ess: 1.0,
            resampled: false,
        };
        filter.initialize()?;
        Ok(filter)
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    pub fn model(&self) -> &TrackingModel {
        &self.model
    }

    /// Visibility boundary used by this filter (0 when tracking all unknowns).
    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Whether the last update resampled.
    pub fn resampled(&self) -> bool {
        self.resampled
    }

    fn n_tracked(&self) -> usize {
        self.model.chain.n_j() - self.n_b
    }

    fn substream(&self, step: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((step << 32) | stream);
        rng
    }

    /// Redraws the initial particle set and restarts the step counter.
    pub fn initialize(&mut self) -> Result<()> {
        self.step = 0;
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.cfg.particles;
        let (particles, logs): (Vec<_>, Vec<_>) = match self.cfg.rng {
            RngMode::Sequential => {
                let mut rng = self.rng.clone();
                let out = (0..n).map(|_| self.draw_initial(&mut rng)).unzip();
                self.rng = rng;
                out
            }
            RngMode::Substreams => (0..n)
                .into_par_iter()
                .map(|p| {
                    let mut rng = self.substream(0, p as u64);
                    self.draw_initial(&mut rng)
                })
                .unzip(),
        };
        self.particles = particles;
        self.log_weights = logs;
        self.normalize()?;
        Ok(())
    }

    fn draw_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> (Particle, f64) {
        let mut v = [0.0; 6];
        for (vi, var) in v.iter_mut().zip(&self.cfg.lump_var_init) {
            *vi = var.sqrt() * normal(rng);
        }
        let log_w = log_density(&v, &self.cfg.lump_var_init);
        let uniform = |rng: &mut R, a: f64| {
            if a > 0.0 {
                rng.random_range(-a..a)
            } else {
                0.0
            }
        };
        let joint_errors = if self.track_joints {
            self.cfg.joint_error_bounds[self.n_b..]
                .iter()
                .map(|&a| uniform(rng, a))
                .collect()
        } else {
            vec![0.0; self.n_tracked()]
        };
        let camera_joint_errors = if self.track_camera_joints {
            self.cfg
                .camera_joint_error_bounds
                .iter()
                .map(|&a| uniform(rng, a))
                .collect()
        } else {
            Vec::new()
        };
        (
            Particle {
                weight: 0.0,
                lump: AxisAnglePose::from_array(&v),
                joint_errors,
                camera_joint_errors,
            },
            log_w,
        )
    }

    fn draw_predicted<R: Rng + ?Sized>(&self, cdf: &[f64], rng: &mut R) -> (Particle, f64) {
        let ancestor = &self.particles[sample_index(cdf, rng.random::<f64>())];
        let mut dv = [0.0; 6];
        for (d, var) in dv.iter_mut().zip(&self.cfg.lump_var_step) {
            *d = var.sqrt() * normal(rng);
        }
        let base = ancestor.lump.to_array();
        let mut v = [0.0; 6];
        for i in 0..6 {
            v[i] = base[i] + dv[i];
        }
        let mut log_w = log_density(&dv, &self.cfg.lump_var_step);
        let mut joint_errors = ancestor.joint_errors.clone();
        if self.track_joints {
            let vars = &self.cfg.joint_error_var_step[self.n_b..];
            let de: Vec<f64> = vars.iter().map(|v| v.sqrt() * normal(rng)).collect();
            for (e, d) in joint_errors.iter_mut().zip(&de) {
                *e += d;
            }
            log_w += log_density(&de, vars);
        }
        let mut camera_joint_errors = ancestor.camera_joint_errors.clone();
        if self.track_camera_joints {
            let vars = &self.cfg.camera_joint_error_var_step;
            let de: Vec<f64> = vars.iter().map(|v| v.sqrt() * normal(rng)).collect();
            for (e, d) in camera_joint_errors.iter_mut().zip(&de) {
                *e += d;
            }
            log_w += log_density(&de, vars);
        }
        if self.cfg.prediction_weighting == PredictionWeighting::Uniform {
            log_w = 0.0;
        }
        (
            Particle {
                weight: 0.0,
                lump: AxisAnglePose::from_array(&v),
                joint_errors,
                camera_joint_errors,
            },
            log_w,
        )
    }

    /// Draws ancestors by weight and perturbs them with the step noise. The
    /// new log-weights are the perturbation log-densities (or zero).
    pub fn predict(&mut self) -> Result<()> {
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateFilter(format!(
                "weights sum to {total} before prediction"
            )));
        }
        self.step += 1;
        let mut acc = 0.0;
        let cdf: Vec<f64> = self
            .particles
            .iter()
            .map(|p| {
                acc += p.weight;
                acc
            })
            .collect();
        let n = self.cfg.particles;
        let (particles, logs): (Vec<_>, Vec<_>) = match self.cfg.rng {
            RngMode::Sequential => {
                let mut rng = self.rng.clone();
                let out = (0..n).map(|_| self.draw_predicted(&cdf, &mut rng)).unzip();
                self.rng = rng;
                out
            }
            RngMode::Substreams => {
                let step = self.step;
                (0..n)
                    .into_par_iter()
                    .map(|p| {
                        let mut rng = self.substream(step, p as u64);
                        self.draw_predicted(&cdf, &mut rng)
                    })
                    .unzip()
            }
        };
        self.particles = particles;
        self.log_weights = logs;
        Ok(())
    }

    fn geometry(&self, input: &StepInput) -> Result<StepGeometry> {
        let chain = &self.model.chain;
        if input.q_measured.len() != chain.n_j() {
            return Err(Error::InvalidInput(format!(
                "measured joints have {} entries, chain has {}",
                input.q_measured.len(),
                chain.n_j()
            )));
        }
        ensure_finite(input.q_measured, "measured joints")?;
        if let Some(qc) = input.q_camera {
            ensure_finite(qc, "camera-arm joints")?;
        }
        for b in input.batches {
            if b.camera >= self.model.rig.len() {
                return Err(Error::InvalidInput(format!(
                    "batch for unknown camera {}",
                    b.camera
                )));
            }
        }
        let top_link = chain
            .tool_points()
            .iter()
            .map(|p| p.link)
            .chain(chain.cylinders().iter().map(|c| c.link))
            .max()
            .unwrap_or(self.n_b)
            .max(self.n_b);
        let prefix = chain.product(input.q_measured, 0, self.n_b);
        let head = if self.track_camera_joints {
            None
        } else {
            Some(self.model.mount.head(input.q_camera)?)
        };
        let mut g = StepGeometry {
            head,
            shared: None,
            prefix,
            q_measured: input.q_measured.to_vec(),
            q_camera: input.q_camera.map(<[f64]>::to_vec),
            top_link,
        };
        if !self.track_joints {
            let zeros = vec![0.0; self.n_tracked()];
            g.shared = Some(self.base_features(&g, &zeros));
        }
        Ok(g)
    }

    fn base_features(&self, g: &StepGeometry, joint_errors: &[f64]) -> BaseFeatures {
        let chain = &self.model.chain;
        let mut links = vec![RigidTransform::identity(); g.top_link + 1];
        let mut acc = g.prefix;
        links[self.n_b] = acc;
        for j in self.n_b..g.top_link {
            acc = acc * chain.joints()[j].transform(g.q_measured[j] + joint_errors[j - self.n_b]);
            links[j + 1] = acc;
        }
        self.model.base_features(&links)
    }

    fn camera_from_base(&self, g: &StepGeometry, particle: &Particle) -> Result<RigidTransform> {
        let head = match g.head {
            Some(h) => h,
            None => {
                let q = g.q_camera.as_ref().ok_or_else(|| {
                    Error::InvalidInput("eye-in-hand step needs camera-arm joints".into())
                })?;
                let q: Vec<f64> = q
                    .iter()
                    .zip(&particle.camera_joint_errors)
                    .map(|(a, b)| a + b)
                    .collect();
                self.model.mount.head(Some(&q))?
            }
        };
        Ok(head * particle.lump.to_transform())
    }

    fn project_particle(
        &self,
        g: &StepGeometry,
        particle: &Particle,
    ) -> Result<Vec<ProjectedFeatures>> {
        let m = self.camera_from_base(g, particle)?;
        let own;
        let features = match &g.shared {
            Some(f) => f,
            None => {
                own = self.base_features(g, &particle.joint_errors);
                &own
            }
        };
        Ok(self.model.project_base_features(&m, features))
    }

    fn log_likelihood(
        &self,
        projected: &[ProjectedFeatures],
        batches: &[FeatureBatch],
    ) -> Result<f64> {
        let n_m = self.model.n_points();
        let n_l = self.model.n_edges();
        let cfg = &self.cfg;
        let mut total = 0.0;
        for b in batches {
            let proj = &projected[b.camera];
            if n_m > 0 {
                let lik = match cfg.observation {
                    ObservationModel::ClippedGaussian => {
                        let a = associate_points(
                            &b.points,
                            &proj.points,
                            cfg.gamma_m,
                            cfg.point_cost_max,
                        );
                        point_obs_likelihood(&a, n_m, cfg.point_cost_max)
                    }
                    ObservationModel::ConfidenceWeighted => {
                        let labels = b.point_landmarks.as_ref().ok_or_else(|| {
                            Error::InvalidInput(
                                "confidence-weighted model needs labeled point detections".into(),
                            )
                        })?;
                        if labels.len() != b.points.len() {
                            return Err(Error::InvalidInput(
                                "point labels and detections differ in length".into(),
                            ));
                        }
                        let dets: Vec<LabeledDetection> = b
                            .points
                            .iter()
                            .zip(labels)
                            .map(|(p, &l)| LabeledDetection {
                                uv: p.uv,
                                landmark: l,
                                eta: p.confidence,
                            })
                            .collect();
                        confidence_point_likelihood(&dets, &proj.points, cfg.gamma_m)
                    }
                };
                total += lik.ln();
            }
            if n_l > 0 {
                let a = associate_edges(
                    &b.edges,
                    &proj.edges,
                    cfg.gamma_rho,
                    cfg.gamma_phi,
                    cfg.edge_cost_max,
                );
                total += edge_obs_likelihood(&a, n_l, cfg.edge_cost_max).ln();
            }
        }
        Ok(total)
    }

    /// Multiplies every weight by the observation likelihood of `input`
    /// (in log space), normalizes, and resamples according to the rule.
    pub fn observe(&mut self, input: &StepInput) -> Result<()> {
        let g = self.geometry(input)?;
        let logs: Result<Vec<f64>> = self
            .particles
            .par_iter()
            .with_min_len(32)
            .map(|p| {
                let projected = self.project_particle(&g, p)?;
                self.log_likelihood(&projected, input.batches)
            })
            .collect();
        for (lw, l) in self.log_weights.iter_mut().zip(logs?) {
            *lw += l;
        }
        self.normalize()?;
        let n = self.particles.len() as f64;
        let frac = self.last_ess / n;
        let resample = match self.cfg.resample_rule {
            ResampleRule::BelowThreshold => frac < self.cfg.ess_threshold,
            ResampleRule::AboveThreshold => frac > self.cfg.ess_threshold,
        };
        self.resampled = resample;
        if resample {
            self.resample()?;
        }
        Ok(())
    }

    fn normalize(&mut self) -> Result<()> {
        let w = normalize_log_weights(&self.log_weights)?;
        for (p, wi) in self.particles.iter_mut().zip(&w) {
            p.weight = *wi;
        }
        self.log_weights = w.iter().map(|x| x.ln()).collect();
        self.last_ess = effective_sample_size(&w);
        Ok(())
    }

    /// Stratified resampling to uniform weights.
    pub fn resample(&mut self) -> Result<()> {
        let weights: Vec<f64> = self.particles.iter().map(|p| p.weight).collect();
        let idx = match self.cfg.rng {
            RngMode::Sequential => stratified_indices(&weights, &mut self.rng)?,
            RngMode::Substreams => {
                let mut rng = self.substream(self.step, RESAMPLE_STREAM);
                stratified_indices(&weights, &mut rng)?
            }
        };
        let n = idx.len() as f64;
        self.particles = idx
            .into_iter()
            .map(|i| Particle {
                weight: 1.0 / n,
                ..self.particles[i].clone()
            })
            .collect();
        self.log_weights = vec![-(n.ln()); self.particles.len()];
        Ok(())
    }

    /// One full cycle: predict, weight by the observations, maybe resample,
    /// and return the weighted-mean estimate.
    pub fn update(&mut self, input: &StepInput) -> Result<Estimate> {
        self.predict()?;
        self.observe(input)?;
        Ok(self.estimate())
    }

    /// Weighted arithmetic mean of the particle parameters.
    pub fn estimate(&self) -> Estimate {
        let mut v = [0.0; 6];
        let mut e = vec![0.0; self.n_tracked()];
        let n_c = self
            .particles
            .first()
            .map_or(0, |p| p.camera_joint_errors.len());
        let mut c = vec![0.0; n_c];
        for p in &self.particles {
            let a = p.lump.to_array();
            for i in 0..6 {
                v[i] += p.weight * a[i];
            }
            for (ei, pe) in e.iter_mut().zip(&p.joint_errors) {
                *ei += p.weight * pe;
            }
            for (ci, pc) in c.iter_mut().zip(&p.camera_joint_errors) {
                *ci += p.weight * pc;
            }
        }
        Estimate {
            lump: AxisAnglePose::from_array(&v),
            joint_errors: e,
            camera_joint_errors: c,
            ess_fraction: self.last_ess / self.particles.len() as f64,
        }
    }

    /// Number of point and edge detections matched when the features are
    /// projected from `estimate` (summed over cameras).
    pub fn match_counts(&self, estimate: &Estimate, input: &StepInput) -> Result<(usize, usize)> {
        let g = self.geometry(input)?;
        let p = Particle {
            weight: 1.0,
            lump: estimate.lump,
            joint_errors: estimate.joint_errors.clone(),
            camera_joint_errors: estimate.camera_joint_errors.clone(),
        };
        let projected = self.project_particle(&g, &p)?;
        let (mut n_pts, mut n_edges) = (0, 0);
        for b in input.batches {
            let proj = &projected[b.camera];
            n_pts += match (&self.cfg.observation, &b.point_landmarks) {
                (ObservationModel::ConfidenceWeighted, Some(labels)) => labels
                    .iter()
                    .filter(|&&l| proj.points.get(l).is_some_and(|p| p.is_some()))
                    .count(),
                _ => associate_points(
                    &b.points,
                    &proj.points,
                    self.cfg.gamma_m,
                    self.cfg.point_cost_max,
                )
                .len(),
            };
            n_edges += associate_edges(
                &b.edges,
                &proj.edges,
                self.cfg.gamma_rho,
                self.cfg.gamma_phi,
                self.cfg.edge_cost_max,
            )
            .len();
        }
        Ok((n_pts, n_edges))
    }

    /// Overwrites the particle set; weights are renormalized.
    pub fn set_particles(&mut self, particles: Vec<Particle>) -> Result<()> {
        if particles.is_empty() {
            return Err(Error::InvalidInput("particle set is empty".into()));
        }
        for p in &particles {
            if !(p.weight >= 0.0 && p.weight.is_finite()) {
                return Err(Error::InvalidInput(
                    "particle weights must be finite and non-negative".into(),
                ));
            }
            if p.joint_errors.len() != self.n_tracked() {
                return Err(Error::InvalidInput(
                    "particle joint error length mismatch".into(),
                ));
            }
        }
        self.log_weights = particles.iter().map(|p| p.weight.ln()).collect();
        self.particles = particles;
        self.normalize()
    }

    /// Log-weights currently held (before normalization after `predict`).
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
}
