//! Particle filter tracking of the lumped error.

pub mod association;
pub mod config;
pub mod filter;
pub mod model;
pub mod observation;
pub mod resample;

pub use association::{associate_edges, associate_points, Match};
pub use config::{
    FilterConfig, ObservationModel, PredictionWeighting, ResampleRule, RngMode, TrackingMode,
};
pub use filter::{Estimate, Particle, ParticleFilter, StepInput};
pub use model::{
    project_expected_features, CameraMount, FeatureBatch, ProjectedFeatures, TrackingModel,
};
pub use observation::{confidence_point_likelihood, edge_obs_likelihood, point_obs_likelihood};
pub use resample::{effective_sample_size, stratified_indices};
