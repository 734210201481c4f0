//! Synthetic detector: noisy, incomplete and cluttered feature batches.

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, EdgeFeature, PointFeature};
use crate::error::{Error, Result};
use crate::tracker::{FeatureBatch, ProjectedFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionNoise {
    /// Pixel noise on points and on edge `rho` (px).
    pub pixel_std: f64,
    /// Noise on edge angles (rad).
    pub angle_std: f64,
    /// Probability each true detection is dropped.
    pub dropout: f64,
    /// Mean number of spurious points per camera and frame.
    pub false_points: f64,
    /// Mean number of spurious edges per camera and frame.
    #[serde(default)]
    pub false_edges: f64,
    /// Emit labeled points with confidences (`eta ~ Beta(a, b)` for true
    /// detections, `Beta(b, a)` for spurious ones).
    #[serde(default)]
    pub confidence: Option<[f64; 2]>,
}

impl Default for DetectionNoise {
    fn default() -> Self {
        Self {
            pixel_std: 0.5,
            angle_std: 0.005,
            dropout: 0.05,
            false_points: 1.0,
            false_edges: 0.0,
            confidence: None,
        }
    }
}

impl DetectionNoise {
    pub fn noiseless() -> Self {
        Self {
            pixel_std: 0.0,
            angle_std: 0.0,
            dropout: 0.0,
            false_points: 0.0,
            false_edges: 0.0,
            confidence: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(finite_nonneg(self.pixel_std) && finite_nonneg(self.angle_std)) {
            return Err(Error::Config("detector noise must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} must lie in [0, 1]",
                self.dropout
            )));
        }
        if !(finite_nonneg(self.false_points) && finite_nonneg(self.false_edges)) {
            return Err(Error::Config(
                "false detection rates must be non-negative".into(),
            ));
        }
        if let Some([a, b]) = self.confidence {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Config(
                    "confidence Beta parameters must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

fn gaussian<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).map(|n| n.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    }
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> usize {
    if lambda > 0.0 {
        Poisson::new(lambda)
            .map(|p| p.sample(rng) as usize)
            .unwrap_or(0)
    } else {
        0
    }
}

/// Turns exact projections into one camera's detections. Absent projections
/// are never emitted.
pub fn synthesize_features<R: Rng + ?Sized>(
    camera_index: usize,
    cam: &CameraModel,
    truth: &ProjectedFeatures,
    noise: &DetectionNoise,
    rng: &mut R,
) -> FeatureBatch {
    let mut batch = FeatureBatch::empty(camera_index);
    let mut labels = Vec::new();
    let beta = noise.confidence.map(|[a, b]| {
        (
            Beta::new(a, b).expect("validated"),
            Beta::new(b, a).expect("validated"),
        )
    });
    for (landmark, uv) in truth.points.iter().enumerate() {
        let Some(uv) = uv else { continue };
        if noise.dropout > 0.0 && rng.random::<f64>() < noise.dropout {
            continue;
        }
        let mut f = PointFeature::new(
            uv.x + gaussian(noise.pixel_std, rng),
            uv.y + gaussian(noise.pixel_std, rng),
        );
        if let Some((good, _)) = &beta {
            f.confidence = good.sample(rng);
            labels.push(landmark);
        }
        batch.points.push(f);
    }
    for _ in 0..poisson(noise.false_points, rng) {
        let mut f = PointFeature::new(
            rng.random_range(0.0..cam.width),
            rng.random_range(0.0..cam.height),
        );
        if let Some((_, bad)) = &beta {
            f.confidence = bad.sample(rng);
            labels.push(rng.random_range(0..truth.points.len().max(1)));
        }
        batch.points.push(f);
    }
    for e in truth.edges.iter().flatten() {
        if noise.dropout > 0.0 && rng.random::<f64>() < noise.dropout {
            continue;
        }
        batch.edges.push(EdgeFeature::canonical(
            e.rho + gaussian(noise.pixel_std, rng),
            e.phi + gaussian(noise.angle_std, rng),
        ));
    }
    let diag = cam.width.hypot(cam.height);
    for _ in 0..poisson(noise.false_edges, rng) {
        batch.edges.push(EdgeFeature {
            rho: rng.random_range(0.0..diag),
            phi: rng.random_range(0.0..std::f64::consts::PI),
        });
    }
    if beta.is_some() {
        batch.point_landmarks = Some(labels);
    }
    batch
}
