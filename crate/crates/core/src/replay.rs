//! Line-delimited JSON feature streams and estimate logs.
//!
//! A stream starts with one [`StreamHeader`] line followed by one
//! [`FrameRecord`] per time step. Estimates are written one
//! [`EstimateRecord`] per line.

use std::io::{BufRead, Write};

use nalgebra::Vector2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::camera::{EdgeFeature, PointFeature};
use crate::error::{Error, Result};
use crate::se3::AxisAnglePose;
use crate::simulator::{CameraMode, SceneRow};
use crate::tracker::{Estimate, FeatureBatch, ParticleFilter, StepInput};

pub const STREAM_FORMAT: &str = "lumped-features/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub format: String,
    pub scenario: String,
    pub camera: CameraMode,
    /// Calibrated base-to-camera (or base-to-arm-base) transform the tracker
    /// should assume.
    pub calibration: AxisAnglePose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    /// `[u, v, eta]`
    pub points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<Vec<usize>>,
    /// `[rho, phi]`
    pub edges: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub t: usize,
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_camera: Option<Vec<f64>>,
    pub cameras: Vec<CameraRecord>,
}

impl FrameRecord {
    pub fn from_row(row: &SceneRow) -> Self {
        Self {
            t: row.t,
            q: row.q_measured.clone(),
            q_camera: row.q_camera_measured.clone(),
            cameras: row
                .batches
                .iter()
                .map(|b| CameraRecord {
                    points: b
                        .points
                        .iter()
                        .map(|p| [p.uv.x, p.uv.y, p.confidence])
                        .collect(),
                    landmarks: b.point_landmarks.clone(),
                    edges: b.edges.iter().map(|e| [e.rho, e.phi]).collect(),
                })
                .collect(),
        }
    }

    pub fn batches(&self) -> Vec<FeatureBatch> {
        self.cameras
            .iter()
            .enumerate()
            .map(|(c, r)| FeatureBatch {
                camera: c,
                points: r
                    .points
                    .iter()
                    .map(|p| PointFeature {
                        uv: Vector2::new(p[0], p[1]),
                        confidence: p[2],
                    })
                    .collect(),
                edges: r
                    .edges
                    .iter()
                    .map(|e| EdgeFeature {
                        rho: e[0],
                        phi: e[1],
                    })
                    .collect(),
                point_landmarks: r.landmarks.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRecord {
    pub t: usize,
    pub w: [f64; 3],
    pub b: [f64; 3],
    /// Errors of joints `n_b+1..=n_j`.
    pub e: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e_camera: Vec<f64>,
    pub ess_fraction: f64,
}

impl EstimateRecord {
    pub fn new(t: usize, est: &Estimate) -> Self {
        Self {
            t,
            w: est.lump.w.into(),
            b: est.lump.b.into(),
            e: est.joint_errors.clone(),
            e_camera: est.camera_joint_errors.clone(),
            ess_fraction: est.ess_fraction,
        }
    }
}

pub fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn parse_line<T: DeserializeOwned>(line: &str, n: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::InvalidInput(format!("stream line {n}: {e}")))
}

/// Reads a header and the frames after it. Blank lines are skipped.
pub fn read_stream<R: BufRead>(input: R) -> Result<(StreamHeader, Vec<FrameRecord>)> {
    let mut header = None;
    let mut frames = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match header {
            None => {
                let h: StreamHeader = parse_line(&line, i + 1)?;
                if h.format != STREAM_FORMAT {
                    return Err(Error::InvalidInput(format!(
                        "unsupported stream format `{}`",
                        h.format
                    )));
                }
                header = Some(h);
            }
            Some(_) => frames.push(parse_line(&line, i + 1)?),
        }
    }
    let header = header.ok_or_else(|| Error::InvalidInput("empty feature stream".into()))?;
    Ok((header, frames))
}

/// Runs every frame through `filter`.
pub fn track_frames(
    filter: &mut ParticleFilter,
    frames: &[FrameRecord],
) -> Result<Vec<EstimateRecord>> {
    frames
        .iter()
        .map(|f| {
            let batches = f.batches();
            let est = filter.update(&StepInput {
                q_measured: &f.q,
                q_camera: f.q_camera.as_deref(),
                batches: &batches,
            })?;
            Ok(EstimateRecord::new(f.t, &est))
        })
        .collect()
}
