//! Camera rig, mount and the projection of expected features.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{project_cylinder_edges, CameraModel, EdgeFeature, PointFeature, MIN_DEPTH};
use crate::error::{Error, Result};
use crate::kinematics::KinematicChain;
use crate::se3::{AxisAnglePose, RigidTransform};

/// Detections from one camera at one time step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureBatch {
    pub camera: usize,
    pub points: Vec<PointFeature>,
    pub edges: Vec<EdgeFeature>,
    /// Landmark index of each point, when the detector labels its output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_landmarks: Option<Vec<usize>>,
}

impl FeatureBatch {
    pub fn empty(camera: usize) -> Self {
        Self {
            camera,
            ..Self::default()
        }
    }
}

/// How the reference camera relates to the tool base.
#[derive(Debug, Clone, PartialEq)]
pub enum CameraMount {
    /// Fixed camera; `calibration` is the calibrated base-to-camera transform.
    Stationary { calibration: RigidTransform },
    /// Camera carried by `arm`. `flange_to_camera` maps the last arm frame into
    /// the camera; `calibration` is the calibrated tool-base to arm-base transform.
    EyeInHand {
        arm: KinematicChain,
        flange_to_camera: RigidTransform,
        calibration: RigidTransform,
    },
}

impl CameraMount {
    pub fn arm_joints(&self) -> usize {
        match self {
            CameraMount::Stationary { .. } => 0,
            CameraMount::EyeInHand { arm, .. } => arm.n_j(),
        }
    }

    /// Reference camera from calibrated tool base, given the camera-arm
    /// joint values the projection should use.
    pub fn head(&self, q_camera: Option<&[f64]>) -> Result<RigidTransform> {
        match self {
            CameraMount::Stationary { calibration } => Ok(*calibration),
            CameraMount::EyeInHand {
                arm,
                flange_to_camera,
                calibration,
            } => {
                let q = q_camera.ok_or_else(|| {
                    Error::InvalidInput("eye-in-hand step needs camera-arm joints".into())
                })?;
                if q.len() != arm.n_j() {
                    return Err(Error::InvalidInput(format!(
                        "camera-arm joint vector has {} entries, arm has {}",
                        q.len(),
                        arm.n_j()
                    )));
                }
                Ok(*flange_to_camera * arm.product(q, 0, arm.n_j()).inverse() * *calibration)
            }
        }
    }
}

/// Everything the filter needs to predict features.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingModel {
    pub chain: KinematicChain,
    pub rig: Vec<CameraModel>,
    pub mount: CameraMount,
}

/// Expected features in one camera. `None` marks a feature that is behind
/// the camera, outside the image, or degenerate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectedFeatures {
    pub points: Vec<Option<Vector2<f64>>>,
    pub edges: Vec<Option<EdgeFeature>>,
}

/// Tool features expressed in the frame the lump acts on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaseFeatures {
    pub points: Vec<Vector3<f64>>,
    /// (axis, point on axis, radius)
    pub cylinders: Vec<(Vector3<f64>, Vector3<f64>, f64)>,
}

impl TrackingModel {
    pub fn n_points(&self) -> usize {
        self.chain.tool_points().len()
    }

    pub fn n_edges(&self) -> usize {
        2 * self.chain.cylinders().len()
    }

    /// Features given `link_poses[j]` = base-frame pose of link `j`. Only the
    /// entries for links that carry features are read.
    pub fn base_features(&self, link_poses: &[RigidTransform]) -> BaseFeatures {
        BaseFeatures {
            points: self
                .chain
                .tool_points()
                .iter()
                .map(|p| link_poses[p.link].transform_point(&p.position))
                .collect(),
            cylinders: self
                .chain
                .cylinders()
                .iter()
                .map(|c| {
                    let t = &link_poses[c.link];
                    (
                        t.transform_vector(&c.axis),
                        t.transform_point(&c.point),
                        c.radius,
                    )
                })
                .collect(),
        }
    }

    /// Projects base-frame features through every camera of the rig;
    /// `camera_from_base` maps the base frame into the reference camera.
    pub fn project_base_features(
        &self,
        camera_from_base: &RigidTransform,
        features: &BaseFeatures,
    ) -> Vec<ProjectedFeatures> {
        self.rig
            .iter()
            .map(|cam| project_into(cam, camera_from_base, features))
            .collect()
    }

    pub fn project_into_camera(
        &self,
        camera: usize,
        camera_from_base: &RigidTransform,
        features: &BaseFeatures,
    ) -> ProjectedFeatures {
        project_into(&self.rig[camera], camera_from_base, features)
    }
}

fn project_into(
    cam: &CameraModel,
    camera_from_base: &RigidTransform,
    features: &BaseFeatures,
) -> ProjectedFeatures {
    let m = cam.extrinsic * *camera_from_base;
    let points = features
        .points
        .iter()
        .map(|p| {
            let local = m.transform_point(p);
            if local.z <= MIN_DEPTH {
                return None;
            }
            let uv = Vector2::new(
                cam.fx * local.x / local.z + cam.cu,
                cam.fy * local.y / local.z + cam.cv,
            );
            cam.contains(&uv).then_some(uv)
        })
        .collect();
    let mut edges = Vec::with_capacity(2 * features.cylinders.len());
    let local_cam = CameraModel {
        extrinsic: RigidTransform::identity(),
        ..*cam
    };
    for (axis, point, radius) in &features.cylinders {
        let a = m.transform_vector(axis);
        let p = m.transform_point(point);
        match project_cylinder_edges(&local_cam, *radius, &a, &p) {
            Ok((e1, e2)) if p.z > MIN_DEPTH => {
                edges.push(local_cam.line_visible(&e1).then_some(e1));
                edges.push(local_cam.line_visible(&e2).then_some(e2));
            }
            _ => edges.extend([None, None]),
        }
    }
    ProjectedFeatures { points, edges }
}

/// Expected features for one parameter set.
///
/// `n_b` is the boundary the lump is defined at (0 for all-unknowns);
/// `joint_errors` covers joints `n_b+1..=n_j`; `camera_joint_errors` (may be
/// empty) is added to the measured camera-arm joints.
pub fn project_expected_features(
    model: &TrackingModel,
    n_b: usize,
    lump: &AxisAnglePose,
    q_measured: &[f64],
    joint_errors: &[f64],
    q_camera: Option<&[f64]>,
    camera_joint_errors: &[f64],
) -> Result<Vec<ProjectedFeatures>> {
    let chain = &model.chain;
    let n_j = chain.n_j();
    if q_measured.len() != n_j || n_b > n_j || joint_errors.len() != n_j - n_b {
        return Err(Error::InvalidInput(
            "inconsistent joint vector lengths".into(),
        ));
    }
    let q_cam: Option<Vec<f64>> = q_camera.map(|q| {
        q.iter()
            .enumerate()
            .map(|(i, v)| v + camera_joint_errors.get(i).copied().unwrap_or(0.0))
            .collect()
    });
    let head = model.mount.head(q_cam.as_deref())?;
    let q: Vec<f64> = (0..n_j)
        .map(|i| {
            if i < n_b {
                q_measured[i]
            } else {
                q_measured[i] + joint_errors[i - n_b]
            }
        })
        .collect();
    let links = chain.link_frames(&q);
    let features = model.base_features(&links);
    Ok(model.project_base_features(&(head * lump.to_transform()), &features))
}

/// Noise-free detections of projected features, for tests and replay checks.
pub fn to_batches(projected: &[ProjectedFeatures]) -> Vec<FeatureBatch> {
    projected
        .iter()
        .enumerate()
        .map(|(c, p)| FeatureBatch {
            camera: c,
            points: p
                .points
                .iter()
                .flatten()
                .map(|uv| PointFeature::new(uv.x, uv.y))
                .collect(),
            edges: p.edges.iter().flatten().copied().collect(),
            point_landmarks: None,
        })
        .collect()
}
