//! Pinhole projection of landmarks and cylinder silhouettes.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::se3::RigidTransform;

/// Points closer than this to the image plane (mm) count as behind the camera.
pub const MIN_DEPTH: f64 = 1e-6;

const DEGENERATE_COEFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cu: f64,
    pub cv: f64,
    pub width: f64,
    pub height: f64,
    /// Maps points from the reference camera frame into this camera.
    pub extrinsic: RigidTransform,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cu: f64,
        cv: f64,
        width: f64,
        height: f64,
        extrinsic: RigidTransform,
    ) -> Result<Self> {
        ensure_finite(&[fx, fy, cu, cv, width, height], "camera intrinsics")?;
        if fx <= 0.0 || fy <= 0.0 || width <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidInput(
                "focal lengths and image size must be positive".into(),
            ));
        }
        Ok(Self {
            fx,
            fy,
            cu,
            cv,
            width,
            height,
            extrinsic,
        })
    }

    /// Square-pixel camera with the principal point at the image centre.
    pub fn from_horizontal_fov(
        width: f64,
        height: f64,
        hfov: f64,
        extrinsic: RigidTransform,
    ) -> Result<Self> {
        let f = 0.5 * width / (0.5 * hfov).tan();
        Self::new(f, f, 0.5 * width, 0.5 * height, width, height, extrinsic)
    }

    pub fn contains(&self, uv: &Vector2<f64>) -> bool {
        uv.x >= 0.0 && uv.x <= self.width && uv.y >= 0.0 && uv.y <= self.height
    }

    /// True when the line crosses the image rectangle.
    pub fn line_visible(&self, edge: &EdgeFeature) -> bool {
        let (s, c) = edge.phi.sin_cos();
        let corners = [
            (0.0, 0.0),
            (self.width, 0.0),
            (0.0, self.height),
            (self.width, self.height),
        ];
        let mut any_pos = false;
        let mut any_neg = false;
        for (u, v) in corners {
            let f = u * c + v * s - edge.rho;
            any_pos |= f >= 0.0;
            any_neg |= f <= 0.0;
        }
        any_pos && any_neg
    }

    /// Projection of a point already expressed in this camera's frame.
    fn project_local(&self, p: &Vector3<f64>) -> Result<Vector2<f64>> {
        if p.z <= MIN_DEPTH {
            return Err(Error::BehindCamera { depth: p.z });
        }
        Ok(Vector2::new(
            self.fx * p.x / p.z + self.cu,
            self.fy * p.y / p.z + self.cv,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointFeature {
    pub uv: Vector2<f64>,
    pub confidence: f64,
}

impl PointFeature {
    pub fn new(u: f64, v: f64) -> Self {
        Self {
            uv: Vector2::new(u, v),
            confidence: 1.0,
        }
    }
}

/// A line `rho = u cos(phi) + v sin(phi)` with `phi` in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFeature {
    pub rho: f64,
    pub phi: f64,
}

impl EdgeFeature {
    /// Re-canonicalizes after `phi` has been perturbed.
    pub fn canonical(rho: f64, phi: f64) -> Self {
        let mut phi = phi.rem_euclid(2.0 * PI);
        let mut rho = rho;
        if phi >= PI {
            phi -= PI;
            rho = -rho;
        }
        if phi >= PI {
            phi = 0.0;
        }
        Self { rho, phi }
    }
}

/// Cylinder of radius `radius` about the line `point + t * axis`, given in the
/// frame of link `link`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderPrimitive {
    pub link: usize,
    pub radius: f64,
    pub axis: Vector3<f64>,
    pub point: Vector3<f64>,
}

impl CylinderPrimitive {
    pub fn new(link: usize, radius: f64, axis: Vector3<f64>, point: Vector3<f64>) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidInput("cylinder axis must be nonzero".into()));
        }
        let c = Self {
            link,
            radius,
            axis: axis / n,
            point,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(&[self.radius], "cylinder radius")?;
        ensure_finite(self.axis.as_slice(), "cylinder axis")?;
        ensure_finite(self.point.as_slice(), "cylinder point")?;
        if self.radius <= 0.0 {
            return Err(Error::InvalidInput(
                "cylinder radius must be positive".into(),
            ));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(
                "cylinder axis must be a unit vector".into(),
            ));
        }
        Ok(())
    }
}

/// Camera-from-world transform for a camera at `eye` looking at `target`
/// (z forward, x right, y down in the image; `up` fixes the roll).
pub fn look_at(
    eye: &Vector3<f64>,
    target: &Vector3<f64>,
    up: &Vector3<f64>,
) -> Result<RigidTransform> {
    ensure_finite(eye.as_slice(), "eye")?;
    ensure_finite(target.as_slice(), "target")?;
    let z = target - eye;
    let x = z.cross(up);
    if z.norm() < DEGENERATE_COEFF || x.norm() < DEGENERATE_COEFF * z.norm().max(1.0) {
        return Err(Error::InvalidInput(
            "look-at direction is zero or parallel to up".into(),
        ));
    }
    let z = z.normalize();
    let x = x.normalize();
    let y = z.cross(&x);
    let r = nalgebra::Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    Ok(RigidTransform::from_parts(r, -(r * eye)))
}

/// Projects a point given in the reference camera frame through `cam`.
pub fn project_point(cam: &CameraModel, point: &Vector3<f64>) -> Result<PointFeature> {
    ensure_finite(point.as_slice(), "point")?;
    let local = cam.extrinsic.transform_point(point);
    let uv = cam.project_local(&local)?;
    Ok(PointFeature {
        uv,
        confidence: 1.0,
    })
}

/// Hough normal form of `coeff_u * u + coeff_v * v + coeff_1 = 0`.
pub fn normalize_line(coeff_u: f64, coeff_v: f64, coeff_1: f64) -> Result<EdgeFeature> {
    let n = coeff_u.hypot(coeff_v);
    if !(n > 0.0) || !coeff_1.is_finite() {
        return Err(Error::InvalidLine);
    }
    let phi = coeff_v.atan2(coeff_u);
    Ok(EdgeFeature::canonical(-coeff_1 / n, phi))
}

/// The two silhouette lines of a cylinder (axis `axis`, through `point`, both
/// in the reference camera frame). The edge with the smaller `rho` comes first.
pub fn project_cylinder_edges(
    cam: &CameraModel,
    radius: f64,
    axis: &Vector3<f64>,
    point: &Vector3<f64>,
) -> Result<(EdgeFeature, EdgeFeature)> {
    let d = cam.extrinsic.transform_vector(axis);
    let p0 = cam.extrinsic.transform_point(point);
    let (a, b, c) = (d.x, d.y, d.z);
    let (x0, y0, z0) = (p0.x, p0.y, p0.z);
    let nu = d.dot(&p0);
    let big_c = p0.norm_squared() - nu * nu - radius * radius;
    if !(big_c > 0.0) {
        return Err(Error::DegenerateView { c: big_c });
    }
    let alpha = c * y0 - b * z0;
    let beta = a * z0 - c * x0;
    let kappa = b * x0 - a * y0;
    let s = radius / big_c.sqrt();
    let base = [s * (x0 - a * nu), s * (y0 - b * nu), s * (z0 - c * nu)];
    let lines = [
        [base[0] - alpha, base[1] - beta, base[2] - kappa],
        [base[0] + alpha, base[1] + beta, base[2] + kappa],
    ];
    let tiny = |l: &[f64; 3]| l.iter().all(|v| v.abs() < DEGENERATE_COEFF);
    if tiny(&lines[0]) && tiny(&lines[1]) {
        return Err(Error::DegenerateAxis);
    }
    let to_pixels = |l: &[f64; 3]| {
        // X = (u - cu) / fx, Y = (v - cv) / fy
        let cu_coef = l[0] / cam.fx;
        let cv_coef = l[1] / cam.fy;
        normalize_line(cu_coef, cv_coef, l[2] - cu_coef * cam.cu - cv_coef * cam.cv)
    };
    let e1 = to_pixels(&lines[0])?;
    let e2 = to_pixels(&lines[1])?;
    Ok(if e1.rho <= e2.rho { (e1, e2) } else { (e2, e1) })
}

/// Angular difference between two line angles, wrapped to `[0, pi/2]`.
pub fn wrapped_angle_diff(phi_a: f64, phi_b: f64) -> f64 {
    let d = (phi_a - phi_b).rem_euclid(PI);
    d.min(PI - d)
}
