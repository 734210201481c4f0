//! Modified Denavit-Hartenberg chains and the Lumped Error constructions.

use std::ops::{Deref, DerefMut};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::CylinderPrimitive;
use crate::error::{ensure_finite, Error, Result};
use crate::se3::{axis_angle_from_rotation, AxisAnglePose, RigidTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One MDH joint: `T = Tx(alpha, a) * Tz(theta, d)`; the joint variable is
/// added to `theta_offset` (revolute) or `d_offset` (prismatic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdhJoint {
    pub kind: JointKind,
    pub alpha: f64,
    pub a: f64,
    #[serde(default)]
    pub theta_offset: f64,
    #[serde(default)]
    pub d_offset: f64,
}

impl MdhJoint {
    pub fn revolute(alpha: f64, a: f64, theta_offset: f64, d_offset: f64) -> Self {
        Self {
            kind: JointKind::Revolute,
            alpha,
            a,
            theta_offset,
            d_offset,
        }
    }

    pub fn prismatic(alpha: f64, a: f64, theta_offset: f64, d_offset: f64) -> Self {
        Self {
            kind: JointKind::Prismatic,
            alpha,
            a,
            theta_offset,
            d_offset,
        }
    }

    fn tx(&self) -> RigidTransform {
        let (s, c) = self.alpha.sin_cos();
        RigidTransform::from_parts(
            Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            Vector3::new(self.a, 0.0, 0.0),
        )
    }

    /// Joint transform without input checks. Used on hot paths.
    pub fn transform(&self, q: f64) -> RigidTransform {
        let (theta, d) = match self.kind {
            JointKind::Revolute => (self.theta_offset + q, self.d_offset),
            JointKind::Prismatic => (self.theta_offset, self.d_offset + q),
        };
        let (sa, ca) = self.alpha.sin_cos();
        let (st, ct) = theta.sin_cos();
        // Rx(alpha) * Rz(theta), translation (a, -sin(alpha) d, cos(alpha) d)
        RigidTransform::from_parts(
            Matrix3::new(ct, -st, 0.0, ca * st, ca * ct, -sa, sa * st, sa * ct, ca),
            Vector3::new(self.a, -sa * d, ca * d),
        )
    }

    /// Error factor `F(w)` with `transform(q + w) = F(w) * transform(q)`.
    pub fn error_factor(&self, omega: f64) -> RigidTransform {
        let tz = match self.kind {
            JointKind::Revolute => {
                let (s, c) = omega.sin_cos();
                RigidTransform::from_rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
            }
            JointKind::Prismatic => RigidTransform::from_translation(Vector3::new(0.0, 0.0, omega)),
        };
        let tx = self.tx();
        tx * tz * tx.inverse()
    }
}

pub fn mdh_transform(joint: &MdhJoint, q: f64) -> Result<RigidTransform> {
    ensure_finite(&[q], "joint value")?;
    Ok(joint.transform(q))
}

pub fn joint_error_factor(joint: &MdhJoint, omega: f64) -> Result<RigidTransform> {
    ensure_finite(&[omega], "joint error")?;
    Ok(joint.error_factor(omega))
}

/// Joint values (rad for revolute, mm for prismatic).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub Vec<f64>);

impl JointVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }
}

impl Deref for JointVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for JointVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for JointVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A landmark rigidly attached to link `link` (frame after joint `link`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolPoint {
    pub link: usize,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    joints: Vec<MdhJoint>,
    n_b: usize,
    end_effector: usize,
    tool_points: Vec<ToolPoint>,
    cylinders: Vec<CylinderPrimitive>,
}

impl KinematicChain {
    pub fn new(
        joints: Vec<MdhJoint>,
        n_b: usize,
        end_effector: usize,
        tool_points: Vec<ToolPoint>,
        cylinders: Vec<CylinderPrimitive>,
    ) -> Result<Self> {
        let n_j = joints.len();
        if n_b > n_j {
            return Err(Error::InvalidInput(format!(
                "n_b = {n_b} exceeds joint count {n_j}"
            )));
        }
        if end_effector > n_j {
            return Err(Error::InvalidInput(format!(
                "end effector link {end_effector} exceeds joint count {n_j}"
            )));
        }
        for j in &joints {
            ensure_finite(
                &[j.alpha, j.a, j.theta_offset, j.d_offset],
                "MDH parameters",
            )?;
        }
        for (k, p) in tool_points.iter().enumerate() {
            if p.link == 0 || p.link > n_j {
                return Err(Error::InvalidInput(format!(
                    "tool point {k} is on link {}, expected 1..={n_j}",
                    p.link
                )));
            }
            ensure_finite(p.position.as_slice(), "tool point")?;
        }
        for (k, c) in cylinders.iter().enumerate() {
            if c.link == 0 || c.link > n_j {
                return Err(Error::InvalidInput(format!(
                    "cylinder {k} is on link {}, expected 1..={n_j}",
                    c.link
                )));
            }
            c.validate()?;
        }
        Ok(Self {
            joints,
            n_b,
            end_effector,
            tool_points,
            cylinders,
        })
    }

    /// A bare chain with no features, `n_b = 0` and the end effector on the last link.
    pub fn from_joints(joints: Vec<MdhJoint>) -> Result<Self> {
        let n = joints.len();
        Self::new(joints, 0, n, Vec::new(), Vec::new())
    }

    pub fn joints(&self) -> &[MdhJoint] {
        &self.joints
    }

    pub fn n_j(&self) -> usize {
        self.joints.len()
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn end_effector(&self) -> usize {
        self.end_effector
    }

    pub fn tool_points(&self) -> &[ToolPoint] {
        &self.tool_points
    }

    pub fn cylinders(&self) -> &[CylinderPrimitive] {
        &self.cylinders
    }

    /// Same chain with a different visibility boundary.
    pub fn with_n_b(&self, n_b: usize) -> Result<Self> {
        Self::new(
            self.joints.clone(),
            n_b,
            self.end_effector,
            self.tool_points.clone(),
            self.cylinders.clone(),
        )
    }

    /// Lowest link any feature is attached to, if there are features.
    pub fn lowest_feature_link(&self) -> Option<usize> {
        self.tool_points
            .iter()
            .map(|p| p.link)
            .chain(self.cylinders.iter().map(|c| c.link))
            .min()
    }

    fn check_len(&self, q: &[f64], what: &str) -> Result<()> {
        if q.len() != self.n_j() {
            return Err(Error::InvalidInput(format!(
                "{what} has {} entries, chain has {} joints",
                q.len(),
                self.n_j()
            )));
        }
        ensure_finite(q, what)
    }

    /// `prod_{i=from+1..=to} T_i(q_i)` with no checks.
    pub fn product(&self, q: &[f64], from: usize, to: usize) -> RigidTransform {
        let mut acc = RigidTransform::identity();
        for i in from..to {
            acc = acc * self.joints[i].transform(q[i]);
        }
        acc
    }

    /// Frames of every link: entry `j` is `prod_{i<=j} T_i(q_i)`, entry 0 the identity.
    pub fn link_frames(&self, q: &[f64]) -> Vec<RigidTransform> {
        let mut frames = Vec::with_capacity(self.n_j() + 1);
        let mut acc = RigidTransform::identity();
        frames.push(acc);
        for (joint, &qi) in self.joints.iter().zip(q) {
            acc = acc * joint.transform(qi);
            frames.push(acc);
        }
        frames
    }
}

pub fn forward_kinematics(
    chain: &KinematicChain,
    q: &[f64],
    up_to: usize,
) -> Result<RigidTransform> {
    chain.check_len(q, "joint vector")?;
    if up_to > chain.n_j() {
        return Err(Error::InvalidInput(format!(
            "link index {up_to} out of range 0..={}",
            chain.n_j()
        )));
    }
    Ok(chain.product(q, 0, up_to))
}

/// The transform `T` with
/// `prod_{i<=n_b} T_i(q~_i + e_i) = T * prod_{i<=n_b} T_i(q~_i + beta_i e_i)`,
/// built as the telescoping product of conjugated joint error factors.
pub fn analytical_lump(
    chain: &KinematicChain,
    q_measured: &[f64],
    e: &[f64],
    beta: &[f64],
) -> Result<RigidTransform> {
    chain.check_len(q_measured, "measured joints")?;
    chain.check_len(e, "joint errors")?;
    if beta.len() != chain.n_b() {
        return Err(Error::InvalidInput(format!(
            "beta has {} entries, expected n_b = {}",
            beta.len(),
            chain.n_b()
        )));
    }
    ensure_finite(beta, "beta")?;
    let mut lump = RigidTransform::identity();
    let mut prefix = RigidTransform::identity();
    for k in 0..chain.n_b() {
        let joint = &chain.joints[k];
        let factor = joint.error_factor((1.0 - beta[k]) * e[k]);
        lump = lump * prefix * factor * prefix.inverse();
        prefix = prefix * joint.transform(q_measured[k] + beta[k] * e[k]);
    }
    Ok(lump)
}

/// True stationary-camera lump `T^{b-}_b * T^{n_b}(beta = 0)`.
pub fn true_lump(
    chain: &KinematicChain,
    q_measured: &[f64],
    e: &[f64],
    base_error: &RigidTransform,
) -> Result<RigidTransform> {
    let beta = vec![0.0; chain.n_b()];
    Ok(*base_error * analytical_lump(chain, q_measured, e, &beta)?)
}

/// Moves a left-multiplied lump past the unobservable joints:
/// `P^-1 * L * P` with `P = prod_{i<=n_b} T_i(q~_i)`.
pub fn right_hand_lump(
    chain: &KinematicChain,
    q_measured: &[f64],
    left_lump: &RigidTransform,
) -> Result<RigidTransform> {
    if q_measured.len() < chain.n_b() {
        return Err(Error::InvalidInput(format!(
            "measured joints cover {} joints, n_b = {}",
            q_measured.len(),
            chain.n_b()
        )));
    }
    ensure_finite(&q_measured[..chain.n_b()], "measured joints")?;
    let p = chain.product(q_measured, 0, chain.n_b());
    Ok(p.inverse() * *left_lump * p)
}

/// Eye-in-hand lump in the calibrated camera-arm base frame:
/// `(T^{cb}_{b-})^-1 * C^-1 * T^{cb}_{b-} * L`, where `C` is the camera-arm
/// lump (its joint errors lumped with beta = 0) and `L` the tool lump.
pub fn eye_in_hand_lump(
    calib: &RigidTransform,
    camera_lump: &AxisAnglePose,
    tool_lump: &AxisAnglePose,
) -> AxisAnglePose {
    let c = camera_lump.to_transform();
    let l = tool_lump.to_transform();
    (calib.inverse() * c.inverse() * *calib * l).to_axis_angle()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub max_iterations: usize,
    pub damping: f64,
    /// mm of position error treated as equivalent to one radian of orientation error.
    pub orientation_weight: f64,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Largest joint change per iteration (rad or mm).
    pub max_step: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            damping: 0.5,
            orientation_weight: 50.0,
            position_tolerance: 1e-6,
            orientation_tolerance: 1e-8,
            max_step: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub q: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub position_error: f64,
    pub orientation_error: f64,
}

/// Damped least-squares IK for the frame of `link`. Only joints `1..=link` in
/// `active` move. Pass `orient = false` to solve for position only.
pub fn solve_ik(
    chain: &KinematicChain,
    q_start: &[f64],
    target: &RigidTransform,
    link: usize,
    active: &[bool],
    orient: bool,
    opts: &IkOptions,
) -> Result<IkSolution> {
    chain.check_len(q_start, "initial joints")?;
    if link == 0 || link > chain.n_j() || active.len() != chain.n_j() {
        return Err(Error::InvalidInput("bad IK link or active mask".into()));
    }
    let mut q = q_start.to_vec();
    let cols: Vec<usize> = (0..link).filter(|&i| active[i]).collect();
    let rows = if orient { 6 } else { 3 };
    let mut iterations = 0;
    loop {
        let frames = chain.link_frames(&q);
        let current = frames[link];
        let dp = target.translation - current.translation;
        let dw = axis_angle_from_rotation(&(target.rotation * current.rotation.transpose()));
        let (pe, we) = (dp.norm(), dw.norm());
        let done = pe < opts.position_tolerance && (!orient || we < opts.orientation_tolerance);
        if done || iterations >= opts.max_iterations || cols.is_empty() {
            return Ok(IkSolution {
                q,
                converged: done,
                iterations,
                position_error: pe,
                orientation_error: we,
            });
        }
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(rows, cols.len());
        for (c, &i) in cols.iter().enumerate() {
            let frame = &frames[i + 1];
            let z = frame.rotation.column(2).into_owned();
            let (lin, ang) = match chain.joints[i].kind {
                JointKind::Revolute => (z.cross(&(current.translation - frame.translation)), z),
                JointKind::Prismatic => (z, Vector3::zeros()),
            };
            jac.fixed_view_mut::<3, 1>(0, c).copy_from(&lin);
            if orient {
                jac.fixed_view_mut::<3, 1>(3, c)
                    .copy_from(&(ang * opts.orientation_weight));
            }
        }
        let mut err = DVector::<f64>::zeros(rows);
        err.fixed_rows_mut::<3>(0).copy_from(&dp);
        if orient {
            err.fixed_rows_mut::<3>(3)
                .copy_from(&(dw * opts.orientation_weight));
        }
        let jjt =
            &jac * jac.transpose() + DMatrix::identity(rows, rows) * (opts.damping * opts.damping);
        let Some(chol) = jjt.cholesky() else {
            return Err(Error::InvalidInput(
                "IK normal equations are singular".into(),
            ));
        };
        let mut dq = jac.transpose() * chol.solve(&err);
        let largest = dq.amax();
        if largest > opts.max_step {
            dq *= opts.max_step / largest;
        }
        for (c, &i) in cols.iter().enumerate() {
            q[i] += dq[c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    // Dense homogeneous oracle: Tx(alpha, a) * Tz(theta, d) as plain 4x4 products.
    fn dense_tx(alpha: f64, a: f64) -> Matrix4<f64> {
        let (s, c) = alpha.sin_cos();
        Matrix4::new(
            1.0, 0.0, 0.0, a, 0.0, c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0,
        )
    }

    fn dense_tz(theta: f64, d: f64) -> Matrix4<f64> {
        let (s, c) = theta.sin_cos();
        Matrix4::new(
            c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0, d, 0.0, 0.0, 0.0, 1.0,
        )
    }

    fn dense_joint(j: &MdhJoint, q: f64) -> Matrix4<f64> {
        match j.kind {
            JointKind::Revolute => {
                dense_tx(j.alpha, j.a) * dense_tz(j.theta_offset + q, j.d_offset)
            }
            JointKind::Prismatic => {
                dense_tx(j.alpha, j.a) * dense_tz(j.theta_offset, j.d_offset + q)
            }
        }
    }

    fn random_joint(rng: &mut ChaCha8Rng) -> MdhJoint {
        let alpha = rng.random_range(-PI..PI);
        let a = rng.random_range(-50.0..50.0);
        let th = rng.random_range(-PI..PI);
        let d = rng.random_range(-50.0..50.0);
        if rng.random_bool(0.7) {
            MdhJoint::revolute(alpha, a, th, d)
        } else {
            MdhJoint::prismatic(alpha, a, th, d)
        }
    }

    fn random_q(rng: &mut ChaCha8Rng, joints: &[MdhJoint]) -> Vec<f64> {
        joints
            .iter()
            .map(|j| match j.kind {
                JointKind::Revolute => rng.random_range(-PI..PI),
                JointKind::Prismatic => rng.random_range(-30.0..30.0),
            })
            .collect()
    }

    fn max_diff(t: &RigidTransform, m: &Matrix4<f64>) -> f64 {
        (t.to_homogeneous() - m).amax()
    }

    #[test]
    fn mdh_identity_and_half_turn() {
        let j = MdhJoint::revolute(0.0, 0.0, 0.0, 0.0);
        assert!(
            mdh_transform(&j, 0.0)
                .unwrap()
                .max_abs_diff(&RigidTransform::identity())
                < 1e-15
        );
        let t = mdh_transform(&j, PI).unwrap();
        let expected = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        assert!((t.rotation - expected).amax() < 1e-15);
        assert_eq!(t.translation, Vector3::zeros());
    }

    #[test]
    fn mdh_prismatic_hand_product() {
        let j = MdhJoint::prismatic(PI / 2.0, 10.0, 0.0, 0.0);
        let t = mdh_transform(&j, 5.0).unwrap();
        let oracle = dense_tx(PI / 2.0, 10.0) * dense_tz(0.0, 5.0);
        assert!(max_diff(&t, &oracle) < 1e-14);
        assert!((t.translation - Vector3::new(10.0, -5.0, 0.0)).amax() < 1e-14);
    }

    #[test]
    fn mdh_rejects_non_finite() {
        let j = MdhJoint::revolute(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            mdh_transform(&j, f64::NAN),
            Err(Error::InvalidInput(_))
        ));
        assert!(joint_error_factor(&j, f64::INFINITY).is_err());
    }

    #[test]
    fn forward_kinematics_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let joints: Vec<_> = (0..6).map(|_| random_joint(&mut rng)).collect();
            let q = random_q(&mut rng, &joints);
            let chain = KinematicChain::from_joints(joints.clone()).unwrap();
            let mut dense = Matrix4::identity();
            for (j, qi) in joints.iter().zip(&q) {
                dense *= dense_joint(j, *qi);
            }
            let fk = forward_kinematics(&chain, &q, 6).unwrap();
            assert!(max_diff(&fk, &dense) < 1e-12);
        }
    }

    #[test]
    fn forward_kinematics_edges() {
        let j = MdhJoint::revolute(0.3, 2.0, 0.1, 4.0);
        let chain = KinematicChain::from_joints(vec![j]).unwrap();
        assert_eq!(
            forward_kinematics(&chain, &[0.7], 0).unwrap(),
            RigidTransform::identity()
        );
        assert_eq!(
            forward_kinematics(&chain, &[0.7], 1).unwrap(),
            mdh_transform(&j, 0.7).unwrap()
        );
        assert!(forward_kinematics(&chain, &[0.7], 2).is_err());
        assert!(forward_kinematics(&chain, &[0.7, 1.0], 1).is_err());
    }

    #[test]
    fn error_factor_identities() {
        let j = MdhJoint::revolute(0.0, 0.0, 0.0, 0.0);
        assert!(
            joint_error_factor(&j, 0.0)
                .unwrap()
                .max_abs_diff(&RigidTransform::identity())
                < 1e-15
        );
        let f = joint_error_factor(&j, 0.3).unwrap();
        let rz = dense_tz(0.3, 0.0);
        assert!(max_diff(&f, &rz) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let joint = random_joint(&mut rng);
            let f = joint.error_factor(0.1);
            for _ in 0..20 {
                let q = rng.random_range(-3.0..3.0);
                let lhs = joint.transform(q + 0.1);
                let rhs = f * joint.transform(q);
                assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
        }
    }

    fn random_chain(rng: &mut ChaCha8Rng, n_j: usize, n_b: usize) -> KinematicChain {
        let joints: Vec<_> = (0..n_j).map(|_| random_joint(rng)).collect();
        KinematicChain::new(joints, n_b, n_j, Vec::new(), Vec::new()).unwrap()
    }

    // Both sides of prod T(q~ + e) = L * prod T(q~ + beta e), each evaluated
    // with the dense matrix oracle.
    fn both_sides(
        chain: &KinematicChain,
        q: &[f64],
        e: &[f64],
        beta: &[f64],
    ) -> (Matrix4<f64>, Matrix4<f64>) {
        let n_b = chain.n_b();
        let mut lhs = Matrix4::identity();
        let mut partial = Matrix4::identity();
        for i in 0..n_b {
            lhs *= dense_joint(&chain.joints()[i], q[i] + e[i]);
            partial *= dense_joint(&chain.joints()[i], q[i] + beta[i] * e[i]);
        }
        let lump = analytical_lump(chain, q, e, beta).unwrap();
        (lhs, lump.to_homogeneous() * partial)
    }

    #[test]
    fn analytical_lump_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chain = random_chain(&mut rng, 5, 4);
        let q = random_q(&mut rng, chain.joints());
        let e0 = vec![0.0; 5];
        let beta = vec![0.3, -0.5, 1.5, 0.0];
        assert!(
            analytical_lump(&chain, &q, &e0, &beta)
                .unwrap()
                .max_abs_diff(&RigidTransform::identity())
                < 1e-12
        );
        let e = vec![0.1, -0.2, 3.0, 0.05, 0.02];
        let ones = vec![1.0; 4];
        assert!(
            analytical_lump(&chain, &q, &e, &ones)
                .unwrap()
                .max_abs_diff(&RigidTransform::identity())
                < 1e-12
        );
        assert!(analytical_lump(&chain, &q, &e, &[0.0; 3]).is_err());
    }

    #[test]
    fn analytical_lump_satisfies_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let chain = random_chain(&mut rng, 4, 4);
            let q = random_q(&mut rng, chain.joints());
            let e: Vec<f64> = chain
                .joints()
                .iter()
                .map(|j| match j.kind {
                    JointKind::Revolute => rng.random_range(-0.3..0.3),
                    JointKind::Prismatic => rng.random_range(-5.0..5.0),
                })
                .collect();
            let beta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..2.0)).collect();
            let (lhs, rhs) = both_sides(&chain, &q, &e, &beta);
            assert!((lhs - rhs).amax() < 1e-9);
        }
    }

    #[test]
    fn right_hand_lump_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let chain = random_chain(&mut rng, 6, 3);
        let q = random_q(&mut rng, chain.joints());
        let id = right_hand_lump(&chain, &q, &RigidTransform::identity()).unwrap();
        assert!(id.max_abs_diff(&RigidTransform::identity()) < 1e-12);

        let zero_chain = KinematicChain::new(
            vec![MdhJoint::revolute(0.0, 0.0, 0.0, 0.0); 3],
            3,
            3,
            vec![],
            vec![],
        )
        .unwrap();
        let l = RigidTransform::from_axis_angle(
            &Vector3::new(0.1, 0.2, 0.3),
            &Vector3::new(1.0, 2.0, 3.0),
        );
        let r = right_hand_lump(&zero_chain, &[0.0; 3], &l).unwrap();
        assert!(r.max_abs_diff(&l) < 1e-15);
    }

    #[test]
    fn eye_in_hand_lump_trivial_cases() {
        let calib = RigidTransform::from_axis_angle(
            &Vector3::new(0.4, -0.1, 0.2),
            &Vector3::new(10.0, 0.0, -4.0),
        );
        let tool = AxisAnglePose::new(
            Vector3::new(0.05, 0.02, -0.03),
            Vector3::new(1.0, -2.0, 0.5),
        );
        let out = eye_in_hand_lump(&calib, &AxisAnglePose::identity(), &tool);
        assert!((out.w - tool.w).amax() < 1e-12 && (out.b - tool.b).amax() < 1e-12);
        let id = eye_in_hand_lump(
            &RigidTransform::identity(),
            &AxisAnglePose::identity(),
            &AxisAnglePose::identity(),
        );
        assert!(id.w.norm() < 1e-15 && id.b.norm() < 1e-15);
    }

    #[test]
    fn chain_validation() {
        let j = MdhJoint::revolute(0.0, 0.0, 0.0, 0.0);
        assert!(KinematicChain::new(vec![j; 2], 3, 2, vec![], vec![]).is_err());
        let bad = ToolPoint {
            link: 3,
            position: Vector3::zeros(),
        };
        assert!(KinematicChain::new(vec![j; 2], 1, 2, vec![bad], vec![]).is_err());
        let zero = ToolPoint {
            link: 0,
            position: Vector3::zeros(),
        };
        assert!(KinematicChain::new(vec![j; 2], 1, 2, vec![zero], vec![]).is_err());
    }

    #[test]
    fn ik_reaches_reachable_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let joints: Vec<_> = (0..6)
            .map(|_| {
                MdhJoint::revolute(
                    rng.random_range(-1.5..1.5),
                    rng.random_range(0.0..40.0),
                    0.0,
                    rng.random_range(0.0..30.0),
                )
            })
            .collect();
        let chain = KinematicChain::from_joints(joints).unwrap();
        let q_goal: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = chain.product(&q_goal, 0, 6);
        let start: Vec<f64> = q_goal
            .iter()
            .map(|q| q + rng.random_range(-0.15..0.15))
            .collect();
        let sol = solve_ik(
            &chain,
            &start,
            &target,
            6,
            &[true; 6],
            true,
            &IkOptions::default(),
        )
        .unwrap();
        assert!(sol.converged, "{sol:?}");
        assert!(chain.product(&sol.q, 0, 6).max_abs_diff(&target) < 1e-5);
    }
}
