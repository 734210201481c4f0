//! Randomized check of the lumped-error identity on random chains.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::kinematics::{analytical_lump, JointKind, KinematicChain, MdhJoint};

/// Random MDH chain with `2..=10` joints, mixed kinds, and a random `n_b`.
pub fn random_chain<R: Rng + ?Sized>(rng: &mut R) -> Result<KinematicChain> {
    let n = rng.random_range(2..=10);
    let joints = (0..n)
        .map(|_| {
            let alpha = rng.random_range(-PI..PI);
            let a = rng.random_range(-100.0..100.0);
            let theta = rng.random_range(-PI..PI);
            let d = rng.random_range(-100.0..100.0);
            if rng.random_bool(0.3) {
                MdhJoint::prismatic(alpha, a, theta, d)
            } else {
                MdhJoint::revolute(alpha, a, theta, d)
            }
        })
        .collect();
    let n_b = rng.random_range(1..=n);
    KinematicChain::new(joints, n_b, n, Vec::new(), Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LumpCheckReport {
    pub cases: usize,
    /// Largest elementwise difference between the two sides.
    pub max_abs_diff: f64,
    pub failures: usize,
}

/// Draws `cases` random chains, readings `q~`, errors `e` and `beta` in
/// `[-1, 2]^{n_b}`, and compares `prod T(q~ + e)` with
/// `A(beta) prod T(q~ + beta e)` over the first `n_b` joints.
pub fn lump_check(cases: usize, seed: u64, tolerance: f64) -> Result<LumpCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LumpCheckReport {
        cases,
        max_abs_diff: 0.0,
        failures: 0,
    };
    for _ in 0..cases {
        let chain = random_chain(&mut rng)?;
        let n = chain.n_j();
        let n_b = chain.n_b();
        let q: Vec<f64> = chain
            .joints()
            .iter()
            .map(|j| match j.kind {
                JointKind::Revolute => rng.random_range(-PI..PI),
                JointKind::Prismatic => rng.random_range(-50.0..50.0),
            })
            .collect();
        let e: Vec<f64> = chain
            .joints()
            .iter()
            .map(|j| match j.kind {
                JointKind::Revolute => rng.random_range(-0.1..0.1),
                JointKind::Prismatic => rng.random_range(-5.0..5.0),
            })
            .collect();
        let beta: Vec<f64> = (0..n_b).map(|_| rng.random_range(-1.0..=2.0)).collect();
        let truth: Vec<f64> = q.iter().zip(&e).map(|(a, b)| a + b).collect();
        let shifted: Vec<f64> = (0..n)
            .map(|i| if i < n_b { q[i] + beta[i] * e[i] } else { q[i] })
            .collect();
        let lhs = chain.product(&truth, 0, n_b).to_homogeneous();
        let rhs = (analytical_lump(&chain, &q, &e, &beta)? * chain.product(&shifted, 0, n_b))
            .to_homogeneous();
        let diff = (lhs - rhs).amax();
        report.max_abs_diff = report.max_abs_diff.max(diff);
        if !(diff <= tolerance) {
            report.failures += 1;
        }
    }
    Ok(report)
}
