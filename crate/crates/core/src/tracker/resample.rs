//! Weight normalization, effective sample size and stratified resampling.

use rand::Rng;

use crate::error::{Error, Result};

/// Normalizes log-weights in place with log-sum-exp and returns the linear
/// weights. Fails when every weight is zero or not finite.
pub fn normalize_log_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateFilter(format!(
            "all {} log-weights are -inf or NaN (max = {max})",
            log_weights.len()
        )));
    }
    let sum: f64 = log_weights
        .iter()
        .map(|&l| if l.is_nan() { 0.0 } else { (l - max).exp() })
        .sum();
    Ok(log_weights
        .iter()
        .map(|&l| {
            if l.is_nan() {
                0.0
            } else {
                (l - max).exp() / sum
            }
        })
        .collect())
}

/// Normalizes linear weights.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::DegenerateFilter(format!("weights sum to {sum}")));
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}

/// `1 / sum(w^2)` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Stratified resampling: one uniform draw in each stratum `[i/N, (i+1)/N)`.
/// Returns ancestor indices in ascending order.
pub fn stratified_indices<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    if n == 0 || !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateFilter(format!(
            "cannot resample weights summing to {total}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0] / total;
    let mut j = 0;
    for i in 0..n {
        let u = (i as f64 + rng.random::<f64>()) / n as f64;
        while u > cumulative && j + 1 < n {
            j += 1;
            cumulative += weights[j] / total;
        }
        out.push(j);
    }
    Ok(out)
}

/// Index of the first cumulative weight at or above `u`.
pub fn sample_index(cumulative: &[f64], u: f64) -> usize {
    let target = u * cumulative.last().copied().unwrap_or(0.0);
    cumulative
        .partition_point(|&c| c < target)
        .min(cumulative.len().saturating_sub(1))
}
