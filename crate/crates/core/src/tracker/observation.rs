//! Clipped-Gaussian and confidence-weighted observation models.

use nalgebra::Vector2;

use super::association::Match;

/// Floor added to the confidence-weighted likelihood so a frame with no
/// usable detections does not zero every weight.
pub const CONFIDENCE_FLOOR: f64 = 1e-12;

/// `(n - |A|) e^{-C_max} + sum_A e^{-C}`; unnormalized.
pub fn clipped_likelihood(matches: &[Match], n_features: usize, cost_max: f64) -> f64 {
    let unmatched = n_features.saturating_sub(matches.len()) as f64;
    unmatched * (-cost_max).exp() + matches.iter().map(|m| (-m.cost).exp()).sum::<f64>()
}

pub fn point_obs_likelihood(matches: &[Match], n_m: usize, cost_max: f64) -> f64 {
    clipped_likelihood(matches, n_m, cost_max)
}

pub fn edge_obs_likelihood(matches: &[Match], n_l: usize, cost_max: f64) -> f64 {
    clipped_likelihood(matches, n_l, cost_max)
}

/// A detection already tied to landmark `landmark`, with detector confidence `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledDetection {
    pub uv: Vector2<f64>,
    pub landmark: usize,
    pub eta: f64,
}

/// `sum_k eta_k exp(-gamma_m |m_k - m_hat|)` plus [`CONFIDENCE_FLOOR`]. The
/// norm is not squared here. Detections whose landmark projection is absent
/// contribute nothing.
pub fn confidence_point_likelihood(
    detections: &[LabeledDetection],
    projected: &[Option<Vector2<f64>>],
    gamma_m: f64,
) -> f64 {
    let mut total = CONFIDENCE_FLOOR;
    for d in detections {
        if let Some(Some(p)) = projected.get(d.landmark) {
            total += d.eta * (-gamma_m * (d.uv - p).norm()).exp();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(cost: f64) -> Match {
        Match {
            detection: 0,
            projection: 0,
            cost,
        }
    }

    #[test]
    fn point_model_cases() {
        let cmax = 25.0 * 0.15;
        assert!((point_obs_likelihood(&[], 7, cmax) - 7.0 * (-3.75f64).exp()).abs() < 1e-15);
        let all: Vec<_> = (0..7).map(|_| m(0.0)).collect();
        assert_eq!(point_obs_likelihood(&all, 7, cmax), 7.0);
        let v = point_obs_likelihood(&[m(1.0)], 3, cmax);
        assert!((v - ((-1.0f64).exp() + 2.0 * (-3.75f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn edge_model_cases() {
        let cmax = 0.1 * 40.0 + 25.0 * 0.1;
        assert!((cmax - 6.5f64).abs() < 1e-12);
        assert!((edge_obs_likelihood(&[], 2, cmax) - 2.0 * (-6.5f64).exp()).abs() < 1e-15);
        assert_eq!(edge_obs_likelihood(&[m(0.0), m(0.0)], 2, cmax), 2.0);
        let v = edge_obs_likelihood(&[m(2.5)], 2, cmax);
        assert!((v - ((-2.5f64).exp() + (-6.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn confidence_model_cases() {
        let p = vec![
            Some(Vector2::new(10.0, 20.0)),
            Some(Vector2::new(50.0, 60.0)),
        ];
        let one = [LabeledDetection {
            uv: Vector2::new(10.0, 20.0),
            landmark: 0,
            eta: 1.0,
        }];
        assert_eq!(
            confidence_point_likelihood(&one, &p, 5.0),
            1.0 + CONFIDENCE_FLOOR
        );
        let zero = [LabeledDetection { eta: 0.0, ..one[0] }];
        assert_eq!(
            confidence_point_likelihood(&zero, &p, 5.0),
            CONFIDENCE_FLOOR
        );
        let gamma = 5.0;
        let two = [
            LabeledDetection {
                uv: Vector2::new(10.0, 20.0),
                landmark: 0,
                eta: 0.5,
            },
            LabeledDetection {
                uv: Vector2::new(50.0 + 2.0 / gamma, 60.0),
                landmark: 1,
                eta: 1.0,
            },
        ];
        let v = confidence_point_likelihood(&two, &p, gamma);
        assert!((v - (0.5 + (-2.0f64).exp() + CONFIDENCE_FLOOR)).abs() < 1e-15);
    }
}
