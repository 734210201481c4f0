//! Greedy gated association between detected and projected features.

use std::cmp::Ordering;

use nalgebra::Vector2;

use crate::camera::{EdgeFeature, PointFeature};

/// A matched (detection, projection) pair and its cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub detection: usize,
    pub projection: usize,
    pub cost: f64,
}

/// Greedy matching on an explicit cost list: costs are visited in ascending
/// order (ties broken by detection then projection index), each detection and
/// projection is used once, and only costs strictly below `cost_max` match.
pub fn greedy_match(
    mut candidates: Vec<Match>,
    n_det: usize,
    n_proj: usize,
    cost_max: f64,
) -> Vec<Match> {
    candidates.retain(|m| m.cost < cost_max);
    candidates.sort_unstable_by(|a, b| {
        a.cost
            .partial_cmp(&b.cost)
            .unwrap_or(Ordering::Equal)
            .then(a.detection.cmp(&b.detection))
            .then(a.projection.cmp(&b.projection))
    });
    let mut det_used = vec![false; n_det];
    let mut proj_used = vec![false; n_proj];
    let mut out = Vec::new();
    for m in candidates {
        if det_used[m.detection] || proj_used[m.projection] {
            continue;
        }
        det_used[m.detection] = true;
        proj_used[m.projection] = true;
        out.push(m);
        if out.len() == n_det.min(n_proj) {
            break;
        }
    }
    out
}

/// Builds every gated candidate from a dense cost matrix (`costs[k][i]`).
pub fn match_cost_matrix(costs: &[Vec<f64>], cost_max: f64) -> Vec<Match> {
    let n_proj = costs.iter().map(Vec::len).max().unwrap_or(0);
    let mut candidates = Vec::new();
    for (k, row) in costs.iter().enumerate() {
        for (i, &cost) in row.iter().enumerate() {
            candidates.push(Match {
                detection: k,
                projection: i,
                cost,
            });
        }
    }
    greedy_match(candidates, costs.len(), n_proj, cost_max)
}

/// `gamma_m * |m - m_hat|^2`
pub fn point_cost(detected: &Vector2<f64>, projected: &Vector2<f64>, gamma_m: f64) -> f64 {
    gamma_m * (detected - projected).norm_squared()
}

/// `gamma_rho |rho - rho_hat| + gamma_phi |phi - phi_hat|`, with the angle
/// difference wrapped modulo pi. Wrapping across the `phi = 0` seam flips the
/// sign of one `rho`, so the distance term becomes `|rho + rho_hat|` there.
pub fn edge_cost(
    detected: &EdgeFeature,
    projected: &EdgeFeature,
    gamma_rho: f64,
    gamma_phi: f64,
) -> f64 {
    let dphi = (detected.phi - projected.phi).abs();
    if dphi > std::f64::consts::FRAC_PI_2 {
        gamma_rho * (detected.rho + projected.rho).abs() + gamma_phi * (std::f64::consts::PI - dphi)
    } else {
        gamma_rho * (detected.rho - projected.rho).abs() + gamma_phi * dphi
    }
}

/// Projections that are `None` (out of view) never match.
pub fn associate_points(
    detected: &[PointFeature],
    projected: &[Option<Vector2<f64>>],
    gamma_m: f64,
    cost_max: f64,
) -> Vec<Match> {
    let mut candidates = Vec::with_capacity(detected.len() * projected.len());
    for (k, d) in detected.iter().enumerate() {
        for (i, p) in projected.iter().enumerate() {
            if let Some(p) = p {
                let cost = point_cost(&d.uv, p, gamma_m);
                if cost < cost_max {
                    candidates.push(Match {
                        detection: k,
                        projection: i,
                        cost,
                    });
                }
            }
        }
    }
    greedy_match(candidates, detected.len(), projected.len(), cost_max)
}

pub fn associate_edges(
    detected: &[EdgeFeature],
    projected: &[Option<EdgeFeature>],
    gamma_rho: f64,
    gamma_phi: f64,
    cost_max: f64,
) -> Vec<Match> {
    let mut candidates = Vec::with_capacity(detected.len() * projected.len());
    for (k, d) in detected.iter().enumerate() {
        for (i, p) in projected.iter().enumerate() {
            if let Some(p) = p {
                let cost = edge_cost(d, p, gamma_rho, gamma_phi);
                if cost < cost_max {
                    candidates.push(Match {
                        detection: k,
                        projection: i,
                        cost,
                    });
                }
            }
        }
    }
    greedy_match(candidates, detected.len(), projected.len(), cost_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pairs(ms: &[Match]) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = ms.iter().map(|m| (m.detection, m.projection)).collect();
        v.sort();
        v
    }

    #[test]
    fn two_by_two_matrix() {
        let m = match_cost_matrix(&[vec![1.0, 5.0], vec![4.0, 2.0]], 3.0);
        assert_eq!(pairs(&m), vec![(0, 0), (1, 1)]);
        // every other matching either exceeds the cutoff or has larger total cost
        let alt_total = 5.0 + 4.0;
        assert!(m.iter().map(|x| x.cost).sum::<f64>() < alt_total);
    }

    #[test]
    fn cutoff_and_empty() {
        assert!(match_cost_matrix(&[vec![4.0]], 3.0).is_empty());
        assert!(associate_points(&[], &[Some(Vector2::new(1.0, 2.0))], 0.15, 3.75).is_empty());
        // equal to the cutoff does not match
        assert!(match_cost_matrix(&[vec![3.0]], 3.0).is_empty());
    }

    #[test]
    fn greedy_is_not_optimal_but_ascending() {
        // Greedy takes (0,0) at cost 1 first, forcing (1,1) at cost 10 even
        // though (0,1)+(1,0) = 2+2 is cheaper.
        let m = match_cost_matrix(&[vec![1.0, 2.0], vec![2.0, 10.0]], 20.0);
        assert_eq!(pairs(&m), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn identical_edges_match_at_zero_cost() {
        let edges = [
            EdgeFeature {
                rho: 100.0,
                phi: 0.3,
            },
            EdgeFeature {
                rho: 140.0,
                phi: 0.31,
            },
        ];
        let proj: Vec<_> = edges.iter().copied().map(Some).collect();
        let m = associate_edges(&edges, &proj, 0.1, 40.0, 6.5);
        assert_eq!(pairs(&m), vec![(0, 0), (1, 1)]);
        assert!(m.iter().all(|x| x.cost == 0.0));
    }

    #[test]
    fn edge_angle_wraps_modulo_pi() {
        // Same geometric line family near the seam: phi = pi - 0.005 with rho
        // and phi = 0.005 with -rho describe lines 0.01 rad apart.
        let a = EdgeFeature {
            rho: 50.0,
            phi: PI - 0.005,
        };
        let b = EdgeFeature {
            rho: -50.0,
            phi: 0.005,
        };
        let c = edge_cost(&a, &b, 0.1, 40.0);
        assert!((c - 40.0 * 0.01).abs() < 1e-9, "{c}");
        // oracle: the unit normals are (cos, sin); flipped normal of b is
        // close to a's, and the signed distances agree
        let na = (a.phi.cos(), a.phi.sin());
        let nb = (-(b.phi.cos()), -(b.phi.sin()));
        let ang = (na.0 * nb.0 + na.1 * nb.1).clamp(-1.0, 1.0).acos();
        assert!((ang - 0.01).abs() < 1e-9);
    }

    #[test]
    fn single_detection_takes_cheapest() {
        let m = match_cost_matrix(&[vec![2.0, 1.0]], 6.5);
        assert_eq!(pairs(&m), vec![(0, 1)]);
        assert_eq!(m[0].cost, 1.0);
    }

    #[test]
    fn absent_projections_are_skipped() {
        let det = [PointFeature::new(10.0, 10.0)];
        let m = associate_points(&det, &[None, Some(Vector2::new(11.0, 10.0))], 0.15, 3.75);
        assert_eq!(pairs(&m), vec![(0, 1)]);
        assert!((m[0].cost - 0.15).abs() < 1e-12);
    }
}
