//! Conservative collision probability of a Gaussian-distributed position
//! against axis-aligned rectangular obstacles.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::Error;

/// An axis-aligned rectangular obstacle in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Obstacle {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        assert!(x_max > x_min && y_max > y_min, "obstacle must have area");
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Strict interior test; boundary points count as outside.
    pub fn contains_interior(&self, x: f64, y: f64) -> bool {
        x > self.x_min && x < self.x_max && y > self.y_min && y < self.y_max
    }
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper-bounds the collision probability of N(mean, covariance) with each
/// obstacle by the smallest probability mass among the four half-planes
/// containing it — one per supporting edge line, evaluated as a univariate
/// Gaussian tail along the edge normal with the projected covariance. The
/// total is the sum over obstacles, clamped to [0, 1].
///
/// Errs with [`Error::MeanInsideObstacle`] when the mean lies strictly
/// inside an obstacle: the model must make such moves unavailable rather
/// than price them as near-certain risk.
pub fn collision_risk(
    mean: (f64, f64),
    covariance: &Matrix2<f64>,
    obstacles: &[Obstacle],
) -> Result<f64, Error> {
    let (x, y) = mean;
    let sigma_x = covariance[(0, 0)].sqrt();
    let sigma_y = covariance[(1, 1)].sqrt();
    let mut total = 0.0;
    for obstacle in obstacles {
        if obstacle.contains_interior(x, y) {
            return Err(Error::MeanInsideObstacle { x, y });
        }
        let crossings = [
            standard_normal_cdf((x - obstacle.x_min) / sigma_x), // mass right of the left edge
            standard_normal_cdf((obstacle.x_max - x) / sigma_x), // mass left of the right edge
            standard_normal_cdf((y - obstacle.y_min) / sigma_y), // mass above the bottom edge
            standard_normal_cdf((obstacle.y_max - y) / sigma_y), // mass below the top edge
        ];
        total += crossings.into_iter().fold(f64::INFINITY, f64::min);
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_obstacle() -> Obstacle {
        Obstacle::new(1.0, 1.0, 2.0, 2.0)
    }

    #[test]
    fn mean_on_boundary_line_gives_half() {
        let cov = Matrix2::new(0.01, 0.0, 0.0, 0.01);
        // Mean on the left edge itself: that crossing is exactly 0.5 and
        // every other edge is many σ away.
        let risk = collision_risk((1.0, 1.5), &cov, &[unit_obstacle()]).unwrap();
        assert!((risk - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mean_far_from_obstacle_is_negligible() {
        let cov = Matrix2::new(0.01, 0.0, 0.0, 0.01); // σ = 0.1, distance ≥ 10σ
        let risk = collision_risk((-0.5, -0.5), &cov, &[unit_obstacle()]).unwrap();
        assert!(risk <= 1e-20, "risk {risk}");
    }

    #[test]
    fn risks_sum_and_clamp() {
        let cov = Matrix2::new(4.0, 0.0, 0.0, 4.0); // huge uncertainty
        let obstacles = [
            Obstacle::new(1.0, -0.5, 2.0, 0.5),
            Obstacle::new(-2.0, -0.5, -1.0, 0.5),
        ];
        // Each obstacle's bound is ≈ Φ(-0.5) ≈ 0.3 from one unit away with
        // σ = 2; the sum stays below 1 here, but a tighter scene clamps.
        let risk = collision_risk((0.0, 0.0), &cov, &obstacles).unwrap();
        assert!(risk > 0.0 && risk <= 1.0);

        // Three boundary-touching obstacles contribute ≈ 0.5 each; the sum
        // clamps to 1.
        let crowded = [
            Obstacle::new(0.0, -1.0, 1.0, 1.0),
            Obstacle::new(-1.0, -1.0, 0.0, 1.0),
            Obstacle::new(-1.0, 0.0, 1.0, 1.0),
        ];
        let clamped = collision_risk((0.0, 0.0), &cov, &crowded).unwrap();
        assert_eq!(clamped, 1.0);
    }

    #[test]
    fn mean_inside_obstacle_is_an_error() {
        let cov = Matrix2::new(0.01, 0.0, 0.0, 0.01);
        assert!(matches!(
            collision_risk((1.5, 1.5), &cov, &[unit_obstacle()]),
            Err(Error::MeanInsideObstacle { .. })
        ));
    }

    #[test]
    fn corner_region_uses_binding_edge() {
        // Below and right of the obstacle: both the right and bottom edges
        // face the mean; the bound is the smaller crossing.
        let cov = Matrix2::new(0.04, 0.0, 0.0, 0.01);
        let risk = collision_risk((2.4, 0.5), &cov, &[unit_obstacle()]).unwrap();
        let right = standard_normal_cdf((2.0 - 2.4) / 0.2);
        let bottom = standard_normal_cdf((0.5 - 1.0) / 0.1);
        assert!((risk - right.min(bottom)).abs() < 1e-15);
    }

    proptest! {
        /// Scaling the covariance up never decreases the bound while the
        /// mean stays outside every obstacle.
        #[test]
        fn nondecreasing_in_covariance_scale(
            x in -3.0f64..5.0,
            y in -3.0f64..5.0,
            sx in 0.01f64..0.5,
            sy in 0.01f64..0.5,
            lambda in 1.0f64..20.0,
        ) {
            let obstacles = [unit_obstacle(), Obstacle::new(3.0, -1.0, 4.0, 0.0)];
            prop_assume!(!obstacles.iter().any(|o| o.contains_interior(x, y)));
            let cov = Matrix2::new(sx, 0.0, 0.0, sy);
            let scaled = cov * lambda;
            let base = collision_risk((x, y), &cov, &obstacles).unwrap();
            let grown = collision_risk((x, y), &scaled, &obstacles).unwrap();
            prop_assert!(grown >= base - 1e-12);
        }
    }
}
