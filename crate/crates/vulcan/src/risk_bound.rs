//! Risk bounding functions: concave nondecreasing maps from expected reward
//! to the maximum acceptable probability of failure.

use serde::{Deserialize, Serialize};

/// A named family of risk bounding functions Δ. Evaluation clamps the family
/// formula into [0, 1]; concavity and monotonicity hold on the pre-clamp
/// domain and are checked on grids by [`RiskBound::validate_on_grid`] rather
/// than proven symbolically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RiskBound {
    /// Δ(x) = δ, the classical constant chance constraint.
    Constant { delta: f64 },
    /// Δ(x) = αx, clamped to [0, 1].
    Linear { alpha: f64 },
    /// Δ(x) = (1 − e^(−ax)) · (b + cx), clamped to [0, 1]. Starts at the
    /// origin and approaches the line b + cx for large x.
    SaturatingAffine { a: f64, b: f64, c: f64 },
}

impl RiskBound {
    pub fn constant(delta: f64) -> Self {
        RiskBound::Constant { delta }
    }

    pub fn linear(alpha: f64) -> Self {
        RiskBound::Linear { alpha }
    }

    pub fn saturating_affine(a: f64, b: f64, c: f64) -> Self {
        RiskBound::SaturatingAffine { a, b, c }
    }

    /// The family formula before clamping. Arguments may be negative; the
    /// domain of Δ is all of ℝ even though rewards are usually nonnegative.
    pub fn raw(&self, x: f64) -> f64 {
        match *self {
            RiskBound::Constant { delta } => delta,
            RiskBound::Linear { alpha } => alpha * x,
            RiskBound::SaturatingAffine { a, b, c } => (1.0 - (-a * x).exp()) * (b + c * x),
        }
    }

    /// Δ(x), clamped into [0, 1].
    pub fn eval(&self, x: f64) -> f64 {
        self.raw(x).clamp(0.0, 1.0)
    }

    /// Checks nondecrease and midpoint concavity of the pre-clamp formula on
    /// an evenly spaced grid, returning the violations found. Intended as a
    /// validation utility for custom parameterizations, not a per-call guard.
    pub fn validate_on_grid(&self, lo: f64, hi: f64, points: usize) -> Vec<RiskBoundViolation> {
        assert!(points >= 3 && hi > lo);
        let step = (hi - lo) / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        let mut violations = Vec::new();
        for w in xs.windows(2) {
            if self.eval(w[0]) > self.eval(w[1]) + 1e-12 {
                violations.push(RiskBoundViolation::Decreasing { x1: w[0], x2: w[1] });
            }
        }
        for i in 0..xs.len() {
            for j in (i + 2)..xs.len() {
                let mid = 0.5 * (xs[i] + xs[j]);
                let chord = 0.5 * (self.raw(xs[i]) + self.raw(xs[j]));
                if self.raw(mid) < chord - 1e-9 {
                    violations.push(RiskBoundViolation::NonConcave {
                        x1: xs[i],
                        x2: xs[j],
                    });
                }
            }
        }
        violations
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskBoundViolation {
    Decreasing { x1: f64, x2: f64 },
    NonConcave { x1: f64, x2: f64 },
}
