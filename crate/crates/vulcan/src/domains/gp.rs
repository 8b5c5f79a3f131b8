//! Gaussian-process exploration domain.
//!
//! A vehicle with Gaussian position uncertainty moves on a rectangular grid,
//! one of the 8 adjacent cells per action. Position covariance grows by a
//! fixed increment every step, and moving near an obstacle risks collision.
//! Each newly visited cell yields a noiseless sample of an unknown field
//! modeled by a GP with known hyperparameters; the sample value is the
//! reward, and the posterior it induces shapes the outcomes of every later
//! action. Measurement outcomes are discretized by Gauss–Hermite quadrature.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::domains::collision::{collision_risk, Obstacle};
use crate::domains::quadrature::gauss_hermite_outcomes;
use crate::model::{ActionId, CcmdpModel, OutcomeRef, OutcomeSet, SafeOutcome, StateHistory};
use crate::risk_bound::RiskBound;
use crate::Error;

/// GP prior: affine mean m(x) = intercept + slope·x and squared-exponential
/// kernel k(x₁, x₂) = amplitude · exp(−‖x₁ − x₂‖² / (2ℓ²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparameters {
    pub mean_intercept: f64,
    pub mean_slope: [f64; 2],
    pub amplitude: f64,
    pub length_scale: f64,
}

impl Default for GpHyperparameters {
    /// The benchmark prior: rising mean toward the top-right corner,
    /// amplitude 0.16, and kernel exp(−d²/8).
    fn default() -> Self {
        Self {
            mean_intercept: 1.0,
            mean_slope: [0.05, 0.05],
            amplitude: 0.16,
            length_scale: 2.0,
        }
    }
}

impl GpHyperparameters {
    pub fn mean(&self, x: f64, y: f64) -> f64 {
        self.mean_intercept + self.mean_slope[0] * x + self.mean_slope[1] * y
    }

    pub fn kernel(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let d2 = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
        self.amplitude * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

/// One noiseless measurement. Locations are unique: revisits add nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpObservation {
    pub location: (f64, f64),
    pub value: f64,
}

const KERNEL_JITTER: f64 = 1e-9;

/// Noiseless GP posterior at `query` given `observations`:
/// mean = m(q) + k_q·K⁻¹(y − m), variance = k(q,q) − k_q·K⁻¹·k_qᵀ, with a
/// 1e-9 diagonal jitter on K. Variance is clamped to be nonnegative.
pub fn gp_posterior(
    hyper: &GpHyperparameters,
    observations: &[GpObservation],
    query: (f64, f64),
) -> Result<(f64, f64), Error> {
    let prior_mean = hyper.mean(query.0, query.1);
    let prior_var = hyper.kernel(query, query);
    if observations.is_empty() {
        return Ok((prior_mean, prior_var));
    }
    let n = observations.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = hyper.kernel(observations[i].location, observations[j].location);
        }
        k[(i, i)] += KERNEL_JITTER;
    }
    let chol = k.cholesky().ok_or(Error::SingularKernel)?;
    let centered = DVector::from_iterator(
        n,
        observations
            .iter()
            .map(|o| o.value - hyper.mean(o.location.0, o.location.1)),
    );
    let k_query = DVector::from_iterator(
        n,
        observations.iter().map(|o| hyper.kernel(query, o.location)),
    );
    let alpha = chol.solve(&centered);
    let k_inv_kq = chol.solve(&k_query);
    let mean = prior_mean + k_query.dot(&alpha);
    let variance = (prior_var - k_query.dot(&k_inv_kq)).max(0.0);
    Ok((mean, variance))
}

/// Vehicle state reconstructed from a history.
#[derive(Debug, Clone, PartialEq)]
pub struct GpVehicleState {
    pub mean_position: (i32, i32),
    pub covariance: Matrix2<f64>,
    pub visited: BTreeSet<(i32, i32)>,
    pub observations: Vec<GpObservation>,
    pub t: usize,
}

/// Configuration of a GP exploration instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpExplorationConfig {
    pub grid_width: i32,
    pub grid_height: i32,
    pub start: (i32, i32),
    /// The measurement taken at the start cell before any action; defaults
    /// to the prior mean there.
    pub initial_value: Option<f64>,
    pub obstacles: Vec<Obstacle>,
    /// Initial position variance per axis (diagonal Σ₀).
    pub sigma0: f64,
    /// Per-step variance growth per axis (diagonal Σ_w).
    pub sigma_w: f64,
    pub hyper: GpHyperparameters,
    pub horizon: usize,
    pub discount: f64,
    pub risk_bound: RiskBound,
    /// Gauss–Hermite degree for measurement discretization.
    pub quadrature_degree: usize,
}

impl GpExplorationConfig {
    /// The desk-scale benchmark instance: 6×6 grid, two obstacles forming a
    /// gap, and the saturating risk bound (1 − e^(−0.4x))(0.015 + 0.001x).
    pub fn benchmark(horizon: usize) -> Self {
        Self {
            grid_width: 6,
            grid_height: 6,
            start: (0, 0),
            initial_value: None,
            obstacles: vec![
                Obstacle::new(1.25, 1.25, 2.75, 4.75),
                Obstacle::new(3.25, 1.25, 4.75, 4.75),
            ],
            sigma0: 0.005,
            sigma_w: 0.0001,
            hyper: GpHyperparameters::default(),
            horizon,
            discount: 1.0,
            risk_bound: RiskBound::saturating_affine(0.4, 0.015, 0.001),
            quadrature_degree: 4,
        }
    }
}

/// The 8-neighborhood in fixed order; an action id is an index here.
const DIRECTIONS: [(i32, i32); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Debug, Clone)]
pub struct GpExplorationModel {
    config: GpExplorationConfig,
    initial_observation: GpObservation,
}

/// Builds the exploration model, validating the geometry.
pub fn gp_exploration_model(config: GpExplorationConfig) -> Result<GpExplorationModel, Error> {
    if config.grid_width < 1 || config.grid_height < 1 {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    if config.horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    if config.quadrature_degree == 0 {
        return Err(Error::InvalidConfig("quadrature degree must be ≥ 1".into()));
    }
    if config.sigma0 <= 0.0 || config.sigma_w < 0.0 {
        return Err(Error::InvalidConfig("covariance must be positive".into()));
    }
    let (sx, sy) = config.start;
    if sx < 0 || sx >= config.grid_width || sy < 0 || sy >= config.grid_height {
        return Err(Error::InvalidConfig("start cell outside the grid".into()));
    }
    let startf = (sx as f64, sy as f64);
    if config
        .obstacles
        .iter()
        .any(|o| o.contains_interior(startf.0, startf.1))
    {
        return Err(Error::InvalidConfig("start cell inside an obstacle".into()));
    }
    let value = config
        .initial_value
        .unwrap_or_else(|| config.hyper.mean(startf.0, startf.1));
    Ok(GpExplorationModel {
        initial_observation: GpObservation {
            location: startf,
            value,
        },
        config,
    })
}

impl GpExplorationModel {
    pub fn config(&self) -> &GpExplorationConfig {
        &self.config
    }

    fn in_grid(&self, cell: (i32, i32)) -> bool {
        cell.0 >= 0 && cell.0 < self.config.grid_width && cell.1 >= 0 && cell.1 < self.config.grid_height
    }

    fn cell_blocked(&self, cell: (i32, i32)) -> bool {
        let p = (cell.0 as f64, cell.1 as f64);
        self.config.obstacles.iter().any(|o| o.contains_interior(p.0, p.1))
    }

    fn covariance_at(&self, t: usize) -> Matrix2<f64> {
        let v = self.config.sigma0 + self.config.sigma_w * t as f64;
        Matrix2::new(v, 0.0, 0.0, v)
    }

    /// Replays the path to recover the semantic state. Each step recomputes
    /// the posterior that generated its quadrature branches, so outcome
    /// indices resolve to the same measurement values every time.
    pub fn reconstruct(&self, history: &StateHistory) -> GpVehicleState {
        let mut state = GpVehicleState {
            mean_position: self.config.start,
            covariance: self.covariance_at(0),
            visited: BTreeSet::from([self.config.start]),
            observations: vec![self.initial_observation],
            t: 0,
        };
        for step in history.steps() {
            let dir = DIRECTIONS[step.action.index()];
            let dest = (state.mean_position.0 + dir.0, state.mean_position.1 + dir.1);
            let branch = match step.outcome {
                OutcomeRef::Safe(i) => i,
                OutcomeRef::Failure => unreachable!("failure steps are terminal"),
            };
            if state.visited.insert(dest) {
                let destf = (dest.0 as f64, dest.1 as f64);
                let (mean, variance) =
                    gp_posterior(&self.config.hyper, &state.observations, destf)
                        .expect("jittered kernel solve");
                let branches =
                    gauss_hermite_outcomes(mean, variance, self.config.quadrature_degree);
                state.observations.push(GpObservation {
                    location: destf,
                    value: branches[branch].0,
                });
            }
            state.mean_position = dest;
            state.t += 1;
            state.covariance = self.covariance_at(state.t);
        }
        state
    }
}

impl CcmdpModel for GpExplorationModel {
    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn risk_bound(&self) -> &RiskBound {
        &self.config.risk_bound
    }

    fn actions(&self, history: &StateHistory) -> Vec<ActionId> {
        let state = self.reconstruct(history);
        DIRECTIONS
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                let dest = (state.mean_position.0 + d.0, state.mean_position.1 + d.1);
                self.in_grid(dest) && !self.cell_blocked(dest)
            })
            .map(|(i, _)| ActionId(i as u32))
            .collect()
    }

    fn outcomes(&self, history: &StateHistory, action: ActionId) -> OutcomeSet {
        let state = self.reconstruct(history);
        let dir = DIRECTIONS[action.index()];
        let dest = (state.mean_position.0 + dir.0, state.mean_position.1 + dir.1);
        debug_assert!(self.in_grid(dest) && !self.cell_blocked(dest));
        let destf = (dest.0 as f64, dest.1 as f64);
        let post_step_cov = self.covariance_at(state.t + 1);
        let risk = collision_risk(destf, &post_step_cov, &self.config.obstacles)
            .expect("destinations inside obstacles are filtered out of actions");
        let survival = 1.0 - risk;
        if state.visited.contains(&dest) {
            // No new sample and no reward on a revisit; the move is a single
            // deterministic branch apart from the collision risk.
            return OutcomeSet {
                safe_outcomes: vec![SafeOutcome {
                    probability: survival,
                    reward: 0.0,
                }],
                failure_probability: risk,
                failure_reward: 0.0,
            };
        }
        let (mean, variance) = gp_posterior(&self.config.hyper, &state.observations, destf)
            .expect("jittered kernel solve");
        let safe_outcomes = gauss_hermite_outcomes(mean, variance, self.config.quadrature_degree)
            .into_iter()
            .map(|(value, probability)| SafeOutcome {
                probability: survival * probability,
                reward: value,
            })
            .collect();
        OutcomeSet {
            safe_outcomes,
            failure_probability: risk,
            failure_reward: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::validate_model;
    use proptest::prelude::*;

    fn no_obstacle_config(horizon: usize) -> GpExplorationConfig {
        GpExplorationConfig {
            obstacles: Vec::new(),
            ..GpExplorationConfig::benchmark(horizon)
        }
    }

    #[test]
    fn prior_at_origin_matches_hyperparameters() {
        let hyper = GpHyperparameters::default();
        let (mean, variance) = gp_posterior(&hyper, &[], (0.0, 0.0)).unwrap();
        assert!((mean - 1.0).abs() < 1e-15);
        assert!((variance - 0.16).abs() < 1e-15);
    }

    #[test]
    fn posterior_interpolates_observations() {
        let hyper = GpHyperparameters::default();
        let observations = [
            GpObservation {
                location: (0.0, 0.0),
                value: 1.4,
            },
            GpObservation {
                location: (2.0, 1.0),
                value: 0.7,
            },
        ];
        for obs in &observations {
            let (mean, variance) = gp_posterior(&hyper, &observations, obs.location).unwrap();
            assert!((mean - obs.value).abs() < 1e-6);
            assert!(variance <= 1e-6);
        }
    }

    #[test]
    fn symmetric_observations_cancel_at_midpoint() {
        let hyper = GpHyperparameters::default();
        let query = (1.0, 1.0);
        let prior = hyper.mean(query.0, query.1);
        let observations = [
            GpObservation {
                location: (0.0, 1.0),
                value: hyper.mean(0.0, 1.0) + 0.3,
            },
            GpObservation {
                location: (2.0, 1.0),
                value: hyper.mean(2.0, 1.0) - 0.3,
            },
        ];
        let (mean, _) = gp_posterior(&hyper, &observations, query).unwrap();
        assert!((mean - prior).abs() < 1e-9);
    }

    #[test]
    fn corner_cell_has_three_actions() {
        let model = gp_exploration_model(no_obstacle_config(3)).unwrap();
        let actions = model.actions(&StateHistory::root());
        assert_eq!(actions.len(), 3);
    }

    #[test]
    fn obstacle_interior_cells_are_unavailable() {
        // (3, 3) sits in the gap between the two benchmark obstacles, whose
        // interiors cover the integer cells x ∈ {2} and x ∈ {4} for
        // y ∈ {2, 3, 4}. Only the vertical moves remain.
        let model = gp_exploration_model(GpExplorationConfig {
            start: (3, 3),
            ..GpExplorationConfig::benchmark(3)
        })
        .unwrap();
        let actions = model.actions(&StateHistory::root());
        let destinations: Vec<(i32, i32)> = actions
            .iter()
            .map(|a| {
                let d = DIRECTIONS[a.index()];
                (3 + d.0, 3 + d.1)
            })
            .collect();
        assert_eq!(destinations, vec![(3, 2), (3, 4)]);
    }

    #[test]
    fn revisit_pays_nothing_and_adds_no_observation() {
        let model = gp_exploration_model(no_obstacle_config(3)).unwrap();
        // Move right (direction (1,0) = index 6), then back left (index 1).
        let h1 = StateHistory::root().child(ActionId(6), OutcomeRef::Safe(0));
        let back = model.outcomes(&h1, ActionId(1));
        assert_eq!(back.safe_outcomes.len(), 1);
        assert_eq!(back.safe_outcomes[0].reward, 0.0);
        let h2 = h1.child(ActionId(1), OutcomeRef::Safe(0));
        let state = model.reconstruct(&h2);
        assert_eq!(state.observations.len(), 2);
        assert_eq!(state.mean_position, (0, 0));
    }

    #[test]
    fn fresh_cell_has_quadrature_branches_with_sampled_rewards() {
        let model = gp_exploration_model(no_obstacle_config(3)).unwrap();
        let set = model.outcomes(&StateHistory::root(), ActionId(6));
        assert_eq!(set.safe_outcomes.len(), 4);
        assert!((set.probability_sum() - 1.0).abs() < 1e-9);
        // Branch rewards straddle the posterior mean at (1, 0).
        let (mean, _) = gp_posterior(
            &GpHyperparameters::default(),
            &[model.initial_observation],
            (1.0, 0.0),
        )
        .unwrap();
        assert!(set.safe_outcomes.first().unwrap().reward < mean);
        assert!(set.safe_outcomes.last().unwrap().reward > mean);
    }

    #[test]
    fn covariance_grows_linearly_with_time() {
        let model = gp_exploration_model(no_obstacle_config(3)).unwrap();
        let h = StateHistory::root()
            .child(ActionId(6), OutcomeRef::Safe(0))
            .child(ActionId(6), OutcomeRef::Safe(1));
        let state = model.reconstruct(&h);
        assert_eq!(state.t, 2);
        assert!((state.covariance[(0, 0)] - (0.005 + 2.0 * 0.0001)).abs() < 1e-15);
    }

    #[test]
    fn model_is_pure_and_well_formed() {
        let model = gp_exploration_model(GpExplorationConfig::benchmark(2)).unwrap();
        assert!(validate_model(&model, 2, 10_000).unwrap().is_empty());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_start = GpExplorationConfig {
            start: (7, 7),
            ..GpExplorationConfig::benchmark(3)
        };
        assert!(matches!(
            gp_exploration_model(bad_start),
            Err(Error::InvalidConfig(_))
        ));
        let inside = GpExplorationConfig {
            start: (2, 2),
            ..GpExplorationConfig::benchmark(3)
        };
        assert!(matches!(
            gp_exploration_model(inside),
            Err(Error::InvalidConfig(_))
        ));
    }

    proptest! {
        /// Conditioning on one more observation never increases posterior
        /// variance at any query point.
        #[test]
        fn posterior_variance_nonincreasing_in_observations(
            xs in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..5),
            extra in (0.0f64..5.0, 0.0f64..5.0),
            query in (0.0f64..5.0, 0.0f64..5.0),
            values in proptest::collection::vec(0.0f64..2.0, 6),
        ) {
            let hyper = GpHyperparameters::default();
            let mut observations: Vec<GpObservation> = Vec::new();
            for (i, loc) in xs.iter().enumerate() {
                if observations.iter().all(|o| {
                    let d2 = (o.location.0 - loc.0).powi(2) + (o.location.1 - loc.1).powi(2);
                    d2 > 1e-6
                }) {
                    observations.push(GpObservation { location: *loc, value: values[i] });
                }
            }
            let dist_ok = observations.iter().all(|o| {
                let d2 = (o.location.0 - extra.0).powi(2) + (o.location.1 - extra.1).powi(2);
                d2 > 1e-6
            });
            prop_assume!(dist_ok);
            let (_, before) = gp_posterior(&hyper, &observations, query).unwrap();
            let mut extended = observations.clone();
            extended.push(GpObservation { location: extra, value: *values.last().unwrap() });
            let (_, after) = gp_posterior(&hyper, &extended, query).unwrap();
            // Jitter softens exact monotonicity at machine precision.
            prop_assert!(after <= before + 1e-7);
        }
    }
}
