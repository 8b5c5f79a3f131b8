//! Simplified Bayesian multi-armed bandit domain.
//!
//! The player faces a set of machines. Playing machine i returns one of two
//! known rewards: R₁ with probability p, R₂ with probability 1 − p, where p
//! itself is either p₁ (with belief probability θ) or p₂ (with 1 − θ). The
//! belief θ is updated by Bayes' rule after every observed reward. A play
//! may also fail outright with known probability r, which yields zero
//! reward and ends the game. At any point the player may instead end the
//! game voluntarily, collecting 0.25 per remaining action at no risk.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::model::{ActionId, CcmdpModel, OutcomeRef, OutcomeSet, SafeOutcome, StateHistory};
use crate::risk_bound::RiskBound;
use crate::Error;

/// Parameters of one machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineParams {
    pub r1: f64,
    pub r2: f64,
    /// P[R₁ | p = p₁].
    pub p1: f64,
    /// P[R₁ | p = p₂].
    pub p2: f64,
    /// Initial belief θ that p = p₁.
    pub theta0: f64,
    /// Failure probability per play.
    pub risk: f64,
}

/// The three benchmark machines: a balanced machine with extreme rewards, a
/// safe low-reward machine believed to pay its better option, and a riskier
/// machine believed biased toward its low option.
pub fn table1_machines() -> Vec<MachineParams> {
    vec![
        MachineParams {
            r1: 0.0,
            r2: 1.0,
            p1: 0.3,
            p2: 0.7,
            theta0: 0.5,
            risk: 0.001,
        },
        MachineParams {
            r1: 0.2,
            r2: 0.5,
            p1: 0.2,
            p2: 0.5,
            theta0: 0.6,
            risk: 0.0005,
        },
        MachineParams {
            r1: 0.4,
            r2: 0.6,
            p1: 0.3,
            p2: 0.6,
            theta0: 0.3,
            risk: 0.0015,
        },
    ]
}

/// Posterior belief after observing `observed_reward` from `machine` with
/// prior belief `theta`:
/// θ' = P[R|p₁]·θ / (P[R|p₁]·θ + P[R|p₂]·(1−θ)).
pub fn bandit_update(
    theta: f64,
    machine: &MachineParams,
    observed_reward: f64,
) -> Result<f64, Error> {
    let (likelihood_p1, likelihood_p2) = if observed_reward == machine.r1 {
        (machine.p1, machine.p2)
    } else if observed_reward == machine.r2 {
        (1.0 - machine.p1, 1.0 - machine.p2)
    } else {
        return Err(Error::UnknownReward {
            observed: observed_reward,
            r1: machine.r1,
            r2: machine.r2,
        });
    };
    let numerator = likelihood_p1 * theta;
    let denominator = numerator + likelihood_p2 * (1.0 - theta);
    if denominator == 0.0 {
        // The observation has probability zero under the prior; the belief
        // is unchanged rather than undefined.
        return Ok(theta);
    }
    Ok(numerator / denominator)
}

/// Marginal probability of observing R₁ under belief `theta`.
fn marginal_p_r1(theta: f64, machine: &MachineParams) -> f64 {
    machine.p1 * theta + machine.p2 * (1.0 - theta)
}

/// Belief state reconstructed from a history.
#[derive(Debug, Clone, PartialEq)]
struct BanditState {
    thetas: Vec<f64>,
    t: usize,
    ended: bool,
}

/// The bandit CCMDP. Action ids 0..m play the corresponding machine; action
/// id m ends the game (and afterwards acts as the forced zero-reward no-op
/// that pads the game out to the horizon, so every leaf sits at depth n).
#[derive(Debug, Clone)]
pub struct BanditModel {
    machines: Vec<MachineParams>,
    horizon: usize,
    discount: f64,
    risk_bound: RiskBound,
}

/// Builds the bandit model; fails on an empty machine list or out-of-range
/// parameters.
pub fn bandit_model(
    machines: Vec<MachineParams>,
    horizon: usize,
    discount: f64,
    risk_bound: RiskBound,
) -> Result<BanditModel, Error> {
    if machines.is_empty() {
        return Err(Error::InvalidConfig("no machines".into()));
    }
    for (i, m) in machines.iter().enumerate() {
        let in_unit =
            |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(m.p1) && in_unit(m.p2) && in_unit(m.theta0) && in_unit(m.risk)) {
            return Err(Error::InvalidConfig(format!(
                "machine {i} has a probability outside [0, 1]"
            )));
        }
        if m.r1 == m.r2 {
            return Err(Error::InvalidConfig(format!(
                "machine {i} has indistinguishable rewards"
            )));
        }
    }
    Ok(BanditModel {
        machines,
        horizon,
        discount,
        risk_bound,
    })
}

impl BanditModel {
    fn end_action(&self) -> ActionId {
        ActionId(self.machines.len() as u32)
    }

    /// Safe branches of playing machine `i` under belief `theta`: the R₁
    /// and R₂ observations, with zero-probability branches omitted.
    fn play_branches(&self, i: usize, theta: f64) -> Vec<SafeOutcome> {
        let machine = &self.machines[i];
        let survival = 1.0 - machine.risk;
        let p_r1 = marginal_p_r1(theta, machine);
        let mut branches = Vec::with_capacity(2);
        if p_r1 > 0.0 {
            branches.push(SafeOutcome {
                probability: survival * p_r1,
                reward: machine.r1,
            });
        }
        if p_r1 < 1.0 {
            branches.push(SafeOutcome {
                probability: survival * (1.0 - p_r1),
                reward: machine.r2,
            });
        }
        branches
    }

    fn reconstruct(&self, history: &StateHistory) -> BanditState {
        let mut state = BanditState {
            thetas: self.machines.iter().map(|m| m.theta0).collect(),
            t: 0,
            ended: false,
        };
        for step in history.steps() {
            let idx = step.action.index();
            if idx < self.machines.len() {
                if let OutcomeRef::Safe(branch) = step.outcome {
                    let branches = self.play_branches(idx, state.thetas[idx]);
                    let observed = branches[branch].reward;
                    state.thetas[idx] =
                        bandit_update(state.thetas[idx], &self.machines[idx], observed)
                            .expect("branch rewards come from the machine itself");
                }
            } else {
                state.ended = true;
            }
            state.t += 1;
        }
        state
    }
}

impl CcmdpModel for BanditModel {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn risk_bound(&self) -> &RiskBound {
        &self.risk_bound
    }

    fn actions(&self, history: &StateHistory) -> Vec<ActionId> {
        let state = self.reconstruct(history);
        if state.ended {
            vec![self.end_action()]
        } else {
            (0..=self.machines.len() as u32).map(ActionId).collect()
        }
    }

    fn outcomes(&self, history: &StateHistory, action: ActionId) -> OutcomeSet {
        let state = self.reconstruct(history);
        let idx = action.index();
        if idx >= self.machines.len() {
            // Ending grants 0.25 per remaining action; once ended, the
            // forced no-op pays nothing.
            let reward = if state.ended {
                0.0
            } else {
                0.25 * (self.horizon - state.t) as f64
            };
            return OutcomeSet::certain(reward);
        }
        assert!(!state.ended, "cannot play a machine after ending the game");
        let machine = &self.machines[idx];
        OutcomeSet {
            safe_outcomes: self.play_branches(idx, state.thetas[idx]),
            failure_probability: machine.risk,
            failure_reward: 0.0,
        }
    }

    fn state_key(&self, history: &StateHistory) -> Option<u64> {
        let state = self.reconstruct(history);
        let mut hasher = DefaultHasher::new();
        state.t.hash(&mut hasher);
        state.ended.hash(&mut hasher);
        for theta in &state.thetas {
            // Beliefs produced by different observation orders agree
            // mathematically but not always bitwise; quantizing at 2^-44
            // merges them without conflating genuinely distinct beliefs.
            ((theta * (1u64 << 44) as f64).round() as u64).hash(&mut hasher);
        }
        Some(hasher.finish())
    }
}
