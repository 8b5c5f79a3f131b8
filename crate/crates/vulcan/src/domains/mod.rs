//! Experiment domains implementing the CCMDP model contract.

pub mod bandit;
pub mod collision;
pub mod counterexample;
pub mod gp;
pub mod quadrature;

pub use bandit::{bandit_model, bandit_update, table1_machines, BanditModel, MachineParams};
pub use collision::{collision_risk, Obstacle};
pub use counterexample::counterexample_model;
pub use gp::{
    gp_exploration_model, gp_posterior, GpExplorationConfig, GpExplorationModel,
    GpHyperparameters, GpObservation, GpVehicleState,
};
pub use quadrature::gauss_hermite_outcomes;
