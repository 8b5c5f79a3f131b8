//! Model construction from a resolved configuration.

use anyhow::{bail, Context, Result};
use vulcan::domains::bandit::{bandit_model, table1_machines};
use vulcan::domains::counterexample::counterexample_model;
use vulcan::domains::gp::{gp_exploration_model, GpExplorationConfig};
use vulcan::CcmdpModel;

use crate::config::{parse_cell, parse_grid, parse_obstacle, Domain, ResolvedRun};

pub fn build_model(config: &ResolvedRun) -> Result<Box<dyn CcmdpModel + Send>> {
    match config.domain {
        Domain::Bandit => {
            if config.preset != "table1" {
                bail!("unknown bandit preset '{}'", config.preset);
            }
            let model = bandit_model(
                table1_machines(),
                config.horizon,
                config.gamma,
                config.risk_bound(),
            )
            .context("building bandit model")?;
            Ok(Box::new(model))
        }
        Domain::Gp => {
            let mut gp = GpExplorationConfig::benchmark(config.horizon);
            gp.discount = config.gamma;
            gp.risk_bound = config.risk_bound();
            if let Some(grid) = &config.grid {
                let (w, h) = parse_grid(grid)?;
                gp.grid_width = w;
                gp.grid_height = h;
            }
            if let Some(start) = &config.start {
                gp.start = parse_cell(start)?;
            }
            if let Some(obstacles) = &config.obstacles {
                gp.obstacles = obstacles
                    .iter()
                    .map(|s| parse_obstacle(s))
                    .collect::<Result<_>>()?;
            }
            let model = gp_exploration_model(gp).context("building GP exploration model")?;
            Ok(Box::new(model))
        }
        Domain::Fig2 => Ok(Box::new(counterexample_model(config.risk_bound()))),
    }
}
