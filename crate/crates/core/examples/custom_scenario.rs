//! Builds a scenario from inline TOML, overrides one parameter, and prints
//! the normalised SI form that reloads to the same value.
//!
//!     cargo run --release --example custom_scenario

use fracgame::dynamics::{run, RunConfig};
use fracgame::game::GameModel;
use fracgame::scenarios::{parse_scenario, preset_source};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a denser group with an explicit starting strategy
    let text = preset_source("homogeneous-paper")
        .expect("preset")
        .replace("group_size = 10", "group_size = 40")
        .replace("coverage = [\"U1\", \"M1\", \"A1\"]", "coverage = [\"U1\", \"M1\", \"A1\"]\ninitial = [0.1, 0.8, 0.1]");
    let scenario = parse_scenario(&text)?;
    let model = GameModel::compile(&scenario)?;
    let traj = run(&model, &RunConfig::from_scenario(&scenario))?;
    println!("equilibrium {:.4?}", model.homogeneous_equilibrium()?);
    println!("state at t = {}: {:.4?}", scenario.dynamics.horizon, traj.final_state());

    let normalised = scenario.to_toml();
    assert_eq!(parse_scenario(&normalised)?, scenario);
    println!("\n{normalised}");
    Ok(())
}
