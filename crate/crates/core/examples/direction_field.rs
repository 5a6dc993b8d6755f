//! Replicator field over the strategy simplex of the homogeneous game,
//! printed as CSV (y_u, y_m, dy_u, dy_m).
//!
//!     cargo run --release --example direction_field -- 10 > field.csv

use fracgame::dynamics::{direction_field, reference_equilibrium, RunConfig};
use fracgame::game::GameModel;
use fracgame::scenarios::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let resolution: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(15);
    let s = load_scenario("homogeneous-paper")?.scenario;
    let model = GameModel::compile(&s)?;
    let start = RunConfig::from_scenario(&s).initial;
    let eq = reference_equilibrium(&model, s.dynamics.delta, &start, 1e-10)?;
    let field = direction_field(&model, s.dynamics.delta, resolution, &eq)?;
    println!("y_u,y_m,dy_u,dy_m");
    for (p, v) in field.points.iter().zip(&field.vectors) {
        println!("{},{},{},{}", p[0], p[1], v[0], v[1]);
    }
    eprintln!("{} grid points; equilibrium {:.4?}", field.points.len(), field.equilibrium);
    Ok(())
}
