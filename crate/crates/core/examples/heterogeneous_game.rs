//! Sixteen users in two clusters choosing between their UHF and mmWave BS
//! under Rayleigh fading redrawn every 10 ms.
//!
//!     cargo run --release --example heterogeneous_game -- 0.7

use fracgame::dynamics::{mean_cumulative_utility, run, FadingSchedule, RunConfig};
use fracgame::game::GameModel;
use fracgame::scenarios::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let beta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let s = load_scenario("heterogeneous-paper")?.scenario;
    let model = GameModel::compile(&s)?;
    let mut cfg = RunConfig::from_scenario(&s).with_fading(FadingSchedule::Redraw { period: 0.01, seed: 7 });
    cfg.beta = beta;
    cfg.horizon = 60.0;
    let traj = run(&model, &cfg)?;
    let last = traj.nodes() - 1;
    println!("beta = {beta}, t = {} s", traj.times[last]);
    for (b, block) in traj.layout.blocks.iter().enumerate() {
        let x = &traj.state(last)[block.range()];
        let probs: Vec<String> = block.choices.iter().zip(x).map(|(c, p)| format!("{c} {p:.3}")).collect();
        println!("{:<4} {}  avg utility {:.4}", block.owner, probs.join("  "), traj.avg_utility(last, b));
    }
    println!("mean cumulative utility {:.3}", mean_cumulative_utility(&traj)[last]);
    Ok(())
}
