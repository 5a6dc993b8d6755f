//! Loss of cumulative utility caused by fading, averaged over replicates.
//!
//!     cargo run --release --example fading_montecarlo -- 20

use fracgame::dynamics::{monte_carlo, MonteCarloConfig, RunConfig};
use fracgame::game::GameModel;
use fracgame::scenarios::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let replicates: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let s = load_scenario("homogeneous-paper")?.scenario;
    let model = GameModel::compile(&s)?;
    let mc = MonteCarloConfig {
        replicates,
        delta_fade: 0.01,
        base_seed: 1,
        fading: true,
        threads: None,
    };
    println!("{:>5} {:>12} {:>12} {:>12} {:>10}", "beta", "baseline", "mean", "loss", "std");
    for beta in [0.7, 1.0, 1.3] {
        let mut cfg = RunConfig::from_scenario(&s);
        cfg.beta = beta;
        cfg.horizon = 10.0;
        let r = monte_carlo(&model, &cfg, &mc)?;
        let n = r.loss.len() - 1;
        println!(
            "{beta:>5} {:>12.4} {:>12.4} {:>12.4} {:>10.4}",
            r.baseline_cumulative_utility[n], r.mean_cumulative_utility[n], r.loss[n], r.std_cumulative_utility[n]
        );
    }
    Ok(())
}
