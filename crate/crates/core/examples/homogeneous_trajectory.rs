//! Strategy trajectories of the homogeneous group for several memory
//! orders, with the closed-form equilibrium for reference.
//!
//!     cargo run --release --example homogeneous_trajectory

use fracgame::dynamics::{adaptation_rate, detect_convergence, run, RunConfig};
use fracgame::game::GameModel;
use fracgame::scenarios::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = load_scenario("homogeneous-paper")?.scenario;
    let model = GameModel::compile(&s)?;
    let eq = model.homogeneous_equilibrium()?;
    println!("closed-form equilibrium (U1, M1, A1): {eq:.4?}");
    for beta in [0.7, 1.0, 1.3] {
        let mut cfg = RunConfig::from_scenario(&s);
        cfg.beta = beta;
        let traj = run(&model, &cfg)?;
        let rate = adaptation_rate(&traj, 11);
        println!("\nbeta = {beta}");
        println!("{:>7} {:>8} {:>8} {:>8} {:>10}", "t", "y_u", "y_m", "y_a", "rate");
        for t in [0.0, 1.0, 5.0, 10.0, 30.0, 60.0, 120.0] {
            let n = (t / cfg.step).round() as usize;
            let y = traj.state(n);
            println!("{t:>7.1} {:>8.4} {:>8.4} {:>8.4} {:>10.4}", y[0], y[1], y[2], rate[n]);
        }
        match detect_convergence(&traj, 1e-3, (10.0 / cfg.step) as usize) {
            Some((t, _)) => println!("settled within 1e-3 over a 10 s window from t = {t:.2} s"),
            None => println!("not settled within 1e-3 by t = {}", cfg.horizon),
        }
    }
    Ok(())
}
