//! Solves the fractional relaxation equation D^β y = −y, y(0) = 1, and
//! compares it with the exact solution E_β(−t^β).
//!
//!     cargo run --release --example relaxation -- 0.5

use fracgame::fraccalc::{fde_solve, mittag_leffler, FdeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let beta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.7);
    let decay = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = -y[0];
    println!("beta = {beta}");
    println!("{:>8} {:>12} {:>12}", "step", "max error", "ratio");
    let mut previous: Option<f64> = None;
    for step in [4e-3, 2e-3, 1e-3, 5e-4] {
        let traj = fde_solve(&decay, &FdeConfig::new(beta, step, 1.0, vec![1.0]))?;
        let mut err: f64 = 0.0;
        for (&t, &y) in traj.times().iter().zip(traj.values()) {
            err = err.max((y - mittag_leffler(beta, -t.powf(beta), 1e-15)?).abs());
        }
        let ratio = previous.map_or(String::from("-"), |p| format!("{:.2}", p / err));
        println!("{step:>8.0e} {err:>12.3e} {ratio:>12}");
        previous = Some(err);
    }
    Ok(())
}
