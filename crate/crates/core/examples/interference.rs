//! Expected UHF rate as the co-channel neighbours become busier.
//!
//!     cargo run --release --example interference

use fracgame::game::expected_uhf_rate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (bandwidth, signal, noise) = (20e6, 5.5e-11, 8e-13);
    let interferer_power = [2e-12, 6e-12, 1.5e-11];
    println!("{:>14} {:>16}", "P(active)", "rate (Mbit/s)");
    for step in 0..=10 {
        let active = step as f64 / 10.0;
        let neighbours: Vec<(f64, f64)> = interferer_power.iter().map(|&p| (p, 1.0 - active)).collect();
        let rate = expected_uhf_rate(bandwidth, 1.0, signal, noise, &neighbours)?;
        println!("{active:>14.1} {:>16.3}", rate / 1e6);
    }
    Ok(())
}
