//! Received power, noise and SNR of every link in a scenario.
//!
//!     cargo run --release --example link_budget -- heterogeneous-paper

use fracgame::netmodel::received_power;
use fracgame::scenarios::load_scenario;
use fracgame::units::{linear_to_db, watts_to_dbm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "homogeneous-paper".into());
    let s = load_scenario(&name)?.scenario;
    println!("{:<6} {:<4} {:>6} {:>10} {:>10} {:>9}", "user", "bs", "kind", "P_rx dBm", "noise dBm", "SNR dB");
    for (i, user) in s.users.iter().enumerate() {
        for id in &s.coverage[i] {
            let bs = &s.base_stations[s.station_index(id).expect("validated")];
            let p = received_power(bs, user, 1.0)?;
            println!(
                "{:<6} {:<4} {:>6} {:>10.2} {:>10.2} {:>9.2}",
                user.id,
                id,
                bs.kind().label(),
                watts_to_dbm(p),
                watts_to_dbm(bs.noise_power),
                linear_to_db(p / bs.noise_power)
            );
        }
    }
    Ok(())
}
