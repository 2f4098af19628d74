//! Radio link budget: received power over distance under the default
//! 5.89 GHz / 300 mW / exponent-3.0 model, and the solved reception
//! threshold.
//!
//! Run with: cargo run --example link_budget

use trad_sim::radio::{airtime, received_power, threshold_distance, RadioParams};

fn main() {
    let params = RadioParams::default();
    println!("tx power       {:.2} dBm", params.tx_power_dbm);
    println!("sensitivity    {:.1} dBm", params.sensitivity_dbm);
    println!("exponent       {}", params.path_loss_exponent);
    println!("frequency      {:.2} GHz", params.frequency_hz / 1e9);
    println!();
    println!("{:>10} {:>12}", "dist (m)", "rx (dBm)");
    for dist in [1.0, 10.0, 50.0, 100.0, 183.0, 300.0, 366.0, 400.0, 500.0] {
        let rx = received_power(&params, dist).unwrap();
        let mark = if rx >= params.sensitivity_dbm { "" } else { "  (below threshold)" };
        println!("{dist:>10.0} {rx:>12.2}{mark}");
    }
    println!();
    println!(
        "threshold range: {:.1} m (the nominal ~366 m radio range)",
        threshold_distance(&params)
    );
    println!(
        "airtime: data {} us, beacon {} us at {} Mbit/s",
        airtime(&params, 2312).as_micros(),
        airtime(&params, 378).as_micros(),
        params.bitrate_bps / 1e6
    );
}
