//! One full urban run: central fixed source on a grid map, vehicles on
//! crossing round trips, adaptive dissemination, and the resulting
//! report.
//!
//! Run with: cargo run --example run_urban

use trad_sim::scenario::{run_scenario, ScenarioConfig};

fn main() {
    let mut config = ScenarioConfig::default();
    config.sim_duration_s = 200.0;
    config.warmup_s = 90.0;
    config.cooldown_s = 30.0;
    config.max_data_messages = 30;
    config.traffic.density_vkm2 = Some(80.0);

    println!(
        "urban run: {} v/km2 on a {} map, {} s simulated, protocol {}",
        config.traffic.density_vkm2.unwrap(),
        config.map.label(),
        config.sim_duration_s,
        config.protocol
    );
    let out = run_scenario(&config, 1).expect("scenario runs");
    let r = &out.report;
    println!("  messages originated   {}", r.messages);
    println!("  delivery ratio        {:.4}", r.pdr.unwrap());
    println!("  data transmissions    {}", r.data_tx);
    println!("  beacon transmissions  {}", r.beacon_tx);
    println!("  mean delay            {:.4} s", r.mean_delay_s.unwrap());
    println!("  95th percentile       {:.4} s", r.p95_delay_s.unwrap());
    println!("  receiver collisions   {}", r.collisions);
    println!("  nodes seen            {}", out.log.nodes.len());
}
