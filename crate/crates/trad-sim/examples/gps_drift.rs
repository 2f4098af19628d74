//! Positioning-error study: one message on an irregular downtown grid
//! at 100 v/km2, with the reported positions drifted by 0 to 100 m.
//! Prints time-to-coverage milestones and writes per-deviation coverage
//! curves.
//!
//! Run with: cargo run --example gps_drift

use std::fmt::Write as _;

use trad_sim::ident::DataId;
use trad_sim::scenario::{run_scenario, MapSpec, ScenarioConfig};
use trad_sim::trad::SuppressionPolicy;

fn main() {
    let out = std::env::temp_dir().join("trad-sim-gps-drift");
    std::fs::create_dir_all(&out).expect("temp dir");

    println!("{:>10} {:>10} {:>10} {:>12}", "drift (m)", "t50 (s)", "t90 (s)", "peak coverage");
    for deviation in [0.0f64, 25.0, 50.0, 75.0, 100.0] {
        let mut config = ScenarioConfig::default();
        config.sim_duration_s = 210.0;
        config.warmup_s = 90.0;
        config.cooldown_s = 30.0;
        config.max_data_messages = 1;
        config.sample_period_s = 0.1;
        config.map = MapSpec::Grid {
            blocks_x: 6,
            blocks_y: 6,
            block_size_m: 200.0,
            lanes: 1,
            building_inset_m: 28.0,
            irregularity: 0.5,
        };
        config.traffic.density_vkm2 = Some(100.0);
        config.traffic.route_legs = 14;
        config.trad.suppression = SuppressionPolicy::AnyDuplicate;
        config.drift.deviation_m = deviation;

        let report = run_scenario(&config, 1).expect("runs").report;
        let t50 = report.time_to_coverage(DataId(0), 0.5).unwrap().as_secs_f64();
        let t90 = report.time_to_coverage(DataId(0), 0.9).unwrap().as_secs_f64();
        let peak = report.max_coverage(DataId(0)).unwrap();
        println!("{deviation:>10} {t50:>10.2} {t90:>10.2} {peak:>12.3}");

        let curve = &report.coverage[0].1;
        let mut text = String::from("time_us,fraction\n");
        for (t, frac) in curve {
            let _ = writeln!(text, "{},{}", t.as_micros(), frac);
        }
        std::fs::write(out.join(format!("coverage_drift_{deviation}.csv")), text)
            .expect("write curve");
    }
    println!("\ncurves written under {}", out.display());
}
