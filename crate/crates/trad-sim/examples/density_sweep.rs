//! Density sweep with seed aggregation: the adaptive protocol against
//! flooding from 40 to 160 vehicles per square kilometer, written as
//! plot-ready CSV. Two seeds per point to keep the example quick; raise
//! `repetitions` for smoother curves.
//!
//! Run with: cargo run --example density_sweep

use trad_sim::scenario::{
    run_sweep, write_plot_csv, write_report_csv, MapSpec, ProtocolKind, ScenarioConfig, SweepAxis,
    SweepSpec,
};
use trad_sim::trad::SuppressionPolicy;

fn base() -> ScenarioConfig {
    let mut config = ScenarioConfig::default();
    config.repetitions = 2;
    config.sim_duration_s = 185.0;
    config.warmup_s = 90.0;
    config.cooldown_s = 5.0;
    config.spawn_cooldown_s = 25.0;
    config.max_data_messages = 40;
    config.map = MapSpec::Grid {
        blocks_x: 6,
        blocks_y: 6,
        block_size_m: 200.0,
        lanes: 1,
        building_inset_m: 28.0,
        irregularity: 0.0,
    };
    config.traffic.route_legs = 14;
    config.trad.suppression = SuppressionPolicy::AnyDuplicate;
    config
}

fn main() {
    let out = std::env::temp_dir().join("trad-sim-density-sweep");
    std::fs::create_dir_all(&out).expect("temp dir");

    for (label, protocol) in [("trad", ProtocolKind::Trad), ("flooding", ProtocolKind::Flooding)] {
        let mut config = base();
        config.protocol = protocol;
        let sweep = run_sweep(&SweepSpec::new(config, SweepAxis::Density)).expect("sweep runs");
        let dir = out.join(label);
        std::fs::create_dir_all(&dir).expect("protocol dir");
        write_report_csv(
            sweep.rows.iter().map(|r| (&r.meta, &r.report)),
            &dir.join("report.csv"),
        )
        .expect("write report");
        write_plot_csv("density_vkm2", &sweep.rows, &dir).expect("write plot");

        println!("{label}:");
        for point in trad_sim::scenario::aggregate(&sweep.rows).expect("rows") {
            println!(
                "  {:>5} v/km2: PDR {:.4}  data tx {:>6.0}",
                point.value,
                point.pdr_mean.unwrap_or(f64::NAN),
                point.data_tx_mean
            );
        }
    }
    println!("\nCSV written under {}", out.display());
}
