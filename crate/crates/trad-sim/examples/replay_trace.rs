//! Trace persistence and replay: run a scenario, write the transmission
//! trace, read it back, and recompute the exact same report from the
//! persisted rows.
//!
//! Run with: cargo run --example replay_trace

use trad_sim::metrics::{read_trace, write_trace, Report, ScenarioKind};
use trad_sim::scenario::{run_scenario, ScenarioConfig};
use trad_sim::simcore::SimTime;

fn main() {
    let mut config = ScenarioConfig::default();
    config.sim_duration_s = 150.0;
    config.warmup_s = 60.0;
    config.cooldown_s = 30.0;
    config.max_data_messages = 10;
    config.traffic.density_vkm2 = Some(60.0);
    let seed = 5;

    let out = run_scenario(&config, seed).expect("runs");
    let path = std::env::temp_dir().join("trad-sim-replay-trace.csv");
    write_trace(&out.log, &out.decisions, &path).expect("write trace");
    let bytes = std::fs::metadata(&path).unwrap().len();
    println!("live run: {} tx rows, {} receptions, {} decisions -> {} ({} bytes)",
        out.log.tx.len(), out.log.receptions.len(), out.decisions.len(), path.display(), bytes);

    let replayed_log = read_trace(&path).expect("parse trace");
    let replayed = Report::compute(
        &replayed_log,
        ScenarioKind::Urban,
        SimTime::from_secs_f64(config.sample_period_s),
        seed,
    );
    assert_eq!(replayed, out.report, "replayed metrics must match exactly");
    println!(
        "replayed report equals the live one: pdr={:.4} data_tx={} mean_delay={:.4}s",
        replayed.pdr.unwrap(),
        replayed.data_tx,
        replayed.mean_delay_s.unwrap()
    );
}
