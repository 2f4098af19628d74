//! Store-carry-forward with echo cancellation: two parked agents hold a
//! message an out-of-range vehicle lacks. Its beacon triggers both; the
//! closer agent fires first and the other cancels on hearing the echo.
//!
//! Run with: cargo run --example scf_echo

use trad_sim::geo::{Bounds, RoadMap, Vec2};
use trad_sim::ident::VehicleId;
use trad_sim::scenario::{ScenarioConfig, Simulation, StaticNode};
use trad_sim::trad::Decision;

fn main() {
    // U at x=0 is out of the source's reach; agents B (x=50) and A
    // (x=320) sit on junctions, hear the source at x=410, and both hear
    // U. B is much closer to U, so its burst slot comes first.
    let map = RoadMap {
        segments: vec![],
        intersections: vec![Vec2::new(50.0, 0.0), Vec2::new(320.0, 0.0)],
        buildings: vec![],
        bounds: Bounds {
            min: Vec2::new(-50.0, -50.0),
            max: Vec2::new(500.0, 50.0),
        },
    };
    let mut config = ScenarioConfig::default();
    config.sim_duration_s = 25.0;
    config.warmup_s = 0.05;
    config.cooldown_s = 1.0;
    config.max_data_messages = 1;
    config.trad.slot_time_ms = 16.0;
    let north = Vec2::new(0.0, 1.0);
    let sim = Simulation::with_static_nodes(
        &config,
        11,
        map,
        StaticNode {
            pos: Vec2::new(410.0, 0.0),
            heading: Vec2::new(1.0, 0.0),
        },
        &[
            StaticNode { pos: Vec2::new(50.0, 0.0), heading: north },  // B = node 1
            StaticNode { pos: Vec2::new(320.0, 0.0), heading: north }, // A = node 2
            StaticNode { pos: Vec2::new(0.0, 0.0), heading: north },   // U = node 3
        ],
    );
    let out = sim.run();

    println!("decision trace (store-carry-forward rows):");
    for d in &out.decisions {
        match d.decision {
            Decision::ScheduledScf { data_id, burst, fire_at } => println!(
                "  t={} node {} schedules SCF push of msg {} (burst {}) to fire at {}",
                d.time, d.node, data_id, burst, fire_at
            ),
            Decision::CancelledScf { data_id } => println!(
                "  t={} node {} hears the echo and cancels its pending push of msg {}",
                d.time, d.node, data_id
            ),
            _ => {}
        }
    }
    let served = out
        .log
        .receptions
        .iter()
        .any(|r| r.receiver == VehicleId(3));
    println!(
        "\nuninformed vehicle served: {served}; data transmissions: {}",
        out.report.data_tx
    );
}
