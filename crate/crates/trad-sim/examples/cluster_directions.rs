//! Vector-angle directional clustering at a junction: twelve neighbors
//! on six road directions collapse into six clusters, and the
//! utility-sorted round-robin priority list gives every direction an
//! early rebroadcast slot.
//!
//! Run with: cargo run --example cluster_directions

use trad_sim::geo::Vec2;
use trad_sim::ident::VehicleId;
use trad_sim::simcore::SimTime;
use trad_sim::trad::{build_priority_list, classify_clusters, NeighborEntry};

fn main() {
    let sender = Vec2::new(500.0, 500.0);
    let bearings = [8.0, 73.0, 120.0, 192.0, 249.0, 305.0];
    let mut neighbors = Vec::new();
    let mut id = 1u32;
    for &bearing in &bearings {
        for (offset, range, count) in [(-2.0, 130.0, 4u32), (2.5, 230.0, 9)] {
            neighbors.push(NeighborEntry {
                id: VehicleId(id),
                position: sender + Vec2::from_angle((bearing + offset as f64).to_radians()) * range,
                direction: Vec2::from_angle(bearing.to_radians()),
                neighbor_count: count + id % 3,
                cbr: 0.05 * (id % 4) as f64,
                message_list: Vec::new(),
                last_heard: SimTime::ZERO,
                known_ids: Default::default(),
            });
            id += 1;
        }
    }

    let alpha = 10f64.to_radians();
    let clusters = classify_clusters(sender, &neighbors, alpha);
    println!("{} neighbors on {} road directions", neighbors.len(), bearings.len());
    println!("cluster threshold: 10 degrees\n");
    for (k, cluster) in clusters.iter().enumerate() {
        let ids: Vec<String> = cluster
            .members
            .iter()
            .map(|&i| format!("N{}", neighbors[i].id))
            .collect();
        println!(
            "cluster {}: {{{}}} (reference bearing {:.0} deg)",
            k + 1,
            ids.join(", "),
            cluster.reference.y.atan2(cluster.reference.x).to_degrees()
        );
    }

    let list = build_priority_list(sender, &neighbors, &clusters, 20, 366.0);
    let order: Vec<String> = list.iter().map(|v| format!("N{v}")).collect();
    println!("\npriority list (round robin over clusters): {}", order.join(" > "));
    println!(
        "the first {} entries cover all {} directions",
        clusters.len(),
        clusters.len()
    );
}
