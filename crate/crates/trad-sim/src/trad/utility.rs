use std::borrow::Borrow;
use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::geo::{angle_between, distance, RoadMap, Vec2};
use crate::ident::VehicleId;
use crate::simcore::SimTime;

use super::cluster::DirectionalCluster;
use super::types::NeighborEntry;

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("{name} must be in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
}

fn check_unit(name: &'static str, value: f64) -> Result<f64, UtilityError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(UtilityError::OutOfRange { name, value })
    }
}

/// Neighbor-count metric: min(count / max_neighbor, 1).
pub fn neighbor_metric(count: u32, max_neighbor: u32) -> f64 {
    debug_assert!(max_neighbor > 0);
    (count as f64 / max_neighbor as f64).min(1.0)
}

/// Sender-to-neighbor distance metric: min(dist / max_range, 1).
pub fn distance_metric(dist: f64, max_range: f64) -> f64 {
    debug_assert!(dist >= 0.0 && max_range > 0.0);
    (dist / max_range).min(1.0)
}

/// Transmission utility (1 + N)(1 + D)(2 - CBR), in [1, 8]: favors the
/// neighbor with more neighbors, farther from the sender, on a quieter
/// channel.
pub fn tx_utility(n: f64, d: f64, cbr: f64) -> Result<f64, UtilityError> {
    let n = check_unit("N", n)?;
    let d = check_unit("D", d)?;
    let cbr = check_unit("CBR", cbr)?;
    Ok((1.0 + n) * (1.0 + d) * (2.0 - cbr))
}

/// Store-carry-forward utility (2 - D)(2 - CBR), in [1, 4]: favors the
/// agent closer to the uninformed vehicle on a quieter channel.
pub fn scf_utility(d: f64, cbr: f64) -> Result<f64, UtilityError> {
    let d = check_unit("D", d)?;
    let cbr = check_unit("CBR", cbr)?;
    Ok((2.0 - d) * (2.0 - cbr))
}

/// Well-connected rebroadcast delay: one slot per priority rank.
pub fn slot_delay(rank: usize, slot_time: SimTime) -> SimTime {
    slot_time * rank as u64
}

/// SCF transmission delay: slot * (burst_index + 1 - U_SCF/4). The
/// fractional part lets higher-utility agents fire first and breaks slot
/// boundary synchronization.
pub fn scf_slot_delay(burst_index: usize, u_scf: f64, slot_time: SimTime) -> SimTime {
    debug_assert!((1.0..=4.0).contains(&u_scf));
    SimTime::from_secs_f64(slot_time.as_secs_f64() * (burst_index as f64 + (1.0 - u_scf / 4.0)))
}

/// A vehicle reporting a position strictly within `radius` of any
/// intersection is a coordinator: its heading after the junction is
/// unpredictable, which makes it a good carrier across directions.
pub fn is_coordinator(reported_pos: Vec2, map: &RoadMap, radius: f64) -> bool {
    map.nearest_intersection_distance(reported_pos) < radius
}

/// Breaker test at the frontier of a well-connected cluster: the vehicle
/// moves with the data forwarding direction (under a quarter turn away)
/// and no known neighbor sits farther out along it. Coordinator status
/// must already have been excluded by the caller.
pub fn is_breaker<N: Borrow<NeighborEntry>>(
    self_pos: Vec2,
    self_heading: Vec2,
    sender_pos: Vec2,
    neighbors: &[N],
) -> bool {
    let forward = self_pos - sender_pos;
    if forward.is_zero() {
        return false;
    }
    match angle_between(self_heading, forward) {
        Ok(angle) if angle < FRAC_PI_2 => {}
        _ => return false,
    }
    let own_reach = distance(sender_pos, self_pos);
    for n in neighbors {
        let n = n.borrow();
        if distance(sender_pos, n.position) > own_reach {
            if let Ok(angle) = angle_between(n.direction, forward) {
                if angle < FRAC_PI_2 {
                    return false;
                }
            }
        }
    }
    true
}

/// Orders the neighborhood for the data header: within each directional
/// cluster, members sort by transmission utility (ties by ascending id);
/// the final list interleaves clusters round-robin so every direction
/// gets an early slot.
pub fn build_priority_list<N: Borrow<NeighborEntry>>(
    self_pos: Vec2,
    neighbors: &[N],
    clusters: &[DirectionalCluster],
    max_neighbor: u32,
    max_radio_range: f64,
) -> Vec<VehicleId> {
    let mut ranked: Vec<Vec<(f64, VehicleId)>> = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let mut members: Vec<(f64, VehicleId)> = cluster
            .members
            .iter()
            .map(|&idx| {
                let n = neighbors[idx].borrow();
                let utility = tx_utility(
                    neighbor_metric(n.neighbor_count, max_neighbor),
                    distance_metric(distance(self_pos, n.position), max_radio_range),
                    n.cbr.clamp(0.0, 1.0),
                )
                .expect("metrics are clamped into [0, 1]");
                (utility, n.id)
            })
            .collect();
        members.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        ranked.push(members);
    }

    let mut list = Vec::with_capacity(neighbors.len());
    let mut depth = 0;
    loop {
        let mut placed = false;
        for cluster in &ranked {
            if let Some(&(_, id)) = cluster.get(depth) {
                list.push(id);
                placed = true;
            }
        }
        if !placed {
            break;
        }
        depth += 1;
    }
    list
}
