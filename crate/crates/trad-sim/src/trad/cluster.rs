use std::borrow::Borrow;

use crate::geo::{angle_between, Vec2};

use super::types::NeighborEntry;

/// A group of neighbors lying in a similar direction from the sender.
/// `reference` is the vector from the sender to the cluster's first
/// member; every member's direction vector stays within the cluster
/// angle of it. Members index into the neighbor slice the classifier
/// was given.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalCluster {
    pub reference: Vec2,
    pub members: Vec<usize>,
}

/// Greedy vector-angle classification, in neighbor-list order: the first
/// unclassified neighbor seeds a cluster and fixes its reference vector;
/// each later unclassified neighbor joins when its angle to the
/// reference is strictly below `alpha`. Needs only position information,
/// so it adapts to any road topology.
///
/// A neighbor co-located with the sender has no direction and forms a
/// singleton cluster of its own.
pub fn classify_clusters<N: Borrow<NeighborEntry>>(
    self_pos: Vec2,
    neighbors: &[N],
    alpha: f64,
) -> Vec<DirectionalCluster> {
    let mut clusters: Vec<DirectionalCluster> = Vec::new();
    let mut unclassified: Vec<usize> = (0..neighbors.len()).collect();

    while let Some(&seed) = unclassified.first() {
        let reference = neighbors[seed].borrow().position - self_pos;
        let mut members = vec![seed];
        let mut rest = Vec::with_capacity(unclassified.len());
        for &idx in unclassified.iter().skip(1) {
            let v = neighbors[idx].borrow().position - self_pos;
            let joins = match angle_between(reference, v) {
                Ok(angle) => angle < alpha,
                // Either vector degenerate: leave for a later singleton.
                Err(_) => false,
            };
            if joins {
                members.push(idx);
            } else {
                rest.push(idx);
            }
        }
        clusters.push(DirectionalCluster { reference, members });
        unclassified = rest;
    }
    clusters
}
