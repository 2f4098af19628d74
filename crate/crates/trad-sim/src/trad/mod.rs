//! The traffic-adaptive dissemination protocol: beaconing and neighbor
//! tables, vector-angle directional clustering, utility-sorted
//! priority-list broadcast suppression, coordinator/breaker selection,
//! and store-carry-forward rebroadcast with echo cancellation.

mod cluster;
mod state;
mod types;
mod utility;

pub use cluster::{classify_clusters, DirectionalCluster};
#[cfg(test)]
pub(crate) use state::MockSched;
pub use state::{ProtoEnv, Scheduler, TradState};
pub use types::{
    Beacon, DataMessage, Decision, FireKind, NeighborEntry, ProtocolParams, ScfRole,
    SuppressionPolicy,
};
pub use utility::{
    build_priority_list, distance_metric, is_breaker, is_coordinator, neighbor_metric,
    scf_slot_delay, scf_utility, slot_delay, tx_utility, UtilityError,
};
