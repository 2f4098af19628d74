use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::Vec2;
use crate::ident::{DataId, VehicleId};
use crate::simcore::SimTime;

/// Protocol constants. Defaults: 8 ms rebroadcast slots, 10 degree
/// cluster threshold, neighbor metric saturating at 20, distance metric
/// normalized by the 366 m radio range, 1 s beacons that expire after
/// 1.5 s, 40-entry message list advertisement, 20 m coordinator radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub slot_time: SimTime,
    pub cluster_angle: f64,
    pub max_neighbor: u32,
    pub max_radio_range: f64,
    pub beacon_period: SimTime,
    pub beacon_lifetime: SimTime,
    pub msg_list_cap: usize,
    pub coordinator_radius: f64,
    pub suppression: SuppressionPolicy,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            slot_time: SimTime::from_millis(8),
            cluster_angle: 10f64.to_radians(),
            max_neighbor: 20,
            max_radio_range: 366.0,
            beacon_period: SimTime::from_secs(1),
            beacon_lifetime: SimTime::from_micros(1_500_000),
            msg_list_cap: 40,
            coordinator_radius: 20.0,
            suppression: SuppressionPolicy::SameCluster,
        }
    }
}

/// Which overheard duplicates cancel a pending priority-slot rebroadcast.
/// `SameCluster` keeps forwarders covering other directions alive;
/// `AnyDuplicate` is the aggressive alternative, kept selectable so the
/// trade-off is measurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SuppressionPolicy {
    #[default]
    SameCluster,
    AnyDuplicate,
}

/// Periodic one-hop status frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Beacon {
    pub beacon_id: u64,
    pub sender_id: VehicleId,
    /// GPS-reported position (drifted for vehicles).
    pub position: Vec2,
    /// Unit driving direction.
    pub direction: Vec2,
    pub neighbor_count: u32,
    pub cbr: f64,
    /// Most recently received data ids, at most `msg_list_cap` entries.
    pub message_list: Vec<DataId>,
}

impl Beacon {
    pub fn is_well_formed(&self, msg_list_cap: usize) -> bool {
        self.message_list.len() <= msg_list_cap
            && self.cbr.is_finite()
            && (0.0..=1.0).contains(&self.cbr)
            && self.position.x.is_finite()
            && self.position.y.is_finite()
    }
}

/// Data frame header. `sender_*` fields describe the latest forwarder
/// and are rebuilt at every hop; originator fields are preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMessage {
    pub data_id: DataId,
    pub originator_id: VehicleId,
    pub sender_id: VehicleId,
    pub originator_pos: Vec2,
    pub sender_pos: Vec2,
    /// Rebroadcast order chosen by the sender; no duplicates.
    pub priority_list: Vec<VehicleId>,
}

/// What is known about a neighbor holding one message id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnownState {
    /// The neighbor advertised or forwarded the id itself.
    Confirmed,
    /// We broadcast the id toward this neighbor; counts attempts, since
    /// an unacknowledged push may have been lost to a collision.
    Pushed(u8),
}

impl KnownState {
    /// Push attempts before giving the pair up to other agents.
    pub const MAX_PUSH_ATTEMPTS: u8 = 2;

    pub fn settled(self) -> bool {
        match self {
            KnownState::Confirmed => true,
            KnownState::Pushed(n) => n >= Self::MAX_PUSH_ATTEMPTS,
        }
    }
}

/// One row of the neighbor table, refreshed by beacons and evicted when
/// `last_heard` falls more than the beacon lifetime behind the clock.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEntry {
    pub id: VehicleId,
    pub position: Vec2,
    pub direction: Vec2,
    pub neighbor_count: u32,
    pub cbr: f64,
    pub message_list: Vec<DataId>,
    pub last_heard: SimTime,
    /// Ids this neighbor is believed to hold, from its own
    /// advertisements or from our pushes; bounds repeated
    /// store-carry-forward pushes once the advertised window rolls past
    /// old messages.
    pub known_ids: BTreeMap<DataId, KnownState>,
}

/// Store-carry-forward agent role currently held by a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScfRole {
    #[default]
    None,
    /// Within the coordinator radius of an intersection.
    Coordinator,
    /// Frontier vehicle moving with the data forwarding direction.
    Breaker,
}

impl ScfRole {
    pub fn is_agent(self) -> bool {
        self != ScfRole::None
    }
}

/// Why a rebroadcast fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FireKind {
    /// Scheduled from a priority-list rank (well-connected branch).
    PrioritySlot,
    /// Scheduled from an uninformed neighbor's beacon (SCF branch).
    Scf,
}

/// Conformance-trace entries emitted by the protocol state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    ScheduledSlot {
        data_id: DataId,
        rank: usize,
        fire_at: SimTime,
    },
    ScheduledScf {
        data_id: DataId,
        burst: usize,
        fire_at: SimTime,
    },
    /// Echo cancellation of a pending priority-slot rebroadcast.
    CancelledSlot { data_id: DataId },
    /// Echo cancellation of a pending SCF transmission.
    CancelledScf { data_id: DataId },
}
