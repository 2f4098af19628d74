use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::geo::{angle_between, distance, RoadMap, Vec2};
use crate::ident::{DataId, VehicleId};
use crate::simcore::{EventHandle, SimTime};

use super::cluster::classify_clusters;
use super::types::{
    Beacon, DataMessage, Decision, FireKind, KnownState, NeighborEntry, ProtocolParams, ScfRole,
    SuppressionPolicy,
};
use super::utility::{
    build_priority_list, distance_metric, is_breaker, is_coordinator, scf_slot_delay, scf_utility,
    slot_delay,
};

/// Scheduling services the protocol needs from its host: the clock,
/// cancellable timers that fire a stored message, the per-transmission
/// channel-access delay draw, and the conformance-trace sink.
pub trait Scheduler {
    fn now(&self) -> SimTime;
    fn schedule_data_fire(&mut self, data_id: DataId, kind: FireKind, delay: SimTime)
        -> EventHandle;
    fn cancel(&mut self, handle: EventHandle) -> bool;
    fn access_delay(&mut self) -> SimTime;
    /// Uniform draw in [0, max), e.g. for randomized rebroadcast jitter.
    fn jitter(&mut self, max: SimTime) -> SimTime;
    fn record(&mut self, decision: Decision);
}

/// Per-call view of the world as the protocol is allowed to see it:
/// every position here is GPS-reported, never ground truth.
pub struct ProtoEnv<'a> {
    pub params: &'a ProtocolParams,
    pub map: &'a RoadMap,
    pub self_pos: Vec2,
    pub self_heading: Vec2,
    /// Own measured channel busy ratio over the trailing second.
    pub own_cbr: f64,
}

struct StoredMessage {
    originator_id: VehicleId,
    originator_pos: Vec2,
    received_at: SimTime,
}

struct PendingSlot {
    handle: EventHandle,
    /// Reported position of the sender whose priority list scheduled us;
    /// echo cancellation classifies duplicates relative to it.
    from_pos: Vec2,
}

/// Per-vehicle protocol state: neighbor table, message store, pending
/// rebroadcasts and the store-carry-forward role. Owned and mutated
/// exclusively by the simulation loop in event order.
pub struct TradState {
    id: VehicleId,
    neighbors: BTreeMap<VehicleId, NeighborEntry>,
    store: BTreeMap<DataId, StoredMessage>,
    receipt_order: VecDeque<DataId>,
    pending: BTreeMap<DataId, PendingSlot>,
    scf_pending: BTreeMap<DataId, EventHandle>,
    scf_role: ScfRole,
    beacon_seq: u64,
    infrastructure: bool,
}

impl TradState {
    pub fn new(id: VehicleId) -> Self {
        TradState {
            id,
            neighbors: BTreeMap::new(),
            store: BTreeMap::new(),
            receipt_order: VecDeque::new(),
            pending: BTreeMap::new(),
            scf_pending: BTreeMap::new(),
            scf_role: ScfRole::None,
            beacon_seq: 0,
            infrastructure: false,
        }
    }

    /// Marks this node as fixed roadside infrastructure: a permanent
    /// store-carry-forward agent serving passing uninformed vehicles,
    /// like the coordinator role but not tied to an intersection.
    pub fn mark_infrastructure(&mut self) {
        self.infrastructure = true;
        self.scf_role = ScfRole::Coordinator;
    }

    pub fn id(&self) -> VehicleId {
        self.id
    }

    pub fn scf_role(&self) -> ScfRole {
        if self.infrastructure {
            ScfRole::Coordinator
        } else {
            self.scf_role
        }
    }

    pub fn has_message(&self, id: DataId) -> bool {
        self.store.contains_key(&id)
    }

    pub fn message_count(&self) -> usize {
        self.store.len()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len() + self.scf_pending.len()
    }

    pub fn live_neighbor_count(&self) -> usize {
        self.neighbors.len()
    }

    fn expire_neighbors(&mut self, now: SimTime, lifetime: SimTime) {
        self.neighbors
            .retain(|_, n| now.saturating_sub(n.last_heard) <= lifetime);
    }

    /// Handles a decoded beacon: refresh the neighbor table, re-check the
    /// coordinator condition against the intersection list, and — when
    /// acting as an SCF agent — schedule a burst carrying every stored
    /// message the beaconer demonstrably lacks.
    ///
    /// Returns false when the beacon is malformed and was dropped.
    pub fn on_receive_beacon(
        &mut self,
        env: &ProtoEnv,
        sched: &mut impl Scheduler,
        beacon: &Beacon,
    ) -> bool {
        let params = env.params;
        if !beacon.is_well_formed(params.msg_list_cap) {
            return false;
        }
        let now = sched.now();
        self.expire_neighbors(now, params.beacon_lifetime);

        let entry = self
            .neighbors
            .entry(beacon.sender_id)
            .or_insert_with(|| NeighborEntry {
                id: beacon.sender_id,
                position: beacon.position,
                direction: beacon.direction,
                neighbor_count: 0,
                cbr: 0.0,
                message_list: Vec::new(),
                last_heard: now,
                known_ids: BTreeMap::new(),
            });
        entry.position = beacon.position;
        entry.direction = beacon.direction;
        entry.neighbor_count = beacon.neighbor_count;
        entry.cbr = beacon.cbr;
        entry.last_heard = now;
        for id in &beacon.message_list {
            entry.known_ids.insert(*id, KnownState::Confirmed);
        }
        entry.message_list = beacon.message_list.clone();

        if self.infrastructure || is_coordinator(env.self_pos, env.map, params.coordinator_radius)
        {
            self.scf_role = ScfRole::Coordinator;
        } else if self.scf_role == ScfRole::Coordinator {
            self.scf_role = ScfRole::None;
        }

        if self.scf_role.is_agent() {
            let advertised: BTreeSet<DataId> = beacon.message_list.iter().copied().collect();
            let known = &self.neighbors[&beacon.sender_id].known_ids;
            // Messages younger than a beacon period are still riding the
            // well-connected cascade; carrying applies to settled ones.
            let missing: Vec<DataId> = self
                .store
                .iter()
                .filter(|(id, stored)| {
                    now.saturating_sub(stored.received_at) > params.beacon_period
                        && !advertised.contains(id)
                        && !known.get(id).map(|k| k.settled()).unwrap_or(false)
                        && !self.pending.contains_key(id)
                        && !self.scf_pending.contains_key(id)
                })
                .map(|(id, _)| *id)
                .collect();
            if !missing.is_empty() {
                let d = distance_metric(
                    distance(env.self_pos, beacon.position),
                    params.max_radio_range,
                );
                let utility = scf_utility(d, env.own_cbr.clamp(0.0, 1.0))
                    .expect("metric and CBR are clamped into [0, 1]");
                for (burst, data_id) in missing.into_iter().enumerate() {
                    let delay =
                        scf_slot_delay(burst, utility, params.slot_time) + sched.access_delay();
                    let handle = sched.schedule_data_fire(data_id, FireKind::Scf, delay);
                    self.scf_pending.insert(data_id, handle);
                    sched.record(Decision::ScheduledScf {
                        data_id,
                        burst,
                        fire_at: now + delay,
                    });
                }
            }
        }
        true
    }

    /// Handles a decoded data frame. A first reception stores the
    /// message and, when this vehicle appears in the priority list at
    /// rank R, schedules a rebroadcast R slots out; duplicates run echo
    /// cancellation instead. Either way the SCF role is re-evaluated
    /// against the new forwarding evidence.
    pub fn on_receive_data(&mut self, env: &ProtoEnv, sched: &mut impl Scheduler, msg: &DataMessage) {
        let params = env.params;
        let now = sched.now();
        self.expire_neighbors(now, params.beacon_lifetime);

        // The forwarder evidently holds the message.
        if let Some(entry) = self.neighbors.get_mut(&msg.sender_id) {
            entry.known_ids.insert(msg.data_id, KnownState::Confirmed);
        }

        if self.store.contains_key(&msg.data_id) {
            self.on_echo(env, sched, msg);
            return;
        }
        self.store.insert(
            msg.data_id,
            StoredMessage {
                originator_id: msg.originator_id,
                originator_pos: msg.originator_pos,
                received_at: now,
            },
        );
        self.receipt_order.push_back(msg.data_id);
        if let Some(rank) = msg.priority_list.iter().position(|&v| v == self.id) {
            let delay = slot_delay(rank, params.slot_time) + sched.access_delay();
            let handle = sched.schedule_data_fire(msg.data_id, FireKind::PrioritySlot, delay);
            self.pending.insert(
                msg.data_id,
                PendingSlot {
                    handle,
                    from_pos: msg.sender_pos,
                },
            );
            sched.record(Decision::ScheduledSlot {
                data_id: msg.data_id,
                rank,
                fire_at: now + delay,
            });
        }

        // Role evaluation runs against fresh forwarding evidence only: a
        // carrier deep in a coverage gap keeps its breaker role when a
        // relay echo arrives from ahead.
        if self.infrastructure {
            return;
        }
        if is_coordinator(env.self_pos, env.map, params.coordinator_radius) {
            self.scf_role = ScfRole::Coordinator;
        } else {
            let live: Vec<&NeighborEntry> = self.neighbors.values().collect();
            self.scf_role = if is_breaker(env.self_pos, env.self_heading, msg.sender_pos, &live) {
                ScfRole::Breaker
            } else {
                ScfRole::None
            };
        }
    }

    /// Echo handling for a duplicate data id: a pending SCF transmission
    /// is always cancelled; a pending priority-slot rebroadcast is
    /// cancelled per the suppression policy (by default only when the
    /// echoing forwarder covers this vehicle's own direction relative to
    /// the sender that scheduled it).
    fn on_echo(&mut self, env: &ProtoEnv, sched: &mut impl Scheduler, msg: &DataMessage) {
        if let Some(handle) = self.scf_pending.remove(&msg.data_id) {
            sched.cancel(handle);
            sched.record(Decision::CancelledScf {
                data_id: msg.data_id,
            });
        }
        let cancel_slot = match self.pending.get(&msg.data_id) {
            None => false,
            Some(slot) => match env.params.suppression {
                SuppressionPolicy::AnyDuplicate => true,
                SuppressionPolicy::SameCluster => {
                    let to_self = env.self_pos - slot.from_pos;
                    let to_echo = msg.sender_pos - slot.from_pos;
                    match angle_between(to_self, to_echo) {
                        Ok(angle) => angle < env.params.cluster_angle,
                        // Degenerate geometry gives no same-direction
                        // evidence; keep the slot.
                        Err(_) => false,
                    }
                }
            },
        };
        if cancel_slot {
            let slot = self.pending.remove(&msg.data_id).expect("checked above");
            sched.cancel(slot.handle);
            sched.record(Decision::CancelledSlot {
                data_id: msg.data_id,
            });
        }
    }

    /// Fires a scheduled transmission: consumes the pending entry and
    /// rebuilds the header against the current neighbor table, with this
    /// vehicle as sender. Returns None when the schedule was already
    /// consumed or cancelled out from under the timer.
    pub fn on_data_fire(
        &mut self,
        env: &ProtoEnv,
        sched: &mut impl Scheduler,
        data_id: DataId,
        kind: FireKind,
    ) -> Option<DataMessage> {
        let armed = match kind {
            FireKind::PrioritySlot => self.pending.remove(&data_id).is_some(),
            FireKind::Scf => self.scf_pending.remove(&data_id).is_some(),
        };
        if !armed || !self.store.contains_key(&data_id) {
            return None;
        }
        let now = sched.now();
        self.expire_neighbors(now, env.params.beacon_lifetime);
        // The broadcast is about to reach the current neighborhood; count
        // a push attempt toward everyone so later beacons whose capped
        // advertisement omits the id do not trigger endless repeats. An
        // attempt is not a confirmation: a collided push may be retried
        // once before the pair is given up to other agents.
        for entry in self.neighbors.values_mut() {
            let state = match entry.known_ids.get(&data_id) {
                Some(KnownState::Confirmed) => KnownState::Confirmed,
                Some(KnownState::Pushed(n)) => KnownState::Pushed(n.saturating_add(1)),
                None => KnownState::Pushed(1),
            };
            entry.known_ids.insert(data_id, state);
        }
        Some(self.build_header(env, data_id))
    }

    /// Swaps the pending timer handle after the host deferred a fire
    /// (e.g. listen-before-talk found the channel busy).
    pub fn rearm(&mut self, data_id: DataId, kind: FireKind, handle: EventHandle) {
        match kind {
            FireKind::PrioritySlot => {
                if let Some(slot) = self.pending.get_mut(&data_id) {
                    slot.handle = handle;
                }
            }
            FireKind::Scf => {
                if let Some(h) = self.scf_pending.get_mut(&data_id) {
                    *h = handle;
                }
            }
        }
    }


    /// Originates a brand-new message from this node.
    pub fn originate(&mut self, env: &ProtoEnv, now: SimTime, data_id: DataId) -> DataMessage {
        self.expire_neighbors(now, env.params.beacon_lifetime);
        self.store.insert(
            data_id,
            StoredMessage {
                originator_id: self.id,
                originator_pos: env.self_pos,
                received_at: now,
            },
        );
        self.receipt_order.push_back(data_id);
        self.build_header(env, data_id)
    }

    fn build_header(&self, env: &ProtoEnv, data_id: DataId) -> DataMessage {
        let stored = &self.store[&data_id];
        let live: Vec<&NeighborEntry> = self.neighbors.values().collect();
        let clusters = classify_clusters(env.self_pos, &live, env.params.cluster_angle);
        let priority_list = build_priority_list(
            env.self_pos,
            &live,
            &clusters,
            env.params.max_neighbor,
            env.params.max_radio_range,
        );
        DataMessage {
            data_id,
            originator_id: stored.originator_id,
            sender_id: self.id,
            originator_pos: stored.originator_pos,
            sender_pos: env.self_pos,
            priority_list,
        }
    }

    /// Builds the periodic status beacon: live neighbor count, measured
    /// CBR, and the most recently received message ids up to the cap.
    pub fn emit_beacon(&mut self, env: &ProtoEnv, now: SimTime) -> Beacon {
        self.expire_neighbors(now, env.params.beacon_lifetime);
        self.beacon_seq += 1;
        let skip = self
            .receipt_order
            .len()
            .saturating_sub(env.params.msg_list_cap);
        Beacon {
            beacon_id: self.beacon_seq,
            sender_id: self.id,
            position: env.self_pos,
            direction: env.self_heading,
            neighbor_count: self.neighbors.len() as u32,
            cbr: env.own_cbr.clamp(0.0, 1.0),
            message_list: self.receipt_order.iter().skip(skip).copied().collect(),
        }
    }

    /// Tears down every pending timer, e.g. when the vehicle leaves the
    /// simulation.
    pub fn cancel_all(&mut self, sched: &mut impl Scheduler) {
        for (_, slot) in std::mem::take(&mut self.pending) {
            sched.cancel(slot.handle);
        }
        for (_, handle) in std::mem::take(&mut self.scf_pending) {
            sched.cancel(handle);
        }
    }
}

/// Scripted scheduler for protocol unit tests: fixed access delay,
/// records everything.
#[cfg(test)]
pub(crate) struct MockSched {
    pub(crate) now: SimTime,
    pub(crate) access: SimTime,
    pub(crate) next_handle: u64,
    pub(crate) scheduled: Vec<(EventHandle, DataId, FireKind, SimTime)>,
    pub(crate) cancelled: Vec<EventHandle>,
    pub(crate) decisions: Vec<Decision>,
}

#[cfg(test)]
impl MockSched {
    pub(crate) fn at(now: SimTime) -> Self {
        MockSched {
            now,
            access: SimTime::ZERO,
            next_handle: 0,
            scheduled: Vec::new(),
            cancelled: Vec::new(),
            decisions: Vec::new(),
        }
    }
}

#[cfg(test)]
impl Scheduler for MockSched {
    fn now(&self) -> SimTime {
        self.now
    }
    fn schedule_data_fire(
        &mut self,
        data_id: DataId,
        kind: FireKind,
        delay: SimTime,
    ) -> EventHandle {
        let h = EventHandle::from_raw(self.next_handle);
        self.next_handle += 1;
        self.scheduled.push((h, data_id, kind, self.now + delay));
        h
    }
    fn cancel(&mut self, handle: EventHandle) -> bool {
        self.cancelled.push(handle);
        true
    }
    fn access_delay(&mut self) -> SimTime {
        self.access
    }
    fn jitter(&mut self, _max: SimTime) -> SimTime {
        SimTime::ZERO
    }
    fn record(&mut self, decision: Decision) {
        self.decisions.push(decision);
    }
}
