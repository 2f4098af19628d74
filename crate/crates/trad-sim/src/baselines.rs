//! Reference dissemination protocols sharing the radio and mobility
//! substrate: blind flooding as the cost ceiling, and slotted
//! 1-persistence as the classical distance-slotted suppression scheme.
//! Neither carries messages across network partitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::{distance, Vec2};
use crate::ident::{DataId, VehicleId};
use crate::simcore::{EventHandle, SimTime};
use crate::trad::{DataMessage, FireKind, Scheduler};

/// Flooding: every node rebroadcasts each message exactly once after a
/// short random jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloodingParams {
    pub jitter_max: SimTime,
}

impl Default for FloodingParams {
    fn default() -> Self {
        FloodingParams {
            jitter_max: SimTime::from_millis(10),
        }
    }
}

/// Slotted 1-persistence: farther receivers rebroadcast in earlier
/// slots; overhearing any duplicate before the slot cancels it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slotted1pParams {
    pub num_slots: u32,
    pub slot_len: SimTime,
    pub max_range: f64,
}

impl Default for Slotted1pParams {
    fn default() -> Self {
        Slotted1pParams {
            num_slots: 5,
            slot_len: SimTime::from_millis(5),
            max_range: 366.0,
        }
    }
}

/// Slot delay for a receiver at the given distance from the sender:
/// slot index floor(N * (1 - min(d / max_range, 1))) clamped to
/// [0, N - 1], times the slot length. The farthest receivers forward
/// first.
pub fn slotted_1p_delay(dist_to_sender: f64, params: &Slotted1pParams) -> SimTime {
    debug_assert!(dist_to_sender >= 0.0);
    let closeness = 1.0 - (dist_to_sender / params.max_range).min(1.0);
    let slot = ((params.num_slots as f64 * closeness) as u32).min(params.num_slots - 1);
    params.slot_len * slot as u64
}

struct StoredOrigin {
    originator_id: VehicleId,
    originator_pos: Vec2,
}

fn bare_header(id: VehicleId, self_pos: Vec2, data_id: DataId, origin: &StoredOrigin) -> DataMessage {
    DataMessage {
        data_id,
        originator_id: origin.originator_id,
        sender_id: id,
        originator_pos: origin.originator_pos,
        sender_pos: self_pos,
        priority_list: Vec::new(),
    }
}

/// Per-vehicle flooding state.
pub struct FloodingState {
    id: VehicleId,
    params: FloodingParams,
    store: BTreeMap<DataId, StoredOrigin>,
    pending: BTreeMap<DataId, EventHandle>,
}

impl FloodingState {
    pub fn new(id: VehicleId, params: FloodingParams) -> Self {
        FloodingState {
            id,
            params,
            store: BTreeMap::new(),
            pending: BTreeMap::new(),
        }
    }

    pub fn has_message(&self, id: DataId) -> bool {
        self.store.contains_key(&id)
    }

    /// First reception schedules one rebroadcast; duplicates are ignored.
    pub fn on_receive_data(&mut self, sched: &mut impl Scheduler, msg: &DataMessage) {
        if self.store.contains_key(&msg.data_id) {
            return;
        }
        self.store.insert(
            msg.data_id,
            StoredOrigin {
                originator_id: msg.originator_id,
                originator_pos: msg.originator_pos,
            },
        );
        let delay = sched.jitter(self.params.jitter_max) + sched.access_delay();
        let handle = sched.schedule_data_fire(msg.data_id, FireKind::PrioritySlot, delay);
        self.pending.insert(msg.data_id, handle);
    }

    pub fn on_data_fire(&mut self, self_pos: Vec2, data_id: DataId) -> Option<DataMessage> {
        self.pending.remove(&data_id)?;
        let origin = self.store.get(&data_id)?;
        Some(bare_header(self.id, self_pos, data_id, origin))
    }

    pub fn originate(&mut self, self_pos: Vec2, data_id: DataId) -> DataMessage {
        self.store.insert(
            data_id,
            StoredOrigin {
                originator_id: self.id,
                originator_pos: self_pos,
            },
        );
        bare_header(self.id, self_pos, data_id, &self.store[&data_id])
    }

    /// Swaps the pending handle after a deferred fire.
    pub fn rearm(&mut self, data_id: DataId, handle: EventHandle) {
        if let Some(h) = self.pending.get_mut(&data_id) {
            *h = handle;
        }
    }

    pub fn cancel_all(&mut self, sched: &mut impl Scheduler) {
        for (_, handle) in std::mem::take(&mut self.pending) {
            sched.cancel(handle);
        }
    }
}

/// Per-vehicle slotted 1-persistence state.
pub struct SlottedState {
    id: VehicleId,
    params: Slotted1pParams,
    store: BTreeMap<DataId, StoredOrigin>,
    pending: BTreeMap<DataId, EventHandle>,
}

impl SlottedState {
    pub fn new(id: VehicleId, params: Slotted1pParams) -> Self {
        SlottedState {
            id,
            params,
            store: BTreeMap::new(),
            pending: BTreeMap::new(),
        }
    }

    pub fn has_message(&self, id: DataId) -> bool {
        self.store.contains_key(&id)
    }

    /// First reception schedules a distance-slotted rebroadcast; any
    /// duplicate heard before the slot fires cancels it.
    pub fn on_receive_data(
        &mut self,
        sched: &mut impl Scheduler,
        self_pos: Vec2,
        msg: &DataMessage,
    ) {
        if self.store.contains_key(&msg.data_id) {
            if let Some(handle) = self.pending.remove(&msg.data_id) {
                sched.cancel(handle);
            }
            return;
        }
        self.store.insert(
            msg.data_id,
            StoredOrigin {
                originator_id: msg.originator_id,
                originator_pos: msg.originator_pos,
            },
        );
        let dist = distance(self_pos, msg.sender_pos);
        let delay = slotted_1p_delay(dist, &self.params) + sched.access_delay();
        let handle = sched.schedule_data_fire(msg.data_id, FireKind::PrioritySlot, delay);
        self.pending.insert(msg.data_id, handle);
    }

    pub fn on_data_fire(&mut self, self_pos: Vec2, data_id: DataId) -> Option<DataMessage> {
        self.pending.remove(&data_id)?;
        let origin = self.store.get(&data_id)?;
        Some(bare_header(self.id, self_pos, data_id, origin))
    }

    pub fn originate(&mut self, self_pos: Vec2, data_id: DataId) -> DataMessage {
        self.store.insert(
            data_id,
            StoredOrigin {
                originator_id: self.id,
                originator_pos: self_pos,
            },
        );
        bare_header(self.id, self_pos, data_id, &self.store[&data_id])
    }

    /// Swaps the pending handle after a deferred fire.
    pub fn rearm(&mut self, data_id: DataId, handle: EventHandle) {
        if let Some(h) = self.pending.get_mut(&data_id) {
            *h = handle;
        }
    }

    pub fn cancel_all(&mut self, sched: &mut impl Scheduler) {
        for (_, handle) in std::mem::take(&mut self.pending) {
            sched.cancel(handle);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trad::MockSched;

    fn msg(sender: u32, data: u64, sender_pos: Vec2) -> DataMessage {
        DataMessage {
            data_id: DataId(data),
            originator_id: VehicleId(0),
            sender_id: VehicleId(sender),
            originator_pos: Vec2::new(0.0, 0.0),
            sender_pos,
            priority_list: Vec::new(),
        }
    }

    #[test]
    fn slotted_delay_boundaries() {
        let p = Slotted1pParams::default();
        // Farthest receivers take slot 0.
        assert_eq!(slotted_1p_delay(366.0, &p), SimTime::ZERO);
        assert_eq!(slotted_1p_delay(500.0, &p), SimTime::ZERO);
        // Co-located receivers take the last slot.
        assert_eq!(slotted_1p_delay(0.0, &p), SimTime::from_millis(20));
        // Halfway: slot 2 of 5 ms.
        assert_eq!(slotted_1p_delay(183.0, &p), SimTime::from_millis(10));
    }

    #[test]
    fn slotted_delay_is_non_increasing_in_distance() {
        let p = Slotted1pParams::default();
        let mut last = SimTime::from_secs(1);
        for step in 0..=400 {
            let d = slotted_1p_delay(step as f64, &p);
            assert!(d <= last, "delay grew at {step} m");
            last = d;
        }
    }

    #[test]
    fn flooding_forwards_once_and_ignores_duplicates() {
        let mut sched = MockSched::at(SimTime::from_secs(1));
        let mut state = FloodingState::new(VehicleId(5), FloodingParams::default());
        state.on_receive_data(&mut sched, &msg(1, 7, Vec2::new(0.0, 0.0)));
        assert_eq!(sched.scheduled.len(), 1);
        // Duplicate: no new schedule, no cancellation either.
        state.on_receive_data(&mut sched, &msg(2, 7, Vec2::new(50.0, 0.0)));
        assert_eq!(sched.scheduled.len(), 1);
        assert!(sched.cancelled.is_empty());
        let out = state
            .on_data_fire(Vec2::new(10.0, 0.0), DataId(7))
            .expect("armed");
        assert_eq!(out.sender_id, VehicleId(5));
        assert!(out.priority_list.is_empty());
        // Second fire finds nothing armed.
        assert!(state.on_data_fire(Vec2::new(10.0, 0.0), DataId(7)).is_none());
    }

    #[test]
    fn slotted_cancels_on_any_duplicate_before_the_slot() {
        let mut sched = MockSched::at(SimTime::from_secs(1));
        let mut state = SlottedState::new(VehicleId(5), Slotted1pParams::default());
        let me = Vec2::new(100.0, 0.0);
        state.on_receive_data(&mut sched, me, &msg(1, 7, Vec2::new(0.0, 0.0)));
        assert_eq!(sched.scheduled.len(), 1);
        state.on_receive_data(&mut sched, me, &msg(2, 7, Vec2::new(250.0, 0.0)));
        assert_eq!(sched.cancelled.len(), 1);
        assert!(state.on_data_fire(me, DataId(7)).is_none(), "cancelled");
    }

    #[test]
    fn slotted_schedules_by_distance() {
        let mut sched = MockSched::at(SimTime::from_secs(1));
        let mut state = SlottedState::new(VehicleId(5), Slotted1pParams::default());
        state.on_receive_data(&mut sched, Vec2::new(360.0, 0.0), &msg(1, 7, Vec2::new(0.0, 0.0)));
        let (_, _, _, fire_at) = sched.scheduled[0];
        assert_eq!(fire_at, SimTime::from_secs(1), "far receiver fires slot 0");
    }
}
