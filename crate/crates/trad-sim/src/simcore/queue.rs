use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use super::SimTime;

/// Identifies a scheduled event so it can be cancelled later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

impl EventHandle {
    /// Raw constructor for scheduler test doubles.
    #[cfg(test)]
    pub(crate) const fn from_raw(raw: u64) -> EventHandle {
        EventHandle(raw)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("cannot schedule at {requested} before current clock {clock}")]
    InPast { requested: SimTime, clock: SimTime },
}

struct Entry<E> {
    fire_time: SimTime,
    sequence: u64,
    handle: EventHandle,
    payload: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_time == other.fire_time && self.sequence == other.sequence
    }
}
impl<E> Eq for Entry<E> {}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the BinaryHeap pops the earliest (time, sequence) first.
        (other.fire_time, other.sequence).cmp(&(self.fire_time, self.sequence))
    }
}
impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time-ordered event queue with cancellable entries.
///
/// Events dequeue in nondecreasing fire-time order; ties break by
/// insertion sequence. Cancelled events are skipped on pop.
pub struct EventQueue<E> {
    clock: SimTime,
    heap: BinaryHeap<Entry<E>>,
    pending: HashSet<EventHandle>,
    next_sequence: u64,
    next_handle: u64,
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            clock: SimTime::ZERO,
            heap: BinaryHeap::new(),
            pending: HashSet::new(),
            next_sequence: 0,
            next_handle: 0,
        }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn schedule(&mut self, fire_time: SimTime, payload: E) -> Result<EventHandle, ScheduleError> {
        if fire_time < self.clock {
            return Err(ScheduleError::InPast {
                requested: fire_time,
                clock: self.clock,
            });
        }
        let handle = EventHandle(self.next_handle);
        self.next_handle += 1;
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Entry {
            fire_time,
            sequence,
            handle,
            payload,
        });
        self.pending.insert(handle);
        Ok(handle)
    }

    /// Schedules relative to the current clock; always valid.
    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> EventHandle {
        self.schedule(self.clock + delay, payload)
            .expect("clock + delay is never in the past")
    }

    /// Returns true if the event was still pending. Idempotent.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&handle)
    }

    pub fn is_pending(&self, handle: EventHandle) -> bool {
        self.pending.contains(&handle)
    }

    /// Pops the next live event with fire_time <= until, advancing the
    /// clock to its fire time. Returns None once the queue holds nothing
    /// due before `until` (the clock is then left untouched; callers that
    /// finish a run should use [`EventQueue::run`] which settles the clock
    /// at `until`).
    pub fn pop_next(&mut self, until: SimTime) -> Option<(SimTime, E)> {
        loop {
            let due = match self.heap.peek() {
                Some(entry) if entry.fire_time <= until => true,
                _ => false,
            };
            if !due {
                return None;
            }
            let entry = self.heap.pop().expect("peeked entry exists");
            if self.pending.remove(&entry.handle) {
                debug_assert!(entry.fire_time >= self.clock, "clock must not run backwards");
                self.clock = entry.fire_time;
                return Some((entry.fire_time, entry.payload));
            }
        }
    }

    /// Fires every event due at or before `until` in order, leaving the
    /// clock at `until`. Handlers may schedule and cancel freely; child
    /// events due before `until` fire within the same call. Returns the
    /// number of events fired.
    pub fn run(&mut self, until: SimTime, mut handler: impl FnMut(&mut Self, SimTime, E)) -> u64 {
        assert!(until >= self.clock, "run target precedes current clock");
        let mut fired = 0u64;
        while let Some((time, payload)) = self.pop_next(until) {
            handler(self, time, payload);
            fired += 1;
        }
        self.clock = until;
        fired
    }
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}
