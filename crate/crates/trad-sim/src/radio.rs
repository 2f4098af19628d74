//! Broadcast channel model: log-distance path loss with threshold
//! reception, binary building shadowing, frame airtime, randomized
//! CSMA access delay, destructive collisions, and per-node channel
//! busy ratio measurement.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{distance, RoadMap, Vec2};
use crate::ident::VehicleId;
use crate::simcore::{RngStream, SimTime};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical and link-layer constants. Defaults correspond to 802.11p
/// broadcast at 5.89 GHz: 300 mW transmit power, -100 dBm sensitivity,
/// path-loss exponent 3.0 (shadowed urban), 6 Mbit/s, contention window
/// [15, 1023], 13 us slots, 32 us SIFS. The resulting reception range is
/// about 366 m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub sensitivity_dbm: f64,
    pub path_loss_exponent: f64,
    pub frequency_hz: f64,
    pub bitrate_bps: f64,
    pub mac_slot_us: u64,
    pub sifs_us: u64,
    pub cw_min: u64,
    pub cw_max: u64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power_dbm: 24.77,
            sensitivity_dbm: -100.0,
            path_loss_exponent: 3.0,
            frequency_hz: 5.89e9,
            bitrate_bps: 6.0e6,
            mac_slot_us: 13,
            sifs_us: 32,
            cw_min: 15,
            cw_max: 1023,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("received power is undefined at distance {0} m")]
    NonPositiveDistance(f64),
}

/// Fixed per-link constant of the path-loss formula: 20*log10(4*pi/lambda).
fn reference_loss_db(params: &RadioParams) -> f64 {
    let lambda = SPEED_OF_LIGHT / params.frequency_hz;
    20.0 * (4.0 * std::f64::consts::PI / lambda).log10()
}

/// Received power in dBm at the given distance:
/// tx - (20*log10(4*pi/lambda) + 10*alpha*log10(d)).
pub fn received_power(params: &RadioParams, dist: f64) -> Result<f64, RadioError> {
    if dist <= 0.0 {
        return Err(RadioError::NonPositiveDistance(dist));
    }
    let loss = reference_loss_db(params) + 10.0 * params.path_loss_exponent * dist.log10();
    Ok(params.tx_power_dbm - loss)
}

/// Distance at which received power equals the sensitivity threshold.
pub fn threshold_distance(params: &RadioParams) -> f64 {
    let exponent_db = params.tx_power_dbm - params.sensitivity_dbm - reference_loss_db(params);
    10f64.powf(exponent_db / (10.0 * params.path_loss_exponent))
}

/// True when b can decode a's transmission: received power at the
/// separation distance meets the sensitivity threshold and no building
/// blocks the line of sight.
pub fn in_range(params: &RadioParams, map: &RoadMap, a: Vec2, b: Vec2) -> bool {
    let d = distance(a, b);
    if d <= 0.0 {
        return false;
    }
    received_power(params, d).expect("positive distance") >= params.sensitivity_dbm
        && map.line_of_sight(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    Beacon,
    Data,
}

/// Wire frame metadata; payload bodies are carried by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub bytes: u32,
    pub sender: VehicleId,
}

/// Time on air for a frame, rounded to the microsecond.
pub fn airtime(params: &RadioParams, bytes: u32) -> SimTime {
    debug_assert!(bytes > 0, "frames are never empty");
    let micros = (bytes as f64 * 8.0 * 1e6 / params.bitrate_bps).round() as u64;
    SimTime::from_micros(micros)
}

/// Randomized channel-access delay applied before every transmission:
/// SIFS plus a backoff of up to cw_min MAC slots. Decorrelates senders
/// that picked the same protocol slot.
pub fn csma_access_delay(params: &RadioParams, rng: &mut RngStream) -> SimTime {
    let backoff = rng.int_inclusive(params.cw_min);
    SimTime::from_micros(params.sifs_us + params.mac_slot_us * backoff)
}

/// Busy intervals observed by one node's radio, kept long enough to
/// answer queries over the trailing one-second window.
#[derive(Debug, Default, Clone)]
pub struct ActivityLog {
    intervals: VecDeque<(SimTime, SimTime)>,
}

const CBR_WINDOW: SimTime = SimTime::from_secs(1);

impl ActivityLog {
    pub fn add_busy(&mut self, start: SimTime, end: SimTime) {
        debug_assert!(end >= start);
        self.intervals.push_back((start, end));
    }

    /// Channel busy ratio: union length of busy intervals inside
    /// [now - 1 s, now], divided by the window. Overlapping intervals
    /// count once.
    pub fn cbr(&mut self, now: SimTime) -> f64 {
        let window_start = now.saturating_sub(CBR_WINDOW);
        while let Some(&(_, end)) = self.intervals.front() {
            if end < window_start {
                self.intervals.pop_front();
            } else {
                break;
            }
        }
        // Intervals are stored in start order; merge while summing.
        let mut busy = 0u64;
        let mut cursor = window_start;
        for &(start, end) in &self.intervals {
            let s = start.max(cursor).min(now);
            let e = end.min(now);
            if e > s {
                busy += (e - s).as_micros();
                cursor = e;
            }
        }
        (busy as f64 / CBR_WINDOW.as_micros() as f64).clamp(0.0, 1.0)
    }
}

/// One in-flight transmission and its reception bookkeeping.
#[derive(Debug)]
struct ActiveTx {
    tx_id: u64,
    sender: VehicleId,
    origin: Vec2,
    start: SimTime,
    end: SimTime,
    receivers: Vec<VehicleId>,
    lost: BTreeSet<VehicleId>,
}

/// Planned outcome of one broadcast.
#[derive(Debug)]
pub struct Transmission {
    pub tx_id: u64,
    pub end: SimTime,
    /// Every in-range listener; collisions are resolved at delivery time
    /// via [`Channel::was_lost`].
    pub receivers: Vec<VehicleId>,
}

/// Shared-medium state: in-flight transmissions and the per-node
/// activity logs that feed CBR measurement. Owned and mutated by the
/// single-threaded simulation loop.
#[derive(Debug, Default)]
pub struct Channel {
    active: Vec<ActiveTx>,
    logs: BTreeMap<VehicleId, ActivityLog>,
    next_tx_id: u64,
}

impl Channel {
    pub fn new() -> Self {
        Channel::default()
    }

    /// Broadcasts a frame from `origin`. `listeners` holds every other
    /// active node with its current true position; delivery happens at
    /// `now + airtime` except where two overlapping transmissions are
    /// both audible (destructive collision, no capture effect) or the
    /// listener was itself transmitting (half duplex).
    pub fn transmit(
        &mut self,
        now: SimTime,
        params: &RadioParams,
        map: &RoadMap,
        frame: Frame,
        origin: Vec2,
        listeners: &[(VehicleId, Vec2)],
    ) -> Transmission {
        self.active.retain(|tx| tx.end >= now);

        let end = now + airtime(params, frame.bytes);
        let max_range = threshold_distance(params) * 1.000_001;

        let mut receivers = Vec::new();
        for &(id, pos) in listeners {
            if id == frame.sender {
                continue;
            }
            if distance(origin, pos) <= max_range && in_range(params, map, origin, pos) {
                receivers.push(id);
            }
        }

        let tx_id = self.next_tx_id;
        self.next_tx_id += 1;
        let mut lost = BTreeSet::new();

        for other in &mut self.active {
            if other.start >= end || now >= other.end {
                continue;
            }
            for &r in &receivers {
                if r == other.sender {
                    lost.insert(r);
                }
                if other.receivers.contains(&r) {
                    lost.insert(r);
                    other.lost.insert(r);
                }
            }
            if other.receivers.contains(&frame.sender) {
                other.lost.insert(frame.sender);
            }
        }

        // Everyone who senses the frame logs the busy time, sender included.
        self.logs.entry(frame.sender).or_default().add_busy(now, end);
        for &r in &receivers {
            self.logs.entry(r).or_default().add_busy(now, end);
        }

        self.active.push(ActiveTx {
            tx_id,
            sender: frame.sender,
            origin,
            start: now,
            end,
            receivers: receivers.clone(),
            lost,
        });

        Transmission {
            tx_id,
            end,
            receivers,
        }
    }

    /// Carrier sense at a position: the latest end time over in-flight
    /// transmissions audible there, or None when the medium is idle.
    /// Listen-before-talk defers to this instant plus a fresh backoff.
    pub fn busy_until(
        &self,
        now: SimTime,
        params: &RadioParams,
        map: &RoadMap,
        pos: Vec2,
        own: VehicleId,
    ) -> Option<SimTime> {
        let mut latest: Option<SimTime> = None;
        for tx in &self.active {
            if tx.end <= now {
                continue;
            }
            let audible = tx.sender == own
                || (distance(tx.origin, pos) > 0.0 && in_range(params, map, tx.origin, pos));
            if audible {
                latest = Some(latest.map_or(tx.end, |t: SimTime| t.max(tx.end)));
            }
        }
        latest
    }

    /// Whether `receiver` lost the given transmission to a collision.
    /// Valid until the first transmit call after the frame's end time.
    pub fn was_lost(&self, tx_id: u64, receiver: VehicleId) -> bool {
        self.active
            .iter()
            .find(|tx| tx.tx_id == tx_id)
            .map(|tx| tx.lost.contains(&receiver))
            .unwrap_or(false)
    }

    /// Channel busy ratio observed by one node over the trailing second.
    pub fn cbr(&mut self, node: VehicleId, now: SimTime) -> f64 {
        self.logs
            .get_mut(&node)
            .map(|log| log.cbr(now))
            .unwrap_or(0.0)
    }
}
