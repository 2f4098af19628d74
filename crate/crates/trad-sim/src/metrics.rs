//! Run instrumentation and the evaluation quantities: delivery ratio,
//! transmission counts, delay statistics, and coverage over time. Every
//! metric is a pure function of the event log, so a report recomputed
//! from a persisted trace matches the live one exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::ident::{DataId, VehicleId};
use crate::radio::FrameKind;
use crate::simcore::SimTime;
use crate::trad::Decision;

/// One transmission: counts are finalized as deliveries resolve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxRecord {
    pub time: SimTime,
    pub sender: VehicleId,
    pub kind: FrameKind,
    pub data_id: Option<DataId>,
    pub delivered: u32,
    pub collided: u32,
}

/// First reception of a message by a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceptionRecord {
    pub data_id: DataId,
    pub receiver: VehicleId,
    pub time: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origination {
    pub data_id: DataId,
    pub source: VehicleId,
    pub time: SimTime,
}

/// Activity window of a node. Fixed nodes are excluded from coverage
/// and urban delivery-ratio populations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: VehicleId,
    pub mobile: bool,
    pub activated: SimTime,
    pub deactivated: Option<SimTime>,
}

/// Complete record of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub tx: Vec<TxRecord>,
    pub receptions: Vec<ReceptionRecord>,
    pub originations: Vec<Origination>,
    pub nodes: Vec<NodeRecord>,
    pub run_end: SimTime,
    pub malformed_beacons: u64,
}

/// How the delivery ratio is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Every mobile vehicle whose lifetime overlaps a message's window
    /// counts toward that message's audience.
    Urban,
    /// Only arrival at the fixed east-end receiver counts.
    Highway { receiver: VehicleId },
}

impl EventLog {
    fn window_end(&self, n: &NodeRecord) -> SimTime {
        n.deactivated.unwrap_or(self.run_end)
    }

    /// Data-frame transmissions (beacons are reported separately).
    pub fn count_data_transmissions(&self) -> u64 {
        self.tx.iter().filter(|t| t.kind == FrameKind::Data).count() as u64
    }

    pub fn count_beacon_transmissions(&self) -> u64 {
        self.tx
            .iter()
            .filter(|t| t.kind == FrameKind::Beacon)
            .count() as u64
    }

    /// Receiver-side losses to collisions, all frame kinds.
    pub fn count_collisions(&self) -> u64 {
        self.tx.iter().map(|t| t.collided as u64).sum()
    }

    /// Packet delivery ratio. Urban: mean over messages of informed
    /// eligible vehicles over eligible vehicles, where a vehicle is
    /// eligible when active at any point between origination and run
    /// end. Highway: fraction of originated messages collected by the
    /// fixed receiver. None when no message had an audience.
    pub fn compute_pdr(&self, kind: ScenarioKind) -> Option<f64> {
        if self.originations.is_empty() {
            return None;
        }
        match kind {
            ScenarioKind::Highway { receiver } => {
                let received: BTreeSet<DataId> = self
                    .receptions
                    .iter()
                    .filter(|r| r.receiver == receiver)
                    .map(|r| r.data_id)
                    .collect();
                Some(received.len() as f64 / self.originations.len() as f64)
            }
            ScenarioKind::Urban => {
                let mut informed: BTreeMap<DataId, BTreeSet<VehicleId>> = BTreeMap::new();
                for r in &self.receptions {
                    informed.entry(r.data_id).or_default().insert(r.receiver);
                }
                let mut ratios = Vec::new();
                for origination in &self.originations {
                    let audience: Vec<VehicleId> = self
                        .nodes
                        .iter()
                        .filter(|n| n.mobile && self.window_end(n) >= origination.time)
                        .map(|n| n.id)
                        .collect();
                    if audience.is_empty() {
                        continue;
                    }
                    let got = informed.get(&origination.data_id);
                    let hit = audience
                        .iter()
                        .filter(|v| got.map(|s| s.contains(v)).unwrap_or(false))
                        .count();
                    ratios.push(hit as f64 / audience.len() as f64);
                }
                if ratios.is_empty() {
                    None
                } else {
                    Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
                }
            }
        }
    }

    /// Mean and 95th-percentile first-reception delay over all
    /// (message, receiver) pairs. Unreceived pairs contribute nothing;
    /// they show up in the delivery ratio instead.
    pub fn compute_delay(&self) -> Option<(f64, f64)> {
        let origination: BTreeMap<DataId, SimTime> = self
            .originations
            .iter()
            .map(|o| (o.data_id, o.time))
            .collect();
        let mut delays: Vec<f64> = self
            .receptions
            .iter()
            .filter_map(|r| {
                origination
                    .get(&r.data_id)
                    .map(|&t0| (r.time - t0).as_secs_f64())
            })
            .collect();
        if delays.is_empty() {
            return None;
        }
        delays.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = delays.iter().sum::<f64>() / delays.len() as f64;
        let rank = ((delays.len() as f64) * 0.95).ceil() as usize;
        let p95 = delays[rank.saturating_sub(1)];
        Some((mean, p95))
    }

    /// Fraction of currently active mobile vehicles informed of
    /// `data_id`, sampled every `sample_period` from origination to run
    /// end. Samples with an empty population are skipped.
    pub fn coverage_curve(&self, data_id: DataId, sample_period: SimTime) -> Vec<(SimTime, f64)> {
        let Some(origination) = self
            .originations
            .iter()
            .find(|o| o.data_id == data_id)
            .map(|o| o.time)
        else {
            return Vec::new();
        };
        let first_rx: BTreeMap<VehicleId, SimTime> = self
            .receptions
            .iter()
            .filter(|r| r.data_id == data_id)
            .map(|r| (r.receiver, r.time))
            .collect();
        let mut curve = Vec::new();
        let mut t = origination;
        loop {
            let mut active = 0u64;
            let mut covered = 0u64;
            for n in &self.nodes {
                if !n.mobile || n.activated > t || self.window_end(n) < t {
                    continue;
                }
                active += 1;
                if first_rx.get(&n.id).map(|&rx| rx <= t).unwrap_or(false) {
                    covered += 1;
                }
            }
            if active > 0 {
                curve.push((t, covered as f64 / active as f64));
            }
            if t >= self.run_end {
                break;
            }
            t = (t + sample_period).min(self.run_end);
        }
        curve
    }
}

/// Per-run metrics in fixed column order, plus the coverage curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub messages: u64,
    pub pdr: Option<f64>,
    pub data_tx: u64,
    pub beacon_tx: u64,
    pub mean_delay_s: Option<f64>,
    pub p95_delay_s: Option<f64>,
    pub collisions: u64,
    pub coverage: Vec<(DataId, Vec<(SimTime, f64)>)>,
}

impl Report {
    pub fn compute(log: &EventLog, kind: ScenarioKind, sample_period: SimTime, seed: u64) -> Report {
        let delay = log.compute_delay();
        Report {
            seed,
            messages: log.originations.len() as u64,
            pdr: log.compute_pdr(kind),
            data_tx: log.count_data_transmissions(),
            beacon_tx: log.count_beacon_transmissions(),
            mean_delay_s: delay.map(|d| d.0),
            p95_delay_s: delay.map(|d| d.1),
            collisions: log.count_collisions(),
            coverage: log
                .originations
                .iter()
                .map(|o| (o.data_id, log.coverage_curve(o.data_id, sample_period)))
                .collect(),
        }
    }

    /// Time from origination until coverage first reaches `threshold`,
    /// for the given message.
    pub fn time_to_coverage(&self, data_id: DataId, threshold: f64) -> Option<SimTime> {
        let curve = &self.coverage.iter().find(|(id, _)| *id == data_id)?.1;
        let start = curve.first()?.0;
        curve
            .iter()
            .find(|(_, frac)| *frac >= threshold)
            .map(|(t, _)| *t - start)
    }

    pub fn max_coverage(&self, data_id: DataId) -> Option<f64> {
        let curve = &self.coverage.iter().find(|(id, _)| *id == data_id)?.1;
        curve
            .iter()
            .map(|(_, f)| *f)
            .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))))
    }
}

// ---------------------------------------------------------------------
// Trace persistence: one plain CSV with a record-kind discriminator, so
// a run can be replayed into identical metrics.
// ---------------------------------------------------------------------

const TRACE_HEADER: &str = "record,time_us,node,kind,data_id,a,b";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn opt_id(id: Option<DataId>) -> String {
    id.map(|d| d.to_string()).unwrap_or_else(|| "-".into())
}

/// A protocol decision stamped with its owner and time, as traced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRecord {
    pub time: SimTime,
    pub node: VehicleId,
    pub decision: Decision,
}

pub fn trace_to_string(log: &EventLog, decisions: &[DecisionRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TRACE_HEADER}");
    let _ = writeln!(
        out,
        "meta,{},-,run,-,{},-",
        log.run_end.as_micros(),
        log.malformed_beacons
    );
    for n in &log.nodes {
        let _ = writeln!(
            out,
            "node,{},{},{},-,{},-",
            n.activated.as_micros(),
            n.id,
            if n.mobile { "mobile" } else { "fixed" },
            n.deactivated
                .map(|t| t.as_micros().to_string())
                .unwrap_or_else(|| "-".into()),
        );
    }
    for o in &log.originations {
        let _ = writeln!(
            out,
            "orig,{},{},data,{},-,-",
            o.time.as_micros(),
            o.source,
            o.data_id
        );
    }
    for t in &log.tx {
        let _ = writeln!(
            out,
            "tx,{},{},{},{},{},{}",
            t.time.as_micros(),
            t.sender,
            match t.kind {
                FrameKind::Beacon => "beacon",
                FrameKind::Data => "data",
            },
            opt_id(t.data_id),
            t.delivered,
            t.collided
        );
    }
    for r in &log.receptions {
        let _ = writeln!(
            out,
            "rx,{},{},data,{},-,-",
            r.time.as_micros(),
            r.receiver,
            r.data_id
        );
    }
    for d in &decisions.iter().collect::<Vec<_>>() {
        let (cause, data_id, a, b) = match d.decision {
            Decision::ScheduledSlot { data_id, rank, fire_at } => (
                "priority-slot",
                data_id,
                rank.to_string(),
                fire_at.as_micros().to_string(),
            ),
            Decision::ScheduledScf { data_id, burst, fire_at } => (
                "scf-request",
                data_id,
                burst.to_string(),
                fire_at.as_micros().to_string(),
            ),
            Decision::CancelledSlot { data_id } => {
                ("echo-cancel", data_id, "slot".into(), "-".into())
            }
            Decision::CancelledScf { data_id } => {
                ("echo-cancel", data_id, "scf".into(), "-".into())
            }
        };
        let _ = writeln!(
            out,
            "decision,{},{},{cause},{data_id},{a},{b}",
            d.time.as_micros(),
            d.node
        );
    }
    out
}

pub fn write_trace(
    log: &EventLog,
    decisions: &[DecisionRecord],
    path: &Path,
) -> Result<(), TraceError> {
    fs::write(path, trace_to_string(log, decisions))?;
    Ok(())
}

/// Reads the metric-bearing rows of a trace back into an event log.
/// Decision rows are conformance metadata and are skipped.
pub fn read_trace(path: &Path) -> Result<EventLog, TraceError> {
    trace_from_str(&fs::read_to_string(path)?)
}

pub fn trace_from_str(text: &str) -> Result<EventLog, TraceError> {
    let mut log = EventLog::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 || raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 7 {
            return Err(TraceError::Parse {
                line: line_no,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let parse_u64 = |tok: &str| -> Result<u64, TraceError> {
            tok.parse().map_err(|_| TraceError::Parse {
                line: line_no,
                message: format!("invalid integer `{tok}`"),
            })
        };
        let time = SimTime::from_micros(parse_u64(fields[1])?);
        match fields[0] {
            "meta" => {
                log.run_end = time;
                log.malformed_beacons = parse_u64(fields[5])?;
            }
            "node" => {
                log.nodes.push(NodeRecord {
                    id: VehicleId(parse_u64(fields[2])? as u32),
                    mobile: fields[3] == "mobile",
                    activated: time,
                    deactivated: if fields[5] == "-" {
                        None
                    } else {
                        Some(SimTime::from_micros(parse_u64(fields[5])?))
                    },
                });
            }
            "orig" => {
                log.originations.push(Origination {
                    data_id: DataId(parse_u64(fields[4])?),
                    source: VehicleId(parse_u64(fields[2])? as u32),
                    time,
                });
            }
            "tx" => {
                log.tx.push(TxRecord {
                    time,
                    sender: VehicleId(parse_u64(fields[2])? as u32),
                    kind: if fields[3] == "beacon" {
                        FrameKind::Beacon
                    } else {
                        FrameKind::Data
                    },
                    data_id: if fields[4] == "-" {
                        None
                    } else {
                        Some(DataId(parse_u64(fields[4])?))
                    },
                    delivered: parse_u64(fields[5])? as u32,
                    collided: parse_u64(fields[6])? as u32,
                });
            }
            "rx" => {
                log.receptions.push(ReceptionRecord {
                    data_id: DataId(parse_u64(fields[4])?),
                    receiver: VehicleId(parse_u64(fields[2])? as u32),
                    time,
                });
            }
            "decision" => {}
            other => {
                return Err(TraceError::Parse {
                    line: line_no,
                    message: format!("unknown record `{other}`"),
                });
            }
        }
    }
    Ok(log)
}
