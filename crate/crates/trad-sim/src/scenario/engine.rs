//! The simulation engine: wires the map, vehicle lifecycle, broadcast
//! channel and per-node protocol state machines into one deterministic
//! event-driven run.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use thiserror::Error;

use crate::baselines::{FloodingParams, FloodingState, Slotted1pParams, SlottedState};
use crate::geo::{
    build_grid_map, build_highway_map, distance, load_map, GridMapParams, HighwayMapParams,
    MapGenError, MapIoError, RoadMap, Vec2, HIGHWAY_EASTBOUND_Y, HIGHWAY_WESTBOUND_Y,
};
use crate::ident::{DataId, VehicleId};
use crate::metrics::{
    DecisionRecord, EventLog, NodeRecord, Origination, ReceptionRecord, Report, ScenarioKind,
    TxRecord,
};
use crate::mobility::{
    departure_schedule, estimate_mean_trip_secs, DepartureProcess, DriftModel, DriftState,
    RouteError, RoutePattern, RoutePlanner, VehicleState,
};
use crate::radio::{csma_access_delay, Channel, Frame, FrameKind, RadioParams};
use crate::simcore::{derive_rng, EventHandle, EventQueue, RngStream, SimTime};
use crate::trad::{
    Beacon, DataMessage, Decision, FireKind, ProtoEnv, ProtocolParams, Scheduler, TradState,
};

use super::config::{MapSpec, ProtocolKind, ScenarioConfig, TrafficPattern};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error("map generation failed: {0}")]
    MapGen(#[from] MapGenError),
    #[error("map file: {0}")]
    MapIo(#[from] MapIoError),
    #[error("route planning failed: {0}")]
    Route(#[from] RouteError),
}

/// Engine events. Frame payloads are kept out of the queue and joined
/// at delivery through the transmission id.
enum Ev {
    Spawn,
    Deactivate { node: usize },
    BeaconTick { node: usize },
    BeaconSend { node: usize },
    SourceEmit,
    SourceSend { data_id: DataId, decided_at: SimTime },
    DataFire { node: usize, data_id: DataId, kind: FireKind },
    Deliver { tx_id: u64, node: usize },
}

enum Payload {
    Beacon(Beacon),
    Data(DataMessage),
}

enum Proto {
    Trad(TradState),
    Flooding(FloodingState),
    Slotted(SlottedState),
}

struct Node {
    /// Counted in coverage and urban delivery populations.
    mobile: bool,
    vehicle: Option<VehicleState>,
    static_pos: Vec2,
    static_heading: Vec2,
    last_update: SimTime,
    active: bool,
    drift: DriftState,
    proto: Proto,
    received: BTreeSet<DataId>,
}

struct PendingTx {
    payload: Rc<Payload>,
    record: usize,
    remaining: u32,
}

/// A parked protocol participant for scripted fixtures.
#[derive(Debug, Clone, Copy)]
pub struct StaticNode {
    pub pos: Vec2,
    pub heading: Vec2,
}

/// Everything a finished run yields.
pub struct RunOutput {
    pub report: Report,
    pub log: EventLog,
    pub decisions: Vec<DecisionRecord>,
}

struct EngineSched<'a> {
    queue: &'a mut EventQueue<Ev>,
    rng: &'a mut RngStream,
    radio: &'a RadioParams,
    node: usize,
    decisions: &'a mut Vec<DecisionRecord>,
}

impl Scheduler for EngineSched<'_> {
    fn now(&self) -> SimTime {
        self.queue.clock()
    }
    fn schedule_data_fire(
        &mut self,
        data_id: DataId,
        kind: FireKind,
        delay: SimTime,
    ) -> EventHandle {
        self.queue.schedule_in(
            delay,
            Ev::DataFire {
                node: self.node,
                data_id,
                kind,
            },
        )
    }
    fn cancel(&mut self, handle: EventHandle) -> bool {
        self.queue.cancel(handle)
    }
    fn access_delay(&mut self) -> SimTime {
        csma_access_delay(self.radio, self.rng)
    }
    fn jitter(&mut self, max: SimTime) -> SimTime {
        let span = max.as_micros();
        if span == 0 {
            SimTime::ZERO
        } else {
            SimTime::from_micros(self.rng.int_inclusive(span - 1))
        }
    }
    fn record(&mut self, decision: Decision) {
        self.decisions.push(DecisionRecord {
            time: self.queue.clock(),
            node: VehicleId(self.node as u32),
            decision,
        });
    }
}

macro_rules! sched {
    ($self:ident, $node:expr) => {
        EngineSched {
            queue: &mut $self.queue,
            rng: &mut $self.rng_jitter,
            radio: &$self.radio,
            node: $node,
            decisions: &mut $self.decisions,
        }
    };
}

pub struct Simulation {
    config: ScenarioConfig,
    seed: u64,
    map: RoadMap,
    radio: RadioParams,
    proto_params: ProtocolParams,
    flooding_params: FloodingParams,
    slotted_params: Slotted1pParams,
    drift_model: DriftModel,
    scenario_kind: ScenarioKind,
    end: SimTime,
    emission_end: SimTime,
    queue: EventQueue<Ev>,
    channel: Channel,
    nodes: Vec<Node>,
    payloads: BTreeMap<u64, PendingTx>,
    log: EventLog,
    decisions: Vec<DecisionRecord>,
    planner: Option<RoutePlanner>,
    rng_routes: RngStream,
    rng_speeds: RngStream,
    rng_drift: RngStream,
    rng_jitter: RngStream,
    rng_prefill: RngStream,
    source: usize,
    emitted: u64,
    mean_trip_secs: f64,
}

impl Simulation {
    /// Builds a full scenario from its configuration: map, fixed
    /// source (and highway receiver), steady-state prefill, and the
    /// departure schedule.
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Simulation, BuildError> {
        config.validate()?;
        let map = match &config.map {
            MapSpec::Grid {
                blocks_x,
                blocks_y,
                block_size_m,
                lanes,
                building_inset_m,
                irregularity,
            } => {
                let params = GridMapParams {
                    blocks_x: *blocks_x,
                    blocks_y: *blocks_y,
                    block_size: *block_size_m,
                    lanes: *lanes,
                    building_inset: *building_inset_m,
                    irregularity: *irregularity,
                };
                build_grid_map(&params, &mut derive_rng(seed, "map-gen"))?
            }
            MapSpec::Highway {
                length_m,
                lanes_per_direction,
            } => build_highway_map(&HighwayMapParams {
                length: *length_m,
                lanes_per_direction: *lanes_per_direction,
            })?,
            MapSpec::File { path } => load_map(std::path::Path::new(path))?,
        };

        let highway = config.is_highway();
        let planner = RoutePlanner::new(&map);
        let patterns: Vec<RoutePattern> = if highway {
            vec![
                RoutePattern::HighwayWestToEast,
                RoutePattern::HighwayEastToWest,
            ]
        } else {
            match config.traffic.pattern {
                TrafficPattern::Uniform => vec![RoutePattern::UniformCrossing],
                TrafficPattern::Confined => vec![
                    RoutePattern::UpperConfined,
                    RoutePattern::LowerConfined,
                ],
            }
        };
        let speeds = if highway {
            config.traffic.highway_speed
        } else {
            config.traffic.urban_speed
        };
        let mean_trip_secs = estimate_mean_trip_secs(
            &planner,
            &patterns,
            config.traffic.route_legs,
            speeds,
            200,
            &mut derive_rng(seed, "trip-estimate"),
        )?;

        let process = if let Some(d) = config.traffic.density_vkm2 {
            DepartureProcess::from_density(d, map.bounds.area_km2(), mean_trip_secs)
        } else {
            DepartureProcess::from_flow(config.traffic.flow_vph.unwrap_or(0.0))
        };

        // Fixed infrastructure: the source sits at the central urban
        // intersection, or at the west end of the highway with the
        // collecting receiver at the east end.
        let center = map.bounds.center();
        let lane_mid = (HIGHWAY_EASTBOUND_Y + HIGHWAY_WESTBOUND_Y) / 2.0;
        let (source_pos, receiver_pos) = if highway {
            (
                Vec2::new(map.bounds.min.x, lane_mid),
                Some(Vec2::new(map.bounds.max.x, lane_mid)),
            )
        } else {
            let nearest = map
                .intersections
                .iter()
                .copied()
                .min_by(|a, b| {
                    distance(*a, center)
                        .partial_cmp(&distance(*b, center))
                        .unwrap()
                })
                .unwrap_or(center);
            (nearest, None)
        };

        let scenario_kind = if highway {
            ScenarioKind::Highway {
                receiver: VehicleId(1),
            }
        } else {
            ScenarioKind::Urban
        };

        let mut sim = Simulation {
            config: config.clone(),
            seed,
            radio: config.radio.params(),
            proto_params: config.trad.params(),
            flooding_params: FloodingParams {
                jitter_max: SimTime::from_secs_f64(config.flooding.jitter_max_ms / 1e3),
            },
            slotted_params: Slotted1pParams {
                num_slots: config.slotted1p.num_slots,
                slot_len: SimTime::from_secs_f64(config.slotted1p.slot_len_ms / 1e3),
                max_range: config.slotted1p.max_range_m,
            },
            drift_model: DriftModel {
                deviation: config.drift.deviation_m,
                resample_period_s: config.drift.resample_period_s,
            },
            scenario_kind,
            end: SimTime::from_secs_f64(config.sim_duration_s),
            emission_end: SimTime::from_secs_f64(config.sim_duration_s - config.cooldown_s),
            queue: EventQueue::new(),
            channel: Channel::new(),
            nodes: Vec::new(),
            payloads: BTreeMap::new(),
            log: EventLog::default(),
            decisions: Vec::new(),
            planner: Some(planner),
            rng_routes: derive_rng(seed, "routes"),
            rng_speeds: derive_rng(seed, "speeds"),
            rng_drift: derive_rng(seed, "drift"),
            rng_jitter: derive_rng(seed, "jitter"),
            rng_prefill: derive_rng(seed, "prefill"),
            source: 0,
            emitted: 0,
            mean_trip_secs,
            map,
        };

        sim.add_static_node(source_pos, Vec2::new(1.0, 0.0), false);
        if let Some(pos) = receiver_pos {
            sim.add_static_node(pos, Vec2::new(-1.0, 0.0), false);
        }

        if config.traffic.prefill {
            let population = process
                .steady_population(sim.map.bounds.area_km2(), mean_trip_secs)
                .round() as usize;
            for _ in 0..population {
                sim.spawn_vehicle(SimTime::ZERO, true);
            }
        }
        let mut departures_rng = derive_rng(seed, "departures");
        let spawn_horizon = sim
            .end
            .saturating_sub(SimTime::from_secs_f64(config.spawn_cooldown_s));
        for t in departure_schedule(&process, spawn_horizon, &mut departures_rng) {
            sim.queue.schedule(t, Ev::Spawn).expect("future departure");
        }
        sim.queue
            .schedule(SimTime::from_secs_f64(config.warmup_s), Ev::SourceEmit)
            .expect("warmup within run");
        Ok(sim)
    }

    /// Builds a scripted scenario: the given map, a parked source, and
    /// parked protocol participants. No departures, no mobility. Used
    /// by conformance fixtures and examples.
    pub fn with_static_nodes(
        config: &ScenarioConfig,
        seed: u64,
        map: RoadMap,
        source: StaticNode,
        vehicles: &[StaticNode],
    ) -> Simulation {
        let highway_receiver = None::<usize>;
        let _ = highway_receiver;
        let mut sim = Simulation {
            config: config.clone(),
            seed,
            radio: config.radio.params(),
            proto_params: config.trad.params(),
            flooding_params: FloodingParams {
                jitter_max: SimTime::from_secs_f64(config.flooding.jitter_max_ms / 1e3),
            },
            slotted_params: Slotted1pParams {
                num_slots: config.slotted1p.num_slots,
                slot_len: SimTime::from_secs_f64(config.slotted1p.slot_len_ms / 1e3),
                max_range: config.slotted1p.max_range_m,
            },
            drift_model: DriftModel {
                deviation: config.drift.deviation_m,
                resample_period_s: config.drift.resample_period_s,
            },
            scenario_kind: ScenarioKind::Urban,
            end: SimTime::from_secs_f64(config.sim_duration_s),
            emission_end: SimTime::from_secs_f64(config.sim_duration_s - config.cooldown_s),
            queue: EventQueue::new(),
            channel: Channel::new(),
            nodes: Vec::new(),
            payloads: BTreeMap::new(),
            log: EventLog::default(),
            decisions: Vec::new(),
            planner: None,
            rng_routes: derive_rng(seed, "routes"),
            rng_speeds: derive_rng(seed, "speeds"),
            rng_drift: derive_rng(seed, "drift"),
            rng_jitter: derive_rng(seed, "jitter"),
            rng_prefill: derive_rng(seed, "prefill"),
            source: 0,
            emitted: 0,
            mean_trip_secs: 0.0,
            map,
        };
        sim.add_static_node(source.pos, source.heading, false);
        for v in vehicles {
            sim.add_static_node(v.pos, v.heading, true);
        }
        sim.queue
            .schedule(SimTime::from_secs_f64(config.warmup_s), Ev::SourceEmit)
            .expect("warmup within run");
        sim
    }

    pub fn map(&self) -> &RoadMap {
        &self.map
    }

    pub fn mean_trip_secs(&self) -> f64 {
        self.mean_trip_secs
    }

    /// Active mobile vehicles at the current instant.
    pub fn active_vehicle_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.mobile && n.active)
            .count()
    }

    fn new_proto(&self, id: VehicleId) -> Proto {
        match self.config.protocol {
            ProtocolKind::Trad => Proto::Trad(TradState::new(id)),
            ProtocolKind::Flooding => Proto::Flooding(FloodingState::new(id, self.flooding_params)),
            ProtocolKind::Slotted1p => Proto::Slotted(SlottedState::new(id, self.slotted_params)),
        }
    }

    fn add_static_node(&mut self, pos: Vec2, heading: Vec2, mobile: bool) -> usize {
        let idx = self.nodes.len();
        let id = VehicleId(idx as u32);
        let now = self.queue.clock();
        let mut proto = self.new_proto(id);
        if !mobile {
            if let Proto::Trad(state) = &mut proto {
                state.mark_infrastructure();
            }
        }
        self.nodes.push(Node {
            mobile,
            vehicle: None,
            static_pos: pos,
            static_heading: heading.normalized().unwrap_or(Vec2::new(1.0, 0.0)),
            last_update: now,
            active: true,
            drift: DriftState::default(),
            proto,
            received: BTreeSet::new(),
        });
        self.log.nodes.push(NodeRecord {
            id,
            mobile,
            activated: now,
            deactivated: None,
        });
        if self.config.protocol == ProtocolKind::Trad {
            let stagger = SimTime::from_micros(
                self.rng_jitter
                    .int_inclusive(self.proto_params.beacon_period.as_micros().max(1) - 1),
            );
            self.queue.schedule_in(stagger, Ev::BeaconTick { node: idx });
        }
        idx
    }

    fn spawn_vehicle(&mut self, now: SimTime, prefill: bool) {
        let highway = self.config.is_highway();
        let pattern = if highway {
            if self.rng_routes.f64() < 0.5 {
                RoutePattern::HighwayWestToEast
            } else {
                RoutePattern::HighwayEastToWest
            }
        } else {
            match self.config.traffic.pattern {
                TrafficPattern::Uniform => RoutePattern::UniformCrossing,
                TrafficPattern::Confined => {
                    if self.rng_routes.f64() < 0.5 {
                        RoutePattern::UpperConfined
                    } else {
                        RoutePattern::LowerConfined
                    }
                }
            }
        };
        let route = self
            .planner
            .as_ref()
            .expect("dynamic scenarios carry a planner")
            .assign_route_with_legs(pattern, self.config.traffic.route_legs, &mut self.rng_routes)
            .expect("patterns validated against the map");
        let speeds = if highway {
            self.config.traffic.highway_speed
        } else {
            self.config.traffic.urban_speed
        };
        let speed = speeds.draw(&mut self.rng_speeds);

        let idx = self.nodes.len();
        let id = VehicleId(idx as u32);
        let mut vehicle = VehicleState::new(id, route, speed);
        let total = vehicle.trip_duration_secs();
        let mut remaining = total;
        if prefill {
            let progress = self.rng_prefill.f64();
            vehicle.advance(progress * total);
            remaining = total * (1.0 - progress);
        }

        self.nodes.push(Node {
            mobile: true,
            vehicle: Some(vehicle),
            static_pos: Vec2::default(),
            static_heading: Vec2::new(1.0, 0.0),
            last_update: now,
            active: true,
            drift: DriftState::default(),
            proto: self.new_proto(id),
            received: BTreeSet::new(),
        });
        self.log.nodes.push(NodeRecord {
            id,
            mobile: true,
            activated: now,
            deactivated: None,
        });
        self.queue
            .schedule_in(SimTime::from_secs_f64(remaining), Ev::Deactivate { node: idx });
        if self.config.protocol == ProtocolKind::Trad {
            let stagger = SimTime::from_micros(
                self.rng_jitter
                    .int_inclusive(self.proto_params.beacon_period.as_micros().max(1) - 1),
            );
            self.queue.schedule_in(stagger, Ev::BeaconTick { node: idx });
        }
    }

    fn true_pos(&mut self, idx: usize, now: SimTime) -> Vec2 {
        let node = &mut self.nodes[idx];
        match &mut node.vehicle {
            Some(v) => {
                let dt = (now.saturating_sub(node.last_update)).as_secs_f64();
                if dt > 0.0 && v.active {
                    v.advance(dt);
                }
                node.last_update = now;
                v.true_pos
            }
            None => node.static_pos,
        }
    }

    fn heading_of(&self, idx: usize) -> Vec2 {
        match &self.nodes[idx].vehicle {
            Some(v) => v.heading,
            None => self.nodes[idx].static_heading,
        }
    }

    /// GPS-reported position: drifted for mobile nodes, surveyed truth
    /// for fixed infrastructure.
    fn reported_pos(&mut self, idx: usize, now: SimTime) -> Vec2 {
        let truth = self.true_pos(idx, now);
        if !self.nodes[idx].mobile {
            return truth;
        }
        let model = self.drift_model;
        self.nodes[idx]
            .drift
            .read(truth, &model, now, &mut self.rng_drift)
    }

    fn active_positions(&mut self, now: SimTime, except: usize) -> Vec<(VehicleId, Vec2)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        for idx in 0..self.nodes.len() {
            if idx == except || !self.nodes[idx].active {
                continue;
            }
            out.push((VehicleId(idx as u32), self.true_pos(idx, now)));
        }
        out
    }

    fn transmit_frame(
        &mut self,
        now: SimTime,
        sender: usize,
        kind: FrameKind,
        data_id: Option<DataId>,
        payload: Payload,
    ) {
        let origin = self.true_pos(sender, now);
        let listeners = self.active_positions(now, sender);
        let bytes = match kind {
            FrameKind::Beacon => self.config.radio.beacon_bytes,
            FrameKind::Data => self.config.radio.data_bytes,
        };
        let tx = self.channel.transmit(
            now,
            &self.radio,
            &self.map,
            Frame {
                kind,
                bytes,
                sender: VehicleId(sender as u32),
            },
            origin,
            &listeners,
        );
        let record = self.log.tx.len();
        self.log.tx.push(TxRecord {
            time: now,
            sender: VehicleId(sender as u32),
            kind,
            data_id,
            delivered: 0,
            collided: 0,
        });
        if tx.receivers.is_empty() {
            return;
        }
        self.payloads.insert(
            tx.tx_id,
            PendingTx {
                payload: Rc::new(payload),
                record,
                remaining: tx.receivers.len() as u32,
            },
        );
        for r in &tx.receivers {
            self.queue
                .schedule(
                    tx.end,
                    Ev::Deliver {
                        tx_id: tx.tx_id,
                        node: r.0 as usize,
                    },
                )
                .expect("delivery lies in the future");
        }
    }

    fn consume_payload(&mut self, tx_id: u64) -> (Rc<Payload>, usize) {
        let entry = self.payloads.get_mut(&tx_id).expect("payload for delivery");
        entry.remaining -= 1;
        let out = (entry.payload.clone(), entry.record);
        if entry.remaining == 0 {
            self.payloads.remove(&tx_id);
        }
        out
    }

    fn deliver(&mut self, now: SimTime, tx_id: u64, idx: usize) {
        let (payload, record) = self.consume_payload(tx_id);
        if !self.nodes[idx].active {
            return;
        }
        if self.channel.was_lost(tx_id, VehicleId(idx as u32)) {
            self.log.tx[record].collided += 1;
            return;
        }
        self.log.tx[record].delivered += 1;

        let reported = self.reported_pos(idx, now);
        let heading = self.heading_of(idx);
        let own_cbr = self.channel.cbr(VehicleId(idx as u32), now);

        if let Payload::Data(msg) = &*payload {
            if self.nodes[idx].received.insert(msg.data_id) {
                self.log.receptions.push(ReceptionRecord {
                    data_id: msg.data_id,
                    receiver: VehicleId(idx as u32),
                    time: now,
                });
            }
        }

        let env = ProtoEnv {
            params: &self.proto_params,
            map: &self.map,
            self_pos: reported,
            self_heading: heading,
            own_cbr,
        };
        let mut sched = EngineSched {
            queue: &mut self.queue,
            rng: &mut self.rng_jitter,
            radio: &self.radio,
            node: idx,
            decisions: &mut self.decisions,
        };
        match (&mut self.nodes[idx].proto, &*payload) {
            (Proto::Trad(state), Payload::Beacon(beacon)) => {
                if !state.on_receive_beacon(&env, &mut sched, beacon) {
                    self.log.malformed_beacons += 1;
                }
            }
            (Proto::Trad(state), Payload::Data(msg)) => {
                state.on_receive_data(&env, &mut sched, msg);
            }
            (Proto::Flooding(state), Payload::Data(msg)) => {
                state.on_receive_data(&mut sched, msg);
            }
            (Proto::Slotted(state), Payload::Data(msg)) => {
                state.on_receive_data(&mut sched, reported, msg);
            }
            // Baseline protocols do not beacon; stray beacons are noise.
            (_, Payload::Beacon(_)) => {}
        }
    }

    fn beacon_send(&mut self, now: SimTime, idx: usize) {
        if !self.nodes[idx].active {
            return;
        }
        if let Some(retry_at) = self.carrier_deferral(now, idx) {
            self.queue
                .schedule(retry_at, Ev::BeaconSend { node: idx })
                .expect("deferral lies in the future");
            return;
        }
        let reported = self.reported_pos(idx, now);
        let heading = self.heading_of(idx);
        let own_cbr = self.channel.cbr(VehicleId(idx as u32), now);
        let env = ProtoEnv {
            params: &self.proto_params,
            map: &self.map,
            self_pos: reported,
            self_heading: heading,
            own_cbr,
        };
        let beacon = match &mut self.nodes[idx].proto {
            Proto::Trad(state) => state.emit_beacon(&env, now),
            _ => return,
        };
        self.transmit_frame(now, idx, FrameKind::Beacon, None, Payload::Beacon(beacon));
    }

    /// Listen before talk: when the medium is audibly busy at the
    /// node's position, returns the deferred send instant (busy end plus
    /// a fresh access backoff).
    fn carrier_deferral(&mut self, now: SimTime, idx: usize) -> Option<SimTime> {
        let pos = self.true_pos(idx, now);
        let busy_end = self.channel.busy_until(
            now,
            &self.radio,
            &self.map,
            pos,
            VehicleId(idx as u32),
        )?;
        Some(busy_end + csma_access_delay(&self.radio, &mut self.rng_jitter))
    }

    fn data_fire(&mut self, now: SimTime, idx: usize, data_id: DataId, kind: FireKind) {
        if !self.nodes[idx].active {
            return;
        }
        if let Some(retry_at) = self.carrier_deferral(now, idx) {
            let handle = self
                .queue
                .schedule(
                    retry_at,
                    Ev::DataFire {
                        node: idx,
                        data_id,
                        kind,
                    },
                )
                .expect("deferral lies in the future");
            match &mut self.nodes[idx].proto {
                Proto::Trad(state) => state.rearm(data_id, kind, handle),
                Proto::Flooding(state) => state.rearm(data_id, handle),
                Proto::Slotted(state) => state.rearm(data_id, handle),
            }
            return;
        }
        let reported = self.reported_pos(idx, now);
        let heading = self.heading_of(idx);
        let own_cbr = self.channel.cbr(VehicleId(idx as u32), now);
        let env = ProtoEnv {
            params: &self.proto_params,
            map: &self.map,
            self_pos: reported,
            self_heading: heading,
            own_cbr,
        };
        let mut sched = EngineSched {
            queue: &mut self.queue,
            rng: &mut self.rng_jitter,
            radio: &self.radio,
            node: idx,
            decisions: &mut self.decisions,
        };
        let msg = match &mut self.nodes[idx].proto {
            Proto::Trad(state) => state.on_data_fire(&env, &mut sched, data_id, kind),
            Proto::Flooding(state) => state.on_data_fire(reported, data_id),
            Proto::Slotted(state) => state.on_data_fire(reported, data_id),
        };
        if let Some(msg) = msg {
            self.transmit_frame(now, idx, FrameKind::Data, Some(data_id), Payload::Data(msg));
        }
    }

    fn source_send(&mut self, now: SimTime, data_id: DataId, decided_at: SimTime) {
        let idx = self.source;
        if let Some(retry_at) = self.carrier_deferral(now, idx) {
            self.queue
                .schedule(retry_at, Ev::SourceSend { data_id, decided_at })
                .expect("deferral lies in the future");
            return;
        }
        let reported = self.reported_pos(idx, now);
        let heading = self.heading_of(idx);
        let own_cbr = self.channel.cbr(VehicleId(idx as u32), now);
        let env = ProtoEnv {
            params: &self.proto_params,
            map: &self.map,
            self_pos: reported,
            self_heading: heading,
            own_cbr,
        };
        let msg = match &mut self.nodes[idx].proto {
            Proto::Trad(state) => state.originate(&env, now, data_id),
            Proto::Flooding(state) => state.originate(reported, data_id),
            Proto::Slotted(state) => state.originate(reported, data_id),
        };
        self.nodes[idx].received.insert(data_id);
        // Delay statistics run from the emission decision, before the
        // channel access backoff.
        self.log.originations.push(Origination {
            data_id,
            source: VehicleId(idx as u32),
            time: decided_at,
        });
        self.transmit_frame(now, idx, FrameKind::Data, Some(data_id), Payload::Data(msg));
    }

    fn deactivate(&mut self, now: SimTime, idx: usize) {
        let _ = self.true_pos(idx, now);
        if !self.nodes[idx].active {
            return;
        }
        self.nodes[idx].active = false;
        if let Some(v) = &mut self.nodes[idx].vehicle {
            v.active = false;
        }
        self.log.nodes[idx].deactivated = Some(now);
        let mut sched = sched!(self, idx);
        match &mut self.nodes[idx].proto {
            Proto::Trad(state) => state.cancel_all(&mut sched),
            Proto::Flooding(state) => state.cancel_all(&mut sched),
            Proto::Slotted(state) => state.cancel_all(&mut sched),
        }
    }

    fn handle(&mut self, now: SimTime, ev: Ev) {
        match ev {
            Ev::Spawn => self.spawn_vehicle(now, false),
            Ev::Deactivate { node } => self.deactivate(now, node),
            Ev::BeaconTick { node } => {
                if !self.nodes[node].active {
                    return;
                }
                // Re-arm the next tick one period out with +/- 10 ms of
                // desynchronizing jitter (clamped for tiny periods).
                let period = self.proto_params.beacon_period;
                let span = SimTime::from_millis(10).min(SimTime::from_micros(
                    period.as_micros() / 2,
                ));
                let offset = SimTime::from_micros(
                    self.rng_jitter.int_inclusive(2 * span.as_micros()),
                );
                let next = now + period - span + offset;
                self.queue
                    .schedule(next, Ev::BeaconTick { node })
                    .expect("next period is in the future");
                let access = csma_access_delay(&self.radio, &mut self.rng_jitter);
                self.queue.schedule_in(access, Ev::BeaconSend { node });
            }
            Ev::BeaconSend { node } => self.beacon_send(now, node),
            Ev::SourceEmit => {
                let cap = self.config.max_data_messages;
                if now > self.emission_end || (cap != 0 && self.emitted >= cap) {
                    return;
                }
                let data_id = DataId(self.emitted);
                self.emitted += 1;
                let access = csma_access_delay(&self.radio, &mut self.rng_jitter);
                self.queue
                    .schedule_in(access, Ev::SourceSend { data_id, decided_at: now });
                let next = now + SimTime::from_secs_f64(self.config.data_period_s);
                if next <= self.emission_end && (cap == 0 || self.emitted < cap) {
                    self.queue.schedule(next, Ev::SourceEmit).expect("future");
                }
            }
            Ev::SourceSend { data_id, decided_at } => self.source_send(now, data_id, decided_at),
            Ev::DataFire {
                node,
                data_id,
                kind,
            } => self.data_fire(now, node, data_id, kind),
            Ev::Deliver { tx_id, node } => self.deliver(now, tx_id, node),
        }
    }

    /// Runs to the configured end and computes the report.
    pub fn run(mut self) -> RunOutput {
        let end = self.end;
        while let Some((now, ev)) = self.queue.pop_next(end) {
            self.handle(now, ev);
        }
        self.log.run_end = end;
        let report = Report::compute(
            &self.log,
            self.scenario_kind,
            SimTime::from_secs_f64(self.config.sample_period_s),
            self.seed,
        );
        RunOutput {
            report,
            log: self.log,
            decisions: self.decisions,
        }
    }

    /// Runs until `at` and samples the active vehicle count, without
    /// finishing the run. Used by steady-state tests.
    pub fn run_until(&mut self, at: SimTime) -> usize {
        while let Some((now, ev)) = self.queue.pop_next(at) {
            self.handle(now, ev);
        }
        self.active_vehicle_count()
    }
}
