//! Scenario configuration: a plain TOML file whose defaults reproduce
//! the reference evaluation setup, so the zero-configuration path runs
//! the standard parameter set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mobility::SpeedRange;
use crate::radio::RadioParams;
use crate::simcore::SimTime;
use crate::trad::{ProtocolParams, SuppressionPolicy};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Trad,
    Flooding,
    Slotted1p,
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProtocolKind::Trad => "trad",
            ProtocolKind::Flooding => "flooding",
            ProtocolKind::Slotted1p => "slotted1p",
        })
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trad" => Ok(ProtocolKind::Trad),
            "flooding" => Ok(ProtocolKind::Flooding),
            "slotted1p" => Ok(ProtocolKind::Slotted1p),
            other => Err(format!(
                "unknown protocol `{other}` (expected trad, flooding or slotted1p)"
            )),
        }
    }
}

/// Map source: synthetic grid, synthetic highway corridor, or a saved
/// map file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapSpec {
    Grid {
        blocks_x: u32,
        blocks_y: u32,
        block_size_m: f64,
        lanes: u32,
        building_inset_m: f64,
        irregularity: f64,
    },
    Highway {
        length_m: f64,
        lanes_per_direction: u32,
    },
    File {
        path: String,
    },
}

impl MapSpec {
    pub fn default_grid() -> MapSpec {
        MapSpec::Grid {
            blocks_x: 5,
            blocks_y: 5,
            block_size_m: 200.0,
            lanes: 1,
            building_inset_m: 15.0,
            irregularity: 0.0,
        }
    }

    pub fn default_highway() -> MapSpec {
        MapSpec::Highway {
            length_m: 2000.0,
            lanes_per_direction: 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MapSpec::Grid { .. } => "grid",
            MapSpec::Highway { .. } => "highway",
            MapSpec::File { .. } => "file",
        }
    }
}

/// Urban traffic-route mix. `Uniform` crosses the map's midline;
/// `Confined` keeps each vehicle inside one half, halving contact with
/// the central source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficPattern {
    Uniform,
    Confined,
}

impl TrafficPattern {
    pub fn label(&self) -> &'static str {
        match self {
            TrafficPattern::Uniform => "uniform",
            TrafficPattern::Confined => "confined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub pattern: TrafficPattern,
    /// Urban steady-state target, vehicles per square kilometer.
    pub density_vkm2: Option<f64>,
    /// Highway inflow, vehicles per hour over both directions.
    pub flow_vph: Option<f64>,
    pub urban_speed: SpeedRange,
    pub highway_speed: SpeedRange,
    /// Populate the map at its steady-state occupancy at t = 0 instead
    /// of filling from empty.
    pub prefill: bool,
    /// Chained shortest-path legs per urban trip before the return leg.
    pub route_legs: u32,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            pattern: TrafficPattern::Uniform,
            density_vkm2: Some(80.0),
            flow_vph: None,
            urban_speed: SpeedRange::URBAN,
            highway_speed: SpeedRange::HIGHWAY,
            prefill: true,
            route_legs: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub sensitivity_dbm: f64,
    pub path_loss_exponent: f64,
    pub frequency_ghz: f64,
    pub bitrate_mbps: f64,
    pub mac_slot_us: u64,
    pub sifs_us: u64,
    pub cw_min: u64,
    pub cw_max: u64,
    pub data_bytes: u32,
    pub beacon_bytes: u32,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            tx_power_dbm: 24.77,
            sensitivity_dbm: -100.0,
            path_loss_exponent: 3.0,
            frequency_ghz: 5.89,
            bitrate_mbps: 6.0,
            mac_slot_us: 13,
            sifs_us: 32,
            cw_min: 15,
            cw_max: 1023,
            data_bytes: 2312,
            beacon_bytes: 378,
        }
    }
}

impl RadioConfig {
    pub fn params(&self) -> RadioParams {
        RadioParams {
            tx_power_dbm: self.tx_power_dbm,
            sensitivity_dbm: self.sensitivity_dbm,
            path_loss_exponent: self.path_loss_exponent,
            frequency_hz: self.frequency_ghz * 1e9,
            bitrate_bps: self.bitrate_mbps * 1e6,
            mac_slot_us: self.mac_slot_us,
            sifs_us: self.sifs_us,
            cw_min: self.cw_min,
            cw_max: self.cw_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradConfig {
    pub slot_time_ms: f64,
    pub cluster_angle_deg: f64,
    pub max_neighbor: u32,
    pub max_radio_range_m: f64,
    pub beacon_period_s: f64,
    pub beacon_lifetime_s: f64,
    pub msg_list_cap: usize,
    pub coordinator_radius_m: f64,
    pub suppression: SuppressionPolicy,
}

impl Default for TradConfig {
    fn default() -> Self {
        TradConfig {
            slot_time_ms: 8.0,
            cluster_angle_deg: 10.0,
            max_neighbor: 20,
            max_radio_range_m: 366.0,
            beacon_period_s: 1.0,
            beacon_lifetime_s: 1.5,
            msg_list_cap: 40,
            coordinator_radius_m: 20.0,
            suppression: SuppressionPolicy::SameCluster,
        }
    }
}

impl TradConfig {
    pub fn params(&self) -> ProtocolParams {
        ProtocolParams {
            slot_time: SimTime::from_secs_f64(self.slot_time_ms / 1e3),
            cluster_angle: self.cluster_angle_deg.to_radians(),
            max_neighbor: self.max_neighbor,
            max_radio_range: self.max_radio_range_m,
            beacon_period: SimTime::from_secs_f64(self.beacon_period_s),
            beacon_lifetime: SimTime::from_secs_f64(self.beacon_lifetime_s),
            msg_list_cap: self.msg_list_cap,
            coordinator_radius: self.coordinator_radius_m,
            suppression: self.suppression,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloodingConfig {
    pub jitter_max_ms: f64,
}

impl Default for FloodingConfig {
    fn default() -> Self {
        FloodingConfig { jitter_max_ms: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlottedConfig {
    pub num_slots: u32,
    pub slot_len_ms: f64,
    pub max_range_m: f64,
}

impl Default for SlottedConfig {
    fn default() -> Self {
        SlottedConfig {
            num_slots: 5,
            slot_len_ms: 5.0,
            max_range_m: 366.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub deviation_m: f64,
    pub resample_period_s: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            deviation_m: 0.0,
            resample_period_s: 1.0,
        }
    }
}

/// Full description of one runnable scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub root_seed: u64,
    /// Seeds per sweep point.
    pub repetitions: u32,
    pub sim_duration_s: f64,
    /// The source stays quiet until this instant.
    pub warmup_s: f64,
    /// The source stops this long before the end so late messages can
    /// still propagate.
    pub cooldown_s: f64,
    /// Source emission period.
    pub data_period_s: f64,
    /// Cap on originated messages (0 = unlimited).
    pub max_data_messages: u64,
    /// Coverage-curve sampling period.
    pub sample_period_s: f64,
    /// Departures stop this long before the end of the run, so the
    /// audience of the final messages is not diluted by vehicles that
    /// appear with no time left to reach them.
    pub spawn_cooldown_s: f64,
    pub protocol: ProtocolKind,
    pub map: MapSpec,
    pub traffic: TrafficConfig,
    pub radio: RadioConfig,
    pub trad: TradConfig,
    pub flooding: FloodingConfig,
    pub slotted1p: SlottedConfig,
    pub drift: DriftConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            root_seed: 1,
            repetitions: 5,
            sim_duration_s: 300.0,
            warmup_s: 120.0,
            cooldown_s: 60.0,
            data_period_s: 2.0,
            max_data_messages: 0,
            sample_period_s: 0.5,
            spawn_cooldown_s: 0.0,
            protocol: ProtocolKind::Trad,
            map: MapSpec::default_grid(),
            traffic: TrafficConfig::default(),
            radio: RadioConfig::default(),
            trad: TradConfig::default(),
            flooding: FloodingConfig::default(),
            slotted1p: SlottedConfig::default(),
            drift: DriftConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// A ready-to-run highway scenario at the given flow.
    pub fn default_highway(flow_vph: f64) -> ScenarioConfig {
        ScenarioConfig {
            map: MapSpec::default_highway(),
            traffic: TrafficConfig {
                density_vkm2: None,
                flow_vph: Some(flow_vph),
                ..TrafficConfig::default()
            },
            warmup_s: 60.0,
            sim_duration_s: 360.0,
            cooldown_s: 90.0,
            ..ScenarioConfig::default()
        }
    }

    pub fn is_highway(&self) -> bool {
        matches!(self.map, MapSpec::Highway { .. })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<ScenarioConfig, ConfigError> {
        toml::from_str(text).map_err(|e| invalid("<config>", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sim_duration_s <= 0.0 {
            return Err(invalid("sim_duration_s", "must be positive"));
        }
        if self.warmup_s < 0.0 || self.warmup_s >= self.sim_duration_s {
            return Err(invalid("warmup_s", "must lie inside the run duration"));
        }
        if self.cooldown_s < 0.0 || self.warmup_s + self.cooldown_s >= self.sim_duration_s {
            return Err(invalid(
                "cooldown_s",
                "warmup plus cooldown must leave an emission window",
            ));
        }
        if self.data_period_s <= 0.0 {
            return Err(invalid("data_period_s", "must be positive"));
        }
        if self.sample_period_s <= 0.0 {
            return Err(invalid("sample_period_s", "must be positive"));
        }
        if self.spawn_cooldown_s < 0.0 || self.spawn_cooldown_s >= self.sim_duration_s {
            return Err(invalid("spawn_cooldown_s", "must lie inside the run duration"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions", "need at least one seed"));
        }

        match &self.map {
            MapSpec::Grid {
                blocks_x,
                blocks_y,
                block_size_m,
                irregularity,
                ..
            } => {
                if *blocks_x == 0 || *blocks_y == 0 {
                    return Err(invalid("map.blocks_x", "grid needs at least 1x1 blocks"));
                }
                if *block_size_m <= 0.0 {
                    return Err(invalid("map.block_size_m", "must be positive"));
                }
                if !(0.0..=1.0).contains(irregularity) {
                    return Err(invalid("map.irregularity", "must be in [0, 1]"));
                }
            }
            MapSpec::Highway { length_m, .. } => {
                if *length_m <= 0.0 {
                    return Err(invalid("map.length_m", "must be positive"));
                }
            }
            MapSpec::File { path } => {
                if path.is_empty() {
                    return Err(invalid("map.path", "must name a map file"));
                }
            }
        }

        let highway = self.is_highway();
        match (self.traffic.density_vkm2, self.traffic.flow_vph) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "traffic.density_vkm2",
                    "set either a density or a flow, not both",
                ));
            }
            (None, None) => {
                return Err(invalid(
                    "traffic.density_vkm2",
                    "one of density_vkm2 or flow_vph is required",
                ));
            }
            (Some(d), None) => {
                if highway {
                    return Err(invalid(
                        "traffic.density_vkm2",
                        "density targets need an urban map; use flow_vph on highways",
                    ));
                }
                if d < 0.0 {
                    return Err(invalid("traffic.density_vkm2", "must be non-negative"));
                }
            }
            (None, Some(f)) => {
                if !highway {
                    return Err(invalid(
                        "traffic.flow_vph",
                        "flow targets need a highway map; use density_vkm2 in urban scenarios",
                    ));
                }
                if f < 0.0 {
                    return Err(invalid("traffic.flow_vph", "must be non-negative"));
                }
            }
        }

        for (field, range) in [
            ("traffic.urban_speed", self.traffic.urban_speed),
            ("traffic.highway_speed", self.traffic.highway_speed),
        ] {
            if range.min <= 0.0 || range.max < range.min {
                return Err(invalid(field, "speed range needs 0 < min <= max"));
            }
        }

        let r = &self.radio;
        if r.sensitivity_dbm >= r.tx_power_dbm {
            return Err(invalid(
                "radio.sensitivity_dbm",
                "sensitivity must lie below transmit power",
            ));
        }
        if r.path_loss_exponent <= 0.0 {
            return Err(invalid("radio.path_loss_exponent", "must be positive"));
        }
        if r.frequency_ghz <= 0.0 {
            return Err(invalid("radio.frequency_ghz", "must be positive"));
        }
        if r.bitrate_mbps <= 0.0 {
            return Err(invalid("radio.bitrate_mbps", "must be positive"));
        }
        if r.cw_min > r.cw_max {
            return Err(invalid("radio.cw_min", "must not exceed cw_max"));
        }
        if r.data_bytes == 0 || r.beacon_bytes == 0 {
            return Err(invalid("radio.data_bytes", "frames are never empty"));
        }

        let t = &self.trad;
        if t.slot_time_ms <= 0.0 {
            return Err(invalid("trad.slot_time_ms", "must be positive"));
        }
        if !(0.0..180.0).contains(&t.cluster_angle_deg) || t.cluster_angle_deg == 0.0 {
            return Err(invalid("trad.cluster_angle_deg", "must be in (0, 180)"));
        }
        if t.max_neighbor == 0 {
            return Err(invalid("trad.max_neighbor", "must be at least 1"));
        }
        if t.max_radio_range_m <= 0.0 {
            return Err(invalid("trad.max_radio_range_m", "must be positive"));
        }
        if t.beacon_period_s <= 0.0 || t.beacon_lifetime_s <= 0.0 {
            return Err(invalid("trad.beacon_period_s", "must be positive"));
        }
        if t.msg_list_cap == 0 {
            return Err(invalid("trad.msg_list_cap", "must be at least 1"));
        }
        if t.coordinator_radius_m <= 0.0 {
            return Err(invalid("trad.coordinator_radius_m", "must be positive"));
        }

        if self.flooding.jitter_max_ms <= 0.0 {
            return Err(invalid("flooding.jitter_max_ms", "must be positive"));
        }
        if self.slotted1p.num_slots == 0 {
            return Err(invalid("slotted1p.num_slots", "must be at least 1"));
        }
        if self.slotted1p.slot_len_ms <= 0.0 || self.slotted1p.max_range_m <= 0.0 {
            return Err(invalid("slotted1p.slot_len_ms", "must be positive"));
        }

        if self.drift.deviation_m < 0.0 {
            return Err(invalid("drift.deviation_m", "must be non-negative"));
        }
        if self.drift.resample_period_s <= 0.0 {
            return Err(invalid("drift.resample_period_s", "must be positive"));
        }
        Ok(())
    }
}
