//! Batch execution: single scenario runs, axis sweeps over density,
//! flow or GPS drift, and the seed scheme that keeps comparisons
//! paired across protocol variants.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{ConfigError, ProtocolKind, ScenarioConfig};
use super::engine::{BuildError, RunOutput, Simulation};
use crate::metrics::Report;

/// Density sweep points, vehicles per square kilometer.
pub const DENSITY_SWEEP: [f64; 7] = [40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0];
/// Highway flow levels, vehicles per hour.
pub const FLOW_SWEEP: [f64; 5] = [450.0, 896.4, 1353.6, 1803.6, 2257.2];
/// GPS drift deviations, meters.
pub const DRIFT_SWEEP: [f64; 5] = [0.0, 25.0, 50.0, 75.0, 100.0];

pub fn run_scenario(config: &ScenarioConfig, seed: u64) -> Result<RunOutput, BuildError> {
    Ok(Simulation::new(config, seed)?.run())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Density,
    Flow,
    Drift,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Density => "density_vkm2",
            SweepAxis::Flow => "flow_vph",
            SweepAxis::Drift => "drift_m",
        }
    }

    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepAxis::Density => DENSITY_SWEEP.to_vec(),
            SweepAxis::Flow => FLOW_SWEEP.to_vec(),
            SweepAxis::Drift => DRIFT_SWEEP.to_vec(),
        }
    }

    fn declared(&self) -> &'static [f64] {
        match self {
            SweepAxis::Density => &DENSITY_SWEEP,
            SweepAxis::Flow => &FLOW_SWEEP,
            SweepAxis::Drift => &DRIFT_SWEEP,
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "density" => Ok(SweepAxis::Density),
            "flow" => Ok(SweepAxis::Flow),
            "drift" => Ok(SweepAxis::Drift),
            other => Err(format!(
                "unknown axis `{other}` (expected density, flow or drift)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub seeds_per_point: u32,
}

impl SweepSpec {
    pub fn new(base: ScenarioConfig, axis: SweepAxis) -> SweepSpec {
        let seeds = base.repetitions;
        SweepSpec {
            base,
            axis,
            values: axis.default_values(),
            seeds_per_point: seeds,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.values.is_empty() || self.seeds_per_point == 0 {
            return Err(ConfigError::Invalid {
                field: "sweep.values",
                message: "need at least one axis value and one seed".into(),
            });
        }
        for &v in &self.values {
            if !self.axis.declared().contains(&v) {
                return Err(ConfigError::Invalid {
                    field: "sweep.values",
                    message: format!(
                        "{v} is outside the declared {} set {:?}",
                        self.axis.label(),
                        self.axis.declared()
                    ),
                });
            }
        }
        self.apply(self.values[0]).validate()
    }

    /// The base configuration with one axis value substituted.
    pub fn apply(&self, value: f64) -> ScenarioConfig {
        let mut config = self.base.clone();
        match self.axis {
            SweepAxis::Density => config.traffic.density_vkm2 = Some(value),
            SweepAxis::Flow => config.traffic.flow_vph = Some(value),
            SweepAxis::Drift => config.drift.deviation_m = value,
        }
        config
    }
}

/// Per-run identification echoed into every report row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub protocol: ProtocolKind,
    pub map: String,
    pub pattern: String,
    pub density_vkm2: Option<f64>,
    pub flow_vph: Option<f64>,
    pub drift_m: f64,
    pub seed: u64,
    pub duration_s: f64,
    pub warmup_s: f64,
}

impl RunMeta {
    pub fn from_config(config: &ScenarioConfig, seed: u64) -> RunMeta {
        RunMeta {
            protocol: config.protocol,
            map: config.map.label().to_string(),
            pattern: if config.is_highway() {
                "highway".to_string()
            } else {
                config.traffic.pattern.label().to_string()
            },
            density_vkm2: config.traffic.density_vkm2,
            flow_vph: config.traffic.flow_vph,
            drift_m: config.drift.deviation_m,
            seed,
            duration_s: config.sim_duration_s,
            warmup_s: config.warmup_s,
        }
    }
}

#[derive(Debug)]
pub struct SweepRow {
    pub axis_value: f64,
    pub meta: RunMeta,
    pub report: Report,
}

#[derive(Debug)]
pub struct SweepFailure {
    pub axis_value: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// Runs every (axis value, seed) combination. Runs share nothing, so
/// they execute on a small thread pool; results come back in a fixed
/// (value, seed) order regardless of scheduling. Per-run failures are
/// recorded and skipped.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput, ConfigError> {
    spec.validate()?;
    let mut jobs: Vec<(f64, u64)> = Vec::new();
    for &value in &spec.values {
        for rep in 0..spec.seeds_per_point {
            jobs.push((value, spec.base.root_seed + rep as u64));
        }
    }

    let results: Mutex<Vec<Option<Result<SweepRow, SweepFailure>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let (value, seed) = jobs[i];
                let config = spec.apply(value);
                let outcome = match run_scenario(&config, seed) {
                    Ok(output) => Ok(SweepRow {
                        axis_value: value,
                        meta: RunMeta::from_config(&config, seed),
                        report: output.report,
                    }),
                    Err(e) => Err(SweepFailure {
                        axis_value: value,
                        seed,
                        error: e.to_string(),
                    }),
                };
                results.lock().expect("no panics hold the lock")[i] = Some(outcome);
            });
        }
    });

    let mut output = SweepOutput::default();
    for slot in results.into_inner().expect("workers joined") {
        match slot.expect("every job ran") {
            Ok(row) => output.rows.push(row),
            Err(failure) => output.failures.push(failure),
        }
    }
    Ok(output)
}
