//! Scenario assembly and batch execution: configuration parsing and
//! validation, the simulation engine, sweep drivers, and plot-ready
//! output files.

mod config;
mod engine;
mod output;
mod runner;

pub use config::{
    ConfigError, DriftConfig, FloodingConfig, MapSpec, ProtocolKind, RadioConfig, ScenarioConfig,
    SlottedConfig, TradConfig, TrafficConfig, TrafficPattern,
};
pub use engine::{BuildError, RunOutput, Simulation, StaticNode};
pub use output::{
    aggregate, plot_to_csv, report_row, reports_to_csv, write_coverage_files, write_plot_csv,
    write_report_csv, OutputError, PlotPoint, REPORT_HEADER,
};
pub use runner::{
    run_scenario, run_sweep, RunMeta, SweepAxis, SweepFailure, SweepOutput, SweepRow, SweepSpec,
    DENSITY_SWEEP, DRIFT_SWEEP, FLOW_SWEEP,
};
