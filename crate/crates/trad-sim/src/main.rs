//! Thin command-line front end: parse a scenario file, run it (or sweep
//! an axis), and write the plot-ready output files. All the actual work
//! lives in the library.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trad_sim::metrics::write_trace;
use trad_sim::scenario::{
    run_scenario, run_sweep, write_coverage_files, write_plot_csv, write_report_csv,
    ProtocolKind, RunMeta, ScenarioConfig, SweepAxis, SweepSpec,
};
use trad_sim::simcore::SimTime;

#[derive(Parser)]
#[command(
    name = "trad-sim",
    about = "Deterministic simulator for traffic-adaptive data dissemination in vehicular networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario file (TOML). Defaults to the built-in reference setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured protocol: trad, flooding or slotted1p.
    #[arg(long)]
    protocol: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write report.csv plus coverage curves.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed for this run (defaults to the config's root seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write trace.csv with per-transmission and per-decision rows.
        #[arg(long)]
        trace: bool,
    },
    /// Run a standard axis sweep (density, flow or drift) and aggregate.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sweep axis: density, flow or drift.
        #[arg(long)]
        axis: String,
        /// Seeds per sweep point (defaults to the config's repetitions).
        #[arg(long)]
        seeds: Option<u32>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse and validate a scenario file.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ScenarioConfig, String> {
    let mut config = match &args.config {
        None => ScenarioConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ScenarioConfig::from_toml(&text).map_err(|e| e.to_string())?
        }
    };
    if let Some(protocol) = &args.protocol {
        config.protocol = protocol.parse::<ProtocolKind>()?;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn ensure_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn cmd_run(args: &ConfigArgs, seed: Option<u64>, out: &Path, trace: bool) -> Result<(), String> {
    let config = load_config(args)?;
    let seed = seed.unwrap_or(config.root_seed);
    ensure_dir(out)?;
    let output = run_scenario(&config, seed).map_err(|e| e.to_string())?;
    let meta = RunMeta::from_config(&config, seed);
    write_report_csv([(&meta, &output.report)], &out.join("report.csv"))
        .map_err(|e| e.to_string())?;
    let coverage = write_coverage_files(&output.report, out).map_err(|e| e.to_string())?;
    if trace {
        write_trace(&output.log, &output.decisions, &out.join("trace.csv"))
            .map_err(|e| e.to_string())?;
    }
    let report = &output.report;
    println!(
        "run complete: protocol={} seed={seed} messages={} pdr={} data_tx={} beacon_tx={} \
         mean_delay_s={} (report.csv, {} coverage files{})",
        config.protocol,
        report.messages,
        report
            .pdr
            .map(|p| format!("{p:.4}"))
            .unwrap_or_else(|| "n/a".into()),
        report.data_tx,
        report.beacon_tx,
        report
            .mean_delay_s
            .map(|d| format!("{d:.4}"))
            .unwrap_or_else(|| "n/a".into()),
        coverage.len(),
        if trace { ", trace.csv" } else { "" }
    );
    Ok(())
}

/// Seed-averaged coverage curve for one drift level, aligned on sample
/// index relative to each run's origination.
fn mean_coverage_rows(reports: &[&trad_sim::metrics::Report], period: SimTime) -> String {
    let curves: Vec<&Vec<(SimTime, f64)>> = reports
        .iter()
        .filter_map(|r| r.coverage.first().map(|(_, curve)| curve))
        .collect();
    let mut out = String::from("offset_us,mean_fraction\n");
    if curves.is_empty() {
        return out;
    }
    let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    for k in 0..len {
        let mean: f64 =
            curves.iter().map(|c| c[k].1).sum::<f64>() / curves.len() as f64;
        let _ = writeln!(out, "{},{}", period.as_micros() as u128 * k as u128, mean);
    }
    out
}

fn cmd_sweep(args: &ConfigArgs, axis: &str, seeds: Option<u32>, out: &Path) -> Result<(), String> {
    let config = load_config(args)?;
    let axis: SweepAxis = axis.parse()?;
    let mut spec = SweepSpec::new(config, axis);
    if let Some(seeds) = seeds {
        spec.seeds_per_point = seeds;
    }
    ensure_dir(out)?;
    let sweep = run_sweep(&spec).map_err(|e| e.to_string())?;
    for failure in &sweep.failures {
        eprintln!(
            "warning: {}={} seed {} failed: {}",
            axis.label(),
            failure.axis_value,
            failure.seed,
            failure.error
        );
    }
    if sweep.rows.is_empty() {
        return Err("every run in the sweep failed".into());
    }
    write_report_csv(
        sweep.rows.iter().map(|r| (&r.meta, &r.report)),
        &out.join("report.csv"),
    )
    .map_err(|e| e.to_string())?;
    let plot = write_plot_csv(axis.label(), &sweep.rows, out).map_err(|e| e.to_string())?;

    // The drift study is about dissemination speed; emit one averaged
    // coverage curve per deviation for plotting.
    let mut extra = Vec::new();
    if axis == SweepAxis::Drift {
        let period = SimTime::from_secs_f64(spec.base.sample_period_s);
        for &value in &spec.values {
            let reports: Vec<&trad_sim::metrics::Report> = sweep
                .rows
                .iter()
                .filter(|r| r.axis_value == value)
                .map(|r| &r.report)
                .collect();
            let name = format!("coverage_drift_{value}.csv");
            std::fs::write(out.join(&name), mean_coverage_rows(&reports, period))
                .map_err(|e| e.to_string())?;
            extra.push(name);
        }
    }
    println!(
        "sweep complete: {} runs over {} ({} failures); wrote report.csv, {plot}{}",
        sweep.rows.len(),
        axis.label(),
        sweep.failures.len(),
        if extra.is_empty() {
            String::new()
        } else {
            format!(", {}", extra.join(", "))
        }
    );
    Ok(())
}

fn cmd_validate(args: &ConfigArgs) -> Result<(), String> {
    let config = load_config(args)?;
    println!(
        "configuration valid: protocol={} map={} {}",
        config.protocol,
        config.map.label(),
        if config.is_highway() {
            format!("flow={} vph", config.traffic.flow_vph.unwrap_or_default())
        } else {
            format!("density={} v/km2", config.traffic.density_vkm2.unwrap_or_default())
        }
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out,
            trace,
        } => cmd_run(config, *seed, out, *trace),
        Command::Sweep {
            config,
            axis,
            seeds,
            out,
        } => cmd_sweep(config, axis, *seeds, out),
        Command::Validate { config } => cmd_validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
