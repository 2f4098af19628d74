//! Stable plot-ready output files. Column orders are fixed; floats
//! print in shortest round-trip form so identical runs produce byte
//! identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::metrics::Report;

use super::runner::{RunMeta, SweepRow};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io error writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("nothing to aggregate")]
    Empty,
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const REPORT_HEADER: &str = "protocol,map,pattern,density_vkm2,flow_vph,drift_m,seed,\
duration_s,warmup_s,messages,pdr,data_tx,beacon_tx,mean_delay_s,p95_delay_s,collisions";

pub fn report_row(meta: &RunMeta, report: &Report) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        meta.protocol,
        meta.map,
        meta.pattern,
        opt(meta.density_vkm2),
        opt(meta.flow_vph),
        meta.drift_m,
        meta.seed,
        meta.duration_s,
        meta.warmup_s,
        report.messages,
        opt(report.pdr),
        report.data_tx,
        report.beacon_tx,
        opt(report.mean_delay_s),
        opt(report.p95_delay_s),
        report.collisions
    )
}

pub fn reports_to_csv<'a>(rows: impl IntoIterator<Item = (&'a RunMeta, &'a Report)>) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for (meta, report) in rows {
        out.push_str(&report_row(meta, report));
        out.push('\n');
    }
    out
}

pub fn write_report_csv<'a>(
    rows: impl IntoIterator<Item = (&'a RunMeta, &'a Report)>,
    path: &Path,
) -> Result<(), OutputError> {
    write_file(path, &reports_to_csv(rows))
}

/// One `coverage_<data_id>.csv` per message: `time_us,fraction`.
pub fn write_coverage_files(report: &Report, dir: &Path) -> Result<Vec<String>, OutputError> {
    let mut written = Vec::new();
    for (data_id, curve) in &report.coverage {
        let mut out = String::from("time_us,fraction\n");
        for (t, frac) in curve {
            let _ = writeln!(out, "{},{}", t.as_micros(), frac);
        }
        let name = format!("coverage_{data_id}.csv");
        write_file(&dir.join(&name), &out)?;
        written.push(name);
    }
    Ok(written)
}

/// Aggregated sweep point: mean and population standard deviation per
/// metric across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub value: f64,
    pub seeds: u64,
    pub pdr_mean: Option<f64>,
    pub pdr_std: Option<f64>,
    pub data_tx_mean: f64,
    pub data_tx_std: f64,
    pub delay_mean_s: Option<f64>,
    pub delay_std_s: Option<f64>,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn aggregate(rows: &[SweepRow]) -> Result<Vec<PlotPoint>, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut values: Vec<f64> = Vec::new();
    for row in rows {
        if !values.contains(&row.axis_value) {
            values.push(row.axis_value);
        }
    }
    let mut points = Vec::new();
    for value in values {
        let group: Vec<&SweepRow> = rows.iter().filter(|r| r.axis_value == value).collect();
        let pdrs: Vec<f64> = group.iter().filter_map(|r| r.report.pdr).collect();
        let txs: Vec<f64> = group.iter().map(|r| r.report.data_tx as f64).collect();
        let delays: Vec<f64> = group.iter().filter_map(|r| r.report.mean_delay_s).collect();
        let pdr = mean_std(&pdrs);
        let tx = mean_std(&txs).expect("group is non-empty");
        let delay = mean_std(&delays);
        points.push(PlotPoint {
            value,
            seeds: group.len() as u64,
            pdr_mean: pdr.map(|p| p.0),
            pdr_std: pdr.map(|p| p.1),
            data_tx_mean: tx.0,
            data_tx_std: tx.1,
            delay_mean_s: delay.map(|d| d.0),
            delay_std_s: delay.map(|d| d.1),
        });
    }
    Ok(points)
}

pub fn plot_to_csv(axis_label: &str, points: &[PlotPoint]) -> String {
    let mut out = String::from(
        "axis,value,seeds,pdr_mean,pdr_std,data_tx_mean,data_tx_std,delay_mean_s,delay_std_s\n",
    );
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            axis_label,
            p.value,
            p.seeds,
            opt(p.pdr_mean),
            opt(p.pdr_std),
            p.data_tx_mean,
            p.data_tx_std,
            opt(p.delay_mean_s),
            opt(p.delay_std_s)
        );
    }
    out
}

/// Writes `plot_<axis>.csv` with per-point means and deviations.
pub fn write_plot_csv(
    axis_label: &str,
    rows: &[SweepRow],
    dir: &Path,
) -> Result<String, OutputError> {
    let points = aggregate(rows)?;
    let name = format!("plot_{axis_label}.csv");
    write_file(&dir.join(&name), &plot_to_csv(axis_label, &points))?;
    Ok(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::DataId;
    use crate::scenario::config::ProtocolKind;

    fn meta(seed: u64) -> RunMeta {
        RunMeta {
            protocol: ProtocolKind::Trad,
            map: "grid".into(),
            pattern: "uniform".into(),
            density_vkm2: Some(80.0),
            flow_vph: None,
            drift_m: 0.0,
            seed,
            duration_s: 300.0,
            warmup_s: 120.0,
        }
    }

    fn report(seed: u64, pdr: f64, tx: u64) -> Report {
        Report {
            seed,
            messages: 10,
            pdr: Some(pdr),
            data_tx: tx,
            beacon_tx: 100,
            mean_delay_s: Some(0.01),
            p95_delay_s: Some(0.02),
            collisions: 0,
            coverage: vec![(DataId(0), vec![])],
        }
    }

    #[test]
    fn report_csv_has_fixed_columns_and_blank_absent_values() {
        let m = meta(1);
        let mut r = report(1, 0.9, 42);
        r.pdr = None;
        r.mean_delay_s = None;
        r.p95_delay_s = None;
        let text = reports_to_csv([(&m, &r)]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_HEADER);
        let row = lines.next().unwrap();
        assert_eq!(
            row,
            "trad,grid,uniform,80,,0,1,300,120,10,,42,100,,,0"
        );
    }

    #[test]
    fn aggregation_means_and_single_seed_zero_std() {
        let rows = vec![
            SweepRow {
                axis_value: 40.0,
                meta: meta(1),
                report: report(1, 0.8, 100),
            },
            SweepRow {
                axis_value: 40.0,
                meta: meta(2),
                report: report(2, 0.9, 120),
            },
            SweepRow {
                axis_value: 60.0,
                meta: meta(1),
                report: report(1, 0.95, 150),
            },
        ];
        let points = aggregate(&rows).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].seeds, 2);
        assert!((points[0].pdr_mean.unwrap() - 0.85).abs() < 1e-12);
        assert!((points[0].data_tx_mean - 110.0).abs() < 1e-12);
        assert!(points[0].pdr_std.unwrap() > 0.0);
        // Single seed: deviation zero.
        assert_eq!(points[1].seeds, 1);
        assert_eq!(points[1].pdr_std, Some(0.0));
        assert_eq!(points[1].data_tx_std, 0.0);
        // Mean PDR stays in [0, 1].
        for p in &points {
            let pdr = p.pdr_mean.unwrap();
            assert!((0.0..=1.0).contains(&pdr));
        }
    }

    #[test]
    fn aggregating_nothing_is_an_error() {
        assert!(matches!(aggregate(&[]), Err(OutputError::Empty)));
    }
}
