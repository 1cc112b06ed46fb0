//! Run persistence: per-satellite time-series tables, metrics summaries and
//! reloading emitted directories for post-hoc recomputation.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! re-reading a table reproduces the original values bit for bit and
//! seeded reruns emit byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gravity::gravity_block_len;

use super::history::{gravity_block_names, HistoryRow, SatelliteHistory};
use super::metrics::MetricsReport;
use super::scenario::Scenario;

const SERIES_PREFIX: &str = "sat_";
const SCENARIO_FILE: &str = "scenario.toml";
const GRAVITY_FILE: &str = "truth_gravity.tab";
const LANDMARK_FILE: &str = "landmarks.tab";
const METRICS_FILE: &str = "metrics.txt";

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn header_columns(n_orb: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "t_s",
        "truth_p_m",
        "truth_f",
        "truth_g",
        "truth_h",
        "truth_k",
        "truth_l_rad",
        "est_p_m",
        "est_f",
        "est_g",
        "est_h",
        "est_k",
        "est_l_rad",
        "r_m",
        "lon_rad",
        "lat_rad",
        "sigma_bo_truth_1",
        "sigma_bo_truth_2",
        "sigma_bo_truth_3",
        "sigma_bo_est_1",
        "sigma_bo_est_2",
        "sigma_bo_est_3",
        "pitch_rad",
        "roll_rad",
        "yaw_rad",
        "accel_cmd_r",
        "accel_cmd_t",
        "accel_cmd_n",
        "accel_applied_r",
        "accel_applied_t",
        "accel_applied_n",
        "torque_cmd_1",
        "torque_cmd_2",
        "torque_cmd_3",
        "torque_applied_1",
        "torque_applied_2",
        "torque_applied_3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for name in gravity_block_names(n_orb) {
        cols.push(format!("{name}_est"));
        cols.push(format!("{name}_sigma"));
    }
    cols
}

fn row_values(row: &HistoryRow) -> Vec<f64> {
    let mut v = Vec::with_capacity(37 + 2 * row.grav_est.len());
    v.push(row.t);
    v.extend_from_slice(&row.truth_mee);
    v.extend_from_slice(&row.est_mee);
    v.push(row.r_m);
    v.push(row.lon_rad);
    v.push(row.lat_rad);
    v.extend_from_slice(&row.sigma_bo_truth);
    v.extend_from_slice(&row.sigma_bo_est);
    v.extend_from_slice(&row.euler_truth_rad);
    v.extend_from_slice(&row.accel_cmd);
    v.extend_from_slice(&row.accel_applied);
    v.extend_from_slice(&row.torque_cmd);
    v.extend_from_slice(&row.torque_applied);
    for (e, s) in row.grav_est.iter().zip(row.grav_sigma.iter()) {
        v.push(*e);
        v.push(*s);
    }
    v
}

/// Write everything a run produced: the resolved scenario (with its data
/// files), one tab-separated series per satellite, and the metrics summary.
pub fn emit_outputs(
    out_dir: &Path,
    scenario: &Scenario,
    histories: &[SatelliteHistory],
    reports: &[MetricsReport],
) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    super::files::write_gravity_coefficients(&out_dir.join(GRAVITY_FILE), &scenario.asteroid.gravity)?;
    super::files::write_landmarks(&out_dir.join(LANDMARK_FILE), &scenario.landmarks)?;
    let scenario_text = scenario.to_toml_string(GRAVITY_FILE, LANDMARK_FILE);
    std::fs::write(out_dir.join(SCENARIO_FILE), scenario_text)
        .map_err(io_err(&out_dir.join(SCENARIO_FILE)))?;

    for history in histories {
        let path = out_dir.join(format!("{SERIES_PREFIX}{:03}.tsv", history.satellite));
        let mut text = String::new();
        let _ = writeln!(text, "{}", header_columns(history.n_orb).join("\t"));
        for row in &history.rows {
            let values = row_values(row);
            let mut line = String::with_capacity(values.len() * 20);
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    line.push('\t');
                }
                let _ = write!(line, "{v}");
            }
            text.push_str(&line);
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(io_err(&path))?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "scenario = {}", scenario.name);
    let _ = writeln!(summary, "seed = {}", scenario.seed);
    let _ = writeln!(summary, "duration_s = {}", scenario.duration_s);
    let _ = writeln!(summary, "satellites = {}", histories.len());
    for report in reports {
        summary.push_str(&metrics_to_text(report));
    }
    std::fs::write(out_dir.join(METRICS_FILE), summary)
        .map_err(io_err(&out_dir.join(METRICS_FILE)))?;
    Ok(())
}

/// Key-value rendering of one satellite's metrics.
pub fn metrics_to_text(report: &MetricsReport) -> String {
    let mut out = String::new();
    let p = format!("sat{}.", report.satellite);
    let _ = writeln!(out, "{p}fuel_kg = {}", report.fuel_kg);
    let _ = writeln!(out, "{p}delta_r_mean_m = {}", report.delta_r_mean_m);
    let _ = writeln!(out, "{p}delta_r_max_m = {}", report.delta_r_max_m);
    let _ = writeln!(out, "{p}delta_r_max_t_s = {}", report.delta_r_max_t_s);
    let _ = writeln!(out, "{p}torque_mean_nm = {}", report.torque_mean_nm);
    for (axis, name) in ["pitch", "roll", "yaw"].iter().enumerate() {
        let _ = writeln!(
            out,
            "{p}dtheta_mean_{name}_deg = {}",
            report.dtheta_mean_deg[axis]
        );
        let _ = writeln!(
            out,
            "{p}dtheta_max_{name}_deg = {}",
            report.dtheta_max_deg[axis]
        );
    }
    for (day, (dr, fuel)) in report
        .per_day_delta_r_m
        .iter()
        .zip(report.per_day_fuel_kg.iter())
        .enumerate()
    {
        let _ = writeln!(out, "{p}day{}.delta_r_mean_m = {dr}", day + 1);
        let _ = writeln!(out, "{p}day{}.fuel_kg = {fuel}", day + 1);
    }
    for c in &report.coefficients {
        if !c.relevant {
            continue;
        }
        let _ = writeln!(out, "{p}{}.truth = {}", c.name, c.truth);
        let _ = writeln!(out, "{p}{}.estimate = {}", c.name, c.final_estimate);
        if let Some(err) = c.final_error_pct {
            let _ = writeln!(out, "{p}{}.error_pct = {err}", c.name);
        }
        match c.convergence_h {
            Some(h) => {
                let _ = writeln!(out, "{p}{}.convergence_h = {h}", c.name);
            }
            None => {
                let _ = writeln!(out, "{p}{}.convergence_h = no", c.name);
            }
        }
    }
    out
}

/// Side-by-side summary for mode comparisons.
pub fn emit_compare_summary(
    out_dir: &Path,
    label_a: &str,
    reports_a: &[MetricsReport],
    label_b: &str,
    reports_b: &[MetricsReport],
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# mode comparison: {label_a} vs {label_b}");
    for (a, b) in reports_a.iter().zip(reports_b.iter()) {
        let p = format!("sat{}.", a.satellite);
        let _ = writeln!(out, "{p}{label_a}.delta_r_mean_m = {}", a.delta_r_mean_m);
        let _ = writeln!(out, "{p}{label_b}.delta_r_mean_m = {}", b.delta_r_mean_m);
        let _ = writeln!(out, "{p}{label_a}.delta_r_max_m = {}", a.delta_r_max_m);
        let _ = writeln!(out, "{p}{label_b}.delta_r_max_m = {}", b.delta_r_max_m);
        let _ = writeln!(out, "{p}{label_a}.fuel_kg = {}", a.fuel_kg);
        let _ = writeln!(out, "{p}{label_b}.fuel_kg = {}", b.fuel_kg);
        let _ = writeln!(out, "{p}{label_a}.torque_mean_nm = {}", a.torque_mean_nm);
        let _ = writeln!(out, "{p}{label_b}.torque_mean_nm = {}", b.torque_mean_nm);
    }
    let path = out_dir.join("compare.txt");
    std::fs::write(&path, out).map_err(io_err(&path))
}

/// Reload an emitted directory: the resolved scenario plus every satellite
/// series, for post-hoc metrics recomputation.
pub fn load_history_dir(dir: &Path) -> Result<(Scenario, Vec<SatelliteHistory>)> {
    let scenario = Scenario::load(&dir.join(SCENARIO_FILE))?;
    let n_orb = scenario.filters.n_orb;
    let block = gravity_block_len(n_orb);
    let expected_cols = 37 + 2 * block;

    let mut histories = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with(SERIES_PREFIX) && n.ends_with(".tsv"))
                .unwrap_or(false)
        })
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let satellite: usize = name[SERIES_PREFIX.len()..].parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            msg: "satellite index not parseable from file name".into(),
        })?;
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            msg: "empty series file".into(),
        })?;
        if header.split('\t').count() != expected_cols {
            return Err(Error::Parse {
                path: path.display().to_string(),
                msg: format!(
                    "expected {expected_cols} columns for degree {n_orb}, found {}",
                    header.split('\t').count()
                ),
            });
        }
        let mut rows = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split('\t')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    msg: format!("line {}: {e}", ln + 2),
                })?;
            if v.len() != expected_cols {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    msg: format!("line {}: wrong column count", ln + 2),
                });
            }
            let take3 = |o: usize| [v[o], v[o + 1], v[o + 2]];
            let take6 = |o: usize| [v[o], v[o + 1], v[o + 2], v[o + 3], v[o + 4], v[o + 5]];
            let mut grav_est = Vec::with_capacity(block);
            let mut grav_sigma = Vec::with_capacity(block);
            for k in 0..block {
                grav_est.push(v[37 + 2 * k]);
                grav_sigma.push(v[37 + 2 * k + 1]);
            }
            rows.push(HistoryRow {
                t: v[0],
                truth_mee: take6(1),
                est_mee: take6(7),
                r_m: v[13],
                lon_rad: v[14],
                lat_rad: v[15],
                sigma_bo_truth: take3(16),
                sigma_bo_est: take3(19),
                euler_truth_rad: take3(22),
                accel_cmd: take3(25),
                accel_applied: take3(28),
                torque_cmd: take3(31),
                torque_applied: take3(34),
                grav_est,
                grav_sigma,
            });
        }
        histories.push(SatelliteHistory {
            satellite,
            n_orb,
            rows,
        });
    }
    if histories.is_empty() {
        return Err(Error::scenario(format!(
            "no satellite series found in {}",
            dir.display()
        )));
    }
    Ok((scenario, histories))
}
