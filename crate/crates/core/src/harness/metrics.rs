//! Performance indexes computed from emitted time series.

use crate::error::{Error, Result};
use crate::gravity::GravityModel;

use super::history::{gravity_block_names, SatelliteHistory};
use super::scenario::Scenario;

pub const STANDARD_GRAVITY: f64 = 9.8066;
const SECONDS_PER_DAY: f64 = 86400.0;
/// A coefficient matters for reporting when its truth magnitude exceeds
/// this threshold.
const RELEVANCE_THRESHOLD: f64 = 2e-3;
/// Convergence declared when the estimation error stays below 20% through
/// the end of the run.
const CONVERGENCE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct CoefficientReport {
    pub name: String,
    pub truth: f64,
    pub final_estimate: f64,
    /// Final error as a percentage of the truth magnitude (absent for zero
    /// truth coefficients).
    pub final_error_pct: Option<f64>,
    /// First instant (hours) after which the error stays below 20% through
    /// the end; absent when convergence is never sustained.
    pub convergence_h: Option<f64>,
    pub relevant: bool,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub satellite: usize,
    /// Propellant burned over the run, kg.
    pub fuel_kg: f64,
    /// Mean and maximum absolute radius tracking error, meters.
    pub delta_r_mean_m: f64,
    pub delta_r_max_m: f64,
    /// Time of the maximum radius error, seconds.
    pub delta_r_max_t_s: f64,
    /// Mean applied torque magnitude, N*m.
    pub torque_mean_nm: f64,
    /// Mean/max absolute pitch, roll, yaw tracking error, degrees.
    pub dtheta_mean_deg: [f64; 3],
    pub dtheta_max_deg: [f64; 3],
    /// Per-day mean radius error and fuel.
    pub per_day_delta_r_m: Vec<f64>,
    pub per_day_fuel_kg: Vec<f64>,
    pub coefficients: Vec<CoefficientReport>,
}

/// Trapezoidal time integral of sampled values.
fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
    }
    acc
}

/// Convenience wrapper returning hours.
pub fn sustained_crossing_time_hours(
    times: &[f64],
    errors: &[f64],
    threshold: f64,
) -> Option<f64> {
    sustained_crossing_time(times, errors, threshold).map(|t| t / 3600.0)
}

/// First sample time after which `error(t) < threshold` holds through the
/// end of the series.
pub fn sustained_crossing_time(times: &[f64], errors: &[f64], threshold: f64) -> Option<f64> {
    let mut last_bad: Option<usize> = None;
    for (i, &e) in errors.iter().enumerate() {
        if !(e < threshold) {
            last_bad = Some(i);
        }
    }
    match last_bad {
        None => times.first().copied(),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

pub fn compute_metrics(
    history: &SatelliteHistory,
    scenario: &Scenario,
    truth_gravity: &GravityModel,
) -> Result<MetricsReport> {
    if history.rows.len() < 2 {
        return Err(Error::invalid("compute_metrics: history is empty"));
    }
    let rows = &history.rows;
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let span = times[times.len() - 1] - times[0];
    let sat = &scenario.satellites[history.satellite];
    let target_r = sat.target_radius_m;

    // Fuel: m_F = m0 / (g0 Isp) * integral |a_u| dt over the applied
    // acceleration.
    let accel_mag: Vec<f64> = rows
        .iter()
        .map(|r| {
            (r.accel_applied[0].powi(2) + r.accel_applied[1].powi(2) + r.accel_applied[2].powi(2))
                .sqrt()
        })
        .collect();
    let fuel_scale =
        scenario.spacecraft.mass_kg / (STANDARD_GRAVITY * scenario.spacecraft.isp_s);
    let fuel_kg = fuel_scale * trapezoid(&times, &accel_mag);

    // Radius tracking error |r(t)| - R.
    let dr: Vec<f64> = rows.iter().map(|r| (r.r_m - target_r).abs()).collect();
    let delta_r_mean_m = trapezoid(&times, &dr) / span;
    let (mut delta_r_max_m, mut delta_r_max_t_s) = (0.0, times[0]);
    for (i, &v) in dr.iter().enumerate() {
        if v > delta_r_max_m {
            delta_r_max_m = v;
            delta_r_max_t_s = times[i];
        }
    }

    let torque_mag: Vec<f64> = rows
        .iter()
        .map(|r| {
            (r.torque_applied[0].powi(2)
                + r.torque_applied[1].powi(2)
                + r.torque_applied[2].powi(2))
            .sqrt()
        })
        .collect();
    let torque_mean_nm = trapezoid(&times, &torque_mag) / span;

    // Euler tracking errors against the stationary target attitude.
    let target_angles = crate::elements::euler_angles_clamped(&sat.sigma_target.to_rotation());
    let target = [target_angles.0, target_angles.1, target_angles.2];
    let mut dtheta_mean_deg = [0.0; 3];
    let mut dtheta_max_deg = [0.0; 3];
    for axis in 0..3 {
        let err: Vec<f64> = rows
            .iter()
            .map(|r| (r.euler_truth_rad[axis] - target[axis]).abs().to_degrees())
            .collect();
        dtheta_mean_deg[axis] = trapezoid(&times, &err) / span;
        dtheta_max_deg[axis] = err.iter().copied().fold(0.0, f64::max);
    }

    // Per-day series. The clock accumulates float roundoff over thousands
    // of ticks, so shave an epsilon before bucketing.
    let n_days = ((span - 1e-6) / SECONDS_PER_DAY).ceil().max(1.0) as usize;
    let mut per_day_delta_r_m = Vec::with_capacity(n_days);
    let mut per_day_fuel_kg = Vec::with_capacity(n_days);
    for day in 0..n_days {
        let lo = times[0] + day as f64 * SECONDS_PER_DAY;
        let hi = lo + SECONDS_PER_DAY;
        let idx: Vec<usize> = (0..rows.len())
            .filter(|&i| times[i] >= lo && times[i] <= hi)
            .collect();
        if idx.len() < 2 {
            per_day_delta_r_m.push(0.0);
            per_day_fuel_kg.push(0.0);
            continue;
        }
        let t_day: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        let dr_day: Vec<f64> = idx.iter().map(|&i| dr[i]).collect();
        let a_day: Vec<f64> = idx.iter().map(|&i| accel_mag[i]).collect();
        let day_span = t_day[t_day.len() - 1] - t_day[0];
        per_day_delta_r_m.push(trapezoid(&t_day, &dr_day) / day_span);
        per_day_fuel_kg.push(fuel_scale * trapezoid(&t_day, &a_day));
    }

    // Coefficient estimation metrics.
    let names = gravity_block_names(history.n_orb);
    let truth_block = truth_gravity.to_block(history.n_orb);
    let mut coefficients = Vec::with_capacity(names.len());
    for (ci, name) in names.iter().enumerate() {
        let truth = truth_block[ci];
        let final_estimate = rows.last().unwrap().grav_est[ci];
        let (final_error_pct, convergence_h) = if truth != 0.0 {
            let errors: Vec<f64> = rows
                .iter()
                .map(|r| ((r.grav_est[ci] - truth) / truth).abs())
                .collect();
            let conv = sustained_crossing_time(&times, &errors, CONVERGENCE_FRACTION)
                .map(|t| t / 3600.0);
            (Some(errors[errors.len() - 1] * 100.0), conv)
        } else {
            (None, None)
        };
        coefficients.push(CoefficientReport {
            name: name.clone(),
            truth,
            final_estimate,
            final_error_pct,
            convergence_h,
            relevant: truth.abs() > RELEVANCE_THRESHOLD,
        });
    }

    Ok(MetricsReport {
        satellite: history.satellite,
        fuel_kg,
        delta_r_mean_m,
        delta_r_max_m,
        delta_r_max_t_s,
        torque_mean_nm,
        dtheta_mean_deg,
        dtheta_max_deg,
        per_day_delta_r_m,
        per_day_fuel_kg,
        coefficients,
    })
}
