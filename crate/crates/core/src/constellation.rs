//! Closed-loop scheduling for one or many spacecraft, with centralized
//! inverse-variance fusion of the identified gravity coefficients.
//!
//! Every epoch covers one orbit-filter interval: the orbit plan is
//! refreshed every `orbit_dt / orbit_interval` epochs, the attitude plan
//! every epoch, the attitude filter runs `orbit_interval /
//! attitude_interval` times inside the epoch, the orbit filter once at the
//! end, and fusion follows the orbit filter call. Satellites advance in
//! lock step; fusion is the only cross-satellite coupling and acts as a
//! barrier, so results do not depend on per-satellite execution order.

use nalgebra::DVector;

use crate::dynamics::{propagate_truth, TruthState};
use crate::elements::{rot_orbit_from_inertial, Mrp};
use crate::error::{Error, Result};
use crate::gravity::GravityModel;
use crate::guidance::OrbitReference;
use crate::harness::{
    derive_seed, gravity_block_names, HistoryRow, SatelliteHistory, Scenario,
};
use crate::mpc::{mpc_step_attitude, mpc_step_orbit, ControlPlan};
use crate::navfilters::{
    reconstruct_body_orbit, AttitudeFilter, AttitudeInitialSigmas, AttitudeMeasNoise, OrbitFilter,
    OrbitInitialSigmas, OrbitMeasNoise,
};
use crate::sensors::{select_landmarks, SensorSim};

/// Inverse-variance weighted mean of scalar estimates. Weights are
/// `(1/sigma)^2`, normalized; sigmas are floored at 1e-15.
pub fn fuse_inverse_variance(values: &[f64], sigmas: &[f64]) -> Result<f64> {
    if values.is_empty() || values.len() != sigmas.len() {
        return Err(Error::invalid("fuse_inverse_variance: shape mismatch"));
    }
    let mut wsum = 0.0;
    let mut acc = 0.0;
    for (&v, &s) in values.iter().zip(sigmas.iter()) {
        let w = 1.0 / s.max(1e-15).powi(2);
        wsum += w;
        acc += w * v;
    }
    Ok(acc / wsum)
}

/// Per-coefficient fusion inputs from one filter kind across the
/// constellation.
#[derive(Debug, Clone)]
pub struct FusionInput {
    /// `values[sat][coef]`.
    pub values: Vec<Vec<f64>>,
    /// Matching marginal standard deviations.
    pub sigmas: Vec<Vec<f64>>,
}

impl FusionInput {
    /// Fused value per coefficient.
    pub fn fuse(&self) -> Result<Vec<f64>> {
        let n_coef = self.values.first().map(|v| v.len()).unwrap_or(0);
        let mut out = Vec::with_capacity(n_coef);
        for c in 0..n_coef {
            let vals: Vec<f64> = self.values.iter().map(|v| v[c]).collect();
            let sigs: Vec<f64> = self.sigmas.iter().map(|v| v[c]).collect();
            out.push(fuse_inverse_variance(&vals, &sigs)?);
        }
        Ok(out)
    }
}

/// One spacecraft's full runtime: truth, sensors, filters, plans and log.
pub struct SatelliteRuntime {
    pub index: usize,
    pub truth: TruthState,
    pub sensors: SensorSim,
    pub orbit_filter: OrbitFilter,
    pub attitude_filter: AttitudeFilter,
    pub orbit_reference: Option<OrbitReference>,
    pub orbit_plan: Option<ControlPlan>,
    pub attitude_plan: Option<ControlPlan>,
    orbit_warm: Option<DVector<f64>>,
    attitude_warm: Option<DVector<f64>>,
    pub history: SatelliteHistory,
}

/// Completed run: per-satellite histories in scenario order.
pub struct RunOutput {
    pub histories: Vec<SatelliteHistory>,
    /// Total clamped behind-plane sigma-point predictions (diagnostic).
    pub behind_plane_events: usize,
    pub schedule: ScheduleAudit,
}

/// Counters proving the nested schedule ran as configured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScheduleAudit {
    /// Attitude filter calls per satellite.
    pub attitude_steps: usize,
    /// Orbit filter calls per satellite.
    pub orbit_steps: usize,
    /// Orbit MPC plans per satellite.
    pub orbit_plans: usize,
    /// Attitude MPC plans per satellite.
    pub attitude_plans: usize,
    /// Fusion barriers executed.
    pub fusions: usize,
}

fn build_runtime(scenario: &Scenario, index: usize) -> Result<SatelliteRuntime> {
    let spec = &scenario.satellites[index];
    let mu = scenario.asteroid.gravity.mu;
    let x0 = spec.initial_mee()?;

    // Truth starts exactly on the reference: body at the target attitude
    // relative to the orbit frame, rotating with the frame as predicted by
    // the (initially empty) gravity knowledge.
    let rot_oi = rot_orbit_from_inertial(&x0, mu)?;
    let rot_bo = spec.sigma_target.to_rotation();
    let sigma_bi = Mrp::from_rotation(&(rot_bo * rot_oi));
    let omega_orbit = crate::elements::orbit_frame_angular_velocity(&x0, 0.0, mu);
    let omega0 = rot_bo * omega_orbit;
    let truth = TruthState::new(x0, sigma_bi, omega0);

    let fs = &scenario.filters;
    let mut orbit_filter = OrbitFilter::new(
        &x0,
        fs.n_orb,
        OrbitInitialSigmas {
            p_m: fs.sigma0_p_m,
            elements: fs.sigma0_elements,
            gravity: fs.sigma0_gravity,
        },
        OrbitMeasNoise {
            pixel_sigma_px: scenario.sensors.pixel_sigma_px,
            range_sigma_m: scenario.sensors.lidar_sigma_m,
            include_quantization: scenario.sensors.model_quantization_noise,
        },
    );
    orbit_filter.params = crate::ukf::UkfParams {
        alpha: fs.ukf_alpha,
        theta: fs.ukf_theta,
        beta: fs.ukf_beta,
        lambda_spread: (fs.ukf_theta * fs.ukf_theta - 1.0) * OrbitFilter::dim(fs.n_orb) as f64,
    };
    let mut attitude_filter = AttitudeFilter::new(
        &sigma_bi,
        &omega0,
        fs.n_att,
        AttitudeInitialSigmas {
            mrp: fs.sigma0_mrp,
            omega: fs.sigma0_omega,
            gravity: fs.sigma0_gravity,
            gyro_bias: fs.sigma0_gyro_bias,
        },
        AttitudeMeasNoise {
            star_sigma_rad: scenario.sensors.star_sigma_rad,
            gyro_sigma: scenario.sensors.gyro_sigma_rad_s,
        },
    );
    attitude_filter.params = crate::ukf::UkfParams {
        alpha: fs.ukf_alpha,
        theta: fs.ukf_theta,
        beta: fs.ukf_beta,
        lambda_spread: (fs.ukf_theta * fs.ukf_theta - 1.0) * AttitudeFilter::dim(fs.n_att) as f64,
    };

    let sensors = SensorSim::new(
        scenario.sensors.suite(),
        derive_seed(scenario.seed, index as u64 + 1),
    );

    Ok(SatelliteRuntime {
        index,
        truth,
        sensors,
        orbit_filter,
        attitude_filter,
        orbit_reference: None,
        orbit_plan: None,
        attitude_plan: None,
        orbit_warm: None,
        attitude_warm: None,
        history: SatelliteHistory {
            satellite: index,
            n_orb: scenario.filters.n_orb,
            rows: Vec::new(),
        },
    })
}

fn point_mass_model(scenario: &Scenario, degree: usize) -> GravityModel {
    GravityModel::zeros(
        scenario.asteroid.gravity.mu,
        scenario.asteroid.gravity.re,
        degree,
    )
}

fn record_row(sat: &mut SatelliteRuntime, scenario: &Scenario) -> Result<()> {
    let mu = scenario.asteroid.gravity.mu;
    let t = sat.truth.t;
    let truth_mee = sat.truth.orbit;
    let est_mee = sat.orbit_filter.mean_mee();

    let sph = crate::elements::mee_to_spherical(
        &truth_mee,
        scenario.asteroid.rotation_angle(t),
        mu,
    )?;
    let sigma_bo_truth = reconstruct_body_orbit(&sat.truth.sigma_bi, &truth_mee, mu)?;
    let sigma_bo_est =
        reconstruct_body_orbit(&sat.attitude_filter.mean_sigma_bi(), &est_mee, mu)?;
    let (pitch, roll, yaw) = crate::elements::euler_angles_clamped(&sigma_bo_truth.to_rotation());

    let tau = scenario.spacecraft.actuator_tau;
    let accel_cmd = sat.truth.accel.current;
    let accel_applied = sat.truth.accel.value(t, tau);
    let torque_cmd = sat.truth.torque.current;
    let torque_applied = sat.truth.torque.value(t, tau);

    sat.history.rows.push(HistoryRow {
        t,
        truth_mee: truth_mee.to_array(),
        est_mee: est_mee.to_array(),
        r_m: sph.r,
        lon_rad: sph.lon,
        lat_rad: sph.lat,
        sigma_bo_truth: [sigma_bo_truth.0.x, sigma_bo_truth.0.y, sigma_bo_truth.0.z],
        sigma_bo_est: [sigma_bo_est.0.x, sigma_bo_est.0.y, sigma_bo_est.0.z],
        euler_truth_rad: [pitch, roll, yaw],
        accel_cmd: [accel_cmd.x, accel_cmd.y, accel_cmd.z],
        accel_applied: [accel_applied.x, accel_applied.y, accel_applied.z],
        torque_cmd: [torque_cmd.x, torque_cmd.y, torque_cmd.z],
        torque_applied: [torque_applied.x, torque_applied.y, torque_applied.z],
        grav_est: sat.orbit_filter.gravity_block_mean().to_vec(),
        grav_sigma: sat.orbit_filter.gravity_block_sigma(),
    });
    Ok(())
}

fn fuse_and_write_back(sats: &mut [SatelliteRuntime]) -> Result<()> {
    if sats.is_empty() {
        return Ok(());
    }
    // Orbit-filter blocks fused across satellites, attitude-filter blocks
    // fused separately (covariances untouched; with one satellite both
    // reduce to the identity).
    let orbit_input = FusionInput {
        values: sats
            .iter()
            .map(|s| s.orbit_filter.gravity_block_mean().to_vec())
            .collect(),
        sigmas: sats.iter().map(|s| s.orbit_filter.gravity_block_sigma()).collect(),
    };
    let fused_orbit = orbit_input.fuse()?;
    let attitude_input = FusionInput {
        values: sats
            .iter()
            .map(|s| s.attitude_filter.gravity_block_mean().to_vec())
            .collect(),
        sigmas: sats
            .iter()
            .map(|s| s.attitude_filter.gravity_block_sigma())
            .collect(),
    };
    let fused_attitude = attitude_input.fuse()?;
    for sat in sats.iter_mut() {
        sat.orbit_filter.set_gravity_block_mean(&fused_orbit);
        sat.attitude_filter.set_gravity_block_mean(&fused_attitude);
    }
    Ok(())
}

fn fuse_attitude_blocks(sats: &mut [SatelliteRuntime]) -> Result<()> {
    let input = FusionInput {
        values: sats
            .iter()
            .map(|s| s.attitude_filter.gravity_block_mean().to_vec())
            .collect(),
        sigmas: sats
            .iter()
            .map(|s| s.attitude_filter.gravity_block_sigma())
            .collect(),
    };
    let fused = input.fuse()?;
    for sat in sats.iter_mut() {
        sat.attitude_filter.set_gravity_block_mean(&fused);
    }
    Ok(())
}

/// Run the full scenario over all listed satellites.
pub fn run_constellation(scenario: &Scenario) -> Result<RunOutput> {
    let indices: Vec<usize> = (0..scenario.satellites.len()).collect();
    run_satellites(scenario, &indices)
}

/// Run a single satellite of the scenario standalone (no fusion with
/// anybody; the per-satellite noise streams match the constellation run).
pub fn run_single(scenario: &Scenario, index: usize) -> Result<RunOutput> {
    if index >= scenario.satellites.len() {
        return Err(Error::invalid(format!(
            "run_single: satellite {index} not in scenario"
        )));
    }
    run_satellites(scenario, &[index])
}

fn run_satellites(scenario: &Scenario, indices: &[usize]) -> Result<RunOutput> {
    scenario.validate()?;
    let fs = &scenario.filters;
    let orbit_dt = fs.orbit_interval_s;
    let att_dt = fs.attitude_interval_s;
    let atts_per_orbit = (orbit_dt / att_dt).round() as usize;
    let epochs_per_command = (scenario.control.orbit_dt_s / orbit_dt).round() as usize;
    let epochs_per_replan = (scenario.control.orbit_replan_s / orbit_dt).round() as usize;
    let epochs = (scenario.duration_s / orbit_dt).round() as usize;

    let mu = scenario.asteroid.gravity.mu;
    let asteroid = &scenario.asteroid;
    let spacecraft = &scenario.spacecraft;
    let orbit_cfg = scenario.orbit_mpc_config(spacecraft.accel_max);
    let attitude_cfg = scenario.attitude_mpc_config(spacecraft.torque_max);
    let camera = scenario.sensors.camera();

    let mut sats: Vec<SatelliteRuntime> = indices
        .iter()
        .map(|&i| build_runtime(scenario, i))
        .collect::<Result<_>>()?;
    for sat in sats.iter_mut() {
        record_row(sat, scenario)?;
    }

    let mut behind_total = 0usize;
    let mut audit = ScheduleAudit::default();
    for epoch in 0..epochs {
        let t_epoch = epoch as f64 * orbit_dt;

        for sat in sats.iter_mut() {
            let spec = &scenario.satellites[sat.index];
            // Orbit plan refresh on the configured cadence; between
            // refreshes the standing plan's interval commands apply.
            if epoch % epochs_per_replan == 0 {
                let gravity_model = if scenario.control.learning {
                    sat.orbit_filter.gravity_estimate(asteroid)
                } else {
                    point_mass_model(scenario, fs.n_orb)
                };
                let warm = sat.orbit_warm.take();
                let (reference, plan) = mpc_step_orbit(
                    &sat.orbit_filter.mean_mee(),
                    &gravity_model,
                    spec.target_radius_m,
                    &orbit_cfg,
                    asteroid,
                    t_epoch,
                    scenario.control.reference_substeps,
                    warm.as_ref(),
                )
                .map_err(|e| tag_sat(e, sat.index, t_epoch))?;
                sat.truth
                    .accel
                    .command(plan.first_command(), t_epoch, spacecraft.actuator_tau);
                sat.orbit_warm = Some(plan.qp.x.clone());
                sat.orbit_reference = Some(reference);
                sat.orbit_plan = Some(plan);
                if sat.index == indices[0] {
                    audit.orbit_plans += 1;
                }
            } else if epoch % epochs_per_command == 0 {
                let plan = sat.orbit_plan.as_ref().expect("standing orbit plan");
                sat.truth
                    .accel
                    .command(plan.command_at(t_epoch), t_epoch, spacecraft.actuator_tau);
            }

            // Attitude plan refresh every epoch.
            let sigma_bo = reconstruct_body_orbit(
                &sat.attitude_filter.mean_sigma_bi(),
                &sat.orbit_filter.mean_mee(),
                mu,
            )
            .map_err(|e| tag_sat(e, sat.index, t_epoch))?;
            let gravity_att = if scenario.control.learning {
                sat.attitude_filter.gravity_estimate(asteroid)
            } else {
                point_mass_model(scenario, fs.n_att)
            };
            let reference = sat
                .orbit_reference
                .as_ref()
                .expect("orbit plan exists from epoch 0");
            let warm = sat.attitude_warm.take();
            let plan = mpc_step_attitude(
                &sigma_bo,
                &sat.attitude_filter.mean_omega(),
                reference,
                &gravity_att,
                &scenario.satellites[sat.index].sigma_target,
                &attitude_cfg,
                spacecraft,
                asteroid,
                t_epoch,
                warm.as_ref(),
            )
            .map_err(|e| tag_sat(e, sat.index, t_epoch))?;
            sat.truth
                .torque
                .command(plan.first_command(), t_epoch, spacecraft.actuator_tau);
            sat.attitude_warm = Some(plan.qp.x.clone());
            sat.attitude_plan = Some(plan);
            if sat.index == indices[0] {
                audit.attitude_plans += 1;
            }
        }

        // Fast loop: attitude sensing and filtering.
        for j in 0..atts_per_orbit {
            for sat in sats.iter_mut() {
                let t_sub = t_epoch + j as f64 * att_dt;
                sat.truth = propagate_truth(
                    &sat.truth,
                    att_dt,
                    spacecraft,
                    asteroid,
                    scenario.solar.as_ref(),
                )
                .map_err(|e| tag_sat(e, sat.index, t_sub))?;
                let z = sat
                    .sensors
                    .attitude_measurement(&sat.truth.sigma_bi, &sat.truth.omega)
                    .map_err(|e| tag_sat(e, sat.index, t_sub))?;
                let torque_cmd = sat.truth.torque.current;
                let orbit_mean = sat.orbit_filter.mean_mee();
                sat.attitude_filter
                    .step(
                        &z,
                        &orbit_mean,
                        &torque_cmd,
                        t_sub,
                        att_dt,
                        spacecraft,
                        asteroid,
                    )
                    .map_err(|e| tag_sat(e, sat.index, t_sub))?;
                if sat.index == indices[0] {
                    audit.attitude_steps += 1;
                }
            }
            if scenario.fuse_attitude_mid_loop && sats.len() > 1 {
                fuse_attitude_blocks(&mut sats)?;
            }
        }

        // Slow loop: landmark sensing and the orbit filter.
        let t_meas = t_epoch + orbit_dt;
        for sat in sats.iter_mut() {
            let selected = select_landmarks(
                &scenario.landmarks,
                &sat.truth.orbit,
                &sat.truth.sigma_bi,
                &camera,
                scenario.sensors.tracked_landmarks,
                t_meas,
                asteroid,
            )
            .map_err(|e| tag_sat(e, sat.index, t_meas))?;
            let accel_cmd = sat.truth.accel.current;
            let sigma_bi_est = sat.attitude_filter.mean_sigma_bi();
            let behind_before = sat.orbit_filter.behind_plane_events;
            if selected.is_empty() {
                sat.orbit_filter
                    .step(
                        None,
                        &scenario.landmarks,
                        &camera,
                        &sigma_bi_est,
                        &accel_cmd,
                        t_epoch,
                        orbit_dt,
                        asteroid,
                    )
                    .map_err(|e| tag_sat(e, sat.index, t_meas))?;
            } else {
                let z = sat
                    .sensors
                    .orbit_measurement(
                        &sat.truth.orbit,
                        &sat.truth.sigma_bi,
                        &selected,
                        &scenario.landmarks,
                        t_meas,
                        asteroid,
                    )
                    .map_err(|e| tag_sat(e, sat.index, t_meas))?;
                sat.orbit_filter
                    .step(
                        Some((&selected, &z)),
                        &scenario.landmarks,
                        &camera,
                        &sigma_bi_est,
                        &accel_cmd,
                        t_epoch,
                        orbit_dt,
                        asteroid,
                    )
                    .map_err(|e| tag_sat(e, sat.index, t_meas))?;
            }
            behind_total += sat.orbit_filter.behind_plane_events - behind_before;
            if sat.index == indices[0] {
                audit.orbit_steps += 1;
            }
        }

        // Constellation fusion after every orbit filter call.
        if sats.len() > 1 {
            fuse_and_write_back(&mut sats)?;
        }
        audit.fusions += 1;

        for sat in sats.iter_mut() {
            record_row(sat, scenario)?;
        }
    }

    Ok(RunOutput {
        histories: sats.into_iter().map(|s| s.history).collect(),
        behind_plane_events: behind_total,
        schedule: audit,
    })
}

fn tag_sat(e: Error, sat: usize, t: f64) -> Error {
    Error::Scenario(format!("satellite {sat} at t = {t:.1} s: {e}"))
}

/// Run the scenario in learning and non-learning mode with identical seeds
/// and truth; returns `(learning, non_learning)`.
pub fn compare_modes(scenario: &Scenario) -> Result<(RunOutput, RunOutput)> {
    let mut learning = scenario.clone();
    learning.control.learning = true;
    let mut fixed = scenario.clone();
    fixed.control.learning = false;
    Ok((run_constellation(&learning)?, run_constellation(&fixed)?))
}

/// Names of the fused coefficients, matching [`FusionInput`] ordering.
pub fn fused_coefficient_names(n_orb: usize) -> Vec<String> {
    gravity_block_names(n_orb)
}
