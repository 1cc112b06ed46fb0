//! Truth propagation and filter process flows.
//!
//! The truth simulation integrates the coupled orbit/attitude dynamics with
//! the full perturbation stack (harmonics at the truth degree, Sun third
//! body, solar radiation pressure, controls with first-order actuator
//! transients). The filter process flows integrate the same dynamics
//! restricted to what the filters know: harmonics at the estimation degree
//! with the extended state's own coefficients, known commanded controls and
//! no solar terms.

use nalgebra::{DVector, Matrix3, Vector6};

use crate::elements::{Mee, Mrp, Vec3};
use crate::error::{Error, Result};
use crate::gravity::{
    self, gravity_block_len, AsteroidModel, GravityModel, MassDistribution, SolarModel,
};
use crate::ode::{self, OdeSettings};

/// Physical spacecraft description shared by the truth simulation and the
/// filters.
#[derive(Debug, Clone)]
pub struct SpacecraftConfig {
    pub inertia: Matrix3<f64>,
    pub inertia_inv: Matrix3<f64>,
    pub masses: MassDistribution,
    pub reflectivity: f64,
    pub srp_area_m2: f64,
    pub mass_kg: f64,
    /// Per-axis control acceleration bound, m/s^2.
    pub accel_max: Vec3,
    /// Per-axis control torque bound, N*m.
    pub torque_max: Vec3,
    /// Actuator transient constant, 1/s.
    pub actuator_tau: f64,
    pub isp_s: f64,
}

impl SpacecraftConfig {
    /// Build with the inertia tensor derived from the mass distribution.
    pub fn from_masses(
        masses: MassDistribution,
        reflectivity: f64,
        srp_area_m2: f64,
        mass_kg: f64,
        accel_max: Vec3,
        torque_max: Vec3,
        actuator_tau: f64,
        isp_s: f64,
    ) -> Result<Self> {
        let inertia = masses.inertia();
        Self::with_inertia(
            inertia,
            masses,
            reflectivity,
            srp_area_m2,
            mass_kg,
            accel_max,
            torque_max,
            actuator_tau,
            isp_s,
        )
    }

    /// Build with an explicit inertia tensor, verified against the mass
    /// distribution to 1e-6 relative.
    #[allow(clippy::too_many_arguments)]
    pub fn with_inertia(
        inertia: Matrix3<f64>,
        masses: MassDistribution,
        reflectivity: f64,
        srp_area_m2: f64,
        mass_kg: f64,
        accel_max: Vec3,
        torque_max: Vec3,
        actuator_tau: f64,
        isp_s: f64,
    ) -> Result<Self> {
        if (inertia - inertia.transpose()).abs().max() > 1e-9 * inertia.abs().max() {
            return Err(Error::invalid("SpacecraftConfig: inertia must be symmetric"));
        }
        let from_masses = masses.inertia();
        let diff = (inertia - from_masses).abs().max();
        if diff > 1e-6 * from_masses.abs().max() {
            return Err(Error::invalid(
                "SpacecraftConfig: inertia inconsistent with the mass distribution",
            ));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or(Error::Linalg("SpacecraftConfig: inertia not invertible"))?;
        if inertia.cholesky().is_none() {
            return Err(Error::invalid("SpacecraftConfig: inertia must be positive definite"));
        }
        if !(mass_kg > 0.0) {
            return Err(Error::invalid("SpacecraftConfig: mass must be positive"));
        }
        Ok(SpacecraftConfig {
            inertia,
            inertia_inv,
            masses,
            reflectivity,
            srp_area_m2,
            mass_kg,
            accel_max,
            torque_max,
            actuator_tau,
            isp_s,
        })
    }
}

/// Attitude of the body relative to the orbit frame plus the inertial
/// angular rate (body frame); the state tracked by the attitude MPC.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeState {
    pub sigma_bo: Mrp,
    pub omega: Vec3,
}

/// One commanded actuator channel with its exponential transient.
#[derive(Debug, Clone, Copy)]
pub struct ActuatorChannel {
    pub current: Vec3,
    pub previous: Vec3,
    pub switch_time: f64,
}

impl ActuatorChannel {
    pub fn idle() -> Self {
        ActuatorChannel {
            current: Vec3::zeros(),
            previous: Vec3::zeros(),
            switch_time: 0.0,
        }
    }

    /// Register a new command taking effect at `t`.
    pub fn command(&mut self, new_command: Vec3, t: f64, tau: f64) {
        // The transient continues from the actual output at the switch.
        self.previous = self.value(t, tau);
        self.current = new_command;
        self.switch_time = t;
    }

    /// Applied output at time `t`:
    /// `u(t) = u_k + exp(-tau (t - t_switch)) (u_prev - u_k)`.
    pub fn value(&self, t: f64, tau: f64) -> Vec3 {
        let dt = (t - self.switch_time).max(0.0);
        self.current + (-tau * dt).exp() * (self.previous - self.current)
    }
}

/// Full simulated truth: orbit, inertial attitude, actuator states and
/// clock.
#[derive(Debug, Clone)]
pub struct TruthState {
    pub t: f64,
    pub orbit: Mee,
    pub sigma_bi: Mrp,
    pub omega: Vec3,
    pub accel: ActuatorChannel,
    pub torque: ActuatorChannel,
}

impl TruthState {
    pub fn new(orbit: Mee, sigma_bi: Mrp, omega: Vec3) -> Self {
        TruthState {
            t: 0.0,
            orbit,
            sigma_bi,
            omega,
            accel: ActuatorChannel::idle(),
            torque: ActuatorChannel::idle(),
        }
    }
}

/// Gauss variational equations for modified equinoctial elements with the
/// perturbing acceleration `[a_r, a_t, a_n]` expressed in the orbit frame.
pub fn gve_rates(x: &Mee, accel: &Vec3, mu: f64) -> Result<Vector6<f64>> {
    let w = x.w();
    if w <= 1e-12 {
        return Err(Error::Singular("gve_rates: w <= 0 (rectilinear degeneracy)"));
    }
    let (sl, cl) = x.l.sin_cos();
    let sq = (x.p / mu).sqrt();
    let s_sq = x.s_sq();
    let oop = x.h * sl - x.k * cl;
    let (ar, at, an) = (accel.x, accel.y, accel.z);
    Ok(Vector6::new(
        2.0 * x.p / w * sq * at,
        sq * (ar * sl + ((w + 1.0) * cl + x.f) * at / w - oop * x.g * an / w),
        sq * (-ar * cl + ((w + 1.0) * sl + x.g) * at / w + oop * x.f * an / w),
        sq * s_sq * an * cl / (2.0 * w),
        sq * s_sq * an * sl / (2.0 * w),
        (mu * x.p).sqrt() * (w / x.p).powi(2) + sq * oop * an / w,
    ))
}

/// MRP kinematics `sigma_dot = C(sigma) omega / 4` (inertial-relative).
pub fn mrp_rates_inertial(sigma_bi: &Mrp, omega: &Vec3) -> Vec3 {
    0.25 * sigma_bi.kinematics_matrix() * omega
}

/// Orbit-relative MRP kinematics, subtracting the rotated orbit-frame rate.
pub fn mrp_rates_orbit_relative(sigma_bo: &Mrp, omega: &Vec3, omega_orbit: &Vec3) -> Vec3 {
    0.25 * sigma_bo.kinematics_matrix() * (omega - sigma_bo.to_rotation() * omega_orbit)
}

/// Rigid-body rate: `omega_dot = J^-1 (T - omega x J omega)`.
pub fn omega_rates(omega: &Vec3, torque_body: &Vec3, cfg: &SpacecraftConfig) -> Vec3 {
    cfg.inertia_inv * (torque_body - omega.cross(&(cfg.inertia * omega)))
}

/// Propagate the coupled truth dynamics over `dt` with every perturbation
/// enabled. The asteroid model carries the truth gravity field.
pub fn propagate_truth(
    state: &TruthState,
    dt: f64,
    cfg: &SpacecraftConfig,
    asteroid: &AsteroidModel,
    solar: Option<&SolarModel>,
) -> Result<TruthState> {

    let mut y0 = DVector::zeros(12);
    y0.rows_mut(0, 6).copy_from_slice(&state.orbit.to_array());
    y0.rows_mut(6, 3).copy_from_slice(state.sigma_bi.0.as_slice());
    y0.rows_mut(9, 3).copy_from_slice(state.omega.as_slice());

    let mut atol = DVector::from_element(12, 1e-12);
    atol[0] = 1e-9;
    let settings = OdeSettings::new(1e-10, ode::Atol::PerComponent(atol), dt);

    let mut rhs_error: Option<Error> = None;
    let rhs = |t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
        if rhs_error.is_some() {
            dy.fill(0.0);
            return;
        }
        match truth_rhs(t, y, cfg, asteroid, solar, state) {
            Ok(d) => dy.copy_from(&d),
            Err(e) => {
                rhs_error = Some(e);
                dy.fill(0.0);
            }
        }
    };
    let y1 = ode::integrate(rhs, state.t, &y0, state.t + dt, &settings)?;
    if let Some(e) = rhs_error {
        return Err(e);
    }

    let sigma = Mrp::new(y1[6], y1[7], y1[8]).shadow_if_needed();
    Ok(TruthState {
        t: state.t + dt,
        orbit: Mee::from_slice(&y1.as_slice()[0..6]),
        sigma_bi: sigma,
        omega: Vec3::new(y1[9], y1[10], y1[11]),
        accel: state.accel,
        torque: state.torque,
    })
}

fn truth_rhs(
    t: f64,
    y: &DVector<f64>,
    cfg: &SpacecraftConfig,
    asteroid: &AsteroidModel,
    solar: Option<&SolarModel>,
    state: &TruthState,
) -> Result<DVector<f64>> {
    let mu = asteroid.gravity.mu;
    let x = Mee::from_slice(&y.as_slice()[0..6]);
    let sigma_bi = Mrp::new(y[6], y[7], y[8]);
    let omega = Vec3::new(y[9], y[10], y[11]);

    let (pos, vel) = crate::elements::mee_to_cartesian(&x, mu)?;
    let rot_oi = gravity::orbit_rot_from_rv(&pos, &vel)?;

    let mut accel_i = gravity::harmonics_accel_inertial(&asteroid.gravity, &pos, t, asteroid)?;
    if let Some(sol) = solar {
        accel_i += gravity::sun_third_body_inertial(&pos, sol);
        accel_i += gravity::srp_accel_inertial(
            &pos,
            sol,
            cfg.reflectivity,
            cfg.srp_area_m2,
            cfg.mass_kg,
        );
    }
    let accel_orbit = rot_oi * accel_i + state.accel.value(t, cfg.actuator_tau);
    let mee_dot = gve_rates(&x, &accel_orbit, mu)?;

    let rot_bo = sigma_bi.to_rotation() * rot_oi.transpose();
    let torque_grav = gravity::gravity_gradient_torque_at(
        &asteroid.gravity,
        &cfg.masses,
        &pos,
        &rot_oi,
        &rot_bo,
        t,
        asteroid,
    )?;
    let torque = torque_grav + state.torque.value(t, cfg.actuator_tau);

    let sigma_dot = mrp_rates_inertial(&sigma_bi, &omega);
    let omega_dot = omega_rates(&omega, &torque, cfg);

    let mut dy = DVector::zeros(12);
    dy.rows_mut(0, 6).copy_from_slice(mee_dot.as_slice());
    dy.rows_mut(6, 3).copy_from_slice(sigma_dot.as_slice());
    dy.rows_mut(9, 3).copy_from_slice(omega_dot.as_slice());
    Ok(dy)
}

/// Propagate the orbit extended state `[mee, C_ij/S_ij block]` over `dt`.
///
/// Harmonics use the state's own gravity block at degree `n_orb`; the
/// commanded control is known; solar perturbations are excluded; the
/// gravity parameters are held constant.
pub fn orbit_process_flow(
    y0: &DVector<f64>,
    t0: f64,
    dt: f64,
    accel_cmd: &Vec3,
    asteroid: &AsteroidModel,
    n_orb: usize,
) -> Result<DVector<f64>> {
    let expected = 6 + gravity_block_len(n_orb);
    if y0.len() != expected {
        return Err(Error::invalid(format!(
            "orbit extended state has dimension {}, expected {expected}",
            y0.len()
        )));
    }
    let mu = asteroid.gravity.mu;
    let model = GravityModel::from_block(mu, asteroid.gravity.re, n_orb, &y0.as_slice()[6..])?;

    let mee0 = DVector::from_row_slice(&y0.as_slice()[0..6]);
    let settings = OdeSettings::mee(dt);
    let mut rhs_error: Option<Error> = None;
    let rhs = |t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
        if rhs_error.is_some() {
            dy.fill(0.0);
            return;
        }
        let x = Mee::from_slice(y.as_slice());
        let res = (|| -> Result<Vector6<f64>> {
            let a = gravity::gravity_accel_orbit_frame(&model, &x, t, asteroid)? + accel_cmd;
            gve_rates(&x, &a, mu)
        })();
        match res {
            Ok(d) => dy.copy_from_slice(d.as_slice()),
            Err(e) => {
                rhs_error = Some(e);
                dy.fill(0.0);
            }
        }
    };
    let mee1 = ode::integrate(rhs, t0, &mee0, t0 + dt, &settings)?;
    if let Some(e) = rhs_error {
        return Err(e);
    }
    let mut out = y0.clone();
    out.rows_mut(0, 6).copy_from(&mee1);
    Ok(out)
}

/// Propagate the attitude extended state
/// `[sigma_BI, omega, C_ij/S_ij block, gyro bias]` over `dt`.
///
/// A companion orbit propagation (GVE under the state's own gravity block)
/// runs inside the flow from the supplied orbit estimate, because the
/// gravity-gradient torque depends on position. Gravity parameters and bias
/// stay constant.
pub fn attitude_process_flow(
    y0: &DVector<f64>,
    t0: f64,
    dt: f64,
    orbit_estimate: &Mee,
    torque_cmd: &Vec3,
    cfg: &SpacecraftConfig,
    asteroid: &AsteroidModel,
    n_att: usize,
) -> Result<DVector<f64>> {
    let block = gravity_block_len(n_att);
    let expected = 9 + block;
    if y0.len() != expected {
        return Err(Error::invalid(format!(
            "attitude extended state has dimension {}, expected {expected}",
            y0.len()
        )));
    }
    let mu = asteroid.gravity.mu;
    let model = GravityModel::from_block(
        mu,
        asteroid.gravity.re,
        n_att,
        &y0.as_slice()[6..6 + block],
    )?;

    // Joint state: [sigma (3), omega (3), companion mee (6)].
    let mut joint0 = DVector::zeros(12);
    joint0.rows_mut(0, 6).copy_from(&y0.rows(0, 6));
    joint0.rows_mut(6, 6).copy_from_slice(&orbit_estimate.to_array());

    let mut atol = DVector::from_element(12, 1e-12);
    atol[6] = 1e-9;
    let settings = OdeSettings::new(1e-10, ode::Atol::PerComponent(atol), dt);

    let mut rhs_error: Option<Error> = None;
    let rhs = |t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
        if rhs_error.is_some() {
            dy.fill(0.0);
            return;
        }
        let res = (|| -> Result<()> {
            let sigma = Mrp::new(y[0], y[1], y[2]);
            let omega = Vec3::new(y[3], y[4], y[5]);
            let x = Mee::from_slice(&y.as_slice()[6..12]);

            let (pos, vel) = crate::elements::mee_to_cartesian(&x, mu)?;
            let rot_oi = gravity::orbit_rot_from_rv(&pos, &vel)?;
            let a_orbit = rot_oi * gravity::harmonics_accel_inertial(&model, &pos, t, asteroid)?;
            let mee_dot = gve_rates(&x, &a_orbit, mu)?;

            let rot_bo = sigma.to_rotation() * rot_oi.transpose();
            let torque_grav = gravity::gravity_gradient_torque_at(
                &model, &cfg.masses, &pos, &rot_oi, &rot_bo, t, asteroid,
            )?;
            let torque = torque_grav + torque_cmd;

            let sigma_dot = mrp_rates_inertial(&sigma, &omega);
            let omega_dot = omega_rates(&omega, &torque, cfg);
            dy.rows_mut(0, 3).copy_from_slice(sigma_dot.as_slice());
            dy.rows_mut(3, 3).copy_from_slice(omega_dot.as_slice());
            dy.rows_mut(6, 6).copy_from_slice(mee_dot.as_slice());
            Ok(())
        })();
        if let Err(e) = res {
            rhs_error = Some(e);
            dy.fill(0.0);
        }
    };
    let joint1 = ode::integrate(rhs, t0, &joint0, t0 + dt, &settings)?;
    if let Some(e) = rhs_error {
        return Err(e);
    }
    let mut out = y0.clone();
    out.rows_mut(0, 6).copy_from(&joint1.rows(0, 6));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{cartesian_to_mee, mee_to_cartesian, ClassicalElements};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const MU_EROS: f64 = 4.4628e5;
    const RE_EROS: f64 = 16.0e3;

    fn probe_masses() -> MassDistribution {
        MassDistribution::new(vec![
            (Vec3::new(8.0, 0.0, 0.0), 200.0),
            (Vec3::new(-2.0, -2.0, 0.0), 200.0),
            (Vec3::new(-2.0, 2.0, 0.0), 200.0),
            (Vec3::new(-2.0, 0.0, -1.0), 200.0),
            (Vec3::new(-2.0, 0.0, 1.0), 200.0),
        ])
        .unwrap()
    }

    fn probe_config() -> SpacecraftConfig {
        SpacecraftConfig::from_masses(
            probe_masses(),
            1.4,
            10.0,
            1000.0,
            Vec3::from_element(0.01),
            Vec3::from_element(0.01),
            0.1,
            2900.0,
        )
        .unwrap()
    }

    fn point_mass_asteroid() -> AsteroidModel {
        AsteroidModel::new(
            GravityModel::point_mass(MU_EROS, RE_EROS),
            2.0 * std::f64::consts::PI / (5.27 * 3600.0),
            0.0,
        )
    }

    #[test]
    fn keplerian_rates() {
        let x = Mee::new(34.0e3, 0.0, 0.0, 0.0, 0.0, 0.0);
        let d = gve_rates(&x, &Vec3::zeros(), MU_EROS).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(d[i], 0.0, epsilon = 1e-18);
        }
        let l_dot = (MU_EROS * x.p).sqrt() / (x.p * x.p);
        assert_relative_eq!(d[5], l_dot, max_relative = 1e-14);
        // Circular 34 km orbit around Eros: period just over 16 hours.
        let period_h = 2.0 * std::f64::consts::PI / d[5] / 3600.0;
        assert_relative_eq!(period_h, 16.38, max_relative = 5e-3);
    }

    #[test]
    fn inertia_consistency_check() {
        let cfg = probe_config();
        assert_relative_eq!(cfg.inertia[(0, 0)], 2000.0, max_relative = 1e-12);
        // Deliberately inconsistent inertia is rejected.
        let bad = Matrix3::from_diagonal(&Vec3::new(2000.0, 16400.0, 18000.0));
        assert!(SpacecraftConfig::with_inertia(
            bad,
            probe_masses(),
            1.4,
            10.0,
            1000.0,
            Vec3::from_element(0.01),
            Vec3::from_element(0.01),
            0.1,
            2900.0,
        )
        .is_err());
    }

    #[test]
    fn pure_normal_acceleration_rows() {
        // On an equatorial orbit a purely normal acceleration leaves the
        // in-plane elements untouched; h_dot and k_dot follow the
        // out-of-plane rows. Cross-checked against cartesian propagation.
        let x = Mee::new(34.0e3, 0.0, 0.0, 0.0, 0.0, 0.7);
        let a_n = 1e-5;
        let accel = Vec3::new(0.0, 0.0, a_n);
        let d = gve_rates(&x, &accel, MU_EROS).unwrap();
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-20);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-20);
        assert_abs_diff_eq!(d[2], 0.0, epsilon = 1e-20);
        let sq = (x.p / MU_EROS).sqrt();
        assert_relative_eq!(d[3], sq * a_n * x.l.cos() / 2.0, max_relative = 1e-13);
        assert_relative_eq!(d[4], sq * a_n * x.l.sin() / 2.0, max_relative = 1e-13);

        // Cartesian differencing oracle with Richardson extrapolation.
        let rates_fd = |h: f64| -> Vector6<f64> {
            let step = |dt: f64| -> Mee {
                let (pos0, vel0) = mee_to_cartesian(&x, MU_EROS).unwrap();
                let mut y0 = DVector::zeros(6);
                y0.rows_mut(0, 3).copy_from_slice(pos0.as_slice());
                y0.rows_mut(3, 3).copy_from_slice(vel0.as_slice());
                let settings = OdeSettings::new(1e-12, ode::Atol::Scalar(1e-10), dt.abs());
                let rhs = |_t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
                    let pos = Vec3::new(y[0], y[1], y[2]);
                    let vel = Vec3::new(y[3], y[4], y[5]);
                    let rot = gravity::orbit_rot_from_rv(&pos, &vel).unwrap();
                    let a_inertial =
                        -MU_EROS / pos.norm().powi(3) * pos + rot.transpose() * accel;
                    dy.rows_mut(0, 3).copy_from_slice(vel.as_slice());
                    dy.rows_mut(3, 3).copy_from_slice(a_inertial.as_slice());
                };
                // Integrate forward or "backward" by flipping the sign of time.
                if dt >= 0.0 {
                    let y1 = ode::integrate(rhs, 0.0, &y0, dt, &settings).unwrap();
                    cartesian_to_mee(
                        &Vec3::new(y1[0], y1[1], y1[2]),
                        &Vec3::new(y1[3], y1[4], y1[5]),
                        MU_EROS,
                    )
                    .unwrap()
                } else {
                    let rhs_back = |_t: f64, y: &DVector<f64>, dy: &mut DVector<f64>| {
                        let mut d = DVector::zeros(6);
                        rhs(0.0, y, &mut d);
                        dy.copy_from(&(-d));
                    };
                    let y1 = ode::integrate(rhs_back, 0.0, &y0, -dt, &settings).unwrap();
                    cartesian_to_mee(
                        &Vec3::new(y1[0], y1[1], y1[2]),
                        &Vec3::new(y1[3], y1[4], y1[5]),
                        MU_EROS,
                    )
                    .unwrap()
                }
            };
            let plus = step(h).to_array();
            let minus = step(-h).to_array();
            Vector6::from_fn(|i, _| (plus[i] - minus[i]) / (2.0 * h))
        };
        let d1 = rates_fd(8.0);
        let d2 = rates_fd(4.0);
        let richardson = (4.0 * d2 - d1) / 3.0;
        // Differencing noise floors: the p row carries meters.
        let floors = [1e-6, 1e-10, 1e-10, 1e-11, 1e-11, 1e-10];
        for i in 0..6 {
            let tol = (1e-5 * d[i].abs()).max(floors[i]);
            assert_abs_diff_eq!(richardson[i], d[i], epsilon = tol);
        }
    }

    #[test]
    fn mrp_rate_at_zero_attitude() {
        let omega = Vec3::new(0.3, -0.2, 0.5);
        let d = mrp_rates_inertial(&Mrp::zero(), &omega);
        assert_relative_eq!((d - omega / 4.0).norm(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn torque_free_rigid_body_conserves_momentum_and_energy() {
        let cfg = probe_config();
        let omega0 = Vec3::new(1e-3, 2e-3, -1.5e-3);
        let h0 = (cfg.inertia * omega0).norm();
        let e0 = 0.5 * omega0.dot(&(cfg.inertia * omega0));

        let settings = OdeSettings::new(1e-10, ode::Atol::Scalar(1e-14), 60.0);
        let y0 = DVector::from_row_slice(omega0.as_slice());
        let y1 = ode::integrate(
            |_t, y, dy| {
                let w = Vec3::new(y[0], y[1], y[2]);
                let wd = cfg.inertia_inv * (-(w.cross(&(cfg.inertia * w))));
                dy.copy_from_slice(wd.as_slice());
            },
            0.0,
            &y0,
            3600.0,
            &settings,
        )
        .unwrap();
        let w1 = Vec3::new(y1[0], y1[1], y1[2]);
        assert_relative_eq!((cfg.inertia * w1).norm(), h0, max_relative = 1e-8);
        assert_relative_eq!(0.5 * w1.dot(&(cfg.inertia * w1)), e0, max_relative = 1e-8);
    }

    #[test]
    fn actuator_transient_settles() {
        let mut ch = ActuatorChannel::idle();
        let tau = 0.1;
        ch.command(Vec3::new(1e-4, 0.0, 0.0), 0.0, tau);
        // Starts from the previous level and settles exponentially.
        assert_abs_diff_eq!(ch.value(0.0, tau).x, 0.0, epsilon = 1e-20);
        let v = ch.value(100.0, tau); // 10 / tau seconds after the switch
        assert!((v.x - 1e-4).abs() <= 1e-4 * (-10.0f64).exp() * 1.0001);
        // Re-command mid-transient: continuity of the applied output.
        let before = ch.value(5.0, tau);
        ch.command(Vec3::zeros(), 5.0, tau);
        assert_relative_eq!(ch.value(5.0, tau).x, before.x, max_relative = 1e-12);
    }

    #[test]
    fn truth_keplerian_invariants_over_one_orbit() {
        let cfg = probe_config();
        let asteroid = point_mass_asteroid();
        let el = ClassicalElements {
            a: 34.0e3,
            e: 0.05,
            inc: 0.6,
            raan: 0.2,
            argp: 0.1,
            nu: 0.0,
        };
        let x0 = el.to_mee().unwrap();
        let n = (MU_EROS / el.a.powi(3)).sqrt();
        let period = 2.0 * std::f64::consts::PI / n;
        let sigma0 = Mrp::zero();
        let omega0 = Vec3::new(0.0, 0.0, 1e-4);
        let mut state = TruthState::new(x0, sigma0, omega0);
        // March in 36 s chunks like the closed loop does.
        let chunks = (period / 36.0).ceil() as usize;
        for _ in 0..chunks {
            state = propagate_truth(&state, 36.0, &cfg, &asteroid, None).unwrap();
        }
        let el1 = ClassicalElements::from_mee(&state.orbit).unwrap();
        assert_relative_eq!(el1.a, el.a, max_relative = 1e-9);
        assert_abs_diff_eq!(el1.e, el.e, epsilon = 1e-9);
    }

    #[test]
    fn orbit_process_flow_contract() {
        let asteroid = point_mass_asteroid();
        let n_orb = 2;
        let dim = 6 + gravity_block_len(n_orb);
        let mut y0 = DVector::zeros(dim);
        y0.rows_mut(0, 6)
            .copy_from_slice(&Mee::new(34.0e3, 0.0, 0.0, 0.1, 0.0, 0.3).to_array());
        y0[6] = -0.05; // C20
        y0[8] = 0.01; // C22
        let y1 = orbit_process_flow(&y0, 0.0, 36.0, &Vec3::zeros(), &asteroid, n_orb).unwrap();
        // Gravity block unchanged, bit for bit.
        assert_eq!(y0.as_slice()[6..], y1.as_slice()[6..]);
        // Zero coefficients + zero control reduces to the Keplerian flow.
        let mut y0k = y0.clone();
        y0k.rows_mut(6, gravity_block_len(n_orb)).fill(0.0);
        let y1k = orbit_process_flow(&y0k, 0.0, 36.0, &Vec3::zeros(), &asteroid, n_orb).unwrap();
        let x0 = Mee::from_slice(&y0k.as_slice()[0..6]);
        let l_dot = (MU_EROS * x0.p).sqrt() * (x0.w() / x0.p).powi(2);
        assert_relative_eq!(y1k[5] - y0k[5], l_dot * 36.0, max_relative = 1e-6);
        for i in 0..5 {
            assert_abs_diff_eq!(y1k[i], y0k[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn orbit_process_flow_matches_truth_without_solar() {
        let mut truth_gravity = GravityModel::zeros(MU_EROS, RE_EROS, 2);
        truth_gravity.set_c(2, 0, -0.05).unwrap();
        truth_gravity.set_c(2, 2, 0.02).unwrap();
        truth_gravity.set_s(2, 1, -0.01).unwrap();
        let asteroid = AsteroidModel::new(
            truth_gravity.clone(),
            2.0 * std::f64::consts::PI / (5.27 * 3600.0),
            0.0,
        );
        let cfg = probe_config();
        let x0 = ClassicalElements {
            a: 34.0e3,
            e: 0.01,
            inc: 1.2,
            raan: 0.0,
            argp: 0.0,
            nu: 0.0,
        }
        .to_mee()
        .unwrap();
        let state = TruthState::new(x0, Mrp::zero(), Vec3::new(0.0, 0.0, 1e-4));
        let truth1 = propagate_truth(&state, 36.0, &cfg, &asteroid, None).unwrap();

        let n_orb = 2;
        let mut y0 = DVector::zeros(6 + gravity_block_len(n_orb));
        y0.rows_mut(0, 6).copy_from_slice(&x0.to_array());
        y0.rows_mut(6, gravity_block_len(n_orb))
            .copy_from_slice(&truth_gravity.to_block(n_orb));
        let y1 = orbit_process_flow(&y0, 0.0, 36.0, &Vec3::zeros(), &asteroid, n_orb).unwrap();
        let flow_mee = Mee::from_slice(&y1.as_slice()[0..6]);
        let truth_arr = truth1.orbit.to_array();
        let flow_arr = flow_mee.to_array();
        for i in 0..6 {
            assert_abs_diff_eq!(
                flow_arr[i],
                truth_arr[i],
                epsilon = 1e-8 * truth_arr[i].abs().max(1.0)
            );
        }
    }

    #[test]
    fn attitude_process_flow_contract() {
        let asteroid = point_mass_asteroid();
        let cfg = probe_config();
        let n_att = 2;
        let block = gravity_block_len(n_att);
        let dim = 9 + block;
        let mut y0 = DVector::zeros(dim);
        y0[0] = 0.1;
        y0.rows_mut(3, 3).copy_from_slice(&[1e-4, -2e-4, 5e-5]);
        y0[6] = -0.05;
        y0[6 + block] = 2.4e-5; // gyro bias x
        let orbit = Mee::new(34.0e3, 0.0, 0.0, 0.2, 0.1, 1.0);
        let y1 =
            attitude_process_flow(&y0, 0.0, 3.6, &orbit, &Vec3::zeros(), &cfg, &asteroid, n_att)
                .unwrap();
        assert_eq!(y0.as_slice()[6..], y1.as_slice()[6..]);
        assert!(y1.rows(0, 6).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn attitude_flow_symmetric_inertia_omega_constant() {
        // Spherically symmetric inertia, zero coefficients, zero torque:
        // omega stays constant up to the tiny discrete-arm residual.
        let d = 2.0;
        let m = 100.0;
        let masses = MassDistribution::new(vec![
            (Vec3::new(d, 0.0, 0.0), m),
            (Vec3::new(-d, 0.0, 0.0), m),
            (Vec3::new(0.0, d, 0.0), m),
            (Vec3::new(0.0, -d, 0.0), m),
            (Vec3::new(0.0, 0.0, d), m),
            (Vec3::new(0.0, 0.0, -d), m),
        ])
        .unwrap();
        let cfg = SpacecraftConfig::from_masses(
            masses,
            1.4,
            10.0,
            1000.0,
            Vec3::from_element(0.01),
            Vec3::from_element(0.01),
            0.1,
            2900.0,
        )
        .unwrap();
        let asteroid = point_mass_asteroid();
        let n_att = 2;
        let mut y0 = DVector::zeros(9 + gravity_block_len(n_att));
        let omega0 = Vec3::new(1e-4, 2e-4, -5e-5);
        y0.rows_mut(3, 3).copy_from_slice(omega0.as_slice());
        let orbit = Mee::new(34.0e3, 0.0, 0.0, 0.0, 0.0, 0.0);
        let y1 =
            attitude_process_flow(&y0, 0.0, 3.6, &orbit, &Vec3::zeros(), &cfg, &asteroid, n_att)
                .unwrap();
        let omega1 = Vec3::new(y1[3], y1[4], y1[5]);
        assert!((omega1 - omega0).norm() < 1e-10);
    }

    #[test]
    fn attitude_flow_matches_truth_attitude() {
        let mut truth_gravity = GravityModel::zeros(MU_EROS, RE_EROS, 2);
        truth_gravity.set_c(2, 0, -0.05).unwrap();
        truth_gravity.set_c(2, 2, 0.02).unwrap();
        let asteroid = AsteroidModel::new(
            truth_gravity.clone(),
            2.0 * std::f64::consts::PI / (5.27 * 3600.0),
            0.0,
        );
        let cfg = probe_config();
        let x0 = Mee::new(34.0e3, 0.0, 0.0, 0.5, 0.0, 0.2);
        let sigma0 = Mrp::new(0.02, -0.01, 0.03);
        let omega0 = Vec3::new(1e-4, -5e-5, 8e-5);
        let state = TruthState::new(x0, sigma0, omega0);
        let truth1 = propagate_truth(&state, 3.6, &cfg, &asteroid, None).unwrap();

        let n_att = 2;
        let block = gravity_block_len(n_att);
        let mut y0 = DVector::zeros(9 + block);
        y0.rows_mut(0, 3).copy_from_slice(sigma0.0.as_slice());
        y0.rows_mut(3, 3).copy_from_slice(omega0.as_slice());
        y0.rows_mut(6, block)
            .copy_from_slice(&truth_gravity.to_block(n_att));
        let y1 =
            attitude_process_flow(&y0, 0.0, 3.6, &x0, &Vec3::zeros(), &cfg, &asteroid, n_att)
                .unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(y1[i], truth1.sigma_bi.0[i], epsilon = 1e-10);
            assert_abs_diff_eq!(y1[3 + i], truth1.omega[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn flows_are_bit_deterministic() {
        let asteroid = point_mass_asteroid();
        let n_orb = 2;
        let mut y0 = DVector::zeros(6 + gravity_block_len(n_orb));
        y0.rows_mut(0, 6)
            .copy_from_slice(&Mee::new(34.0e3, 0.01, -0.02, 0.3, 0.1, 2.0).to_array());
        y0[6] = -0.04;
        let a = orbit_process_flow(&y0, 0.0, 36.0, &Vec3::new(1e-5, 0.0, 0.0), &asteroid, n_orb)
            .unwrap();
        let b = orbit_process_flow(&y0, 0.0, 36.0, &Vec3::new(1e-5, 0.0, 0.0), &asteroid, n_orb)
            .unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
