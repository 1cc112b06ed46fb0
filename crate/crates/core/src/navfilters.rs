//! Orbit and attitude navigation filters.
//!
//! Both filters bind the generic UKF to an extended state that carries the
//! normalized gravity coefficients next to the navigation state, so the
//! field is identified in flight. The shared gravity-block layout is
//! degree-ascending with `C` before `S`: `C20 C21 C22 S21 S22 C30 ...`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{attitude_process_flow, orbit_process_flow, SpacecraftConfig};
use crate::elements::{rot_orbit_from_inertial, Mee, Mrp, Vec3};
use crate::error::{Error, Result};
use crate::gravity::{gravity_block_len, AsteroidModel, GravityModel};
use crate::sensors::{attitude_measurement_fn, orbit_measurement_fn, CameraModel, Landmark};
use crate::ukf::{self, GaussianState, UkfHooks, UkfNoise, UkfParams};

/// Initial 1-sigma values for the orbit extended state.
#[derive(Debug, Clone, Copy)]
pub struct OrbitInitialSigmas {
    /// Semi-latus rectum, meters.
    pub p_m: f64,
    /// The five remaining MEE components.
    pub elements: f64,
    /// Each gravity coefficient.
    pub gravity: f64,
}

impl Default for OrbitInitialSigmas {
    fn default() -> Self {
        OrbitInitialSigmas {
            p_m: 5.0,
            elements: 5e-6,
            gravity: 5e-3,
        }
    }
}

/// Initial 1-sigma values for the attitude extended state.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeInitialSigmas {
    pub mrp: f64,
    /// rad/s.
    pub omega: f64,
    pub gravity: f64,
    /// rad/s.
    pub gyro_bias: f64,
}

impl Default for AttitudeInitialSigmas {
    fn default() -> Self {
        AttitudeInitialSigmas {
            mrp: 1e-6,
            omega: 1e-8,
            gravity: 5e-3,
            gyro_bias: 2.42e-6,
        }
    }
}

/// Measurement noise used by the orbit filter, per tracked landmark.
#[derive(Debug, Clone, Copy)]
pub struct OrbitMeasNoise {
    pub pixel_sigma_px: f64,
    pub range_sigma_m: f64,
    /// Add the 1/12 px^2 floor-quantization variance.
    pub include_quantization: bool,
}

impl OrbitMeasNoise {
    fn pixel_variance(&self) -> f64 {
        let mut v = self.pixel_sigma_px * self.pixel_sigma_px;
        if self.include_quantization {
            v += 1.0 / 12.0;
        }
        v
    }
}

/// UKF over `[p, f, g, h, k, L, C_ij, S_ij]`.
pub struct OrbitFilter {
    pub state: GaussianState,
    /// Current process-noise covariance (starts at zero, re-estimated from
    /// innovations every update).
    pub q_process: DMatrix<f64>,
    pub params: UkfParams,
    pub n_orb: usize,
    pub meas_noise: OrbitMeasNoise,
    /// Sigma-point landmark predictions that fell behind the image plane
    /// and were clamped.
    pub behind_plane_events: usize,
}

impl OrbitFilter {
    pub fn dim(n_orb: usize) -> usize {
        6 + gravity_block_len(n_orb)
    }

    /// Start from an accurate navigation fix with unknown gravity
    /// (coefficient means zero) and zero initial process noise.
    pub fn new(
        initial_mee: &Mee,
        n_orb: usize,
        sigmas: OrbitInitialSigmas,
        meas_noise: OrbitMeasNoise,
    ) -> Self {
        let n = Self::dim(n_orb);
        let mut mean = DVector::zeros(n);
        mean.rows_mut(0, 6).copy_from_slice(&initial_mee.to_array());
        let mut cov = DMatrix::zeros(n, n);
        cov[(0, 0)] = sigmas.p_m * sigmas.p_m;
        for i in 1..6 {
            cov[(i, i)] = sigmas.elements * sigmas.elements;
        }
        for i in 6..n {
            cov[(i, i)] = sigmas.gravity * sigmas.gravity;
        }
        OrbitFilter {
            state: GaussianState { mean, cov },
            q_process: DMatrix::zeros(n, n),
            params: UkfParams::canonical(n),
            n_orb,
            meas_noise,
            behind_plane_events: 0,
        }
    }

    pub fn mean_mee(&self) -> Mee {
        Mee::from_slice(&self.state.mean.as_slice()[0..6])
    }

    /// Gravity model built from the current coefficient means.
    pub fn gravity_estimate(&self, asteroid: &AsteroidModel) -> GravityModel {
        GravityModel::from_block(
            asteroid.gravity.mu,
            asteroid.gravity.re,
            self.n_orb,
            &self.state.mean.as_slice()[6..],
        )
        .expect("state dimension is consistent by construction")
    }

    pub fn gravity_block_mean(&self) -> &[f64] {
        &self.state.mean.as_slice()[6..]
    }

    /// Marginal standard deviations of the gravity block.
    pub fn gravity_block_sigma(&self) -> Vec<f64> {
        (6..self.state.dim())
            .map(|i| self.state.cov[(i, i)].max(0.0).sqrt())
            .collect()
    }

    /// Overwrite the coefficient means (constellation fusion write-back);
    /// the covariance is left untouched.
    pub fn set_gravity_block_mean(&mut self, block: &[f64]) {
        self.state
            .mean
            .rows_mut(6, block.len())
            .copy_from_slice(block);
    }

    /// One filter call over `[t0, t0 + dt]`. `measurement` holds the tracked
    /// landmark indices (into `catalog`) and the stacked `[px, py, rho]`
    /// values; `None` skips the update and propagates only.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        measurement: Option<(&[usize], &DVector<f64>)>,
        catalog: &[Landmark],
        camera: &CameraModel,
        sigma_bi: &Mrp,
        accel_cmd: &Vec3,
        t0: f64,
        dt: f64,
        asteroid: &AsteroidModel,
    ) -> Result<()> {
        let n_orb = self.n_orb;
        let process =
            |y: &DVector<f64>| orbit_process_flow(y, t0, dt, accel_cmd, asteroid, n_orb);

        match measurement {
            None => {
                self.state = ukf::ukf_predict(
                    process,
                    &self.state,
                    &self.q_process,
                    &self.params,
                    &UkfHooks::default(),
                )?;
                Ok(())
            }
            Some((selected, z)) => {
                if z.len() != 3 * selected.len() || selected.is_empty() {
                    return Err(Error::invalid("orbit filter: measurement shape mismatch"));
                }
                let mut behind = 0usize;
                let t_meas = t0 + dt;
                let h = |y: &DVector<f64>| -> Result<DVector<f64>> {
                    let (z_pred, b) = orbit_measurement_fn(
                        y, sigma_bi, selected, catalog, camera, t_meas, asteroid,
                    )?;
                    behind += b;
                    Ok(z_pred)
                };
                let m = z.len();
                let mut meas_cov = DMatrix::zeros(m, m);
                let pv = self.meas_noise.pixel_variance();
                let rv = self.meas_noise.range_sigma_m * self.meas_noise.range_sigma_m;
                for q in 0..selected.len() {
                    meas_cov[(3 * q, 3 * q)] = pv;
                    meas_cov[(3 * q + 1, 3 * q + 1)] = pv;
                    meas_cov[(3 * q + 2, 3 * q + 2)] = rv;
                }
                let noise = UkfNoise {
                    process: self.q_process.clone(),
                    measurement: meas_cov,
                };
                let out = ukf::ukf_step(process, h, &self.state, z, &noise, &self.params)?;
                self.state = out.posterior;
                self.q_process = out.process_noise_next;
                self.behind_plane_events += behind;
                Ok(())
            }
        }
    }
}

/// Measurement noise for the attitude filter.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeMeasNoise {
    /// 1-sigma star-tracker rotation angle, radians.
    pub star_sigma_rad: f64,
    /// Per-axis gyro noise, rad/s.
    pub gyro_sigma: f64,
}

/// UKF over `[sigma_BI, omega, C_ij/S_ij, gyro bias]`.
pub struct AttitudeFilter {
    pub state: GaussianState,
    pub q_process: DMatrix<f64>,
    pub params: UkfParams,
    pub n_att: usize,
    pub meas_noise: AttitudeMeasNoise,
}

impl AttitudeFilter {
    pub fn dim(n_att: usize) -> usize {
        9 + gravity_block_len(n_att)
    }

    pub fn new(
        sigma_bi0: &Mrp,
        omega0: &Vec3,
        n_att: usize,
        sigmas: AttitudeInitialSigmas,
        meas_noise: AttitudeMeasNoise,
    ) -> Self {
        let n = Self::dim(n_att);
        let block = gravity_block_len(n_att);
        let mut mean = DVector::zeros(n);
        mean.rows_mut(0, 3).copy_from_slice(sigma_bi0.0.as_slice());
        mean.rows_mut(3, 3).copy_from_slice(omega0.as_slice());
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..3 {
            cov[(i, i)] = sigmas.mrp * sigmas.mrp;
            cov[(3 + i, 3 + i)] = sigmas.omega * sigmas.omega;
            let b = 6 + block + i;
            cov[(b, b)] = sigmas.gyro_bias * sigmas.gyro_bias;
        }
        for i in 6..6 + block {
            cov[(i, i)] = sigmas.gravity * sigmas.gravity;
        }
        AttitudeFilter {
            state: GaussianState { mean, cov },
            q_process: DMatrix::zeros(n, n),
            params: UkfParams::canonical(n),
            n_att,
            meas_noise,
        }
    }

    pub fn mean_sigma_bi(&self) -> Mrp {
        Mrp::new(self.state.mean[0], self.state.mean[1], self.state.mean[2])
    }

    pub fn mean_omega(&self) -> Vec3 {
        Vec3::new(self.state.mean[3], self.state.mean[4], self.state.mean[5])
    }

    pub fn mean_gyro_bias(&self) -> Vec3 {
        let n = self.state.dim();
        Vec3::new(
            self.state.mean[n - 3],
            self.state.mean[n - 2],
            self.state.mean[n - 1],
        )
    }

    pub fn gravity_estimate(&self, asteroid: &AsteroidModel) -> GravityModel {
        let block = gravity_block_len(self.n_att);
        GravityModel::from_block(
            asteroid.gravity.mu,
            asteroid.gravity.re,
            self.n_att,
            &self.state.mean.as_slice()[6..6 + block],
        )
        .expect("state dimension is consistent by construction")
    }

    pub fn gravity_block_mean(&self) -> &[f64] {
        let block = gravity_block_len(self.n_att);
        &self.state.mean.as_slice()[6..6 + block]
    }

    pub fn gravity_block_sigma(&self) -> Vec<f64> {
        let block = gravity_block_len(self.n_att);
        (6..6 + block)
            .map(|i| self.state.cov[(i, i)].max(0.0).sqrt())
            .collect()
    }

    pub fn set_gravity_block_mean(&mut self, block: &[f64]) {
        self.state
            .mean
            .rows_mut(6, block.len())
            .copy_from_slice(block);
    }

    /// One filter call over `[t0, t0 + dt]` with the star-tracker/gyro
    /// measurement `z = [sigma_star, omega_gyro]`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        z: &DVector<f64>,
        orbit_mean: &Mee,
        torque_cmd: &Vec3,
        t0: f64,
        dt: f64,
        cfg: &SpacecraftConfig,
        asteroid: &AsteroidModel,
    ) -> Result<()> {
        if z.len() != 6 {
            return Err(Error::invalid(
                "attitude filter: measurement must be 6-dimensional",
            ));
        }
        let n_att = self.n_att;
        let process = |y: &DVector<f64>| {
            attitude_process_flow(y, t0, dt, orbit_mean, torque_cmd, cfg, asteroid, n_att)
        };
        let h = |y: &DVector<f64>| Ok(attitude_measurement_fn(y));

        let mut meas_cov = DMatrix::zeros(6, 6);
        // Star-tracker angle noise mapped to MRP scale: tan(angle/4) is
        // angle/4 to first order.
        let star_mrp_sigma = self.meas_noise.star_sigma_rad / 4.0;
        for i in 0..3 {
            meas_cov[(i, i)] = star_mrp_sigma * star_mrp_sigma;
            meas_cov[(3 + i, 3 + i)] = self.meas_noise.gyro_sigma * self.meas_noise.gyro_sigma;
        }
        let noise = UkfNoise {
            process: self.q_process.clone(),
            measurement: meas_cov,
        };
        let hooks = UkfHooks {
            after_propagation: None,
            align_measurement: Some(&align_mrp_measurement),
        };
        let out = ukf::ukf_step_hooked(process, h, &self.state, z, &noise, &self.params, &hooks)?;
        self.state = out.posterior;
        self.q_process = out.process_noise_next;
        shadow_switch_gaussian(&mut self.state);
        Ok(())
    }
}

/// Map the star-tracker MRP onto the shadow set closest to the prediction,
/// so residuals stay small when the attitude crosses the unit sphere.
fn align_mrp_measurement(z: &DVector<f64>, z_hat: &DVector<f64>) -> DVector<f64> {
    let sigma = Mrp::new(z[0], z[1], z[2]);
    let pred = Vec3::new(z_hat[0], z_hat[1], z_hat[2]);
    if sigma.norm_squared() == 0.0 {
        return z.clone();
    }
    let shadow = sigma.shadow().expect("nonzero by the guard above");
    if (shadow.0 - pred).norm_squared() < (sigma.0 - pred).norm_squared() {
        let mut out = z.clone();
        out.rows_mut(0, 3).copy_from_slice(shadow.0.as_slice());
        out
    } else {
        z.clone()
    }
}

/// Switch the MRP block of an attitude Gaussian to the shadow set when its
/// norm exceeds one, transforming mean and covariance consistently through
/// the shadow-map Jacobian.
pub fn shadow_switch_gaussian(state: &mut GaussianState) {
    let sigma = Vec3::new(state.mean[0], state.mean[1], state.mean[2]);
    let n2 = sigma.norm_squared();
    if n2 <= 1.0 {
        return;
    }
    let n = state.dim();
    // d(shadow)/d(sigma) = (2 s s^T - |s|^2 I) / |s|^4.
    let jac3 =
        (2.0 * sigma * sigma.transpose() - nalgebra::Matrix3::identity() * n2) / (n2 * n2);
    let mut jac = DMatrix::identity(n, n);
    for i in 0..3 {
        for j in 0..3 {
            jac[(i, j)] = jac3[(i, j)];
        }
    }
    let shadow = -sigma / n2;
    state.mean.rows_mut(0, 3).copy_from_slice(shadow.as_slice());
    state.cov = &jac * &state.cov * jac.transpose();
    let t = state.cov.transpose();
    state.cov += t;
    state.cov *= 0.5;
}

/// Reconstruct the body-from-orbit MRP from the attitude filter output and
/// the orbit state: `R(sigma_BO) = R(sigma_BI) R(sigma_OI)^T`.
pub fn reconstruct_body_orbit(sigma_bi: &Mrp, x_orb: &Mee, mu: f64) -> Result<Mrp> {
    let rot_oi = rot_orbit_from_inertial(x_orb, mu)?;
    let sigma_oi = Mrp::from_rotation(&rot_oi);
    let inv_oi = Mrp(-sigma_oi.0);
    Ok(crate::elements::mrp_compose(&inv_oi, sigma_bi)?.shadow_if_needed())
}
