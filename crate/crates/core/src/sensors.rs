//! Landmark camera/LIDAR simulation, star tracker and gyroscopes, plus the
//! matching noiseless measurement functions used by the filters.
//!
//! The filters see continuous (unquantized) pixel coordinates; the floor
//! quantization applied by the real camera is modeled as extra measurement
//! noise with variance 1/12 px^2 when enabled.

use nalgebra::{DVector, Matrix3};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

use crate::elements::{mee_to_cartesian, Mee, Mrp, RotMat, Vec3};
use crate::elements::mrp_compose;
use crate::error::{Error, Result};
use crate::gravity::AsteroidModel;

/// One catalogued surface feature, position in the asteroid frame.
#[derive(Debug, Clone, Copy)]
pub struct Landmark {
    pub id: u32,
    pub pos_asteroid: Vec3,
}

/// Pinhole camera with its body mounting. The boresight is the +z camera
/// axis; pixels are centered on the boresight.
#[derive(Debug, Clone)]
pub struct CameraModel {
    /// Focal length, meters.
    pub focal_m: f64,
    /// Pixels per side of the square detector.
    pub resolution_px: u32,
    /// Full field of view, radians.
    pub fov_rad: f64,
    /// Pixel pitch, meters (derived from the three numbers above).
    pub pixel_width_m: f64,
    /// Camera-from-body mounting rotation.
    pub mount: RotMat,
}

impl CameraModel {
    /// `pixel_width = 2 f tan(fov/2) / resolution`.
    pub fn new(focal_m: f64, resolution_px: u32, fov_rad: f64, mount: RotMat) -> Self {
        let pixel_width_m = 2.0 * focal_m * (fov_rad / 2.0).tan() / resolution_px as f64;
        CameraModel {
            focal_m,
            resolution_px,
            fov_rad,
            pixel_width_m,
            mount,
        }
    }

    /// Navigation camera looking along -x of the body frame: the boresight
    /// (+z camera axis) maps to -x body.
    pub fn nadir_mounted(focal_m: f64, resolution_px: u32, fov_rad: f64) -> Self {
        let mount = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        CameraModel::new(focal_m, resolution_px, fov_rad, mount)
    }
}

/// Sensor noise datasheet plus the tracked-landmark budget.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    pub camera: CameraModel,
    pub pixel_sigma_px: f64,
    pub lidar_sigma_m: f64,
    /// 1-sigma star tracker noise on the principal rotation angle, radians.
    pub star_sigma_rad: f64,
    /// Constant gyroscope bias, rad/s (body axes).
    pub gyro_bias: Vec3,
    /// Per-axis 1-sigma gyroscope noise, rad/s.
    pub gyro_sigma: f64,
    /// Number of tracked landmarks per orbit-filter call.
    pub q_max: usize,
    /// Add the 1/12 px^2 quantization variance to the filter's pixel noise.
    pub quantization_in_meas_noise: bool,
}

/// Landmark-to-camera geometry for one landmark: relative position in the
/// camera frame.
fn landmark_in_camera(
    lmk: &Landmark,
    pos_sc_inertial: &Vec3,
    sigma_bi: &Mrp,
    camera: &CameraModel,
    t: f64,
    asteroid: &AsteroidModel,
) -> Vec3 {
    let angle = asteroid.rotation_angle(t);
    let lmk_inertial = crate::elements::rot_z_active(angle) * lmk.pos_asteroid;
    let rel_inertial = lmk_inertial - pos_sc_inertial;
    camera.mount * (sigma_bi.to_rotation() * rel_inertial)
}

/// Select up to `q_max` landmarks: in front of the image plane, inside the
/// field-of-view cone, on the near side of the body, ordered by increasing
/// off-boresight angle (ties broken by id).
pub fn select_landmarks(
    catalog: &[Landmark],
    x_orb: &Mee,
    sigma_bi: &Mrp,
    camera: &CameraModel,
    q_max: usize,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<Vec<usize>> {
    let mu = asteroid.gravity.mu;
    let (pos, _) = mee_to_cartesian(x_orb, mu)?;
    let angle = asteroid.rotation_angle(t);
    let pos_asteroid = crate::elements::rot_z_active(angle).transpose() * pos;
    let half_fov = camera.fov_rad / 2.0;

    let mut visible: Vec<(f64, u32, usize)> = Vec::new();
    for (idx, lmk) in catalog.iter().enumerate() {
        let rho_c = landmark_in_camera(lmk, &pos, sigma_bi, camera, t, asteroid);
        if rho_c.z <= 0.0 {
            continue;
        }
        let off_axis = (rho_c.z / rho_c.norm()).clamp(-1.0, 1.0).acos();
        if off_axis > half_fov {
            continue;
        }
        // Near-side check with the landmark direction as surface normal.
        if lmk.pos_asteroid.dot(&(pos_asteroid - lmk.pos_asteroid)) <= 0.0 {
            continue;
        }
        visible.push((off_axis, lmk.id, idx));
    }
    visible.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    visible.truncate(q_max);
    Ok(visible.into_iter().map(|(_, _, idx)| idx).collect())
}

/// Continuous projection: unquantized pixel coordinates (in pixel units)
/// and range. Errors when the landmark is behind the image plane.
pub fn camera_project_continuous(
    lmk: &Landmark,
    x_orb: &Mee,
    sigma_bi: &Mrp,
    camera: &CameraModel,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<(f64, f64, f64)> {
    let mu = asteroid.gravity.mu;
    let (pos, _) = mee_to_cartesian(x_orb, mu)?;
    let rho_c = landmark_in_camera(lmk, &pos, sigma_bi, camera, t, asteroid);
    if rho_c.z <= 0.0 {
        return Err(Error::Singular("camera_project: landmark behind the image plane"));
    }
    let u = camera.focal_m / rho_c.z * rho_c.x;
    let v = camera.focal_m / rho_c.z * rho_c.y;
    Ok((
        u / camera.pixel_width_m,
        v / camera.pixel_width_m,
        rho_c.norm(),
    ))
}

/// Quantized projection: integer pixel row/column via floor, plus range.
pub fn camera_project(
    lmk: &Landmark,
    x_orb: &Mee,
    sigma_bi: &Mrp,
    camera: &CameraModel,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<(i64, i64, f64)> {
    let (u_px, v_px, range) =
        camera_project_continuous(lmk, x_orb, sigma_bi, camera, t, asteroid)?;
    Ok((u_px.floor() as i64, v_px.floor() as i64, range))
}

/// Sensor simulators own independent, seeded noise streams so runs are
/// reproducible and sensors are uncorrelated.
pub struct SensorSim {
    pub suite: SensorSuite,
    rng_pixel: ChaCha12Rng,
    rng_range: ChaCha12Rng,
    rng_star: ChaCha12Rng,
    rng_gyro: ChaCha12Rng,
}

impl SensorSim {
    pub fn new(suite: SensorSuite, seed: u64) -> Self {
        let mk = |stream: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng
        };
        SensorSim {
            suite,
            rng_pixel: mk(1),
            rng_range: mk(2),
            rng_star: mk(3),
            rng_gyro: mk(4),
        }
    }

    fn normal(rng: &mut ChaCha12Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    /// Simulated orbit measurement for the selected landmarks: noisy
    /// quantized pixels and noisy ranges, stacked `[px, py, rho]` per
    /// landmark.
    pub fn orbit_measurement(
        &mut self,
        truth_orbit: &Mee,
        truth_sigma_bi: &Mrp,
        selected: &[usize],
        catalog: &[Landmark],
        t: f64,
        asteroid: &AsteroidModel,
    ) -> Result<DVector<f64>> {
        let mut z = DVector::zeros(3 * selected.len());
        for (q, &idx) in selected.iter().enumerate() {
            let (u_px, v_px, range) = camera_project_continuous(
                &catalog[idx],
                truth_orbit,
                truth_sigma_bi,
                &self.suite.camera,
                t,
                asteroid,
            )?;
            // Pixel noise enters before the floor quantization.
            let nu = Self::normal(&mut self.rng_pixel) * self.suite.pixel_sigma_px;
            let nv = Self::normal(&mut self.rng_pixel) * self.suite.pixel_sigma_px;
            z[3 * q] = (u_px + nu).floor();
            z[3 * q + 1] = (v_px + nv).floor();
            z[3 * q + 2] = range + Self::normal(&mut self.rng_range) * self.suite.lidar_sigma_m;
        }
        Ok(z)
    }

    /// Simulated attitude measurement `[sigma_star, omega_gyro]`.
    pub fn attitude_measurement(
        &mut self,
        truth_sigma_bi: &Mrp,
        truth_omega: &Vec3,
    ) -> Result<DVector<f64>> {
        let angle = Self::normal(&mut self.rng_star) * self.suite.star_sigma_rad;
        let axis_arr: [f64; 3] = UnitSphere.sample(&mut self.rng_star);
        let axis = Vec3::new(axis_arr[0], axis_arr[1], axis_arr[2]);
        let sigma_err = Mrp(axis * (angle / 4.0).tan());
        let sigma_star = mrp_compose(truth_sigma_bi, &sigma_err)?.shadow_if_needed();

        let mut z = DVector::zeros(6);
        z.rows_mut(0, 3).copy_from_slice(sigma_star.0.as_slice());
        for i in 0..3 {
            z[3 + i] = truth_omega[i]
                + self.suite.gyro_bias[i]
                + Self::normal(&mut self.rng_gyro) * self.suite.gyro_sigma;
        }
        Ok(z)
    }
}

/// Noiseless, unquantized orbit measurement prediction `h_orb` for an
/// extended state whose first six components are the MEE. The attitude is
/// held fixed (it is not estimated by the orbit filter). Sigma points whose
/// landmark prediction falls behind the image plane get a clamped far-field
/// value instead of failing the update; the count of such events is
/// returned.
pub fn orbit_measurement_fn(
    y_orb: &DVector<f64>,
    sigma_bi: &Mrp,
    selected: &[usize],
    catalog: &[Landmark],
    camera: &CameraModel,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<(DVector<f64>, usize)> {
    let x = Mee::from_slice(&y_orb.as_slice()[0..6]);
    let mu = asteroid.gravity.mu;
    let (pos, _) = mee_to_cartesian(&x, mu)?;
    let mut z = DVector::zeros(3 * selected.len());
    let mut behind = 0usize;
    let clamp_px = 10.0 * camera.resolution_px as f64;
    for (q, &idx) in selected.iter().enumerate() {
        let rho_c = landmark_in_camera(&catalog[idx], &pos, sigma_bi, camera, t, asteroid);
        let range = rho_c.norm();
        let (u_px, v_px) = if rho_c.z <= 1e-9 * range.max(1e-300) {
            behind += 1;
            let z_eff = 1e-9 * range.max(1.0);
            let u = (camera.focal_m / z_eff * rho_c.x / camera.pixel_width_m)
                .clamp(-clamp_px, clamp_px);
            let v = (camera.focal_m / z_eff * rho_c.y / camera.pixel_width_m)
                .clamp(-clamp_px, clamp_px);
            (u, v)
        } else {
            let u = camera.focal_m / rho_c.z * rho_c.x / camera.pixel_width_m;
            let v = camera.focal_m / rho_c.z * rho_c.y / camera.pixel_width_m;
            (u.clamp(-clamp_px, clamp_px), v.clamp(-clamp_px, clamp_px))
        };
        z[3 * q] = u_px;
        z[3 * q + 1] = v_px;
        z[3 * q + 2] = range;
    }
    Ok((z, behind))
}

/// Noiseless attitude measurement prediction
/// `h_att = [sigma; omega + gyro bias]` for the attitude extended state
/// `[sigma, omega, gravity block, bias]`.
pub fn attitude_measurement_fn(y_att: &DVector<f64>) -> DVector<f64> {
    let n = y_att.len();
    let mut z = DVector::zeros(6);
    for i in 0..3 {
        z[i] = y_att[i];
        z[3 + i] = y_att[3 + i] + y_att[n - 3 + i];
    }
    z
}
