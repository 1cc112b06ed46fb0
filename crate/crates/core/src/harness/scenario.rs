//! Scenario definition, TOML parsing and validation.

use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::dynamics::SpacecraftConfig;
use crate::elements::{ClassicalElements, Mee, Mrp, Vec3};
use crate::error::{Error, Result};
use crate::gravity::{AsteroidModel, GravityModel, MassDistribution, SolarModel};
use crate::mpc::MpcConfig;
use crate::sensors::{CameraModel, Landmark, SensorSuite};

use super::files;

/// One spacecraft's target orbit and attitude.
#[derive(Debug, Clone)]
pub struct SatelliteSpec {
    pub target_radius_m: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    pub argp_rad: f64,
    pub true_anomaly_rad: f64,
    /// Commanded stationary body-from-orbit attitude.
    pub sigma_target: Mrp,
}

impl SatelliteSpec {
    /// Initial truth orbit: circular at the target radius.
    pub fn initial_mee(&self) -> Result<Mee> {
        ClassicalElements {
            a: self.target_radius_m,
            e: 0.0,
            inc: self.inclination_rad,
            raan: self.raan_rad,
            argp: self.argp_rad,
            nu: self.true_anomaly_rad,
        }
        .to_mee()
    }
}

/// Filter rates, degrees and initial uncertainty.
#[derive(Debug, Clone)]
pub struct FilterSettings {
    pub n_orb: usize,
    pub n_att: usize,
    pub ukf_alpha: f64,
    pub ukf_theta: f64,
    pub ukf_beta: f64,
    pub orbit_interval_s: f64,
    pub attitude_interval_s: f64,
    pub sigma0_p_m: f64,
    pub sigma0_elements: f64,
    pub sigma0_gravity: f64,
    pub sigma0_mrp: f64,
    pub sigma0_omega: f64,
    pub sigma0_gyro_bias: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings {
            n_orb: 4,
            n_att: 2,
            ukf_alpha: 0.98,
            ukf_theta: 1e-3,
            ukf_beta: 2.0,
            orbit_interval_s: 36.0,
            attitude_interval_s: 3.6,
            sigma0_p_m: 5.0,
            sigma0_elements: 5e-6,
            sigma0_gravity: 5e-3,
            sigma0_mrp: 1e-6,
            sigma0_omega: 1e-8,
            sigma0_gyro_bias: 2.42e-6,
        }
    }
}

/// Guidance/control cadence and weights.
#[derive(Debug, Clone)]
pub struct ControlSettings {
    pub orbit_intervals: usize,
    pub orbit_dt_s: f64,
    /// Orbit plan refresh period; the standing plan's interval commands
    /// apply in between.
    pub orbit_replan_s: f64,
    pub attitude_intervals: usize,
    pub attitude_dt_s: f64,
    pub gamma_orbit: f64,
    pub gamma_attitude: f64,
    pub nullify_out_of_plane: bool,
    /// Feed identified gravity into guidance and MPC. When false the
    /// controllers assume a point mass while the filters keep estimating.
    pub learning: bool,
    /// Fine-grid substeps per orbit MPC interval.
    pub reference_substeps: usize,
}

impl Default for ControlSettings {
    fn default() -> Self {
        ControlSettings {
            orbit_intervals: 40,
            orbit_dt_s: 360.0,
            orbit_replan_s: 40.0 * 360.0,
            attitude_intervals: 10,
            attitude_dt_s: 36.0,
            gamma_orbit: 1e3,
            gamma_attitude: 1e3,
            nullify_out_of_plane: true,
            learning: true,
            reference_substeps: 4,
        }
    }
}

/// Sensor datasheet values (SI at this level; the TOML layer carries the
/// datasheet units).
#[derive(Debug, Clone)]
pub struct SensorSettings {
    pub camera_resolution_px: u32,
    pub camera_fov_rad: f64,
    pub camera_focal_m: f64,
    pub pixel_sigma_px: f64,
    pub lidar_sigma_m: f64,
    pub star_sigma_rad: f64,
    pub gyro_sigma_rad_s: f64,
    pub gyro_bias_rad_s: Vec3,
    pub tracked_landmarks: usize,
    pub model_quantization_noise: bool,
}

impl Default for SensorSettings {
    fn default() -> Self {
        SensorSettings {
            camera_resolution_px: 2048,
            camera_fov_rad: 30.0_f64.to_radians(),
            camera_focal_m: 0.3,
            pixel_sigma_px: 0.5,
            lidar_sigma_m: 5.0,
            star_sigma_rad: 10.0 / 3600.0 * std::f64::consts::PI / 180.0,
            gyro_sigma_rad_s: 0.05_f64.to_radians() / 3600.0,
            gyro_bias_rad_s: Vec3::from_element(5.0_f64.to_radians() / 3600.0),
            tracked_landmarks: 3,
            model_quantization_noise: true,
        }
    }
}

impl SensorSettings {
    pub fn camera(&self) -> CameraModel {
        CameraModel::nadir_mounted(
            self.camera_focal_m,
            self.camera_resolution_px,
            self.camera_fov_rad,
        )
    }

    pub fn suite(&self) -> SensorSuite {
        SensorSuite {
            camera: self.camera(),
            pixel_sigma_px: self.pixel_sigma_px,
            lidar_sigma_m: self.lidar_sigma_m,
            star_sigma_rad: self.star_sigma_rad,
            gyro_bias: self.gyro_bias_rad_s,
            gyro_sigma: self.gyro_sigma_rad_s,
            q_max: self.tracked_landmarks,
            quantization_in_meas_noise: self.model_quantization_noise,
        }
    }
}

/// Fully resolved scenario: everything a run needs, files already loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub duration_s: f64,
    pub seed: u64,
    pub asteroid: AsteroidModel,
    pub landmarks: Vec<Landmark>,
    pub solar: Option<SolarModel>,
    pub spacecraft: SpacecraftConfig,
    pub sensors: SensorSettings,
    pub filters: FilterSettings,
    pub control: ControlSettings,
    pub satellites: Vec<SatelliteSpec>,
    /// Also write fused attitude gravity blocks back inside the fast loop.
    pub fuse_attitude_mid_loop: bool,
}

impl Scenario {
    /// Scenario with the reference spacecraft, sensors and GNC settings,
    /// ready to be customized.
    pub fn desk_default(
        name: &str,
        truth_gravity: GravityModel,
        landmarks: Vec<Landmark>,
        satellites: Vec<SatelliteSpec>,
        duration_s: f64,
        seed: u64,
    ) -> Result<Self> {
        let asteroid = AsteroidModel::new(
            truth_gravity,
            2.0 * std::f64::consts::PI / (5.27 * 3600.0),
            0.0,
        );
        let spacecraft = reference_probe()?;
        Ok(Scenario {
            name: name.to_string(),
            duration_s,
            seed,
            asteroid,
            landmarks,
            solar: Some(SolarModel::at_distance_au(1.46)),
            spacecraft,
            sensors: SensorSettings::default(),
            filters: FilterSettings::default(),
            control: ControlSettings::default(),
            satellites,
            fuse_attitude_mid_loop: false,
        })
    }

    pub fn orbit_mpc_config(&self, accel_max: Vec3) -> MpcConfig {
        MpcConfig::new(
            self.control.orbit_intervals,
            self.control.orbit_dt_s,
            self.control.gamma_orbit,
            accel_max,
            self.control.nullify_out_of_plane,
        )
    }

    pub fn attitude_mpc_config(&self, torque_max: Vec3) -> MpcConfig {
        MpcConfig::new(
            self.control.attitude_intervals,
            self.control.attitude_dt_s,
            self.control.gamma_attitude,
            torque_max,
            false,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.satellites.is_empty() {
            return Err(Error::scenario("no satellites defined"));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::scenario("duration must be positive"));
        }
        if self.filters.n_att > self.filters.n_orb {
            return Err(Error::scenario(format!(
                "n_att ({}) must not exceed n_orb ({})",
                self.filters.n_att, self.filters.n_orb
            )));
        }
        if self.filters.n_orb < 2 || self.filters.n_att < 2 {
            return Err(Error::scenario("estimated degrees must be at least 2"));
        }
        let ratio = self.filters.orbit_interval_s / self.filters.attitude_interval_s;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(Error::scenario(
                "orbit filter interval must be an integer multiple of the attitude interval",
            ));
        }
        let plan_ratio = self.control.orbit_dt_s / self.filters.orbit_interval_s;
        if (plan_ratio - plan_ratio.round()).abs() > 1e-9 || plan_ratio < 1.0 {
            return Err(Error::scenario(
                "orbit MPC interval must be an integer multiple of the orbit filter interval",
            ));
        }
        let replan_ratio = self.control.orbit_replan_s / self.control.orbit_dt_s;
        if (replan_ratio - replan_ratio.round()).abs() > 1e-9
            || replan_ratio < 1.0
            || self.control.orbit_replan_s > self.control.orbit_dt_s * self.control.orbit_intervals as f64 + 1e-9
        {
            return Err(Error::scenario(
                "orbit replan period must be a whole number of MPC intervals within the horizon",
            ));
        }
        if (self.control.attitude_dt_s - self.filters.orbit_interval_s).abs() > 1e-9 {
            return Err(Error::scenario(
                "attitude MPC interval must equal the orbit filter interval",
            ));
        }
        if self.control.reference_substeps < 2 {
            return Err(Error::scenario("reference_substeps must be at least 2"));
        }
        if self.landmarks.is_empty() {
            return Err(Error::scenario("landmark catalog is empty"));
        }
        self.asteroid.gravity.validate()?;
        if self.asteroid.gravity.degree < self.filters.n_orb {
            return Err(Error::scenario(
                "truth gravity degree below the estimated degree",
            ));
        }
        if !(self.asteroid.spin_rate > 0.0) {
            return Err(Error::scenario("asteroid spin rate must be positive"));
        }
        for (i, sat) in self.satellites.iter().enumerate() {
            if !(sat.target_radius_m > self.asteroid.gravity.re) {
                return Err(Error::scenario(format!(
                    "satellite {i}: target radius must exceed the normalization radius"
                )));
            }
            sat.initial_mee()?;
        }
        Ok(())
    }

    /// Parse a scenario file, loading the gravity/landmark tables relative
    /// to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let raw: ScenarioToml = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Scenario::from_raw(raw, dir)
    }

    /// Serialize back to TOML, pointing at the given data file names.
    pub fn to_toml_string(&self, gravity_file: &str, landmark_file: &str) -> String {
        let raw = self.to_raw(gravity_file, landmark_file);
        toml::to_string_pretty(&raw).expect("scenario serialization cannot fail")
    }

    fn from_raw(raw: ScenarioToml, dir: &Path) -> Result<Self> {
        let truth_gravity = files::load_gravity_coefficients(&dir.join(&raw.asteroid.gravity_file))?;
        if (truth_gravity.mu - raw.asteroid.mu_m3s2).abs() > 1e-6 * raw.asteroid.mu_m3s2 {
            return Err(Error::scenario(
                "gravity file mu disagrees with the scenario asteroid mu",
            ));
        }
        let landmarks = files::load_landmarks(&dir.join(&raw.landmarks.file))?;
        let spin_rate = 2.0 * std::f64::consts::PI / raw.asteroid.spin_period_s;
        let asteroid = AsteroidModel::new(
            truth_gravity,
            spin_rate,
            raw.asteroid.spin_epoch_rad.unwrap_or(0.0),
        );

        let solar = match raw.solar {
            Some(s) if s.enabled => Some(SolarModel::at_distance_au(s.sun_distance_au)),
            _ => None,
        };

        let sc = &raw.spacecraft;
        let masses = MassDistribution::new(
            sc.point_masses
                .iter()
                .map(|p| (Vec3::new(p.pos_m[0], p.pos_m[1], p.pos_m[2]), p.mass_kg))
                .collect(),
        )?;
        let accel_max = Vec3::new(sc.accel_max_ms2[0], sc.accel_max_ms2[1], sc.accel_max_ms2[2]);
        let torque_max = Vec3::new(sc.torque_max_nm[0], sc.torque_max_nm[1], sc.torque_max_nm[2]);
        let spacecraft = match sc.inertia_kgm2 {
            Some(j) => SpacecraftConfig::with_inertia(
                Matrix3::new(j[0], j[3], j[4], j[3], j[1], j[5], j[4], j[5], j[2]),
                masses,
                sc.reflectivity,
                sc.srp_area_m2,
                sc.mass_kg,
                accel_max,
                torque_max,
                sc.actuator_tau_hz,
                sc.isp_s,
            )?,
            None => SpacecraftConfig::from_masses(
                masses,
                sc.reflectivity,
                sc.srp_area_m2,
                sc.mass_kg,
                accel_max,
                torque_max,
                sc.actuator_tau_hz,
                sc.isp_s,
            )?,
        };

        let se = &raw.sensors;
        let sensors = SensorSettings {
            camera_resolution_px: se.camera_resolution_px,
            camera_fov_rad: se.camera_fov_deg.to_radians(),
            camera_focal_m: se.camera_focal_m,
            pixel_sigma_px: se.pixel_sigma_px,
            lidar_sigma_m: se.lidar_sigma_m,
            star_sigma_rad: se.star_sigma_arcsec / 3600.0 * std::f64::consts::PI / 180.0,
            gyro_sigma_rad_s: se.gyro_sigma_deg_hr.to_radians() / 3600.0,
            gyro_bias_rad_s: Vec3::new(
                se.gyro_bias_deg_hr[0].to_radians() / 3600.0,
                se.gyro_bias_deg_hr[1].to_radians() / 3600.0,
                se.gyro_bias_deg_hr[2].to_radians() / 3600.0,
            ),
            tracked_landmarks: se.tracked_landmarks,
            model_quantization_noise: se.model_quantization_noise,
        };

        let fi = &raw.filters;
        let filters = FilterSettings {
            n_orb: fi.n_orb,
            n_att: fi.n_att,
            ukf_alpha: fi.ukf_alpha,
            ukf_theta: fi.ukf_theta,
            ukf_beta: fi.ukf_beta,
            orbit_interval_s: fi.orbit_interval_s,
            attitude_interval_s: fi.attitude_interval_s,
            sigma0_p_m: fi.sigma0_p_m,
            sigma0_elements: fi.sigma0_elements,
            sigma0_gravity: fi.sigma0_gravity,
            sigma0_mrp: fi.sigma0_mrp,
            sigma0_omega: fi.sigma0_omega_rads,
            sigma0_gyro_bias: fi.sigma0_gyro_bias_rads,
        };

        let co = &raw.control;
        let control = ControlSettings {
            orbit_intervals: co.orbit_intervals,
            orbit_dt_s: co.orbit_dt_s,
            orbit_replan_s: co
                .orbit_replan_s
                .unwrap_or(co.orbit_dt_s * co.orbit_intervals as f64),
            attitude_intervals: co.attitude_intervals,
            attitude_dt_s: co.attitude_dt_s,
            gamma_orbit: co.gamma_orbit,
            gamma_attitude: co.gamma_attitude,
            nullify_out_of_plane: co.nullify_out_of_plane,
            learning: co.learning,
            reference_substeps: co.reference_substeps.unwrap_or(4),
        };

        let satellites = raw
            .satellites
            .iter()
            .map(|s| {
                let st = s.sigma_target.unwrap_or([0.0; 3]);
                SatelliteSpec {
                    target_radius_m: s.target_radius_m,
                    inclination_rad: s.inclination_deg.to_radians(),
                    raan_rad: s.raan_deg.to_radians(),
                    argp_rad: s.argp_deg.to_radians(),
                    true_anomaly_rad: s.true_anomaly_deg.to_radians(),
                    sigma_target: Mrp::new(st[0], st[1], st[2]),
                }
            })
            .collect();

        let scenario = Scenario {
            name: raw.name.unwrap_or_else(|| "unnamed".to_string()),
            duration_s: raw.duration_s,
            seed: raw.seed,
            asteroid,
            landmarks,
            solar,
            spacecraft,
            sensors,
            filters,
            control,
            satellites,
            fuse_attitude_mid_loop: raw
                .constellation
                .map(|c| c.fuse_attitude_mid_loop)
                .unwrap_or(false),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn to_raw(&self, gravity_file: &str, landmark_file: &str) -> ScenarioToml {
        let rad_to_deg_hr = |v: f64| v.to_degrees() * 3600.0;
        ScenarioToml {
            name: Some(self.name.clone()),
            duration_s: self.duration_s,
            seed: self.seed,
            asteroid: AsteroidToml {
                mu_m3s2: self.asteroid.gravity.mu,
                spin_period_s: 2.0 * std::f64::consts::PI / self.asteroid.spin_rate,
                spin_epoch_rad: Some(self.asteroid.spin_epoch),
                normalization_radius_m: self.asteroid.gravity.re,
                gravity_file: gravity_file.to_string(),
            },
            landmarks: LandmarksToml {
                file: landmark_file.to_string(),
            },
            solar: Some(SolarToml {
                enabled: self.solar.is_some(),
                sun_distance_au: self
                    .solar
                    .as_ref()
                    .map(|s| s.sun_pos_inertial.norm() / crate::gravity::AU_M)
                    .unwrap_or(1.46),
            }),
            spacecraft: SpacecraftToml {
                mass_kg: self.spacecraft.mass_kg,
                reflectivity: self.spacecraft.reflectivity,
                srp_area_m2: self.spacecraft.srp_area_m2,
                accel_max_ms2: [
                    self.spacecraft.accel_max.x,
                    self.spacecraft.accel_max.y,
                    self.spacecraft.accel_max.z,
                ],
                torque_max_nm: [
                    self.spacecraft.torque_max.x,
                    self.spacecraft.torque_max.y,
                    self.spacecraft.torque_max.z,
                ],
                actuator_tau_hz: self.spacecraft.actuator_tau,
                isp_s: self.spacecraft.isp_s,
                inertia_kgm2: None,
                point_masses: self
                    .spacecraft
                    .masses
                    .points()
                    .iter()
                    .map(|(r, m)| PointMassToml {
                        pos_m: [r.x, r.y, r.z],
                        mass_kg: *m,
                    })
                    .collect(),
            },
            sensors: SensorsToml {
                camera_resolution_px: self.sensors.camera_resolution_px,
                camera_fov_deg: self.sensors.camera_fov_rad.to_degrees(),
                camera_focal_m: self.sensors.camera_focal_m,
                pixel_sigma_px: self.sensors.pixel_sigma_px,
                lidar_sigma_m: self.sensors.lidar_sigma_m,
                star_sigma_arcsec: self.sensors.star_sigma_rad.to_degrees() * 3600.0,
                gyro_sigma_deg_hr: rad_to_deg_hr(self.sensors.gyro_sigma_rad_s),
                gyro_bias_deg_hr: [
                    rad_to_deg_hr(self.sensors.gyro_bias_rad_s.x),
                    rad_to_deg_hr(self.sensors.gyro_bias_rad_s.y),
                    rad_to_deg_hr(self.sensors.gyro_bias_rad_s.z),
                ],
                tracked_landmarks: self.sensors.tracked_landmarks,
                model_quantization_noise: self.sensors.model_quantization_noise,
            },
            filters: FiltersToml {
                n_orb: self.filters.n_orb,
                n_att: self.filters.n_att,
                ukf_alpha: self.filters.ukf_alpha,
                ukf_theta: self.filters.ukf_theta,
                ukf_beta: self.filters.ukf_beta,
                orbit_interval_s: self.filters.orbit_interval_s,
                attitude_interval_s: self.filters.attitude_interval_s,
                sigma0_p_m: self.filters.sigma0_p_m,
                sigma0_elements: self.filters.sigma0_elements,
                sigma0_gravity: self.filters.sigma0_gravity,
                sigma0_mrp: self.filters.sigma0_mrp,
                sigma0_omega_rads: self.filters.sigma0_omega,
                sigma0_gyro_bias_rads: self.filters.sigma0_gyro_bias,
            },
            control: ControlToml {
                orbit_intervals: self.control.orbit_intervals,
                orbit_dt_s: self.control.orbit_dt_s,
                orbit_replan_s: Some(self.control.orbit_replan_s),
                attitude_intervals: self.control.attitude_intervals,
                attitude_dt_s: self.control.attitude_dt_s,
                gamma_orbit: self.control.gamma_orbit,
                gamma_attitude: self.control.gamma_attitude,
                nullify_out_of_plane: self.control.nullify_out_of_plane,
                learning: self.control.learning,
                reference_substeps: Some(self.control.reference_substeps),
            },
            constellation: Some(ConstellationToml {
                fuse_attitude_mid_loop: self.fuse_attitude_mid_loop,
            }),
            satellites: self
                .satellites
                .iter()
                .map(|s| SatelliteToml {
                    target_radius_m: s.target_radius_m,
                    inclination_deg: s.inclination_rad.to_degrees(),
                    raan_deg: s.raan_rad.to_degrees(),
                    argp_deg: s.argp_rad.to_degrees(),
                    true_anomaly_deg: s.true_anomaly_rad.to_degrees(),
                    sigma_target: Some([s.sigma_target.0.x, s.sigma_target.0.y, s.sigma_target.0.z]),
                })
                .collect(),
        }
    }
}

/// The reference probe of the simulated mission: 1000 kg, boom-stabilized
/// five-point mass distribution, electric propulsion.
pub fn reference_probe() -> Result<SpacecraftConfig> {
    SpacecraftConfig::from_masses(
        MassDistribution::new(vec![
            (Vec3::new(8.0, 0.0, 0.0), 200.0),
            (Vec3::new(-2.0, -2.0, 0.0), 200.0),
            (Vec3::new(-2.0, 2.0, 0.0), 200.0),
            (Vec3::new(-2.0, 0.0, -1.0), 200.0),
            (Vec3::new(-2.0, 0.0, 1.0), 200.0),
        ])?,
        1.4,
        10.0,
        1000.0,
        Vec3::from_element(0.01),
        Vec3::from_element(0.01),
        0.1,
        2900.0,
    )
}

// --- Raw TOML mirror structs -------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioToml {
    name: Option<String>,
    duration_s: f64,
    seed: u64,
    asteroid: AsteroidToml,
    landmarks: LandmarksToml,
    solar: Option<SolarToml>,
    spacecraft: SpacecraftToml,
    sensors: SensorsToml,
    filters: FiltersToml,
    control: ControlToml,
    constellation: Option<ConstellationToml>,
    satellites: Vec<SatelliteToml>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AsteroidToml {
    mu_m3s2: f64,
    spin_period_s: f64,
    spin_epoch_rad: Option<f64>,
    normalization_radius_m: f64,
    gravity_file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LandmarksToml {
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolarToml {
    enabled: bool,
    sun_distance_au: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointMassToml {
    pos_m: [f64; 3],
    mass_kg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpacecraftToml {
    mass_kg: f64,
    reflectivity: f64,
    srp_area_m2: f64,
    accel_max_ms2: [f64; 3],
    torque_max_nm: [f64; 3],
    actuator_tau_hz: f64,
    isp_s: f64,
    inertia_kgm2: Option<[f64; 6]>,
    point_masses: Vec<PointMassToml>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SensorsToml {
    camera_resolution_px: u32,
    camera_fov_deg: f64,
    camera_focal_m: f64,
    pixel_sigma_px: f64,
    lidar_sigma_m: f64,
    star_sigma_arcsec: f64,
    gyro_sigma_deg_hr: f64,
    gyro_bias_deg_hr: [f64; 3],
    tracked_landmarks: usize,
    model_quantization_noise: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct FiltersToml {
    n_orb: usize,
    n_att: usize,
    ukf_alpha: f64,
    ukf_theta: f64,
    ukf_beta: f64,
    orbit_interval_s: f64,
    attitude_interval_s: f64,
    sigma0_p_m: f64,
    sigma0_elements: f64,
    sigma0_gravity: f64,
    sigma0_mrp: f64,
    sigma0_omega_rads: f64,
    sigma0_gyro_bias_rads: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ControlToml {
    orbit_intervals: usize,
    orbit_dt_s: f64,
    orbit_replan_s: Option<f64>,
    attitude_intervals: usize,
    attitude_dt_s: f64,
    gamma_orbit: f64,
    gamma_attitude: f64,
    nullify_out_of_plane: bool,
    learning: bool,
    reference_substeps: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstellationToml {
    fuse_attitude_mid_loop: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct SatelliteToml {
    target_radius_m: f64,
    inclination_deg: f64,
    raan_deg: f64,
    argp_deg: f64,
    true_anomaly_deg: f64,
    sigma_target: Option<[f64; 3]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{synthetic_gravity, synthetic_landmarks, SyntheticGravitySpec};

    fn test_scenario() -> Scenario {
        let gravity = synthetic_gravity(&SyntheticGravitySpec::eros_like(4, 1));
        let landmarks = synthetic_landmarks(200, Vec3::new(16.0e3, 8.0e3, 6.0e3), 1);
        Scenario::desk_default(
            "test",
            gravity,
            landmarks,
            vec![SatelliteSpec {
                target_radius_m: 34.0e3,
                inclination_rad: std::f64::consts::FRAC_PI_2,
                raan_rad: 0.0,
                argp_rad: 0.0,
                true_anomaly_rad: 0.0,
                sigma_target: Mrp::zero(),
            }],
            7200.0,
            5,
        )
        .unwrap()
    }

    #[test]
    fn default_scenario_validates() {
        test_scenario().validate().unwrap();
    }

    #[test]
    fn invariant_violations_rejected() {
        let mut s = test_scenario();
        s.filters.n_att = 5; // exceeds n_orb
        assert!(s.validate().is_err());

        let mut s = test_scenario();
        s.duration_s = -1.0;
        assert!(s.validate().is_err());

        let mut s = test_scenario();
        s.filters.attitude_interval_s = 7.0; // not a divisor of 36
        assert!(s.validate().is_err());

        let mut s = test_scenario();
        s.satellites.clear();
        assert!(s.validate().is_err());

        let mut s = test_scenario();
        s.satellites[0].target_radius_m = 10.0e3; // inside the Brillouin sphere
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_round_trip_through_files() {
        let dir = std::env::temp_dir().join("astrokeep-scenario-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let s = test_scenario();
        super::super::files::write_gravity_coefficients(
            &dir.join("g.tab"),
            &s.asteroid.gravity,
        )
        .unwrap();
        super::super::files::write_landmarks(&dir.join("l.tab"), &s.landmarks).unwrap();
        let text = s.to_toml_string("g.tab", "l.tab");
        std::fs::write(dir.join("scenario.toml"), &text).unwrap();
        let loaded = Scenario::load(&dir.join("scenario.toml")).unwrap();
        assert_eq!(loaded.name, s.name);
        assert_eq!(loaded.seed, s.seed);
        assert_eq!(loaded.satellites.len(), 1);
        assert!(
            (loaded.satellites[0].inclination_rad - s.satellites[0].inclination_rad).abs() < 1e-12
        );
        assert_eq!(loaded.asteroid.gravity, s.asteroid.gravity);
        assert_eq!(loaded.landmarks.len(), s.landmarks.len());
        assert!((loaded.spacecraft.inertia[(1, 1)] - 16400.0).abs() < 1e-9);
    }
}
