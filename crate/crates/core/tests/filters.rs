//! End-to-end estimation experiments for the navigation filters, run
//! against simulated truth with the full noise stack.

use nalgebra::{DMatrix, DVector};

use astrokeep::dynamics::{propagate_truth, TruthState};
use astrokeep::elements::{rot_orbit_from_inertial, ClassicalElements, Mee, Mrp, Vec3};
use astrokeep::gravity::{AsteroidModel, GravityModel};
use astrokeep::harness::reference_probe;
use astrokeep::navfilters::{
    AttitudeFilter, AttitudeInitialSigmas, AttitudeMeasNoise, OrbitFilter, OrbitInitialSigmas,
    OrbitMeasNoise,
};
use astrokeep::sensors::{select_landmarks, CameraModel, SensorSim, SensorSuite};

const MU_EROS: f64 = 4.4628e5;
const RE_EROS: f64 = 16.0e3;

fn spin_rate() -> f64 {
    2.0 * std::f64::consts::PI / (5.27 * 3600.0)
}

fn nav_camera() -> CameraModel {
    CameraModel::nadir_mounted(0.3, 2048, 30.0_f64.to_radians())
}

fn suite(seeded: bool) -> SensorSuite {
    let _ = seeded;
    SensorSuite {
        camera: nav_camera(),
        pixel_sigma_px: 0.5,
        lidar_sigma_m: 5.0,
        star_sigma_rad: 10.0 / 3600.0 * std::f64::consts::PI / 180.0,
        gyro_bias: Vec3::from_element(5.0_f64.to_radians() / 3600.0),
        gyro_sigma: 0.05_f64.to_radians() / 3600.0,
        q_max: 3,
        quantization_in_meas_noise: true,
    }
}

fn ring_catalog(n: usize) -> Vec<astrokeep::sensors::Landmark> {
    astrokeep::harness::synthetic_landmarks(n, Vec3::new(16.0e3, 8.0e3, 6.0e3), 17)
}

/// Two days of uncontrolled polar flight over a C20-only body: the orbit
/// filter pulls the coefficient from a zero prior to within 5% of truth.
#[test]
fn orbit_filter_identifies_c20_within_five_percent() {
    let mut truth_model = GravityModel::zeros(MU_EROS, RE_EROS, 2);
    truth_model.set_c(2, 0, -0.05).unwrap();
    let asteroid = AsteroidModel::new(truth_model.clone(), spin_rate(), 0.0);
    let cfg = reference_probe().unwrap();
    let catalog = ring_catalog(522);
    let camera = nav_camera();

    let x0 = ClassicalElements {
        a: 34.0e3,
        e: 0.0,
        inc: std::f64::consts::FRAC_PI_2,
        raan: 0.0,
        argp: 0.0,
        nu: 0.0,
    }
    .to_mee()
    .unwrap();
    // Ideal nadir attitude maintained kinematically; the attitude loop is
    // not under test here.
    let mut truth = TruthState::new(x0, Mrp::zero(), Vec3::zeros());

    let n_orb = 2;
    let mut filter = OrbitFilter::new(
        &x0,
        n_orb,
        OrbitInitialSigmas::default(),
        OrbitMeasNoise {
            pixel_sigma_px: 0.5,
            range_sigma_m: 5.0,
            include_quantization: true,
        },
    );
    let mut sensors = SensorSim::new(suite(true), 424242);

    let dt = 36.0;
    let steps = (2.0 * 86400.0 / dt) as usize;
    let mut skipped = 0usize;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        truth = propagate_truth(&truth, dt, &cfg, &asteroid, None).unwrap();
        let t1 = t0 + dt;
        // Ideal nadir pointing for the camera.
        let rot_oi = rot_orbit_from_inertial(&truth.orbit, MU_EROS).unwrap();
        let sigma_bi = Mrp::from_rotation(&rot_oi);
        truth.sigma_bi = sigma_bi;

        let selected =
            select_landmarks(&catalog, &truth.orbit, &sigma_bi, &camera, 3, t1, &asteroid)
                .unwrap();
        if selected.is_empty() {
            skipped += 1;
            filter
                .step(None, &catalog, &camera, &sigma_bi, &Vec3::zeros(), t0, dt, &asteroid)
                .unwrap();
            continue;
        }
        let z = sensors
            .orbit_measurement(&truth.orbit, &sigma_bi, &selected, &catalog, t1, &asteroid)
            .unwrap();
        filter
            .step(
                Some((&selected, &z)),
                &catalog,
                &camera,
                &sigma_bi,
                &Vec3::zeros(),
                t0,
                dt,
                &asteroid,
            )
            .unwrap();
    }

    let c20_est = filter.gravity_block_mean()[0];
    let err = ((c20_est + 0.05) / 0.05).abs();
    println!("C20 estimate {c20_est:.6}, error {:.2}%, {skipped} skipped updates", err * 100.0);
    assert!(
        err < 0.05,
        "C20 estimation error {:.2}% exceeds 5% (estimate {c20_est})",
        err * 100.0
    );
    // Extended-state navigation also held up.
    let p_err = (filter.mean_mee().p - truth.orbit.p).abs();
    assert!(p_err < 100.0, "p error {p_err} m");
}

/// Twelve hours of star-tracker/gyro fusion estimates a constant gyro bias
/// to better than 2% per axis.
#[test]
fn attitude_filter_estimates_gyro_bias() {
    let mut truth_model = GravityModel::zeros(MU_EROS, RE_EROS, 2);
    truth_model.set_c(2, 0, -0.05).unwrap();
    truth_model.set_c(2, 2, 0.03).unwrap();
    let asteroid = AsteroidModel::new(truth_model.clone(), spin_rate(), 0.0);
    let cfg = reference_probe().unwrap();

    let x0 = ClassicalElements {
        a: 34.0e3,
        e: 0.0,
        inc: 1.0,
        raan: 0.0,
        argp: 0.0,
        nu: 0.0,
    }
    .to_mee()
    .unwrap();
    let rot_oi = rot_orbit_from_inertial(&x0, MU_EROS).unwrap();
    let sigma_bi0 = Mrp::from_rotation(&rot_oi);
    let omega0 = Vec3::new(0.0, 0.0, (MU_EROS / 34.0e3_f64.powi(3)).sqrt());
    // Gravity-gradient stable configuration tumbles slowly about nadir.
    let mut truth = TruthState::new(x0, sigma_bi0, rot_oi.transpose() * omega0 * 0.0 + omega0);

    let n_att = 2;
    let mut filter = AttitudeFilter::new(
        &sigma_bi0,
        &truth.omega,
        n_att,
        AttitudeInitialSigmas::default(),
        AttitudeMeasNoise {
            star_sigma_rad: 10.0 / 3600.0 * std::f64::consts::PI / 180.0,
            gyro_sigma: 0.05_f64.to_radians() / 3600.0,
        },
    );
    let mut sensors = SensorSim::new(suite(true), 777);
    let bias_truth = 5.0_f64.to_radians() / 3600.0;

    let dt = 3.6;
    let steps = (12.0 * 3600.0 / dt) as usize;
    let mut orbit_mean = x0;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        truth = propagate_truth(&truth, dt, &cfg, &asteroid, None).unwrap();
        let z = sensors
            .attitude_measurement(&truth.sigma_bi, &truth.omega)
            .unwrap();
        filter
            .step(&z, &orbit_mean, &Vec3::zeros(), t0, dt, &cfg, &asteroid)
            .unwrap();
        // The companion orbit knowledge is refreshed from truth at the slow
        // cadence, as the orbit filter would provide it.
        if k % 10 == 9 {
            orbit_mean = truth.orbit;
        }
    }

    let bias_est = filter.mean_gyro_bias();
    for i in 0..3 {
        let err = ((bias_est[i] - bias_truth) / bias_truth).abs();
        println!("bias axis {i}: estimate {:.6e}, error {:.3}%", bias_est[i], err * 100.0);
        assert!(err < 0.02, "gyro bias axis {i} error {:.3}% exceeds 2%", err * 100.0);
    }
}

/// Filter consistency: normalized estimation error squared over a 50-run
/// Monte Carlo stays inside the 95% chi-square envelope for at least 80% of
/// the steps.
#[test]
fn orbit_filter_nees_consistency() {
    let truth_model = GravityModel::zeros(MU_EROS, RE_EROS, 2);
    let asteroid = AsteroidModel::new(truth_model.clone(), spin_rate(), 0.0);
    let catalog = ring_catalog(522);
    let camera = nav_camera();

    let x0 = ClassicalElements {
        a: 34.0e3,
        e: 0.0,
        inc: 0.9,
        raan: 0.3,
        argp: 0.0,
        nu: 0.0,
    }
    .to_mee()
    .unwrap();

    let n_orb = 2;
    let dim = OrbitFilter::dim(n_orb);
    let runs = 50;
    let steps = 60;
    let dt = 36.0;

    // Wilson-Hilferty chi-square quantile approximation.
    let chi2 = |p: f64, k: f64| -> f64 {
        let z = match p {
            p if (p - 0.975).abs() < 1e-9 => 1.959964,
            p if (p - 0.025).abs() < 1e-9 => -1.959964,
            _ => unreachable!(),
        };
        k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
    };
    let dof = (runs * dim) as f64;
    let lo = chi2(0.025, dof) / runs as f64;
    let hi = chi2(0.975, dof) / runs as f64;

    let mut nees_sum = vec![0.0_f64; steps];
    for run in 0..runs {
        // Sample the initial truth from the filter prior.
        let sig = OrbitInitialSigmas::default();
        let mut draw = astrokeep::harness::derive_seed(1000, run as u64);
        let mut gauss = move || {
            // Box-Muller on splitmix outputs.
            draw = astrokeep::harness::derive_seed(draw, 0x5eed);
            let u1 = (draw >> 11) as f64 / (1u64 << 53) as f64;
            draw = astrokeep::harness::derive_seed(draw, 0x5eee);
            let u2 = (draw >> 11) as f64 / (1u64 << 53) as f64;
            (-2.0 * u1.max(1e-300).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let mut truth_x = x0;
        truth_x.p += sig.p_m * gauss();
        truth_x.f += sig.elements * gauss();
        truth_x.g += sig.elements * gauss();
        truth_x.h += sig.elements * gauss();
        truth_x.k += sig.elements * gauss();
        truth_x.l += sig.elements * gauss();

        let mut truth = TruthState::new(truth_x, Mrp::zero(), Vec3::zeros());
        let mut filter = OrbitFilter::new(
            &x0,
            n_orb,
            sig,
            OrbitMeasNoise {
                pixel_sigma_px: 0.5,
                range_sigma_m: 5.0,
                include_quantization: true,
            },
        );
        // Zero-mean gravity truth matches the prior exactly here.
        let cfg = reference_probe().unwrap();
        let mut sensors = SensorSim::new(suite(true), 9000 + run as u64);

        for k in 0..steps {
            let t0 = k as f64 * dt;
            truth = propagate_truth(&truth, dt, &cfg, &asteroid, None).unwrap();
            let t1 = t0 + dt;
            let rot_oi = rot_orbit_from_inertial(&truth.orbit, MU_EROS).unwrap();
            let sigma_bi = Mrp::from_rotation(&rot_oi);
            truth.sigma_bi = sigma_bi;
            let selected =
                select_landmarks(&catalog, &truth.orbit, &sigma_bi, &camera, 3, t1, &asteroid)
                    .unwrap();
            if selected.is_empty() {
                filter
                    .step(None, &catalog, &camera, &sigma_bi, &Vec3::zeros(), t0, dt, &asteroid)
                    .unwrap();
            } else {
                let z = sensors
                    .orbit_measurement(&truth.orbit, &sigma_bi, &selected, &catalog, t1, &asteroid)
                    .unwrap();
                filter
                    .step(
                        Some((&selected, &z)),
                        &catalog,
                        &camera,
                        &sigma_bi,
                        &Vec3::zeros(),
                        t0,
                        dt,
                        &asteroid,
                    )
                    .unwrap();
            }
            let mut err = DVector::zeros(dim);
            let truth_arr = truth.orbit.to_array();
            for i in 0..6 {
                err[i] = filter.state.mean[i] - truth_arr[i];
            }
            for i in 6..dim {
                err[i] = filter.state.mean[i]; // truth coefficients are zero
            }
            let cov: DMatrix<f64> = filter.state.cov.clone();
            let chol = cov.cholesky().expect("posterior covariance PSD");
            let w = chol.solve(&err);
            nees_sum[k] += err.dot(&w);
        }
    }

    let mut inside = 0usize;
    for (k, s) in nees_sum.iter().enumerate() {
        let mean_nees = s / runs as f64;
        if mean_nees >= lo && mean_nees <= hi {
            inside += 1;
        } else {
            println!("step {k}: mean NEES {mean_nees:.2} outside [{lo:.2}, {hi:.2}]");
        }
    }
    let frac = inside as f64 / steps as f64;
    println!("NEES inside 95% envelope for {:.0}% of steps", frac * 100.0);
    assert!(
        frac >= 0.8,
        "NEES consistency: only {:.0}% of steps inside the envelope",
        frac * 100.0
    );
}
