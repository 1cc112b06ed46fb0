//! Cross-module frame kinematics checks.

use astrokeep::dynamics::gve_rates;
use astrokeep::elements::{
    orbit_frame_angular_velocity, rot_orbit_from_inertial, ClassicalElements, Mee, Vec3,
};
use astrokeep::ode::{integrate, Atol, OdeSettings};
use nalgebra::{DVector, Matrix3};

const MU_EROS: f64 = 4.4628e5;

/// The orbit-frame angular velocity formula must match the numerical
/// derivative of the orbit frame along a propagated trajectory, including
/// the out-of-plane precession driven by a normal acceleration.
#[test]
fn orbit_frame_rate_matches_finite_difference_of_frames() {
    let el = ClassicalElements {
        a: 34.0e3,
        e: 0.08,
        inc: 1.1,
        raan: 0.4,
        argp: 0.7,
        nu: 0.3,
    };
    let x0 = el.to_mee().unwrap();
    let a_n = 2e-5;
    let accel = Vec3::new(0.0, 0.0, a_n);

    let settings = OdeSettings::new(1e-12, Atol::Scalar(1e-12), 5.0);
    let propagate = |dt: f64| -> Mee {
        let y0 = DVector::from_row_slice(&x0.to_array());
        let y1 = integrate(
            |_t, y, dy| {
                let x = Mee::from_slice(y.as_slice());
                dy.copy_from_slice(gve_rates(&x, &accel, MU_EROS).unwrap().as_slice());
            },
            0.0,
            &y0,
            dt,
            &settings,
        )
        .unwrap();
        Mee::from_slice(y1.as_slice())
    };

    // Central difference of R(t): omega_cross = R_dot R^T gives the frame
    // rate in the rotated (orbit) axes via -R_dot R^T ... use the standard
    // relation omega^O = vee(R_dot * R^T) with R = R^O_I mapping inertial
    // to orbit components: R_dot R^T = -[omega^O x].
    let h = 0.5;
    let r_plus = rot_orbit_from_inertial(&propagate(h), MU_EROS).unwrap();
    let r_minus = rot_orbit_from_inertial(&propagate(-0.0 + 0.0), MU_EROS).unwrap();
    // Two-point forward difference with Richardson refinement.
    let r0 = r_minus;
    let r_2h = rot_orbit_from_inertial(&propagate(2.0 * h), MU_EROS).unwrap();
    let d_h = (r_plus - r0) / h;
    let d_2h = (r_2h - r0) / (2.0 * h);
    let r_dot = 2.0 * d_h - d_2h; // first-order Richardson at t = 0
    let omega_cross: Matrix3<f64> = -r_dot * r0.transpose();
    let omega_fd = Vec3::new(
        omega_cross[(2, 1)] - omega_cross[(1, 2)],
        omega_cross[(0, 2)] - omega_cross[(2, 0)],
        omega_cross[(1, 0)] - omega_cross[(0, 1)],
    ) / 2.0;

    let omega = orbit_frame_angular_velocity(&x0, a_n, MU_EROS);
    let err = (omega - omega_fd).norm() / omega.norm();
    println!("omega formula {omega:?} vs finite difference {omega_fd:?} (rel err {err:.2e})");
    assert!(err < 1e-6, "orbit frame rate mismatch: {err:.2e}");

    // The transverse component is identically zero.
    assert!(omega.y.abs() < 1e-18);
}
