//! Reference generation for the predictive controllers.
//!
//! The orbit reference pins a circular orbit (`p = a_target`, `f = g = 0`)
//! and cancels the identified radial/tangential gravity perturbation with
//! the reference control, letting `h, k, L` evolve freely under the
//! uncancelled normal component. The attitude reference holds a constant
//! body-from-orbit orientation; the angular-velocity reference nullifies
//! the relative attitude kinematics exactly, which makes it fictitious (no
//! torque profile sustains it) and leaves a drift for the controller to
//! compensate.

use nalgebra::DVector;

use crate::dynamics::AttitudeState;
use crate::elements::{orbit_frame_angular_velocity, Mee, Mrp, Vec3};
use crate::error::{Error, Result};
use crate::gravity::{gravity_accel_orbit_frame, AsteroidModel, GravityModel};
use crate::ode::{self, OdeSettings};

/// Time-gridded orbit reference over one control horizon, with dense cubic
/// Hermite interpolation between nodes.
#[derive(Debug, Clone)]
pub struct OrbitReference {
    pub t0: f64,
    pub horizon: f64,
    /// Frozen controlled variables.
    pub p: f64,
    pub f: f64,
    pub g: f64,
    /// Fine-grid node spacing.
    dt_node: f64,
    /// `h, k, L` at the fine-grid nodes.
    hkl: Vec<[f64; 3]>,
    hkl_dot: Vec<[f64; 3]>,
    /// Cancellation control `a_bar = -[a_grav_r, a_grav_t, 0]` at the nodes.
    cancel: Vec<[f64; 2]>,
    /// Identified normal gravity component at the nodes (not cancelled).
    grav_normal: Vec<f64>,
    pub mu: f64,
}

impl OrbitReference {
    fn node_span(&self, t: f64) -> (usize, f64) {
        let n = self.hkl.len() - 1;
        let s = ((t - self.t0) / self.dt_node).clamp(0.0, n as f64 - 1e-12);
        let i = (s.floor() as usize).min(n - 1);
        (i, s - i as f64)
    }

    fn hermite(&self, t: f64, comp: usize) -> f64 {
        let (i, u) = self.node_span(t);
        let h = self.dt_node;
        let (y0, y1) = (self.hkl[i][comp], self.hkl[i + 1][comp]);
        let (d0, d1) = (self.hkl_dot[i][comp], self.hkl_dot[i + 1][comp]);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * h * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * h * d1
    }

    /// Reference state at `t` (within the horizon).
    pub fn state_at(&self, t: f64) -> Mee {
        Mee {
            p: self.p,
            f: self.f,
            g: self.g,
            h: self.hermite(t, 0),
            k: self.hermite(t, 1),
            l: self.hermite(t, 2),
        }
    }

    /// Reference cancellation control at `t` (orbit frame; normal component
    /// is identically zero).
    pub fn control_at(&self, t: f64) -> Vec3 {
        let (i, u) = self.node_span(t);
        let a = self.cancel[i];
        let b = self.cancel[i + 1];
        Vec3::new(a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), 0.0)
    }

    /// Identified (uncancelled) normal gravity component along the
    /// reference.
    pub fn grav_normal_at(&self, t: f64) -> f64 {
        let (i, u) = self.node_span(t);
        self.grav_normal[i] + u * (self.grav_normal[i + 1] - self.grav_normal[i])
    }

    /// Orbit-frame angular velocity along the reference, including the
    /// out-of-plane precession from the identified normal gravity.
    pub fn omega_orbit_at(&self, t: f64) -> Vec3 {
        orbit_frame_angular_velocity(&self.state_at(t), self.grav_normal_at(t), self.mu)
    }

    /// Interval average of the reference control over
    /// `[t0 + k dt, t0 + (k+1) dt]`: exact trapezoid of the piecewise-linear
    /// control profile, so it is consistent with [`OrbitReference::control_at`].
    pub fn control_avg(&self, k: usize, dt: f64) -> Vec3 {
        let start = self.t0 + k as f64 * dt;
        let nodes_per = (dt / self.dt_node).round() as usize;
        debug_assert!(nodes_per >= 2);
        let i0 = (((start - self.t0) / self.dt_node).round()) as usize;
        let mut sum = [0.0_f64; 2];
        for j in 0..=nodes_per {
            let w = if j == 0 || j == nodes_per { 0.5 } else { 1.0 };
            sum[0] += w * self.cancel[i0 + j][0];
            sum[1] += w * self.cancel[i0 + j][1];
        }
        let scale = self.dt_node / dt;
        Vec3::new(sum[0] * scale, sum[1] * scale, 0.0)
    }
}

/// Generate the orbit reference: project the current estimate onto the
/// constraint set (`p = a_target`, `f = g = 0`, keep `h, k, L`), then
/// integrate the free out-of-plane/longitude dynamics under the
/// radial/tangential cancellation policy.
pub fn orbit_reference(
    estimate: &Mee,
    gravity_est: &GravityModel,
    target_radius: f64,
    t0: f64,
    n_intervals: usize,
    dt: f64,
    substeps: usize,
    asteroid: &AsteroidModel,
) -> Result<OrbitReference> {
    if n_intervals == 0 || !(dt > 0.0) || substeps < 2 || substeps % 2 != 0 {
        return Err(Error::invalid(
            "orbit_reference: need n_intervals >= 1 and an even substep count >= 2",
        ));
    }
    estimate.validate()?;
    let mu = gravity_est.mu;
    let p = target_radius;
    let dt_node = dt / substeps as f64;
    let n_nodes = n_intervals * substeps + 1;

    let eval = |t: f64, h: f64, k: f64, l: f64| -> Result<([f64; 3], [f64; 2], f64)> {
        let x = Mee {
            p,
            f: 0.0,
            g: 0.0,
            h,
            k,
            l,
        };
        let a_grav = gravity_accel_orbit_frame(gravity_est, &x, t, asteroid)?;
        let sq = (p / mu).sqrt();
        let s_sq = 1.0 + h * h + k * k;
        let (sl, cl) = l.sin_cos();
        let an = a_grav.z;
        let rates = [
            sq * s_sq * an * cl / 2.0,
            sq * s_sq * an * sl / 2.0,
            (mu * p).sqrt() / (p * p) + sq * (h * sl - k * cl) * an,
        ];
        Ok((rates, [-a_grav.x, -a_grav.y], an))
    };

    let mut hkl = Vec::with_capacity(n_nodes);
    let mut hkl_dot = Vec::with_capacity(n_nodes);
    let mut cancel = Vec::with_capacity(n_nodes);
    let mut grav_normal = Vec::with_capacity(n_nodes);

    let mut rhs_error: Option<Error> = None;
    let mut record = |t: f64, y: &DVector<f64>| {
        match eval(t, y[0], y[1], y[2]) {
            Ok((rates, c, an)) => {
                hkl.push([y[0], y[1], y[2]]);
                hkl_dot.push(rates);
                cancel.push(c);
                grav_normal.push(an);
            }
            Err(e) => rhs_error = Some(e),
        }
    };

    let y0 = DVector::from_row_slice(&[estimate.h, estimate.k, estimate.l]);
    record(t0, &y0);

    let times: Vec<f64> = (1..n_nodes).map(|i| t0 + i as f64 * dt_node).collect();
    let settings = OdeSettings::new(1e-10, ode::Atol::Scalar(1e-12), dt);
    let mut rhs_err2: Option<Error> = None;
    ode::integrate_sampled(
        |t, y, dy| match eval(t, y[0], y[1], y[2]) {
            Ok((rates, _, _)) => dy.copy_from_slice(&rates),
            Err(e) => {
                rhs_err2 = Some(e);
                dy.fill(0.0);
            }
        },
        t0,
        &y0,
        &times,
        &settings,
        |t, y| record(t, y),
    )?;
    if let Some(e) = rhs_error.or(rhs_err2) {
        return Err(e);
    }

    Ok(OrbitReference {
        t0,
        horizon: n_intervals as f64 * dt,
        p,
        f: 0.0,
        g: 0.0,
        dt_node,
        hkl,
        hkl_dot,
        cancel,
        grav_normal,
        mu,
    })
}

/// Stationary-attitude reference at `t`: constant `sigma_BO` with the
/// angular velocity that nullifies the orbit-relative kinematics,
/// `omega_bar = R(sigma_bar) omega_orbit(x_bar(t))`. The reference torque is
/// identically zero.
pub fn attitude_reference_at(
    orbit_ref: &OrbitReference,
    sigma_target: &Mrp,
    t: f64,
) -> AttitudeState {
    AttitudeState {
        sigma_bo: *sigma_target,
        omega: sigma_target.to_rotation() * orbit_ref.omega_orbit_at(t),
    }
}
