//! Receding-horizon LTV-MPC: linearize about the guidance reference,
//! condense through state transition matrices, and solve the resulting box
//! QP.
//!
//! The tracking-error dynamics `dx_dot = A(t) dx + B(t) du (+ drift)` are
//! discretized per interval by jointly integrating `Phi_dot = A Phi`,
//! `Gamma_dot = A Gamma + B` and `delta_dot = A delta + d` from
//! `(I, 0, 0)`, which realizes the input/drift convolution integrals
//! without ever inverting a transition matrix. Long-span transition
//! matrices are always composed from the per-interval ones.

use nalgebra::{DMatrix, DVector, Matrix6, Matrix6x3, Vector6};

use crate::dynamics::{gve_rates, mrp_rates_orbit_relative, omega_rates, SpacecraftConfig};
use crate::elements::{Mee, Mrp, Vec3};
use crate::error::Result;
use crate::gravity::{
    gravity_accel_orbit_frame, gravity_gradient_torque, AsteroidModel, GravityModel,
};
use crate::guidance::{attitude_reference_at, orbit_reference, OrbitReference};
use crate::qp::{solve_box_qp, QpProblem, QpSolution};

/// Controller settings for one loop (orbit or attitude).
#[derive(Debug, Clone)]
pub struct MpcConfig {
    pub n_intervals: usize,
    /// Interval duration, seconds.
    pub dt: f64,
    /// Tracking-error weight against unit control effort.
    pub gamma: f64,
    /// Per-axis control bound.
    pub u_max: Vec3,
    /// Zero the normal-axis control by eliminating it from the QP (orbit
    /// only).
    pub nullify_normal: bool,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    /// Fixed RK4 substeps per interval for the STM integration.
    pub stm_substeps: usize,
}

impl MpcConfig {
    pub fn new(n_intervals: usize, dt: f64, gamma: f64, u_max: Vec3, nullify_normal: bool) -> Self {
        MpcConfig {
            n_intervals,
            dt,
            gamma,
            u_max,
            nullify_normal,
            qp_tol: 1e-10,
            qp_max_iter: 2000,
            stm_substeps: ((dt / 45.0).ceil() as usize).max(4),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.n_intervals as f64 * self.dt
    }
}

/// Central-difference Jacobian with per-component steps
/// `max(1e-6 |x_i|, floor_i)`.
pub fn fd_jacobian6<F>(f: F, x: &Vector6<f64>, floors: &Vector6<f64>) -> Matrix6<f64>
where
    F: Fn(&Vector6<f64>) -> Vector6<f64>,
{
    let mut jac = Matrix6::zeros();
    for i in 0..6 {
        let step = (1e-6 * x[i].abs()).max(floors[i]);
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += step;
        xm[i] -= step;
        let fp = f(&xp);
        let fm = f(&xm);
        jac.set_column(i, &((fp - fm) / (2.0 * step)));
    }
    jac
}

/// Same differencing for the 6x3 control Jacobian.
pub fn fd_control_jacobian<F>(f: F, u: &Vec3, floor: f64) -> Matrix6x3<f64>
where
    F: Fn(&Vec3) -> Vector6<f64>,
{
    let mut jac = Matrix6x3::zeros();
    for i in 0..3 {
        let step = (1e-6 * u[i].abs()).max(floor);
        let mut up = *u;
        let mut um = *u;
        up[i] += step;
        um[i] -= step;
        jac.set_column(i, &((f(&up) - f(&um)) / (2.0 * step)));
    }
    jac
}

/// Per-interval discretization blocks of the LTV error dynamics.
#[derive(Debug, Clone)]
pub struct LtvBlocks {
    /// `Phi_k = Phi(t_k, t_{k-1})`.
    pub phi: Vec<Matrix6<f64>>,
    /// `Gamma_k = integral over the interval of Phi(t_k, tau) B(tau)`.
    pub gamma: Vec<Matrix6x3<f64>>,
    /// Per-interval accumulated drift (zero when the reference is
    /// consistent).
    pub drift: Vec<Vector6<f64>>,
}

/// One evaluation of the LTV system matrices at a given time.
#[derive(Clone, Copy)]
struct LtvAt {
    a: Matrix6<f64>,
    b: Matrix6x3<f64>,
    d: Vector6<f64>,
}

#[derive(Clone, Copy)]
struct LtvState {
    phi: Matrix6<f64>,
    gamma: Matrix6x3<f64>,
    delta: Vector6<f64>,
}

impl LtvState {
    fn rates(&self, sys: &LtvAt) -> LtvState {
        LtvState {
            phi: sys.a * self.phi,
            gamma: sys.a * self.gamma + sys.b,
            delta: sys.a * self.delta + sys.d,
        }
    }

    fn axpy(&self, h: f64, k: &LtvState) -> LtvState {
        LtvState {
            phi: self.phi + h * k.phi,
            gamma: self.gamma + h * k.gamma,
            delta: self.delta + h * k.delta,
        }
    }
}

/// Integrate the per-interval STM, input and drift blocks over `n`
/// intervals starting at `t0`.
///
/// Uses fixed-step classical RK4 with `substeps` steps per interval: the
/// error dynamics are smooth and slow, the Jacobians come from finite
/// differences whose noise floor would starve an adaptive error
/// controller, and a fixed grid makes long-span transition matrices
/// compose exactly.
pub fn integrate_stm(
    a_of_t: &dyn Fn(f64) -> Matrix6<f64>,
    b_of_t: &dyn Fn(f64) -> Matrix6x3<f64>,
    drift_of_t: Option<&dyn Fn(f64) -> Vector6<f64>>,
    t0: f64,
    dt: f64,
    n: usize,
    substeps: usize,
) -> Result<LtvBlocks> {
    if substeps == 0 {
        return Err(crate::error::Error::invalid("integrate_stm: substeps must be >= 1"));
    }
    let eval = |t: f64| -> LtvAt {
        LtvAt {
            a: a_of_t(t),
            b: b_of_t(t),
            d: drift_of_t.map(|d| d(t)).unwrap_or_else(Vector6::zeros),
        }
    };
    let mut blocks = LtvBlocks {
        phi: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
        drift: Vec::with_capacity(n),
    };
    let h = dt / substeps as f64;
    // The end-of-substep evaluation is reused as the start of the next.
    let mut sys_start = eval(t0);
    for k in 0..n {
        let tk = t0 + k as f64 * dt;
        let mut y = LtvState {
            phi: Matrix6::identity(),
            gamma: Matrix6x3::zeros(),
            delta: Vector6::zeros(),
        };
        for s in 0..substeps {
            let t = tk + s as f64 * h;
            let sys_mid = eval(t + 0.5 * h);
            let sys_end = eval(t + h);
            let k1 = y.rates(&sys_start);
            let k2 = y.axpy(0.5 * h, &k1).rates(&sys_mid);
            let k3 = y.axpy(0.5 * h, &k2).rates(&sys_mid);
            let k4 = y.axpy(h, &k3).rates(&sys_end);
            y = LtvState {
                phi: y.phi + (h / 6.0) * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
                gamma: y.gamma
                    + (h / 6.0) * (k1.gamma + 2.0 * k2.gamma + 2.0 * k3.gamma + k4.gamma),
                delta: y.delta
                    + (h / 6.0) * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta),
            };
            sys_start = sys_end;
        }
        blocks.phi.push(y.phi);
        blocks.gamma.push(y.gamma);
        blocks.drift.push(y.delta);
    }
    Ok(blocks)
}

/// Condensed prediction matrices: `dx_S = D dx_0 + G du_S + drift_S`.
#[derive(Debug, Clone)]
pub struct StackedLtv {
    pub d: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub drift: DVector<f64>,
    pub n_intervals: usize,
}

/// Build the stacks by composing interval blocks (never inverting a
/// transition matrix): `D` rows are cumulative products, `G` block `(k, i)`
/// is `Phi(t_k, t_i) Gamma_i`, and the drift stack follows the recursion
/// `drift_k = Phi_k drift_{k-1} + delta_k`.
pub fn build_stacks(blocks: &LtvBlocks) -> StackedLtv {
    let n = blocks.phi.len();
    let mut d = DMatrix::zeros(6 * n, 6);
    let mut g = DMatrix::zeros(6 * n, 3 * n);
    let mut drift = DVector::zeros(6 * n);

    // Row k of everything is obtained from row k-1 by left-multiplying with
    // Phi_k and appending the fresh interval blocks.
    let mut phi_cum = Matrix6::identity();
    for k in 0..n {
        let phi_k = &blocks.phi[k];
        phi_cum = phi_k * phi_cum;
        d.view_mut((6 * k, 0), (6, 6)).copy_from(&phi_cum);

        for i in 0..=k {
            let block = if i == k {
                blocks.gamma[k]
            } else {
                let mut prev = Matrix6x3::zeros();
                prev.copy_from(&g.view((6 * (k - 1), 3 * i), (6, 3)));
                phi_k * prev
            };
            g.view_mut((6 * k, 3 * i), (6, 3)).copy_from(&block);
        }

        let prev_drift = if k == 0 {
            Vector6::zeros()
        } else {
            Vector6::from_column_slice(&drift.as_slice()[6 * (k - 1)..6 * k])
        };
        let dk = phi_k * prev_drift + blocks.drift[k];
        drift.rows_mut(6 * k, 6).copy_from_slice(dk.as_slice());
    }
    StackedLtv {
        d,
        g,
        drift,
        n_intervals: n,
    }
}

/// Box QP in the retained decision variables, plus the bookkeeping needed to
/// re-expand a solution to the full `3N` control increment.
#[derive(Debug, Clone)]
pub struct QpAssembly {
    pub problem: QpProblem,
    /// Indices of the retained variables within the full `3N` vector.
    pub kept: Vec<usize>,
    pub n_total: usize,
}

impl QpAssembly {
    /// Expand a solution of the reduced problem to the full control
    /// increment (eliminated variables are exactly zero).
    pub fn expand(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.n_total);
        for (slot, &idx) in self.kept.iter().enumerate() {
            full[idx] = x[slot];
        }
        full
    }
}

/// Assemble the condensed QP
/// `min 2 c^T du + du^T (gamma G^T P G + I) du` with box bounds
/// `-u_max - u_bar <= du <= u_max - u_bar`. The tracking weight selects the
/// first three components of each state block. When `nullify_normal` is
/// set, every third control variable is eliminated structurally.
pub fn assemble_qp(
    stacks: &StackedLtv,
    dx0: &Vector6<f64>,
    gamma: f64,
    u_bar: &[Vec3],
    u_max: &Vec3,
    nullify_normal: bool,
) -> QpAssembly {
    let n = stacks.n_intervals;
    debug_assert_eq!(u_bar.len(), n);
    // Selected rows (first three of each block) of G and of D dx0 + drift.
    let mut g_sel = DMatrix::zeros(3 * n, 3 * n);
    let mut e_sel = DVector::zeros(3 * n);
    let free_err = &stacks.d * DVector::from_column_slice(dx0.as_slice()) + &stacks.drift;
    for k in 0..n {
        for r in 0..3 {
            e_sel[3 * k + r] = free_err[6 * k + r];
            for c in 0..3 * n {
                g_sel[(3 * k + r, c)] = stacks.g[(6 * k + r, c)];
            }
        }
    }

    let kept: Vec<usize> = (0..3 * n)
        .filter(|i| !(nullify_normal && i % 3 == 2))
        .collect();
    let nk = kept.len();

    let gk = {
        let mut m = DMatrix::zeros(3 * n, nk);
        for (slot, &idx) in kept.iter().enumerate() {
            m.set_column(slot, &g_sel.column(idx));
        }
        m
    };
    let mut h = gk.transpose() * &gk * gamma;
    for i in 0..nk {
        h[(i, i)] += 1.0;
    }
    let c = gk.transpose() * &e_sel * gamma;

    let mut lb = DVector::zeros(nk);
    let mut ub = DVector::zeros(nk);
    for (slot, &idx) in kept.iter().enumerate() {
        let axis = idx % 3;
        let interval = idx / 3;
        lb[slot] = -u_max[axis] - u_bar[interval][axis];
        ub[slot] = u_max[axis] - u_bar[interval][axis];
    }

    QpAssembly {
        problem: QpProblem { h, c, lb, ub },
        kept,
        n_total: 3 * n,
    }
}

/// One controller output: the commanded control per interval over the
/// horizon (reference plus optimal increment), with solver diagnostics.
#[derive(Debug, Clone)]
pub struct ControlPlan {
    pub t0: f64,
    pub dt: f64,
    /// Total commanded control per interval.
    pub commands: Vec<Vec3>,
    /// Optimal control increments (decision variables re-expanded).
    pub increments: Vec<Vec3>,
    pub qp: QpSolution,
}

impl ControlPlan {
    /// Command that applies during `[t0, t0 + dt)` etc.
    pub fn command_at(&self, t: f64) -> Vec3 {
        let k = (((t - self.t0) / self.dt).floor() as isize)
            .clamp(0, self.commands.len() as isize - 1) as usize;
        self.commands[k]
    }

    pub fn first_command(&self) -> Vec3 {
        self.commands[0]
    }
}

const MEE_FD_FLOORS: [f64; 6] = [5e-2, 1e-6, 1e-6, 1e-6, 1e-6, 1e-6];
const ATT_FD_FLOORS: [f64; 6] = [1e-6, 1e-6, 1e-6, 1e-9, 1e-9, 1e-9];

/// Orbit MPC step: build the reference from the current estimate and
/// identified gravity, linearize, condense, solve, and return both.
#[allow(clippy::too_many_arguments)]
pub fn mpc_step_orbit(
    estimate: &Mee,
    gravity_est: &GravityModel,
    target_radius: f64,
    cfg: &MpcConfig,
    asteroid: &AsteroidModel,
    t0: f64,
    substeps: usize,
    warm_start: Option<&DVector<f64>>,
) -> Result<(OrbitReference, ControlPlan)> {
    let reference = orbit_reference(
        estimate,
        gravity_est,
        target_radius,
        t0,
        cfg.n_intervals,
        cfg.dt,
        substeps,
        asteroid,
    )?;
    let mu = gravity_est.mu;

    // Model dynamics: GVE driven by the identified gravity plus control.
    let model = |x: &Mee, u: &Vec3, t: f64| -> Vector6<f64> {
        let a = match gravity_accel_orbit_frame(gravity_est, x, t, asteroid) {
            Ok(a) => a + u,
            Err(_) => *u,
        };
        gve_rates(x, &a, mu).unwrap_or_else(|_| Vector6::zeros())
    };

    let floors = Vector6::from_column_slice(&MEE_FD_FLOORS);
    let a_of_t = |t: f64| -> Matrix6<f64> {
        let x_bar = reference.state_at(t);
        let u_bar = reference.control_at(t);
        let x_vec = Vector6::from_column_slice(&x_bar.to_array());
        fd_jacobian6(
            |xv| model(&Mee::from_slice(xv.as_slice()), &u_bar, t),
            &x_vec,
            &floors,
        )
    };
    let b_of_t = |t: f64| -> Matrix6x3<f64> {
        let x_bar = reference.state_at(t);
        let u_bar = reference.control_at(t);
        fd_control_jacobian(|u| model(&x_bar, u, t), &u_bar, 1e-8)
    };

    let blocks = integrate_stm(&a_of_t, &b_of_t, None, t0, cfg.dt, cfg.n_intervals, cfg.stm_substeps)?;
    let stacks = build_stacks(&blocks);

    let x_ref0 = reference.state_at(t0);
    let dx0 = Vector6::from_iterator(
        estimate
            .to_array()
            .iter()
            .zip(x_ref0.to_array().iter())
            .map(|(a, b)| a - b),
    );
    let u_bar: Vec<Vec3> = (0..cfg.n_intervals)
        .map(|k| reference.control_avg(k, cfg.dt))
        .collect();
    let assembly = assemble_qp(
        &stacks,
        &dx0,
        cfg.gamma,
        &u_bar,
        &cfg.u_max,
        cfg.nullify_normal,
    );
    let qp = solve_box_qp(&assembly.problem, warm_start, cfg.qp_tol, cfg.qp_max_iter)?;
    let du_full = assembly.expand(&qp.x);

    let mut commands = Vec::with_capacity(cfg.n_intervals);
    let mut increments = Vec::with_capacity(cfg.n_intervals);
    for k in 0..cfg.n_intervals {
        let du = Vec3::new(du_full[3 * k], du_full[3 * k + 1], du_full[3 * k + 2]);
        increments.push(du);
        commands.push(u_bar[k] + du);
    }
    Ok((
        reference,
        ControlPlan {
            t0,
            dt: cfg.dt,
            commands,
            increments,
            qp,
        },
    ))
}

/// Attitude MPC step about the stationary-attitude reference carried by the
/// supplied orbit reference. The decision variable is the torque itself
/// (the reference torque is zero), and the fictitious-reference drift is
/// integrated into the condensed prediction.
#[allow(clippy::too_many_arguments)]
pub fn mpc_step_attitude(
    sigma_bo_est: &Mrp,
    omega_est: &Vec3,
    orbit_ref: &OrbitReference,
    gravity_att: &GravityModel,
    sigma_target: &Mrp,
    cfg: &MpcConfig,
    spacecraft: &SpacecraftConfig,
    asteroid: &AsteroidModel,
    t0: f64,
    warm_start: Option<&DVector<f64>>,
) -> Result<ControlPlan> {
    // Attitude-error dynamics along the orbit reference.
    let model = |x: &Vector6<f64>, torque: &Vec3, t: f64| -> Vector6<f64> {
        let sigma = Mrp::new(x[0], x[1], x[2]);
        let omega = Vec3::new(x[3], x[4], x[5]);
        let x_orb = orbit_ref.state_at(t);
        let omega_orbit = orbit_ref.omega_orbit_at(t);
        let sigma_dot = mrp_rates_orbit_relative(&sigma, &omega, &omega_orbit);
        let t_grav = gravity_gradient_torque(
            gravity_att,
            &spacecraft.masses,
            &x_orb,
            &sigma.to_rotation(),
            t,
            asteroid,
        )
        .unwrap_or_else(|_| Vec3::zeros());
        let omega_dot = omega_rates(&omega, &(t_grav + torque), spacecraft);
        let mut out = Vector6::zeros();
        out.rows_mut(0, 3).copy_from_slice(sigma_dot.as_slice());
        out.rows_mut(3, 3).copy_from_slice(omega_dot.as_slice());
        out
    };

    let ref_state = |t: f64| -> Vector6<f64> {
        let att = attitude_reference_at(orbit_ref, sigma_target, t);
        let mut v = Vector6::zeros();
        v.rows_mut(0, 3).copy_from_slice(att.sigma_bo.0.as_slice());
        v.rows_mut(3, 3).copy_from_slice(att.omega.as_slice());
        v
    };

    let floors = Vector6::from_column_slice(&ATT_FD_FLOORS);
    let a_of_t = |t: f64| -> Matrix6<f64> {
        let x_bar = ref_state(t);
        fd_jacobian6(|xv| model(xv, &Vec3::zeros(), t), &x_bar, &floors)
    };
    let b_of_t = |t: f64| -> Matrix6x3<f64> {
        let x_bar = ref_state(t);
        fd_control_jacobian(|u| model(&x_bar, u, t), &Vec3::zeros(), 1e-6)
    };
    // Fictitious-reference drift: model flow at the reference minus the
    // reference's own time derivative (finite-differenced; the omega
    // reference varies on the orbit timescale).
    let drift_of_t = |t: f64| -> Vector6<f64> {
        let x_bar = ref_state(t);
        let f_bar = model(&x_bar, &Vec3::zeros(), t);
        let dtau = 0.5;
        let xdot_bar = (ref_state(t + dtau) - ref_state(t - dtau)) / (2.0 * dtau);
        f_bar - xdot_bar
    };

    let blocks = integrate_stm(
        &a_of_t,
        &b_of_t,
        Some(&drift_of_t),
        t0,
        cfg.dt,
        cfg.n_intervals,
        cfg.stm_substeps,
    )?;
    let stacks = build_stacks(&blocks);

    let x0 = {
        let mut v = Vector6::zeros();
        v.rows_mut(0, 3).copy_from_slice(sigma_bo_est.0.as_slice());
        v.rows_mut(3, 3).copy_from_slice(omega_est.as_slice());
        v
    };
    let dx0 = x0 - ref_state(t0);
    let u_bar = vec![Vec3::zeros(); cfg.n_intervals];
    let assembly = assemble_qp(&stacks, &dx0, cfg.gamma, &u_bar, &cfg.u_max, false);
    let qp = solve_box_qp(&assembly.problem, warm_start, cfg.qp_tol, cfg.qp_max_iter)?;
    let du_full = assembly.expand(&qp.x);

    let mut commands = Vec::with_capacity(cfg.n_intervals);
    for k in 0..cfg.n_intervals {
        commands.push(Vec3::new(
            du_full[3 * k],
            du_full[3 * k + 1],
            du_full[3 * k + 2],
        ));
    }
    Ok(ControlPlan {
        t0,
        dt: cfg.dt,
        increments: commands.clone(),
        commands,
        qp,
    })
}
