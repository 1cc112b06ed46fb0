//! Hot-path benchmarks: gravity evaluation, filter steps, QP solves and
//! the controllers.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use astrokeep::dynamics::{orbit_process_flow, propagate_truth, TruthState};
use astrokeep::elements::{Mee, Mrp, Vec3};
use astrokeep::gravity::{gravity_accel_orbit_frame, AsteroidModel};
use astrokeep::harness::{reference_probe, synthetic_gravity, SyntheticGravitySpec};
use astrokeep::mpc::{mpc_step_attitude, mpc_step_orbit, MpcConfig};
use astrokeep::qp::{solve_box_qp, QpProblem};
use nalgebra::{DMatrix, DVector};

fn setup() -> (astrokeep::gravity::GravityModel, AsteroidModel) {
    let truth = synthetic_gravity(&SyntheticGravitySpec::eros_like(4, 1));
    let asteroid = AsteroidModel::new(
        truth.clone(),
        2.0 * std::f64::consts::PI / (5.27 * 3600.0),
        0.0,
    );
    (truth, asteroid)
}

fn bench_gravity(c: &mut Criterion) {
    let (truth, asteroid) = setup();
    let x = Mee::new(34.0e3, 0.0, 0.0, 1.0, 0.0, 0.4);
    c.bench_function("harmonics_accel_orbit_frame_4x4", |b| {
        b.iter(|| gravity_accel_orbit_frame(black_box(&truth), black_box(&x), 100.0, &asteroid))
    });
    let truth15 = synthetic_gravity(&SyntheticGravitySpec {
        degree: 15,
        ..SyntheticGravitySpec::eros_like(15, 1)
    });
    c.bench_function("harmonics_accel_orbit_frame_15x15", |b| {
        b.iter(|| gravity_accel_orbit_frame(black_box(&truth15), black_box(&x), 100.0, &asteroid))
    });
}

fn bench_flows(c: &mut Criterion) {
    let (truth, asteroid) = setup();
    let x = Mee::new(34.0e3, 0.0, 0.0, 1.0, 0.0, 0.4);
    let n_orb = 4;
    let dim = 6 + astrokeep::gravity::gravity_block_len(n_orb);
    let mut y = DVector::zeros(dim);
    y.rows_mut(0, 6).copy_from_slice(&x.to_array());
    y.rows_mut(6, dim - 6).copy_from_slice(&truth.to_block(n_orb));
    c.bench_function("orbit_process_flow_36s", |b| {
        b.iter(|| orbit_process_flow(black_box(&y), 0.0, 36.0, &Vec3::zeros(), &asteroid, n_orb))
    });

    let spacecraft = reference_probe().unwrap();
    let state = TruthState::new(x, Mrp::zero(), Vec3::new(0.0, 0.0, 1.066e-4));
    c.bench_function("propagate_truth_3p6s", |b| {
        b.iter(|| propagate_truth(black_box(&state), 3.6, &spacecraft, &asteroid, None))
    });
}

fn bench_controllers(c: &mut Criterion) {
    let (truth, asteroid) = setup();
    let spacecraft = reference_probe().unwrap();
    let estimate = Mee::new(34.05e3, 1e-4, -2e-4, 1.0, 0.0, 0.4);
    let cfg = MpcConfig::new(40, 360.0, 1e3, Vec3::from_element(0.01), true);
    c.bench_function("mpc_step_orbit_n40", |b| {
        b.iter(|| {
            mpc_step_orbit(
                black_box(&estimate),
                &truth,
                34.0e3,
                &cfg,
                &asteroid,
                0.0,
                4,
                None,
            )
        })
    });

    let (reference, _) =
        mpc_step_orbit(&estimate, &truth, 34.0e3, &cfg, &asteroid, 0.0, 4, None).unwrap();
    let att_cfg = MpcConfig::new(10, 36.0, 1e3, Vec3::from_element(0.01), false);
    let truth2 = truth.truncated(2);
    c.bench_function("mpc_step_attitude_n10", |b| {
        b.iter(|| {
            mpc_step_attitude(
                black_box(&Mrp::new(0.01, 0.0, -0.02)),
                &Vec3::new(0.0, 0.0, 1.066e-4),
                &reference,
                &truth2,
                &Mrp::zero(),
                &att_cfg,
                &spacecraft,
                &asteroid,
                0.0,
                None,
            )
        })
    });
}

fn bench_qp(c: &mut Criterion) {
    // Dense 80-variable instance shaped like the orbit controller's QP.
    let n = 80;
    let mut state = 5u64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a = DMatrix::from_fn(n, n, |_, _| next());
    let h = &a * a.transpose() * 1e3 + DMatrix::identity(n, n);
    let c_vec = DVector::from_fn(n, |_, _| next() * 10.0);
    let p = QpProblem {
        h,
        c: c_vec,
        lb: DVector::from_element(n, -0.01),
        ub: DVector::from_element(n, 0.01),
    };
    c.bench_function("box_qp_80_vars", |b| {
        b.iter(|| solve_box_qp(black_box(&p), None, 1e-10, 2000))
    });
}

criterion_group!(benches, bench_gravity, bench_flows, bench_controllers, bench_qp);
criterion_main!(benches);
