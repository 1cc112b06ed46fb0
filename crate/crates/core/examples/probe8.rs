// Scratch: criterion-8 geometry probe with unmodeled gravity tail.
use astrokeep::elements::{Mrp, Vec3};
use astrokeep::harness::{
    sustained_crossing_time_hours, synthetic_gravity, synthetic_landmarks, SatelliteSpec,
    Scenario, SyntheticGravitySpec,
};
use astrokeep::{run_constellation, run_single};

fn sat(r: f64, inc_deg: f64) -> SatelliteSpec {
    SatelliteSpec {
        target_radius_m: r,
        inclination_rad: inc_deg.to_radians(),
        raan_rad: 0.0,
        argp_rad: 0.0,
        true_anomaly_rad: 0.0,
        sigma_target: Mrp::zero(),
    }
}

fn scenario(seed: u64, degree: usize, hours: f64, sats: Vec<SatelliteSpec>) -> Scenario {
    let n_lmk: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(522);
    let c20: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(-0.05);
    let truth = synthetic_gravity(&SyntheticGravitySpec {
        degree,
        c20,
        ..SyntheticGravitySpec::eros_like(degree, seed)
    });
    let landmarks = synthetic_landmarks(n_lmk, Vec3::new(16.0e3, 8.0e3, 6.0e3), seed);
    Scenario::desk_default("p8", truth, landmarks, sats, hours * 3600.0, seed).unwrap()
}

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(101);
    let degree: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let hours: f64 = std::env::args().nth(6).and_then(|s| s.parse().ok()).unwrap_or(12.0);
    let c20_in: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(-0.05);
    let truth_c20 = synthetic_gravity(&SyntheticGravitySpec {
        degree,
        c20: c20_in,
        ..SyntheticGravitySpec::eros_like(degree, seed)
    })
    .c(2, 0);

    let conv = |h: &astrokeep::harness::SatelliteHistory| -> f64 {
        let times: Vec<f64> = h.rows.iter().map(|r| r.t).collect();
        let errs: Vec<f64> = h.rows.iter().map(|r| ((r.grav_est[0] - truth_c20) / truth_c20).abs()).collect();
        sustained_crossing_time_hours(&times, &errs, 0.2).unwrap_or(f64::INFINITY)
    };

    for inc in [30.0, 60.0, 90.0, 120.0, 150.0] {
        let scn = scenario(seed, degree, hours, vec![sat(34.0e3, inc)]);
        let run = run_single(&scn, 0).unwrap();
        eprintln!("mono i={inc:5.1}: conv {:.2} h (final err {:.1}%)", conv(&run.histories[0]),
            ((run.histories[0].rows.last().unwrap().grav_est[0] - truth_c20) / truth_c20).abs() * 100.0);
    }
    let radii: Vec<f64> = std::env::args().nth(4).map(|s| s.split(',').map(|v| v.parse::<f64>().unwrap() * 1e3).collect()).unwrap_or(vec![34.0e3, 36.0e3, 38.0e3]);
    let scn = scenario(seed, degree, hours, vec![sat(radii[0], 45.0), sat(radii[1], 90.0), sat(radii[2], 135.0)]);
    let run = run_constellation(&scn).unwrap();
    eprintln!("fused 3-sat: conv {:.2} h (final err {:.1}%)", conv(&run.histories[0]),
        ((run.histories[0].rows.last().unwrap().grav_est[0] - truth_c20) / truth_c20).abs() * 100.0);
    // Error trajectory detail around the threshold.
    let h0 = &run.histories[0];
    for row in h0.rows.iter().step_by(25) {
        let e = ((row.grav_est[0] - truth_c20) / truth_c20).abs();
        if row.t > 1.5 * 3600.0 && row.t < 6.5 * 3600.0 {
            eprintln!("  t {:5.2} h err {:6.3} sigma {:.3e}", row.t / 3600.0, e, row.grav_sigma[0]);
        }
    }
}
