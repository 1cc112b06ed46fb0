//! Emitted time-series data model, one row per orbit-filter tick.

/// Column-stable record of one satellite at one emission instant.
#[derive(Debug, Clone)]
pub struct HistoryRow {
    pub t: f64,
    pub truth_mee: [f64; 6],
    pub est_mee: [f64; 6],
    /// Truth spherical coordinates in the asteroid frame.
    pub r_m: f64,
    pub lon_rad: f64,
    pub lat_rad: f64,
    pub sigma_bo_truth: [f64; 3],
    pub sigma_bo_est: [f64; 3],
    /// Truth pitch/roll/yaw of the body relative to the orbit frame.
    pub euler_truth_rad: [f64; 3],
    pub accel_cmd: [f64; 3],
    pub accel_applied: [f64; 3],
    pub torque_cmd: [f64; 3],
    pub torque_applied: [f64; 3],
    /// Orbit-filter gravity coefficient means, shared block ordering.
    pub grav_est: Vec<f64>,
    /// Matching marginal 1-sigma values.
    pub grav_sigma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SatelliteHistory {
    pub satellite: usize,
    pub n_orb: usize,
    pub rows: Vec<HistoryRow>,
}

impl SatelliteHistory {
    pub fn duration(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

/// Names of the estimated coefficients in block order:
/// `c20 c21 c22 s21 s22 c30 ...`.
pub fn gravity_block_names(degree: usize) -> Vec<String> {
    let mut names = Vec::new();
    for i in 2..=degree {
        for j in 0..=i {
            names.push(format!("c{i}{j}"));
        }
        for j in 1..=i {
            names.push(format!("s{i}{j}"));
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::gravity_block_len;

    #[test]
    fn block_names_match_block_length() {
        for degree in 2..=6 {
            assert_eq!(gravity_block_names(degree).len(), gravity_block_len(degree));
        }
        let names = gravity_block_names(3);
        assert_eq!(
            names,
            vec!["c20", "c21", "c22", "s21", "s22", "c30", "c31", "c32", "c33", "s31", "s32", "s33"]
        );
    }
}
