//! Scenario configuration, data files, metrics and persistence.
//!
//! Scenario files are TOML with units spelled out in the key names
//! (`target_radius_m`, `spin_period_s`, ...). Gravity coefficient tables
//! and landmark catalogs are plain whitespace-delimited text so they can be
//! produced by anything.

pub mod files;
mod history;
mod metrics;
mod output;
mod scenario;
mod synth;

pub use files::{
    load_gravity_coefficients, load_landmarks, write_gravity_coefficients, write_landmarks,
};
pub use history::{gravity_block_names, HistoryRow, SatelliteHistory};
pub use metrics::{
    compute_metrics, sustained_crossing_time, sustained_crossing_time_hours,
    CoefficientReport, MetricsReport, STANDARD_GRAVITY,
};
pub use output::{emit_compare_summary, emit_outputs, load_history_dir, metrics_to_text};
pub use scenario::{
    reference_probe,
    ControlSettings, FilterSettings, SatelliteSpec, Scenario, SensorSettings,
};
pub use synth::{synthetic_gravity, synthetic_landmarks, SyntheticGravitySpec};

/// Deterministic per-satellite/per-purpose seed derivation (splitmix64).
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
