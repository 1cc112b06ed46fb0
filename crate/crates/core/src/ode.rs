//! Embedded Dormand-Prince 4(5) integration with reproducible settings.
//!
//! All propagation in the crate runs through [`integrate`] with fixed
//! tolerances so that identical inputs produce bit-identical outputs.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Absolute tolerance, either one value for every component or per-component.
#[derive(Debug, Clone)]
pub enum Atol {
    Scalar(f64),
    PerComponent(DVector<f64>),
}

impl Atol {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        match self {
            Atol::Scalar(a) => *a,
            Atol::PerComponent(v) => v[i],
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeSettings {
    pub rtol: f64,
    pub atol: Atol,
    /// Hard cap on the step size.
    pub max_step: f64,
    pub first_step: Option<f64>,
}

impl OdeSettings {
    pub fn new(rtol: f64, atol: Atol, max_step: f64) -> Self {
        OdeSettings {
            rtol,
            atol,
            max_step,
            first_step: None,
        }
    }

    /// Default settings used by every flow in the crate: rtol 1e-10 with the
    /// step capped at the caller's sampling interval.
    pub fn standard(max_step: f64) -> Self {
        OdeSettings::new(1e-10, Atol::Scalar(1e-12), max_step)
    }

    /// Settings for modified-equinoctial states: the semi-latus rectum is in
    /// meters, the remaining five components are dimensionless or radians.
    pub fn mee(max_step: f64) -> Self {
        let mut atol = DVector::from_element(6, 1e-12);
        atol[0] = 1e-9;
        OdeSettings::new(1e-10, Atol::PerComponent(atol), max_step)
    }

    /// Per-component tolerances for a state that starts with the six MEE
    /// components and continues with dimensionless quantities.
    pub fn mee_extended(dim: usize, max_step: f64) -> Self {
        let mut atol = DVector::from_element(dim, 1e-12);
        atol[0] = 1e-9;
        OdeSettings::new(1e-10, Atol::PerComponent(atol), max_step)
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `dy/dt = f(t, y)` from `t0` to `t_end` (forward in time).
///
/// `f` writes the derivative into its third argument.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &DVector<f64>,
    t_end: f64,
    settings: &OdeSettings,
) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
{
    let span = t_end - t0;
    if span < 0.0 {
        return Err(Error::invalid("ode: t_end must not precede t0"));
    }
    if span == 0.0 {
        return Ok(y0.clone());
    }
    let n = y0.len();
    let mut y = y0.clone();
    let mut t = t0;
    let mut k: Vec<DVector<f64>> = (0..7).map(|_| DVector::zeros(n)).collect();
    let mut ytmp = DVector::zeros(n);
    let mut ynew = DVector::zeros(n);

    let mut h = settings
        .first_step
        .unwrap_or(span)
        .min(settings.max_step)
        .min(span);
    let mut k1_fresh = false;

    loop {
        if t >= t_end {
            return Ok(y);
        }
        h = h.min(settings.max_step).min(t_end - t);
        if !(h > 0.0) || h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration(format!(
                "step underflow at t = {t} (h = {h})"
            )));
        }

        if !k1_fresh {
            f(t, &y, &mut k[0]);
        }
        stage(&mut ytmp, &y, h, &k[..1], &A2);
        f(t + C[0] * h, &ytmp, &mut k[1]);
        stage(&mut ytmp, &y, h, &k[..2], &A3);
        f(t + C[1] * h, &ytmp, &mut k[2]);
        stage(&mut ytmp, &y, h, &k[..3], &A4);
        f(t + C[2] * h, &ytmp, &mut k[3]);
        stage(&mut ytmp, &y, h, &k[..4], &A5);
        f(t + C[3] * h, &ytmp, &mut k[4]);
        stage(&mut ytmp, &y, h, &k[..5], &A6);
        f(t + C[4] * h, &ytmp, &mut k[5]);
        stage(&mut ynew, &y, h, &k[..6], &A7);
        f(t + h, &ynew, &mut k[6]);

        // Weighted RMS of the embedded error estimate.
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = settings.atol.get(i) + settings.rtol * y[i].abs().max(ynew[i].abs());
            let r = e / sc;
            err_sq += r * r;
        }
        let err = (err_sq / n as f64).sqrt();

        if !err.is_finite() {
            return Err(Error::Integration(format!(
                "non-finite error estimate at t = {t}"
            )));
        }

        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            // FSAL: the last stage of an accepted step is the first of the next.
            k.swap(0, 6);
            k1_fresh = true;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            k1_fresh = true; // k[0] still holds f(t, y)
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0).min(0.9);
        }
    }
}

#[inline]
fn stage(out: &mut DVector<f64>, y: &DVector<f64>, h: f64, k: &[DVector<f64>], a: &[f64]) {
    out.copy_from(y);
    for (kj, &aj) in k.iter().zip(a) {
        if aj != 0.0 {
            out.axpy(h * aj, kj, 1.0);
        }
    }
}

/// Integrate and record the state at each requested time (strictly
/// increasing, all within `[t0, +inf)`). The callback receives `(t, y)`.
pub fn integrate_sampled<F, C2>(
    mut f: F,
    t0: f64,
    y0: &DVector<f64>,
    times: &[f64],
    settings: &OdeSettings,
    mut on_sample: C2,
) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
    C2: FnMut(f64, &DVector<f64>),
{
    let mut y = y0.clone();
    let mut t = t0;
    for &ts in times {
        if ts < t {
            return Err(Error::invalid("ode: sample times must be non-decreasing"));
        }
        y = integrate(&mut f, t, &y, ts, settings)?;
        t = ts;
        on_sample(t, &y);
    }
    Ok(y)
}
