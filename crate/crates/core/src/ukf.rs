//! Unscented Kalman filter with innovation-driven process-noise estimation.
//!
//! One call advances a Gaussian state through a process function, updates it
//! with a measurement, and returns the process-noise covariance to use on
//! the next call: `Q_next = (1 - alpha) w w^T + alpha Q`, driven by the
//! gain-weighted innovation `w = K (z - z_hat)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Mean/covariance pair.
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::invalid("GaussianState: covariance shape mismatch"));
        }
        Ok(GaussianState { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Filter tuning: process-noise fading factor plus the sigma-point weight
/// parameters. The spread scaling is called `lambda_spread` to keep it apart
/// from the longitude symbol used elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct UkfParams {
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
    pub lambda_spread: f64,
}

impl UkfParams {
    /// Canonical tuning for an extended state of dimension `n`:
    /// `alpha = 0.98`, `theta = 1e-3`, `beta = 2`,
    /// `lambda = (theta^2 - 1) n`.
    pub fn canonical(n: usize) -> Self {
        let theta: f64 = 1e-3;
        UkfParams {
            alpha: 0.98,
            theta,
            beta: 2.0,
            lambda_spread: (theta * theta - 1.0) * n as f64,
        }
    }

    pub fn weights(&self, n: usize) -> Result<UkfWeights> {
        let nf = n as f64;
        let denom = nf + self.lambda_spread;
        if denom <= 0.0 {
            return Err(Error::invalid("ukf weights: n + lambda must be positive"));
        }
        Ok(UkfWeights {
            center_mean: self.lambda_spread / denom,
            center_cov: self.lambda_spread / denom + 1.0 - self.theta * self.theta + self.beta,
            off_center: 1.0 / (2.0 * denom),
            scale: denom,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UkfWeights {
    pub center_mean: f64,
    pub center_cov: f64,
    /// Weight shared by the 2n off-center points, for both mean and
    /// covariance sums.
    pub off_center: f64,
    /// `n + lambda`, the sigma-point scaling.
    pub scale: f64,
}

/// Process and measurement noise covariances for one call.
#[derive(Debug, Clone)]
pub struct UkfNoise {
    pub process: DMatrix<f64>,
    pub measurement: DMatrix<f64>,
}

/// Generate the symmetric sigma-point set `{mu, mu +/- col_k(sqrt((n +
/// lambda) Sigma))}` with a lower-triangular factorization. Index 0 is the
/// center point, then the `+` points, then the `-` points.
pub fn sigma_points(state: &GaussianState, params: &UkfParams) -> Result<Vec<DVector<f64>>> {
    let n = state.dim();
    let w = params.weights(n)?;
    let scaled = &state.cov * w.scale;
    let chol = match scaled.clone().cholesky() {
        Some(c) => c,
        None => {
            if state.cov.amax() == 0.0 {
                // Degenerate but valid: every point collapses onto the mean.
                return Ok(vec![state.mean.clone(); 2 * n + 1]);
            }
            let jitter = 1e-12 * state.cov.trace() / n as f64;
            let retry = &scaled + DMatrix::identity(n, n) * (jitter * w.scale);
            retry.cholesky().ok_or(Error::Linalg(
                "sigma_points: covariance not positive semidefinite after jitter",
            ))?
        }
    };
    let l = chol.l();
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(state.mean.clone());
    for k in 0..n {
        points.push(&state.mean + l.column(k));
    }
    for k in 0..n {
        points.push(&state.mean - l.column(k));
    }
    Ok(points)
}

/// Hooks for states that live on a chart (MRP shadow sets): re-center the
/// propagated sigma set to one chart, and map the raw measurement to the
/// representation closest to the prediction before differencing.
#[derive(Default)]
pub struct UkfHooks<'a> {
    pub after_propagation: Option<&'a dyn Fn(&mut [DVector<f64>])>,
    pub align_measurement: Option<&'a dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>>,
}

/// Everything one filter call produces.
#[derive(Debug, Clone)]
pub struct UkfStepOutput {
    pub posterior: GaussianState,
    /// Process-noise covariance estimated for the next call.
    pub process_noise_next: DMatrix<f64>,
    pub predicted_measurement: DVector<f64>,
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

/// One filter call: propagate, update with `z`, estimate the next process
/// noise.
pub fn ukf_step<G, H>(
    g: G,
    h: H,
    prior: &GaussianState,
    z: &DVector<f64>,
    noise: &UkfNoise,
    params: &UkfParams,
) -> Result<UkfStepOutput>
where
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    H: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    ukf_step_hooked(g, h, prior, z, noise, params, &UkfHooks::default())
}

pub fn ukf_step_hooked<G, H>(
    mut g: G,
    mut h: H,
    prior: &GaussianState,
    z: &DVector<f64>,
    noise: &UkfNoise,
    params: &UkfParams,
    hooks: &UkfHooks,
) -> Result<UkfStepOutput>
where
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    H: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = prior.dim();
    let m = z.len();
    if noise.process.nrows() != n || noise.measurement.nrows() != m {
        return Err(Error::invalid("ukf_step: noise dimensions inconsistent"));
    }
    let w = params.weights(n)?;

    // 1-2: propagate the sigma set and rebuild the propagated Gaussian.
    let chi = sigma_points(prior, params)?;
    let mut prop: Vec<DVector<f64>> = Vec::with_capacity(chi.len());
    for p in &chi {
        prop.push(g(p)?);
    }
    if let Some(recenter) = hooks.after_propagation {
        recenter(&mut prop);
    }
    let mean_prop = weighted_mean(&prop, &w);
    let mut cov_prop = noise.process.clone();
    accumulate_outer(&mut cov_prop, &prop, &mean_prop, &prop, &mean_prop, &w);
    symmetrize(&mut cov_prop);

    // 3: transform to measurement space.
    let mut meas: Vec<DVector<f64>> = Vec::with_capacity(prop.len());
    for p in &prop {
        meas.push(h(p)?);
    }
    let z_hat = weighted_mean(&meas, &w);
    let mut s = noise.measurement.clone();
    accumulate_outer(&mut s, &meas, &z_hat, &meas, &z_hat, &w);
    symmetrize(&mut s);

    // 4: cross-correlation and gain.
    let mut cross = DMatrix::zeros(n, m);
    accumulate_outer(&mut cross, &prop, &mean_prop, &meas, &z_hat, &w);
    let s_chol = s
        .clone()
        .cholesky()
        .ok_or(Error::Linalg("ukf_step: innovation covariance not invertible"))?;
    // K = C S^-1  <=>  K^T = S^-1 C^T.
    let gain = s_chol.solve(&cross.transpose()).transpose();

    // 5: update.
    let z_used = match hooks.align_measurement {
        Some(align) => align(z, &z_hat),
        None => z.clone(),
    };
    let innovation = &z_used - &z_hat;
    let correction = &gain * &innovation;
    let mean = &mean_prop + &correction;
    let mut cov = &cov_prop - &gain * cross.transpose();
    symmetrize(&mut cov);

    // 6: innovation-driven process noise for the next call.
    let mut q_next = &correction * correction.transpose() * (1.0 - params.alpha)
        + &noise.process * params.alpha;
    symmetrize(&mut q_next);

    Ok(UkfStepOutput {
        posterior: GaussianState { mean, cov },
        process_noise_next: q_next,
        predicted_measurement: z_hat,
        innovation,
        innovation_cov: s,
        gain,
    })
}

/// Propagation-only step (used when no measurement is available): the mean
/// follows the process, the covariance grows by the process noise.
pub fn ukf_predict<G>(
    mut g: G,
    prior: &GaussianState,
    q_process: &DMatrix<f64>,
    params: &UkfParams,
    hooks: &UkfHooks,
) -> Result<GaussianState>
where
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = prior.dim();
    let w = params.weights(n)?;
    let chi = sigma_points(prior, params)?;
    let mut prop: Vec<DVector<f64>> = Vec::with_capacity(chi.len());
    for p in &chi {
        prop.push(g(p)?);
    }
    if let Some(recenter) = hooks.after_propagation {
        recenter(&mut prop);
    }
    let mean = weighted_mean(&prop, &w);
    let mut cov = q_process.clone();
    accumulate_outer(&mut cov, &prop, &mean, &prop, &mean, &w);
    symmetrize(&mut cov);
    Ok(GaussianState { mean, cov })
}

fn weighted_mean(points: &[DVector<f64>], w: &UkfWeights) -> DVector<f64> {
    let mut mean = points[0].clone() * w.center_mean;
    for p in &points[1..] {
        mean.axpy(w.off_center, p, 1.0);
    }
    mean
}

/// `out += sum_k w_c[k] (a_k - a_mean)(b_k - b_mean)^T`.
fn accumulate_outer(
    out: &mut DMatrix<f64>,
    a: &[DVector<f64>],
    a_mean: &DVector<f64>,
    b: &[DVector<f64>],
    b_mean: &DVector<f64>,
    w: &UkfWeights,
) {
    for (k, (ak, bk)) in a.iter().zip(b.iter()).enumerate() {
        let wk = if k == 0 { w.center_cov } else { w.off_center };
        let da = ak - a_mean;
        let db = bk - b_mean;
        out.ger(wk, &da, &db, 1.0);
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}
