//! Inhomogeneous gravity field, solar perturbations and gravity-gradient
//! torque.
//!
//! The non-Keplerian gravity is a spherical-harmonics expansion with fully
//! (4-pi) normalized coefficients and Legendre functions; any consistent
//! coefficient/polynomial normalization pairing evaluates the same field, so
//! coefficient files must declare the convention they use.

use nalgebra::Matrix3;

use crate::elements::{
    cross_matrix, mee_to_cartesian, spherical_in_asteroid_frame, Mee, Mrp, RotMat,
    SphericalCoords, Vec3,
};
use crate::error::{Error, Result};

pub const AU_M: f64 = 1.495_978_707e11;
/// Sun standard gravitational parameter, m^3/s^2.
pub const MU_SUN: f64 = 1.327_124_4e20;
/// Solar radiation pressure at 1 AU, Pa.
pub const SRP_1AU_PA: f64 = 4.5e-6;

/// Normalized spherical-harmonics gravity model.
///
/// Coefficients are stored triangularly for `0 <= j <= i <= degree`; rows 0
/// and 1 are kept for indexing but are identically zero (the expansion
/// starts at degree 2). `S[i][0]` is unused and always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityModel {
    pub mu: f64,
    /// Normalization radius, meters.
    pub re: f64,
    pub degree: usize,
    c: Vec<f64>,
    s: Vec<f64>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

/// Number of estimated coefficients for degrees `2..=degree`
/// (`sum of 2i+1`).
pub fn gravity_block_len(degree: usize) -> usize {
    if degree < 2 {
        0
    } else {
        (2..=degree).map(|i| 2 * i + 1).sum()
    }
}

impl GravityModel {
    pub fn zeros(mu: f64, re: f64, degree: usize) -> Self {
        let n = tri(degree, degree) + 1;
        GravityModel {
            mu,
            re,
            degree,
            c: vec![0.0; n],
            s: vec![0.0; n],
        }
    }

    /// Point-mass body: no inhomogeneous terms at all.
    pub fn point_mass(mu: f64, re: f64) -> Self {
        GravityModel::zeros(mu, re, 0)
    }

    pub fn c(&self, i: usize, j: usize) -> f64 {
        if i <= self.degree && j <= i {
            self.c[tri(i, j)]
        } else {
            0.0
        }
    }

    pub fn s(&self, i: usize, j: usize) -> f64 {
        if i <= self.degree && j <= i {
            self.s[tri(i, j)]
        } else {
            0.0
        }
    }

    pub fn set_c(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        self.check_index(i, j)?;
        self.c[tri(i, j)] = v;
        Ok(())
    }

    pub fn set_s(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        self.check_index(i, j)?;
        if j == 0 && v != 0.0 {
            return Err(Error::invalid("GravityModel: S[i][0] must be zero"));
        }
        self.s[tri(i, j)] = v;
        Ok(())
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i < 2 || i > self.degree || j > i {
            return Err(Error::invalid(format!(
                "GravityModel: coefficient ({i},{j}) outside degree {}",
                self.degree
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0 && self.re.is_finite() && self.re > 0.0) {
            return Err(Error::invalid("GravityModel: mu and re must be positive"));
        }
        if self.c.iter().chain(self.s.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GravityModel coefficients"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0) && self.s.iter().all(|&v| v == 0.0)
    }

    /// Copy truncated to `degree` (or padded with zeros when extending).
    pub fn truncated(&self, degree: usize) -> GravityModel {
        let mut out = GravityModel::zeros(self.mu, self.re, degree);
        for i in 2..=degree.min(self.degree) {
            for j in 0..=i {
                out.c[tri(i, j)] = self.c[tri(i, j)];
                out.s[tri(i, j)] = self.s[tri(i, j)];
            }
        }
        out
    }

    /// Flatten degrees `2..=degree` in the shared estimation order:
    /// `C_i0..C_ii, S_i1..S_ii` per degree, degrees ascending.
    pub fn to_block(&self, degree: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(gravity_block_len(degree));
        for i in 2..=degree {
            for j in 0..=i {
                out.push(self.c(i, j));
            }
            for j in 1..=i {
                out.push(self.s(i, j));
            }
        }
        out
    }

    /// Inverse of [`GravityModel::to_block`].
    pub fn from_block(mu: f64, re: f64, degree: usize, block: &[f64]) -> Result<Self> {
        if block.len() != gravity_block_len(degree) {
            return Err(Error::invalid(format!(
                "gravity block length {} does not match degree {degree}",
                block.len()
            )));
        }
        let mut model = GravityModel::zeros(mu, re, degree);
        let mut it = block.iter();
        for i in 2..=degree {
            for j in 0..=i {
                model.c[tri(i, j)] = *it.next().unwrap();
            }
            for j in 1..=i {
                model.s[tri(i, j)] = *it.next().unwrap();
            }
        }
        Ok(model)
    }
}

/// Uniformly rotating asteroid: gravity model plus spin state.
#[derive(Debug, Clone)]
pub struct AsteroidModel {
    pub gravity: GravityModel,
    /// Spin rate about the major inertia axis (inertial z), rad/s.
    pub spin_rate: f64,
    /// Rotation angle at t = 0, radians.
    pub spin_epoch: f64,
}

impl AsteroidModel {
    pub fn new(gravity: GravityModel, spin_rate: f64, spin_epoch: f64) -> Self {
        AsteroidModel {
            gravity,
            spin_rate,
            spin_epoch,
        }
    }

    #[inline]
    pub fn rotation_angle(&self, t: f64) -> f64 {
        self.spin_epoch + self.spin_rate * t
    }
}

/// Sun third-body and radiation-pressure environment. The Sun position is
/// held constant in the asteroid-centered inertial frame.
#[derive(Debug, Clone)]
pub struct SolarModel {
    pub mu_sun: f64,
    pub sun_pos_inertial: Vec3,
    pub p_1au: f64,
    pub r_1au: f64,
}

impl SolarModel {
    /// Sun fixed at its average distance on the inertial x axis.
    pub fn at_distance_au(distance_au: f64) -> Self {
        SolarModel {
            mu_sun: MU_SUN,
            sun_pos_inertial: Vec3::new(distance_au * AU_M, 0.0, 0.0),
            p_1au: SRP_1AU_PA,
            r_1au: AU_M,
        }
    }
}

/// Discrete spacecraft mass distribution used by the gravity-gradient
/// torque. The center of mass must sit at the body-frame origin.
#[derive(Debug, Clone)]
pub struct MassDistribution {
    points: Vec<(Vec3, f64)>,
    total_mass: f64,
}

impl MassDistribution {
    pub fn new(points: Vec<(Vec3, f64)>) -> Result<Self> {
        let total_mass: f64 = points.iter().map(|(_, m)| m).sum();
        if !(total_mass > 0.0) {
            return Err(Error::invalid("MassDistribution: total mass must be positive"));
        }
        let first_moment: Vec3 = points.iter().map(|(r, m)| r * *m).sum();
        let arm = points
            .iter()
            .map(|(r, _)| r.norm())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        if first_moment.norm() > 1e-9 * total_mass * arm {
            return Err(Error::invalid(
                "MassDistribution: center of mass is not at the origin",
            ));
        }
        Ok(MassDistribution { points, total_mass })
    }

    pub fn points(&self) -> &[(Vec3, f64)] {
        &self.points
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Inertia tensor of the point set about the origin.
    pub fn inertia(&self) -> Matrix3<f64> {
        let mut j = Matrix3::zeros();
        for (r, m) in &self.points {
            j += *m * (Matrix3::identity() * r.norm_squared() - r * r.transpose());
        }
        j
    }
}

/// Fully normalized associated Legendre values `P[n][m]` and derivatives
/// `dP[n][m]/dx` for `x = sin(latitude)`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub n_max: usize,
    p: Vec<f64>,
    dp: Vec<f64>,
}

impl LegendreTable {
    #[inline]
    pub fn p(&self, n: usize, m: usize) -> f64 {
        self.p[tri(n, m)]
    }

    /// Derivative with respect to `x = sin(latitude)`. At `|x| = 1` the
    /// sectorial/tesseral derivatives diverge; they are returned as zero and
    /// the limit is taken where the product with `cos(latitude)` appears.
    #[inline]
    pub fn dp(&self, n: usize, m: usize) -> f64 {
        self.dp[tri(n, m)]
    }
}

/// Values of `P[n][m]` via stable diagonal/column recursions.
fn legendre_values(n_max: usize, x: f64, first_diagonal: f64) -> Vec<f64> {
    // `first_diagonal` seeds P[1][1]; passing sqrt(3)*u gives the plain
    // table, sqrt(3) gives the table divided by u = cos(latitude).
    let u = (1.0 - x * x).max(0.0).sqrt();
    let mut p = vec![0.0; tri(n_max, n_max) + 1];
    p[tri(0, 0)] = 1.0;
    if n_max == 0 {
        return p;
    }
    p[tri(1, 0)] = 3.0_f64.sqrt() * x;
    p[tri(1, 1)] = first_diagonal;
    for m in 2..=n_max {
        p[tri(m, m)] = u * ((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt() * p[tri(m - 1, m - 1)];
    }
    for m in 0..n_max {
        p[tri(m + 1, m)] = x * (2.0 * m as f64 + 3.0).sqrt() * p[tri(m, m)];
        for n in (m + 2)..=n_max {
            let nf = n as f64;
            let mf = m as f64;
            let a = ((2.0 * nf - 1.0) * (2.0 * nf + 1.0) / ((nf - mf) * (nf + mf))).sqrt();
            let b = ((nf - 1.0 + mf) * (nf - 1.0 - mf) / ((2.0 * nf - 3.0) * (2.0 * nf - 1.0)))
                .sqrt();
            p[tri(n, m)] = a * (x * p[tri(n - 1, m)] - b * p[tri(n - 2, m)]);
        }
    }
    p
}

/// Fully (4-pi) normalized associated Legendre functions of
/// `x = sin(latitude)` with first derivatives, to degree/order `n_max`.
pub fn legendre_normalized(n_max: usize, x: f64) -> Result<LegendreTable> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("legendre: |x| must be <= 1, got {x}")));
    }
    let u_sq = 1.0 - x * x;
    let p = legendre_values(n_max, x, 3.0_f64.sqrt() * u_sq.max(0.0).sqrt());
    let mut dp = vec![0.0; p.len()];
    if u_sq > 1e-14 {
        for n in 1..=n_max {
            let nf = n as f64;
            for m in 0..=n {
                let mf = m as f64;
                let prev = if m <= n - 1 { p[tri(n - 1, m)] } else { 0.0 };
                let e = ((nf * nf - mf * mf) * (2.0 * nf + 1.0) / (2.0 * nf - 1.0)).sqrt();
                dp[tri(n, m)] = (-nf * x * p[tri(n, m)] + e * prev) / u_sq;
            }
        }
    } else {
        // Pole limits: zonal derivatives stay finite, the rest diverge and
        // are only ever used multiplied by cos(latitude).
        for n in 1..=n_max {
            let nf = n as f64;
            let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
            dp[tri(n, 0)] = sign * (2.0 * nf + 1.0).sqrt() * nf * (nf + 1.0) / 2.0;
        }
    }
    Ok(LegendreTable { n_max, p, dp })
}

/// True when an evaluation point sits inside the normalization sphere,
/// where the truncated series may diverge from the real field.
pub fn is_inside_brillouin(model: &GravityModel, r: f64) -> bool {
    r < model.re
}

/// Non-Keplerian spherical-harmonics acceleration in the local spherical
/// frame S (radial, east, north), m/s^2.
///
/// Evaluation is pole-safe: the east and north rows use Legendre tables with
/// the cosine-latitude factor cancelled analytically.
pub fn harmonics_accel_spherical(model: &GravityModel, sph: &SphericalCoords) -> Result<Vec3> {
    if !(sph.r > 0.0) {
        return Err(Error::invalid("harmonics: radius must be positive"));
    }
    if model.degree < 2 || model.is_zero() {
        return Ok(Vec3::zeros());
    }
    let x = sph.lat.sin();
    let nmax = model.degree;
    let p = legendre_values(nmax, x, 3.0_f64.sqrt() * (1.0 - x * x).max(0.0).sqrt());
    // Table with one cos(latitude) factored out of every m >= 1 term.
    let h = legendre_values(nmax, x, 3.0_f64.sqrt());

    let mut accel = Vec3::zeros();
    let mu_r2 = model.mu / (sph.r * sph.r);
    let ratio = model.re / sph.r;
    let mut ratio_pow = ratio; // (Re/r)^1, bumped to ^2 on first pass
    for i in 2..=nmax {
        ratio_pow *= ratio;
        let nf = i as f64;
        let mut row = Vec3::zeros();
        for j in 0..=i {
            let mf = j as f64;
            let (sjl, cjl) = (mf * sph.lon).sin_cos();
            let cos_term = model.c(i, j) * cjl + model.s(i, j) * sjl;
            let sin_term = -model.c(i, j) * sjl + model.s(i, j) * cjl;
            row.x += -(nf + 1.0) * p[tri(i, j)] * cos_term;
            if j >= 1 {
                row.y += mf * h[tri(i, j)] * sin_term;
            }
            // dP/d(latitude) = e * P[i][j+1] - m * x * P[i][j]/u,
            // with the 1/u absorbed into the h table.
            let e = if j == 0 {
                (nf * (nf + 1.0) / 2.0).sqrt()
            } else {
                ((nf - mf) * (nf + mf + 1.0)).sqrt()
            };
            let p_next = if j + 1 <= i { p[tri(i, j + 1)] } else { 0.0 };
            let m_term = if j >= 1 { mf * x * h[tri(i, j)] } else { 0.0 };
            row.z += (e * p_next - m_term) * cos_term;
        }
        accel += mu_r2 * ratio_pow * row;
    }
    Ok(accel)
}

/// Rotation from the local spherical frame S to the asteroid frame; columns
/// are the radial, east and north unit vectors.
pub fn rot_asteroid_from_spherical(lon: f64, lat: f64) -> RotMat {
    let (sl, cl) = lon.sin_cos();
    let (sp, cp) = lat.sin_cos();
    Matrix3::from_columns(&[
        Vec3::new(cp * cl, cp * sl, sp),
        Vec3::new(-sl, cl, 0.0),
        Vec3::new(-sp * cl, -sp * sl, cp),
    ])
}

/// Harmonics acceleration at an arbitrary inertial position, expressed in
/// the inertial frame.
pub fn harmonics_accel_inertial(
    model: &GravityModel,
    pos_inertial: &Vec3,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<Vec3> {
    let angle = asteroid.rotation_angle(t);
    let sph = spherical_in_asteroid_frame(pos_inertial, angle);
    let a_s = harmonics_accel_spherical(model, &sph)?;
    let r_as = rot_asteroid_from_spherical(sph.lon, sph.lat);
    let r_ia = crate::elements::rot_z_active(angle);
    Ok(r_ia * (r_as * a_s))
}

/// Non-Keplerian gravity acceleration projected in the orbit frame.
pub fn gravity_accel_orbit_frame(
    model: &GravityModel,
    x: &Mee,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<Vec3> {
    let (pos, vel) = mee_to_cartesian(x, model.mu)?;
    let rot_oi = orbit_rot_from_rv(&pos, &vel)?;
    let a_i = harmonics_accel_inertial(model, &pos, t, asteroid)?;
    Ok(rot_oi * a_i)
}

/// Orbit-frame rotation built directly from a position/velocity pair.
pub fn orbit_rot_from_rv(pos: &Vec3, vel: &Vec3) -> Result<RotMat> {
    let r = pos.norm();
    if !(r > 0.0) {
        return Err(Error::Singular("orbit frame: zero radius"));
    }
    let h = pos.cross(vel);
    let hn = h.norm();
    if !(hn > 0.0) {
        return Err(Error::Singular("orbit frame: zero angular momentum"));
    }
    let i_o = pos / r;
    let k_o = h / hn;
    let j_o = k_o.cross(&i_o);
    Ok(RotMat::from_rows(&[
        i_o.transpose(),
        j_o.transpose(),
        k_o.transpose(),
    ]))
}

/// Sun third-body tidal acceleration in the orbit frame.
pub fn sun_third_body(x: &Mee, solar: &SolarModel, mu: f64) -> Result<Vec3> {
    let (pos, vel) = mee_to_cartesian(x, mu)?;
    let rot_oi = orbit_rot_from_rv(&pos, &vel)?;
    Ok(rot_oi * sun_third_body_inertial(&pos, solar))
}

pub fn sun_third_body_inertial(pos_inertial: &Vec3, solar: &SolarModel) -> Vec3 {
    let d = solar.sun_pos_inertial - pos_inertial;
    solar.mu_sun
        * (d / d.norm().powi(3)
            - solar.sun_pos_inertial / solar.sun_pos_inertial.norm().powi(3))
}

/// Solar radiation pressure acceleration in the orbit frame.
pub fn srp_accel(
    x: &Mee,
    solar: &SolarModel,
    c_r: f64,
    area_m2: f64,
    mass_kg: f64,
    mu: f64,
) -> Result<Vec3> {
    if !(mass_kg > 0.0) {
        return Err(Error::invalid("srp_accel: mass must be positive"));
    }
    let (pos, vel) = mee_to_cartesian(x, mu)?;
    let rot_oi = orbit_rot_from_rv(&pos, &vel)?;
    Ok(rot_oi * srp_accel_inertial(&pos, solar, c_r, area_m2, mass_kg))
}

pub fn srp_accel_inertial(
    pos_inertial: &Vec3,
    solar: &SolarModel,
    c_r: f64,
    area_m2: f64,
    mass_kg: f64,
) -> Vec3 {
    let d = solar.sun_pos_inertial - pos_inertial;
    let scale = c_r * solar.p_1au * area_m2 / mass_kg
        * (solar.r_1au / solar.sun_pos_inertial.norm()).powi(2);
    -scale * d / d.norm()
}

/// Total (Keplerian plus harmonics) gravity at an inertial position,
/// expressed in the inertial frame.
pub fn total_gravity_inertial(
    model: &GravityModel,
    pos_inertial: &Vec3,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<Vec3> {
    let r = pos_inertial.norm();
    if !(r > 0.0) {
        return Err(Error::Singular("gravity: zero radius"));
    }
    let kepler = -model.mu / (r * r * r) * pos_inertial;
    Ok(kepler + harmonics_accel_inertial(model, pos_inertial, t, asteroid)?)
}

/// Gravity-gradient torque on a discrete mass distribution, in the body
/// frame. `rot_bo` maps orbit-frame components into body-frame components.
pub fn gravity_gradient_torque(
    model: &GravityModel,
    masses: &MassDistribution,
    x: &Mee,
    rot_bo: &RotMat,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<Vec3> {
    let (pos, vel) = mee_to_cartesian(x, model.mu)?;
    let rot_oi = orbit_rot_from_rv(&pos, &vel)?;
    gravity_gradient_torque_at(model, masses, &pos, &rot_oi, rot_bo, t, asteroid)
}

/// Same torque with the center-of-mass inertial position and frames already
/// resolved (used inside propagation loops).
pub fn gravity_gradient_torque_at(
    model: &GravityModel,
    masses: &MassDistribution,
    pos_inertial: &Vec3,
    rot_oi: &RotMat,
    rot_bo: &RotMat,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<Vec3> {
    let rot_ib = (rot_bo * rot_oi).transpose(); // body -> inertial
    let mut torque = Vec3::zeros();
    for (dr_body, m) in masses.points() {
        let point_i = pos_inertial + rot_ib * dr_body;
        let a_i = total_gravity_inertial(model, &point_i, t, asteroid)?;
        let a_b = rot_bo * (rot_oi * a_i);
        torque += *m * dr_body.cross(&a_b);
    }
    Ok(torque)
}

/// Spec-facing wrapper taking the body attitude as an MRP.
pub fn gravity_gradient_torque_mrp(
    model: &GravityModel,
    masses: &MassDistribution,
    x: &Mee,
    sigma_bo: &Mrp,
    t: f64,
    asteroid: &AsteroidModel,
) -> Result<Vec3> {
    gravity_gradient_torque(model, masses, x, &sigma_bo.to_rotation(), t, asteroid)
}

/// First-order gravity-gradient torque of the continuum model,
/// `3 mu / r^3 * r_hat x (J r_hat)`; used as an oracle for the discrete sum.
pub fn dumbbell_torque_oracle(mu: f64, r: f64, inertia: &Matrix3<f64>, r_hat_body: &Vec3) -> Vec3 {
    3.0 * mu / (r * r * r) * cross_matrix(r_hat_body) * (inertia * r_hat_body)
}
