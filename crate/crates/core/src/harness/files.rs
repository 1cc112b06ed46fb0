//! Gravity coefficient tables and landmark catalogs.
//!
//! Gravity file layout: `key = value` header lines (`mu_m3s2`, `re_m`,
//! `degree`, `normalization`), then one `i j C S` row per coefficient.
//! Omitted coefficients are zero; duplicate or out-of-range rows are
//! errors. The only accepted normalization tag is `fully_normalized_4pi`,
//! which must match the Legendre convention used by the evaluator.

use std::fmt::Write as _;
use std::path::Path;

use crate::elements::Vec3;
use crate::error::{Error, Result};
use crate::gravity::GravityModel;
use crate::sensors::Landmark;

const NORMALIZATION_TAG: &str = "fully_normalized_4pi";

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

pub fn load_gravity_coefficients(path: &Path) -> Result<GravityModel> {
    let text = read_to_string(path)?;
    let mut mu = None;
    let mut re = None;
    let mut degree: Option<usize> = None;
    let mut normalization_seen = false;
    let mut rows: Vec<(usize, usize, f64, f64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let key = key.trim();
            let value = value.trim();
            match key {
                "mu_m3s2" => {
                    mu = Some(value.parse::<f64>().map_err(|e| {
                        parse_err(path, format!("line {}: mu_m3s2: {e}", lineno + 1))
                    })?)
                }
                "re_m" => {
                    re = Some(value.parse::<f64>().map_err(|e| {
                        parse_err(path, format!("line {}: re_m: {e}", lineno + 1))
                    })?)
                }
                "degree" => {
                    degree = Some(value.parse::<usize>().map_err(|e| {
                        parse_err(path, format!("line {}: degree: {e}", lineno + 1))
                    })?)
                }
                "normalization" => {
                    if value != NORMALIZATION_TAG {
                        return Err(parse_err(
                            path,
                            format!(
                                "unknown normalization tag {value:?} (expected {NORMALIZATION_TAG:?})"
                            ),
                        ));
                    }
                    normalization_seen = true;
                }
                other => {
                    return Err(parse_err(
                        path,
                        format!("line {}: unknown header key {other:?}", lineno + 1),
                    ))
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                format!(
                    "line {}: coefficient rows need exactly 4 fields (i j C S), got {}",
                    lineno + 1,
                    fields.len()
                ),
            ));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: degree index: {e}", lineno + 1)))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: order index: {e}", lineno + 1)))?;
        let c: f64 = fields[2]
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: C value: {e}", lineno + 1)))?;
        let s: f64 = fields[3]
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: S value: {e}", lineno + 1)))?;
        rows.push((i, j, c, s));
    }

    let mu = mu.ok_or_else(|| parse_err(path, "missing mu_m3s2 header"))?;
    let re = re.ok_or_else(|| parse_err(path, "missing re_m header"))?;
    let degree = degree.ok_or_else(|| parse_err(path, "missing degree header"))?;
    if !normalization_seen {
        return Err(parse_err(path, "missing normalization header"));
    }

    let mut model = GravityModel::zeros(mu, re, degree.max(2));
    let mut seen = std::collections::HashSet::new();
    for (i, j, c, s) in rows {
        if i < 2 || i > degree || j > i {
            return Err(parse_err(
                path,
                format!("coefficient ({i},{j}) outside declared degree {degree}"),
            ));
        }
        if !seen.insert((i, j)) {
            return Err(parse_err(path, format!("duplicate coefficient ({i},{j})")));
        }
        model.set_c(i, j, c).map_err(|e| parse_err(path, e.to_string()))?;
        if j == 0 {
            if s != 0.0 {
                return Err(parse_err(path, format!("S[{i}][0] must be zero")));
            }
        } else {
            model.set_s(i, j, s).map_err(|e| parse_err(path, e.to_string()))?;
        }
    }
    // A declared degree below 2 degenerates to a point mass.
    if degree < 2 {
        return Ok(GravityModel::point_mass(mu, re));
    }
    Ok(model)
}

pub fn write_gravity_coefficients(path: &Path, model: &GravityModel) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# normalized spherical-harmonics coefficients");
    let _ = writeln!(out, "mu_m3s2 = {}", model.mu);
    let _ = writeln!(out, "re_m = {}", model.re);
    let _ = writeln!(out, "degree = {}", model.degree);
    let _ = writeln!(out, "normalization = {NORMALIZATION_TAG}");
    let _ = writeln!(out, "# i j C S");
    for i in 2..=model.degree {
        for j in 0..=i {
            let _ = writeln!(out, "{i} {j} {} {}", model.c(i, j), model.s(i, j));
        }
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Landmark catalog rows: `id x_m y_m z_m` in the asteroid frame.
pub fn load_landmarks(path: &Path) -> Result<Vec<Landmark>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                format!("line {}: landmark rows need 4 fields (id x y z)", lineno + 1),
            ));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: id: {e}", lineno + 1)))?;
        if !seen.insert(id) {
            return Err(parse_err(path, format!("duplicate landmark id {id}")));
        }
        let coords: Vec<f64> = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        let pos = Vec3::new(coords[0], coords[1], coords[2]);
        if pos.norm() == 0.0 {
            return Err(parse_err(path, format!("landmark {id} has zero position")));
        }
        out.push(Landmark {
            id,
            pos_asteroid: pos,
        });
    }
    if out.is_empty() {
        return Err(parse_err(path, "catalog contains no landmarks"));
    }
    Ok(out)
}

pub fn write_landmarks(path: &Path, catalog: &[Landmark]) -> Result<()> {
    let mut out = String::from("# id x_m y_m z_m\n");
    for lmk in catalog {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            lmk.id, lmk.pos_asteroid.x, lmk.pos_asteroid.y, lmk.pos_asteroid.z
        );
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
