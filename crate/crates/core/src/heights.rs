//! Height systems from leveling with gravity: geopotential numbers,
//! orthometric, normal and dynamic heights, and the normal potential.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

/// Mean earth radius used in the normal-gravity height reduction, m.
pub const EARTH_RADIUS: f64 = 6_371_000.0;
/// Geocentric gravitational constant of the potential model, m³/s².
pub const GM: f64 = 3_986_005e8;
pub const A_POTENTIAL: f64 = 6_378_137.0;
/// Earth rotation rate, rad/s.
pub const OMEGA: f64 = 7_292_115e-11;
pub const J2: f64 = 108_263e-8;

/// One leveling run: per-segment gravity (gal) and height difference (m),
/// end latitudes (rad) and mean height (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelLine {
    pub segments: Vec<(f64, f64)>,
    pub phi_start: f64,
    pub phi_end: f64,
    pub h_mean: f64,
}

impl LevelLine {
    pub fn new(segments: Vec<(f64, f64)>, phi_start: f64, phi_end: f64, h_mean: f64) -> Result<Self> {
        if segments.iter().any(|(g, dh)| !g.is_finite() || !dh.is_finite()) || !h_mean.is_finite() {
            return Err(GeoError::Domain("leveling values must be finite".into()));
        }
        Ok(LevelLine { segments, phi_start, phi_end, h_mean })
    }

    pub fn sum_dh(&self) -> f64 {
        self.segments.iter().map(|(_, dh)| dh).sum()
    }

    /// Σ g·dh in gal·m.
    fn work(&self) -> f64 {
        self.segments.iter().map(|(g, dh)| g * dh).sum()
    }

    pub fn phi_mean(&self) -> f64 {
        0.5 * (self.phi_start + self.phi_end)
    }
}

/// Which sin²2φ coefficient the gravity formula uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GravityCoefficient {
    /// 0.0000059.
    #[default]
    Canonical,
    /// 0.000059 as printed in the source formula.
    Printed,
}

/// C in geopotential units (kgal·m).
pub fn geopotential_number(line: &LevelLine) -> f64 {
    line.work() / 1000.0
}

/// Orthometric correction −0.0053·sin 2φ_m·H_m·Δφ, m.
pub fn orthometric_correction(line: &LevelLine) -> f64 {
    -0.0053 * (2.0 * line.phi_mean()).sin() * line.h_mean * (line.phi_end - line.phi_start)
}

pub fn orthometric_height(line: &LevelLine) -> f64 {
    line.sum_dh() + orthometric_correction(line)
}

/// Normal gravity at sea level, gal.
pub fn cassini_gravity_with(phi: f64, coef: GravityCoefficient) -> f64 {
    let c2 = match coef {
        GravityCoefficient::Canonical => 0.000_005_9,
        GravityCoefficient::Printed => 0.000_059,
    };
    let s = phi.sin();
    let s2 = (2.0 * phi).sin();
    978.0490 * (1.0 + 0.005_288_4 * s * s - c2 * s2 * s2)
}

pub fn cassini_gravity(phi: f64) -> f64 {
    cassini_gravity_with(phi, GravityCoefficient::Canonical)
}

/// Normal height with γ_m = γ₀(φ)(1 − H/R).
pub fn normal_height(line: &LevelLine, phi: f64, h_approx: f64) -> Result<f64> {
    normal_height_with(line, phi, h_approx, EARTH_RADIUS)
}

pub fn normal_height_with(line: &LevelLine, phi: f64, h_approx: f64, r: f64) -> Result<f64> {
    let factor = 1.0 - h_approx / r;
    if !(factor.abs() > 1e-12) || !(r > 0.0) {
        return Err(GeoError::Domain("mean normal gravity vanishes (H = R)".into()));
    }
    Ok(line.work() / (cassini_gravity(phi) * factor))
}

pub fn dynamic_height(line: &LevelLine) -> f64 {
    line.work() / cassini_gravity(std::f64::consts::FRAC_PI_4)
}

/// Ellipsoidal height from orthometric height and geoid undulation.
pub fn gps_height(h_ortho: f64, n_geoid: f64) -> f64 {
    h_ortho + n_geoid
}

pub fn ortho_from_gps(he: f64, n_geoid: f64) -> f64 {
    he - n_geoid
}

pub fn geoid_from_heights(he: f64, h_ortho: f64) -> f64 {
    he - h_ortho
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub gm: f64,
    pub a: f64,
    pub omega: f64,
    pub j2: f64,
}

impl Default for PotentialModel {
    fn default() -> Self {
        PotentialModel { gm: GM, a: A_POTENTIAL, omega: OMEGA, j2: J2 }
    }
}

/// Gravity potential at radius r and colatitude θ, m²/s².
pub fn normal_potential(r: f64, theta: f64) -> Result<f64> {
    normal_potential_with(&PotentialModel::default(), r, theta)
}

pub fn normal_potential_with(m: &PotentialModel, r: f64, theta: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(GeoError::Domain("radius must be positive".into()));
    }
    let x = theta.cos();
    let p2 = 0.5 * (3.0 * x * x - 1.0);
    let s = theta.sin();
    Ok(m.gm / r * (1.0 - m.j2 * (m.a / r).powi(2) * p2) + 0.5 * m.omega * m.omega * r * r * s * s)
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn loops_close(g0 in 979.0f64..981.0, grad in 0.2e-3f64..0.4e-3, hs in prop::collection::vec(0.0f64..1500.0, 2..20)) {
            // Gravity depends on height alone, so the field is conservative.
            let g = |h: f64| g0 - grad * h;
            let mut path = hs.clone();
            path.push(hs[0]);
            let segs = path.windows(2).map(|w| (0.5 * (g(w[0]) + g(w[1])), w[1] - w[0])).collect();
            let line = LevelLine::new(segs, 0.7, 0.7, 0.0).unwrap();
            prop_assert!(geopotential_number(&line).abs() < 1e-9);
        }

        #[test]
        fn height_systems_agree(phi in 0.65f64..0.92, top in 50.0f64..800.0, steps in 2usize..40) {
            let g0 = cassini_gravity(phi);
            let g = |h: f64| g0 * (1.0 - 2.0 * h / EARTH_RADIUS);
            let hs: Vec<f64> = (0..=steps).map(|k| top * k as f64 / steps as f64).collect();
            let segs = hs.windows(2).map(|w| (0.5 * (g(w[0]) + g(w[1])), w[1] - w[0])).collect();
            let line = LevelLine::new(segs, phi - 0.001, phi + 0.001, 0.5 * top).unwrap();
            let hs = [normal_height(&line, phi, top).unwrap(), orthometric_height(&line), dynamic_height(&line)];
            let spread = hs.iter().copied().fold(f64::MIN, f64::max) - hs.iter().copied().fold(f64::MAX, f64::min);
            prop_assert!(spread < 1e-3 * top, "{hs:?}");
        }
    }
}
