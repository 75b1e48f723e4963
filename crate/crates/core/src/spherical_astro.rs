//! Spherical trigonometry on the unit sphere and sidereal-time arithmetic.

use std::f64::consts::PI;

use crate::angle::Angle;
use crate::error::{GeoError, Result};

const DEGENERACY: f64 = 1e-12;
/// Ratio of the sidereal to the solar day rate.
pub const SIDEREAL_RATIO: f64 = 366.2422 / 365.2422;

/// Sides are central angles, angles are dihedral; everything in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalTriangle {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub big_c: f64,
}

impl SphericalTriangle {
    /// A + B + C − π.
    pub fn excess(&self) -> f64 {
        self.big_a + self.big_b + self.big_c - PI
    }
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

fn check_open(x: f64) -> Result<()> {
    if x <= DEGENERACY || x >= PI - DEGENERACY || !x.is_finite() {
        Err(GeoError::DegenerateTriangle)
    } else {
        Ok(())
    }
}

/// Two sides and the included angle.
pub fn solve_triangle_sas(b: f64, c: f64, big_a: f64) -> Result<SphericalTriangle> {
    check_open(b)?;
    check_open(c)?;
    check_open(big_a)?;
    let a = clamp_unit(b.cos() * c.cos() + b.sin() * c.sin() * big_a.cos()).acos();
    check_open(a)?;
    // Cotangent formula written as atan2 so the quadrant is unambiguous.
    let big_b = (big_a.sin() * b.sin()).atan2(b.cos() * c.sin() - b.sin() * c.cos() * big_a.cos());
    let big_c = (big_a.sin() * c.sin()).atan2(c.cos() * b.sin() - c.sin() * b.cos() * big_a.cos());
    check_open(big_b)?;
    check_open(big_c)?;
    Ok(SphericalTriangle { a, b, c, big_a, big_b, big_c })
}

/// ε = area / R².
pub fn spherical_excess(area: f64, radius: f64) -> Result<f64> {
    if area < 0.0 || radius <= 0.0 {
        return Err(GeoError::Domain("area must be ≥ 0 and radius > 0".into()));
    }
    Ok(area / (radius * radius))
}

/// Signed closure A + B + C − π − ε.
pub fn triangle_closure(big_a: f64, big_b: f64, big_c: f64, eps: f64) -> f64 {
    big_a + big_b + big_c - PI - eps
}

/// Cassini-Soldner coordinates on the unit sphere relative to the meridian λ = 0:
/// `l` runs along the meridian to the foot of the perpendicular great circle,
/// `h` along that great circle to the point.
pub fn cassini_soldner_sphere(phi: f64, lam: f64) -> Result<(f64, f64)> {
    if phi.abs() >= PI / 2.0 {
        return Err(GeoError::Domain("latitude must be inside (−π/2, π/2)".into()));
    }
    let h = clamp_unit(phi.cos() * lam.sin()).asin();
    let l = phi.sin().atan2(phi.cos() * lam.cos());
    Ok((l, h))
}

pub fn cassini_soldner_sphere_inverse(l: f64, h: f64) -> (f64, f64) {
    let phi = clamp_unit(l.sin() * h.cos()).asin();
    let lam = h.sin().atan2(h.cos() * l.cos());
    (phi, lam)
}

fn wrap_day(a: Angle) -> Angle {
    a.normalized_positive()
}

/// Hour angle AH = HSL − α, in [0, 24h).
pub fn hour_angle(hsl: Angle, alpha: Angle) -> Angle {
    wrap_day(hsl - alpha)
}

/// Local sidereal time from the hour angle, inverse of [`hour_angle`].
pub fn hsl_from_hour_angle(ah: Angle, alpha: Angle) -> Angle {
    wrap_day(ah + alpha)
}

/// HSL = HSG + λ, longitude positive east.
pub fn hsl_from_greenwich(hsg: Angle, lam: Angle) -> Angle {
    wrap_day(hsg + lam)
}

/// Local sidereal time from universal time `tu` (hours) and the Greenwich
/// sidereal time at 0h UT.
pub fn sidereal_from_universal(tu_hours: f64, hsg0: Angle, lam: Angle) -> Result<Angle> {
    if !(0.0..24.0).contains(&tu_hours) {
        return Err(GeoError::Domain(format!("UT must lie in [0, 24) h, got {tu_hours}")));
    }
    Ok(wrap_day(hsg0 + Angle::hours(tu_hours * SIDEREAL_RATIO) + lam))
}
