//! Keplerian two-body motion: anomalies, positions in the orbital plane and
//! in the celestial and terrestrial frames.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::coords::EcefCoord;
use crate::error::{GeoError, Result};

/// Geocentric gravitational constant, m³/s².
pub const MU_EARTH: f64 = 3.986005e14;
/// Sidereal rate: sidereal hours per UT hour.
pub const SIDEREAL_RATE: f64 = 1.002737909;

const KEPLER_TOL: f64 = 1e-13;
const KEPLER_MAX_ITER: usize = 50;

fn default_mu() -> f64 {
    MU_EARTH
}

/// Keplerian elements; angles in radians, t0 is the perigee epoch in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    #[serde(rename = "Omega")]
    pub raan: f64,
    #[serde(rename = "omega")]
    pub argp: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
}

impl OrbitalElements {
    pub fn new(a: f64, e: f64, i: f64, raan: f64, argp: f64, t0: f64) -> Result<Self> {
        let el = OrbitalElements { a, e, i, raan, argp, t0, mu: MU_EARTH };
        el.validate()?;
        Ok(el)
    }

    /// Ellipse through perigee and apogee distances from the centre.
    pub fn from_apsides(r_perigee: f64, r_apogee: f64) -> Result<Self> {
        if !(r_perigee > 0.0) || r_apogee < r_perigee {
            return Err(GeoError::Domain("need 0 < r_perigee ≤ r_apogee".into()));
        }
        let a = 0.5 * (r_perigee + r_apogee);
        Self::new(a, (r_apogee - r_perigee) / (r_apogee + r_perigee), 0.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(GeoError::Domain("semi-major axis must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(GeoError::Domain("eccentricity must lie in [0, 1)".into()));
        }
        if !(0.0..=PI).contains(&self.i) {
            return Err(GeoError::Domain("inclination must lie in [0, π]".into()));
        }
        if !(self.mu > 0.0) {
            return Err(GeoError::Domain("μ must be positive".into()));
        }
        Ok(())
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn b(&self) -> f64 {
        self.a * (1.0 - self.e * self.e).sqrt()
    }

    /// Semi-latus rectum.
    pub fn p(&self) -> f64 {
        self.a * (1.0 - self.e * self.e)
    }

    pub fn perigee_distance(&self) -> f64 {
        self.a * (1.0 - self.e)
    }

    pub fn apogee_distance(&self) -> f64 {
        self.a * (1.0 + self.e)
    }

    /// Columns P and Q of the orbital-plane to celestial rotation.
    pub fn orientation(&self) -> Matrix3<f64> {
        rotation_z(self.raan) * rotation_x(self.i) * rotation_z(self.argp)
    }
}

/// Counter-clockwise rotation by `t` about Z.
fn rotation_z(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rotation_x(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn mean_motion(el: &OrbitalElements) -> f64 {
    (el.mu / el.a.powi(3)).sqrt()
}

pub fn period(el: &OrbitalElements) -> f64 {
    TAU / mean_motion(el)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnomalySet {
    pub m: f64,
    pub e: f64,
    pub nu: f64,
}

impl AnomalySet {
    pub fn at(el: &OrbitalElements, t: f64) -> Result<Self> {
        let m = mean_motion(el) * (t - el.t0);
        let e = solve_kepler(m, el.e)?;
        Ok(AnomalySet { m, e, nu: true_anomaly(e, el.e) })
    }
}

/// Eccentric anomaly from the mean anomaly. Newton corrections from
/// E₁ = M + e sin M, with bisection on [M − e, M + e] when a step leaves
/// the bracket or stalls.
pub fn solve_kepler(m: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) || !m.is_finite() {
        return Err(GeoError::Domain("Kepler equation needs 0 ≤ e < 1 and finite M".into()));
    }
    let turns = (m / TAU).round();
    let mr = m - turns * TAU;
    let f = |x: f64| x - e * x.sin() - mr;
    let (mut lo, mut hi) = (mr - e, mr + e);
    let mut x = mr + e * mr.sin();
    let mut done = false;
    for _ in 0..KEPLER_MAX_ITER {
        let r = f(x);
        if r.abs() < KEPLER_TOL {
            done = true;
            break;
        }
        if r > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let next = x - r / (1.0 - e * x.cos());
        if !(next > lo && next < hi) {
            break;
        }
        x = next;
    }
    if !done {
        for _ in 0..200 {
            x = 0.5 * (lo + hi);
            let r = f(x);
            if r.abs() < KEPLER_TOL {
                done = true;
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
        }
    }
    if !done {
        return Err(GeoError::NonConvergence(KEPLER_MAX_ITER));
    }
    // One more correction takes E from the residual tolerance to roundoff.
    let polished = x - f(x) / (1.0 - e * x.cos());
    if f(polished).abs() <= f(x).abs() {
        x = polished;
    }
    Ok(x + turns * TAU)
}

/// True anomaly in the half-plane of E.
pub fn true_anomaly(ecc_anomaly: f64, e: f64) -> f64 {
    let nu = ((1.0 - e * e).sqrt() * ecc_anomaly.sin()).atan2(ecc_anomaly.cos() - e);
    // Keep the same number of revolutions as E.
    let turns = ((ecc_anomaly - nu) / TAU).round();
    nu + turns * TAU
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanePosition {
    pub xi: f64,
    pub eta: f64,
    pub r: f64,
}

pub fn position_in_plane(el: &OrbitalElements, t: f64) -> Result<PlanePosition> {
    let ea = AnomalySet::at(el, t)?.e;
    Ok(plane_from_eccentric(el, ea))
}

fn plane_from_eccentric(el: &OrbitalElements, ea: f64) -> PlanePosition {
    let (s, c) = ea.sin_cos();
    PlanePosition {
        xi: el.a * (c - el.e),
        eta: el.a * (1.0 - el.e * el.e).sqrt() * s,
        r: el.a * (1.0 - el.e * c),
    }
}

/// Celestial (inertial) position at time t.
pub fn elements_to_eci(el: &OrbitalElements, t: f64) -> Result<Vector3<f64>> {
    let p = position_in_plane(el, t)?;
    Ok(el.orientation() * Vector3::new(p.xi, p.eta, 0.0))
}

/// Celestial position and velocity at time t.
pub fn state_eci(el: &OrbitalElements, t: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let ea = AnomalySet::at(el, t)?.e;
    let p = plane_from_eccentric(el, ea);
    let edot = mean_motion(el) / (1.0 - el.e * ea.cos());
    let vel = Vector3::new(-el.a * ea.sin() * edot, el.a * (1.0 - el.e * el.e).sqrt() * ea.cos() * edot, 0.0);
    let rot = el.orientation();
    Ok((rot * Vector3::new(p.xi, p.eta, 0.0), rot * vel))
}

/// Greenwich sidereal time (rad) from UT in hours and the sidereal time at
/// 0h UT in hours. UT1/UT2 corrections are the caller's.
pub fn gst_from_ut(ut_hours: f64, gst0_hours: f64) -> f64 {
    ((SIDEREAL_RATE * ut_hours + gst0_hours) * PI / 12.0).rem_euclid(TAU)
}

/// Rotation of a celestial vector into the terrestrial frame by the sidereal
/// time.
pub fn eci_to_ecef(x: &Vector3<f64>, gst: f64) -> EcefCoord {
    EcefCoord::from_vector(&(rotation_z(gst).transpose() * x))
}

/// Orbital speed at distance r.
pub fn vis_viva(el: &OrbitalElements, r: f64) -> Result<f64> {
    let slack = 1e-9 * el.a;
    if r < el.perigee_distance() - slack || r > el.apogee_distance() + slack {
        return Err(GeoError::Domain("distance outside the perigee–apogee range".into()));
    }
    Ok((el.mu * (2.0 / r - 1.0 / el.a)).max(0.0).sqrt())
}
