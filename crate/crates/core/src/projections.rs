//! Conformal plane representations: tangent Lambert conic and UTM.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::coords::GeodeticCoord;
use crate::ellipsoid::{clarke1880_french, Ellipsoid};
use crate::error::{GeoError, Result};

/// Easting and northing in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlaneCoord {
    pub e: f64,
    pub n: f64,
}

impl PlaneCoord {
    pub fn new(e: f64, n: f64) -> Self {
        PlaneCoord { e, n }
    }

    pub fn distance(&self, other: &PlaneCoord) -> f64 {
        (other.e - self.e).hypot(other.n - self.n)
    }

    /// Grid bearing (gisement) towards `other`, clockwise from grid north.
    pub fn bearing(&self, other: &PlaneCoord) -> f64 {
        (other.e - self.e).atan2(other.n - self.n)
    }
}

/// Local axes in which the raw Lambert coordinates are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisConvention {
    /// x east, y north.
    #[default]
    Standard,
    /// x north along the central meridian, y west; E = false_e − y, N = false_n + x.
    Stt,
}

/// Tangent Lambert conic. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambertDef {
    pub ell: Ellipsoid,
    pub phi0: f64,
    pub lam0: f64,
    pub k0: f64,
    pub false_e: f64,
    pub false_n: f64,
    #[serde(default)]
    pub axis: AxisConvention,
}

impl LambertDef {
    pub fn new(ell: Ellipsoid, phi0: f64, lam0: f64, k0: f64, false_e: f64, false_n: f64) -> Result<Self> {
        let d = LambertDef { ell, phi0, lam0, k0, false_e, false_n, axis: AxisConvention::Standard };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi0.abs() > 0.0 && self.phi0.abs() < FRAC_PI_2) {
            return Err(GeoError::Domain("Lambert origin latitude must lie strictly between 0 and ±π/2".into()));
        }
        if !(self.k0 > 0.99 && self.k0 < 1.01) {
            return Err(GeoError::Domain(format!("Lambert scale factor {} outside (0.99, 1.01)", self.k0)));
        }
        Ok(())
    }

    pub fn with_axis(mut self, axis: AxisConvention) -> Self {
        self.axis = axis;
        self
    }

    /// Lambert Nord Tunisie on Clarke 1880 (French).
    pub fn nord_tunisie() -> Self {
        let g = PI / 200.0;
        LambertDef::new(clarke1880_french(), 40.0 * g, 11.0 * g, 0.999_625_544, 500_000.0, 300_000.0).unwrap()
    }

    /// Lambert Sud Tunisie on Clarke 1880 (French).
    pub fn sud_tunisie() -> Self {
        let g = PI / 200.0;
        LambertDef::new(clarke1880_french(), 37.0 * g, 11.0 * g, 0.999_625_769, 500_000.0, 300_000.0).unwrap()
    }

    /// Cone constant sin φ₀.
    pub fn n(&self) -> f64 {
        self.phi0.sin()
    }

    /// Image radius of the origin parallel, N₀ cot φ₀.
    pub fn r0(&self) -> f64 {
        self.ell.grande_normale(self.phi0) / self.phi0.tan()
    }

    pub fn l0(&self) -> f64 {
        self.ell.isometric_latitude(self.phi0).expect("origin latitude validated")
    }

    fn radius(&self, phi: f64) -> Result<f64> {
        let l = self.ell.isometric_latitude(phi)?;
        Ok(self.r0() * (-self.n() * (l - self.l0())).exp())
    }
}

/// Raw scaled coordinates in the definition's own axis convention, before offsets.
pub fn lambert_local(d: &LambertDef, g: &GeodeticCoord) -> Result<(f64, f64)> {
    let r = d.radius(g.phi)?;
    let omega = (g.lam - d.lam0) * d.n();
    let (s, c) = omega.sin_cos();
    let (east, north) = (d.k0 * r * s, d.k0 * (d.r0() - r * c));
    Ok(match d.axis {
        AxisConvention::Standard => (east, north),
        AxisConvention::Stt => (north, -east),
    })
}

pub fn lambert_forward(d: &LambertDef, g: &GeodeticCoord) -> Result<PlaneCoord> {
    let (x, y) = lambert_local(d, g)?;
    Ok(match d.axis {
        AxisConvention::Standard => PlaneCoord::new(d.false_e + x, d.false_n + y),
        AxisConvention::Stt => PlaneCoord::new(d.false_e - y, d.false_n + x),
    })
}

pub fn lambert_inverse(d: &LambertDef, p: &PlaneCoord) -> Result<GeodeticCoord> {
    let x = (p.e - d.false_e) / d.k0;
    let y = (p.n - d.false_n) / d.k0;
    let (n, r0) = (d.n(), d.r0());
    let sg = n.signum();
    let r = sg * x.hypot(r0 - y);
    if r.abs() < 1e-9 * r0.abs() {
        return Err(GeoError::ApexSingularity);
    }
    let omega = (sg * x).atan2(sg * (r0 - y));
    let lam = d.lam0 + omega / n;
    let l = d.l0() + (r0 / r).ln() / n;
    let phi = d.ell.latitude_from_isometric(l)?;
    Ok(GeodeticCoord::new(phi, lam, 0.0))
}

/// Linear scale k₀ sin φ₀ R(φ) / (N(φ) cos φ).
pub fn lambert_scale(d: &LambertDef, phi: f64) -> Result<f64> {
    Ok(d.k0 * d.n() * d.radius(phi)? / (d.ell.grande_normale(phi) * phi.cos()))
}

/// Quadratic approximation ε ≈ ℓ²/(2N₀ρ₀) of the alteration m − 1 for k₀ = 1,
/// with ℓ = ρ₀(φ − φ₀) the distance to the origin parallel.
pub fn lambert_alteration_approx(d: &LambertDef, phi: f64) -> f64 {
    let rho0 = d.ell.meridian_radius(d.phi0);
    let l = rho0 * (phi - d.phi0);
    l * l / (2.0 * d.ell.grande_normale(d.phi0) * rho0)
}

/// Meridian convergence γ = (λ − λ₀) sin φ₀.
pub fn lambert_convergence(d: &LambertDef, lam: f64) -> f64 {
    (lam - d.lam0) * d.n()
}

/// Arc-to-chord correction Dv in radians for the sight p1 → p2:
/// ½ (R₀ − R)ₗ/₃ Δx / (N₀ρ₀), with R taken one third of the way from p1.
pub fn lambert_arc_to_chord(d: &LambertDef, p1: &GeodeticCoord, p2: &GeodeticCoord) -> Result<f64> {
    let (r1, r2) = (d.radius(p1.phi)?, d.radius(p2.phi)?);
    let r_third = r1 + (r2 - r1) / 3.0;
    let std = LambertDef { axis: AxisConvention::Standard, ..d.clone() };
    let dx = lambert_forward(&std, p2)?.e - lambert_forward(&std, p1)?.e;
    let n0rho0 = d.ell.grande_normale(d.phi0) * d.ell.meridian_radius(d.phi0);
    Ok(0.5 * (d.r0() - r_third) * dx / n0rho0)
}

/// Grid bearing of the chord from the geodetic azimuth: G = Az − γ + Dv.
pub fn gisement(az: f64, gamma: f64, dv: f64) -> f64 {
    az - gamma + dv
}

/// Transverse Mercator zone. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtmDef {
    pub ell: Ellipsoid,
    pub lam0: f64,
    pub k0: f64,
    pub false_e: f64,
    pub false_n: f64,
}

/// Largest |λ − λ₀| accepted by the series.
pub const UTM_MAX_OFFSET_DEG: f64 = 3.5;

impl UtmDef {
    pub fn zone(ell: Ellipsoid, zone: u8, south: bool) -> Result<Self> {
        if !(1..=60).contains(&zone) {
            return Err(GeoError::Domain(format!("UTM zone must be in 1..=60, got {zone}")));
        }
        Ok(UtmDef {
            ell,
            lam0: utm_central_meridian(zone),
            k0: 0.9996,
            false_e: 500_000.0,
            false_n: if south { 10_000_000.0 } else { 0.0 },
        })
    }

    pub fn central_meridian(ell: Ellipsoid, lam0: f64) -> Self {
        UtmDef { ell, lam0, k0: 0.9996, false_e: 500_000.0, false_n: 0.0 }
    }

    /// Zone 32 on Clarke 1880 (French).
    pub fn zone32_clarke() -> Self {
        UtmDef::zone(clarke1880_french(), 32, false).unwrap()
    }
}

pub fn utm_central_meridian(zone: u8) -> f64 {
    -PI + (zone as f64 - 0.5) * PI / 30.0
}

fn check_offset(lam_off: f64) -> Result<()> {
    if lam_off.abs() > UTM_MAX_OFFSET_DEG.to_radians() {
        Err(GeoError::OutOfZone)
    } else {
        Ok(())
    }
}

/// Derivatives dⁿβ/dLⁿ / n! at φ; index 0 is unused.
fn utm_forward_coefficients(ell: &Ellipsoid, phi: f64) -> [f64; 9] {
    let (s, c) = phi.sin_cos();
    let n = ell.grande_normale(phi);
    let t2 = (s / c).powi(2);
    let t4 = t2 * t2;
    let h2 = ell.ep2 * c * c;
    let h4 = h2 * h2;
    let (c3, c5, c7) = (c.powi(3), c.powi(5), c.powi(7));
    [
        0.0,
        n * c,
        -n * c * s / 2.0,
        -n * c3 * (1.0 + h2 - t2) / 6.0,
        n * c3 * s * (5.0 - t2 + 9.0 * h2 + 4.0 * h4) / 24.0,
        n * c5 * (5.0 - 18.0 * t2 + t4 + 14.0 * h2 - 58.0 * h2 * t2 + 13.0 * h4) / 120.0,
        -n * c5 * s * (61.0 - 58.0 * t2 + t4 + 270.0 * h2 - 330.0 * t2 * h2 + 200.0 * h4 - 232.0 * t2 * h4) / 720.0,
        -n * c7 * (61.0 - 479.0 * t2 + 179.0 * t4 - t4 * t2) / 5040.0,
        n * c7 * s * (1385.0 - 3111.0 * t2 + 543.0 * t4 - t4 * t2) / 40320.0,
    ]
}

/// Derivatives dⁿL/dβⁿ / n! at the footpoint latitude; index 0 is unused.
fn utm_inverse_coefficients(ell: &Ellipsoid, phi: f64) -> [f64; 8] {
    let (s, c) = phi.sin_cos();
    let n = ell.grande_normale(phi);
    let t = s / c;
    let t2 = t * t;
    let t4 = t2 * t2;
    let h2 = ell.ep2 * c * c;
    let h4 = h2 * h2;
    [
        0.0,
        1.0 / (n * c),
        t / (2.0 * n.powi(2) * c),
        (1.0 + 2.0 * t2 + h2) / (6.0 * n.powi(3) * c),
        t * (5.0 + 6.0 * t2 + h2 - 4.0 * h4) / (24.0 * n.powi(4) * c),
        (5.0 + 28.0 * t2 + 6.0 * h2 + 24.0 * t4 + 8.0 * h2 * t2) / (120.0 * n.powi(5) * c),
        t * (61.0 + 180.0 * t2 + 46.0 * h2 + 120.0 * t4 + 48.0 * h2 * t2) / (720.0 * n.powi(6) * c),
        (61.0 + 662.0 * t2 + 1320.0 * t4 + 720.0 * t4 * t2) / (5040.0 * n.powi(7) * c),
    ]
}

pub fn utm_forward(d: &UtmDef, g: &GeodeticCoord) -> Result<PlaneCoord> {
    let l = crate::angle::Angle(g.lam - d.lam0).normalized_signed().radians();
    check_offset(l)?;
    let a = utm_forward_coefficients(&d.ell, g.phi);
    let l2 = l * l;
    let x = l * (a[1] - l2 * (a[3] - l2 * (a[5] - l2 * a[7])));
    let y = d.ell.meridian_arc(g.phi) - l2 * (a[2] - l2 * (a[4] - l2 * (a[6] - l2 * a[8])));
    Ok(PlaneCoord::new(d.k0 * x + d.false_e, d.k0 * y + d.false_n))
}

pub fn utm_inverse(d: &UtmDef, p: &PlaneCoord) -> Result<GeodeticCoord> {
    let x = (p.e - d.false_e) / d.k0;
    let y = (p.n - d.false_n) / d.k0;
    let phi_f = d.ell.footpoint_latitude(y)?;
    let b = utm_inverse_coefficients(&d.ell, phi_f);
    let x2 = x * x;
    let dlam = x * (b[1] - x2 * (b[3] - x2 * (b[5] - x2 * b[7])));
    check_offset(dlam)?;
    let l = d.ell.isometric_latitude(phi_f)? - x2 * (b[2] - x2 * (b[4] - x2 * b[6]));
    let phi = d.ell.latitude_from_isometric(l)?;
    Ok(GeodeticCoord::new(phi, d.lam0 + dlam, 0.0))
}

/// m′ = k √(1 + (λ−λ₀)² (1 + e′² cos²φ) cos²φ).
pub fn utm_scale(d: &UtmDef, g: &GeodeticCoord) -> f64 {
    let l = g.lam - d.lam0;
    let c2 = g.phi.cos().powi(2);
    d.k0 * (1.0 + l * l * (1.0 + d.ell.ep2 * c2) * c2).sqrt()
}

/// tan γ = (λ − λ₀) sin φ.
pub fn utm_convergence(d: &UtmDef, g: &GeodeticCoord) -> f64 {
    ((g.lam - d.lam0) * g.phi.sin()).atan()
}

/// Three-coefficient transverse Mercator without scale factor or false easting:
/// X = a₁Λ + a₃Λ³, Y = g(φ) + a₂Λ² with g(φ) = a(1−e²)(1.0051353 φ − 0.0025731 sin 2φ).
/// The meridian-arc coefficients are the ones printed for Clarke 1880.
pub fn utm_truncated_forward(ell: &Ellipsoid, lam0: f64, g: &GeodeticCoord) -> PlaneCoord {
    let l = g.lam - lam0;
    let (s, c) = g.phi.sin_cos();
    let a1 = ell.grande_normale(g.phi) * c;
    let a2 = a1 / 2.0 * s;
    let a3 = a1 * c * c / 6.0 * (1.0 - (s / c).powi(2) + ell.ep2 * c * c);
    let arc = ell.a * (1.0 - ell.e2) * (1.005_135_3 * g.phi - 0.002_573_1 * (2.0 * g.phi).sin());
    PlaneCoord::new(a1 * l + a3 * l.powi(3), arc + a2 * l * l)
}

/// Any plane representation this module provides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Projection {
    Lambert(LambertDef),
    Utm(UtmDef),
}

/// Names accepted by [`Projection::by_name`], besides `utm:<zone>[s]`.
pub const PRESET_NAMES: [&str; 3] = ["lambert-nord-tn", "lambert-sud-tn", "utm:<zone>[s]"];

impl Projection {
    /// Presets: `lambert-nord-tn`, `lambert-sud-tn`, `utm:<zone>` (append `s` for the southern hemisphere).
    pub fn by_name(name: &str, ell: Option<Ellipsoid>) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let mut p = match lower.as_str() {
            "lambert-nord-tn" => Projection::Lambert(LambertDef::nord_tunisie()),
            "lambert-sud-tn" => Projection::Lambert(LambertDef::sud_tunisie()),
            other => {
                let Some(zone) = other.strip_prefix("utm:") else {
                    return Err(GeoError::Parse(format!("unknown projection '{name}'")));
                };
                let (digits, south) = match zone.strip_suffix('s') {
                    Some(z) => (z, true),
                    None => (zone.strip_suffix('n').unwrap_or(zone), false),
                };
                let z: u8 = digits.parse().map_err(|_| GeoError::Parse(format!("bad UTM zone in '{name}'")))?;
                Projection::Utm(UtmDef::zone(clarke1880_french(), z, south)?)
            }
        };
        if let Some(e) = ell {
            match &mut p {
                Projection::Lambert(d) => d.ell = e,
                Projection::Utm(d) => d.ell = e,
            }
        }
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Projection = serde_json::from_str(text).map_err(|e| GeoError::Parse(e.to_string()))?;
        if let Projection::Lambert(d) = &p {
            d.validate()?;
        }
        Ok(p)
    }

    pub fn ellipsoid(&self) -> &Ellipsoid {
        match self {
            Projection::Lambert(d) => &d.ell,
            Projection::Utm(d) => &d.ell,
        }
    }

    pub fn forward(&self, g: &GeodeticCoord) -> Result<PlaneCoord> {
        match self {
            Projection::Lambert(d) => lambert_forward(d, g),
            Projection::Utm(d) => utm_forward(d, g),
        }
    }

    pub fn inverse(&self, p: &PlaneCoord) -> Result<GeodeticCoord> {
        match self {
            Projection::Lambert(d) => lambert_inverse(d, p),
            Projection::Utm(d) => utm_inverse(d, p),
        }
    }

    pub fn scale(&self, g: &GeodeticCoord) -> Result<f64> {
        match self {
            Projection::Lambert(d) => lambert_scale(d, g.phi),
            Projection::Utm(d) => Ok(utm_scale(d, g)),
        }
    }

    pub fn convergence(&self, g: &GeodeticCoord) -> f64 {
        match self {
            Projection::Lambert(d) => lambert_convergence(d, g.lam),
            Projection::Utm(d) => utm_convergence(d, g),
        }
    }
}

/// Default step for [`tissot_moduli`], radians.
pub const TISSOT_STEP: f64 = 1e-6;

/// Central-difference scale along the meridian and along the parallel through `g`.
pub fn tissot_moduli<F>(ell: &Ellipsoid, project: F, g: &GeodeticCoord, h: f64) -> Result<(f64, f64)>
where
    F: Fn(&GeodeticCoord) -> Result<PlaneCoord>,
{
    let at = |dphi: f64, dlam: f64| project(&GeodeticCoord::new(g.phi + dphi, g.lam + dlam, 0.0));
    let m_meridian = at(h, 0.0)?.distance(&at(-h, 0.0)?) / (2.0 * h * ell.meridian_radius(g.phi));
    let m_parallel = at(0.0, h)?.distance(&at(0.0, -h)?) / (2.0 * h * ell.parallel_radius(g.phi));
    Ok((m_meridian, m_parallel))
}
