//! Reference ellipsoids and the latitude/arc functions built on them.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

/// Ellipsoid of revolution. Only `a` and `f` are defining; the rest is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipsoidSpec", into = "EllipsoidSpec")]
pub struct Ellipsoid {
    pub name: String,
    pub a: f64,
    pub f: f64,
    pub b: f64,
    /// First eccentricity squared.
    pub e2: f64,
    /// Second eccentricity squared.
    pub ep2: f64,
}

/// Serialized form of an ellipsoid: `{"name", "a", "inv_f"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    pub name: String,
    pub a: f64,
    pub inv_f: f64,
}

impl TryFrom<EllipsoidSpec> for Ellipsoid {
    type Error = GeoError;
    fn try_from(s: EllipsoidSpec) -> Result<Self> {
        Ellipsoid::from_inv_f(&s.name, s.a, s.inv_f)
    }
}

impl From<Ellipsoid> for EllipsoidSpec {
    fn from(e: Ellipsoid) -> Self {
        EllipsoidSpec { name: e.name.clone(), a: e.a, inv_f: 1.0 / e.f }
    }
}

impl Ellipsoid {
    pub fn new(name: &str, a: f64, f: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(GeoError::Domain(format!("semi-major axis must be positive, got {a}")));
        }
        if !(f > 0.0 && f < 1.0) {
            return Err(GeoError::Domain(format!("flattening must lie in (0, 1), got {f}")));
        }
        let e2 = f * (2.0 - f);
        Ok(Ellipsoid { name: name.to_string(), a, f, b: a * (1.0 - f), e2, ep2: e2 / (1.0 - e2) })
    }

    pub fn from_inv_f(name: &str, a: f64, inv_f: f64) -> Result<Self> {
        Ellipsoid::new(name, a, 1.0 / inv_f)
    }

    pub fn from_e2(name: &str, a: f64, e2: f64) -> Result<Self> {
        if !(e2 > 0.0 && e2 < 1.0) {
            return Err(GeoError::Domain(format!("e² must lie in (0, 1), got {e2}")));
        }
        Ellipsoid::new(name, a, 1.0 - (1.0 - e2).sqrt())
    }

    /// Near-spherical body used for limit checks; `f` may be tiny but not zero.
    pub fn sphere_like(a: f64, f: f64) -> Self {
        let e2 = f * (2.0 - f);
        Ellipsoid { name: "sphere".into(), a, f, b: a * (1.0 - f), e2, ep2: e2 / (1.0 - e2) }
    }

    pub fn e(&self) -> f64 {
        self.e2.sqrt()
    }

    fn w(&self, phi: f64) -> f64 {
        let s = phi.sin();
        (1.0 - self.e2 * s * s).sqrt()
    }

    /// Prime-vertical radius of curvature N.
    pub fn grande_normale(&self, phi: f64) -> f64 {
        self.a / self.w(phi)
    }

    /// Meridian radius of curvature ρ.
    pub fn meridian_radius(&self, phi: f64) -> f64 {
        let w = self.w(phi);
        self.a * (1.0 - self.e2) / (w * w * w)
    }

    /// Radius of the parallel, r = N cos φ.
    pub fn parallel_radius(&self, phi: f64) -> f64 {
        self.grande_normale(phi) * phi.cos()
    }

    /// Gaussian mean radius √(Nρ).
    pub fn gaussian_radius(&self, phi: f64) -> f64 {
        (self.grande_normale(phi) * self.meridian_radius(phi)).sqrt()
    }

    /// Reduced latitude ψ with tan ψ = (b/a) tan φ.
    pub fn parametric_latitude(&self, phi: f64) -> f64 {
        ((self.b / self.a) * phi.sin()).atan2(phi.cos())
    }

    /// Isometric latitude L.
    pub fn isometric_latitude(&self, phi: f64) -> Result<f64> {
        if !(phi.abs() < FRAC_PI_2) {
            return Err(GeoError::Domain(format!("isometric latitude undefined at φ = {phi}")));
        }
        let e = self.e();
        let es = e * phi.sin();
        Ok(mercator_latitude(phi) - 0.5 * e * ((1.0 + es) / (1.0 - es)).ln())
    }

    /// Latitude from isometric latitude by the fixed-point scheme on the
    /// Mercator term. Stops when successive latitudes differ by < 1e-12 rad.
    pub fn latitude_from_isometric(&self, l: f64) -> Result<f64> {
        if !l.is_finite() {
            return Err(GeoError::Domain("isometric latitude must be finite".into()));
        }
        let e = self.e();
        let mut phi = inverse_mercator_latitude(l);
        for _ in 0..50 {
            let es = e * phi.sin();
            let next = inverse_mercator_latitude(l + 0.5 * e * ((1.0 + es) / (1.0 - es)).ln());
            if (next - phi).abs() < 1e-12 {
                return Ok(next);
            }
            phi = next;
        }
        Err(GeoError::NonConvergence(50))
    }

    /// Meridian arc length from the equator, series through e¹².
    pub fn meridian_arc(&self, phi: f64) -> f64 {
        let c = meridian_arc_coefficients(self.e2);
        let mut sum = c[0] * phi;
        for (k, ck) in c.iter().enumerate().skip(1) {
            sum += ck * (2.0 * k as f64 * phi).sin();
        }
        self.a * (1.0 - self.e2) * sum
    }

    /// Latitude whose meridian arc equals `beta`, by Newton with dβ/dφ = ρ.
    pub fn footpoint_latitude(&self, beta: f64) -> Result<f64> {
        let c0 = meridian_arc_coefficients(self.e2)[0];
        let mut phi = beta / (self.a * (1.0 - self.e2) * c0);
        for _ in 0..50 {
            let step = (self.meridian_arc(phi) - beta) / self.meridian_radius(phi);
            phi -= step;
            if step.abs() < 1e-14 {
                return Ok(phi);
            }
        }
        Err(GeoError::NonConvergence(50))
    }
}

/// ln tan(π/4 + φ/2), the spherical (Mercator) isometric latitude.
pub fn mercator_latitude(phi: f64) -> f64 {
    phi.tan().asinh()
}

/// Inverse of [`mercator_latitude`].
pub fn inverse_mercator_latitude(l: f64) -> f64 {
    l.sinh().atan()
}

/// Coefficients C₀, C₂, …, C₁₂ of the meridian-arc series, indexed 0..=6.
pub fn meridian_arc_coefficients(e2: f64) -> [f64; 7] {
    let e4 = e2 * e2;
    let e6 = e4 * e2;
    let e8 = e6 * e2;
    let e10 = e8 * e2;
    let e12 = e10 * e2;
    [
        1.0 + 3.0 / 4.0 * e2 + 45.0 / 64.0 * e4 + 175.0 / 256.0 * e6 + 11025.0 / 16384.0 * e8
            + 43659.0 / 65536.0 * e10
            + 693693.0 / 1048576.0 * e12,
        -3.0 / 8.0 * e2 - 15.0 / 32.0 * e4 - 525.0 / 1024.0 * e6 - 2205.0 / 4096.0 * e8
            - 72765.0 / 131072.0 * e10
            - 297297.0 / 524288.0 * e12,
        15.0 / 256.0 * e4 + 105.0 / 1024.0 * e6 + 2205.0 / 16384.0 * e8 + 10395.0 / 65536.0 * e10
            + 1486485.0 / 8388608.0 * e12,
        -35.0 / 3072.0 * e6 - 315.0 / 12288.0 * e8 - 31185.0 / 786432.0 * e10
            - 165165.0 / 3145728.0 * e12,
        315.0 / 131072.0 * e8 + 3465.0 / 524288.0 * e10 + 99099.0 / 8388608.0 * e12,
        -693.0 / 1310720.0 * e10 - 9009.0 / 5242880.0 * e12,
        1001.0 / 8388608.0 * e12,
    ]
}

/// One row of the reference ellipsoid table. Every row is built from (a, 1/f);
/// the printed b and e² are kept only for checks.
#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub a: f64,
    pub inv_f: f64,
    pub printed_b: f64,
    pub printed_e2: f64,
}

pub const TABLE: &[TableRow] = &[
    TableRow {
        name: "Clarke 1880 French",
        aliases: &["clarke1880f", "clarke-french", "clarke1880"],
        a: 6378249.200,
        inv_f: 293.46602,
        printed_b: 6356515.000,
        printed_e2: 0.0068034877,
    },
    TableRow {
        name: "Clarke 1880 English",
        aliases: &["clarke1880e", "clarke-english"],
        a: 6378249.145,
        inv_f: 293.465,
        printed_b: 6356514.8696,
        printed_e2: 0.00680351128,
    },
    TableRow {
        name: "Hayford 1909",
        aliases: &["hayford", "international1924", "intl1924"],
        a: 6378388.000,
        inv_f: 297.0,
        printed_b: 6356911.940,
        printed_e2: 0.0067226700,
    },
    TableRow {
        name: "Krassovsky",
        aliases: &["krassovsky", "krasovsky"],
        a: 6378245.000,
        inv_f: 298.3,
        printed_b: 6356863.0188,
        printed_e2: 0.00669342162,
    },
    TableRow {
        name: "GRS67",
        aliases: &["grs67"],
        a: 6378160.000,
        inv_f: 298.24717,
        printed_b: 6356774.516,
        printed_e2: 0.0066946053,
    },
    TableRow {
        name: "NWL 8",
        aliases: &["nwl8"],
        a: 6378145.000,
        inv_f: 298.25,
        printed_b: 6356759.770,
        printed_e2: 0.0066945419,
    },
    TableRow {
        name: "WGS72",
        aliases: &["wgs72"],
        a: 6378135.000,
        inv_f: 298.26,
        printed_b: 6356750.520,
        printed_e2: 0.0066943178,
    },
    TableRow {
        name: "IAG 1975",
        aliases: &["iag1975", "aig1975"],
        a: 6378140.000,
        inv_f: 298.257,
        printed_b: 6356755.288,
        printed_e2: 0.0066943850,
    },
    TableRow {
        name: "APL Navigation",
        aliases: &["apl"],
        a: 6378144.000,
        inv_f: 298.23,
        printed_b: 6356757.339,
        printed_e2: 0.0066949901,
    },
    TableRow {
        name: "GRS80",
        aliases: &["grs80"],
        a: 6378137.000,
        inv_f: 298.257222101,
        printed_b: 6356752.3141,
        printed_e2: 0.0066943800229,
    },
    TableRow {
        name: "WGS84",
        aliases: &["wgs84"],
        a: 6378137.000,
        inv_f: 298.257223563,
        printed_b: 6356752.3142,
        printed_e2: 0.0066943799,
    },
];

/// Named presets from the ellipsoid table.
pub struct EllipsoidRegistry;

impl EllipsoidRegistry {
    pub fn all() -> Vec<Ellipsoid> {
        TABLE.iter().map(Self::build).collect()
    }

    fn build(row: &TableRow) -> Ellipsoid {
        Ellipsoid::from_inv_f(row.name, row.a, row.inv_f).expect("table rows are valid")
    }

    /// Case-insensitive lookup by name or alias.
    pub fn get(name: &str) -> Result<Ellipsoid> {
        let key = name.trim().to_ascii_lowercase();
        TABLE
            .iter()
            .find(|r| r.name.to_ascii_lowercase() == key || r.aliases.contains(&key.as_str()))
            .map(Self::build)
            .ok_or_else(|| GeoError::Parse(format!("unknown ellipsoid '{name}'")))
    }

    pub fn to_json() -> String {
        let specs: Vec<EllipsoidSpec> = Self::all().into_iter().map(Into::into).collect();
        serde_json::to_string_pretty(&specs).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Vec<Ellipsoid>> {
        serde_json::from_str(text).map_err(|e| GeoError::Parse(e.to_string()))
    }
}

pub fn clarke1880_french() -> Ellipsoid {
    EllipsoidRegistry::get("clarke1880f").expect("preset exists")
}

pub fn grs80() -> Ellipsoid {
    EllipsoidRegistry::get("grs80").expect("preset exists")
}

pub fn wgs84() -> Ellipsoid {
    EllipsoidRegistry::get("wgs84").expect("preset exists")
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn any_ellipsoid() -> impl Strategy<Value = Ellipsoid> {
        prop::sample::select(EllipsoidRegistry::all())
    }

    proptest! {
        #[test]
        fn normale_exceeds_meridian_radius(ell in any_ellipsoid(), phi in -1.55f64..1.55) {
            prop_assert!(ell.grande_normale(phi) > ell.meridian_radius(phi));
            let n = ell.grande_normale(FRAC_PI_2);
            prop_assert!((n - ell.meridian_radius(FRAC_PI_2)).abs() < 1e-15 * n);
        }

        #[test]
        fn meridian_arc_increasing_and_odd(ell in any_ellipsoid(), p1 in -1.5f64..1.5, dp in 1e-6f64..0.5) {
            prop_assert!(ell.meridian_arc(p1 + dp) > ell.meridian_arc(p1));
            prop_assert!((ell.meridian_arc(-p1) + ell.meridian_arc(p1)).abs() < 1e-8);
        }

        #[test]
        fn meridian_arc_slope_is_rho(ell in any_ellipsoid(), phi in -1.4f64..1.4) {
            let h = 1e-5;
            let slope = (ell.meridian_arc(phi + h) - ell.meridian_arc(phi - h)) / (2.0 * h);
            let rho = ell.meridian_radius(phi);
            prop_assert!((slope - rho).abs() < 1e-4 * rho);
        }

        #[test]
        fn isometric_latitude_increasing_and_odd(ell in any_ellipsoid(), p1 in -1.5f64..1.5, dp in 1e-6f64..0.05) {
            let l1 = ell.isometric_latitude(p1).unwrap();
            prop_assert!(ell.isometric_latitude(p1 + dp).unwrap() > l1);
            prop_assert!((ell.isometric_latitude(-p1).unwrap() + l1).abs() < 1e-13 * l1.abs().max(1.0));
        }
    }
}
