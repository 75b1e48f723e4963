//! Geodetic and Cartesian coordinates, local frames, vertical deflection and Laplace azimuths.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::ellipsoid::Ellipsoid;
use crate::error::{GeoError, Result};

/// Latitude, longitude (east positive) in radians and ellipsoidal height in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeodeticCoord {
    pub phi: f64,
    pub lam: f64,
    pub he: f64,
}

impl GeodeticCoord {
    pub fn new(phi: f64, lam: f64, he: f64) -> Self {
        GeodeticCoord { phi, lam, he }
    }
}

/// Earth-centred Cartesian coordinates in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefCoord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefCoord {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        EcefCoord { x, y, z }
    }
    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
    pub fn from_vector(v: &Vector3<f64>) -> Self {
        EcefCoord { x: v.x, y: v.y, z: v.z }
    }
}

pub fn geodetic_to_ecef(ell: &Ellipsoid, g: &GeodeticCoord) -> EcefCoord {
    let n = ell.grande_normale(g.phi);
    let (sp, cp) = g.phi.sin_cos();
    let (sl, cl) = g.lam.sin_cos();
    EcefCoord {
        x: (n + g.he) * cp * cl,
        y: (n + g.he) * cp * sl,
        z: (n * (1.0 - ell.e2) + g.he) * sp,
    }
}

/// Fixed-point latitude iteration on Z′ = Z + N e² sin φ.
pub fn ecef_to_geodetic(ell: &Ellipsoid, p: &EcefCoord) -> Result<GeodeticCoord> {
    let (geo, _) = ecef_to_geodetic_counted(ell, p)?;
    Ok(geo)
}

/// As [`ecef_to_geodetic`], also returning the number of iterations used.
pub fn ecef_to_geodetic_counted(ell: &Ellipsoid, p: &EcefCoord) -> Result<(GeodeticCoord, usize)> {
    let r = p.x.hypot(p.y);
    if r < 1.0 {
        return Err(GeoError::PolarAxis);
    }
    let lam = p.y.atan2(p.x);
    let mut phi = p.z.atan2(r);
    for it in 1..=50 {
        let zp = p.z + ell.grande_normale(phi) * ell.e2 * phi.sin();
        let next = zp.atan2(r);
        let done = (next - phi).abs() < 1e-12;
        phi = next;
        if done {
            let n = ell.grande_normale(phi);
            let he = if phi.abs() > 89.9f64.to_radians() {
                p.z / phi.sin() - n * (1.0 - ell.e2)
            } else {
                r / phi.cos() - n
            };
            return Ok((GeodeticCoord { phi, lam, he }, it));
        }
    }
    Err(GeoError::NonConvergence(50))
}

/// Topocentric frame whose rows are the east, north and up unit vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: GeodeticCoord,
    pub rotation: Matrix3<f64>,
}

pub fn local_frame(origin: &GeodeticCoord) -> LocalFrame {
    let (sp, cp) = origin.phi.sin_cos();
    let (sl, cl) = origin.lam.sin_cos();
    #[rustfmt::skip]
    let rotation = Matrix3::new(
        -sl,      cl,      0.0,
        -sp * cl, -sp * sl, cp,
        cp * cl,  cp * sl,  sp,
    );
    LocalFrame { origin: *origin, rotation }
}

impl LocalFrame {
    /// (east, north, up) components of an ECEF difference vector.
    pub fn ecef_vector_to_local(&self, d: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * d
    }

    pub fn local_vector_to_ecef(&self, w: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * w
    }
}

/// Vertical deflection (ζ, η) = (Φ − φ, (Λ − λ) cos φ).
pub fn deviation_of_vertical(astro_phi: f64, astro_lam: f64, phi: f64, lam: f64) -> (f64, f64) {
    (astro_phi - phi, (astro_lam - lam) * phi.cos())
}

/// Laplace equation Az_g = Az_a − (λ_g − λ_a) sin φ.
pub fn laplace_azimuth(aza: f64, lam_g: f64, lam_a: f64, phi: f64) -> f64 {
    aza - (lam_g - lam_a) * phi.sin()
}

/// The variant with the opposite sign, Az_g = Az_a + (λ_g − λ_a) sin φ.
pub fn laplace_azimuth_plus(aza: f64, lam_g: f64, lam_a: f64, phi: f64) -> f64 {
    aza + (lam_g - lam_a) * phi.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipsoid::grs80;
    use crate::Angle;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn axis_points() {
        let ell = grs80();
        let p = geodetic_to_ecef(&ell, &GeodeticCoord::new(0.0, 0.0, 0.0));
        assert_eq!((p.x, p.y, p.z), (ell.a, 0.0, 0.0));
        let pole = geodetic_to_ecef(&ell, &GeodeticCoord::new(FRAC_PI_2, 0.7, 0.0));
        assert!(pole.x.abs() < 1e-9 && pole.y.abs() < 1e-9);
        assert!((pole.z - ell.b).abs() < 1e-8);
        let g = ecef_to_geodetic(&ell, &EcefCoord::new(ell.a, 0.0, 0.0)).unwrap();
        assert!(g.phi.abs() < 1e-15 && g.lam == 0.0 && g.he.abs() < 1e-9);
    }

    #[test]
    fn printed_point_round_trip() {
        let ell = Ellipsoid::from_e2("problem", 6378137.0, 0.00669438).unwrap();
        let p = EcefCoord::new(4300244.860, 1062094.681, 4574775.629);
        let g = ecef_to_geodetic(&ell, &p).unwrap();
        // Bowring closed form evaluated separately.
        assert!((Angle(g.phi).to_grad() - 51.240_941_749).abs() < 5e-6);
        assert!((Angle(g.lam).to_grad() - 15.415_030_013).abs() < 5e-6);
        assert!((g.he - 715.181_998).abs() < 1e-3);
        let back = geodetic_to_ecef(&ell, &g);
        assert!((back.x - p.x).abs() < 1e-4);
        assert!((back.y - p.y).abs() < 1e-4);
        assert!((back.z - p.z).abs() < 1e-4);
    }

    #[test]
    fn polar_axis_rejected() {
        let ell = grs80();
        assert_eq!(ecef_to_geodetic(&ell, &EcefCoord::new(0.3, 0.2, 6.3e6)), Err(GeoError::PolarAxis));
    }

    #[test]
    fn few_iterations_near_surface() {
        let ell = grs80();
        for i in 0..50 {
            let phi = -1.5 + 3.0 * i as f64 / 49.0;
            let g = GeodeticCoord::new(phi, 0.3 * i as f64, 9000.0 - 400.0 * i as f64);
            let (_, its) = ecef_to_geodetic_counted(&ell, &geodetic_to_ecef(&ell, &g)).unwrap();
            assert!(its <= 6, "{its} iterations at φ = {phi}");
        }
    }

    #[test]
    fn near_pole_height() {
        let ell = grs80();
        let g = GeodeticCoord::new(89.95f64.to_radians(), 1.0, 1234.5);
        let back = ecef_to_geodetic(&ell, &geodetic_to_ecef(&ell, &g)).unwrap();
        assert!((back.he - g.he).abs() < 1e-6);
        assert!((back.phi - g.phi).abs() < 1e-12);
    }

    #[test]
    fn frame_at_origin() {
        let f = local_frame(&GeodeticCoord::new(0.0, 0.0, 0.0));
        let up = f.ecef_vector_to_local(&Vector3::new(1.0, 0.0, 0.0));
        let east = f.ecef_vector_to_local(&Vector3::new(0.0, 1.0, 0.0));
        let north = f.ecef_vector_to_local(&Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(up, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(east, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(north, Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn frame_is_orthonormal() {
        for i in 0..100 {
            let g = GeodeticCoord::new(-1.5 + 0.03 * i as f64, -3.1 + 0.062 * i as f64, 0.0);
            let f = local_frame(&g);
            let r = f.rotation;
            assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
            let jac = r.transpose();
            assert!((jac.try_inverse().unwrap() - jac.transpose()).norm() < 1e-12);
            let n = Vector3::new(g.phi.cos() * g.lam.cos(), g.phi.cos() * g.lam.sin(), g.phi.sin());
            let w = f.ecef_vector_to_local(&(3.0 * n));
            assert!((w - Vector3::new(0.0, 0.0, 3.0)).norm() < 1e-12);
            let d = Vector3::new(1.0, -2.0, 0.5);
            assert!((f.local_vector_to_ecef(&f.ecef_vector_to_local(&d)) - d).norm() < 1e-12);
        }
    }

    #[test]
    fn deflection_cases() {
        assert_eq!(deviation_of_vertical(0.7, 0.2, 0.7, 0.2), (0.0, 0.0));
        let g = |x: f64| Angle::grad(x).radians();
        let (zeta, eta) = deviation_of_vertical(g(41.45052), g(10.72574), g(41.44903), g(10.72453));
        assert!((Angle(zeta).to_dmgr() - 14.9).abs() < 1e-6);
        assert!((Angle(eta).to_dmgr() - 12.1 * g(41.44903).cos()).abs() < 1e-6);
        assert!(deviation_of_vertical(0.0, 0.1, 0.0, 0.0).1 > 0.0);
    }

    #[test]
    fn laplace_cases() {
        assert_eq!(laplace_azimuth(1.2, 0.3, 0.3, 0.8), 1.2);
        assert_eq!(laplace_azimuth(1.2, 0.31, 0.3, 0.0), 1.2);
        let g = |x: f64| Angle::grad(x).radians();
        let aza = g(89.68499);
        let plus = laplace_azimuth_plus(aza, g(10.72453), g(10.72574), g(41.44903));
        // 89.68499 + (−0.00121) sin(41.44903 gr).
        assert!((Angle(plus).to_grad() - 89.684_256_685).abs() < 1e-8);
        let minus = laplace_azimuth(aza, g(10.72453), g(10.72574), g(41.44903));
        assert!((Angle(minus).to_grad() - 89.685_723_315).abs() < 1e-8);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use crate::ellipsoid::{clarke1880_french, grs80};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    proptest! {
        #[test]
        fn ecef_round_trip(phi in -1.57f64..1.57, lam in -PI..PI, he in -10_000.0f64..10_000.0) {
            for ell in [grs80(), clarke1880_french()] {
                let g = GeodeticCoord::new(phi, lam, he);
                let (back, iters) = ecef_to_geodetic_counted(&ell, &geodetic_to_ecef(&ell, &g)).unwrap();
                prop_assert!(iters <= 6);
                prop_assert!((back.phi - phi).abs() < 1e-11);
                prop_assert!((back.lam - lam).abs() < 1e-11);
                prop_assert!((back.he - he).abs() < 1e-4);
            }
        }

        #[test]
        fn ecef_image_lies_on_its_normal(phi in -1.5f64..1.5, lam in -PI..PI, he in -10_000.0f64..50_000.0) {
            let ell = grs80();
            let p = geodetic_to_ecef(&ell, &GeodeticCoord::new(phi, lam, he));
            let n = ell.grande_normale(phi);
            let r = (n + he) * phi.cos();
            prop_assert!((p.x.hypot(p.y) - r).abs() < 1e-9);
            prop_assert!((p.z - (n * (1.0 - ell.e2) + he) * phi.sin()).abs() < 1e-9);
        }

        #[test]
        fn local_frame_is_orthogonal(phi in -1.57f64..1.57, lam in -PI..PI) {
            let f = local_frame(&GeodeticCoord::new(phi, lam, 0.0));
            let err = (f.rotation * f.rotation.transpose() - Matrix3::identity()).amax();
            prop_assert!(err < 1e-12);
        }
    }
}
