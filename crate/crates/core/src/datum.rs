//! Transformations between geodetic systems.
//!
//! Rotation convention: the small-angle matrix
//!
//! ```text
//!     [  1   rz  -ry ]
//! R = [ -rz   1   rx ]
//!     [  ry -rx   1  ]
//! ```
//!
//! with angles positive counterclockwise. Many other sources use the transpose;
//! parameter sets imported from elsewhere may need their rotations negated.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::coords::EcefCoord;
use crate::ellipsoid::Ellipsoid;
use crate::error::{GeoError, Result};
use crate::projections::PlaneCoord;
use crate::GeodeticCoord;

/// sin 1″, kept exactly rather than replaced by the arc value.
pub fn sin_one_arcsec() -> f64 {
    (1.0f64 / 3600.0).to_radians().sin()
}

const MAX_ROTATION_DEG: f64 = 3.0;
const MAX_SCALE: f64 = 1e-3;
const MAX_CONDITION: f64 = 1e12;

/// Seven-parameter similarity X₂ = T + (1 + m)·R·X₁.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BursaWolfParams {
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    /// Scale difference; 1e-6 is one ppm.
    #[serde(rename = "m")]
    pub m_scale: f64,
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl BursaWolfParams {
    pub fn validate(&self) -> Result<()> {
        let lim = MAX_ROTATION_DEG.to_radians();
        if [self.rx, self.ry, self.rz].iter().any(|r| !(r.abs() < lim)) {
            return Err(GeoError::Domain("rotations must stay below 3°".into()));
        }
        if !(self.m_scale.abs() < MAX_SCALE) {
            return Err(GeoError::Domain("scale difference must stay below 1e-3".into()));
        }
        if ![self.tx, self.ty, self.tz].iter().all(|t| t.is_finite()) {
            return Err(GeoError::Domain("translations must be finite".into()));
        }
        Ok(())
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.tx, self.ty, self.tz)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_matrix(self.rx, self.ry, self.rz)
    }

    /// (tx, ty, tz, m, rx, ry, rz).
    pub fn to_vector(self) -> [f64; 7] {
        [self.tx, self.ty, self.tz, self.m_scale, self.rx, self.ry, self.rz]
    }

    fn from_slice(u: &[f64]) -> Self {
        BursaWolfParams { tx: u[0], ty: u[1], tz: u[2], m_scale: u[3], rx: u[4], ry: u[5], rz: u[6] }
    }
}

pub fn rotation_matrix(rx: f64, ry: f64, rz: f64) -> Matrix3<f64> {
    #[rustfmt::skip]
    let r = Matrix3::new(
        1.0, rz,  -ry,
        -rz, 1.0, rx,
        ry,  -rx, 1.0,
    );
    r
}

/// Estimate together with its quality figures.
///
/// `residuals` is stacked per point (3n values for Burša-Wolf, 2n for Helmert)
/// and holds fitted minus observed target coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatumShiftResult<P> {
    pub params: P,
    pub residuals: Vec<f64>,
    pub s2: f64,
    pub cov: DMatrix<f64>,
}

pub fn bursa_wolf_apply(p: &BursaWolfParams, x1: &EcefCoord) -> EcefCoord {
    let v = p.translation() + (1.0 + p.m_scale) * (p.rotation() * x1.to_vector());
    EcefCoord::from_vector(&v)
}

/// The model linear in m and the rotations, as used by the estimator:
/// X₂ = X₁ + T + m·X₁ + (R − I)·X₁.
pub fn bursa_wolf_apply_linear(p: &BursaWolfParams, x1: &EcefCoord) -> EcefCoord {
    let x = x1.to_vector();
    let v = x + p.translation() + p.m_scale * x + (p.rotation() - Matrix3::identity()) * x;
    EcefCoord::from_vector(&v)
}

fn bursa_wolf_rows(x: &EcefCoord) -> [[f64; 7]; 3] {
    let (xx, y, z) = (x.x, x.y, x.z);
    [
        [1.0, 0.0, 0.0, xx, 0.0, -z, y],
        [0.0, 1.0, 0.0, y, z, 0.0, -xx],
        [0.0, 0.0, 1.0, z, -y, xx, 0.0],
    ]
}

/// Least-squares Burša-Wolf fit on common points, in input order.
pub fn bursa_wolf_estimate(pairs: &[(EcefCoord, EcefCoord)]) -> Result<DatumShiftResult<BursaWolfParams>> {
    let n = pairs.len();
    if 3 * n < 7 {
        return Err(GeoError::InsufficientPoints(n));
    }
    // Coordinates are centred on the first source point before forming the
    // normals so the scale and rotation columns stay well conditioned; the
    // translations are restored afterwards.
    let c = pairs[0].0.to_vector();
    let mut a = DMatrix::zeros(3 * n, 7);
    let mut l = DVector::zeros(3 * n);
    for (i, (p1, p2)) in pairs.iter().enumerate() {
        let rel = EcefCoord::from_vector(&(p1.to_vector() - c));
        for (k, row) in bursa_wolf_rows(&rel).iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a[(3 * i + k, j)] = *v;
            }
        }
        let d = p2.to_vector() - p1.to_vector();
        for k in 0..3 {
            l[3 * i + k] = d[k];
        }
    }
    let ata = a.transpose() * &a;
    let sv = ata.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    // Equilibrate before judging conditioning: the columns carry different units.
    let scale = DVector::from_iterator(7, (0..7).map(|j| ata[(j, j)].sqrt().max(f64::MIN_POSITIVE)));
    let eq = DMatrix::from_fn(7, 7, |i, j| ata[(i, j)] / (scale[i] * scale[j]));
    let esv = eq.singular_values();
    if smax <= 0.0 || smin <= 0.0 || esv.max() / esv.min() > MAX_CONDITION {
        return Err(GeoError::RankDeficient);
    }
    let inv = ata.clone().try_inverse().ok_or(GeoError::RankDeficient)?;
    let u_c = &inv * (a.transpose() * &l);
    let v = &a * &u_c - &l;
    let s2 = if 3 * n > 7 { v.dot(&v) / (3 * n - 7) as f64 } else { f64::NAN };
    // Map centred translations back: T = T_c − m·c − (R − I)·c.
    let mut params = BursaWolfParams::from_slice(u_c.as_slice());
    let shift = params.m_scale * c + (params.rotation() - Matrix3::identity()) * c;
    params.tx -= shift.x;
    params.ty -= shift.y;
    params.tz -= shift.z;
    // Covariance in the original parametrisation through the same linear map.
    let mut j = DMatrix::<f64>::identity(7, 7);
    let cols = [
        [c.x, c.y, c.z],  // ∂T/∂m
        [0.0, c.z, -c.y], // ∂T/∂rx
        [-c.z, 0.0, c.x], // ∂T/∂ry
        [c.y, -c.x, 0.0], // ∂T/∂rz
    ];
    for (k, col) in cols.iter().enumerate() {
        for r in 0..3 {
            j[(r, 3 + k)] = -col[r];
        }
    }
    let cov = &j * (s2 * inv) * j.transpose();
    Ok(DatumShiftResult { params, residuals: v.as_slice().to_vec(), s2, cov })
}

/// Closed-form Burša-Wolf determination: scale from distance ratios, rotations
/// from one point triple, translations averaged over all points.
pub fn bursa_wolf_direct(pairs: &[(EcefCoord, EcefCoord)]) -> Result<BursaWolfParams> {
    let n = pairs.len();
    if n < 3 {
        return Err(GeoError::InsufficientPoints(n));
    }
    let diff = |i: usize, j: usize, second: bool| {
        let (a, b) = if second { (pairs[i].1, pairs[j].1) } else { (pairs[i].0, pairs[j].0) };
        b.to_vector() - a.to_vector()
    };
    let mut ratio_sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let d1 = diff(i, j, false).norm();
            if d1 == 0.0 {
                return Err(GeoError::CoincidentPoints);
            }
            ratio_sum += diff(i, j, true).norm() / d1;
            count += 1;
        }
    }
    let m = ratio_sum / count as f64 - 1.0;

    let mut rot = None;
    'search: for p in 0..n {
        for q in p + 1..n {
            for r in q + 1..n {
                let a1 = diff(p, q, false);
                let b1 = diff(p, r, false);
                let c1 = diff(q, r, false);
                let a2 = diff(p, q, true);
                let b2 = diff(p, r, true);
                let c2 = diff(q, r, true);
                #[rustfmt::skip]
                let q_mat = Matrix3::new(
                    0.0,    -a1.z, a1.y,
                    b1.z,   0.0,   -b1.x,
                    -c1.y,  c1.x,  0.0,
                );
                let rhs = Vector3::new(
                    (1.0 - m) * a2.x - a1.x,
                    (1.0 - m) * b2.y - b1.y,
                    (1.0 - m) * c2.z - c1.z,
                );
                let norm = a1.norm() * b1.norm() * c1.norm();
                if q_mat.determinant().abs() <= 1e-9 * norm {
                    continue;
                }
                if let Some(inv) = q_mat.try_inverse() {
                    rot = Some(inv * rhs);
                    break 'search;
                }
            }
        }
    }
    let rot = rot.ok_or(GeoError::SingularRotationSystem)?;
    let r = rotation_matrix(rot.x, rot.y, rot.z);
    let mut t = Vector3::zeros();
    for (p1, p2) in pairs {
        t += p2.to_vector() - (1.0 + m) * (r * p1.to_vector());
    }
    t /= n as f64;
    Ok(BursaWolfParams { tx: t.x, ty: t.y, tz: t.z, m_scale: m, rx: rot.x, ry: rot.y, rz: rot.z })
}

/// Differences (ellipsoid 2 − ellipsoid 1) shared by both Molodensky forms.
fn ellipsoid_deltas(ell1: &Ellipsoid, ell2: &Ellipsoid) -> (f64, f64) {
    (ell2.a - ell1.a, ell2.f - ell1.f)
}

/// Standard Molodensky shift: (Δφ″, Δλ″, Δhe in metres).
pub fn molodensky_standard(ell1: &Ellipsoid, ell2: &Ellipsoid, g: &GeodeticCoord, t: Vector3<f64>) -> (f64, f64, f64) {
    let (da, df) = ellipsoid_deltas(ell1, ell2);
    let (a, f, b, e2) = (ell1.a, ell1.f, ell1.b, ell1.e2);
    let (sp, cp) = g.phi.sin_cos();
    let (sl, cl) = g.lam.sin_cos();
    let n = ell1.grande_normale(g.phi);
    let rho = ell1.meridian_radius(g.phi);
    let s1 = sin_one_arcsec();
    let dphi = (-t.x * sp * cl - t.y * sp * sl + t.z * cp
        + n * e2 * sp * cp * da / a
        + df * (rho * a / b + n * b / a) * sp * cp)
        / ((rho + g.he) * s1);
    let dlam = (-t.x * sl + t.y * cl) / ((n + g.he) * cp * s1);
    let dhe = t.x * cp * cl + t.y * cp * sl + t.z * sp - a * da / n + df * n * (1.0 - f) * sp * sp;
    (dphi, dlam, dhe)
}

/// Abridged Molodensky shift: (Δφ″, Δλ″, Δhe in metres).
pub fn molodensky_abridged(ell1: &Ellipsoid, ell2: &Ellipsoid, g: &GeodeticCoord, t: Vector3<f64>) -> (f64, f64, f64) {
    let (da, df) = ellipsoid_deltas(ell1, ell2);
    let (a, f) = (ell1.a, ell1.f);
    let (sp, cp) = g.phi.sin_cos();
    let (sl, cl) = g.lam.sin_cos();
    let n = ell1.grande_normale(g.phi);
    let rho = ell1.meridian_radius(g.phi);
    let s1 = sin_one_arcsec();
    let k = a * df + f * da;
    let dphi = (-t.x * sp * cl - t.y * sp * sl + t.z * cp + k * (2.0 * g.phi).sin()) / (rho * s1);
    let dlam = (-t.x * sl + t.y * cl) / (n * cp * s1);
    let dhe = t.x * cp * cl + t.y * cp * sl + t.z * sp - da + k * sp * sp;
    (dphi, dlam, dhe)
}

/// Plane similarity X₂ = tx + u·X − v·Y, Y₂ = ty + v·X + u·Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Helmert2DParams {
    pub tx: f64,
    pub ty: f64,
    pub u: f64,
    pub v: f64,
}

impl Helmert2DParams {
    pub fn new(tx: f64, ty: f64, u: f64, v: f64) -> Result<Self> {
        if !(u.hypot(v) > 0.0) {
            return Err(GeoError::Domain("u and v cannot both vanish".into()));
        }
        Ok(Helmert2DParams { tx, ty, u, v })
    }

    pub fn from_scale_rotation(tx: f64, ty: f64, s: f64, theta: f64) -> Result<Self> {
        Self::new(tx, ty, s * theta.cos(), s * theta.sin())
    }

    /// Reads a 2×2 matrix [[a, b], [c, d]]; `None` unless it has the similarity
    /// shape a = d, b = −c (within `tol`).
    pub fn from_matrix(tx: f64, ty: f64, m: [[f64; 2]; 2], tol: f64) -> Option<Self> {
        let similar = (m[0][0] - m[1][1]).abs() <= tol && (m[0][1] + m[1][0]).abs() <= tol;
        if !similar {
            return None;
        }
        Self::new(tx, ty, m[0][0], m[1][0]).ok()
    }

    pub fn scale(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn rotation(&self) -> f64 {
        self.v.atan2(self.u)
    }
}

pub fn helmert2d_apply(p: &Helmert2DParams, xy: &PlaneCoord) -> PlaneCoord {
    PlaneCoord::new(p.tx + p.u * xy.e - p.v * xy.n, p.ty + p.v * xy.e + p.u * xy.n)
}

/// Least-squares Helmert fit. `cov` is the covariance of (tx, ty, u, v) with
/// the translations expressed at the source centroid, where it is diagonal.
pub fn helmert2d_estimate(pairs: &[(PlaneCoord, PlaneCoord)]) -> Result<DatumShiftResult<Helmert2DParams>> {
    let n = pairs.len();
    if n < 2 {
        return Err(GeoError::InsufficientPoints(n));
    }
    let nf = n as f64;
    let (mut c1, mut c2) = ((0.0, 0.0), (0.0, 0.0));
    for (a, b) in pairs {
        c1 = (c1.0 + a.e, c1.1 + a.n);
        c2 = (c2.0 + b.e, c2.1 + b.n);
    }
    c1 = (c1.0 / nf, c1.1 / nf);
    c2 = (c2.0 / nf, c2.1 / nf);

    let mut a = DMatrix::zeros(2 * n, 4);
    let mut l = DVector::zeros(2 * n);
    for (i, (p1, p2)) in pairs.iter().enumerate() {
        let (x, y) = (p1.e - c1.0, p1.n - c1.1);
        let (xp, yp) = (p2.e - c2.0, p2.n - c2.1);
        a[(2 * i, 0)] = 1.0;
        a[(2 * i, 2)] = x;
        a[(2 * i, 3)] = -y;
        a[(2 * i + 1, 1)] = 1.0;
        a[(2 * i + 1, 2)] = y;
        a[(2 * i + 1, 3)] = x;
        l[2 * i] = xp;
        l[2 * i + 1] = yp;
    }
    let normal = a.transpose() * &a;
    let sum_d2 = normal[(2, 2)];
    if !(sum_d2 > 0.0) {
        return Err(GeoError::ZeroSpread);
    }
    // Centroid reduction leaves the normal matrix diagonal.
    let scale = normal.amax();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                debug_assert!(normal[(i, j)].abs() <= 1e-9 * scale, "normal matrix not diagonal");
            }
        }
    }
    let rhs = a.transpose() * &l;
    let diag = [nf, nf, sum_d2, sum_d2];
    let x = DVector::from_iterator(4, (0..4).map(|i| rhs[i] / diag[i]));
    let w = &a * &x - &l;
    let s2 = if n > 2 { w.dot(&w) / (2 * n - 4) as f64 } else { f64::NAN };
    let (u, v) = (x[2], x[3]);
    let tx = c2.0 + x[0] - (u * c1.0 - v * c1.1);
    let ty = c2.1 + x[1] - (v * c1.0 + u * c1.1);
    let params = Helmert2DParams::new(tx, ty, u, v)?;
    let cov = DMatrix::from_diagonal(&DVector::from_iterator(4, diag.iter().map(|d| s2 / d)));
    Ok(DatumShiftResult { params, residuals: w.as_slice().to_vec(), s2, cov })
}

/// Smallest point spread D satisfying D² ≥ σ₀²/(n·σ̃ᵤ²) for a target
/// standard deviation of u.
pub fn helmert2d_min_spread(sigma0: f64, sigma_u_target: f64, n: usize) -> Result<f64> {
    if !(sigma0 >= 0.0) || !(sigma_u_target > 0.0) || n == 0 {
        return Err(GeoError::Domain("need σ₀ ≥ 0, σ̃ᵤ > 0 and n ≥ 1".into()));
    }
    Ok(sigma0 / (sigma_u_target * (n as f64).sqrt()))
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn point() -> impl Strategy<Value = EcefCoord> {
        (-1e5f64..1e5, -1e5f64..1e5, -1e5f64..1e5).prop_map(|(x, y, z)| EcefCoord::new(4.3e6 + x, 1.1e6 + y, 4.57e6 + z))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bursa_wolf_residuals_orthogonal(pts in prop::collection::vec((point(), -0.05f64..0.05), 4..12), tz in -400.0f64..400.0) {
            let truth = BursaWolfParams { tx: -168.0, ty: 60.0, tz, m_scale: 3e-6, rx: 2e-6, ry: -1e-6, rz: 4e-6 };
            let pairs: Vec<_> = pts
                .iter()
                .map(|(p, noise)| {
                    let q = bursa_wolf_apply_linear(&truth, p);
                    (*p, EcefCoord::new(q.x + noise, q.y - noise, q.z + 0.5 * noise))
                })
                .collect();
            let Ok(fit) = bursa_wolf_estimate(&pairs) else { return Ok(()) };
            let l_norm = pairs.iter().map(|(a, b)| (b.to_vector() - a.to_vector()).norm_squared()).sum::<f64>().sqrt();
            for j in 0..7 {
                let (mut atv, mut col) = (0.0, 0.0);
                for (i, (p1, _)) in pairs.iter().enumerate() {
                    for (k, row) in bursa_wolf_rows(p1).iter().enumerate() {
                        atv += row[j] * fit.residuals[3 * i + k];
                        col += row[j] * row[j];
                    }
                }
                prop_assert!(atv.abs() < 1e-8 * l_norm * col.sqrt());
            }
        }

        #[test]
        fn helmert_recovers_exact_similarity(
            pts in prop::collection::vec((-5e4f64..5e4, -5e4f64..5e4), 3..10),
            tx in -1e3f64..1e3, ty in -1e3f64..1e3, s in 0.99f64..1.01, theta in -0.1f64..0.1,
        ) {
            let truth = Helmert2DParams::from_scale_rotation(tx, ty, s, theta).unwrap();
            let pairs: Vec<_> = pts
                .iter()
                .map(|&(x, y)| {
                    let p = PlaneCoord::new(500_000.0 + x, 300_000.0 + y);
                    (p, helmert2d_apply(&truth, &p))
                })
                .collect();
            // The centred normal matrix is checked for diagonality inside the estimator.
            let Ok(fit) = helmert2d_estimate(&pairs) else { return Ok(()) };
            prop_assert!((fit.params.u - truth.u).abs() < 1e-10 && (fit.params.v - truth.v).abs() < 1e-10);
            prop_assert!(fit.residuals.iter().all(|w| w.abs() < 1e-6));
        }

        #[test]
        fn molodensky_forms_agree_near_a_sphere(phi in -1.5f64..1.5, lam in -3.1f64..3.1, t in prop::array::uniform3(-300.0f64..300.0)) {
            let ell1 = Ellipsoid::sphere_like(6_378_000.0, 1e-5);
            let ell2 = Ellipsoid::sphere_like(6_378_100.0, 1e-5 + 1e-6);
            let g = GeodeticCoord::new(phi, lam, 0.0);
            let t = Vector3::new(t[0], t[1], t[2]);
            let (sp, sl, sh) = molodensky_standard(&ell1, &ell2, &g, t);
            let (ap, al, ah) = molodensky_abridged(&ell1, &ell2, &g, t);
            let m_phi = ell1.meridian_radius(phi) * sin_one_arcsec();
            let m_lam = ell1.grande_normale(phi) * phi.cos() * sin_one_arcsec();
            prop_assert!(((sp - ap) * m_phi).abs() < 1e-3);
            prop_assert!(((sl - al) * m_lam).abs() < 1e-3);
            prop_assert!((sh - ah).abs() < 1e-3);
        }
    }
}
