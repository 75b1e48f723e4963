//! Geodesic lines on the ellipsoid of revolution.
//!
//! Both problems work on the latitude integrals written in t = sin φ:
//!
//! s  = a(1−e²)/cos Aze · ∫ (1−e²t²)^{-3/2} (1−k²t²)^{-1/2} dt
//! Δλ = (1−e²) tan Aze · ∫ (1−t²)^{-1} (1−e²t²)^{-1/2} (1−k²t²)^{-1/2} dt
//!
//! with C = a sin Aze the Clairaut constant. The integrands are expanded in
//! powers of t² and integrated term by term.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::coords::GeodeticCoord;
use crate::ellipsoid::Ellipsoid;
use crate::error::{GeoError, Result};

const POLAR_C: f64 = 1e-9;
/// Largest k²t² reached by a line before it is reported as too close to its vertex.
const VERTEX_CAP: f64 = 0.9995;
const MAX_TERMS: usize = 200_000;
const TERM_TOL: f64 = 1e-17;

/// How far the integrand expansions are carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeriesOrder {
    /// Terms are added until they fall below double precision.
    #[default]
    Converged,
    /// Arc integrand 1 + m t² + n t⁴, longitude integrand 1 + α t² + β t⁴ + γ t⁶.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    /// Clairaut constant r sin Az in metres, signed like sin Az.
    pub c: f64,
    /// Azimuth at the equator crossing; its cosine carries the north/south sense.
    pub aze: f64,
    pub k2: f64,
}

impl GeodesicState {
    pub fn k(&self) -> f64 {
        self.k2.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSolution {
    pub phi1: f64,
    pub lam1: f64,
    pub az1: f64,
    pub phi2: f64,
    pub lam2: f64,
    pub az2: f64,
    pub s: f64,
    pub c: f64,
}

fn state_from(ell: &Ellipsoid, c: f64, cos2_aze: f64, sigma: f64) -> GeodesicState {
    let sin_aze = c / ell.a;
    let aze = sin_aze.atan2(sigma * cos2_aze.sqrt());
    let k2 = (1.0 - ell.e2 * sin_aze * sin_aze) / cos2_aze;
    GeodesicState { c, aze, k2 }
}

fn sense(az: f64) -> f64 {
    if az.cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// C = N cos φ sin Az, the equatorial azimuth and the modulus k².
pub fn clairaut_constant(ell: &Ellipsoid, phi: f64, az: f64) -> Result<GeodesicState> {
    let c = ell.grande_normale(phi) * phi.cos() * az.sin();
    if c.abs() < POLAR_C {
        return Err(GeoError::PolarGeodesic);
    }
    let (sp, (sa, ca)) = (phi.sin(), az.sin_cos());
    // 1 − C²/a² rearranged to avoid cancellation near the equator.
    let w2 = 1.0 - ell.e2 * sp * sp;
    let cos2 = ((ca * ca + sp * sp * (sa * sa - ell.e2)) / w2).max(0.0);
    Ok(state_from(ell, c, cos2, sense(az)))
}

struct Line {
    e2: f64,
    k2: f64,
    order: SeriesOrder,
}

impl Line {
    fn new(ell: &Ellipsoid, st: &GeodesicState, order: SeriesOrder) -> Self {
        Line { e2: ell.e2, k2: st.k2, order }
    }

    fn arc_integrand(&self, t: f64) -> f64 {
        let x = t * t;
        match self.order {
            SeriesOrder::Converged => {
                (1.0 - self.e2 * x).powf(-1.5) / (1.0 - self.k2 * x).sqrt()
            }
            SeriesOrder::Paper => {
                let [c0, c1, c2] = self.arc_paper();
                c0 + x * (c1 + x * c2)
            }
        }
    }

    fn arc_paper(&self) -> [f64; 3] {
        let (e2, k2) = (self.e2, self.k2);
        let m = (k2 + 3.0 * e2) / 2.0;
        let n = (3.0 * k2 * k2 + 6.0 * e2 * k2 + 15.0 * e2 * e2) / 8.0;
        [1.0, m, n]
    }

    fn lon_paper(&self) -> [f64; 4] {
        let (e2, k2) = (self.e2, self.k2);
        let alpha = (2.0 + k2 + e2) / 2.0;
        let beta = (8.0 + 4.0 * (k2 + e2) + 3.0 * k2 * k2 + 2.0 * e2 * k2 + 3.0 * e2 * e2) / 8.0;
        let gamma = (16.0
            + 8.0 * (k2 + e2)
            + 6.0 * k2 * k2
            + 4.0 * e2 * k2
            + 6.0 * e2 * e2
            + 5.0 * k2 * k2 * k2
            + 3.0 * e2 * k2 * k2
            + 3.0 * e2 * e2 * k2
            + 5.0 * e2 * e2 * e2)
            / 16.0;
        [1.0, alpha, beta, gamma]
    }

    /// ∫ arc integrand dt from t1 to t1 + dt.
    fn arc_integral(&self, t1: f64, dt: f64) -> Result<f64> {
        let t2 = t1 + dt;
        let x = t1.abs().max(t2.abs()).powi(2);
        let (e2, k2) = (self.e2, self.k2);
        match self.order {
            SeriesOrder::Paper => {
                let c = self.arc_paper();
                odd_power_sum(t1, t2, dt, |j| c.get(j).map(|v| v * x.powi(j as i32)))
            }
            SeriesOrder::Converged => {
                // (1−e²u)(1−k²u) f′ = ((3e²+k²)/2 − 2e²k²u) f, f = Σ c_j u^j.
                let (mut prev, mut cur) = (0.0, 1.0);
                odd_power_sum(t1, t2, dt, |j| {
                    if j > 0 {
                        let jf = (j - 1) as f64;
                        let a = (3.0 * e2 + k2) / 2.0 + (e2 + k2) * jf;
                        let next = (a * x * cur - e2 * k2 * (jf + 1.0) * x * x * prev) / (jf + 1.0);
                        prev = cur;
                        cur = next;
                    }
                    Some(cur)
                })
            }
        }
    }

    /// ∫ longitude integrand dt from t1 to t1 + dt.
    fn lon_integral(&self, t1: f64, dt: f64) -> Result<f64> {
        let t2 = t1 + dt;
        let x = t1.abs().max(t2.abs()).powi(2);
        let (e2, k2) = (self.e2, self.k2);
        match self.order {
            SeriesOrder::Paper => {
                let d = self.lon_paper();
                odd_power_sum(t1, t2, dt, |j| d.get(j).map(|v| v * x.powi(j as i32)))
            }
            SeriesOrder::Converged => {
                // p_j from (1−e²u)^{-1/2}(1−k²u)^{-1/2}; the (1−u)^{-1} factor makes d_j partial sums.
                let (mut p_prev, mut p) = (0.0, 1.0);
                let mut d = 1.0;
                odd_power_sum(t1, t2, dt, |j| {
                    if j > 0 {
                        let jf = (j - 1) as f64;
                        let next = ((e2 + k2) * (jf + 0.5) * x * p - e2 * k2 * jf * x * x * p_prev) / (jf + 1.0);
                        p_prev = p;
                        p = next;
                        d = x * d + p;
                    }
                    Some(d)
                })
            }
        }
    }
}

/// Σ_j c_j (t2^{2j+1} − t1^{2j+1})/(2j+1), where `coef(j)` returns c_j τ^{2j}
/// for τ = max(|t1|, |t2|). The power differences are built from `dt` so short
/// intervals keep full relative precision.
fn odd_power_sum(t1: f64, t2: f64, dt: f64, mut coef: impl FnMut(usize) -> Option<f64>) -> Result<f64> {
    let tau = t1.abs().max(t2.abs());
    if tau == 0.0 || dt == 0.0 {
        return Ok(0.0);
    }
    let (u1, u2) = (t1 / tau, t2 / tau);
    let (u1sq, u2sq) = (u1 * u1, u2 * u2);
    let gap = dt * (t1 + t2) / (tau * tau);
    let mut delta = dt / tau;
    let mut u1pow = u1;
    let mut sum = 0.0;
    for j in 0..MAX_TERMS {
        let Some(cj) = coef(j) else {
            return Ok(sum * tau);
        };
        sum += cj * delta / (2 * j + 1) as f64;
        if j > 2 && cj.abs() < TERM_TOL {
            return Ok(sum * tau);
        }
        delta = u2sq * delta + u1pow * gap;
        u1pow *= u1sq;
    }
    Err(GeoError::VertexExceeded)
}

fn solution(p1: &GeodeticCoord, az1: f64, phi2: f64, lam2: f64, az2: f64, s: f64, c: f64) -> GeodesicSolution {
    GeodesicSolution { phi1: p1.phi, lam1: p1.lam, az1, phi2, lam2, az2, s, c }
}

pub fn geodesic_direct(ell: &Ellipsoid, p1: &GeodeticCoord, az1: f64, s: f64) -> Result<GeodesicSolution> {
    geodesic_direct_with(ell, p1, az1, s, SeriesOrder::default())
}

pub fn geodesic_direct_with(
    ell: &Ellipsoid,
    p1: &GeodeticCoord,
    az1: f64,
    s: f64,
    order: SeriesOrder,
) -> Result<GeodesicSolution> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(GeoError::Domain(format!("distance must be finite and ≥ 0, got {s}")));
    }
    if p1.phi.abs() >= FRAC_PI_2 {
        return Err(GeoError::Domain("start point must not be a pole".into()));
    }
    let c0 = ell.grande_normale(p1.phi) * p1.phi.cos() * az1.sin();
    if s == 0.0 {
        return Ok(solution(p1, az1, p1.phi, p1.lam, az1, 0.0, c0));
    }
    let st = match clairaut_constant(ell, p1.phi, az1) {
        Err(GeoError::PolarGeodesic) => return meridian_direct(ell, p1, az1, s, c0),
        other => other?,
    };
    if st.k2.is_infinite() {
        let lam2 = p1.lam + az1.sin().signum() * s / ell.a;
        return Ok(solution(p1, az1, 0.0, lam2, az1, s, st.c));
    }
    let sigma = sense(az1);
    let t1 = p1.phi.sin();
    let t_cap = sigma * (VERTEX_CAP / st.k2).sqrt();
    let span = sigma * (t_cap - t1);
    // A start inside the vertex band is refused whichever way the line heads,
    // so the inverse can always recover what the direct produced.
    if span <= 0.0 || st.k2 * t1 * t1 > VERTEX_CAP {
        return Err(GeoError::VertexExceeded);
    }
    let line = Line::new(ell, &st, order);
    let cos_aze = st.aze.cos();
    let scale = ell.a * (1.0 - ell.e2) / cos_aze.abs();
    let target = s / scale;

    // Newton on the latitude step, kept inside a bracket. Reaching the cap is
    // checked only once an iterate lands on it.
    let (mut lo, mut hi) = (0.0, span);
    let mut x = (target / line.arc_integrand(t1)).min(span);
    let mut converged = false;
    for _ in 0..100 {
        let f = sigma * line.arc_integral(t1, sigma * x)? - target;
        if x == span && f < 0.0 {
            return Err(GeoError::VertexExceeded);
        }
        if f.abs() * scale < 1e-9 {
            converged = true;
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - f / line.arc_integrand(t1 + sigma * x);
        if next >= span && hi == span {
            next = span;
        } else if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            converged = true;
            break;
        }
        x = next;
    }
    if !converged {
        return Err(GeoError::NonConvergence(100));
    }
    let dt = sigma * x;
    let t2 = t1 + dt;
    let phi2 = t2.clamp(-1.0, 1.0).asin();
    let dlam = (1.0 - ell.e2) * st.aze.sin() / cos_aze * line.lon_integral(t1, dt)?;
    let az2 = azimuth_at(ell, st.c, phi2, sigma);
    Ok(solution(p1, az1, phi2, p1.lam + dlam, az2, s, st.c))
}

fn azimuth_at(ell: &Ellipsoid, c: f64, phi: f64, sigma: f64) -> f64 {
    let sin_az = (c / ell.parallel_radius(phi)).clamp(-1.0, 1.0);
    sin_az.atan2(sigma * (1.0 - sin_az * sin_az).sqrt())
}

fn meridian_direct(ell: &Ellipsoid, p1: &GeodeticCoord, az1: f64, s: f64, c: f64) -> Result<GeodesicSolution> {
    let quarter = ell.meridian_arc(FRAC_PI_2);
    let beta2 = ell.meridian_arc(p1.phi) + sense(az1) * s;
    if beta2.abs() >= quarter {
        return Err(GeoError::VertexExceeded);
    }
    let phi2 = ell.footpoint_latitude(beta2)?;
    Ok(solution(p1, az1, phi2, p1.lam, az1, s, c))
}

pub fn geodesic_inverse(ell: &Ellipsoid, p1: &GeodeticCoord, p2: &GeodeticCoord) -> Result<GeodesicSolution> {
    geodesic_inverse_with(ell, p1, p2, SeriesOrder::default())
}

pub fn geodesic_inverse_with(
    ell: &Ellipsoid,
    p1: &GeodeticCoord,
    p2: &GeodeticCoord,
    order: SeriesOrder,
) -> Result<GeodesicSolution> {
    if p1.phi.abs() >= FRAC_PI_2 || p2.phi.abs() >= FRAC_PI_2 {
        return Err(GeoError::Domain("end points must not be poles".into()));
    }
    let dlam = crate::angle::Angle(p2.lam - p1.lam).normalized_signed().radians();
    if dlam.abs() > PI * (1.0 - 0.5 * ell.e2) {
        return Err(GeoError::AntipodalUnsupported);
    }
    let (phi1, phi2) = (p1.phi, p2.phi);
    let finish = |az1: f64, az2: f64, s: f64, c: f64| solution(p1, az1, phi2, p1.lam + dlam, az2, s, c);
    if dlam.abs() < 1e-15 {
        if phi1 == phi2 {
            return Err(GeoError::Domain("end points coincide".into()));
        }
        let az = if phi2 > phi1 { 0.0 } else { PI };
        let s = (ell.meridian_arc(phi2) - ell.meridian_arc(phi1)).abs();
        return Ok(finish(az, az, s, 0.0));
    }
    if phi1 == phi2 {
        if phi1 == 0.0 {
            let az = FRAC_PI_2.copysign(dlam);
            return Ok(finish(az, az, ell.a * dlam.abs(), ell.a.copysign(dlam)));
        }
        // Between two points of one parallel the line turns at its vertex.
        return Err(GeoError::VertexExceeded);
    }

    let sigma = (phi2 - phi1).signum();
    let (t1, t2) = (phi1.sin(), phi2.sin());
    let dt = 2.0 * (0.5 * (phi1 + phi2)).cos() * (0.5 * (phi2 - phi1)).sin();
    let tau2 = t1.abs().max(t2.abs()).powi(2);
    let k2_max = VERTEX_CAP / tau2;
    if k2_max <= 1.0 {
        return Err(GeoError::VertexExceeded);
    }
    let c_max = ell.a * ((k2_max - 1.0) / (k2_max - ell.e2)).sqrt();
    let target = dlam.abs();

    let state_for = |c: f64| {
        let q = c / ell.a;
        state_from(ell, c.copysign(dlam), 1.0 - q * q, sigma)
    };
    let advance = |c: f64| -> Result<f64> {
        let st = state_for(c);
        let line = Line::new(ell, &st, order);
        Ok(((1.0 - ell.e2) * st.aze.tan() * line.lon_integral(t1, dt)?).abs() - target)
    };

    let f_max = advance(c_max)?;
    if f_max < 0.0 {
        return Err(GeoError::VertexExceeded);
    }
    // Seed: C = (r²/ρ) q / √(1 + r²q²/ρ²) with q = Δλ/Δφ, averaged over both ends.
    let q = target / (phi2 - phi1).abs();
    let seed_at = |phi: f64| {
        let (r, rho) = (ell.parallel_radius(phi), ell.meridian_radius(phi));
        r * r / rho * q / (1.0 + (r * q / rho).powi(2)).sqrt()
    };
    let (mut lo, mut hi) = (0.0, c_max);
    let mut c = (0.5 * (seed_at(phi1) + seed_at(phi2))).clamp(0.01 * c_max, 0.99 * c_max);
    let mut fc = advance(c)?;
    let (mut c_prev, mut f_prev) = (0.0, -target);
    let mut converged = false;
    for _ in 0..100 {
        if fc > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        let mut next = if fc != f_prev { c - fc * (c - c_prev) / (fc - f_prev) } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        c_prev = c;
        f_prev = fc;
        c = next;
        fc = advance(c)?;
        if fc.abs() < 1e-11 && (c - c_prev).abs() < 1e-6 || fc == 0.0 || hi - lo < 1e-9 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(GeoError::NonConvergence(100));
    }
    let st = state_for(c);
    let line = Line::new(ell, &st, order);
    let s = ell.a * (1.0 - ell.e2) / st.aze.cos().abs() * line.arc_integral(t1, dt)?.abs();
    let az1 = azimuth_at(ell, st.c, phi1, sigma);
    let az2 = azimuth_at(ell, st.c, phi2, sigma);
    Ok(finish(az1, az2, s, st.c))
}

/// Points at equal steps of s/n along a line, endpoints included.
pub fn geodesic_profile(
    ell: &Ellipsoid,
    p1: &GeodeticCoord,
    az1: f64,
    s: f64,
    n: usize,
) -> Result<Vec<GeodesicSolution>> {
    let n = n.max(1);
    (0..=n).map(|i| geodesic_direct(ell, p1, az1, s * i as f64 / n as f64)).collect()
}

/// r(φ) sin Az − C.
pub fn clairaut_residual(ell: &Ellipsoid, phi: f64, az: f64, c: f64) -> f64 {
    ell.parallel_radius(phi) * az.sin() - c
}

/// Longitude gained between two successive northward equator crossings.
///
/// The vertex-to-vertex integral is taken in the angle θ with t = sin θ / k,
/// where the expansion in sin²θ integrates against Wallis' factors.
pub fn circuit_longitude_advance(ell: &Ellipsoid, aze: f64) -> Result<f64> {
    let (sa, ca) = (aze.sin().abs(), aze.cos().abs());
    if sa < 1e-12 || ca < 1e-12 {
        return Err(GeoError::Domain("equatorial azimuth must be oblique".into()));
    }
    let k2 = (1.0 - ell.e2 * sa * sa) / (ca * ca);
    let (inv_k2, ek2) = (1.0 / k2, ell.e2 / k2);
    let (mut wallis, mut p, mut d) = (1.0, 1.0, 1.0);
    let mut sum = 1.0;
    for j in 1..MAX_TERMS {
        let jf = j as f64;
        wallis *= (2.0 * jf - 1.0) / (2.0 * jf);
        p *= ek2 * (2.0 * jf - 1.0) / (2.0 * jf);
        d = d * inv_k2 + p;
        let term = d * wallis;
        sum += term;
        if term < TERM_TOL * sum {
            return Ok(4.0 * (1.0 - ell.e2) * (sa / ca) / k2.sqrt() * FRAC_PI_2 * sum);
        }
    }
    Err(GeoError::NonConvergence(MAX_TERMS))
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::ellipsoid::grs80;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn inverse_undoes_direct(phi in -1.4f64..1.4, az in 0.02f64..3.12, west in any::<bool>(), s in 100.0f64..100_000.0) {
            let ell = grs80();
            let az1 = if west { -az } else { az };
            let p1 = GeodeticCoord::new(phi, 0.3, 0.0);
            let d = geodesic_direct(&ell, &p1, az1, s);
            prop_assume!(d != Err(GeoError::VertexExceeded));
            let d = d.unwrap();
            let r = geodesic_inverse(&ell, &p1, &GeodeticCoord::new(d.phi2, d.lam2, 0.0)).unwrap();
            prop_assert!((r.s - s).abs() < 1e-4, "s {} vs {}", r.s, s);
            prop_assert!(crate::angle::Angle(r.az1 - az1).normalized_signed().0.abs() < 1e-9);
        }

        #[test]
        fn clairaut_constant_conserved(phi in -1.4f64..1.4, az in 0.02f64..3.12, s in 1_000.0f64..400_000.0) {
            let ell = grs80();
            let p1 = GeodeticCoord::new(phi, 0.0, 0.0);
            let c = clairaut_constant(&ell, phi, az).unwrap().c;
            let profile = geodesic_profile(&ell, &p1, az, s, 20);
            prop_assume!(profile != Err(GeoError::VertexExceeded));
            for q in profile.unwrap() {
                prop_assert!(clairaut_residual(&ell, q.phi2, q.az2, c).abs() < 1e-6);
            }
        }

        #[test]
        fn modulus_above_one(phi in -1.4f64..1.4, az in 0.01f64..3.13) {
            prop_assume!(phi.abs() > 1e-6 || (az - FRAC_PI_2).abs() > 1e-6);
            let st = clairaut_constant(&grs80(), phi, az).unwrap();
            prop_assert!(st.k2 > 1.0);
        }
    }
}
