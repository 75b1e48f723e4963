//! Reduction of measured slope distances to the reference surface and the plane.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

/// Mean earth radius used by the worked reductions.
pub const DEFAULT_RADIUS: f64 = 6_378_000.0;

/// Radiation used for the measurement; fixes the wave-path curvature radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wave {
    /// ρ = 8R.
    Light,
    /// ρ = 4R.
    Micro,
}

impl Wave {
    pub fn curvature_radius(self, r: f64) -> f64 {
        match self {
            Wave::Light => 8.0 * r,
            Wave::Micro => 4.0 * r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceObservation {
    /// Slope distance, m.
    pub dp: f64,
    pub ha: f64,
    pub hb: f64,
    /// Wave-path curvature radius, m; `None` skips the curvature correction.
    pub rho_wave: Option<f64>,
    pub r: f64,
}

impl DistanceObservation {
    pub fn new(dp: f64, ha: f64, hb: f64) -> Result<Self> {
        let d = DistanceObservation { dp, ha, hb, rho_wave: None, r: DEFAULT_RADIUS };
        d.validate()?;
        Ok(d)
    }

    pub fn with_wave(mut self, wave: Wave) -> Self {
        self.rho_wave = Some(wave.curvature_radius(self.r));
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        if let Some(rho) = self.rho_wave {
            self.rho_wave = Some(rho / self.r * r);
        }
        self.r = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dp > 0.0) || self.dp <= (self.ha - self.hb).abs() {
            return Err(GeoError::Domain("slope distance must exceed the height difference".into()));
        }
        if !(self.r > 0.0) {
            return Err(GeoError::Domain("earth radius must be positive".into()));
        }
        Ok(())
    }

    pub fn dh(&self) -> f64 {
        self.hb - self.ha
    }

    pub fn hm(&self) -> f64 {
        0.5 * (self.ha + self.hb)
    }
}

/// C₁ = −D³/(24ρ²), chord of the curved wave path.
pub fn correction_curvature(d: f64, rho: f64) -> f64 {
    -d.powi(3) / (24.0 * rho * rho)
}

/// C₂ = −ΔH²/(2D_P).
pub fn correction_horizontal(dh: f64, dp: f64) -> f64 {
    -dh * dh / (2.0 * dp)
}

/// C₃ = −D_H·H_m/R.
pub fn correction_sea_level(dh_dist: f64, hm: f64, r: f64) -> f64 {
    -dh_dist * hm / r
}

/// C₄ = D₀³/(24R²).
pub fn correction_chord_to_arc(d0: f64, r: f64) -> f64 {
    d0.powi(3) / (24.0 * r * r)
}

/// D_r = m·D_e.
pub fn reduce_to_plane(de: f64, scale: f64) -> f64 {
    scale * de
}

/// Scale factor from an alteration given in cm/km.
pub fn scale_from_alteration_cm_per_km(eps: f64) -> f64 {
    1.0 + eps * 1e-5
}

/// D₀ = D_P √((1 − ΔH²/D_P²)/((1 + H_A/R)(1 + H_B/R))).
pub fn rigorous_sea_level(obs: &DistanceObservation) -> Result<f64> {
    obs.validate()?;
    let q = obs.dh() / obs.dp;
    let den = (1.0 + obs.ha / obs.r) * (1.0 + obs.hb / obs.r);
    if den <= q * q {
        return Err(GeoError::Domain("near-vertical line: reduction undefined".into()));
    }
    Ok(obs.dp * ((1.0 - q * q) / den).sqrt())
}

/// Exact arc on the sphere of radius R subtending the chord D₀.
pub fn chord_to_arc(d0: f64, r: f64) -> f64 {
    2.0 * r * (d0 / (2.0 * r)).asin()
}

/// Every intermediate of the stepwise pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionSteps {
    pub c1: f64,
    pub c2: f64,
    pub dh_dist: f64,
    pub c3: f64,
    pub d0: f64,
    pub c4: f64,
    pub de: f64,
    pub dr: f64,
}

/// Curvature (when a wave is declared), horizontal, sea-level and chord corrections
/// applied in turn, then the plane scale.
pub fn reduce_stepwise(obs: &DistanceObservation, scale: f64) -> Result<ReductionSteps> {
    obs.validate()?;
    let c1 = obs.rho_wave.map_or(0.0, |rho| correction_curvature(obs.dp, rho));
    let d = obs.dp + c1;
    let c2 = correction_horizontal(obs.dh(), d);
    let dh_dist = d + c2;
    let c3 = correction_sea_level(dh_dist, obs.hm(), obs.r);
    let d0 = dh_dist + c3;
    let c4 = correction_chord_to_arc(d0, obs.r);
    let de = d0 + c4;
    Ok(ReductionSteps { c1, c2, dh_dist, c3, d0, c4, de, dr: reduce_to_plane(de, scale) })
}

/// Rigorous D₀, exact chord-to-arc, then the plane scale: (D₀, D_e, D_r).
pub fn reduce_rigorous(obs: &DistanceObservation, scale: f64) -> Result<(f64, f64, f64)> {
    let d0 = rigorous_sea_level(obs)?;
    let de = chord_to_arc(d0, obs.r);
    Ok((d0, de, reduce_to_plane(de, scale)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_correction() {
        let c1 = correction_curvature(10_000.0, Wave::Micro.curvature_radius(DEFAULT_RADIUS));
        assert_eq!((c1 * 1e5).round() / 1e2, -0.06);
        assert_eq!(correction_curvature(0.0, 1.0), 0.0);
        let light = correction_curvature(5000.0, Wave::Light.curvature_radius(DEFAULT_RADIUS));
        let micro = correction_curvature(5000.0, Wave::Micro.curvature_radius(DEFAULT_RADIUS));
        assert!((light / micro - 0.25).abs() < 1e-15);
    }

    #[test]
    fn horizontal_correction() {
        assert_eq!(correction_horizontal(0.0, 100.0), 0.0);
        let c2 = correction_horizontal(272.68, 20_130.858);
        assert!((c2 - -1.846_776_287_429).abs() < 1e-9);
        assert!(correction_horizontal(-30.0, 100.0) < 0.0);
    }

    #[test]
    fn sea_level_correction() {
        let c3 = correction_sea_level(10_000.0, 800.0, DEFAULT_RADIUS);
        assert_eq!((c3 * 100.0).round() / 100.0, -1.25);
        assert_eq!(correction_sea_level(10_000.0, 0.0, DEFAULT_RADIUS), 0.0);
        assert!(correction_sea_level(10.0, 5.0, DEFAULT_RADIUS) < 0.0);
    }

    #[test]
    fn chord_correction() {
        let c4 = correction_chord_to_arc(10_000.0, DEFAULT_RADIUS);
        assert!((c4 - 1.024_282_443e-3).abs() < 1e-12);
        assert_eq!(correction_chord_to_arc(0.0, DEFAULT_RADIUS), 0.0);
        assert!((chord_to_arc(10_000.0, DEFAULT_RADIUS) - 10_000.0 - c4).abs() < 1e-9);
    }

    #[test]
    fn plane_reduction() {
        let m = scale_from_alteration_cm_per_km(12.0);
        assert!((reduce_to_plane(10_000.0, m) - 10_001.20).abs() < 1e-9);
        assert_eq!(reduce_to_plane(1234.5, 1.0), 1234.5);
    }

    #[test]
    fn rigorous_cases() {
        let flat = DistanceObservation::new(5000.0, 0.0, 0.0).unwrap();
        assert_eq!(rigorous_sea_level(&flat).unwrap(), 5000.0);
        let obs = DistanceObservation::new(20_130.858, 235.07, 507.75).unwrap();
        // Extended-precision evaluation of the closed form.
        let d0 = rigorous_sea_level(&obs).unwrap();
        assert!((d0 - 20_127.839_039_376).abs() < 1e-6);
        let steps = reduce_stepwise(&obs, 1.0).unwrap();
        assert!((steps.d0 - d0).abs() < 1e-3);
        let (_, de, dr) = reduce_rigorous(&obs, 0.999_850_371).unwrap();
        assert!((de - 20_127.847_391_783).abs() < 1e-6);
        assert!((dr - 20_124.835_682_106).abs() < 1e-6);
        let south = DistanceObservation::new(16_483.873, 1319.79, 1025.34).unwrap();
        let (d0, de, dr) = reduce_rigorous(&south, scale_from_alteration_cm_per_km(-14.0)).unwrap();
        assert!((d0 - 16_478.213_485_841).abs() < 1e-6);
        assert!((de - 16_478.218_068_847).abs() < 1e-6);
        assert!((dr - 16_475.911_118_317).abs() < 1e-6);
    }

    #[test]
    fn height_term_alone_exceeds_two_mm() {
        // Level 25 km line at 2000 m: stepwise keeps only the first order in H/R.
        let obs = DistanceObservation::new(25_000.0, 2000.0, 2000.0).unwrap();
        let gap = reduce_stepwise(&obs, 1.0).unwrap().d0 - reduce_rigorous(&obs, 1.0).unwrap().0;
        assert!((gap - -2.457_507e-3).abs() < 1e-8, "{gap}");
    }

    #[test]
    fn invalid_observations() {
        assert!(DistanceObservation::new(10.0, 0.0, 20.0).is_err());
        assert!(DistanceObservation::new(-1.0, 0.0, 0.0).is_err());
    }
}
