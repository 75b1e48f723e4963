//! Angle units and their string forms.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

pub const RAD_PER_GRAD: f64 = PI / 200.0;
pub const RAD_PER_DEG: f64 = PI / 180.0;
pub const RAD_PER_DMGR: f64 = PI / 200.0 * 1e-4;
pub const RAD_PER_HOUR: f64 = PI / 12.0;
/// One sexagesimal arc-second.
pub const RAD_PER_ARCSEC: f64 = PI / 648_000.0;

/// An angle stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Angle(pub f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn rad(r: f64) -> Self {
        Angle(r)
    }
    pub fn grad(g: f64) -> Self {
        Angle(g / 200.0 * PI)
    }
    pub fn deg(d: f64) -> Self {
        Angle(d / 180.0 * PI)
    }
    pub fn dmgr(d: f64) -> Self {
        Angle(d / 2e6 * PI)
    }
    pub fn hours(h: f64) -> Self {
        Angle(h / 12.0 * PI)
    }
    pub fn hms(h: f64, m: f64, s: f64) -> Self {
        Angle::hours(h + m / 60.0 + s / 3600.0)
    }
    pub fn dms(d: f64, m: f64, s: f64) -> Self {
        let sign = if d < 0.0 { -1.0 } else { 1.0 };
        Angle::deg(sign * (d.abs() + m / 60.0 + s / 3600.0))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
    pub fn to_grad(self) -> f64 {
        self.0 / PI * 200.0
    }
    pub fn to_deg(self) -> f64 {
        self.0 / PI * 180.0
    }
    pub fn to_dmgr(self) -> f64 {
        self.0 / PI * 2e6
    }
    pub fn to_hours(self) -> f64 {
        self.0 / RAD_PER_HOUR
    }

    pub fn in_unit(self, unit: AngleUnit) -> f64 {
        self.0 / unit.radians_per_unit()
    }
    pub fn from_unit(value: f64, unit: AngleUnit) -> Self {
        Angle(value * unit.radians_per_unit())
    }

    /// Normalized to [0, 2π).
    pub fn normalized_positive(self) -> Self {
        if (0.0..2.0 * PI).contains(&self.0) {
            return self;
        }
        let r = self.0.rem_euclid(2.0 * PI);
        Angle(if r >= 2.0 * PI { 0.0 } else { r })
    }

    /// Normalized to (−π, π].
    pub fn normalized_signed(self) -> Self {
        if self.0 > -PI && self.0 <= PI {
            return self;
        }
        let mut r = self.0.rem_euclid(2.0 * PI);
        if r > PI {
            r -= 2.0 * PI;
        }
        Angle(r)
    }
}

impl std::ops::Add for Angle {
    type Output = Angle;
    fn add(self, o: Angle) -> Angle {
        Angle(self.0 + o.0)
    }
}

impl std::ops::Sub for Angle {
    type Output = Angle;
    fn sub(self, o: Angle) -> Angle {
        Angle(self.0 - o.0)
    }
}

impl std::ops::Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(-self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleUnit {
    Rad,
    Deg,
    Grad,
    Dmgr,
    Hour,
}

impl AngleUnit {
    pub fn radians_per_unit(self) -> f64 {
        match self {
            AngleUnit::Rad => 1.0,
            AngleUnit::Deg => RAD_PER_DEG,
            AngleUnit::Grad => RAD_PER_GRAD,
            AngleUnit::Dmgr => RAD_PER_DMGR,
            AngleUnit::Hour => RAD_PER_HOUR,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            AngleUnit::Rad => "rad",
            AngleUnit::Deg => "deg",
            AngleUnit::Grad => "gr",
            AngleUnit::Dmgr => "dmgr",
            AngleUnit::Hour => "h",
        }
    }
}

impl FromStr for AngleUnit {
    type Err = GeoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rad" => Ok(AngleUnit::Rad),
            "deg" | "°" => Ok(AngleUnit::Deg),
            "gr" | "grad" | "gon" => Ok(AngleUnit::Grad),
            "dmgr" => Ok(AngleUnit::Dmgr),
            "h" | "hour" | "hours" => Ok(AngleUnit::Hour),
            other => Err(GeoError::Parse(format!("unknown angle unit '{other}'"))),
        }
    }
}

impl fmt::Display for AngleUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

fn parse_num(s: &str, whole: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| GeoError::Parse(format!("bad number in angle '{whole}'")))
}

/// Parses a suffixed angle literal: "40.0gr", "12.5dmgr", "0.7rad",
/// "36.5deg", "36°54'12.5\"", "2h13m52.9s" (also "2h13mn52.9s").
pub fn parse_angle(s: &str) -> Result<Angle> {
    parse_angle_or(s, None)
}

/// Like [`parse_angle`], but a bare number is read in `default`.
pub fn parse_angle_or(s: &str, default: Option<AngleUnit>) -> Result<Angle> {
    let t = s.trim();
    if t.is_empty() {
        return Err(GeoError::Parse("empty angle".into()));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let lower = body.to_ascii_lowercase();
    let magnitude = if let Some(v) = lower.strip_suffix("dmgr") {
        Angle::dmgr(parse_num(v, t)?)
    } else if let Some(v) = lower.strip_suffix("gr") {
        Angle::grad(parse_num(v, t)?)
    } else if let Some(v) = lower.strip_suffix("rad") {
        Angle::rad(parse_num(v, t)?)
    } else if let Some(v) = lower.strip_suffix("deg") {
        Angle::deg(parse_num(v, t)?)
    } else if lower.contains('°') {
        parse_sexagesimal(&lower, t)?
    } else if lower.contains('h') {
        parse_hours(&lower, t)?
    } else if let Some(unit) = default {
        Angle::from_unit(parse_num(&lower, t)?, unit)
    } else {
        return Err(GeoError::Parse(format!("angle '{t}' has no unit")));
    };
    Ok(if neg { -magnitude } else { magnitude })
}

fn parse_sexagesimal(body: &str, whole: &str) -> Result<Angle> {
    let (d, rest) = body.split_once('°').unwrap_or((body, ""));
    let deg = parse_num(d, whole)?;
    let mut min = 0.0;
    let mut sec = 0.0;
    let rest = rest.trim();
    if !rest.is_empty() {
        let (m, after) = match rest.split_once('\'') {
            Some((m, after)) => (m, after),
            None => (rest, ""),
        };
        if !m.trim().is_empty() {
            min = parse_num(m, whole)?;
        }
        let after = after.trim().trim_end_matches('"').trim_end_matches("''");
        if !after.is_empty() {
            sec = parse_num(after, whole)?;
        }
    }
    if min >= 60.0 || sec >= 60.0 {
        return Err(GeoError::Parse(format!("minutes/seconds out of range in '{whole}'")));
    }
    Ok(Angle::deg(deg + min / 60.0 + sec / 3600.0))
}

fn parse_hours(body: &str, whole: &str) -> Result<Angle> {
    let (h, rest) = body.split_once('h').unwrap_or((body, ""));
    let hours = parse_num(h, whole)?;
    let mut min = 0.0;
    let mut sec = 0.0;
    let rest = rest.trim();
    if !rest.is_empty() {
        let (m, after) = match rest.split_once("mn").or_else(|| rest.split_once('m')) {
            Some((m, after)) => (m, after),
            None => ("", rest),
        };
        if !m.trim().is_empty() {
            min = parse_num(m, whole)?;
        }
        let after = after.trim().trim_end_matches('s');
        if !after.is_empty() {
            sec = parse_num(after, whole)?;
        }
    }
    if min >= 60.0 || sec >= 60.0 {
        return Err(GeoError::Parse(format!("minutes/seconds out of range in '{whole}'")));
    }
    Ok(Angle::hours(hours + min / 60.0 + sec / 3600.0))
}

/// "4h23m26.82s" with `decimals` digits on the seconds. Negative values get a leading '-'.
pub fn format_hms(a: Angle, decimals: usize) -> String {
    let (sign, h, m, s) = split_sexagesimal(a.to_hours(), decimals);
    format!("{sign}{h}h{m:02}m{s:0w$.p$}s", w = width(decimals), p = decimals)
}

/// "36°54'12.50\"".
pub fn format_dms(a: Angle, decimals: usize) -> String {
    let (sign, d, m, s) = split_sexagesimal(a.to_deg(), decimals);
    format!("{sign}{d}°{m:02}'{s:0w$.p$}\"", w = width(decimals), p = decimals)
}

/// "80.16433gr".
pub fn format_grad(a: Angle, decimals: usize) -> String {
    format!("{:.p$}gr", a.to_grad(), p = decimals)
}

fn width(decimals: usize) -> usize {
    if decimals == 0 {
        2
    } else {
        decimals + 3
    }
}

fn split_sexagesimal(value: f64, decimals: usize) -> (&'static str, i64, i64, f64) {
    let sign = if value < 0.0 { "-" } else { "" };
    let scale = 10f64.powi(decimals as i32);
    // Round once on the smallest unit so carries propagate upward.
    let total = (value.abs() * 3600.0 * scale).round() / scale;
    let whole = (total / 3600.0).floor();
    let rem = total - whole * 3600.0;
    let min = (rem / 60.0).floor();
    let sec = rem - min * 60.0;
    (sign, whole as i64, min as i64, sec.max(0.0))
}
