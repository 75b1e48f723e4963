use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;

use geodesy_core::adjust::{solve_linear, AdjustmentResult, LinearSystem, Network, NetworkPoint, ObsKind, Observation, Unknown, Weights};
use geodesy_core::angle::{Angle, AngleUnit};
use geodesy_core::coords::{ecef_to_geodetic, geodetic_to_ecef};
use geodesy_core::datum::{
    bursa_wolf_apply, bursa_wolf_direct, bursa_wolf_estimate, helmert2d_apply, helmert2d_estimate, molodensky_abridged,
    molodensky_standard, BursaWolfParams, Helmert2DParams,
};
use geodesy_core::ellipsoid::EllipsoidRegistry;
use geodesy_core::geodesics::{geodesic_direct_with, geodesic_inverse_with, SeriesOrder};
use geodesy_core::heights::{dynamic_height, geopotential_number, normal_height, orthometric_height, LevelLine};
use geodesy_core::orbits::{eci_to_ecef, gst_from_ut, state_eci, OrbitalElements};
use geodesy_core::projections::{Projection, PRESET_NAMES};
use geodesy_core::reductions::{reduce_rigorous, reduce_stepwise, DistanceObservation, Wave};
use geodesy_core::spherical_astro::{
    cassini_soldner_sphere, cassini_soldner_sphere_inverse, hour_angle, sidereal_from_universal, solve_triangle_sas,
};
use geodesy_core::{EcefCoord, Ellipsoid, GeodeticCoord, PlaneCoord};
use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::table::{fmt_num, round_sig, Out, Sheet, Table};
use crate::{
    open, read_to_string, AdjustArgs, AstroOp, CliError, Command, DatumOp, Direction, Frame, GeodesicMode, HeightSystem, Io,
    OrbitFrame, OrbitOp, ReduceMethod, Series, WaveArg,
};

pub fn dispatch(cmd: Command, unit: AngleUnit, io: &Io) -> Result<(), CliError> {
    match cmd {
        Command::Convert { from, to, ell } => convert(io, unit, from, to, &ellipsoid(&ell)?),
        Command::Project { direction, proj, ell } => project(io, unit, direction, &projection(&proj, ell.as_deref())?),
        Command::Geodesic { mode, ell, series } => geodesic(io, unit, mode, &ellipsoid(&ell)?, series),
        Command::Reduce { wave, scale, method, radius } => reduce(io, wave, scale, method, radius),
        Command::Datum { op } => datum(io, unit, op),
        Command::Adjust(args) => adjust(io, unit, args),
        Command::Orbit { op } => orbit(io, unit, op),
        Command::Dop { receiver, ell } => dop(io, unit, &receiver, &ellipsoid(&ell)?),
        Command::Heights { system, phi_start, phi_end, h_mean } => {
            let rpu = unit.radians_per_unit();
            heights(io, system, phi_start * rpu, phi_end.unwrap_or(phi_start) * rpu, h_mean)
        }
        Command::Astro { op } => astro(io, unit, op),
    }
}

fn ellipsoid(name: &str) -> Result<Ellipsoid, CliError> {
    Ok(EllipsoidRegistry::get(name)?)
}

/// Preset name, inline JSON, or a path to a JSON definition.
fn projection(spec: &str, ell: Option<&str>) -> Result<Projection, CliError> {
    let ell = ell.map(ellipsoid).transpose()?;
    let mut p = if spec.trim_start().starts_with('{') {
        Projection::from_json(spec)?
    } else if spec.ends_with(".json") {
        Projection::from_json(&read_to_string(&PathBuf::from(spec))?)?
    } else {
        return Ok(Projection::by_name(spec, ell)?);
    };
    if let Some(e) = ell {
        match &mut p {
            Projection::Lambert(d) => d.ell = e,
            Projection::Utm(d) => d.ell = e,
        }
    }
    Ok(p)
}

fn read_table(io: &Io) -> Result<Table, CliError> {
    Table::read(io.reader()?)
}

fn id(t: &Table, row: usize) -> Option<&str> {
    t.id_column().map(|c| t.text(row, c))
}

fn write_json(io: &Io, v: &Value) -> Result<(), CliError> {
    let mut w = io.writer()?;
    let text = serde_json::to_string_pretty(v).map_err(CliError::io)?;
    writeln!(w, "{text}").map_err(CliError::io)?;
    w.flush().map_err(CliError::io)
}

fn num(x: f64) -> Value {
    json!(round_sig(x))
}

fn nums<'a>(xs: impl IntoIterator<Item = &'a f64>) -> Value {
    Value::Array(xs.into_iter().map(|x| num(*x)).collect())
}

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| nums(r.iter())).collect())
}

/// Splits "a,b,c" into numbers.
fn triple(s: &str, what: &str) -> Result<[f64; 3], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{what} must be three comma-separated numbers")))?;
    v.try_into().map_err(|_| CliError::Usage(format!("{what} must be three comma-separated numbers")))
}

pub fn list_ellipsoids(io: &Io) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(io.writer()?);
    w.write_record(["name", "a", "inv_f", "b", "e2"]).map_err(CliError::io)?;
    for e in EllipsoidRegistry::all() {
        w.write_record([e.name.clone(), fmt_num(e.a), fmt_num(1.0 / e.f), fmt_num(e.b), fmt_num(e.e2)])
            .map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

pub fn list_projections(io: &Io) -> Result<(), CliError> {
    let mut w = io.writer()?;
    for name in PRESET_NAMES {
        writeln!(w, "{name}").map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

fn convert(io: &Io, unit: AngleUnit, from: Frame, to: Frame, ell: &Ellipsoid) -> Result<(), CliError> {
    let t = read_table(io)?;
    let geodetic = [Out::Angle("phi", unit), Out::Angle("lam", unit), Out::Plain("he")];
    let ecef = [Out::Plain("x"), Out::Plain("y"), Out::Plain("z")];
    let cols = match to {
        Frame::Geodetic => geodetic,
        Frame::Ecef => ecef,
    };
    let mut sheet = Sheet::new(cols.into()).with_ids_from(&t);
    for r in 0..t.rows.len() {
        let g = match from {
            Frame::Geodetic => read_geodetic(&t, r, unit, "")?,
            Frame::Ecef => ecef_to_geodetic(ell, &read_ecef(&t, r, "")?)?,
        };
        let vals = match to {
            Frame::Geodetic => vec![g.phi, g.lam, g.he],
            Frame::Ecef => {
                let p = match from {
                    Frame::Ecef => read_ecef(&t, r, "")?,
                    Frame::Geodetic => geodetic_to_ecef(ell, &g),
                };
                vec![p.x, p.y, p.z]
            }
        };
        sheet.push(id(&t, r), vals);
    }
    sheet.write(io.writer()?)
}

/// phi, lam and an optional he, with `suffix` appended to each name.
fn read_geodetic(t: &Table, r: usize, unit: AngleUnit, suffix: &str) -> Result<GeodeticCoord, CliError> {
    let phi = t.angle(r, t.require(&format!("phi{suffix}"))?, unit)?;
    let lam = t.angle(r, t.require(&format!("lam{suffix}"))?, unit)?;
    let he = match t.index(&format!("he{suffix}")) {
        Some(c) => t.num(r, c)?,
        None => 0.0,
    };
    Ok(GeodeticCoord::new(phi, lam, he))
}

fn read_ecef(t: &Table, r: usize, suffix: &str) -> Result<EcefCoord, CliError> {
    let get = |n: &str| -> Result<f64, CliError> { t.num(r, t.require(&format!("{n}{suffix}"))?) };
    Ok(EcefCoord::new(get("x")?, get("y")?, get("z")?))
}

fn read_plane(t: &Table, r: usize, suffix: &str) -> Result<PlaneCoord, CliError> {
    let x = t.num(r, t.require(&format!("x{suffix}"))?)?;
    let y = t.num(r, t.require(&format!("y{suffix}"))?)?;
    Ok(PlaneCoord::new(x, y))
}

fn project(io: &Io, unit: AngleUnit, dir: Direction, p: &Projection) -> Result<(), CliError> {
    let t = read_table(io)?;
    let cols = match dir {
        Direction::Fwd => vec![Out::Plain("x"), Out::Plain("y"), Out::Plain("scale"), Out::Angle("convergence", unit)],
        Direction::Inv => {
            vec![Out::Angle("phi", unit), Out::Angle("lam", unit), Out::Plain("scale"), Out::Angle("convergence", unit)]
        }
    };
    let mut sheet = Sheet::new(cols).with_ids_from(&t);
    for r in 0..t.rows.len() {
        let (g, xy) = match dir {
            Direction::Fwd => {
                let g = read_geodetic(&t, r, unit, "")?;
                (g, p.forward(&g)?)
            }
            Direction::Inv => {
                let xy = read_plane(&t, r, "")?;
                (p.inverse(&xy)?, xy)
            }
        };
        let (scale, conv) = (p.scale(&g)?, p.convergence(&g));
        let vals = match dir {
            Direction::Fwd => vec![xy.e, xy.n, scale, conv],
            Direction::Inv => vec![g.phi, g.lam, scale, conv],
        };
        sheet.push(id(&t, r), vals);
    }
    sheet.write(io.writer()?)
}

fn geodesic(io: &Io, unit: AngleUnit, mode: GeodesicMode, ell: &Ellipsoid, series: Series) -> Result<(), CliError> {
    let order = match series {
        Series::Converged => SeriesOrder::Converged,
        Series::Paper => SeriesOrder::Paper,
    };
    let t = read_table(io)?;
    let cols = match mode {
        GeodesicMode::Direct => vec![Out::Angle("phi2", unit), Out::Angle("lam2", unit), Out::Angle("az2", unit)],
        GeodesicMode::Inverse => vec![Out::Plain("s"), Out::Angle("az1", unit), Out::Angle("az2", unit)],
    };
    let mut sheet = Sheet::new(cols).with_ids_from(&t);
    for r in 0..t.rows.len() {
        let vals = match mode {
            GeodesicMode::Direct => {
                let p1 = read_geodetic(&t, r, unit, "")?;
                let az = t.angle(r, t.require("az")?, unit)?;
                let s = t.num(r, t.require("s")?)?;
                let sol = geodesic_direct_with(ell, &p1, az, s, order)?;
                vec![sol.phi2, Angle(sol.lam2).normalized_signed().radians(), sol.az2]
            }
            GeodesicMode::Inverse => {
                let p1 = read_geodetic(&t, r, unit, "1")?;
                let p2 = read_geodetic(&t, r, unit, "2")?;
                let sol = geodesic_inverse_with(ell, &p1, &p2, order)?;
                vec![sol.s, sol.az1, sol.az2]
            }
        };
        sheet.push(id(&t, r), vals);
    }
    sheet.write(io.writer()?)
}

fn reduce(io: &Io, wave: WaveArg, scale: f64, method: ReduceMethod, radius: Option<f64>) -> Result<(), CliError> {
    if !(scale > 0.0) {
        return Err(CliError::Usage("--scale must be positive".into()));
    }
    let t = read_table(io)?;
    let (cdp, cha, chb) = (t.require("dp")?, t.require("ha")?, t.require("hb")?);
    let cols = match method {
        ReduceMethod::Stepwise => ["c1", "c2", "dh", "c3", "d0", "c4", "de", "dr"].map(Out::Plain).into(),
        ReduceMethod::Rigorous => ["d0", "de", "dr"].map(Out::Plain).into(),
    };
    let mut sheet = Sheet::new(cols).with_ids_from(&t);
    for r in 0..t.rows.len() {
        let mut obs = DistanceObservation::new(t.num(r, cdp)?, t.num(r, cha)?, t.num(r, chb)?)?;
        if let Some(rad) = radius {
            obs = obs.with_radius(rad);
        }
        obs = match wave {
            WaveArg::None => obs,
            WaveArg::Light => obs.with_wave(Wave::Light),
            WaveArg::Micro => obs.with_wave(Wave::Micro),
        };
        let vals = match method {
            ReduceMethod::Stepwise => {
                let s = reduce_stepwise(&obs, scale)?;
                vec![s.c1, s.c2, s.dh_dist, s.c3, s.d0, s.c4, s.de, s.dr]
            }
            ReduceMethod::Rigorous => {
                let (d0, de, dr) = reduce_rigorous(&obs, scale)?;
                vec![d0, de, dr]
            }
        };
        sheet.push(id(&t, r), vals);
    }
    sheet.write(io.writer()?)
}

/// Burša-Wolf parameter file. `units` is "si" (radians, unitless scale) or
/// "arcsec-ppm" (rotations in arc seconds, scale in ppm).
#[derive(Deserialize)]
struct BwFile {
    tx: f64,
    ty: f64,
    tz: f64,
    m: f64,
    rx: f64,
    ry: f64,
    rz: f64,
    #[serde(default)]
    units: Option<String>,
}

impl BwFile {
    fn params(&self) -> Result<BursaWolfParams, CliError> {
        let (rot, scale) = match self.units.as_deref().unwrap_or("si") {
            "si" => (1.0, 1.0),
            "arcsec-ppm" => ((1.0f64 / 3600.0).to_radians(), 1e-6),
            other => return Err(CliError::Usage(format!("unknown parameter units '{other}'"))),
        };
        let p = BursaWolfParams {
            tx: self.tx,
            ty: self.ty,
            tz: self.tz,
            m_scale: self.m * scale,
            rx: self.rx * rot,
            ry: self.ry * rot,
            rz: self.rz * rot,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct HelmertFile {
    tx: f64,
    ty: f64,
    u: f64,
    v: f64,
}

fn bw_json(p: &BursaWolfParams) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    for (k, v) in ["tx", "ty", "tz", "m", "rx", "ry", "rz"].iter().zip(p.to_vector()) {
        m.insert(k.to_string(), num(v));
    }
    m.insert("units".into(), json!("si"));
    m
}

fn ecef_pairs(t: &Table) -> Result<Vec<(EcefCoord, EcefCoord)>, CliError> {
    (0..t.rows.len()).map(|r| Ok((read_ecef(t, r, "1")?, read_ecef(t, r, "2")?))).collect()
}

fn datum(io: &Io, unit: AngleUnit, op: DatumOp) -> Result<(), CliError> {
    match op {
        DatumOp::BwApply { params } => {
            let file: BwFile = serde_json::from_str(&read_to_string(&params)?).map_err(CliError::input)?;
            let p = file.params()?;
            let t = read_table(io)?;
            let mut sheet = Sheet::new(vec![Out::Plain("x"), Out::Plain("y"), Out::Plain("z")]).with_ids_from(&t);
            for r in 0..t.rows.len() {
                let q = bursa_wolf_apply(&p, &read_ecef(&t, r, "")?);
                sheet.push(id(&t, r), vec![q.x, q.y, q.z]);
            }
            sheet.write(io.writer()?)
        }
        DatumOp::BwFit => {
            let fit = bursa_wolf_estimate(&ecef_pairs(&read_table(io)?)?)?;
            let mut m = bw_json(&fit.params);
            m.insert("residuals".into(), nums(&fit.residuals));
            m.insert("s2".into(), num(fit.s2));
            m.insert("cov".into(), matrix(&fit.cov));
            write_json(io, &Value::Object(m))
        }
        DatumOp::BwDirect => {
            let p = bursa_wolf_direct(&ecef_pairs(&read_table(io)?)?)?;
            write_json(io, &Value::Object(bw_json(&p)))
        }
        DatumOp::Molodensky { from, to, t: shift, abridged } => {
            let (e1, e2) = (ellipsoid(&from)?, ellipsoid(&to)?);
            let tv = Vector3::from(triple(&shift, "--t")?);
            let t = read_table(io)?;
            let cols = vec![
                Out::Angle("phi", unit),
                Out::Angle("lam", unit),
                Out::Plain("he"),
                Out::Plain("dphi_arcsec"),
                Out::Plain("dlam_arcsec"),
                Out::Plain("dhe"),
            ];
            let mut sheet = Sheet::new(cols).with_ids_from(&t);
            let arcsec = (1.0f64 / 3600.0).to_radians();
            for r in 0..t.rows.len() {
                let g = read_geodetic(&t, r, unit, "")?;
                let (dphi, dlam, dhe) =
                    if abridged { molodensky_abridged(&e1, &e2, &g, tv) } else { molodensky_standard(&e1, &e2, &g, tv) };
                sheet.push(id(&t, r), vec![g.phi + dphi * arcsec, g.lam + dlam * arcsec, g.he + dhe, dphi, dlam, dhe]);
            }
            sheet.write(io.writer()?)
        }
        DatumOp::Helmert2dFit => {
            let t = read_table(io)?;
            let pairs: Vec<_> =
                (0..t.rows.len()).map(|r| Ok((read_plane(&t, r, "1")?, read_plane(&t, r, "2")?))).collect::<Result<_, CliError>>()?;
            let fit = helmert2d_estimate(&pairs)?;
            let p = fit.params;
            write_json(
                io,
                &json!({
                    "tx": num(p.tx), "ty": num(p.ty), "u": num(p.u), "v": num(p.v),
                    "scale": num(p.scale()),
                    "rotation": num(p.rotation() / unit.radians_per_unit()),
                    "angle_unit": unit.tag(),
                    "residuals": nums(&fit.residuals),
                    "s2": num(fit.s2),
                    "cov": matrix(&fit.cov),
                }),
            )
        }
        DatumOp::Helmert2dApply { params } => {
            let f: HelmertFile = serde_json::from_str(&read_to_string(&params)?).map_err(CliError::input)?;
            let p = Helmert2DParams::new(f.tx, f.ty, f.u, f.v)?;
            let t = read_table(io)?;
            let mut sheet = Sheet::new(vec![Out::Plain("x"), Out::Plain("y")]).with_ids_from(&t);
            for r in 0..t.rows.len() {
                let q = helmert2d_apply(&p, &read_plane(&t, r, "")?);
                sheet.push(id(&t, r), vec![q.e, q.n]);
            }
            sheet.write(io.writer()?)
        }
    }
}

/// Linear system A·X = L + V with diagonal weights p or standard deviations sigma.
#[derive(Deserialize)]
struct LinearFile {
    a: Vec<Vec<f64>>,
    l: Vec<f64>,
    #[serde(default)]
    p: Option<Vec<f64>>,
    #[serde(default)]
    sigma: Option<Vec<f64>>,
}

fn adjustment_json(res: &AdjustmentResult, x: Value, v: Value, iterations: usize) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("x".into(), x);
    m.insert("v".into(), v);
    m.insert("s2".into(), res.s2.map_or(Value::Null, num));
    m.insert("cov".into(), res.cov_x.as_ref().map_or(Value::Null, matrix));
    m.insert("iterations".into(), json!(iterations));
    m
}

fn adjust(io: &Io, unit: AngleUnit, args: AdjustArgs) -> Result<(), CliError> {
    if let (Some(obs), Some(points)) = (&args.obs, &args.points) {
        return adjust_network(io, unit, &args, obs, points);
    }
    let text = match &args.linear {
        Some(p) => read_to_string(p)?,
        None => {
            let mut s = String::new();
            io.reader()?.read_to_string(&mut s).map_err(CliError::io)?;
            s
        }
    };
    let f: LinearFile = serde_json::from_str(&text).map_err(CliError::input)?;
    let (n, r) = (f.a.len(), f.a.first().map_or(0, Vec::len));
    if f.a.iter().any(|row| row.len() != r) {
        return Err(CliError::Usage("rows of 'a' differ in length".into()));
    }
    let a = DMatrix::from_row_iterator(n, r, f.a.iter().flatten().copied());
    let p = match (f.p, f.sigma) {
        (Some(p), None) => Weights::Diagonal(DVector::from_vec(p)),
        (None, Some(s)) => Weights::from_sigmas(&s)?,
        (None, None) => Weights::identity(n),
        (Some(_), Some(_)) => return Err(CliError::Usage("give either 'p' or 'sigma', not both".into())),
    };
    let sys = LinearSystem::from_observations(a, DVector::from_vec(f.l), p)?;
    let res = solve_linear(&sys)?;
    let m = adjustment_json(&res, nums(res.x_bar.iter()), nums(res.v.iter()), 1);
    write_json(io, &Value::Object(m))
}

fn parse_bool(s: &str) -> Result<bool, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Ok(false),
        "1" | "true" | "yes" => Ok(true),
        other => Err(CliError::Usage(format!("'{other}' is not a boolean"))),
    }
}

fn adjust_network(io: &Io, unit: AngleUnit, args: &AdjustArgs, obs: &PathBuf, points: &PathBuf) -> Result<(), CliError> {
    let pt = Table::read(open(points)?)?;
    let (cid, cx, cy) = (pt.require_any(&["id", "point"])?, pt.require_any(&["x0", "x"])?, pt.require_any(&["y0", "y"])?);
    let (cz, cfix) = (pt.index("z0").or(pt.index("z")), pt.index("fixed"));
    let mut pts = vec![];
    for r in 0..pt.rows.len() {
        pts.push(NetworkPoint {
            id: pt.text(r, cid).to_string(),
            x: pt.num(r, cx)?,
            y: pt.num(r, cy)?,
            z: cz.map(|c| pt.num(r, c)).transpose()?.unwrap_or(0.0),
            fixed: cfix.map(|c| parse_bool(pt.text(r, c))).transpose()?.unwrap_or(false),
        });
    }

    let ot = Table::read(open(obs)?)?;
    let (ckind, cfrom, cto, cval, csig) =
        (ot.require("kind")?, ot.require("from")?, ot.require("to")?, ot.require("value")?, ot.require("sigma")?);
    let (cset, cdist) = (ot.index("set_id"), ot.index("dist_km"));
    let dir_unit = ot.angle_unit(cval, unit)?.radians_per_unit();
    let mut observations = vec![];
    for r in 0..ot.rows.len() {
        let kind: ObsKind = serde_json::from_value(json!(ot.text(r, ckind).to_ascii_lowercase()))
            .map_err(|_| CliError::Usage(format!("row {}: unknown observation kind '{}'", r + 1, ot.text(r, ckind))))?;
        let scale = if kind == ObsKind::Direction { dir_unit } else { 1.0 };
        let opt_text = |c: Option<usize>| c.map(|c| ot.text(r, c)).filter(|s| !s.is_empty());
        observations.push(Observation {
            kind,
            from: ot.text(r, cfrom).to_string(),
            to: ot.text(r, cto).to_string(),
            value: ot.num(r, cval)? * scale,
            sigma: ot.num(r, csig)? * scale,
            set_id: opt_text(cset).map(str::to_string),
            dist_km: match opt_text(cdist) {
                Some(_) => Some(ot.num(r, cdist.expect("present"))?),
                None => None,
            },
        });
    }

    let mut net = Network::new(pts, observations)?;
    net.metric_directions = !args.angular_directions;
    let max_iter = if args.nonlinear { args.max_iter } else { 1 };
    let res = net.adjust(max_iter, args.tol)?;

    let by_id: BTreeMap<&str, &NetworkPoint> = res.points.iter().map(|p| (p.id.as_str(), p)).collect();
    let rpu = unit.radians_per_unit();
    let x: Vec<f64> = res
        .unknowns
        .iter()
        .map(|u| match u {
            Unknown::X(p) => by_id[p.as_str()].x,
            Unknown::Y(p) => by_id[p.as_str()].y,
            Unknown::Z(p) => by_id[p.as_str()].z,
            Unknown::Orientation(s, set) => res.orientations[&(s.clone(), set.clone())] / rpu,
        })
        .collect();
    let v: Vec<f64> = net
        .observations
        .iter()
        .zip(&res.residuals)
        .map(|(o, v)| if o.kind == ObsKind::Direction { v / rpu } else { *v })
        .collect();
    let mut m = adjustment_json(&res.adjustment, nums(&x), nums(&v), res.iterations);
    m.insert("unknowns".into(), json!(res.unknowns.iter().map(ToString::to_string).collect::<Vec<_>>()));
    m.insert("angle_unit".into(), json!(unit.tag()));
    m.insert(
        "points".into(),
        Value::Array(
            res.points
                .iter()
                .map(|p| json!({"id": p.id, "x": num(p.x), "y": num(p.y), "z": num(p.z), "fixed": p.fixed}))
                .collect(),
        ),
    );
    write_json(io, &Value::Object(m))
}

fn orbit(io: &Io, unit: AngleUnit, op: OrbitOp) -> Result<(), CliError> {
    let OrbitOp::Propagate { elements, epochs, frame, gst0 } = op;
    let mut el: OrbitalElements = serde_json::from_str(&read_to_string(&elements)?).map_err(CliError::input)?;
    let rpu = unit.radians_per_unit();
    el.i *= rpu;
    el.raan *= rpu;
    el.argp *= rpu;
    el.validate()?;
    let times: Vec<f64> = epochs
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage("--epochs must be comma-separated seconds".into()))?;
    let cols = match frame {
        OrbitFrame::Eci => ["t", "x", "y", "z", "vx", "vy", "vz"].map(Out::Plain).into(),
        OrbitFrame::Ecef => vec![Out::Plain("t"), Out::Plain("x"), Out::Plain("y"), Out::Plain("z"), Out::Angle("gst", AngleUnit::Hour)],
    };
    let mut sheet = Sheet::new(cols);
    for t in times {
        let (r, v) = state_eci(&el, t)?;
        let vals = match frame {
            OrbitFrame::Eci => vec![t, r.x, r.y, r.z, v.x, v.y, v.z],
            OrbitFrame::Ecef => {
                let gst = gst_from_ut(t / 3600.0, gst0);
                let p = eci_to_ecef(&r, gst);
                vec![t, p.x, p.y, p.z, gst]
            }
        };
        sheet.push(None, vals);
    }
    sheet.write(io.writer()?)
}

fn dop(io: &Io, unit: AngleUnit, receiver: &str, ell: &Ellipsoid) -> Result<(), CliError> {
    let [phi, lam, he] = triple(receiver, "--receiver")?;
    let rpu = unit.radians_per_unit();
    let rx = GeodeticCoord::new(phi * rpu, lam * rpu, he);
    let t = read_table(io)?;
    let sats: Vec<EcefCoord> = (0..t.rows.len()).map(|r| read_ecef(&t, r, "")).collect::<Result<_, _>>()?;
    let d = geodesy_core::adjust::dop(ell, &sats, &rx)?;
    let mut sheet = Sheet::new(["gdop", "pdop", "tdop", "hdop", "vdop"].map(Out::Plain).into());
    sheet.push(None, vec![d.gdop, d.pdop, d.tdop, d.hdop, d.vdop]);
    sheet.write(io.writer()?)
}

fn heights(io: &Io, system: HeightSystem, phi_start: f64, phi_end: f64, h_mean: f64) -> Result<(), CliError> {
    let t = read_table(io)?;
    let (cg, cdh) = (t.require("g_gal")?, t.require("dh_m")?);
    let segments = (0..t.rows.len()).map(|r| Ok((t.num(r, cg)?, t.num(r, cdh)?))).collect::<Result<Vec<_>, CliError>>()?;
    let line = LevelLine::new(segments, phi_start, phi_end, h_mean)?;
    let h = match system {
        HeightSystem::Ortho => orthometric_height(&line),
        HeightSystem::Normal => normal_height(&line, line.phi_mean(), line.sum_dh())?,
        HeightSystem::Dynamic => dynamic_height(&line),
    };
    let mut sheet = Sheet::new(["sum_dh", "c_gpu", "h"].map(Out::Plain).into());
    sheet.push(None, vec![line.sum_dh(), geopotential_number(&line), h]);
    sheet.write(io.writer()?)
}

fn astro(io: &Io, unit: AngleUnit, op: AstroOp) -> Result<(), CliError> {
    let t = read_table(io)?;
    let hour = AngleUnit::Hour;
    let cols = match op {
        AstroOp::Triangle => vec![
            Out::Angle("a", unit),
            Out::Angle("angle_b", unit),
            Out::Angle("angle_c", unit),
            Out::Angle("excess", unit),
        ],
        AstroOp::Cassini => vec![Out::Angle("l", unit), Out::Angle("h", unit)],
        AstroOp::CassiniInv => vec![Out::Angle("phi", unit), Out::Angle("lam", unit)],
        AstroOp::HourAngle => vec![Out::Angle("ah", hour)],
        AstroOp::Sidereal => vec![Out::Angle("hsl", hour)],
    };
    let mut sheet = Sheet::new(cols).with_ids_from(&t);
    for r in 0..t.rows.len() {
        let ang = |name: &str, default: AngleUnit| -> Result<f64, CliError> { t.angle(r, t.require(name)?, default) };
        let vals = match op {
            AstroOp::Triangle => {
                let tri = solve_triangle_sas(ang("b", unit)?, ang("c", unit)?, ang("angle_a", unit)?)?;
                vec![tri.a, tri.big_b, tri.big_c, tri.excess()]
            }
            AstroOp::Cassini => {
                let (l, h) = cassini_soldner_sphere(ang("phi", unit)?, ang("lam", unit)?)?;
                vec![l, h]
            }
            AstroOp::CassiniInv => {
                let (phi, lam) = cassini_soldner_sphere_inverse(ang("l", unit)?, ang("h", unit)?);
                vec![phi, lam]
            }
            AstroOp::HourAngle => vec![hour_angle(Angle(ang("hsl", hour)?), Angle(ang("alpha", hour)?)).radians()],
            AstroOp::Sidereal => {
                let tu = t.num(r, t.require("tu")?)?;
                let hsl = sidereal_from_universal(tu, Angle(ang("hsg0", hour)?), Angle(ang("lam", unit)?))?;
                vec![hsl.radians()]
            }
        };
        sheet.push(id(&t, r), vals);
    }
    sheet.write(io.writer()?)
}
