//! `geodesy`: batch frontend over CSV and JSON files.
//!
//! Exit codes: 0 on success, 2 on usage or input errors, 3 when a numerical
//! routine fails (the error name goes to stderr).

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod table;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geodesy_core::angle::AngleUnit;
use geodesy_core::GeoError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Geo(GeoError),
}

impl CliError {
    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Geo(e) if e.is_input_error() => 2,
            CliError::Geo(_) => 3,
        }
    }

    fn diagnosis(&self) -> String {
        match self {
            CliError::Usage(m) => format!("error: {m}"),
            CliError::Geo(e) => format!("error: {}: {e}", e.name()),
        }
    }
}

impl From<GeoError> for CliError {
    fn from(e: GeoError) -> Self {
        CliError::Geo(e)
    }
}

fn parse_unit(s: &str) -> Result<AngleUnit, String> {
    s.parse().map_err(|e: GeoError| e.to_string())
}

#[derive(Parser)]
#[command(name = "geodesy", version, about = "Geodetic computations over CSV and JSON files")]
pub struct Cli {
    /// Print the ellipsoid registry and exit.
    #[arg(long)]
    list_ellipsoids: bool,
    /// Print the projection presets and exit.
    #[arg(long)]
    list_projections: bool,
    /// Unit of untagged angle columns and of angle options (gr, deg, rad, dmgr).
    #[arg(long, global = true, default_value = "gr", value_parser = parse_unit)]
    angle_unit: AngleUnit,
    /// Input file; standard input when absent.
    #[arg(short, long, global = true)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Frame {
    Geodetic,
    Ecef,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Direction {
    Fwd,
    Inv,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GeodesicMode {
    Direct,
    Inverse,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Series {
    Converged,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum WaveArg {
    None,
    Light,
    Micro,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ReduceMethod {
    Stepwise,
    Rigorous,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OrbitFrame {
    Eci,
    Ecef,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum HeightSystem {
    Ortho,
    Normal,
    Dynamic,
}

#[derive(Subcommand)]
pub enum Command {
    /// Geodetic ↔ Earth-centred Cartesian coordinates. Columns phi,lam,he or x,y,z.
    Convert {
        #[arg(long)]
        from: Frame,
        #[arg(long)]
        to: Frame,
        #[arg(long, default_value = "grs80")]
        ell: String,
    },
    /// Lambert or UTM. fwd reads phi,lam; inv reads x,y.
    Project {
        direction: Direction,
        /// Preset name (see --list-projections), a JSON file or inline JSON.
        #[arg(long)]
        proj: String,
        /// Replaces the preset's ellipsoid.
        #[arg(long)]
        ell: Option<String>,
    },
    /// direct reads phi,lam,az,s; inverse reads phi1,lam1,phi2,lam2.
    Geodesic {
        mode: GeodesicMode,
        #[arg(long, default_value = "grs80")]
        ell: String,
        #[arg(long, value_enum, default_value = "converged")]
        series: Series,
    },
    /// Slope distance to plane distance. Columns dp,ha,hb in metres.
    Reduce {
        #[arg(long, value_enum, default_value = "none")]
        wave: WaveArg,
        /// Projection scale factor applied last.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, value_enum, default_value = "stepwise")]
        method: ReduceMethod,
        /// Mean Earth radius, m.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Datum transformations.
    Datum {
        #[command(subcommand)]
        op: DatumOp,
    },
    /// Least-squares adjustment of a network or of a linear system.
    Adjust(AdjustArgs),
    /// Keplerian orbits.
    Orbit {
        #[command(subcommand)]
        op: OrbitOp,
    },
    /// Dilution of precision for satellites x,y,z seen from a receiver.
    Dop {
        /// Receiver "phi,lam,he"; angles in --angle-unit.
        #[arg(long, allow_hyphen_values = true)]
        receiver: String,
        #[arg(long, default_value = "wgs84")]
        ell: String,
    },
    /// Heights of a leveling line. Columns station,g_gal,dh_m.
    Heights {
        system: HeightSystem,
        /// Latitude of the first station, in --angle-unit.
        #[arg(long, allow_hyphen_values = true)]
        phi_start: f64,
        /// Latitude of the last station; defaults to the first.
        #[arg(long, allow_hyphen_values = true)]
        phi_end: Option<f64>,
        /// Mean height of the line, m (orthometric correction).
        #[arg(long, default_value_t = 0.0)]
        h_mean: f64,
    },
    /// Spherical trigonometry and sidereal time.
    Astro {
        #[command(subcommand)]
        op: AstroOp,
    },
}

#[derive(Subcommand)]
pub enum DatumOp {
    /// Burša-Wolf transform of x,y,z with a parameter file.
    BwApply {
        #[arg(long)]
        params: PathBuf,
    },
    /// Least-squares Burša-Wolf fit on pairs name,x1,y1,z1,x2,y2,z2.
    BwFit,
    /// Burša-Wolf from the first nonsingular point triple.
    BwDirect,
    /// Molodensky shift of phi,lam,he between two ellipsoids.
    Molodensky {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Translation "tx,ty,tz" in metres.
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long)]
        abridged: bool,
    },
    /// Plane similarity fit on pairs name,x1,y1,x2,y2.
    Helmert2dFit,
    /// Plane similarity applied to x,y.
    Helmert2dApply {
        #[arg(long)]
        params: PathBuf,
    },
}

#[derive(Args)]
pub struct AdjustArgs {
    /// Observations CSV: kind,from,to,value,sigma,set_id,dist_km.
    #[arg(long, requires = "points", conflicts_with = "linear")]
    obs: Option<PathBuf>,
    /// Points CSV: id,x0,y0[,z0],fixed.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Linear system JSON {a, l, p | sigma}; also read from --input.
    #[arg(long)]
    linear: Option<PathBuf>,
    /// Iterate the linearisation to convergence instead of a single pass.
    #[arg(long)]
    nonlinear: bool,
    /// Keep direction rows in angle units instead of scaling them to metres.
    #[arg(long)]
    angular_directions: bool,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    /// Largest coordinate step, m, that ends the iteration.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Subcommand)]
pub enum OrbitOp {
    /// Positions at the given epochs (seconds since 0h UT).
    Propagate {
        /// Elements JSON {a, e, i, Omega, omega, t0, mu}; angles in --angle-unit.
        #[arg(long)]
        elements: PathBuf,
        /// Comma-separated epochs in seconds.
        #[arg(long, allow_hyphen_values = true)]
        epochs: String,
        #[arg(long, value_enum, default_value = "eci")]
        frame: OrbitFrame,
        /// Greenwich sidereal time at 0h UT, hours.
        #[arg(long, default_value_t = 0.0)]
        gst0: f64,
    },
}

#[derive(Subcommand)]
pub enum AstroOp {
    /// Two sides and the included angle: columns b,c,a_angle.
    Triangle,
    /// Cassini-Soldner on the unit sphere: phi,lam → l,h.
    Cassini,
    /// Inverse Cassini-Soldner: l,h → phi,lam.
    CassiniInv,
    /// Hour angle from local sidereal time and right ascension: hsl,alpha (hours).
    HourAngle,
    /// Local sidereal time from tu (hours), hsg0 (hours) and lam.
    Sidereal,
}

pub struct Io {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Io {
    pub fn reader(&self) -> Result<Box<dyn Read>, CliError> {
        match &self.input {
            Some(p) => open(p).map(|f| Box::new(f) as Box<dyn Read>),
            None => Ok(Box::new(io::stdin().lock())),
        }
    }

    pub fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        match &self.output {
            Some(p) => {
                let f = File::create(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                Ok(Box::new(BufWriter::new(f)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }
}

pub fn open(p: &PathBuf) -> Result<BufReader<File>, CliError> {
    File::open(p).map(BufReader::new).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

pub fn read_to_string(p: &PathBuf) -> Result<String, CliError> {
    let mut s = String::new();
    open(p)?.read_to_string(&mut s).map_err(CliError::io)?;
    Ok(s)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let io = Io { input: cli.input, output: cli.output };
    if cli.list_ellipsoids {
        return commands::list_ellipsoids(&io);
    }
    if cli.list_projections {
        return commands::list_projections(&io);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage("no subcommand given (try --help)".into()));
    };
    commands::dispatch(command, cli.angle_unit, &io)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: bad arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnosis());
            ExitCode::from(e.exit_code())
        }
    }
}
