//! CSV tables with unit-tagged headers and the fixed output number format.

use std::io::{Read, Write};

use geodesy_core::angle::AngleUnit;

use crate::CliError;

/// Significant digits of every printed number.
pub const SIG_DIGITS: i32 = 12;

/// Columns copied through to the output when present.
const ID_COLUMNS: [&str; 4] = ["id", "name", "station", "point"];

/// Formats with [`SIG_DIGITS`] significant digits, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let s = if (-5..15).contains(&exp) {
        let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `x` rounded the way [`fmt_num`] prints it; keeps JSON output in the same format.
pub fn round_sig(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

pub struct Column {
    pub name: String,
    pub unit: Option<String>,
}

/// Splits "phi[gr]" into ("phi", Some("gr")).
fn parse_header(h: &str) -> Column {
    let h = h.trim();
    match h.strip_suffix(']').and_then(|s| s.split_once('[')) {
        Some((name, unit)) => Column { name: name.trim().to_ascii_lowercase(), unit: Some(unit.trim().to_string()) },
        None => Column { name: h.to_ascii_lowercase(), unit: None },
    }
}

pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(src: impl Read) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(src);
        let columns = rdr.headers().map_err(CliError::input)?.iter().map(parse_header).collect();
        let mut rows = vec![];
        for rec in rdr.records() {
            let rec = rec.map_err(CliError::input)?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Table { columns, rows })
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize, CliError> {
        self.index(name).ok_or_else(|| CliError::Usage(format!("input lacks a '{name}' column")))
    }

    /// Index of the first present column among `names`.
    pub fn require_any(&self, names: &[&str]) -> Result<usize, CliError> {
        names
            .iter()
            .find_map(|n| self.index(n))
            .ok_or_else(|| CliError::Usage(format!("input lacks a '{}' column", names[0])))
    }

    pub fn id_column(&self) -> Option<usize> {
        ID_COLUMNS.iter().find_map(|n| self.index(n))
    }

    pub fn num(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let cell = self.rows[row].get(col).map(String::as_str).unwrap_or("");
        cell.parse::<f64>().map_err(|_| {
            CliError::Usage(format!("row {}: '{}' is not a number in column '{}'", row + 1, cell, self.columns[col].name))
        })
    }

    pub fn text(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).map(String::as_str).unwrap_or("")
    }

    /// Unit of an angle column: the header tag, else `default`.
    pub fn angle_unit(&self, col: usize, default: AngleUnit) -> Result<AngleUnit, CliError> {
        match &self.columns[col].unit {
            Some(tag) => tag.parse().map_err(CliError::Geo),
            None => Ok(default),
        }
    }

    /// Angle cell in radians.
    pub fn angle(&self, row: usize, col: usize, default: AngleUnit) -> Result<f64, CliError> {
        Ok(self.num(row, col)? * self.angle_unit(col, default)?.radians_per_unit())
    }
}

/// Output column: plain or carrying an angle unit.
pub enum Out {
    Plain(&'static str),
    Angle(&'static str, AngleUnit),
}

impl Out {
    fn header(&self) -> String {
        match self {
            Out::Plain(n) => n.to_string(),
            Out::Angle(n, u) => format!("{n}[{}]", u.tag()),
        }
    }

    /// Converts a library value (radians for angles) to the printed unit.
    fn value(&self, x: f64) -> f64 {
        match self {
            Out::Plain(_) => x,
            Out::Angle(_, u) => x / u.radians_per_unit(),
        }
    }
}

/// Collects rows and writes them once every row has succeeded.
pub struct Sheet {
    id_header: Option<String>,
    columns: Vec<Out>,
    rows: Vec<(Option<String>, Vec<f64>)>,
}

impl Sheet {
    pub fn new(columns: Vec<Out>) -> Self {
        Sheet { id_header: None, columns, rows: vec![] }
    }

    /// Mirrors the input's id column, if it has one.
    pub fn with_ids_from(mut self, table: &Table) -> Self {
        self.id_header = table.id_column().map(|i| table.columns[i].name.clone());
        self
    }

    pub fn push(&mut self, id: Option<&str>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((id.map(str::to_string), values));
    }

    pub fn write(&self, out: impl Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.id_header.iter().cloned().collect();
        header.extend(self.columns.iter().map(Out::header));
        w.write_record(&header).map_err(CliError::io)?;
        for (id, vals) in &self.rows {
            let mut rec: Vec<String> = vec![];
            if self.id_header.is_some() {
                rec.push(id.clone().unwrap_or_default());
            }
            rec.extend(self.columns.iter().zip(vals).map(|(c, v)| fmt_num(c.value(*v))));
            w.write_record(&rec).map_err(CliError::io)?;
        }
        w.flush().map_err(CliError::io)?;
        Ok(())
    }
}
