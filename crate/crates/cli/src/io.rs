//! JSON file formats.
//!
//! A matrix file holds `field` (`"real"` or `"complex"`), `rows`, `cols` and
//! row-major `data`. Real entries are plain numbers and complex entries are
//! `[re, im]` pairs:
//!
//! ```json
//! {"field":"real","rows":1,"cols":2,"data":[[1.0000000000000000e0,-5.0000000000000000e-1]]}
//! ```
//!
//! Numbers are written with 17 significant digits, so reading a file and
//! writing it back reproduces it byte for byte.

use std::io::{self, Write};
use std::path::Path;

use grasskit::{Field, Matrix, C64};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

// serde_json would silently write NaN and infinities as `null`.
impl Serialize for Entry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let finite = match self {
            Entry::Real(x) => x.is_finite(),
            Entry::Complex([re, im]) => re.is_finite() && im.is_finite(),
        };
        if !finite {
            return Err(serde::ser::Error::custom("NaN or infinity cannot be written"));
        }
        match self {
            Entry::Real(x) => s.serialize_f64(*x),
            Entry::Complex(z) => z.serialize(s),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub field: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<Entry>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablePair {
    pub input: MatrixFile,
    pub output: MatrixFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleTableFile {
    pub d: usize,
    pub n: usize,
    pub field: String,
    pub pairs: Vec<TablePair>,
}

pub fn parse_field(s: &str) -> Result<Field, CliError> {
    match s {
        "real" => Ok(Field::Real),
        "complex" => Ok(Field::Complex),
        other => Err(CliError::Parse(format!("unknown field '{other}'"))),
    }
}

impl MatrixFile {
    pub fn from_matrix(m: &Matrix) -> Self {
        let data = (0..m.rows())
            .map(|i| {
                (0..m.cols())
                    .map(|j| {
                        let z = m.get(i, j);
                        match m.field() {
                            Field::Real => Entry::Real(z.re),
                            Field::Complex => Entry::Complex([z.re, z.im]),
                        }
                    })
                    .collect()
            })
            .collect();
        MatrixFile { field: m.field().to_string(), rows: m.rows(), cols: m.cols(), data }
    }

    pub fn to_matrix(&self) -> Result<Matrix, CliError> {
        let field = parse_field(&self.field)?;
        if self.data.len() != self.rows || self.data.iter().any(|row| row.len() != self.cols) {
            return Err(CliError::Parse(format!("data does not have shape {}x{}", self.rows, self.cols)));
        }
        let mut entries = Vec::with_capacity(self.rows * self.cols);
        for e in self.data.iter().flatten() {
            let z = match (field, e) {
                (Field::Real, Entry::Real(x)) => C64::new(*x, 0.0),
                (Field::Complex, Entry::Complex([re, im])) => C64::new(*re, *im),
                _ => return Err(CliError::Parse(format!("entry {e:?} does not match field '{}'", self.field))),
            };
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(CliError::Parse("non-finite entry".into()));
            }
            entries.push(z);
        }
        Ok(Matrix::from_row_slice(field, self.rows, self.cols, &entries))
    }
}

/// Compact JSON with every float as `{:.16e}`.
struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    value.serialize(&mut ser).map_err(|e| CliError::Invalid(format!("cannot serialize: {e}")))?;
    // The formatter only ever emits ASCII.
    Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = to_json(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), CliError> {
    write_json(path, &MatrixFile::from_matrix(m))
}
