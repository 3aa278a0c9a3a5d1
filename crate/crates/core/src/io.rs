//! CSV datasets and JSON documents with round-trip-exact reals.
//!
//! Every real is written as `{:.16e}`, i.e. 17 significant digits, which is enough
//! for any `f64` to parse back to the identical bit pattern.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::dataset::{Dataset, LabeledPoint};
use crate::error::{Error, Result};
use crate::network::{KReluNet, Network, TwoReluNet};

/// Formats one real with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Whether a CSV file starts with a header row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Header {
    Present,
    Absent,
    /// Treat the first row as a header iff it does not parse as numbers.
    #[default]
    Auto,
}

impl From<bool> for Header {
    fn from(b: bool) -> Self {
        if b {
            Header::Present
        } else {
            Header::Absent
        }
    }
}

fn parse_row(rec: &csv::StringRecord) -> Option<Vec<f64>> {
    rec.iter().map(|s| s.trim().parse::<f64>().ok()).collect()
}

/// Reads rows `x_1,...,x_d,y`.
pub fn read_dataset_csv<R: Read>(reader: R, header: Header) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|s| s.is_empty()) {
            continue;
        }
        let row = parse_row(&rec);
        if line == 0 {
            match header {
                Header::Present => continue,
                Header::Auto if row.is_none() => continue,
                _ => {}
            }
        }
        let mut row = row.ok_or_else(|| Error::Parse(format!("row {}: not numeric", line + 1)))?;
        if row.len() < 2 {
            return Err(Error::Parse(format!(
                "row {}: need at least one coordinate and a label",
                line + 1
            )));
        }
        let y = row.pop().unwrap_or_default();
        points.push(LabeledPoint::new(row, y));
    }
    Dataset::new(points)
}

pub fn write_dataset_csv<W: Write>(writer: W, data: &Dataset, header: bool) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    if header {
        let mut names: Vec<String> = (1..=data.dim()).map(|k| format!("x_{k}")).collect();
        names.push("y".into());
        wtr.write_record(&names)?;
    }
    for p in data.points() {
        let mut row: Vec<String> = p.x.iter().map(|v| format_real(*v)).collect();
        row.push(format_real(p.y));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>, header: Header) -> Result<Dataset> {
    read_dataset_csv(BufReader::new(File::open(path)?), header)
}

pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset, header: bool) -> Result<()> {
    write_dataset_csv(BufWriter::new(File::create(path)?), data, header)
}

/// Pretty JSON that prints reals with 17 significant digits.
struct ExactFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, ExactFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    Ok(())
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_json(&mut buf, value)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn save_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_json(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Either network shape, as found in a network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyNet {
    Two(TwoReluNet),
    K(KReluNet),
}

impl AnyNet {
    pub fn node_count(&self) -> usize {
        match self {
            AnyNet::Two(_) => 2,
            AnyNet::K(n) => n.node_count(),
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        match self {
            AnyNet::Two(n) => n.check_shape(),
            AnyNet::K(n) => n.check_shape(),
        }
    }
}

impl Network for AnyNet {
    fn input_dim(&self) -> usize {
        match self {
            AnyNet::Two(n) => n.input_dim(),
            AnyNet::K(n) => n.input_dim(),
        }
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            AnyNet::Two(n) => n.eval_unchecked(x),
            AnyNet::K(n) => n.eval_unchecked(x),
        }
    }
}
