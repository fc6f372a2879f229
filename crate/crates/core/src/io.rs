//! Result files: CSV tables, JSON documents and grid fields (raw
//! little-endian binary with a JSON sidecar, or CSV with a shape header).
//! Floats are always written with 17 significant digits.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::grid::{Geometry, Grid};

/// `x` with 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
/// Negative zero prints as zero.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: &[Vec<Cell>]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "row width differs from header"));
        }
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_float(value))
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

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> io::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub fn write_json<P: AsRef<Path>, T: Serialize + ?Sized>(path: P, value: &T) -> io::Result<()> {
    std::fs::write(path, to_json_string(value)?)
}

/// Sidecar describing a binary field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub shape: Vec<usize>,
    pub spacing: f64,
    pub origin: f64,
    pub geometry: Geometry,
    /// Always `complex128-le`: interleaved `(re, im)` little-endian f64.
    pub dtype: String,
    /// Always `row-major`, last axis fastest.
    pub layout: String,
    pub data_file: String,
}

impl FieldMeta {
    pub fn grid(&self) -> io::Result<Grid> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let dim = self.shape.len();
        if !(dim == 2 || dim == 3) || self.shape.iter().any(|&n| n != self.shape[0] || n < 2) {
            return Err(bad("field shape must be n×n or n×n×n"));
        }
        Ok(match self.geometry {
            Geometry::Torus => Grid::torus(dim, self.shape[0]),
            Geometry::Box { half_width } => Grid::centered_box(dim, self.shape[0], half_width),
        })
    }
}

/// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
pub fn write_field_binary<P: AsRef<Path>>(stem: P, grid: &Grid, phi: &[Complex64]) -> io::Result<(PathBuf, PathBuf)> {
    if phi.len() != grid.len() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "field does not match grid"));
    }
    let stem = stem.as_ref();
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let mut out = BufWriter::new(File::create(&bin)?);
    for z in phi {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    let meta = FieldMeta {
        shape: grid.shape(),
        spacing: grid.spacing(),
        origin: grid.origin(),
        geometry: grid.geometry,
        dtype: "complex128-le".into(),
        layout: "row-major".into(),
        data_file: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    write_json(&json, &meta)?;
    Ok((bin, json))
}

/// Reads a field through its JSON sidecar.
pub fn read_field_binary<P: AsRef<Path>>(sidecar: P) -> io::Result<(FieldMeta, Vec<Complex64>)> {
    let sidecar = sidecar.as_ref();
    let meta: FieldMeta = serde_json::from_reader(BufReader::new(File::open(sidecar)?))?;
    let len: usize = meta.shape.iter().product();
    let data = sidecar.with_file_name(&meta.data_file);
    let mut bytes = Vec::with_capacity(16 * len);
    File::open(data)?.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * len {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "binary size does not match shape"));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let phi = bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok((meta, phi))
}

/// Flattened CSV (`re,im` per row, row-major) behind a `# shape=...` line.
pub fn write_field_csv<P: AsRef<Path>>(path: P, grid: &Grid, phi: &[Complex64]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let shape: Vec<String> = grid.shape().iter().map(|n| n.to_string()).collect();
    writeln!(
        out,
        "# shape={} spacing={} origin={}",
        shape.join("x"),
        format_float(grid.spacing()),
        format_float(grid.origin())
    )?;
    writeln!(out, "re,im")?;
    for z in phi {
        writeln!(out, "{},{}", format_float(z.re), format_float(z.im))?;
    }
    out.flush()
}

/// Reads the values written by [`write_field_csv`], returning the shape.
pub fn read_field_csv<P: AsRef<Path>>(path: P) -> io::Result<(Vec<usize>, Vec<Complex64>)> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let shape_txt = first
        .strip_prefix("# shape=")
        .and_then(|s| s.split_whitespace().next())
        .ok_or_else(|| bad("missing shape header".into()))?;
    let shape = shape_txt
        .split('x')
        .map(|s| s.parse::<usize>().map_err(|e| bad(e.to_string())))
        .collect::<io::Result<Vec<_>>>()?;
    lines.next();
    let mut phi = Vec::new();
    for line in lines {
        let line = line?;
        let (re, im) = line.split_once(',').ok_or_else(|| bad(format!("bad row {line}")))?;
        let p = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(e.to_string()));
        phi.push(Complex64::new(p(re)?, p(im)?));
    }
    Ok((shape, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn json_uses_seventeen_digits() {
        let s = to_json_string(&serde_json::json!({"x": 0.5, "n": 3})).unwrap();
        assert!(s.contains("5.0000000000000000e-1"));
        assert!(s.contains("\"n\": 3"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.5));
    }
}
