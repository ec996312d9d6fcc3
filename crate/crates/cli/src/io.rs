//! File formats: matrices (JSON, CSV), wavefunctions (CSV, binary snapshots)
//! and atomic output directories.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use metaplectic_core::{Axis, Complex64, SampledWavefunction};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, Result};

/// Decimal with 17 significant digits; `inf`, `-inf`, `nan` otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON whose floats keep 17 significant digits.
struct PreciseFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    out
}

/// `{n, rows}` with `2n` rows of `2n` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixJson {
            n: m.nrows() / 2,
            rows: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> std::result::Result<DMatrix<f64>, String> {
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        let dim = 2 * self.n;
        if self.rows.len() != dim || self.rows.iter().any(|r| r.len() != dim) {
            return Err(format!("expected {dim} rows of {dim} entries for n = {}", self.n));
        }
        square_from_rows(&self.rows)
    }
}

fn square_from_rows(rows: &[Vec<f64>]) -> std::result::Result<DMatrix<f64>, String> {
    let dim = rows.len();
    if dim == 0 || dim % 2 != 0 {
        return Err(format!("matrix needs an even, nonzero number of rows, got {dim}"));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(format!("matrix is not square: a row has {} entries, expected {dim}", r.len()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err("matrix entries must be finite".into());
    }
    Ok(DMatrix::from_row_slice(dim, dim, &flat))
}

/// Row-major CSV without a header.
pub fn parse_matrix_csv(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| format!("not a number: {f:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    square_from_rows(&rows)
}

pub fn parse_matrix_json(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let m: MatrixJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
    m.to_matrix()
}

/// JSON unless the extension is `.csv`.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if has_extension(path, "csv") { parse_matrix_csv(&text) } else { parse_matrix_json(&text) };
    parsed.map_err(|m| CliError::format(path, m))
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Header `x,re,im` (1-D) or `x1,x2,re,im` (2-D, row-major in `x1`).
pub fn wavefunction_csv(psi: &SampledWavefunction) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let axes = psi.axes();
    let write = |w: &mut csv::Writer<Vec<u8>>, rec: &[String]| w.write_record(rec).expect("in-memory CSV");
    if axes.len() == 1 {
        write(&mut w, &["x".into(), "re".into(), "im".into()]);
        for (j, v) in psi.values().iter().enumerate() {
            write(&mut w, &[fmt_f64(axes[0].x(j)), fmt_f64(v.re), fmt_f64(v.im)]);
        }
    } else {
        write(&mut w, &["x1".into(), "x2".into(), "re".into(), "im".into()]);
        let n2 = axes[1].count;
        for (j, v) in psi.values().iter().enumerate() {
            write(&mut w, &[fmt_f64(axes[0].x(j / n2)), fmt_f64(axes[1].x(j % n2)), fmt_f64(v.re), fmt_f64(v.im)]);
        }
    }
    w.into_inner().expect("in-memory CSV")
}

/// Uniform axis through `xs`, accepting rounding of the written coordinates.
fn axis_from_samples(xs: &[f64]) -> std::result::Result<Axis, String> {
    if xs.len() < 2 {
        return Err("need at least two samples per axis".into());
    }
    let x0 = xs[0];
    let dx = (xs[xs.len() - 1] - x0) / (xs.len() - 1) as f64;
    for (j, &x) in xs.iter().enumerate() {
        if (x - (x0 + j as f64 * dx)).abs() > 1e-6 * dx.abs() {
            return Err(format!("coordinates are not uniformly spaced (sample {j}: {x})"));
        }
    }
    Axis::new(x0, dx, xs.len()).map_err(|e| e.to_string())
}

pub fn parse_wavefunction_csv(text: &str, hbar: f64) -> std::result::Result<SampledWavefunction, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> =
        reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_owned).collect();
    let dim = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "re", "im"] => 1,
        ["x1", "x2", "re", "im"] => 2,
        other => return Err(format!("expected header x,re,im or x1,x2,re,im, found {}", other.join(","))),
    };
    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); dim];
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let nums = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| format!("row {}: not a number: {f:?}", line + 2)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        for (d, c) in coords.iter_mut().enumerate() {
            c.push(nums[d]);
        }
        values.push(Complex64::new(nums[dim], nums[dim + 1]));
    }
    let axes = if dim == 1 {
        vec![axis_from_samples(&coords[0])?]
    } else {
        let first = coords[0].first().copied().ok_or("no samples")?;
        let n2 = coords[0].iter().take_while(|&&x| x == first).count();
        if n2 == 0 || values.len() % n2 != 0 {
            return Err("2-D samples must form a full row-major grid".into());
        }
        let x1: Vec<f64> = coords[0].iter().step_by(n2).copied().collect();
        let x2 = coords[1][..n2].to_vec();
        let (a1, a2) = (axis_from_samples(&x1)?, axis_from_samples(&x2)?);
        for (j, (&u, &v)) in coords[0].iter().zip(&coords[1]).enumerate() {
            if u != x1[j / n2] || v != x2[j % n2] {
                return Err(format!("row {} breaks the row-major grid order", j + 2));
            }
        }
        vec![a1, a2]
    };
    SampledWavefunction::new(axes, values, hbar).map_err(|e| e.to_string())
}

/// Little-endian: `u32 n`, `u32 N` per axis, `f64 x0, f64 dx` per axis,
/// `f64 ħ`, then interleaved `f64` real and imaginary parts.
pub fn snapshot_bytes(psi: &SampledWavefunction) -> Vec<u8> {
    let axes = psi.axes();
    let mut out = Vec::with_capacity(4 + 20 * axes.len() + 8 + 16 * psi.values().len());
    out.extend_from_slice(&(axes.len() as u32).to_le_bytes());
    for a in axes {
        out.extend_from_slice(&(a.count as u32).to_le_bytes());
    }
    for a in axes {
        out.extend_from_slice(&a.x0.to_le_bytes());
        out.extend_from_slice(&a.dx.to_le_bytes());
    }
    out.extend_from_slice(&psi.hbar().to_le_bytes());
    for v in psi.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> std::result::Result<[u8; N], String> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or("snapshot is truncated")?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice length"))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        self.take().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        self.take().map(f64::from_le_bytes)
    }
}

pub fn parse_snapshot(bytes: &[u8]) -> std::result::Result<SampledWavefunction, String> {
    let mut cur = Cursor { bytes, pos: 0 };
    let n = cur.u32()? as usize;
    if !(1..=3).contains(&n) {
        return Err(format!("unsupported dimension {n}"));
    }
    let counts = (0..n).map(|_| cur.u32().map(|c| c as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut axes = Vec::with_capacity(n);
    for &count in &counts {
        let (x0, dx) = (cur.f64()?, cur.f64()?);
        axes.push(Axis::new(x0, dx, count).map_err(|e| e.to_string())?);
    }
    let hbar = cur.f64()?;
    let total: usize = counts.iter().product();
    if bytes.len() - cur.pos != 16 * total {
        return Err(format!("expected {total} samples, found {} bytes of data", bytes.len() - cur.pos));
    }
    let values = (0..total)
        .map(|_| Ok(Complex64::new(cur.f64()?, cur.f64()?)))
        .collect::<std::result::Result<Vec<_>, String>>()?;
    SampledWavefunction::new(axes, values, hbar).map_err(|e| e.to_string())
}

/// CSV when the extension is `.csv` (using `hbar`), binary snapshot otherwise.
pub fn read_wavefunction(path: &Path, hbar: f64) -> Result<SampledWavefunction> {
    if has_extension(path, "csv") {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        parse_wavefunction_csv(&text, hbar).map_err(|m| CliError::format(path, m))
    } else {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        parse_snapshot(&bytes).map_err(|m| CliError::format(path, m))
    }
}

/// Files produced by a command, held in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn extend(&mut self, files: impl IntoIterator<Item = (String, Vec<u8>)>) {
        self.files.extend(files);
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Stages every file as a hidden temporary, then renames them into place.
    pub fn commit(self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            if let Err(e) = fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(CliError::io(tmp, e));
            }
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dst) in staged {
            fs::rename(&tmp, &dst).map_err(|e| CliError::io(dst, e))?;
        }
        Ok(())
    }
}
