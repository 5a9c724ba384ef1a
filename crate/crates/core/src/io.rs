//! Grid and curve serialization.
//!
//! Binary grids start with a 64-byte little-endian header:
//!
//! | offset | type     | field                         |
//! |--------|----------|-------------------------------|
//! | 0      | [u8; 8]  | magic `CHLGRID\0`             |
//! | 8      | u32      | format version (1)            |
//! | 12     | u32      | kind: 1 real, 2 complex       |
//! | 16     | u32      | rows                          |
//! | 20     | u32      | columns                       |
//! | 24     | f64      | row spacing (`p` or `ξ_p`)    |
//! | 32     | f64      | column spacing (`q` or `ξ_q`) |
//! | 40     | f64      | row half-width                |
//! | 48     | f64      | column half-width             |
//! | 56     | f64      | ħ                             |
//!
//! followed by row-major `f64` samples, complex values as `(re, im)` pairs.
//!
//! CSV grids carry `# key=value` metadata lines before a column header.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_space::{CenteredGrid, ChordGrid, PhaseGrid, WignerGrid};
use crate::states::LagrangianCurve;

pub const MAGIC: &[u8; 8] = b"CHLGRID\0";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;
const KIND_REAL: u32 = 1;
const KIND_COMPLEX: u32 = 2;

fn write_header(out: &mut impl Write, grid: &CenteredGrid, kind: u32) -> Result<()> {
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(MAGIC);
    for v in [FORMAT_VERSION, kind, grid.points as u32, grid.points as u32] {
        h.extend_from_slice(&v.to_le_bytes());
    }
    for v in [grid.p_spacing(), grid.q_spacing(), grid.p_half_width, grid.q_half_width, grid.hbar] {
        h.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&h)?;
    Ok(())
}

fn read_header(input: &mut impl Read) -> Result<(CenteredGrid, u32)> {
    let mut h = [0u8; HEADER_LEN];
    input.read_exact(&mut h)?;
    if &h[..8] != MAGIC {
        return Err(Error::Format("bad magic in grid file".into()));
    }
    let u = |o: usize| u32::from_le_bytes(h[o..o + 4].try_into().unwrap());
    let f = |o: usize| f64::from_le_bytes(h[o..o + 8].try_into().unwrap());
    if u(8) != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported grid format version {}", u(8))));
    }
    let (rows, cols) = (u(16), u(20));
    if rows != cols {
        return Err(Error::Format(format!("non-square grid {rows} x {cols}")));
    }
    let grid = CenteredGrid::new(f(40), f(48), rows as usize, f(56))?;
    for (stored, derived) in [(f(24), grid.p_spacing()), (f(32), grid.q_spacing())] {
        if (stored - derived).abs() > 1e-12 * derived {
            return Err(Error::Format(format!("spacing {stored} disagrees with half-width and size")));
        }
    }
    Ok((grid, u(12)))
}

fn read_f64s(input: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    input.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn write_real_binary(out: &mut impl Write, g: &WignerGrid) -> Result<()> {
    write_header(out, &g.grid, KIND_REAL)?;
    for v in &g.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_complex_binary(out: &mut impl Write, g: &ChordGrid) -> Result<()> {
    write_header(out, &g.grid, KIND_COMPLEX)?;
    for v in &g.values {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_real_binary(input: &mut impl Read) -> Result<WignerGrid> {
    let (grid, kind) = read_header(input)?;
    if kind != KIND_REAL {
        return Err(Error::Format(format!("expected a real grid, found kind {kind}")));
    }
    PhaseGrid::from_values(grid, read_f64s(input, grid.len())?)
}

pub fn read_complex_binary(input: &mut impl Read) -> Result<ChordGrid> {
    let (grid, kind) = read_header(input)?;
    if kind != KIND_COMPLEX {
        return Err(Error::Format(format!("expected a complex grid, found kind {kind}")));
    }
    let raw = read_f64s(input, 2 * grid.len())?;
    PhaseGrid::from_values(grid, raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

fn write_meta(out: &mut impl Write, kind: &str, grid: &CenteredGrid) -> Result<()> {
    writeln!(out, "# kind={kind}")?;
    writeln!(out, "# p_half_width={:e}", grid.p_half_width)?;
    writeln!(out, "# q_half_width={:e}", grid.q_half_width)?;
    writeln!(out, "# points={}", grid.points)?;
    writeln!(out, "# hbar={:e}", grid.hbar)?;
    Ok(())
}

/// Rows `p,q,value`; `kind` names the field (`wigner`, `husimi`).
pub fn write_real_csv(out: &mut impl Write, kind: &str, g: &WignerGrid) -> Result<()> {
    write_meta(out, kind, &g.grid)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "q", "value"])?;
    let m = g.grid.points;
    for (k, v) in g.values.iter().enumerate() {
        let x = g.grid.point(k / m, k % m);
        w.write_record([format!("{:e}", x.p), format!("{:e}", x.q), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `xi_p,xi_q,re,im`.
pub fn write_complex_csv(out: &mut impl Write, kind: &str, g: &ChordGrid) -> Result<()> {
    write_meta(out, kind, &g.grid)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["xi_p", "xi_q", "re", "im"])?;
    let m = g.grid.points;
    for (k, v) in g.values.iter().enumerate() {
        let xi = g.grid.chord(k / m, k % m);
        w.write_record([
            format!("{:e}", xi.xi_p),
            format!("{:e}", xi.xi_q),
            format!("{:e}", v.re),
            format!("{:e}", v.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

type Annotated = (Vec<(String, String)>, Vec<Vec<f64>>);

/// Metadata and numeric rows of a `#`-annotated CSV.
fn read_annotated(input: impl Read) -> Result<Annotated> {
    let mut reader = BufReader::new(input);
    let mut meta = Vec::new();
    let mut body = String::new();
    let mut line = String::new();
    while reader.read_line(&mut line)? > 0 {
        if let Some(rest) = line.trim().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            body.push_str(&line);
        }
        line.clear();
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("row {}: {e}: {s:?}", n + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((meta, rows))
}

fn meta_grid(meta: &[(String, String)]) -> Result<CenteredGrid> {
    let get = |key: &str| {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("missing `{key}` metadata")))
    };
    let num = |key: &str| get(key)?.parse::<f64>().map_err(|e| Error::Format(format!("{key}: {e}")));
    let points = get("points")?.parse::<usize>().map_err(|e| Error::Format(format!("points: {e}")))?;
    CenteredGrid::new(num("p_half_width")?, num("q_half_width")?, points, num("hbar")?)
}

pub fn read_real_csv(input: impl Read) -> Result<WignerGrid> {
    let (meta, rows) = read_annotated(input)?;
    let grid = meta_grid(&meta)?;
    if rows.iter().any(|r| r.len() != 3) {
        return Err(Error::Format("real grid rows need 3 columns".into()));
    }
    PhaseGrid::from_values(grid, rows.iter().map(|r| r[2]).collect())
}

pub fn read_complex_csv(input: impl Read) -> Result<ChordGrid> {
    let (meta, rows) = read_annotated(input)?;
    let grid = meta_grid(&meta)?;
    if rows.iter().any(|r| r.len() != 4) {
        return Err(Error::Format("complex grid rows need 4 columns".into()));
    }
    PhaseGrid::from_values(grid, rows.iter().map(|r| Complex64::new(r[2], r[3])).collect())
}

/// A custom curve from `theta,p,q` rows, uniform in `θ` from 0.
pub fn read_curve_csv(input: impl Read) -> Result<LagrangianCurve> {
    let (_, rows) = read_annotated(input)?;
    if rows.iter().any(|r| r.len() != 3) {
        return Err(Error::Format("curve rows need columns theta,p,q".into()));
    }
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
    LagrangianCurve::from_samples(&col(0), &col(1), &col(2))
}
