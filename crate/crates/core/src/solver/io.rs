//! Snapshot CSV, diagnostic CSV and the `TDK1` binary frame.
//!
//! A frame is the magic `TDK1`, then little-endian `u32 n`, `u32 N_i` per
//! axis, `f64 t` and the cell values as `f64`, row-major.

use std::io::{self, Read, Write};

use super::{Grid, PeriodicField};
use crate::diagnostics::DiagnosticsRow;

pub const FRAME_MAGIC: &[u8; 4] = b"TDK1";

pub fn write_frame<W: Write>(w: &mut W, field: &PeriodicField, t: f64) -> io::Result<()> {
    w.write_all(FRAME_MAGIC)?;
    let grid = field.grid();
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    for &c in grid.cells() {
        w.write_all(&(c as u32).to_le_bytes())?;
    }
    w.write_all(&t.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads one frame, or `None` at a clean end of input.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<(PeriodicField, f64)>> {
    let mut magic = [0u8; 4];
    match r.read(&mut magic[..1])? {
        0 => return Ok(None),
        _ => r.read_exact(&mut magic[1..])?,
    }
    if &magic != FRAME_MAGIC {
        return Err(invalid("bad frame magic"));
    }
    let n = read_u32(r)? as usize;
    if !(1..=2).contains(&n) {
        return Err(invalid(format!("frame dimension {n}")));
    }
    let cells = (0..n).map(|_| read_u32(r).map(|c| c as usize)).collect::<io::Result<Vec<_>>>()?;
    let grid = Grid::new(cells).map_err(|e| invalid(e.to_string()))?;
    let t = read_f64(r)?;
    let values = (0..grid.len()).map(|_| read_f64(r)).collect::<io::Result<Vec<_>>>()?;
    let field = PeriodicField::new(grid, values).map_err(|e| invalid(e.to_string()))?;
    Ok(Some((field, t)))
}

pub fn read_frames<R: Read>(r: &mut R) -> io::Result<Vec<(PeriodicField, f64)>> {
    let mut out = Vec::new();
    while let Some(f) = read_frame(r)? {
        out.push(f);
    }
    Ok(out)
}

/// One row per cell: indices, centre coordinates, value.
pub fn write_snapshot_csv<W: Write>(w: W, field: &PeriodicField) -> io::Result<()> {
    let grid = field.grid();
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> = match grid.n() {
        1 => vec!["i", "x", "value"],
        _ => vec!["i", "j", "x", "y", "value"],
    };
    out.write_record(&header)?;
    for (k, v) in field.values().iter().enumerate() {
        let mut rec: Vec<String> = grid.multi_index(k).iter().map(|i| i.to_string()).collect();
        rec.extend(grid.centre(k).iter().map(|c| c.to_string()));
        rec.push(v.to_string());
        out.write_record(&rec)?;
    }
    out.flush()
}

pub const DIAGNOSTICS_HEADER: [&str; 6] = ["t", "mass", "I_eta_sq", "I_eta_abs", "l1_to_mean", "dissipation_cum"];

pub fn write_diagnostics_csv<W: Write>(w: W, rows: &[DiagnosticsRow]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DIAGNOSTICS_HEADER)?;
    for r in rows {
        let dis = r.dissipation_cum.map_or_else(String::new, |d| d.to_string());
        out.write_record(&[
            r.t.to_string(),
            r.mass.to_string(),
            r.i_eta_sq.to_string(),
            r.i_eta_abs.to_string(),
            r.l1_to_mean.to_string(),
            dis,
        ])?;
    }
    out.flush()
}

/// Cell values from a text file: numbers separated by commas or whitespace,
/// or a JSON array.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| e.to_string());
    }
    t.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("cannot parse {s:?} as a number")))
        .collect()
}
