//! Signal CSV format: header `t,re` (real) or `t,re,im` (complex); the
//! vector-signal convention `t,c0,c1` is accepted on read and mapped to
//! `c0 + i c1`. The parser validates uniform spacing on [0,1] to 1e-9.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{Grid, Signal};
use crate::error::{Error, Result};
use crate::polyalg::Scalar;

const SPACING_TOL: f64 = 1e-9;

/// Write a signal with the canonical header for its field.
pub fn write_signal<T: Scalar>(path: &Path, signal: &Signal<T>) -> Result<()> {
    let mut out = String::new();
    if T::COMPONENTS == 2 {
        out.push_str("t,re,im\n");
    } else {
        out.push_str("t,re\n");
    }
    for (t, s) in signal.grid().nodes().zip(signal.samples()) {
        if T::COMPONENTS == 2 {
            out.push_str(&format!("{t},{},{}\n", s.re(), s.im()));
        } else {
            out.push_str(&format!("{t},{}\n", s.re()));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_rows(path: &Path, expect_cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::InputFormat(format!("line {}: bad number {cell:?}", idx + 1))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != expect_cols {
            return Err(Error::InputFormat(format!(
                "line {}: expected {expect_cols} columns, got {}",
                idx + 1,
                row.len()
            )));
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::InputFormat(format!(
                "line {}: non-finite value",
                idx + 1
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn validate_grid(rows: &[Vec<f64>]) -> Result<Grid> {
    let grid = Grid::new(rows.len()).map_err(|_| {
        Error::InputFormat(format!(
            "need at least {} rows, got {}",
            Grid::MIN_NODES,
            rows.len()
        ))
    })?;
    for (m, row) in rows.iter().enumerate() {
        if (row[0] - grid.node(m)).abs() > SPACING_TOL {
            return Err(Error::InputFormat(format!(
                "node {m}: t = {} is not uniform on [0,1] (expected {})",
                row[0],
                grid.node(m)
            )));
        }
    }
    Ok(grid)
}

fn header_of(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::InputFormat("empty file".into()))?;
    Ok(header.split(',').map(|c| c.trim().to_lowercase()).collect())
}

/// Read a real signal (`t,re`).
pub fn read_signal_real(path: &Path) -> Result<Signal<f64>> {
    let header = header_of(path)?;
    if header != ["t", "re"] {
        return Err(Error::InputFormat(format!(
            "expected header t,re for a real signal, got {:?}",
            header.join(",")
        )));
    }
    let rows = parse_rows(path, 2)?;
    let grid = validate_grid(&rows)?;
    Ok(Signal::new(grid, rows.iter().map(|r| r[1]).collect()))
}

/// Read a complex signal (`t,re,im` or the vector form `t,c0,c1`); a real
/// `t,re` file is lifted with zero imaginary part.
pub fn read_signal_complex(path: &Path) -> Result<Signal<Complex64>> {
    let header = header_of(path)?;
    if header == ["t", "re"] {
        let real = read_signal_real(path)?;
        let samples = real
            .samples()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        return Ok(Signal::new(real.grid(), samples));
    }
    if header != ["t", "re", "im"] && header != ["t", "c0", "c1"] {
        return Err(Error::InputFormat(format!(
            "expected header t,re,im or t,c0,c1, got {:?}",
            header.join(",")
        )));
    }
    let rows = parse_rows(path, 3)?;
    let grid = validate_grid(&rows)?;
    Ok(Signal::new(
        grid,
        rows.iter().map(|r| Complex64::new(r[1], r[2])).collect(),
    ))
}
