//! Coefficient dumps.
//!
//! Text: header `fourier v1 d ell rows cols N_1 .. N_{d+ell}`, then one record per
//! (mode, entry) in FFT order: `j.. k.. row col re im`. Binary carries the same
//! header fields as little-endian integers after an 8-byte magic, followed by the
//! same records with `i64` modes, `u64` indices and `f64` values.

use super::grid::GridSpec;
use super::series::FourierSeries;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::io::{Read, Write};

const MAGIC: &[u8; 8] = b"FOURIER1";

pub fn write_text(series: &FourierSeries, mut out: impl Write) -> Result<()> {
    let g = series.grid();
    let mut s = String::new();
    write!(
        s,
        "fourier v1 {} {} {} {}",
        g.d(),
        g.ell(),
        series.rows(),
        series.cols()
    )
    .unwrap();
    for n in g.sizes() {
        write!(s, " {n}").unwrap();
    }
    s.push('\n');
    for p in 0..g.total() {
        let m = g.mode(p);
        for r in 0..series.rows() {
            for c in 0..series.cols() {
                let v = series.entry(r, c)[p];
                for mi in &m {
                    write!(s, "{mi} ").unwrap();
                }
                writeln!(s, "{r} {c} {:e} {:e}", v.re, v.im).unwrap();
            }
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Format(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Format(format!("bad {what}")))
}

pub fn read_text(mut input: impl Read) -> Result<FourierSeries> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty coefficient dump".into()))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("fourier") || tok.next() != Some("v1") {
        return Err(Error::Format("missing `fourier v1` header".into()));
    }
    let d: usize = parse(tok.next(), "d")?;
    let ell: usize = parse(tok.next(), "ell")?;
    let rows: usize = parse(tok.next(), "rows")?;
    let cols: usize = parse(tok.next(), "cols")?;
    let sizes = (0..d + ell)
        .map(|_| parse(tok.next(), "grid size"))
        .collect::<Result<Vec<usize>>>()?;
    let grid = GridSpec::new(d, ell, sizes)?;
    let n = grid.total();
    let mut coeffs = vec![Complex64::default(); rows * cols * n];
    let mut count = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let mut t = line.split_whitespace();
        let mode = (0..d + ell)
            .map(|_| parse(t.next(), "mode"))
            .collect::<Result<Vec<i64>>>()?;
        let r: usize = parse(t.next(), "row")?;
        let c: usize = parse(t.next(), "col")?;
        let re: f64 = parse(t.next(), "re")?;
        let im: f64 = parse(t.next(), "im")?;
        let p = grid
            .position(&mode)
            .ok_or_else(|| Error::Format(format!("mode {mode:?} outside grid")))?;
        if r >= rows || c >= cols {
            return Err(Error::Format(format!("entry ({r},{c}) outside {rows}x{cols}")));
        }
        coeffs[(r * cols + c) * n + p] = Complex64::new(re, im);
        count += 1;
    }
    if count != rows * cols * n {
        return Err(Error::Format(format!(
            "expected {} records, found {count}",
            rows * cols * n
        )));
    }
    FourierSeries::from_coeffs(&grid, rows, cols, coeffs)
}

pub fn write_binary(series: &FourierSeries, mut out: impl Write) -> Result<()> {
    let g = series.grid();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    for v in [g.d(), g.ell(), series.rows(), series.cols()]
        .into_iter()
        .chain(g.sizes().iter().copied())
    {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for p in 0..g.total() {
        let m = g.mode(p);
        for r in 0..series.rows() {
            for c in 0..series.cols() {
                for mi in &m {
                    buf.extend_from_slice(&mi.to_le_bytes());
                }
                buf.extend_from_slice(&(r as u64).to_le_bytes());
                buf.extend_from_slice(&(c as u64).to_le_bytes());
                let v = series.entry(r, c)[p];
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_binary(mut input: impl Read) -> Result<FourierSeries> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Err(Error::Format("empty coefficient dump".into()));
    }
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut pos = 8;
    let word = |pos: &mut usize| -> Result<[u8; 8]> {
        let w = bytes
            .get(*pos..*pos + 8)
            .ok_or_else(|| Error::Format("truncated binary dump".into()))?;
        *pos += 8;
        Ok(w.try_into().unwrap())
    };
    let u = |pos: &mut usize| word(pos).map(|w| u64::from_le_bytes(w) as usize);
    let d = u(&mut pos)?;
    let ell = u(&mut pos)?;
    let rows = u(&mut pos)?;
    let cols = u(&mut pos)?;
    if d + ell > 16 {
        return Err(Error::Format("implausible dimension".into()));
    }
    let sizes = (0..d + ell).map(|_| u(&mut pos)).collect::<Result<Vec<_>>>()?;
    let grid = GridSpec::new(d, ell, sizes)?;
    let n = grid.total();
    let mut coeffs = vec![Complex64::default(); rows * cols * n];
    for _ in 0..rows * cols * n {
        let mode = (0..d + ell)
            .map(|_| word(&mut pos).map(i64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        let r = word(&mut pos).map(u64::from_le_bytes)? as usize;
        let c = word(&mut pos).map(u64::from_le_bytes)? as usize;
        let re = word(&mut pos).map(f64::from_le_bytes)?;
        let im = word(&mut pos).map(f64::from_le_bytes)?;
        let p = grid
            .position(&mode)
            .ok_or_else(|| Error::Format(format!("mode {mode:?} outside grid")))?;
        if r >= rows || c >= cols {
            return Err(Error::Format(format!("entry ({r},{c}) outside {rows}x{cols}")));
        }
        coeffs[(r * cols + c) * n + p] = Complex64::new(re, im);
    }
    if pos != bytes.len() {
        return Err(Error::Format("trailing bytes in binary dump".into()));
    }
    FourierSeries::from_coeffs(&grid, rows, cols, coeffs)
}
