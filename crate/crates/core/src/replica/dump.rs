//! Plain-text wave-set dumps.
//!
//! ```text
//! # geometry=interval n=64 ip=l2 functions=2
//! # any further comment lines
//! 0 1.2500000000000000e-1
//! 1 ...
//!
//! 0 ...
//! ```
//!
//! One `index value` line per sample, a blank line between functions. Square
//! geometries give the side length as `n` and use row-major flat indices.
//! Values carry 17 significant digits so a dump round-trips exactly.

use std::fmt::Write;

use nalgebra::DVector;

use super::{Geometry, InnerProduct, WaveSet};
use crate::error::{Error, Result};

fn header(geometry: Geometry, ip: InnerProduct, count: usize) -> String {
    format!(
        "# geometry={} n={} ip={} functions={}",
        geometry.name(),
        geometry.side(),
        ip,
        count
    )
}

/// Writes arbitrary sampled vectors in dump format. `comments` become extra
/// `#` lines after the geometry header.
pub fn format_vectors(
    geometry: Geometry,
    ip: InnerProduct,
    vectors: &[DVector<f64>],
    comments: &[String],
) -> String {
    let mut out = header(geometry, ip, vectors.len());
    out.push('\n');
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for (k, v) in vectors.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for (i, x) in v.iter().enumerate() {
            let _ = writeln!(out, "{i} {x:.16e}");
        }
    }
    out
}

pub fn format_waveset(ws: &WaveSet, comments: &[String]) -> String {
    format_vectors(ws.geometry(), ws.ip(), ws.functions(), comments)
}

fn parse_header(line: &str, line_no: usize) -> Result<(Geometry, InnerProduct, Option<usize>)> {
    let err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let body = line
        .strip_prefix('#')
        .map(str::trim)
        .filter(|b| b.starts_with("geometry="))
        .ok_or_else(|| err("expected a '# geometry=... n=... ip=...' header".into()))?;
    let mut kind = None;
    let mut n = None;
    let mut ip = None;
    let mut count = None;
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| err(format!("bad header field {token:?}")))?;
        match key {
            "geometry" => kind = Some(value.to_string()),
            "n" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| err(format!("bad n {value:?}")))?,
                )
            }
            "ip" => ip = Some(value.parse::<InnerProduct>().map_err(|e| err(e.to_string()))?),
            "functions" => {
                count = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| err(format!("bad functions {value:?}")))?,
                )
            }
            _ => {}
        }
    }
    let n = n.ok_or_else(|| err("header lacks n".into()))?;
    let geometry = match kind.as_deref() {
        Some("interval") => Geometry::Interval(n),
        Some("square") => Geometry::Square(n),
        other => return Err(err(format!("unknown geometry {other:?}"))),
    };
    Ok((geometry, ip.unwrap_or(InnerProduct::L2), count))
}

/// Reads the vectors of a dump without checking orthonormality.
pub fn parse_vectors(text: &str) -> Result<(Geometry, InnerProduct, Vec<DVector<f64>>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (first_no, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty wave-set file".into(),
    })?;
    let (geometry, ip, count) = parse_header(first.trim(), first_no)?;
    let samples = geometry.samples();

    let mut vectors = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut last_line = first_no;
    let finish = |current: &mut Vec<f64>, vectors: &mut Vec<DVector<f64>>, line: usize| {
        if current.is_empty() {
            return Ok(());
        }
        if current.len() != samples {
            return Err(Error::Parse {
                line,
                message: format!(
                    "function {} has {} samples, expected {samples}",
                    vectors.len(),
                    current.len()
                ),
            });
        }
        vectors.push(DVector::from_vec(std::mem::take(current)));
        Ok(())
    };

    for (line_no, raw) in lines {
        last_line = line_no;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            finish(&mut current, &mut vectors, line_no)?;
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut parts = line.split_whitespace();
        let (Some(index), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("expected 'index value', got {line:?}")));
        };
        let index: usize = index
            .parse()
            .map_err(|_| err(format!("bad index {index:?}")))?;
        if index != current.len() {
            return Err(err(format!(
                "expected index {}, got {index}",
                current.len()
            )));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| err(format!("bad value {value:?}")))?;
        current.push(value);
    }
    finish(&mut current, &mut vectors, last_line)?;

    if let Some(count) = count {
        if count != vectors.len() {
            return Err(Error::Parse {
                line: first_no,
                message: format!("header announces {count} functions, found {}", vectors.len()),
            });
        }
    }
    Ok((geometry, ip, vectors))
}

/// Parses a dump and validates it as an orthonormal [`WaveSet`].
pub fn parse_waveset(text: &str) -> Result<WaveSet> {
    let (geometry, ip, vectors) = parse_vectors(text)?;
    WaveSet::new(geometry, ip, vectors)
}
