use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivot norm below which Gram–Schmidt drops a vector.
pub const PIVOT_DROP: f64 = 1e-10;

/// Sampling layout of a function: `Interval(n)` holds n samples on [0, 1],
/// `Square(n)` holds n×n samples on the unit square in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "lowercase")]
pub enum Geometry {
    Interval(usize),
    Square(usize),
}

impl Geometry {
    pub fn samples(self) -> usize {
        match self {
            Geometry::Interval(n) => n,
            Geometry::Square(n) => n * n,
        }
    }

    /// Side length (samples per axis).
    pub fn side(self) -> usize {
        match self {
            Geometry::Interval(n) | Geometry::Square(n) => n,
        }
    }

    /// Number of half-scale children each function produces.
    pub fn regions(self) -> usize {
        match self {
            Geometry::Interval(_) => 2,
            Geometry::Square(_) => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Interval(_) => "interval",
            Geometry::Square(_) => "square",
        }
    }
}

/// Inner product used for orthonormality, projections and S.
///
/// `Sobolev { weight }` adds `weight * Σ Δf Δg` with forward differences
/// `Δf_i = f_{i+1} - f_i`, the last difference omitted. On a square both
/// axes contribute their forward differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InnerProduct {
    L2,
    Sobolev { weight: f64 },
}

impl InnerProduct {
    pub fn sobolev(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Sobolev weight must be finite and non-negative, got {weight}"
            )));
        }
        Ok(InnerProduct::Sobolev { weight })
    }
}

impl fmt::Display for InnerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerProduct::L2 => write!(f, "l2"),
            InnerProduct::Sobolev { weight } => write!(f, "sobolev:{weight}"),
        }
    }
}

impl FromStr for InnerProduct {
    type Err = Error;

    /// Accepts `l2`, `sobolev` (weight 1) and `sobolev:<weight>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "l2" => Ok(InnerProduct::L2),
            "sobolev" => InnerProduct::sobolev(1.0),
            _ => match s.strip_prefix("sobolev:") {
                Some(w) => {
                    let weight = w.parse::<f64>().map_err(|_| {
                        Error::InvalidInput(format!("bad Sobolev weight {w:?}"))
                    })?;
                    InnerProduct::sobolev(weight)
                }
                None => Err(Error::InvalidInput(format!(
                    "unknown inner product {s:?} (expected l2 or sobolev[:weight])"
                ))),
            },
        }
    }
}

/// An inner product bound to a sampling geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub geometry: Geometry,
    pub ip: InnerProduct,
}

impl Metric {
    pub fn new(geometry: Geometry, ip: InnerProduct) -> Self {
        Metric { geometry, ip }
    }

    pub fn dot(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let plain = a.dot(b);
        match self.ip {
            InnerProduct::L2 => plain,
            InnerProduct::Sobolev { weight } => {
                let side = self.geometry.side();
                let derivative = match self.geometry {
                    Geometry::Interval(_) => difference_dot(a.as_slice(), b.as_slice(), 1, side),
                    Geometry::Square(_) => {
                        let mut total = 0.0;
                        for row in 0..side {
                            let start = row * side;
                            let (ra, rb) = (
                                &a.as_slice()[start..start + side],
                                &b.as_slice()[start..start + side],
                            );
                            total += difference_dot(ra, rb, 1, side);
                        }
                        for col in 0..side {
                            total += difference_dot(
                                &a.as_slice()[col..],
                                &b.as_slice()[col..],
                                side,
                                side,
                            );
                        }
                        total
                    }
                };
                plain + weight * derivative
            }
        }
    }

    pub fn norm(&self, a: &DVector<f64>) -> f64 {
        self.dot(a, a).max(0.0).sqrt()
    }
}

/// `Σ (a[(i+1)s] - a[is]) (b[(i+1)s] - b[is])` over `count` strided samples.
fn difference_dot(a: &[f64], b: &[f64], stride: usize, count: usize) -> f64 {
    (0..count.saturating_sub(1))
        .map(|i| {
            let (lo, hi) = (i * stride, (i + 1) * stride);
            (a[hi] - a[lo]) * (b[hi] - b[lo])
        })
        .sum()
}

/// Output of [`gram_schmidt`]: orthonormal vectors and which inputs survived.
#[derive(Debug, Clone)]
pub struct GramSchmidt {
    pub vectors: Vec<DVector<f64>>,
    /// Input index of each output vector.
    pub kept: Vec<usize>,
    /// Input indices whose pivot norm fell below [`PIVOT_DROP`], with that norm.
    pub dropped: Vec<(usize, f64)>,
}

/// Classical Gram–Schmidt in input order with one re-orthogonalization pass.
pub fn gram_schmidt(metric: &Metric, inputs: &[DVector<f64>]) -> GramSchmidt {
    let mut out = GramSchmidt {
        vectors: Vec::with_capacity(inputs.len()),
        kept: Vec::with_capacity(inputs.len()),
        dropped: Vec::new(),
    };
    for (idx, v) in inputs.iter().enumerate() {
        let mut w = v.clone();
        for _ in 0..2 {
            let coeffs: Vec<f64> = out.vectors.iter().map(|q| metric.dot(q, &w)).collect();
            for (q, c) in out.vectors.iter().zip(coeffs) {
                w.axpy(-c, q, 1.0);
            }
        }
        let norm = metric.norm(&w);
        if norm < PIVOT_DROP {
            out.dropped.push((idx, norm));
        } else {
            out.vectors.push(w / norm);
            out.kept.push(idx);
        }
    }
    out
}
