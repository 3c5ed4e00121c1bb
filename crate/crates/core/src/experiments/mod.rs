//! Canned experiment drivers: standard function families, the polynomial
//! and α-spectrum checks, and the full reproducible suite.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, LatticeKind, LatticeSpec};
use crate::replica::{replicate_set, Geometry, InnerProduct, WaveSet};

mod suite;

pub use suite::{
    run_suite, summary_csv, trajectory_csv, Check, Criterion, ExperimentResult, SuiteConfig,
};

/// Imaginary parts above this make an α eigenvalue count as complex.
pub const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// Cell midpoints `(i + 1/2) / n` of a uniform partition of [0, 1].
pub fn midpoints(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
}

/// Continuum Laplacian mode `k` on [0, 1]: `cos(kπx)` for free ends,
/// `sin((k+1)πx)` for fixed ends.
fn mode(bc: BoundaryCondition, k: usize, x: f64) -> f64 {
    match bc {
        BoundaryCondition::Free => (k as f64 * PI * x).cos(),
        BoundaryCondition::Fixed => ((k + 1) as f64 * PI * x).sin(),
    }
}

/// The `m` lowest continuum Laplacian modes sampled at cell midpoints.
///
/// For free ends these coincide with the free chain's eigenvectors.
pub fn laplacian_modes(
    bc: BoundaryCondition,
    n: usize,
    m: usize,
    ip: InnerProduct,
) -> Result<WaveSet> {
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!(
            "need 1..={n} modes on {n} samples, got {m}"
        )));
    }
    let raw: Vec<DVector<f64>> = (0..m)
        .map(|k| DVector::from_iterator(n, midpoints(n).map(|x| mode(bc, k, x))))
        .collect();
    WaveSet::orthonormalize(Geometry::Interval(n), ip, &raw)
}

/// The `m` lowest separable modes `mode(kx, x)·mode(ky, y)` on an n×n
/// square, ordered by `kx² + ky²` then by `(ky, kx)`. Row index is y.
pub fn laplacian_modes_2d(
    bc: BoundaryCondition,
    n: usize,
    m: usize,
    ip: InnerProduct,
) -> Result<WaveSet> {
    if m == 0 || m > n * n {
        return Err(Error::InvalidInput(format!(
            "need 1..={} modes on a {n}x{n} square, got {m}",
            n * n
        )));
    }
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|ky| (0..n).map(move |kx| (kx, ky))).collect();
    pairs.sort_by_key(|&(kx, ky)| (kx * kx + ky * ky, ky, kx));
    let xs: Vec<f64> = midpoints(n).collect();
    let raw: Vec<DVector<f64>> = pairs[..m]
        .iter()
        .map(|&(kx, ky)| {
            DVector::from_fn(n * n, |idx, _| {
                mode(bc, kx, xs[idx % n]) * mode(bc, ky, xs[idx / n])
            })
        })
        .collect();
    WaveSet::orthonormalize(Geometry::Square(n), ip, &raw)
}

/// Lowest `m` eigenvectors of a chain or square grid Hamiltonian as a wave
/// set, re-orthonormalized under `ip`.
pub fn lattice_eigenstates(spec: &LatticeSpec, m: usize, ip: InnerProduct) -> Result<WaveSet> {
    let geometry = match spec.kind {
        LatticeKind::Chain { n } => Geometry::Interval(n),
        LatticeKind::Grid2D { nx, ny } if nx == ny => Geometry::Square(nx),
        LatticeKind::Grid2D { nx, ny } => {
            return Err(Error::Unsupported(format!(
                "replica needs a square grid, got {nx}x{ny}"
            )))
        }
        LatticeKind::Graph(_) => {
            return Err(Error::Unsupported(
                "replica needs a chain or square grid, not a general graph".into(),
            ))
        }
    };
    let spectrum = spec.build()?.lowest(m)?;
    WaveSet::orthonormalize(geometry, ip, &spectrum.vectors())
}

/// Monomials `1, x, …, x^degree` at cell midpoints, orthonormalized under L2.
pub fn polynomial_waveset(degree: usize, n: usize) -> Result<WaveSet> {
    if degree + 1 > n {
        return Err(Error::InvalidInput(format!(
            "degree {degree} needs at least {} samples, got {n}",
            degree + 1
        )));
    }
    let raw: Vec<DVector<f64>> = (0..=degree)
        .map(|k| DVector::from_iterator(n, midpoints(n).map(|x| x.powi(k as i32))))
        .collect();
    WaveSet::orthonormalize(Geometry::Interval(n), InnerProduct::L2, &raw)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialCheck {
    pub degree: usize,
    pub n: usize,
    pub self_replicability: Vec<f64>,
    pub min_s: f64,
    /// `max_i ‖R₀φ_i − φ_i‖`.
    pub max_deviation: f64,
}

pub fn check_polynomial_selfreplicability(degree: usize, n: usize) -> Result<PolynomialCheck> {
    let ws = polynomial_waveset(degree, n)?;
    let outcome = replicate_set(&ws)?;
    let min_s = outcome
        .self_replicability
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(PolynomialCheck {
        degree,
        n,
        min_s,
        max_deviation: outcome.max_projection_deviation(&ws),
        self_replicability: outcome.self_replicability,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaCheck {
    pub degree: usize,
    pub n: usize,
    /// Eigenvalues of `√2·α`, descending.
    pub eigenvalues: Vec<f64>,
    /// `max_k |λ_k − 2^{−k}|`.
    pub max_error: f64,
}

/// Spectrum of the left-overlap matrix α of the polynomial set.
///
/// α is taken against unit-norm children; the factor √2 converts it to the
/// convention where the left copy of φ is `φ(2x)` without renormalization,
/// in which the spectrum is `{2^{−k}}`.
pub fn check_alpha_spectrum(degree: usize, n: usize) -> Result<AlphaCheck> {
    let ws = polynomial_waveset(degree, n)?;
    let outcome = replicate_set(&ws)?;
    let alpha = outcome.alpha() * SQRT_2;
    if !alpha.is_square() {
        return Err(Error::Degenerate(format!(
            "α is {}x{}; the polynomial set lost children",
            alpha.nrows(),
            alpha.ncols()
        )));
    }
    let complex = alpha.complex_eigenvalues();
    if let Some(z) = complex.iter().find(|z| z.im.abs() > IMAGINARY_TOLERANCE) {
        return Err(Error::Degenerate(format!(
            "α has a complex eigenvalue {} + {}i",
            z.re, z.im
        )));
    }
    let mut eigenvalues: Vec<f64> = complex.iter().map(|z| z.re).collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let max_error = eigenvalues
        .iter()
        .enumerate()
        .map(|(k, l)| (l - 0.5f64.powi(k as i32)).abs())
        .fold(0.0, f64::max);
    Ok(AlphaCheck {
        degree,
        n,
        eigenvalues,
        max_error,
    })
}

/// `|⟨f, 1⟩| / (‖f‖ ‖1‖)` in plain L2.
pub fn overlap_with_constant(f: &DVector<f64>) -> f64 {
    let norm = f.norm();
    if norm == 0.0 {
        return 0.0;
    }
    f.sum().abs() / (norm * (f.len() as f64).sqrt())
}

/// Mean squared second difference relative to the mean square value,
/// averaged over the functions of a set. On a square both axes contribute.
pub fn roughness(ws: &WaveSet) -> f64 {
    let side = ws.geometry().side();
    let total: f64 = ws
        .functions()
        .iter()
        .map(|f| {
            let f = f.as_slice();
            let mean_square = f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
            let mut sum = 0.0;
            let mut count = 0usize;
            let mut add = |a: f64, b: f64, c: f64| {
                sum += (a - 2.0 * b + c).powi(2);
                count += 1;
            };
            match ws.geometry() {
                Geometry::Interval(_) => {
                    for i in 1..side - 1 {
                        add(f[i - 1], f[i], f[i + 1]);
                    }
                }
                Geometry::Square(_) => {
                    for r in 0..side {
                        for c in 1..side - 1 {
                            let i = r * side + c;
                            add(f[i - 1], f[i], f[i + 1]);
                        }
                    }
                    for r in 1..side - 1 {
                        for c in 0..side {
                            let i = r * side + c;
                            add(f[i - side], f[i], f[i + side]);
                        }
                    }
                }
            }
            if count == 0 || mean_square == 0.0 {
                0.0
            } else {
                sum / count as f64 / mean_square
            }
        })
        .sum();
    total / ws.len() as f64
}
