//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration with Wilkinson-style shifts (the classic `tred2` / `tql2` pair
//! from the EISPACK lineage). Both stages are sequential with a fixed loop
//! order, so identical input produces bit-identical output.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Entries below this magnitude are skipped when fixing eigenvector signs.
const SIGN_THRESHOLD: f64 = 1e-12;
const SYMMETRY_TOLERANCE: f64 = 1e-12;
const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    /// `‖H v_i − λ_i v_i‖₂`.
    pub fn residual(&self, matrix: &DMatrix<f64>, i: usize) -> f64 {
        let v = self.eigenvectors.column(i);
        (matrix * v - v * self.eigenvalues[i]).norm()
    }
}

fn check_symmetric(matrix: &DMatrix<f64>) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::InvalidInput(format!(
            "matrix is {}x{}, expected square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = matrix.nrows();
    let mut worst = (0, 0, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (matrix[(i, j)] - matrix[(j, i)]).abs();
            if gap > worst.2 || gap.is_nan() {
                worst = (i, j, gap);
            }
        }
    }
    if worst.2 > SYMMETRY_TOLERANCE || worst.2.is_nan() {
        return Err(Error::NonSymmetric {
            row: worst.0,
            col: worst.1,
            asymmetry: worst.2,
        });
    }
    Ok(())
}

/// The `m` algebraically smallest eigenpairs of a real symmetric matrix.
///
/// Each eigenvector is signed so that its first entry with magnitude above
/// `1e-12` is positive.
pub fn lowest_eigenpairs(matrix: &DMatrix<f64>, m: usize) -> Result<Spectrum> {
    check_symmetric(matrix)?;
    let n = matrix.nrows();
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!(
            "requested {m} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let (values, vectors) = symmetric_eigen(matrix);
    let mut eigenvectors = DMatrix::zeros(n, m);
    for (col, row) in vectors.iter().take(m).enumerate() {
        let sign = match row.iter().find(|x| x.abs() > SIGN_THRESHOLD) {
            Some(x) if *x < 0.0 => -1.0,
            _ => 1.0,
        };
        for (k, &x) in row.iter().enumerate() {
            eigenvectors[(k, col)] = sign * x;
        }
    }
    Ok(Spectrum {
        eigenvalues: values[..m].to_vec(),
        eigenvectors,
    })
}

/// All eigenpairs, ascending.
pub fn full_spectrum(matrix: &DMatrix<f64>) -> Result<Spectrum> {
    lowest_eigenpairs(matrix, matrix.nrows())
}

/// Projects `matrix` onto the span of an orthonormal `basis` and diagonalizes
/// the projected `k x k` problem.
///
/// Returned eigenvectors are lifted back to the full space as combinations of
/// the basis vectors.
pub fn rayleigh_ritz(matrix: &DMatrix<f64>, basis: &[DVector<f64>]) -> Result<Spectrum> {
    check_symmetric(matrix)?;
    let n = matrix.nrows();
    let k = basis.len();
    if k == 0 {
        return Err(Error::InvalidInput("empty Rayleigh-Ritz basis".into()));
    }
    if let Some((i, b)) = basis.iter().enumerate().find(|(_, b)| b.len() != n) {
        return Err(Error::InvalidInput(format!(
            "basis vector {i} has length {}, matrix dimension is {n}",
            b.len()
        )));
    }
    let mut worst = (0, 0, 0.0f64);
    for i in 0..k {
        for j in i..k {
            let target = if i == j { 1.0 } else { 0.0 };
            let deviation = (basis[i].dot(&basis[j]) - target).abs();
            if deviation > worst.2 {
                worst = (i, j, deviation);
            }
        }
    }
    if worst.2 > ORTHONORMALITY_TOLERANCE {
        return Err(Error::NonOrthonormal {
            i: worst.0,
            j: worst.1,
            deviation: worst.2,
        });
    }

    let images: Vec<DVector<f64>> = basis.iter().map(|b| matrix * b).collect();
    let mut projected = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let value = 0.5 * (basis[i].dot(&images[j]) + basis[j].dot(&images[i]));
            projected[(i, j)] = value;
            projected[(j, i)] = value;
        }
    }
    let small = lowest_eigenpairs(&projected, k)?;
    let mut lifted = DMatrix::zeros(n, k);
    for col in 0..k {
        for (b, coeff) in basis.iter().zip(small.eigenvectors.column(col).iter()) {
            lifted.column_mut(col).axpy(*coeff, b, 1.0);
        }
    }
    Ok(Spectrum {
        eigenvalues: small.eigenvalues,
        eigenvectors: lifted,
    })
}

/// Full eigendecomposition. Returns ascending eigenvalues and, for each, its
/// eigenvector as a contiguous row.
fn symmetric_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.nrows();
    // v[i][j] holds the matrix row-major; tred2 overwrites it with the
    // accumulated Householder transform.
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| matrix[(i, j)]).collect())
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);

    // tql2 rotates columns of v; work on the transpose so each rotation
    // touches two contiguous rows.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    drop(v);
    tql2(&mut w, &mut d, &mut e);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut rows: Vec<Option<Vec<f64>>> = w.into_iter().map(Some).collect();
    let vectors = order
        .iter()
        .map(|&i| rows[i].take().expect("each eigenvector is taken once"))
        .collect();
    (values, vectors)
}

/// Householder tridiagonalization. On return `d` holds the diagonal, `e[1..]`
/// the sub-diagonal and `v` the orthogonal transform.
fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for (dk, row) in d.iter_mut().zip(v.iter()).take(i + 1) {
                *dk = row[i + 1] / h;
            }
            for j in 0..=i {
                let g: f64 = v.iter().take(i + 1).map(|row| row[i + 1] * row[j]).sum();
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`. `w` holds the transform from
/// `tred2` transposed; on return row `i` of `w` is the eigenvector of `d[i]`.
fn tql2(w: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = w.split_at_mut(i + 1);
                    let (row_i, row_next) = (&mut lo[i], &mut hi[0]);
                    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, BoundaryCondition};
    use std::f64::consts::PI;

    /// Sturm-count bisection on the characteristic polynomial of a symmetric
    /// tridiagonal matrix: the k-th smallest root.
    fn tridiagonal_root(diag: &[f64], off: &[f64], k: usize) -> f64 {
        let count_below = |x: f64| {
            let mut count = 0;
            let mut q = 1.0;
            for i in 0..diag.len() {
                let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
                q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
                if q == 0.0 {
                    q = 1e-300;
                }
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn fixed_chain_of_40_ground_energy() {
        let h = build_chain(40, BoundaryCondition::Fixed, None).unwrap();
        let s = h.lowest(1).unwrap();
        let analytic = 4.0 * (PI / 82.0).sin().powi(2);
        assert!((s.eigenvalues[0] - analytic).abs() < 1e-12);
        assert!((s.eigenvalues[0] - 0.00587).abs() < 5e-6);
    }

    #[test]
    fn free_chain_zero_mode() {
        let h = build_chain(8, BoundaryCondition::Free, None).unwrap();
        let s = h.lowest(1).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-14);
        let c = 1.0 / 8f64.sqrt();
        assert!(s.eigenvectors.column(0).iter().all(|x| (x - c).abs() < 1e-12));
    }

    #[test]
    fn free_chain_of_16_against_characteristic_polynomial() {
        let h = build_chain(16, BoundaryCondition::Free, None).unwrap();
        let mut diag = vec![2.0; 16];
        diag[0] = 1.0;
        diag[15] = 1.0;
        let off = vec![-1.0; 15];
        let s = h.lowest(4).unwrap();
        for k in 0..4 {
            let root = tridiagonal_root(&diag, &off, k);
            let dispersion = 4.0 * (k as f64 * PI / 32.0).sin().powi(2);
            assert!((root - dispersion).abs() < 1e-12, "k={k}");
            assert!((s.eigenvalues[k] - root).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn chain_dispersions_for_all_small_sizes() {
        for n in 2..=64 {
            for bc in [BoundaryCondition::Free, BoundaryCondition::Fixed] {
                let h = build_chain(n, bc, None).unwrap();
                let s = full_spectrum(h.matrix()).unwrap();
                for (k, &lambda) in s.eigenvalues.iter().enumerate() {
                    let expected = match bc {
                        BoundaryCondition::Free => {
                            4.0 * (k as f64 * PI / (2.0 * n as f64)).sin().powi(2)
                        }
                        BoundaryCondition::Fixed => {
                            4.0 * ((k + 1) as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2)
                        }
                    };
                    assert!((lambda - expected).abs() < 1e-9, "n={n} {bc} k={k}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let mut m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(lowest_eigenpairs(&m, 0).is_err());
        assert!(lowest_eigenpairs(&m, 3).is_err());
        m[(0, 1)] = 2.0 + 1e-9;
        assert!(matches!(
            lowest_eigenpairs(&m, 1),
            Err(Error::NonSymmetric { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn sign_convention() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let s = full_spectrum(&m).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
        for i in 0..2 {
            assert!(s.eigenvectors[(0, i)] > 0.0);
        }
    }

    #[test]
    fn one_by_one() {
        let m = DMatrix::from_element(1, 1, -3.5);
        let s = full_spectrum(&m).unwrap();
        assert_eq!(s.eigenvalues, vec![-3.5]);
        assert_eq!(s.eigenvectors[(0, 0)], 1.0);
    }

    #[test]
    fn rayleigh_ritz_on_exact_subspace() {
        let h = build_chain(24, BoundaryCondition::Fixed, None).unwrap();
        let exact = h.lowest(5).unwrap();
        let basis = exact.vectors();
        let projected = rayleigh_ritz(h.matrix(), &basis).unwrap();
        for (a, b) in projected.eigenvalues.iter().zip(&exact.eigenvalues) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rayleigh_ritz_constant_on_free_chain() {
        let h = build_chain(10, BoundaryCondition::Free, None).unwrap();
        let c = DVector::from_element(10, 1.0 / 10f64.sqrt());
        let s = rayleigh_ritz(h.matrix(), &[c]).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-15);
    }

    #[test]
    fn rayleigh_ritz_reports_worst_pair() {
        let h = build_chain(3, BoundaryCondition::Free, None).unwrap();
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let c = DVector::from_vec(vec![0.1, 0.0, 1.0]);
        let err = rayleigh_ritz(h.matrix(), &[a, b, c]).unwrap_err();
        assert!(matches!(err, Error::NonOrthonormal { i: 0, j: 2, .. }));
    }

    #[test]
    fn residual_and_orthonormality_on_a_dense_matrix() {
        let n = 30;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            (a * 0.37 + b * 1.13).sin() + if i == j { 0.5 * a } else { 0.0 }
        });
        let s = full_spectrum(&m).unwrap();
        let frob = m.norm();
        for i in 0..n {
            assert!(s.residual(&m, i) <= 1e-9 * frob);
            if i > 0 {
                assert!(s.eigenvalues[i] >= s.eigenvalues[i - 1]);
            }
        }
        let gram = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((gram - DMatrix::identity(n, n)).amax() < 1e-10);
        // determinism
        assert_eq!(full_spectrum(&m).unwrap(), s);
    }
}
