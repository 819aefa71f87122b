//! Dense complex helpers shared by the estimators and the reference paths.

use nalgebra::{DMatrix, DVector};

use crate::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Full Hermitian eigendecomposition, eigenvalues sorted descending.
///
/// Only the Hermitian part of `m` is used.
pub fn hermitian_eig(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, sorted descending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `max |m - m^H| / max(|m|, tiny)`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Orthogonal projector onto the column span of `m` (`m (m^H m)^+ m^H`).
///
/// Columns are orthonormalised by a Hermitian eigendecomposition of the Gram
/// matrix, so rank-deficient inputs project onto the span actually present.
pub fn projector(m: &CMatrix) -> CMatrix {
    let rows = m.nrows();
    let gram = m.adjoint() * m;
    let (vals, vecs) = hermitian_eig(&gram);
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let mut p = CMatrix::zeros(rows, rows);
    for (k, &v) in vals.iter().enumerate() {
        if v <= top * 1e-12 * gram.nrows() as f64 || v <= 0.0 {
            continue;
        }
        let q = (m * vecs.column(k)) / Complex64::new(v.sqrt(), 0.0);
        p += &q * q.adjoint();
    }
    p
}

/// `I - a a^H / ||a||^2`.
pub fn orth_projector(a: &CVector) -> CMatrix {
    let m = a.len();
    let norm2 = a.norm_squared();
    CMatrix::identity(m, m) - (a * a.adjoint()) / Complex64::new(norm2, 0.0)
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        let x = CMatrix::from_fn(4, 6, |i, j| {
            Complex64::new(
                ((i * 7 + j * 3) % 5) as f64 - 2.0,
                ((i + 2 * j) % 3) as f64 - 1.0,
            )
        });
        &x * x.adjoint()
    }

    #[test]
    fn eig_reconstructs_and_sorts() {
        let r = sample();
        let (vals, vecs) = hermitian_eig(&r);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let lam = CMatrix::from_diagonal(&DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let back = &vecs * lam * vecs.adjoint();
        assert!((back - &r).norm() <= 1e-12 * r.norm());
    }

    #[test]
    fn projector_is_idempotent() {
        let m = CMatrix::from_fn(5, 2, |i, j| {
            Complex64::new((i + j * j) as f64, (i * i * j) as f64 - 1.0)
        });
        let p = projector(&m);
        assert!((&p * &p - &p).norm() < 1e-12);
        assert!((trace_re(&p) - 2.0).abs() < 1e-12, "trace {}", trace_re(&p));
        assert!((&p * &m - &m).norm() < 1e-12 * m.norm());
    }
}
