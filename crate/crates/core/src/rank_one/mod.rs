//! Eigenvalues of rank-one modified diagonal matrices `D - rho z z^H`.
//!
//! The problem is first deflated (zero weights and repeated diagonal entries
//! are split off unchanged), then each remaining eigenvalue is the unique zero
//! of the secular function `p(x) = 1 - rho sum |z_k|^2 / (d_k - x)` inside its
//! interlacing bracket. Roots are independent of each other, so callers can
//! ask for just the few they need.

mod deflation;
mod secular;

pub use deflation::{deflate, deflate_with, DeflationResult, GivensRotation};
pub use secular::{root_secular_k, root_secular_k_with, SolverOptions};

use crate::error::{DoaError, Result};
use crate::linalg::CMatrix;
use crate::Complex64;

/// The triple `(D, rho, z)` describing `D - rho z z^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneMod {
    d: Vec<f64>,
    rho: f64,
    z: Vec<Complex64>,
    weights: Vec<f64>,
}

impl RankOneMod {
    pub fn new(d: Vec<f64>, rho: f64, z: Vec<Complex64>) -> Result<Self> {
        if d.len() != z.len() {
            return Err(DoaError::InvalidArgument(format!(
                "diagonal has {} entries but z has {}",
                d.len(),
                z.len()
            )));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(DoaError::InvalidArgument(format!(
                "rho must be positive and finite, got {rho}"
            )));
        }
        if d.iter().any(|v| !v.is_finite())
            || z.iter().any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(DoaError::InvalidArgument("non-finite entries".into()));
        }
        let weights = z.iter().map(|v| v.norm_sqr()).collect();
        Ok(Self { d, rho, z, weights })
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    /// `|z_k|^2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn z_norm_sqr(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `max d - min d + rho ||z||^2`, the scale of the whole spectrum.
    pub fn spread(&self) -> f64 {
        let hi = self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.d.iter().copied().fold(f64::INFINITY, f64::min);
        if self.d.is_empty() {
            return 0.0;
        }
        hi - lo + self.rho * self.z_norm_sqr()
    }

    /// Strictly descending diagonal and no zero weight.
    pub fn is_deflated(&self) -> bool {
        self.d.windows(2).all(|w| w[0] > w[1]) && self.weights.iter().all(|&w| w > 0.0)
    }

    /// The dense matrix `D - rho z z^H`.
    pub fn to_dense(&self) -> CMatrix {
        let k = self.len();
        CMatrix::from_fn(k, k, |i, j| {
            let diag = if i == j { self.d[i] } else { 0.0 };
            Complex64::new(diag, 0.0) - self.z[i] * self.z[j].conj() * self.rho
        })
    }
}

/// `p(x) = 1 - rho sum_k |z_k|^2 / (d_k - x)`.
pub fn secular_value(m: &RankOneMod, x: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (k, (&d, &w)) in m.d.iter().zip(&m.weights).enumerate() {
        let delta = d - x;
        if delta == 0.0 {
            return Err(DoaError::PoleEvaluation { index: k, pole: d });
        }
        acc += w / delta;
    }
    Ok(1.0 - m.rho * acc)
}

/// Which end of the spectrum to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Largest,
    Smallest,
}

/// Eigenvalues returned by [`eigenvalues`], descending, with the number of
/// rational iterations each one took (0 for deflated values).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SecularRoots {
    pub roots: Vec<f64>,
    pub iterations: Vec<u32>,
}

impl SecularRoots {
    pub fn total_iterations(&self) -> u32 {
        self.iterations.iter().sum()
    }
}

/// The `how_many` largest or smallest eigenvalues of `D - rho z z^H`.
///
/// `warm` supplies starting points (typically the roots at a neighbouring grid
/// direction); a warm value is used for a bracket only if it lies strictly
/// inside it.
pub fn eigenvalues(
    m: &RankOneMod,
    how_many: usize,
    which: Which,
    warm: Option<&SecularRoots>,
) -> Result<SecularRoots> {
    eigenvalues_with(m, how_many, which, warm, &SolverOptions::default())
}

pub fn eigenvalues_with(
    m: &RankOneMod,
    how_many: usize,
    which: Which,
    warm: Option<&SecularRoots>,
    opts: &SolverOptions,
) -> Result<SecularRoots> {
    if how_many > m.len() {
        return Err(DoaError::InvalidArgument(format!(
            "requested {how_many} eigenvalues of a {}x{} problem",
            m.len(),
            m.len()
        )));
    }
    if how_many == 0 {
        return Ok(SecularRoots::default());
    }
    deflate(m).eigenvalues(how_many, which, warm, opts)
}

/// Normalised `(D - root I)^{-1} z`.
pub fn eigenvector_for_root(m: &RankOneMod, root: f64) -> Result<Vec<Complex64>> {
    let mut v = Vec::with_capacity(m.len());
    for (k, (&d, &z)) in m.d.iter().zip(&m.z).enumerate() {
        let delta = d - root;
        if delta == 0.0 {
            return Err(DoaError::DegenerateEigenvector { index: k, root });
        }
        v.push(z / delta);
    }
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(DoaError::DegenerateEigenvector { index: 0, root });
    }
    v.iter_mut().for_each(|c| *c /= norm);
    Ok(v)
}
