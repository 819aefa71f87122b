//! Removal of unperturbed eigenvalues before secular rooting.
//!
//! Two cases leave an eigenvalue of `D - rho z z^H` untouched:
//! a (numerically) zero weight `z_k`, and a repeated diagonal entry, which a
//! Givens rotation turns into a zero weight. What remains has a strictly
//! descending diagonal and nonzero weights, so its eigenvalues strictly
//! interlace the diagonal.

use super::secular::{root_secular_k_with, SolverOptions};
use super::{RankOneMod, SecularRoots, Which};
use crate::error::Result;
use crate::Complex64;

/// Unitary 2x2 rotation acting on coordinates `(keep, zeroed)`.
///
/// In those coordinates the rotation matrix is `[[alpha, -conj(beta)], [beta, conj(alpha)]]`
/// with `alpha = z_keep / r`, `beta = z_zeroed / r`, `r = sqrt(|z_keep|^2 + |z_zeroed|^2)`.
/// Its adjoint maps `z` to `(r, 0)` on the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRotation {
    pub keep: usize,
    pub zeroed: usize,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl GivensRotation {
    /// `v <- G v` on the two affected coordinates.
    pub fn apply(&self, v: &mut [Complex64]) {
        let (a, b) = (v[self.keep], v[self.zeroed]);
        v[self.keep] = self.alpha * a - self.beta.conj() * b;
        v[self.zeroed] = self.beta * a + self.alpha.conj() * b;
    }

    /// `v <- G^H v`.
    pub fn apply_adjoint(&self, v: &mut [Complex64]) {
        let (a, b) = (v[self.keep], v[self.zeroed]);
        v[self.keep] = self.alpha.conj() * a + self.beta.conj() * b;
        v[self.zeroed] = -self.beta * a + self.alpha * b;
    }
}

/// Outcome of [`deflate`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationResult {
    /// Eigenvalues left unchanged by the update, descending, with multiplicity.
    pub kept: Vec<(f64, usize)>,
    /// The problem left for secular rooting.
    pub reduced: RankOneMod,
    /// Original index of each reduced coordinate.
    pub reduced_index: Vec<usize>,
    /// Rotations in the order they were applied.
    pub rotations: Vec<GivensRotation>,
    original_len: usize,
}

/// Deflation with `tol_z = tol_d = K * machine epsilon`.
pub fn deflate(m: &RankOneMod) -> DeflationResult {
    let tol = m.len() as f64 * f64::EPSILON;
    deflate_with(m.d(), m.rho(), m.z(), tol, tol)
}

/// Deflates `diag(d) - rho z z^H`.
///
/// `|z_k| <= tol_z ||z||` counts as zero; `|d_k - d_i| <= tol_d * spread`
/// counts as repeated, where `spread = max d - min d + rho ||z||^2`.
/// `d` may be in any order.
pub fn deflate_with(
    d: &[f64],
    rho: f64,
    z: &[Complex64],
    tol_z: f64,
    tol_d: f64,
) -> DeflationResult {
    let k = d.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));

    let z_norm2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
    let z_norm = z_norm2.sqrt();
    let spread = match (order.first(), order.last()) {
        (Some(&hi), Some(&lo)) => d[hi] - d[lo] + rho * z_norm2,
        _ => 0.0,
    };
    let z_floor = tol_z * z_norm;
    let d_floor = tol_d * spread;

    let mut zw: Vec<Complex64> = z.to_vec();
    let mut kept_values: Vec<f64> = Vec::new();
    let mut rotations = Vec::new();
    let mut reduced_index: Vec<usize> = Vec::with_capacity(k);

    for &idx in &order {
        if zw[idx].norm() <= z_floor {
            kept_values.push(d[idx]);
            continue;
        }
        if let Some(&prev) = reduced_index.last() {
            if (d[prev] - d[idx]).abs() <= d_floor {
                let r = (zw[prev].norm_sqr() + zw[idx].norm_sqr()).sqrt();
                let rot = GivensRotation {
                    keep: prev,
                    zeroed: idx,
                    alpha: zw[prev] / r,
                    beta: zw[idx] / r,
                };
                rot.apply_adjoint(&mut zw);
                zw[idx] = Complex64::new(0.0, 0.0);
                rotations.push(rot);
                kept_values.push(d[idx]);
                continue;
            }
        }
        reduced_index.push(idx);
    }

    kept_values.sort_by(|a, b| b.total_cmp(a));
    let mut kept: Vec<(f64, usize)> = Vec::new();
    for v in kept_values {
        match kept.last_mut() {
            Some((value, count)) if *value == v => *count += 1,
            _ => kept.push((v, 1)),
        }
    }

    let reduced = RankOneMod::new(
        reduced_index.iter().map(|&i| d[i]).collect(),
        rho,
        reduced_index.iter().map(|&i| zw[i]).collect(),
    )
    .expect("reduced problem inherits valid inputs");

    DeflationResult {
        kept,
        reduced,
        reduced_index,
        rotations,
        original_len: k,
    }
}

impl DeflationResult {
    pub fn kept_count(&self) -> usize {
        self.kept.iter().map(|&(_, n)| n).sum()
    }

    pub fn kept_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.kept
            .iter()
            .flat_map(|&(v, n)| std::iter::repeat_n(v, n))
    }

    /// Maps an eigenvector of the reduced problem back to original coordinates.
    pub fn lift_eigenvector(&self, reduced: &[Complex64]) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.original_len];
        for (&idx, &val) in self.reduced_index.iter().zip(reduced) {
            v[idx] = val;
        }
        for rot in self.rotations.iter().rev() {
            rot.apply(&mut v);
        }
        v
    }

    /// The `how_many` largest or smallest eigenvalues of the original problem,
    /// descending.
    pub fn eigenvalues(
        &self,
        how_many: usize,
        which: Which,
        warm: Option<&SecularRoots>,
        opts: &SolverOptions,
    ) -> Result<SecularRoots> {
        let kr = self.reduced.len();
        let needed = how_many.min(kr);
        let range = match which {
            Which::Largest => 0..needed,
            Which::Smallest => kr - needed..kr,
        };
        let d = self.reduced.d();
        let lower_bound = if kr > 0 {
            let span = self.reduced.rho() * self.reduced.z_norm_sqr();
            d[kr - 1] - span * (1.0 + 1e-6)
        } else {
            0.0
        };

        let mut pairs: Vec<(f64, u32)> = Vec::with_capacity(needed + self.kept.len());
        for k in range {
            let hi = d[k];
            let lo = if k + 1 < kr { d[k + 1] } else { lower_bound };
            let start = warm.and_then(|w| w.roots.iter().copied().find(|&x| x > lo && x < hi));
            let (root, it) = root_secular_k_with(&self.reduced, k, start, opts)?;
            pairs.push((root, it));
        }
        pairs.extend(self.kept_values().map(|v| (v, 0)));
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let chosen: Vec<(f64, u32)> = match which {
            Which::Largest => pairs.into_iter().take(how_many).collect(),
            Which::Smallest => {
                let skip = pairs.len().saturating_sub(how_many);
                pairs.into_iter().skip(skip).collect()
            }
        };
        Ok(SecularRoots {
            roots: chosen.iter().map(|p| p.0).collect(),
            iterations: chosen.iter().map(|p| p.1).collect(),
        })
    }
}
