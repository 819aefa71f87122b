//! Turning a null-spectrum into `N` angle estimates.

use crate::array::SampleCovariance;
use crate::error::{DoaError, Result};
use crate::estimators::{spectrum, EstimatorKind, SpectrumOptions, SpectrumResult};
use crate::grid::SteeringGrid;

/// Angles are compared against the separation with this slack so that dips
/// exactly `min_separation` apart on a uniform grid are accepted.
const SEPARATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Ascending.
    pub angles: Vec<f64>,
    /// Spectrum (or objective) value at each returned angle.
    pub values: Vec<f64>,
    /// Fewer separated local minima than requested were found and the rest
    /// were filled from the lowest remaining grid points.
    pub fallback: bool,
    /// Directions at which the spectrum could not be evaluated.
    pub failures: usize,
}

/// Default separation: two grid cells.
pub fn default_separation(angles: &[f64]) -> f64 {
    if angles.len() < 2 {
        return 0.0;
    }
    2.0 * (angles[angles.len() - 1] - angles[0]).abs() / (angles.len() - 1) as f64
}

fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Leftmost index of every plateau that is strictly below both neighbours.
fn interior_minima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let v = key(values[i]);
        if v == f64::INFINITY {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && key(values[j + 1]) == v {
            j += 1;
        }
        if j + 1 < n && key(values[i - 1]) > v && key(values[j + 1]) > v {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// The `n` deepest local minima of a spectrum that are pairwise at least
/// `min_separation` degrees apart.
pub fn find_n_minima(spec: &SpectrumResult, n: usize, min_separation: f64) -> Result<DoaEstimate> {
    let values = &spec.values;
    let angles = &spec.angles;
    if values.len() < 3 || values.len() != angles.len() {
        return Err(DoaError::InvalidArgument(
            "peak search needs a spectrum of at least three points".into(),
        ));
    }
    if n == 0 {
        return Err(DoaError::InvalidArgument("asked for zero minima".into()));
    }
    let clear = |chosen: &[usize], i: usize| {
        chosen
            .iter()
            .all(|&c| (angles[c] - angles[i]).abs() >= min_separation - SEPARATION_SLACK)
    };
    let by_depth = |idx: &mut Vec<usize>| {
        idx.sort_by(|&a, &b| key(values[a]).total_cmp(&key(values[b])).then(a.cmp(&b)));
    };

    let mut minima = interior_minima(values);
    by_depth(&mut minima);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for i in minima {
        if chosen.len() == n {
            break;
        }
        if clear(&chosen, i) {
            chosen.push(i);
        }
    }

    let fallback = chosen.len() < n;
    if fallback {
        let mut rest: Vec<usize> = (0..values.len()).filter(|i| !chosen.contains(i)).collect();
        by_depth(&mut rest);
        for i in rest {
            if chosen.len() == n {
                break;
            }
            if key(values[i]).is_finite() && clear(&chosen, i) {
                chosen.push(i);
            }
        }
        if chosen.len() < n {
            return Err(DoaError::InvalidArgument(format!(
                "grid cannot hold {n} minima separated by {min_separation} degrees"
            )));
        }
    }

    chosen.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]));
    Ok(DoaEstimate {
        angles: chosen.iter().map(|&i| angles[i]).collect(),
        values: chosen.iter().map(|&i| values[i]).collect(),
        fallback,
        failures: spec.failures(),
    })
}

/// Moves each estimate to the vertex of the parabola through its grid point
/// and the two neighbours. Endpoints and flat neighbourhoods are left alone.
pub fn refine_parabolic(spec: &SpectrumResult, est: &DoaEstimate) -> DoaEstimate {
    let mut out = est.clone();
    for (slot, &angle) in est.angles.iter().enumerate() {
        let Some(i) = spec.angles.iter().position(|&a| a == angle) else {
            continue;
        };
        if i == 0 || i + 1 >= spec.angles.len() {
            continue;
        }
        let (y0, y1, y2) = (spec.values[i - 1], spec.values[i], spec.values[i + 1]);
        let curvature = y0 - 2.0 * y1 + y2;
        if curvature.is_nan() || curvature <= 0.0 {
            continue;
        }
        let h = 0.5 * (spec.angles[i + 1] - spec.angles[i - 1]);
        let offset = 0.5 * (y0 - y2) / curvature;
        out.angles[slot] = angle + offset.clamp(-0.5, 0.5) * h;
        out.values[slot] = y1 - 0.25 * (y0 - y2) * offset;
    }
    let mut order: Vec<usize> = (0..out.angles.len()).collect();
    order.sort_by(|&a, &b| out.angles[a].total_cmp(&out.angles[b]));
    out.angles = order.iter().map(|&i| out.angles[i]).collect();
    out.values = order.iter().map(|&i| out.values[i]).collect();
    out
}

/// `tr(P_A^perp R)` for `A = [a_i, a_j]` from precomputed inner products.
#[inline]
fn pair_residual(
    tr: f64,
    n1: f64,
    n2: f64,
    g: crate::Complex64,
    h11: f64,
    h22: f64,
    h12: crate::Complex64,
) -> f64 {
    let det = n1 * n2 - g.norm_sqr();
    if det <= 0.0 {
        return f64::INFINITY;
    }
    tr - (n2 * h11 + n1 * h22 - 2.0 * (g.conj() * h12).re) / det
}

/// Exhaustive two-source deterministic ML over all grid pairs `i < j`.
pub fn dml_grid2(cov: &SampleCovariance, grid: &SteeringGrid) -> Result<DoaEstimate> {
    if cov.n_sources() != 2 {
        return Err(DoaError::Unsupported {
            estimator: EstimatorKind::DmlGrid2.tag().into(),
            what: format!("{} sources", cov.n_sources()),
        });
    }
    if grid.len() < 2 || grid.sensors() != cov.sensors() {
        return Err(DoaError::InvalidArgument(
            "two-source grid search needs at least two directions matching the array".into(),
        ));
    }
    let a = grid.vectors();
    let ra = cov.r_hat() * a;
    let tr = cov.trace();
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm_squared()).collect();
    let diag: Vec<f64> = (0..grid.len())
        .map(|i| a.column(i).dotc(&ra.column(i)).re)
        .collect();

    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..grid.len() {
        let ai = a.column(i);
        for j in i + 1..grid.len() {
            let g = ai.dotc(&a.column(j));
            let h12 = ai.dotc(&ra.column(j));
            let f = pair_residual(tr, norms[i], norms[j], g, diag[i], diag[j], h12);
            if f < best.0 {
                best = (f, i, j);
            }
        }
    }
    let (f, i, j) = best;
    Ok(DoaEstimate {
        angles: vec![grid.angles()[i], grid.angles()[j]],
        values: vec![f, f],
        fallback: false,
        failures: 0,
    })
}

/// Estimates `N` DOAs with any estimator: grid search for the two-source DML,
/// separated spectrum minima otherwise.
pub fn estimate_doas(
    kind: EstimatorKind,
    cov: &SampleCovariance,
    grid: &SteeringGrid,
    opts: &SpectrumOptions,
    min_separation: f64,
) -> Result<DoaEstimate> {
    if kind == EstimatorKind::DmlGrid2 {
        return dml_grid2(cov, grid);
    }
    let spec = spectrum(kind, cov, grid, opts)?;
    find_n_minima(&spec, cov.n_sources(), min_separation)
}
