use super::{
    check_grid, invertible, projections, DirectionDiagnostics, EstimatorKind, SpectrumOptions,
    SpectrumResult,
};
use crate::array::SampleCovariance;
use crate::error::{DoaError, Result};
use crate::grid::SteeringGrid;
use crate::linalg::CVector;
use crate::Complex64;

fn push(out: &mut SpectrumResult, value: f64) {
    out.values.push(value);
    out.diagnostics.push(DirectionDiagnostics::default());
}

/// Beamformer null-spectrum `tr(R) - a^H R a / |a|^2`, which is also the
/// relaxed DML criterion for a single source.
pub fn beamformer_spectrum(cov: &SampleCovariance, grid: &SteeringGrid) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    let mut out = SpectrumResult::new(EstimatorKind::Beamformer, grid);
    let tr = cov.trace();
    let ra = cov.r_hat() * grid.vectors();
    for (g, a) in grid.vectors().column_iter().enumerate() {
        let ara = a.dotc(&ra.column(g)).re;
        push(&mut out, (tr - ara / a.norm_squared()).max(0.0));
    }
    Ok(out)
}

/// Capon power `1 / (a^H R^{-1} a)` evaluated through the eigendecomposition.
/// A singular matrix must be loaded by the caller.
pub fn capon_power(cov: &SampleCovariance, a: &CVector) -> Result<f64> {
    if cov.is_singular() {
        return Err(DoaError::SingularCovariance {
            smallest: cov.smallest_eigenvalue(),
        });
    }
    let z = cov.eig_vectors().adjoint() * a;
    Ok(capon_from_projection(z.iter(), cov.eig_values()))
}

pub(crate) fn capon_from_projection<'a>(
    z: impl Iterator<Item = &'a Complex64>,
    values: &[f64],
) -> f64 {
    let s: f64 = z.zip(values).map(|(zj, &lam)| zj.norm_sqr() / lam).sum();
    1.0 / s
}

/// Capon null-spectrum `a^H R^{-1} a / |a|^2`, the reciprocal of the
/// normalised Capon power. A singular matrix is loaded first.
pub fn capon_spectrum(
    cov: &SampleCovariance,
    grid: &SteeringGrid,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    let (cov, gamma) = invertible(cov, opts.auto_loading)?;
    let mut out = SpectrumResult::new(EstimatorKind::Capon, grid);
    out.auto_loaded = gamma;
    let z = projections(cov.eig_vectors(), grid);
    for (g, a) in grid.vectors().column_iter().enumerate() {
        let power = capon_from_projection(z.column(g).iter(), cov.eig_values());
        push(&mut out, 1.0 / (power * a.norm_squared()));
    }
    Ok(out)
}

/// MUSIC null-spectrum `|U_n^H a|^2 / |a|^2`.
pub fn music_spectrum(cov: &SampleCovariance, grid: &SteeringGrid) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    let mut out = SpectrumResult::new(EstimatorKind::Music, grid);
    let zn = projections(&cov.noise_vectors(), grid);
    for (g, a) in grid.vectors().column_iter().enumerate() {
        push(&mut out, zn.column(g).norm_squared() / a.norm_squared());
    }
    Ok(out)
}
