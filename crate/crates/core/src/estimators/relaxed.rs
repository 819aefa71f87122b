use super::classic::capon_from_projection;
use super::{
    check_grid, invertible, projections, DirectionDiagnostics, EstimatorKind, SpectrumOptions,
    SpectrumPath, SpectrumResult, WsfWeighting,
};
use crate::array::SampleCovariance;
use crate::error::{DoaError, Result};
use crate::grid::SteeringGrid;
use crate::linalg::{self, CMatrix, CVector};
use crate::rank_one::{eigenvalues_with, RankOneMod, SecularRoots, Which};
use crate::Complex64;

/// Runs one rank-one solve and records its diagnostics.
struct RootChain<'a> {
    opts: &'a SpectrumOptions,
    previous: Option<SecularRoots>,
}

impl<'a> RootChain<'a> {
    fn new(opts: &'a SpectrumOptions) -> Self {
        Self {
            opts,
            previous: None,
        }
    }

    fn solve(
        &mut self,
        m: &RankOneMod,
        how_many: usize,
        which: Which,
        out: &mut SpectrumResult,
        diag: &mut DirectionDiagnostics,
    ) -> Result<Vec<f64>> {
        let warm = if self.opts.warm_start {
            self.previous.as_ref()
        } else {
            None
        };
        let roots = eigenvalues_with(m, how_many, which, warm, &self.opts.solver)?;
        for &it in &roots.iterations {
            if it > 0 {
                out.root_iterations.push(it);
                diag.roots += 1;
            }
            diag.iterations += it;
        }
        let values = roots.roots.clone();
        self.previous = Some(roots);
        Ok(values)
    }
}

fn nonneg_values(cov: &SampleCovariance) -> Vec<f64> {
    cov.eig_values().iter().map(|v| v.max(0.0)).collect()
}

fn weighted_z(z: impl Iterator<Item = Complex64>, w: &[f64]) -> Vec<Complex64> {
    z.zip(w).map(|(zj, &wj)| zj * wj.sqrt()).collect()
}

/// Relaxed DML null-spectrum: the sum of the `M - N + 1` smallest eigenvalues
/// of `P_a^perp R`.
pub fn pr_dml_spectrum(
    cov: &SampleCovariance,
    grid: &SteeringGrid,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    let n = cov.n_sources();
    let mut out = SpectrumResult::new(EstimatorKind::PrDml, grid);
    match opts.path {
        SpectrumPath::Naive => {
            for a in grid.vectors().column_iter() {
                let p = linalg::orth_projector(&a.into_owned());
                let lam = linalg::hermitian_eigenvalues(&(&p * cov.r_hat() * &p));
                let f: f64 = lam[n - 1..].iter().sum();
                out.values.push(f.max(0.0));
                out.diagnostics.push(DirectionDiagnostics::default());
            }
        }
        SpectrumPath::Fast => {
            let lam = nonneg_values(cov);
            let tr: f64 = lam.iter().sum();
            let z_all = projections(cov.eig_vectors(), grid);
            let mut chain = RootChain::new(opts);
            for (g, a) in grid.vectors().column_iter().enumerate() {
                let mut diag = DirectionDiagnostics::default();
                let na2 = a.norm_squared();
                let z = z_all.column(g);
                let ara: f64 = z.iter().zip(&lam).map(|(zj, l)| l * zj.norm_sqr()).sum();
                let mut f = tr - ara / na2;
                if n > 1 {
                    let m = RankOneMod::new(
                        lam.clone(),
                        1.0 / na2,
                        weighted_z(z.iter().copied(), &lam),
                    )?;
                    let top = chain.solve(&m, n - 1, Which::Largest, &mut out, &mut diag)?;
                    f -= top.iter().sum::<f64>();
                }
                out.values.push(f.max(0.0));
                out.diagnostics.push(diag);
            }
        }
    }
    Ok(out)
}

/// Relaxed subspace-fitting null-spectrum: the `N`-th eigenvalue of
/// `P_a^perp U_s W U_s^H`.
pub fn pr_wsf_spectrum(
    cov: &SampleCovariance,
    weighting: &WsfWeighting,
    grid: &SteeringGrid,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    let n = cov.n_sources();
    if weighting.w.len() != n {
        return Err(DoaError::InvalidArgument(format!(
            "{} weights for {n} sources",
            weighting.w.len()
        )));
    }
    let us = cov.signal_vectors();
    let mut out = SpectrumResult::new(EstimatorKind::PrWsf, grid);
    match opts.path {
        SpectrumPath::Naive => {
            let wdiag =
                CVector::from_iterator(n, weighting.w.iter().map(|&w| Complex64::new(w, 0.0)));
            let y = &us * CMatrix::from_diagonal(&wdiag) * us.adjoint();
            for a in grid.vectors().column_iter() {
                let p = linalg::orth_projector(&a.into_owned());
                let lam = linalg::hermitian_eigenvalues(&(&p * &y * &p));
                let f: f64 = lam[n - 1..].iter().sum();
                out.values.push(f.max(0.0));
                out.diagnostics.push(DirectionDiagnostics::default());
            }
        }
        SpectrumPath::Fast => {
            let z_all = projections(&us, grid);
            let mut chain = RootChain::new(opts);
            for (g, a) in grid.vectors().column_iter().enumerate() {
                let mut diag = DirectionDiagnostics::default();
                let na2 = a.norm_squared();
                let zw = weighted_z(z_all.column(g).iter().copied(), &weighting.w);
                let m = RankOneMod::new(weighting.w.clone(), 1.0 / na2, zw)?;
                let low = chain.solve(&m, 1, Which::Smallest, &mut out, &mut diag)?;
                out.values.push(low[0].max(0.0));
                out.diagnostics.push(diag);
            }
        }
    }
    Ok(out)
}

const CCF_CANCELLATION: f64 = 1e-6;

/// Relaxed covariance-fitting null-spectrum: the sum of the `M - N + 1`
/// smallest squared eigenvalues of `R - sigma_C^2 a a^H`, with `sigma_C^2` the
/// Capon power. A singular matrix is loaded first and the loaded matrix is
/// used throughout.
pub fn pr_ccf_spectrum(
    cov: &SampleCovariance,
    grid: &SteeringGrid,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    let (cov, gamma) = invertible(cov, opts.auto_loading)?;
    let n = cov.n_sources();
    let mut out = SpectrumResult::new(EstimatorKind::PrCcf, grid);
    out.auto_loaded = gamma;
    let lam = cov.eig_values().to_vec();
    let z_all = projections(cov.eig_vectors(), grid);
    match opts.path {
        SpectrumPath::Naive => {
            for (g, a) in grid.vectors().column_iter().enumerate() {
                let power = capon_from_projection(z_all.column(g).iter(), &lam);
                let a = a.into_owned();
                let resid = cov.r_hat() - (&a * a.adjoint()) * Complex64::new(power, 0.0);
                let ev = linalg::hermitian_eigenvalues(&resid);
                let mut sq: Vec<f64> = ev.iter().map(|v| v * v).collect();
                sq.sort_by(|x, y| y.total_cmp(x));
                let f: f64 = sq[n - 1..].iter().sum();
                out.values.push(f.max(0.0));
                out.diagnostics.push(DirectionDiagnostics::default());
            }
        }
        SpectrumPath::Fast => {
            let tr2: f64 = lam.iter().map(|l| l * l).sum();
            let mut chain = RootChain::new(opts);
            for (g, a) in grid.vectors().column_iter().enumerate() {
                let mut diag = DirectionDiagnostics::default();
                let na2 = a.norm_squared();
                let z = z_all.column(g);
                let power = capon_from_projection(z.iter(), &lam);
                let ara: f64 = z.iter().zip(&lam).map(|(zj, l)| l * zj.norm_sqr()).sum();
                let mut f = tr2 - 2.0 * power * ara + power * power * na2 * na2;
                let m = RankOneMod::new(lam.clone(), power, z.iter().copied().collect())?;
                if n > 1 {
                    let top = chain.solve(&m, n - 1, Which::Largest, &mut out, &mut diag)?;
                    f -= top.iter().map(|v| v * v).sum::<f64>();
                }
                // The closed form cancels down from tr(R^2); when little is
                // left, sum the trailing roots themselves instead.
                if f < CCF_CANCELLATION * tr2 {
                    let tail = eigenvalues_with(
                        &m,
                        lam.len() + 1 - n,
                        Which::Smallest,
                        None,
                        &opts.solver,
                    )?;
                    diag.iterations += tail.total_iterations();
                    f = tail.roots.iter().map(|v| v * v).sum();
                }
                out.values.push(f.max(0.0));
                out.diagnostics.push(diag);
            }
        }
    }
    Ok(out)
}

/// `tr(P_{P_a^perp B} R)`: the data power captured by the relaxed columns `B`
/// once the direction `a` is projected out.
pub fn relaxed_fit_objective(r: &CMatrix, a: &CVector, b: &CMatrix) -> f64 {
    let pb = linalg::orth_projector(a) * b;
    let p = linalg::projector(&pb);
    (p * r).trace().re
}

/// Columns spanning the `n_free` principal eigenvectors of `P_a^perp R P_a^perp`,
/// which maximise [`relaxed_fit_objective`].
pub fn relaxed_fit_optimizer(r: &CMatrix, a: &CVector, n_free: usize) -> CMatrix {
    let p = linalg::orth_projector(a);
    let (_, vecs) = linalg::hermitian_eig(&(&p * r * &p));
    vecs.columns(0, n_free).into_owned()
}
