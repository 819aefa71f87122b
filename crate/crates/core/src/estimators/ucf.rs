use super::{
    check_grid, projections, DirectionDiagnostics, EstimatorKind, SpectrumOptions, SpectrumPath,
    SpectrumResult,
};
use crate::array::SampleCovariance;
use crate::error::{DoaError, Result};
use crate::grid::SteeringGrid;
use crate::linalg::{self, CVector};
use crate::rank_one::{eigenvalues_with, RankOneMod, SecularRoots, SolverOptions, Which};
use crate::Complex64;

const MAX_EXPANSIONS: u32 = 200;
const LEFT_FLOOR: f64 = 1e-300;

/// Outcome of the one-dimensional minimisation over the source power at a
/// single direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcfState {
    pub sigma_left: f64,
    pub sigma_right: f64,
    /// Minimiser of `g`; 0 when `g'` stays nonnegative down to the floor.
    pub sigma_hat: f64,
    /// `g(sigma_hat)`, or `+inf` when no bracket was found.
    pub value: f64,
    pub g_evaluations: u32,
    pub bisection_steps: u32,
    pub secular_iterations: u32,
    pub failed: bool,
}

/// `g` and `g'` at one direction, either through rank-one updates in the
/// eigenbasis of `R` or through a dense eigendecomposition.
struct UcfProblem<'a> {
    lam: &'a [f64],
    z: Vec<Complex64>,
    weights: Vec<f64>,
    zlz: f64,
    zz: f64,
    tr2: f64,
    n: usize,
    path: SpectrumPath,
    r: Option<(&'a SampleCovariance, CVector)>,
    solver: SolverOptions,
    warm: Option<SecularRoots>,
    use_warm: bool,
    iterations: u32,
    evaluations: u32,
    roots: Vec<u32>,
}

impl<'a> UcfProblem<'a> {
    fn new(
        cov: &'a SampleCovariance,
        lam: &'a [f64],
        z: Vec<Complex64>,
        a: Option<CVector>,
        opts: &SpectrumOptions,
    ) -> Self {
        let weights: Vec<f64> = z.iter().map(|c| c.norm_sqr()).collect();
        let zlz = weights.iter().zip(lam).map(|(w, l)| w * l).sum();
        let zz = weights.iter().sum();
        Self {
            lam,
            z,
            weights,
            zlz,
            zz,
            tr2: lam.iter().map(|l| l * l).sum(),
            n: cov.n_sources(),
            path: opts.path,
            r: a.map(|a| (cov, a)),
            solver: opts.solver,
            warm: None,
            use_warm: opts.warm_start,
            iterations: 0,
            evaluations: 0,
            roots: Vec::new(),
        }
    }

    /// The `N - 1` largest eigenvalues of `Lambda - s z z^H`.
    fn principal(&mut self, s: f64) -> Result<Vec<f64>> {
        if self.n == 1 {
            return Ok(Vec::new());
        }
        let m = RankOneMod::new(self.lam.to_vec(), s, self.z.clone())?;
        let warm = if self.use_warm {
            self.warm.as_ref()
        } else {
            None
        };
        let roots = eigenvalues_with(&m, self.n - 1, Which::Largest, warm, &self.solver)?;
        for &it in &roots.iterations {
            if it > 0 {
                self.roots.push(it);
            }
            self.iterations += it;
        }
        let values = roots.roots.clone();
        self.warm = Some(roots);
        Ok(values)
    }

    fn value(&mut self, s: f64) -> Result<f64> {
        if let (SpectrumPath::Naive, Some((cov, a))) = (self.path, &self.r) {
            let resid = cov.r_hat() - (a * a.adjoint()) * Complex64::new(s, 0.0);
            let ev = linalg::hermitian_eigenvalues(&resid);
            return Ok(ev[self.n - 1..].iter().map(|v| v * v).sum());
        }
        let base = self.tr2 - 2.0 * s * self.zlz + s * s * self.zz * self.zz;
        if s == 0.0 {
            return Ok(base - self.lam[..self.n - 1].iter().map(|l| l * l).sum::<f64>());
        }
        let top = self.principal(s)?;
        Ok(base - top.iter().map(|v| v * v).sum::<f64>())
    }

    fn derivative(&mut self, s: f64) -> Result<f64> {
        self.evaluations += 1;
        if let (SpectrumPath::Naive, Some((cov, a))) = (self.path, &self.r) {
            let resid = cov.r_hat() - (a * a.adjoint()) * Complex64::new(s, 0.0);
            let (ev, vecs) = linalg::hermitian_eig(&resid);
            let proj = vecs.adjoint() * a;
            return Ok(-(self.n - 1..ev.len())
                .map(|k| 2.0 * ev[k] * proj[k].norm_sqr())
                .sum::<f64>());
        }
        let mut d = -2.0 * self.zlz + 2.0 * s * self.zz * self.zz;
        let top = self.principal(s)?;
        for lbar in top {
            d += 2.0 * lbar / (s * s * self.inverse_square_sum(lbar)?);
        }
        Ok(d)
    }

    /// `sum_j |z_j|^2 / (lambda_j - lbar)^2`; infinite when `lbar` sits on a
    /// pole carrying weight, i.e. the eigenvalue does not move with `s`.
    fn inverse_square_sum(&self, lbar: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (&w, &l) in self.weights.iter().zip(self.lam) {
            if w == 0.0 {
                continue;
            }
            let delta = l - lbar;
            if delta == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += w / (delta * delta);
        }
        if acc > 0.0 {
            Ok(acc)
        } else {
            Err(DoaError::PoleCollision)
        }
    }
}

fn ucf_inputs(cov: &SampleCovariance, a: &CVector) -> Result<(Vec<f64>, Vec<Complex64>)> {
    if a.len() != cov.sensors() {
        return Err(DoaError::InvalidArgument(format!(
            "steering vector of length {} for {} sensors",
            a.len(),
            cov.sensors()
        )));
    }
    let lam = cov.eig_values().iter().map(|v| v.max(0.0)).collect();
    let z = (cov.eig_vectors().adjoint() * a).iter().copied().collect();
    Ok((lam, z))
}

fn check_power(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(DoaError::InvalidArgument(format!(
            "source power must be positive and finite, got {sigma2}"
        )))
    }
}

/// `g(s) = sum_{k >= N} lambda_k^2(R - s a a^H)`.
pub fn ucf_objective(cov: &SampleCovariance, a: &CVector, sigma2: f64) -> Result<f64> {
    check_power(sigma2)?;
    let (lam, z) = ucf_inputs(cov, a)?;
    UcfProblem::new(cov, &lam, z, None, &SpectrumOptions::default()).value(sigma2)
}

/// `g'(s)` in the eigenbasis of `R`.
pub fn ucf_derivative(cov: &SampleCovariance, a: &CVector, sigma2: f64) -> Result<f64> {
    check_power(sigma2)?;
    let (lam, z) = ucf_inputs(cov, a)?;
    UcfProblem::new(cov, &lam, z, None, &SpectrumOptions::default()).derivative(sigma2)
}

/// Brackets the sign change of `g'` by doubling or halving and bisects it.
pub fn pr_ucf_direction(
    cov: &SampleCovariance,
    a: &CVector,
    opts: &SpectrumOptions,
) -> Result<UcfState> {
    let (lam, z) = ucf_inputs(cov, a)?;
    let naive = matches!(opts.path, SpectrumPath::Naive).then(|| a.clone());
    let mut p = UcfProblem::new(cov, &lam, z, naive, opts);
    minimise(&mut p, opts)
}

fn minimise(p: &mut UcfProblem<'_>, opts: &SpectrumOptions) -> Result<UcfState> {
    check_power(opts.ucf_init_left)?;
    let mut st = UcfState {
        sigma_left: opts.ucf_init_left,
        sigma_right: opts.ucf_init_left,
        sigma_hat: 0.0,
        value: f64::INFINITY,
        g_evaluations: 0,
        bisection_steps: 0,
        secular_iterations: 0,
        failed: false,
    };
    let mut hit_floor = false;
    if p.derivative(st.sigma_left)? < 0.0 {
        let mut expansions = 0;
        loop {
            st.sigma_right *= 2.0;
            expansions += 1;
            if p.derivative(st.sigma_right)? > 0.0 {
                break;
            }
            if expansions >= MAX_EXPANSIONS || !st.sigma_right.is_finite() {
                st.failed = true;
                st.secular_iterations = p.iterations;
                st.g_evaluations = p.evaluations;
                return Ok(st);
            }
        }
    } else {
        loop {
            st.sigma_left /= 2.0;
            if st.sigma_left < LEFT_FLOOR {
                hit_floor = true;
                break;
            }
            if p.derivative(st.sigma_left)? < 0.0 {
                break;
            }
        }
    }

    if hit_floor {
        st.sigma_left = 0.0;
        st.sigma_hat = 0.0;
    } else {
        let (mut lo, mut hi) = (st.sigma_left, st.sigma_right);
        while hi - lo > opts.ucf_tolerance * hi {
            let mid = 0.5 * (lo + hi);
            st.bisection_steps += 1;
            if p.derivative(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        st.sigma_hat = 0.5 * (lo + hi);
    }
    st.value = p.value(st.sigma_hat)?.max(0.0);
    st.secular_iterations = p.iterations;
    st.g_evaluations = p.evaluations;
    Ok(st)
}

/// Relaxed unconstrained covariance-fitting null-spectrum. Directions whose
/// bracket cannot be found are set to `+inf` and flagged.
pub fn pr_ucf_spectrum(
    cov: &SampleCovariance,
    grid: &SteeringGrid,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    let mut out = SpectrumResult::new(EstimatorKind::PrUcf, grid);
    let lam: Vec<f64> = cov.eig_values().iter().map(|v| v.max(0.0)).collect();
    let z_all = projections(cov.eig_vectors(), grid);
    let mut warm: Option<SecularRoots> = None;
    for (g, a) in grid.vectors().column_iter().enumerate() {
        let naive = matches!(opts.path, SpectrumPath::Naive).then(|| a.into_owned());
        let mut p = UcfProblem::new(
            cov,
            &lam,
            z_all.column(g).iter().copied().collect(),
            naive,
            opts,
        );
        p.warm = warm.take();
        let st = minimise(&mut p, opts)?;
        out.values.push(st.value);
        out.diagnostics.push(DirectionDiagnostics {
            iterations: st.secular_iterations,
            roots: p.roots.len() as u32,
            bisection_steps: st.bisection_steps,
            failed: st.failed,
        });
        out.root_iterations.extend_from_slice(&p.roots);
        warm = p.warm.take();
    }
    Ok(out)
}
