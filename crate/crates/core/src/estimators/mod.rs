//! Null-spectra: classical single-source baselines and the partially relaxed
//! estimators, each partially relaxed one with an eigen-based reference path
//! and a fast path built on the rank-one eigensolver.

mod classic;
mod relaxed;
mod ucf;
mod weighting;

use std::fmt;
use std::str::FromStr;

pub use classic::{beamformer_spectrum, capon_power, capon_spectrum, music_spectrum};
pub use relaxed::{
    pr_ccf_spectrum, pr_dml_spectrum, pr_wsf_spectrum, relaxed_fit_objective, relaxed_fit_optimizer,
};
pub use ucf::{pr_ucf_direction, pr_ucf_spectrum, ucf_derivative, ucf_objective, UcfState};
pub use weighting::{wsf_weighting, WsfWeighting};

use crate::array::SampleCovariance;
use crate::error::{DoaError, Result};
use crate::grid::SteeringGrid;
use crate::linalg::CMatrix;
use crate::rank_one::SolverOptions;

/// Loading factor applied when an estimator needs `R^{-1}` of a singular matrix.
pub const DEFAULT_LOADING: f64 = 1e-4;
/// Initial left end of the PR-UCF bracket.
pub const DEFAULT_UCF_INIT_LEFT: f64 = 1e-6;

/// Estimator selected by its command-line tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Beamformer,
    Capon,
    Music,
    PrDml,
    PrWsf,
    PrCcf,
    PrUcf,
    DmlGrid2,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::Beamformer,
        EstimatorKind::Capon,
        EstimatorKind::Music,
        EstimatorKind::PrDml,
        EstimatorKind::PrWsf,
        EstimatorKind::PrCcf,
        EstimatorKind::PrUcf,
        EstimatorKind::DmlGrid2,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EstimatorKind::Beamformer => "bf",
            EstimatorKind::Capon => "capon",
            EstimatorKind::Music => "music",
            EstimatorKind::PrDml => "pr-dml",
            EstimatorKind::PrWsf => "pr-wsf",
            EstimatorKind::PrCcf => "pr-ccf",
            EstimatorKind::PrUcf => "pr-ucf",
            EstimatorKind::DmlGrid2 => "dml-grid2",
        }
    }

    /// Whether a naive (dense eigendecomposition per direction) path exists.
    pub fn has_naive_path(self) -> bool {
        matches!(
            self,
            EstimatorKind::PrDml
                | EstimatorKind::PrWsf
                | EstimatorKind::PrCcf
                | EstimatorKind::PrUcf
        )
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EstimatorKind {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.tag() == s.trim())
            .ok_or_else(|| DoaError::InvalidArgument(format!("unknown estimator `{s}`")))
    }
}

/// How the partially relaxed null-spectra are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumPath {
    /// Dense Hermitian eigendecomposition at every direction.
    Naive,
    /// Rank-one update with secular rooting.
    #[default]
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub path: SpectrumPath,
    /// Seed the secular iterations with the roots of the previous direction.
    pub warm_start: bool,
    pub solver: SolverOptions,
    /// Loading applied automatically when Capon-type estimators meet a singular matrix.
    pub auto_loading: f64,
    pub ucf_init_left: f64,
    /// Relative width at which the PR-UCF bisection stops.
    pub ucf_tolerance: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            path: SpectrumPath::Fast,
            warm_start: true,
            solver: SolverOptions::default(),
            auto_loading: DEFAULT_LOADING,
            ucf_init_left: DEFAULT_UCF_INIT_LEFT,
            ucf_tolerance: 1e-8,
        }
    }
}

impl SpectrumOptions {
    pub fn naive() -> Self {
        Self {
            path: SpectrumPath::Naive,
            ..Self::default()
        }
    }
}

/// Per-direction bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DirectionDiagnostics {
    /// Secular iterations summed over the roots computed at this direction.
    pub iterations: u32,
    pub roots: u32,
    pub bisection_steps: u32,
    pub failed: bool,
}

/// Null-spectrum over a grid; minima mark candidate DOAs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub estimator: EstimatorKind,
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
    pub diagnostics: Vec<DirectionDiagnostics>,
    /// Iteration count of every secular root, in evaluation order.
    pub root_iterations: Vec<u32>,
    /// Diagonal loading the estimator added on its own.
    pub auto_loaded: f64,
}

impl SpectrumResult {
    pub(crate) fn new(estimator: EstimatorKind, grid: &SteeringGrid) -> Self {
        let n = grid.len();
        Self {
            estimator,
            angles: grid.angles().to_vec(),
            values: Vec::with_capacity(n),
            diagnostics: Vec::with_capacity(n),
            root_iterations: Vec::new(),
            auto_loaded: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.failed).count()
    }

    /// Median iteration count per secular root (0 when no roots were needed).
    pub fn median_root_iterations(&self) -> f64 {
        let mut its = self.root_iterations.clone();
        if its.is_empty() {
            return 0.0;
        }
        its.sort_unstable();
        let n = its.len();
        if n % 2 == 1 {
            its[n / 2] as f64
        } else {
            0.5 * (its[n / 2 - 1] + its[n / 2]) as f64
        }
    }
}

/// Null-spectrum of any grid-search estimator.
pub fn spectrum(
    kind: EstimatorKind,
    cov: &SampleCovariance,
    grid: &SteeringGrid,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_grid(cov, grid)?;
    match kind {
        EstimatorKind::Beamformer => beamformer_spectrum(cov, grid),
        EstimatorKind::Capon => capon_spectrum(cov, grid, opts),
        EstimatorKind::Music => music_spectrum(cov, grid),
        EstimatorKind::PrDml => pr_dml_spectrum(cov, grid, opts),
        EstimatorKind::PrWsf => pr_wsf_spectrum(cov, &wsf_weighting(cov), grid, opts),
        EstimatorKind::PrCcf => pr_ccf_spectrum(cov, grid, opts),
        EstimatorKind::PrUcf => pr_ucf_spectrum(cov, grid, opts),
        EstimatorKind::DmlGrid2 => Err(DoaError::Unsupported {
            estimator: kind.tag().into(),
            what: "a one-dimensional null-spectrum".into(),
        }),
    }
}

pub(crate) fn check_grid(cov: &SampleCovariance, grid: &SteeringGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(DoaError::InvalidArgument("empty grid".into()));
    }
    if grid.sensors() != cov.sensors() {
        return Err(DoaError::InvalidArgument(format!(
            "grid built for {} sensors, covariance has {}",
            grid.sensors(),
            cov.sensors()
        )));
    }
    Ok(())
}

/// Returns the covariance an inverse-based estimator should use, loading it
/// when singular.
pub(crate) fn invertible(cov: &SampleCovariance, gamma: f64) -> Result<(SampleCovariance, f64)> {
    if !cov.is_singular() {
        return Ok((cov.clone(), 0.0));
    }
    if gamma <= 0.0 {
        return Err(DoaError::SingularCovariance {
            smallest: cov.smallest_eigenvalue(),
        });
    }
    Ok((cov.diagonal_load(gamma)?, gamma))
}

/// `U^H A` for the whole grid, column `g` is `z(theta_g)`.
pub(crate) fn projections(vectors: &CMatrix, grid: &SteeringGrid) -> CMatrix {
    vectors.adjoint() * grid.vectors()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.tag().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("root-music".parse::<EstimatorKind>().is_err());
    }
}
