//! Array geometry, steering vectors, synthetic snapshots and the sample
//! covariance with its eigendecomposition.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{DoaError, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::Complex64;

/// Sensor positions in carrier wavelengths.
///
/// Angles are measured from broadside: a plane wave from `theta` travels along
/// `u(theta) = (sin theta, cos theta, 0)`, so a line array along the x axis has
/// zero inter-sensor phase at `theta = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(DoaError::InvalidArgument(format!(
                "array needs at least 2 sensors, got {}",
                positions.len()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DoaError::InvalidArgument(
                "sensor positions must be finite".into(),
            ));
        }
        Ok(Self { positions })
    }

    /// Uniform linear array on the x axis, first sensor at the origin.
    pub fn ula(sensors: usize, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(DoaError::InvalidArgument(format!(
                "ULA spacing must be positive, got {spacing}"
            )));
        }
        Self::new(
            (0..sensors)
                .map(|m| [m as f64 * spacing, 0.0, 0.0])
                .collect(),
        )
    }

    pub fn sensors(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// `a(theta)`, entry `m = exp(j 2 pi <p_m, u(theta)>)`.
    pub fn steering_vector(&self, theta_deg: f64) -> Result<CVector> {
        if !theta_deg.is_finite() {
            return Err(DoaError::InvalidArgument(format!(
                "angle must be finite, got {theta_deg}"
            )));
        }
        let (s, c) = theta_deg.to_radians().sin_cos();
        Ok(DVector::from_iterator(
            self.sensors(),
            self.positions.iter().map(|p| {
                let phase = 2.0 * PI * (p[0] * s + p[1] * c);
                Complex64::from_polar(1.0, phase)
            }),
        ))
    }

    /// Steering vectors as columns, one per angle.
    pub fn steering_matrix(&self, thetas_deg: &[f64]) -> Result<CMatrix> {
        let mut a = CMatrix::zeros(self.sensors(), thetas_deg.len());
        for (j, &t) in thetas_deg.iter().enumerate() {
            a.set_column(j, &self.steering_vector(t)?);
        }
        Ok(a)
    }
}

/// Source and noise description for synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Degrees, strictly increasing.
    pub doas: Vec<f64>,
    pub source_powers: Vec<f64>,
    /// Correlation between consecutive sources, `|rho| <= 1`.
    pub correlation: Complex64,
    pub noise_power: f64,
    pub snapshots: usize,
    pub seed: u64,
}

impl Scenario {
    /// Unit-power uncorrelated sources at `snr_db` (`noise_power = 10^(-snr/10)`).
    pub fn uncorrelated(doas: Vec<f64>, snr_db: f64, snapshots: usize, seed: u64) -> Self {
        let n = doas.len();
        Self {
            doas,
            source_powers: vec![1.0; n],
            correlation: Complex64::new(0.0, 0.0),
            noise_power: noise_power_from_snr_db(snr_db),
            snapshots,
            seed,
        }
    }

    pub fn sources(&self) -> usize {
        self.doas.len()
    }

    pub fn validate(&self, geometry: &ArrayGeometry) -> Result<()> {
        let n = self.doas.len();
        let bad = |msg: String| Err(DoaError::InvalidScenario(msg));
        if n == 0 {
            return bad("at least one source is required".into());
        }
        if n >= geometry.sensors() {
            return bad(format!(
                "need fewer sources than sensors (N = {n}, M = {})",
                geometry.sensors()
            ));
        }
        if self.source_powers.len() != n {
            return bad(format!(
                "{} source powers given for {n} sources",
                self.source_powers.len()
            ));
        }
        if self.doas.iter().any(|d| !d.is_finite()) {
            return bad("DOAs must be finite".into());
        }
        if self.doas.windows(2).any(|w| w[0] >= w[1]) {
            return bad("DOAs must be strictly increasing".into());
        }
        if self
            .source_powers
            .iter()
            .any(|p| !(p.is_finite() && *p >= 0.0))
        {
            return bad("source powers must be finite and nonnegative".into());
        }
        if self.correlation.norm().is_nan() || self.correlation.norm() > 1.0 {
            return bad(format!(
                "correlation magnitude must be <= 1, got {}",
                self.correlation.norm()
            ));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return bad("noise power must be positive".into());
        }
        if self.snapshots == 0 {
            return bad("at least one snapshot is required".into());
        }
        Ok(())
    }
}

pub fn noise_power_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Received baseband data, sensors by snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: CMatrix,
}

impl SnapshotMatrix {
    pub fn new(data: CMatrix) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }
}

/// Snapshots together with the source waveforms that produced them.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub snapshots: SnapshotMatrix,
    /// Sources by snapshots, already scaled by the source amplitudes.
    pub sources: CMatrix,
}

fn circular_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `X = A(theta) S + N` for a seeded scenario.
///
/// Consecutive sources are mixed as `s_{n+1} = rho s_n + sqrt(1 - |rho|^2) w`
/// on unit-power waveforms before the powers are applied.
pub fn synthesize(geometry: &ArrayGeometry, scenario: &Scenario) -> Result<Synthesis> {
    scenario.validate(geometry)?;
    let n = scenario.sources();
    let m = geometry.sensors();
    let t = scenario.snapshots;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let rho = scenario.correlation;
    let innovation = (1.0 - rho.norm_sqr()).max(0.0).sqrt();
    let mut base = CMatrix::zeros(n, t);
    for col in 0..t {
        for row in 0..n {
            let w = circular_gaussian(&mut rng);
            base[(row, col)] = if row == 0 {
                w
            } else {
                rho * base[(row - 1, col)] + w * innovation
            };
        }
    }
    let mut sources = base;
    for (row, &p) in scenario.source_powers.iter().enumerate() {
        let amp = Complex64::new(p.sqrt(), 0.0);
        sources.row_mut(row).iter_mut().for_each(|v| *v *= amp);
    }

    let a = geometry.steering_matrix(&scenario.doas)?;
    let mut x = &a * &sources;
    let sigma = scenario.noise_power.sqrt();
    for col in 0..t {
        for row in 0..m {
            x[(row, col)] += circular_gaussian(&mut rng) * sigma;
        }
    }
    Ok(Synthesis {
        snapshots: SnapshotMatrix::new(x),
        sources,
    })
}

pub fn generate_snapshots(geometry: &ArrayGeometry, scenario: &Scenario) -> Result<SnapshotMatrix> {
    synthesize(geometry, scenario).map(|s| s.snapshots)
}

/// Sample covariance `R = X X^H / T` with its eigendecomposition cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    r_hat: CMatrix,
    eig_values: Vec<f64>,
    eig_vectors: CMatrix,
    n_sources: usize,
    loading: f64,
}

impl SampleCovariance {
    /// Wraps an existing Hermitian positive semidefinite matrix.
    pub fn from_matrix(r_hat: CMatrix, n_sources: usize) -> Result<Self> {
        let m = r_hat.nrows();
        if r_hat.ncols() != m || m == 0 {
            return Err(DoaError::InvalidArgument(
                "covariance must be a nonempty square matrix".into(),
            ));
        }
        if n_sources == 0 || n_sources >= m {
            return Err(DoaError::InvalidArgument(format!(
                "source count must satisfy 1 <= N < M (N = {n_sources}, M = {m})"
            )));
        }
        let defect = linalg::hermitian_defect(&r_hat);
        if defect > 1e-12 {
            return Err(DoaError::NotHermitian(defect));
        }
        let r_hat = linalg::hermitian_part(&r_hat);
        let (eig_values, eig_vectors) = linalg::hermitian_eig(&r_hat);
        let scale = eig_values.first().map(|v| v.abs()).unwrap_or(0.0);
        if let Some(&low) = eig_values.last() {
            if low < -1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(DoaError::InvalidArgument(format!(
                    "covariance is not positive semidefinite (smallest eigenvalue {low:e})"
                )));
            }
        }
        Ok(Self {
            r_hat,
            eig_values,
            eig_vectors,
            n_sources,
            loading: 0.0,
        })
    }

    pub fn r_hat(&self) -> &CMatrix {
        &self.r_hat
    }

    /// Eigenvalues, descending.
    pub fn eig_values(&self) -> &[f64] {
        &self.eig_values
    }

    /// Eigenvectors as columns, matching [`Self::eig_values`].
    pub fn eig_vectors(&self) -> &CMatrix {
        &self.eig_vectors
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn sensors(&self) -> usize {
        self.r_hat.nrows()
    }

    /// Diagonal loading already applied to this matrix.
    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn signal_values(&self) -> &[f64] {
        &self.eig_values[..self.n_sources]
    }

    pub fn noise_values(&self) -> &[f64] {
        &self.eig_values[self.n_sources..]
    }

    pub fn signal_vectors(&self) -> CMatrix {
        self.eig_vectors.columns(0, self.n_sources).into_owned()
    }

    pub fn noise_vectors(&self) -> CMatrix {
        let m = self.sensors();
        self.eig_vectors
            .columns(self.n_sources, m - self.n_sources)
            .into_owned()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.r_hat)
    }

    /// `tr(R^2)`, i.e. the squared Frobenius norm.
    pub fn trace_of_square(&self) -> f64 {
        self.r_hat.norm_squared()
    }

    fn rank_threshold(&self) -> f64 {
        let top = self.eig_values.first().copied().unwrap_or(0.0).max(0.0);
        top * self.sensors() as f64 * f64::EPSILON * 16.0
    }

    /// Number of eigenvalues above the round-off floor.
    pub fn rank(&self) -> usize {
        let thr = self.rank_threshold();
        self.eig_values.iter().filter(|&&v| v > thr).count()
    }

    pub fn is_singular(&self) -> bool {
        let low = self.eig_values.last().copied().unwrap_or(0.0);
        low <= self.rank_threshold() || low <= 0.0
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eig_values.last().copied().unwrap_or(0.0)
    }

    /// `R + gamma I`; eigenvalues shift by exactly `gamma`, eigenvectors are kept.
    pub fn diagonal_load(&self, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(DoaError::InvalidArgument(format!(
                "loading factor must be finite and nonnegative, got {gamma}"
            )));
        }
        if gamma == 0.0 {
            return Ok(self.clone());
        }
        let mut r_hat = self.r_hat.clone();
        for i in 0..r_hat.nrows() {
            r_hat[(i, i)] += Complex64::new(gamma, 0.0);
        }
        Ok(Self {
            r_hat,
            eig_values: self.eig_values.iter().map(|v| v + gamma).collect(),
            eig_vectors: self.eig_vectors.clone(),
            n_sources: self.n_sources,
            loading: self.loading + gamma,
        })
    }
}

/// `R = X X^H / T` with a full eigendecomposition split at `n_sources`.
pub fn sample_covariance(x: &SnapshotMatrix, n_sources: usize) -> Result<SampleCovariance> {
    let t = x.snapshots();
    if t == 0 {
        return Err(DoaError::InvalidArgument("no snapshots".into()));
    }
    let data = x.data();
    let r = (data * data.adjoint()) / Complex64::new(t as f64, 0.0);
    SampleCovariance::from_matrix(r, n_sources)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ula10() -> ArrayGeometry {
        ArrayGeometry::ula(10, 0.5).unwrap()
    }

    #[test]
    fn broadside_is_all_ones() {
        let a = ula10().steering_vector(0.0).unwrap();
        assert!(a
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        assert!((a.norm_squared() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn endfire_two_sensor() {
        let a = ArrayGeometry::ula(2, 0.5)
            .unwrap()
            .steering_vector(90.0)
            .unwrap();
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn forty_five_degrees_matches_elementwise() {
        let a = ula10().steering_vector(45.0).unwrap();
        let s = (45f64).to_radians().sin();
        for m in 0..10 {
            let phase = PI * m as f64 * s;
            let expect = Complex64::new(phase.cos(), phase.sin());
            assert!((a[m] - expect).norm() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ula10().steering_vector(f64::NAN).is_err());
        assert!(ArrayGeometry::ula(1, 0.5).is_err());
        assert!(ArrayGeometry::new(vec![[0.0; 3], [f64::INFINITY, 0.0, 0.0]]).is_err());
        let sc = Scenario::uncorrelated((0..10).map(|i| i as f64).collect(), 0.0, 10, 1);
        assert!(matches!(
            generate_snapshots(&ula10(), &sc),
            Err(DoaError::InvalidScenario(_))
        ));
        let sc = Scenario::uncorrelated(vec![50.0, 45.0], 0.0, 10, 1);
        assert!(generate_snapshots(&ula10(), &sc).is_err());
    }

    #[test]
    fn coherent_sources_share_waveform() {
        let mut sc = Scenario::uncorrelated(vec![45.0, 50.0], 10.0, 64, 3);
        sc.correlation = Complex64::new(1.0, 0.0);
        let syn = synthesize(&ula10(), &sc).unwrap();
        for t in 0..64 {
            assert_eq!(syn.sources[(0, t)], syn.sources[(1, t)]);
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let sc = Scenario::uncorrelated(vec![45.0, 50.0], 0.0, 40, 99);
        let a = generate_snapshots(&ula10(), &sc).unwrap();
        let b = generate_snapshots(&ula10(), &sc).unwrap();
        assert_eq!(a, b);
        let mut other = sc.clone();
        other.seed = 100;
        assert_ne!(a, generate_snapshots(&ula10(), &other).unwrap());
    }

    #[test]
    fn noiseless_single_source_converges() {
        let mut sc = Scenario::uncorrelated(vec![30.0], 0.0, 10_000, 5);
        sc.noise_power = 1e-12;
        sc.source_powers = vec![2.0];
        let g = ula10();
        let r = sample_covariance(&generate_snapshots(&g, &sc).unwrap(), 1).unwrap();
        let a = g.steering_vector(30.0).unwrap();
        let truth = (&a * a.adjoint()) * Complex64::new(2.0, 0.0);
        assert!((r.r_hat() - &truth).norm() <= 0.05 * truth.norm());
    }

    #[test]
    fn uncorrelated_sources_have_small_empirical_correlation() {
        let sc = Scenario::uncorrelated(vec![10.0, 20.0], 0.0, 100_000, 11);
        let syn = synthesize(&ula10(), &sc).unwrap();
        let s1 = syn.sources.row(0);
        let s2 = syn.sources.row(1);
        let cross: Complex64 = s1.iter().zip(s2.iter()).map(|(a, b)| a.conj() * b).sum();
        let p1: f64 = s1.iter().map(|v| v.norm_sqr()).sum();
        let p2: f64 = s2.iter().map(|v| v.norm_sqr()).sum();
        assert!(cross.norm() / (p1 * p2).sqrt() < 0.02);
    }

    #[test]
    fn correlated_sources_hit_target() {
        let mut sc = Scenario::uncorrelated(vec![10.0, 20.0], 0.0, 20_000, 12);
        sc.correlation = Complex64::new(0.6, 0.3);
        let syn = synthesize(&ula10(), &sc).unwrap();
        let s1 = syn.sources.row(0);
        let s2 = syn.sources.row(1);
        let cross: Complex64 = s1.iter().zip(s2.iter()).map(|(a, b)| a.conj() * b).sum();
        let p1: f64 = s1.iter().map(|v| v.norm_sqr()).sum();
        let p2: f64 = s2.iter().map(|v| v.norm_sqr()).sum();
        let rho_hat = cross / (p1 * p2).sqrt();
        assert!((rho_hat - sc.correlation).norm() < 3.0 / (20_000f64).sqrt());
    }

    #[test]
    fn zero_data_gives_zero_covariance() {
        let x = SnapshotMatrix::new(CMatrix::zeros(4, 3));
        let r = sample_covariance(&x, 1).unwrap();
        assert!(r.r_hat().iter().all(|v| v.norm() == 0.0));
        assert!(r.eig_values().iter().all(|&v| v.abs() < 1e-300));
        assert!(r.is_singular());
    }

    #[test]
    fn single_snapshot_is_rank_one() {
        let x = CMatrix::from_fn(4, 1, |i, _| Complex64::new(i as f64 + 1.0, 0.5 * i as f64));
        let norm2 = x.norm_squared();
        let r = sample_covariance(&SnapshotMatrix::new(x.clone()), 1).unwrap();
        assert!((r.r_hat() - &x * x.adjoint()).norm() < 1e-12);
        assert!((r.eig_values()[0] - norm2).abs() < 1e-12 * norm2);
        assert!(r.eig_values()[1..].iter().all(|v| v.abs() < 1e-12 * norm2));
        assert_eq!(r.rank(), 1);
    }

    #[test]
    fn trace_equals_frobenius_over_t() {
        let sc = Scenario::uncorrelated(vec![-20.0, 35.0], 3.0, 17, 4);
        let x = generate_snapshots(&ula10(), &sc).unwrap();
        let r = sample_covariance(&x, 2).unwrap();
        let expect = x.data().norm_squared() / 17.0;
        assert!((r.trace() - expect).abs() <= 1e-12 * expect);
        let sum: f64 = r.eig_values().iter().sum();
        assert!((sum - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn loading_shifts_spectrum() {
        let sc = Scenario::uncorrelated(vec![45.0, 50.0], 10.0, 8, 21);
        let r = sample_covariance(&generate_snapshots(&ula10(), &sc).unwrap(), 2).unwrap();
        assert!(r.is_singular());
        assert_eq!(r.diagonal_load(0.0).unwrap(), r);
        let loaded = r.diagonal_load(1e-4).unwrap();
        assert!(loaded.smallest_eigenvalue() >= 1e-4 * (1.0 - 1e-9));
        assert!(!loaded.is_singular());
        assert_eq!(loaded.eig_vectors(), r.eig_vectors());
        assert!(r.diagonal_load(-1.0).is_err());

        let zero = SampleCovariance::from_matrix(CMatrix::zeros(3, 3), 1).unwrap();
        let z = zero.diagonal_load(1e-4).unwrap();
        assert!((z.r_hat() - CMatrix::identity(3, 3) * Complex64::new(1e-4, 0.0)).norm() < 1e-18);
    }

    #[test]
    fn reconstruction_within_tolerance() {
        let sc = Scenario::uncorrelated(vec![45.0, 50.0], 0.0, 40, 8);
        let r = sample_covariance(&generate_snapshots(&ula10(), &sc).unwrap(), 2).unwrap();
        let lam = CMatrix::from_diagonal(&DVector::from_iterator(
            10,
            r.eig_values().iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let back = r.eig_vectors() * lam * r.eig_vectors().adjoint();
        assert!((back - r.r_hat()).norm() <= 1e-10 * r.r_hat().norm());
        assert!(r.eig_values().windows(2).all(|w| w[0] >= w[1]));
    }
}
