use crate::array::SampleCovariance;

/// Diagonal subspace-fitting weights `w_k = (lambda_k - sigma_n^2)^2 / lambda_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WsfWeighting {
    pub w: Vec<f64>,
    /// Mean of the `M - N` smallest eigenvalues.
    pub sigma_n_hat: f64,
}

impl WsfWeighting {
    /// `W = I`, under which the relaxed subspace fit reduces to MUSIC.
    pub fn identity(n: usize) -> Self {
        Self {
            w: vec![1.0; n],
            sigma_n_hat: 0.0,
        }
    }
}

/// Asymptotically optimal weighting from the signal eigenvalues. Weights are
/// clamped at zero when a signal eigenvalue falls below the noise estimate.
pub fn wsf_weighting(cov: &SampleCovariance) -> WsfWeighting {
    let noise = cov.noise_values();
    let sigma_n_hat = (noise.iter().sum::<f64>() / noise.len() as f64).max(0.0);
    let w = cov
        .signal_values()
        .iter()
        .map(|&lam| {
            if lam <= sigma_n_hat || lam <= 0.0 {
                0.0
            } else {
                (lam - sigma_n_hat).powi(2) / lam
            }
        })
        .collect();
    WsfWeighting { w, sigma_n_hat }
}
