//! Rooting the secular function bracket by bracket.
//!
//! For the root in `(d_{k+1}, d_k)` the secular equation is split as
//! `-psi_k(x) = 1 + phi_k(x)`, where `psi_k` collects the poles at and above
//! `d_k` and `phi_k` the poles below. Each iteration replaces `psi_k` by
//! `p + q / (d_k - x)` and `phi_k` by `r + s / (d_{k+1} - x)`, matched in value
//! and slope at the current iterate, and solves the resulting quadratic in
//! closed form. Distances to the poles are carried relative to the nearer end
//! of the bracket to keep them accurate when the root hugs a pole.

use super::RankOneMod;
use crate::error::{DoaError, Result};

/// Stopping rule for [`root_secular_k_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `|x_new - x_old| < eps * (1 + |x_new|)`.
    pub eps: f64,
    pub max_iterations: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: 1e-9,
            max_iterations: 100,
        }
    }
}

/// Root `k` (0-based, descending) of a deflated problem with default options.
pub fn root_secular_k(m: &RankOneMod, k: usize, x0: Option<f64>, eps: f64) -> Result<(f64, u32)> {
    root_secular_k_with(
        m,
        k,
        x0,
        &SolverOptions {
            eps,
            ..SolverOptions::default()
        },
    )
}

/// Returns the root in `(d_{k+1}, d_k)` and the number of iterations used.
///
/// The last bracket is closed below by `d_K - rho ||z||^2`. A starting point
/// outside the bracket is ignored in favour of its midpoint.
pub fn root_secular_k_with(
    m: &RankOneMod,
    k: usize,
    x0: Option<f64>,
    opts: &SolverOptions,
) -> Result<(f64, u32)> {
    let n = m.len();
    if k >= n {
        return Err(DoaError::InvalidArgument(format!(
            "root index {k} out of range for K = {n}"
        )));
    }
    if !m.is_deflated() {
        return Err(DoaError::InvalidArgument(
            "secular rooting needs a deflated problem (distinct descending d, nonzero z)".into(),
        ));
    }
    let d = m.d();
    let w = m.weights();
    let rho = m.rho();
    let last = k + 1 == n;

    let upper = d[k];
    let lower = if last {
        d[k] - rho * m.z_norm_sqr() * (1.0 + 1e-6)
    } else {
        d[k + 1]
    };

    let mut x = match x0 {
        Some(v) if v > lower && v < upper => v,
        _ => 0.5 * (lower + upper),
    };

    // The half of the bracket holding the root decides the origin of the
    // shift; this must not depend on where the iteration starts.
    let p_at = |x: f64| 1.0 - rho * (0..n).map(|j| w[j] / (d[j] - x)).sum::<f64>();
    let origin = if last || p_at(0.5 * (lower + upper)) >= 0.0 {
        upper
    } else {
        lower
    };
    let shifted: Vec<f64> = d.iter().map(|v| v - origin).collect();

    let mut tau = x - origin;
    let mut lo = lower - origin;
    let mut hi = upper - origin;
    let pole_hi = shifted[k];
    let pole_lo = if last {
        f64::NEG_INFINITY
    } else {
        shifted[k + 1]
    };

    for it in 1..=opts.max_iterations {
        let mut psi = 0.0;
        let mut dpsi = 0.0;
        let mut magnitude = 0.0;
        for j in 0..=k {
            let t = w[j] / (shifted[j] - tau);
            psi += t;
            dpsi += t / (shifted[j] - tau);
            magnitude += t.abs();
        }
        let mut phi = 0.0;
        let mut dphi = 0.0;
        for j in k + 1..n {
            let t = w[j] / (shifted[j] - tau);
            phi += t;
            dphi += t / (shifted[j] - tau);
            magnitude += t.abs();
        }
        psi *= -rho;
        dpsi *= -rho;
        phi *= -rho;
        dphi *= -rho;

        let p = 1.0 + psi + phi;
        // Below this the sign of p is rounding noise.
        let noise = 8.0 * f64::EPSILON * (1.0 + rho * magnitude) * (n as f64);
        if p.abs() <= noise {
            return Ok((origin + tau, it));
        }
        if p > 0.0 {
            lo = lo.max(tau);
        } else {
            hi = hi.min(tau);
        }

        let delta_hi = pole_hi - tau;
        let q = dpsi * delta_hi * delta_hi;
        let p_coef = psi - q / delta_hi;
        let (r_coef, s) = if last {
            (0.0, 0.0)
        } else {
            let delta_lo = pole_lo - tau;
            let s = dphi * delta_lo * delta_lo;
            (phi - s / delta_lo, s)
        };
        let c = 1.0 + p_coef + r_coef;

        let candidate = if last {
            if c > 0.0 {
                Some(pole_hi + q / c)
            } else {
                None
            }
        } else {
            model_root(c, q, s, pole_hi, pole_lo)
        };
        let next = match candidate {
            Some(t) if t >= lo && t <= hi && t.is_finite() => t,
            // Overshoot by rounding only: the bound itself is the answer.
            Some(t) if t.is_finite() && t < lo && lo - t <= slack(lo, origin) => lo,
            Some(t) if t.is_finite() && t > hi && t - hi <= slack(hi, origin) => hi,
            _ => 0.5 * (lo + hi),
        };

        let step = next - tau;
        tau = next;
        let x_new = origin + tau;
        if step.abs() < opts.eps * (1.0 + x_new.abs()) {
            return Ok((x_new, it));
        }
        if hi - lo <= 4.0 * f64::EPSILON * (origin.abs() + hi.abs().max(lo.abs())) {
            return Ok((origin + 0.5 * (lo + hi), it));
        }
        x = x_new;
    }
    Err(DoaError::ConvergenceFailure {
        index: k,
        iterations: opts.max_iterations,
        best: x,
    })
}

fn slack(bound: f64, origin: f64) -> f64 {
    8.0 * f64::EPSILON * (bound.abs() + origin.abs())
}

/// Zero of `c + q / (a - t) + s / (b - t)` inside `(b, a)`, `q, s < 0`.
///
/// The model is strictly decreasing between its poles, so exactly one root of
/// the cleared quadratic lies there.
fn model_root(c: f64, q: f64, s: f64, a: f64, b: f64) -> Option<f64> {
    // c (a - t)(b - t) + q (b - t) + s (a - t) = 0
    let qa = c;
    let qb = c * (a + b) + q + s;
    let qc = c * a * b + q * b + s * a;
    let inside = |t: f64| t > b && t < a;
    if qa.abs() <= f64::EPSILON * (qb.abs() + qc.abs()) {
        if qb == 0.0 {
            return None;
        }
        let t = qc / qb;
        return inside(t).then_some(t);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let (t1, t2) = if qb >= 0.0 {
        let den = qb + sq;
        (
            (den) / (2.0 * qa),
            if den != 0.0 { 2.0 * qc / den } else { f64::NAN },
        )
    } else {
        let den = qb - sq;
        (
            if den != 0.0 { 2.0 * qc / den } else { f64::NAN },
            den / (2.0 * qa),
        )
    };
    match (inside(t1), inside(t2)) {
        (true, false) => Some(t1),
        (false, true) => Some(t2),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_entry_closed_form() {
        let m = RankOneMod::new(vec![3.0], 0.5, vec![Complex64::new(1.0, 1.0)]).unwrap();
        let (root, it) = root_secular_k(&m, 0, None, 1e-12).unwrap();
        assert!((root - 2.0).abs() < 1e-14);
        assert!(it <= 2);
    }

    /// Clearing denominators of the K = 2 secular equation gives
    /// `(d1 - x)(d2 - x) - rho (w1 (d2 - x) + w2 (d1 - x)) = 0`.
    #[test]
    fn two_by_two_matches_quadratic() {
        let (d1, d2, rho, w1, w2) = (2.5, -0.5, 0.8, 0.7f64, 1.3f64);
        let m = RankOneMod::new(vec![d1, d2], rho, vec![c(w1.sqrt()), c(w2.sqrt())]).unwrap();
        let b = d1 + d2 - rho * (w1 + w2);
        let cc = d1 * d2 - rho * (w1 * d2 + w2 * d1);
        let disc = (b * b - 4.0 * cc).sqrt();
        let hi = 0.5 * (b + disc);
        let lo = 0.5 * (b - disc);
        let (r0, _) = root_secular_k(&m, 0, None, 1e-12).unwrap();
        let (r1, _) = root_secular_k(&m, 1, None, 1e-12).unwrap();
        assert!((r0 - hi).abs() < 1e-12, "{r0} vs {hi}");
        assert!((r1 - lo).abs() < 1e-12, "{r1} vs {lo}");
    }

    #[test]
    fn bad_start_falls_back_to_midpoint() {
        let m = RankOneMod::new(vec![2.0, 1.0, 0.0], 1.0, vec![c(0.5), c(0.5), c(0.5)]).unwrap();
        let (a, _) = root_secular_k(&m, 1, Some(10.0), 1e-12).unwrap();
        let (b, _) = root_secular_k(&m, 1, None, 1e-12).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn rejects_undeflated_input() {
        let m = RankOneMod::new(vec![1.0, 1.0], 1.0, vec![c(1.0), c(1.0)]).unwrap();
        assert!(root_secular_k(&m, 0, None, 1e-9).is_err());
        let m = RankOneMod::new(vec![2.0, 1.0], 1.0, vec![c(1.0), c(0.0)]).unwrap();
        assert!(root_secular_k(&m, 0, None, 1e-9).is_err());
    }

    #[test]
    fn tiny_weight_root_hugs_its_pole() {
        let m = RankOneMod::new(vec![3.0, 2.0, 1.0], 1.0, vec![c(1.0), c(1e-7), c(1.0)]).unwrap();
        let (root, _) = root_secular_k(&m, 1, None, 1e-12).unwrap();
        assert!(root < 2.0 && root > 2.0 - 1e-12);
        assert!(super::super::secular_value(&m, root).unwrap().abs() < 1e-3);
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let m = RankOneMod::new(vec![3.0, 2.0, 1.0], 1.0, vec![c(1.0), c(0.3), c(1.0)]).unwrap();
        let opts = SolverOptions {
            eps: 0.0,
            max_iterations: 1,
        };
        match root_secular_k_with(&m, 1, None, &opts) {
            Err(DoaError::ConvergenceFailure { index: 1, best, .. }) => {
                assert!(best > 1.0 && best < 2.0)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
