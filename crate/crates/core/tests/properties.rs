use doa_core::experiment::{rmse, trim_count, trim_runs};
use doa_core::rank_one::eigenvalues;
use doa_core::*;
use proptest::prelude::*;

fn rank_one_case() -> impl Strategy<Value = (Vec<f64>, f64, Vec<(f64, f64)>)> {
    (3usize..12).prop_flat_map(|k| {
        (
            prop::collection::vec(-5.0f64..5.0, k),
            0.05f64..3.0,
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), k),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn secular_roots_interlace_and_preserve_the_trace((mut d, rho, z) in rank_one_case()) {
        d.sort_by(|a, b| b.total_cmp(a));
        let z: Vec<Complex64> = z.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        let znorm: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let m = RankOneMod::new(d.clone(), rho, z).unwrap();
        let k = d.len();
        let roots = eigenvalues(&m, k, Which::Largest, None).unwrap().roots;
        let tol = 1e-9 * (1.0 + d[0].abs() + rho * znorm);
        // d_{i+1} - tol <= mu_i <= d_i + tol, and the last root stays above d_k - rho |z|^2.
        for i in 0..k {
            prop_assert!(roots[i] <= d[i] + tol);
            let floor = if i + 1 < k { d[i + 1] } else { d[k - 1] - rho * znorm };
            prop_assert!(roots[i] >= floor - tol);
        }
        let trace: f64 = d.iter().sum::<f64>() - rho * znorm;
        prop_assert!((roots.iter().sum::<f64>() - trace).abs() <= k as f64 * tol);
    }

    #[test]
    fn rmse_ignores_run_order(
        runs in prop::collection::vec(prop::collection::vec(-90.0f64..90.0, 2), 1..30),
        shift in 0usize..30,
    ) {
        let truth = [10.0, 20.0];
        let mut rotated = runs.clone();
        let len = rotated.len();
        rotated.rotate_left(shift % len);
        let a = rmse(&runs, &truth).unwrap();
        let b = rmse(&rotated, &truth).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn trimming_removes_the_requested_count(
        runs in prop::collection::vec(prop::collection::vec(-90.0f64..90.0, 2), 1..60),
        fraction in 0.0f64..=0.05,
    ) {
        let count = trim_count(fraction, runs.len());
        prop_assert!(count as f64 >= fraction * runs.len() as f64 - 1e-9);
        prop_assert!((count as f64) < fraction * runs.len() as f64 + 1.0);
        let kept = trim_runs(&runs, &[0.0, 5.0], count).unwrap();
        prop_assert_eq!(kept.len(), runs.len() - count.min(runs.len()));
    }

    #[test]
    fn null_spectra_are_nonnegative(
        sensors in 4usize..10,
        snr_db in -5.0f64..20.0,
        snapshots in 2usize..40,
        seed in any::<u64>(),
    ) {
        let geometry = ArrayGeometry::ula(sensors, 0.5).unwrap();
        let scenario = Scenario::uncorrelated(vec![20.0, 35.0], snr_db, snapshots, seed);
        let x = generate_snapshots(&geometry, &scenario).unwrap();
        let cov = sample_covariance(&x, 2).unwrap();
        let grid = SteeringGrid::from_grid(&geometry, &AngleGrid::new(0.0, 90.0, 91).unwrap()).unwrap();
        for kind in [
            EstimatorKind::Beamformer,
            EstimatorKind::Capon,
            EstimatorKind::Music,
            EstimatorKind::PrDml,
            EstimatorKind::PrWsf,
            EstimatorKind::PrCcf,
            EstimatorKind::PrUcf,
        ] {
            let s = spectrum(kind, &cov, &grid, &SpectrumOptions::default()).unwrap();
            prop_assert_eq!(s.values.len(), 91);
            prop_assert!(s.values.iter().all(|v| v.is_finite() && *v >= 0.0), "{} went negative", kind);
        }
    }
}
