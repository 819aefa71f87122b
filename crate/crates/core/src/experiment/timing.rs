use std::io::Write;
use std::time::Instant;

use super::ExperimentPlan;
use crate::array::{sample_covariance, synthesize, Scenario};
use crate::error::Result;
use crate::estimators::{spectrum, EstimatorKind, SpectrumOptions, SpectrumPath};
use crate::grid::SteeringGrid;
use crate::peaks::dml_grid2;

/// Median wall time of one full-grid evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub estimator: EstimatorKind,
    pub axis_name: &'static str,
    pub axis_value: f64,
    pub fast_median_s: f64,
    /// Only for estimators with a dense-eigendecomposition path.
    pub naive_median_s: Option<f64>,
    pub repetitions: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times every estimator's spectrum (the full two-source search for
/// `dml-grid2`) once per repetition after one untimed warm-up, sequentially.
/// Repetition `r` uses the data of Monte-Carlo run `r`.
pub fn time_spectra(plan: &ExperimentPlan) -> Result<Vec<TimingRow>> {
    plan.validate()?;
    let reps = plan.timing_repetitions;
    let mut rows = Vec::new();
    let mut cells: Vec<Vec<(f64, Option<f64>)>> = vec![Vec::new(); plan.estimators.len()];
    for &value in &plan.values {
        let (geometry, scenario) = plan.axis.apply(&plan.scenario, value)?.build()?;
        let grid = SteeringGrid::from_grid(&geometry, &plan.grid)?;
        let covs = (0..reps)
            .map(|r| {
                let sc = Scenario {
                    seed: scenario.seed.wrapping_add(r as u64),
                    ..scenario.clone()
                };
                sample_covariance(&synthesize(&geometry, &sc)?.snapshots, sc.sources())
            })
            .collect::<Result<Vec<_>>>()?;
        for (e, &kind) in plan.estimators.iter().enumerate() {
            let fast = SpectrumOptions {
                path: SpectrumPath::Fast,
                ..plan.spectrum_options()
            };
            let naive = SpectrumOptions {
                path: SpectrumPath::Naive,
                ..fast
            };
            let time = |opts: &SpectrumOptions| -> Result<f64> {
                let once = |c| -> Result<()> {
                    if kind == EstimatorKind::DmlGrid2 {
                        dml_grid2(c, &grid).map(|_| ())
                    } else {
                        spectrum(kind, c, &grid, opts).map(|_| ())
                    }
                };
                once(&covs[0])?;
                let mut t = Vec::with_capacity(reps);
                for c in &covs {
                    let start = Instant::now();
                    once(c)?;
                    t.push(start.elapsed().as_secs_f64());
                }
                Ok(median(t))
            };
            let f = time(&fast)?;
            let n = if kind.has_naive_path() {
                Some(time(&naive)?)
            } else {
                None
            };
            cells[e].push((f, n));
        }
    }
    for (e, &kind) in plan.estimators.iter().enumerate() {
        for (v, &value) in plan.values.iter().enumerate() {
            let (f, n) = cells[e][v];
            rows.push(TimingRow {
                estimator: kind,
                axis_name: plan.axis.name(),
                axis_value: value,
                fast_median_s: f,
                naive_median_s: n,
                repetitions: reps,
            });
        }
    }
    Ok(rows)
}

pub fn write_timing_csv<W: Write>(rows: &[TimingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "estimator",
        "axis_name",
        "axis_value",
        "fast_median_s",
        "naive_median_s",
        "repetitions",
    ])?;
    for r in rows {
        w.write_record([
            r.estimator.tag().to_string(),
            r.axis_name.to_string(),
            r.axis_value.to_string(),
            r.fast_median_s.to_string(),
            r.naive_median_s.map(|t| t.to_string()).unwrap_or_default(),
            r.repetitions.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
