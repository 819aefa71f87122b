//! Monte-Carlo sweeps: RMSE tables and spectrum timing.

mod config;
mod timing;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{
    CorrelationValue, ExperimentPlan, GeometryKind, Loading, ScenarioConfig, SweepAxis,
};
pub use timing::{time_spectra, write_timing_csv, TimingRow};

use crate::array::{sample_covariance, synthesize, ArrayGeometry, Scenario};
use crate::error::{DoaError, Result};
use crate::estimators::{spectrum, EstimatorKind, SpectrumOptions};
use crate::grid::SteeringGrid;
use crate::peaks::{dml_grid2, find_n_minima, refine_parabolic, DoaEstimate};

/// Header of the RMSE table.
pub const CSV_HEADER: [&str; 7] = [
    "estimator",
    "axis_name",
    "axis_value",
    "rmse_deg",
    "mean_time_s",
    "failures",
    "runs_used",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub estimator: EstimatorKind,
    pub axis_name: &'static str,
    pub axis_value: f64,
    /// NaN when no run is left after failures and trimming.
    pub rmse_deg: f64,
    /// Mean wall time per run, when timing was requested.
    pub mean_time_s: Option<f64>,
    pub failures: usize,
    pub runs_used: usize,
}

/// `sqrt(mean over runs and sources of (est - truth)^2)`, both sides sorted
/// ascending.
pub fn rmse(estimates: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(DoaError::InvalidArgument("no runs to average".into()));
    }
    let mut sum = 0.0;
    for est in estimates {
        sum += sorted_errors(est, truth)?
            .iter()
            .map(|e| e * e)
            .sum::<f64>();
    }
    Ok((sum / (estimates.len() * truth.len()) as f64).sqrt())
}

fn sorted_errors(est: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    if est.len() != truth.len() {
        return Err(DoaError::InvalidArgument(format!(
            "{} estimates for {} sources",
            est.len(),
            truth.len()
        )));
    }
    let mut e = est.to_vec();
    let mut t = truth.to_vec();
    e.sort_by(f64::total_cmp);
    t.sort_by(f64::total_cmp);
    Ok(e.iter().zip(&t).map(|(a, b)| a - b).collect())
}

/// Number of runs removed for a given trim fraction.
pub fn trim_count(trim_fraction: f64, runs: usize) -> usize {
    if trim_fraction <= 0.0 {
        return 0;
    }
    // Guard against 0.01 * 200 landing a hair above 2.
    ((trim_fraction * runs as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Drops the `count` runs whose largest absolute per-source error is biggest
/// (earlier runs win ties) and returns the survivors in run order.
pub fn trim_runs(estimates: &[Vec<f64>], truth: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    let mut scored = Vec::with_capacity(estimates.len());
    for (i, est) in estimates.iter().enumerate() {
        let worst = sorted_errors(est, truth)?
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        scored.push((worst, i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut dropped = vec![false; estimates.len()];
    for &(_, i) in scored.iter().take(count) {
        dropped[i] = true;
    }
    Ok(estimates
        .iter()
        .zip(dropped)
        .filter(|(_, d)| !d)
        .map(|(e, _)| e.clone())
        .collect())
}

/// Result of one estimator on one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub estimate: Result<DoaEstimate>,
    pub seconds: f64,
}

/// Everything an individual run needs, fixed per axis value.
pub struct RunContext<'a> {
    pub geometry: &'a ArrayGeometry,
    pub scenario: &'a Scenario,
    pub grid: &'a SteeringGrid,
    pub estimators: &'a [EstimatorKind],
    pub options: SpectrumOptions,
    pub min_separation: f64,
    pub refine: bool,
}

impl RunContext<'_> {
    /// Seed of run `r`.
    pub fn seed(&self, r: usize) -> u64 {
        self.scenario.seed.wrapping_add(r as u64)
    }

    /// Synthesises run `r` and applies every estimator to it.
    pub fn run(&self, r: usize) -> Result<Vec<RunOutcome>> {
        let scenario = Scenario {
            seed: self.seed(r),
            ..self.scenario.clone()
        };
        let data = synthesize(self.geometry, &scenario)?;
        let cov = sample_covariance(&data.snapshots, scenario.sources())?;
        Ok(self
            .estimators
            .iter()
            .map(|&kind| {
                let start = Instant::now();
                let estimate = self.estimate(kind, &cov);
                RunOutcome {
                    estimate,
                    seconds: start.elapsed().as_secs_f64(),
                }
            })
            .collect())
    }

    fn estimate(&self, kind: EstimatorKind, cov: &crate::SampleCovariance) -> Result<DoaEstimate> {
        if kind == EstimatorKind::DmlGrid2 {
            return dml_grid2(cov, self.grid);
        }
        let spec = spectrum(kind, cov, self.grid, &self.options)?;
        let est = find_n_minima(&spec, cov.n_sources(), self.min_separation)?;
        let est = if self.refine {
            refine_parabolic(&spec, &est)
        } else {
            est
        };
        if est.values.iter().any(|v| !v.is_finite()) {
            return Err(DoaError::InvalidArgument(
                "selected minimum has a non-finite spectrum value".into(),
            ));
        }
        Ok(est)
    }
}

/// Runs the full sweep. Rows come out ordered by estimator (plan order), then
/// axis value (plan order); the result does not depend on the thread count.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<RmseRow>> {
    plan.validate()?;
    let mut per_value: Vec<Vec<Vec<RunOutcome>>> = Vec::with_capacity(plan.values.len());
    let mut truths = Vec::with_capacity(plan.values.len());
    for &value in &plan.values {
        let (geometry, scenario) = plan.axis.apply(&plan.scenario, value)?.build()?;
        let grid = SteeringGrid::from_grid(&geometry, &plan.grid)?;
        let ctx = RunContext {
            geometry: &geometry,
            scenario: &scenario,
            grid: &grid,
            estimators: &plan.estimators,
            options: plan.spectrum_options(),
            min_separation: plan.separation(),
            refine: plan.refine,
        };
        let runs: Vec<Vec<RunOutcome>> = (0..plan.runs)
            .into_par_iter()
            .map(|r| ctx.run(r))
            .collect::<Result<_>>()?;
        per_value.push(runs);
        truths.push(scenario.doas.clone());
    }

    let trim = trim_count(plan.trim_fraction, plan.runs);
    let mut rows = Vec::with_capacity(plan.estimators.len() * plan.values.len());
    for (e, &kind) in plan.estimators.iter().enumerate() {
        for (v, &value) in plan.values.iter().enumerate() {
            let outcomes = per_value[v].iter().map(|run| &run[e]);
            let mut good = Vec::new();
            let mut failures = 0;
            let mut seconds = 0.0;
            for o in outcomes {
                seconds += o.seconds;
                match &o.estimate {
                    Ok(est) => good.push(est.angles.clone()),
                    Err(_) => failures += 1,
                }
            }
            let kept = trim_runs(&good, &truths[v], trim.min(good.len()))?;
            let rmse_deg = if kept.is_empty() {
                f64::NAN
            } else {
                rmse(&kept, &truths[v])?
            };
            rows.push(RmseRow {
                estimator: kind,
                axis_name: plan.axis.name(),
                axis_value: value,
                rmse_deg,
                mean_time_s: plan.timing.then(|| seconds / plan.runs as f64),
                failures,
                runs_used: kept.len(),
            });
        }
    }
    Ok(rows)
}

/// Writes the RMSE table. Floats use the shortest representation that
/// round-trips, so identical rows give identical bytes.
pub fn write_csv<W: Write>(rows: &[RmseRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.estimator.tag().to_string(),
            r.axis_name.to_string(),
            r.axis_value.to_string(),
            r.rmse_deg.to_string(),
            r.mean_time_s.map(|t| t.to_string()).unwrap_or_default(),
            r.failures.to_string(),
            r.runs_used.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_hand_values() {
        assert_eq!(rmse(&[vec![45.0, 50.0]], &[45.0, 50.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[vec![50.0, 45.0]], &[45.0, 50.0]).unwrap(), 0.0);
        assert!((rmse(&[vec![46.0, 49.0]], &[45.0, 50.0]).unwrap() - 1.0).abs() < 1e-15);
        let two = rmse(&[vec![46.0, 51.0], vec![48.0, 53.0]], &[45.0, 50.0]).unwrap();
        assert!((two - 5f64.sqrt()).abs() < 1e-14);
        assert!(rmse(&[vec![1.0]], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_ignores_run_order() {
        let runs = vec![vec![44.0, 50.5], vec![45.2, 49.0], vec![47.0, 52.0]];
        let mut rev = runs.clone();
        rev.reverse();
        let truth = [45.0, 50.0];
        assert_eq!(rmse(&runs, &truth).unwrap(), rmse(&rev, &truth).unwrap());
    }

    #[test]
    fn trimming() {
        assert_eq!(trim_count(0.01, 200), 2);
        assert_eq!(trim_count(0.01, 1000), 10);
        assert_eq!(trim_count(0.01, 150), 2);
        assert_eq!(trim_count(0.0, 150), 0);
        let truth = [0.0];
        let runs: Vec<Vec<f64>> = [0.5, 9.0, -0.1, -7.0, 9.0]
            .iter()
            .map(|&e| vec![e])
            .collect();
        let kept = trim_runs(&runs, &truth, 2).unwrap();
        assert_eq!(kept, vec![vec![0.5], vec![-0.1], vec![-7.0]]);
        let kept = trim_runs(&runs, &truth, 1).unwrap();
        assert_eq!(kept, vec![vec![0.5], vec![-0.1], vec![-7.0], vec![9.0]]);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "estimator,axis_name,axis_value,rmse_deg,mean_time_s,failures,runs_used\n"
        );
    }

    fn small_plan(estimators: &str, runs: usize) -> ExperimentPlan {
        ExperimentPlan::from_toml_str(&format!(
            r#"
axis = "snr_db"
values = [10.0, 20.0]
estimators = {estimators}
runs = {runs}
grid = "0:90:181"
[scenario]
sensors = 8
doas = [20.0, 40.0]
snr_db = 0.0
snapshots = 50
seed = 3
"#
        ))
        .unwrap()
    }

    #[test]
    fn easy_scenario_is_resolved() {
        let plan = small_plan(
            r#"["music", "pr-dml", "pr-wsf", "pr-ccf", "pr-ucf", "dml-grid2"]"#,
            4,
        );
        let rows = run_experiment(&plan).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert_eq!(r.failures, 0);
            assert_eq!(r.runs_used, 4);
            assert!(r.rmse_deg < 0.5, "{:?}", r);
            assert!(r.mean_time_s.is_none());
        }
        assert_eq!(rows[0].estimator, EstimatorKind::Music);
        assert_eq!(rows[1].axis_value, 20.0);
    }

    #[test]
    fn deterministic_output() {
        let plan = small_plan(r#"["bf", "pr-ccf"]"#, 6);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&run_experiment(&plan).unwrap(), &mut a).unwrap();
        write_csv(&run_experiment(&plan).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }
}
