//! Scenario and plan files (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::array::{noise_power_from_snr_db, ArrayGeometry, Scenario};
use crate::error::{DoaError, Result};
use crate::estimators::{
    EstimatorKind, SpectrumOptions, SpectrumPath, DEFAULT_LOADING, DEFAULT_UCF_INIT_LEFT,
};
use crate::grid::AngleGrid;
use crate::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Ula,
    Positions,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CorrelationValue {
    Real(f64),
    Complex([f64; 2]),
}

impl CorrelationValue {
    pub fn value(self) -> Complex64 {
        match self {
            CorrelationValue::Real(r) => Complex64::new(r, 0.0),
            CorrelationValue::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

fn default_geometry() -> GeometryKind {
    GeometryKind::Ula
}

fn default_spacing() -> f64 {
    0.5
}

/// A synthetic scenario as written in a config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_geometry")]
    pub geometry: GeometryKind,
    /// Number of ULA elements.
    #[serde(default)]
    pub sensors: Option<usize>,
    /// ULA spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Explicit positions in wavelengths, for `geometry = "positions"`.
    #[serde(default)]
    pub positions: Option<Vec<[f64; 3]>>,
    pub doas: Vec<f64>,
    /// Source powers; unit power when omitted.
    #[serde(default)]
    pub powers: Option<Vec<f64>>,
    #[serde(default)]
    pub correlation: Option<CorrelationValue>,
    pub snr_db: f64,
    pub snapshots: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DoaError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read(path)?)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        match self.geometry {
            GeometryKind::Ula => {
                if self.positions.is_some() {
                    return Err(DoaError::Config("`positions` given for a ULA".into()));
                }
                let m = self
                    .sensors
                    .ok_or_else(|| DoaError::Config("ULA needs `sensors`".into()))?;
                ArrayGeometry::ula(m, self.spacing)
            }
            GeometryKind::Positions => {
                let p = self.positions.clone().ok_or_else(|| {
                    DoaError::Config("`geometry = \"positions\"` needs `positions`".into())
                })?;
                if self.sensors.is_some_and(|m| m != p.len()) {
                    return Err(DoaError::Config(
                        "`sensors` disagrees with `positions`".into(),
                    ));
                }
                ArrayGeometry::new(p)
            }
        }
    }

    pub fn scenario(&self) -> Scenario {
        let n = self.doas.len();
        Scenario {
            doas: self.doas.clone(),
            source_powers: self.powers.clone().unwrap_or_else(|| vec![1.0; n]),
            correlation: self
                .correlation
                .map(CorrelationValue::value)
                .unwrap_or_default(),
            noise_power: noise_power_from_snr_db(self.snr_db),
            snapshots: self.snapshots,
            seed: self.seed,
        }
    }

    /// Geometry and validated scenario.
    pub fn build(&self) -> Result<(ArrayGeometry, Scenario)> {
        let geometry = self.geometry()?;
        let scenario = self.scenario();
        scenario.validate(&geometry)?;
        Ok((geometry, scenario))
    }
}

/// Quantity swept by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    Snapshots,
    SeparationDeg,
    NSensors,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Snapshots => "snapshots",
            SweepAxis::SeparationDeg => "separation_deg",
            SweepAxis::NSensors => "n_sensors",
        }
    }

    /// The scenario with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(DoaError::Config(format!(
                    "{} must be a positive integer, got {v}",
                    self.name()
                )))
            }
        };
        match self {
            SweepAxis::SnrDb => cfg.snr_db = value,
            SweepAxis::Snapshots => cfg.snapshots = count(value)?,
            SweepAxis::SeparationDeg => {
                let first = *cfg
                    .doas
                    .first()
                    .ok_or_else(|| DoaError::Config("scenario has no sources".into()))?;
                cfg.doas = (0..cfg.doas.len())
                    .map(|k| first + k as f64 * value)
                    .collect();
            }
            SweepAxis::NSensors => {
                if cfg.geometry != GeometryKind::Ula {
                    return Err(DoaError::Config("n_sensors sweeps need a ULA".into()));
                }
                cfg.sensors = Some(count(value)?);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum LoadingValue {
    Keyword(String),
    Factor(f64),
}

/// How inverse-based estimators treat a singular sample covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loading {
    /// Load singular matrices by the given factor.
    Auto(f64),
    /// Never load; a singular matrix makes the run fail.
    Off,
}

impl Loading {
    fn factor(self) -> f64 {
        match self {
            Loading::Auto(g) => g,
            Loading::Off => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PathValue {
    Fast,
    Naive,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    axis: SweepAxis,
    values: Vec<f64>,
    estimators: Vec<String>,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default)]
    trim_fraction: f64,
    #[serde(default)]
    grid: Option<String>,
    #[serde(default)]
    loading: Option<LoadingValue>,
    #[serde(default)]
    ucf_init_left: Option<f64>,
    #[serde(default)]
    min_separation: Option<f64>,
    #[serde(default)]
    path: Option<PathValue>,
    #[serde(default)]
    warm_start: Option<bool>,
    #[serde(default)]
    refine: bool,
    #[serde(default)]
    timing: bool,
    #[serde(default)]
    timing_repetitions: Option<usize>,
    #[serde(default)]
    output: Option<PathBuf>,
    scenario: ScenarioConfig,
}

fn default_runs() -> usize {
    200
}

/// A Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub scenario: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub runs: usize,
    /// Fraction of runs with the largest error dropped per estimator, in `[0, 0.05]`.
    pub trim_fraction: f64,
    pub grid: AngleGrid,
    pub loading: Loading,
    pub ucf_init_left: f64,
    /// Degrees; two grid cells when unset.
    pub min_separation: Option<f64>,
    pub path: SpectrumPath,
    pub warm_start: bool,
    /// Parabolic interpolation of the selected minima.
    pub refine: bool,
    /// Fill the `mean_time_s` column (makes the CSV machine-dependent).
    pub timing: bool,
    pub timing_repetitions: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: PlanFile = toml::from_str(text).map_err(|e| DoaError::Config(e.to_string()))?;
        let estimators = raw
            .estimators
            .iter()
            .map(|s| EstimatorKind::from_str(s))
            .collect::<Result<Vec<_>>>()?;
        let grid = match raw.grid {
            Some(g) => g.parse()?,
            None => AngleGrid::default(),
        };
        let loading = match raw.loading {
            None => Loading::Auto(DEFAULT_LOADING),
            Some(LoadingValue::Keyword(k)) if k == "auto" => Loading::Auto(DEFAULT_LOADING),
            Some(LoadingValue::Keyword(k)) if k == "none" => Loading::Off,
            Some(LoadingValue::Keyword(k)) => {
                return Err(DoaError::Config(format!(
                    "loading must be \"auto\", \"none\" or a number, got \"{k}\""
                )))
            }
            Some(LoadingValue::Factor(g)) => Loading::Auto(g),
        };
        let plan = Self {
            scenario: raw.scenario,
            axis: raw.axis,
            values: raw.values,
            estimators,
            runs: raw.runs,
            trim_fraction: raw.trim_fraction,
            grid,
            loading,
            ucf_init_left: raw.ucf_init_left.unwrap_or(DEFAULT_UCF_INIT_LEFT),
            min_separation: raw.min_separation,
            path: match raw.path {
                Some(PathValue::Naive) => SpectrumPath::Naive,
                _ => SpectrumPath::Fast,
            },
            warm_start: raw.warm_start.unwrap_or(true),
            refine: raw.refine,
            timing: raw.timing,
            timing_repetitions: raw.timing_repetitions.unwrap_or(5),
            output: raw.output,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DoaError::Config(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return bad("axis values must be finite and nonempty".into());
        }
        if self.estimators.is_empty() {
            return bad("no estimators listed".into());
        }
        if !(0.0..=0.05).contains(&self.trim_fraction) {
            return bad(format!(
                "trim_fraction must lie in [0, 0.05], got {}",
                self.trim_fraction
            ));
        }
        if let Loading::Auto(g) = self.loading {
            if !(g.is_finite() && g > 0.0) {
                return bad(format!("loading factor must be positive, got {g}"));
            }
        }
        if !(self.ucf_init_left.is_finite() && self.ucf_init_left > 0.0) {
            return bad("ucf_init_left must be positive".into());
        }
        if self
            .min_separation
            .is_some_and(|s| !(s.is_finite() && s >= 0.0))
        {
            return bad("min_separation must be nonnegative".into());
        }
        if self.timing_repetitions == 0 {
            return bad("timing_repetitions must be at least 1".into());
        }
        for &v in &self.values {
            self.axis.apply(&self.scenario, v)?.build()?;
        }
        Ok(())
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            path: self.path,
            warm_start: self.warm_start,
            auto_loading: self.loading.factor(),
            ucf_init_left: self.ucf_init_left,
            ..SpectrumOptions::default()
        }
    }

    pub fn separation(&self) -> f64 {
        self.min_separation
            .unwrap_or_else(|| 2.0 * self.grid.step())
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| DoaError::Io(format!("{}: {e}", path.display())))
}
