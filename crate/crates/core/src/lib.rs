//! Direction-of-arrival estimation by partial relaxation.
//!
//! The relaxed estimators keep the array structure of one steering vector and
//! free the others, which turns every grid point into a small Hermitian
//! eigenvalue problem. The [`rank_one`] solver answers those problems from the
//! eigendecomposition of `R` plus one rank-one update instead of a dense
//! decomposition per direction.

pub mod array;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod grid;
pub mod linalg;
pub mod peaks;
pub mod rank_one;

pub use array::{
    generate_snapshots, noise_power_from_snr_db, sample_covariance, synthesize, ArrayGeometry,
    SampleCovariance, Scenario, SnapshotMatrix,
};
pub use error::{DoaError, Result};
pub use estimators::{
    spectrum, EstimatorKind, SpectrumOptions, SpectrumPath, SpectrumResult, WsfWeighting,
};
pub use experiment::{run_experiment, write_csv, ExperimentPlan, RmseRow, ScenarioConfig};
pub use grid::{AngleGrid, SteeringGrid};
pub use peaks::{dml_grid2, estimate_doas, find_n_minima, DoaEstimate};
pub use rank_one::{RankOneMod, SecularRoots, Which};

pub type Complex64 = nalgebra::Complex<f64>;
