//! Fixtures shared by the benchmarks.

use doa_core::{
    generate_snapshots, sample_covariance, AngleGrid, ArrayGeometry, SampleCovariance, Scenario,
    SteeringGrid,
};

/// Two sources five degrees apart on an `m`-element half-wavelength ULA.
pub fn two_source_fixture(m: usize) -> (SampleCovariance, SteeringGrid) {
    let geometry = ArrayGeometry::ula(m, 0.5).expect("valid ULA");
    let scenario = Scenario::uncorrelated(vec![45.0, 50.0], 10.0, 4 * m, 17);
    let x = generate_snapshots(&geometry, &scenario).expect("valid scenario");
    let cov = sample_covariance(&x, 2).expect("valid covariance");
    let grid = SteeringGrid::from_grid(&geometry, &AngleGrid::default()).expect("valid grid");
    (cov, grid)
}
