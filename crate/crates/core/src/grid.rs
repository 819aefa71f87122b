use std::fmt;
use std::str::FromStr;

use crate::array::ArrayGeometry;
use crate::error::{DoaError, Result};
use crate::linalg::CMatrix;

/// Uniform, inclusive angle grid in degrees (`lo:hi:n` on the command line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl AngleGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(DoaError::InvalidArgument(format!(
                "grid bounds must be finite with lo < hi (got {lo}, {hi})"
            )));
        }
        if points < 2 {
            return Err(DoaError::InvalidArgument(
                "grid needs at least 2 points".into(),
            ));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 90.0,
            points: 1800,
        }
    }
}

impl FromStr for AngleGrid {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(DoaError::InvalidArgument(format!(
                "grid `{s}` is not of the form lo:hi:n"
            )));
        }
        let bad = |what: &str| DoaError::InvalidArgument(format!("grid `{s}`: bad {what}"));
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad("lower bound"))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad("upper bound"))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad("point count"))?;
        AngleGrid::new(lo, hi, n)
    }
}

impl fmt::Display for AngleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.points)
    }
}

/// Steering vectors of one array evaluated on a grid, column `g` for angle `g`.
#[derive(Debug, Clone)]
pub struct SteeringGrid {
    angles: Vec<f64>,
    vectors: CMatrix,
}

impl SteeringGrid {
    pub fn new(geometry: &ArrayGeometry, angles: Vec<f64>) -> Result<Self> {
        let vectors = geometry.steering_matrix(&angles)?;
        Ok(Self { angles, vectors })
    }

    pub fn from_grid(geometry: &ArrayGeometry, grid: &AngleGrid) -> Result<Self> {
        Self::new(geometry, grid.angles())
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn sensors(&self) -> usize {
        self.vectors.nrows()
    }
}
