use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-norm distance, in unit-scaled coordinates, below which two points are
/// considered the same design point.
pub const DUPLICATE_TOLERANCE: f64 = 1e-8;

/// A point of the search space, in the coordinates of its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

/// Closed rectangular box `[lower, upper]` in `R^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain")]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawDomain> for Domain {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        Domain::new(raw.lower, raw.upper)
    }
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "lower has {} coordinates, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidDomain(format!(
                    "coordinate {k}: lower {a} must be finite and strictly below upper {b}"
                )));
            }
        }
        Ok(Domain { lower, upper })
    }

    /// The hypercube `[a, b]^s`.
    pub fn cube(dim: usize, a: f64, b: f64) -> Result<Self> {
        Domain::new(vec![a; dim], vec![b; dim])
    }

    pub fn unit(dim: usize) -> Self {
        Domain::cube(dim, 0.0, 1.0).expect("unit cube is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Returns the point unchanged if it lies in the closed box. Points are
    /// never clamped.
    pub fn clamp_or_reject(&self, x: &[f64]) -> Result<Point> {
        self.check(x)?;
        Ok(Point::from(x))
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (k, v) in x.iter().enumerate() {
            // NaN fails both comparisons
            if !(self.lower[k] <= *v && *v <= self.upper[k]) {
                return Err(Error::OutOfDomain { index: k });
            }
        }
        Ok(())
    }

    /// Affine map into `[0, 1]^s`.
    pub fn scale_to_unit(&self, x: &[f64]) -> Result<Point> {
        self.check(x)?;
        Ok(Point(self.to_unit(x)))
    }

    /// Inverse of [`Domain::scale_to_unit`].
    pub fn scale_from_unit(&self, u: &[f64]) -> Result<Point> {
        Domain::unit(self.dim()).check(u)?;
        Ok(Point(self.from_unit(u)))
    }

    /// Unchecked version of [`Domain::scale_to_unit`].
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| (v - self.lower[k]) / self.width(k))
            .collect()
    }

    /// Unchecked version of [`Domain::scale_from_unit`]. The result is
    /// clipped to the box so that rounding never produces an outside point.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, v)| (self.lower[k] + v * self.width(k)).clamp(self.lower[k], self.upper[k]))
            .collect()
    }

    /// Max-norm distance between two points after unit scaling.
    pub fn unit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(k, (a, b))| ((a - b) / self.width(k)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_duplicate(&self, x: &[f64], y: &[f64]) -> bool {
        self.unit_distance(x, y) < DUPLICATE_TOLERANCE
    }
}
