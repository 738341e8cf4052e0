//! Points of ℂⁿ and their real coordinates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

/// A point of ℂⁿ. Real coordinates are ordered `(x₁, y₁, …, xₙ, yₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointCn(pub Vec<Complex64>);

impl PointCn {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); dim])
    }

    pub fn from_reals(re: &[f64]) -> Self {
        Self(re.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Builds a point from real coordinates `(x₁, y₁, …)`.
    pub fn from_real_coords(xs: &[f64]) -> Self {
        debug_assert!(xs.len().is_multiple_of(2));
        Self(xs.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn to_real_coords(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &PointCn) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: Complex64) -> PointCn {
        PointCn(self.0.iter().map(|c| c * s).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for PointCn {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for PointCn {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

impl Add for &PointCn {
    type Output = PointCn;
    fn add(self, rhs: &PointCn) -> PointCn {
        PointCn(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &PointCn {
    type Output = PointCn;
    fn sub(self, rhs: &PointCn) -> PointCn {
        PointCn(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &PointCn {
    type Output = PointCn;
    fn mul(self, s: f64) -> PointCn {
        PointCn(self.0.iter().map(|c| c * s).collect())
    }
}

impl From<Vec<Complex64>> for PointCn {
    fn from(v: Vec<Complex64>) -> Self {
        PointCn(v)
    }
}

/// Parses `"2,0"` or `"1+0.5i, -i"` into a point.
pub fn parse_point(text: &str) -> Result<PointCn> {
    let coords = text
        .split(',')
        .map(|s| crate::expr::parse_complex_literal(s.trim()))
        .collect::<Result<Vec<_>>>()?;
    PointCn::new(coords)
}
