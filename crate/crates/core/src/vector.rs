//! Dense parameter vectors and objective evaluations.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat vector of `f64` parameters (or a gradient, direction, moment...).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(self)
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn scaled(&self, alpha: f64) -> ParamVector {
        self.map(|x| alpha * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ParamVector {
        Self(self.0.iter().copied().map(f).collect())
    }

    /// Element-wise combination of two vectors of equal dimension.
    pub fn zip_map(&self, other: &ParamVector, f: impl Fn(f64, f64) -> f64) -> Result<ParamVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Squared Euclidean norm.
pub fn norm_sq(v: &ParamVector) -> f64 {
    v.0.iter().map(|x| x * x).sum()
}

/// Returns `y + alpha * x` without modifying either input.
pub fn axpy(alpha: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    check_dim(y.dim(), x.dim())?;
    Ok(ParamVector(
        x.0.iter().zip(&y.0).map(|(xi, yi)| yi + alpha * xi).collect(),
    ))
}

/// Mini-batch loss and gradient at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub loss: f64,
    pub grad: ParamVector,
}

impl EvalResult {
    /// Validates finiteness and the gradient dimension.
    pub fn new(loss: f64, grad: ParamVector, dim: usize) -> Result<Self> {
        check_dim(dim, grad.dim())?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        if !grad.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(Self { loss, grad })
    }
}
