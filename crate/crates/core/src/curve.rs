//! The universal exchange format between simulation, fitting, and the CLI.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A sampled (x, value, sigma) series: survival probability, msd, spectrum,
/// or radial profile.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// One-sigma uncertainties; empty when the curve is exact.
    pub err: Vec<f64>,
}

impl Curve {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid("curve x/y length mismatch"));
        }
        Ok(Curve { x, y, err: Vec::new() })
    }

    pub fn with_err(x: Vec<f64>, y: Vec<f64>, err: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != err.len() {
            return Err(Error::invalid("curve x/y/err length mismatch"));
        }
        Ok(Curve { x, y, err })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Restrict to points with `x` in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Curve {
        let mut out = Curve::default();
        for i in 0..self.len() {
            if self.x[i] >= lo && self.x[i] <= hi {
                out.x.push(self.x[i]);
                out.y.push(self.y[i]);
                if !self.err.is_empty() {
                    out.err.push(self.err[i]);
                }
            }
        }
        out
    }
}

/// Strictly increasing logarithmic grid with `n` points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Uniform grid with `n` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
