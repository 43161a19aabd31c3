//! Time series emitted by the solvers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One output sample: time, real Bloch vector and the largest imaginary part
/// seen in the stored state at that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Record<T: Real> {
    pub t: T,
    pub bloch: [T; 3],
    pub max_imag: T,
}

/// Run diagnostics; fields a solver does not produce stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Largest imaginary part over every step and every stored quantity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_imag: Option<f64>,
    /// Largest Euclidean length of the real Bloch vector over every step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_bloch_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discretization_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_drift: Option<f64>,
    /// Largest deviation of the total excitation number from its initial value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excitation_variation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries<T: Real> {
    pub records: Vec<Record<T>>,
    pub diagnostics: Diagnostics,
}

impl<T: Real> TimeSeries<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Column `i` of the Bloch vector (0 = x, 1 = y, 2 = z).
    pub fn component(&self, i: usize) -> Vec<T> {
        self.records.iter().map(|r| r.bloch[i]).collect()
    }

    pub fn sz(&self) -> Vec<T> {
        self.component(2)
    }

    pub fn last(&self) -> Option<&Record<T>> {
        self.records.last()
    }

    /// Sup-norm distance of component `i` over records with `t <= t_upper`.
    ///
    /// Both series must share their time grid.
    pub fn sup_distance(&self, other: &Self, i: usize, t_upper: T) -> Result<T> {
        if self.len() != other.len() {
            return Err(Error::Input(format!(
                "series lengths differ ({} vs {})",
                self.len(),
                other.len()
            )));
        }
        let mut worst = T::zero();
        for (a, b) in self.records.iter().zip(&other.records) {
            let scale = T::one().max(a.t.abs());
            if (a.t - b.t).abs() > T::lit(1e-9) * scale {
                return Err(Error::Input(format!("time grids differ at t = {} vs {}", a.t, b.t)));
            }
            if a.t <= t_upper {
                worst = worst.max((a.bloch[i] - b.bloch[i]).abs());
            }
        }
        Ok(worst)
    }
}
