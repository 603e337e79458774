//! Real-valued paths sampled on a uniform time grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of a path at times `i * grid_step`, `i = 0..values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPath {
    grid_step: f64,
    values: Vec<f64>,
}

impl RealPath {
    pub fn new(grid_step: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("a path needs at least one grid point"));
        }
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::param(format!("grid step {grid_step} must be positive")));
        }
        Ok(RealPath { grid_step, values })
    }

    /// Path on `[0, horizon]` with `values.len()` equally spaced points.
    pub fn on_interval(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::param("need at least two grid points"));
        }
        let step = horizon / (values.len() - 1) as f64;
        RealPath::new(step, values)
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn horizon(&self) -> f64 {
        self.grid_step * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.grid_step
    }

    /// Linear interpolation, clamped to the domain.
    pub fn eval(&self, t: f64) -> f64 {
        let x = (t / self.grid_step).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = x - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Value at the last grid point at or before `t`.
    pub fn eval_step(&self, t: f64) -> f64 {
        let i = ((t / self.grid_step + 1e-9).floor().max(0.0) as usize).min(self.values.len() - 1);
        self.values[i]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Running infimum `I_t = min_{s <= t} X_s`.
    pub fn running_infimum(&self) -> RealPath {
        let mut m = f64::INFINITY;
        let values = self
            .values
            .iter()
            .map(|&v| {
                m = m.min(v);
                m
            })
            .collect();
        RealPath { grid_step: self.grid_step, values }
    }

    /// `X_t - I_t`.
    pub fn reflected(&self) -> RealPath {
        let inf = self.running_infimum();
        let values = self.values.iter().zip(&inf.values).map(|(x, i)| x - i).collect();
        RealPath { grid_step: self.grid_step, values }
    }

    /// `a * X`.
    pub fn scaled(&self, a: f64) -> RealPath {
        RealPath {
            grid_step: self.grid_step,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// Same values on a grid with step `grid_step * factor`.
    pub fn with_time_scale(&self, factor: f64) -> RealPath {
        RealPath { grid_step: self.grid_step * factor, values: self.values.clone() }
    }

    /// Sup-norm distance between two paths on the same grid.
    pub fn sup_distance(&self, other: &RealPath) -> Result<f64> {
        if self.values.len() != other.values.len()
            || (self.grid_step - other.grid_step).abs() > 1e-12 * self.grid_step
        {
            return Err(Error::DomainMismatch(format!(
                "grids differ: {} points of step {} vs {} points of step {}",
                self.values.len(),
                self.grid_step,
                other.values.len(),
                other.grid_step
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let p = RealPath::on_interval(2.0, vec![0.0, 1.0, -1.0]).unwrap();
        assert_eq!(p.grid_step(), 1.0);
        assert_eq!(p.horizon(), 2.0);
        assert_eq!(p.eval(0.5), 0.5);
        assert_eq!(p.eval(1.5), 0.0);
        assert_eq!(p.eval(9.0), -1.0);
        assert_eq!(p.eval_step(1.5), 1.0);
        assert_eq!(p.running_infimum().values(), [0.0, 0.0, -1.0]);
        assert_eq!(p.reflected().values(), [0.0, 1.0, 0.0]);
        assert!(RealPath::new(0.0, vec![0.0]).is_err());
        assert!(RealPath::new(1.0, vec![]).is_err());
        let q = RealPath::on_interval(1.0, vec![0.0, 1.0]).unwrap();
        assert!(matches!(p.sup_distance(&q), Err(Error::DomainMismatch(_))));
    }
}
