use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform time grid `t_k = k * dt`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub dt: T,
    pub len: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(dt: T, len: usize) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::domain("grid", format!("dt must be positive, got {dt}")));
        }
        if len < 2 {
            return Err(Error::domain("grid", "a grid needs at least two points"));
        }
        Ok(Self { dt, len })
    }

    /// Grid covering `[0, horizon]` with step `dt` (the last point may
    /// overshoot the horizon by less than one step).
    pub fn with_horizon(dt: T, horizon: T) -> Result<Self> {
        let steps = (horizon / dt).ceil().to_usize().unwrap_or(0);
        Self::new(dt, steps + 1)
    }

    #[inline]
    pub fn t(&self, k: usize) -> T {
        self.dt * T::from_usize_lossy(k)
    }

    pub fn horizon(&self) -> T {
        self.t(self.len - 1)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len).map(|k| self.t(k)).collect()
    }

    /// Index of `t` if it lies on the grid (relative tolerance 1e-9 of a step).
    pub fn index_of(&self, t: T) -> Option<usize> {
        let x = t / self.dt;
        let k = x.round();
        if (x - k).abs() > T::lit(1e-9) * x.abs().max(T::one()) || k < T::zero() {
            return None;
        }
        let k = k.to_usize()?;
        (k < self.len).then_some(k)
    }
}
