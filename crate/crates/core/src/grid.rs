//! Uniform tensor grids on the box `[-1, 1]^n`.

use thiserror::Error;

/// Default cap on the number of grid points a single sweep may visit.
pub const DEFAULT_SAMPLE_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("grid of {resolution}^{n} points exceeds the sample budget of {budget}")]
    BudgetExceeded {
        resolution: usize,
        n: usize,
        budget: usize,
    },
}

/// Uniform grid with `resolution` points per axis, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxGrid {
    n: usize,
    resolution: usize,
    len: usize,
}

impl BoxGrid {
    pub fn new(n: usize, resolution: usize) -> Result<Self, GridError> {
        Self::with_budget(n, resolution, DEFAULT_SAMPLE_BUDGET)
    }

    pub fn with_budget(n: usize, resolution: usize, budget: usize) -> Result<Self, GridError> {
        if resolution < 2 {
            return Err(GridError::Resolution(resolution));
        }
        let exceeded = GridError::BudgetExceeded {
            resolution,
            n,
            budget,
        };
        let exp = u32::try_from(n).map_err(|_| exceeded.clone())?;
        let len = resolution
            .checked_pow(exp)
            .ok_or_else(|| exceeded.clone())?;
        if len > budget {
            return Err(exceeded);
        }
        Ok(Self { n, resolution, len })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coordinate of the `k`-th node along an axis.
    ///
    /// Written as `(2k - (r-1)) / (r-1)` so that nested dyadic grids produce
    /// bit-identical shared nodes.
    pub fn coordinate(&self, k: usize) -> f64 {
        let steps = (self.resolution - 1) as f64;
        (2.0 * k as f64 - steps) / steps
    }

    /// Writes the point with linear index `index` into `out` (first axis varies slowest).
    pub fn point_into(&self, mut index: usize, out: &mut [f64]) {
        for slot in out.iter_mut().rev() {
            *slot = self.coordinate(index % self.resolution);
            index /= self.resolution;
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len).map(move |i| {
            let mut x = vec![0.0; self.n];
            self.point_into(i, &mut x);
            x
        })
    }
}
