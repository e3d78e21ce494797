//! Uniform time grids shared by every sampled quantity.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform grid on `[t0, t_f]` with `steps` intervals (`steps + 1` points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t0: T,
    t_f: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, t_f: T, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t_f.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if t0 >= t_f {
            return Err(Error::InvalidGrid(format!("t0 = {t0} must be below t_f = {t_f}")));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("steps = {steps}, need at least 2")));
        }
        Ok(Self { t0, t_f, steps })
    }

    /// Window `[-half_width, half_width]`.
    pub fn symmetric(half_width: T, steps: usize) -> Result<Self> {
        Self::new(-half_width, half_width, steps)
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn t_f(&self) -> T {
        self.t_f
    }

    /// Number of intervals.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> T {
        (self.t_f - self.t0) / T::from_usize(self.steps).unwrap()
    }

    pub fn time(&self, k: usize) -> T {
        if k == self.steps {
            return self.t_f;
        }
        self.t0 + self.step() * T::from_usize(k).unwrap()
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Index of the grid point closest to `t` (clamped to the window).
    pub fn nearest_index(&self, t: T) -> usize {
        let x = ((t - self.t0) / self.step()).round();
        if x <= T::zero() {
            0
        } else {
            x.to_usize().unwrap_or(self.steps).min(self.steps)
        }
    }

    /// Grid with half as many intervals; shares every other point with `self`.
    pub fn coarsened(&self) -> Result<Self> {
        if self.steps % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "steps = {} must be even to coarsen",
                self.steps
            )));
        }
        Self::new(self.t0, self.t_f, self.steps / 2)
    }

    pub fn refined(&self) -> Self {
        Self { steps: self.steps * 2, ..*self }
    }

    pub(crate) fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!(
                "{what} has {len} samples, grid has {}",
                self.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                reason: format!("grid has {} points", self.len()),
            });
        }
        Ok(())
    }
}

/// Cumulative trapezoidal integral of uniformly spaced samples, starting at 0.
pub fn cumulative_trapezoid<T, V>(samples: &[V], step: T) -> Vec<V>
where
    T: Real,
    V: Copy + std::ops::Add<Output = V> + std::ops::Mul<T, Output = V> + num_traits::Zero,
{
    let half = step * T::lit(0.5);
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = V::zero();
    for (k, &s) in samples.iter().enumerate() {
        if k > 0 {
            acc = acc + (samples[k - 1] + s) * half;
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_spacing() {
        let g = TimeGrid::<f64>::symmetric(1.0, 4000).unwrap();
        assert_eq!(g.len(), 4001);
        assert_eq!(g.time(0), -1.0);
        assert_eq!(g.time(4000), 1.0);
        assert!((g.time(2000)).abs() < 1e-15);
        assert!((g.step() - 5e-4).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn coarsening_shares_points() {
        let g = TimeGrid::<f64>::new(0.0, 2.0, 10).unwrap();
        let c = g.coarsened().unwrap();
        for k in 0..c.len() {
            assert!((c.time(k) - g.time(2 * k)).abs() < 1e-15);
        }
        assert!(TimeGrid::new(0.0, 1.0, 7).unwrap().coarsened().is_err());
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = TimeGrid::new(0.0, 1.0, 8).unwrap();
        let ys: Vec<f64> = g.times().map(|t| 3.0 * t + 1.0).collect();
        let cum = cumulative_trapezoid(&ys, g.step());
        assert_eq!(cum[0], 0.0);
        assert!((cum[8] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn nearest_index_clamps() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        assert_eq!(g.nearest_index(-5.0), 0);
        assert_eq!(g.nearest_index(0.26), 3);
        assert_eq!(g.nearest_index(9.0), 10);
    }
}
