use crate::error::{Error, Result};
use crate::quad;

/// Uniform sampling t_i = t0 + i·dt, i < len.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0) || len < 2 {
            return Err(Error::InvalidSpec(format!(
                "time grid needs dt > 0 and at least two samples (dt = {dt}, len = {len})"
            )));
        }
        Ok(Self { t0, dt, len })
    }

    /// Samples covering [t0, t1] with spacing as close to `dt` as possible from below.
    pub fn spanning(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::InvalidSpec(format!("empty time interval [{t0}, {t1}]")));
        }
        let n = ((t1 - t0) / dt).ceil().max(1.0) as usize;
        Self::new(t0, (t1 - t0) / n as f64, n + 1)
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.t(i)).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len - 1)
    }
}

/// Uniformly sampled quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T = f64> {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<T>,
}

impl<T: Copy> TimeSeries<T> {
    pub fn new(t0: f64, dt: f64, values: Vec<T>) -> Result<Self> {
        TimeGrid::new(t0, dt, values.len())?;
        Ok(Self { t0, dt, values })
    }

    pub fn from_grid(grid: &TimeGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::InvalidSpec(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len
            )));
        }
        Self::new(grid.t0, grid.dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid { t0: self.t0, dt: self.dt, len: self.len() }
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len() - 1)
    }

    pub fn last(&self) -> T {
        self.values[self.len() - 1]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> TimeSeries<U> {
        TimeSeries { t0: self.t0, dt: self.dt, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

impl TimeSeries<f64> {
    /// Composite Simpson integral over the whole series.
    pub fn integral(&self) -> f64 {
        quad::simpson_samples(&self.values, self.dt)
    }

    /// Integral over the samples with index in [i0, i1].
    pub fn integral_between(&self, i0: usize, i1: usize) -> f64 {
        if i1 <= i0 {
            return 0.0;
        }
        quad::simpson_samples(&self.values[i0..=i1], self.dt)
    }

    /// Running trapezoid integral ∫_{t0}^{t_i}.
    pub fn cumulative(&self) -> TimeSeries<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * self.dt;
            out.push(acc);
        }
        TimeSeries { t0: self.t0, dt: self.dt, values: out }
    }

    /// Linear interpolation; clamps outside the sampled range.
    pub fn value_at(&self, t: f64) -> f64 {
        let f = (t - self.t0) / self.dt;
        if f <= 0.0 {
            return self.values[0];
        }
        let i = f.floor() as usize;
        if i + 1 >= self.len() {
            return self.last();
        }
        let w = f - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn l1_norm(&self) -> f64 {
        quad::simpson_samples(&self.values.iter().map(|v| v.abs()).collect::<Vec<_>>(), self.dt)
    }

    /// ∫|a − b| dt for series on the same sampling.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_sampling(other)?;
        let d: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).collect();
        Ok(quad::simpson_samples(&d, self.dt))
    }

    pub fn max_abs_difference(&self, other: &Self) -> Result<f64> {
        self.check_same_sampling(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and value of the largest sample.
    pub fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
    }

    fn check_same_sampling(&self, other: &Self) -> Result<()> {
        let same = self.len() == other.len()
            && (self.t0 - other.t0).abs() <= 1e-12 * self.t0.abs().max(1.0)
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt;
        if same {
            Ok(())
        } else {
            Err(Error::GridMismatch("time series sampled differently".into()))
        }
    }
}
