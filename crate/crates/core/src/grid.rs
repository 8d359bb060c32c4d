use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on `[x_min, x_max)` with its conjugate momentum grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidSpec("grid bounds must be finite".into()));
        }
        if !(x_min < 0.0 && 0.0 < x_max) {
            return Err(Error::InvalidSpec(format!(
                "grid [{x_min}, {x_max}] must contain the origin in its interior"
            )));
        }
        if n_points < 4 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "n_points = {n_points} must be even and at least 4"
            )));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.dx())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Momentum of the `k`-th sample in ascending order, spanning `[-π/dx, π/dx)`.
    pub fn p(&self, k: usize) -> f64 {
        (k as f64 - (self.n_points / 2) as f64) * self.dp()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.p(k)).collect()
    }

    /// Momenta in the native FFT output order.
    pub fn fft_momenta(&self) -> Vec<f64> {
        let n = self.n_points;
        let dp = self.dp();
        (0..n)
            .map(|k| if k < n / 2 { k as f64 * dp } else { (k as f64 - n as f64) * dp })
            .collect()
    }

    pub fn p_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Index of a grid point sitting exactly on the origin, if there is one.
    pub fn origin_index(&self) -> Option<usize> {
        let f = -self.x_min / self.dx();
        let i = f.round();
        ((f - i).abs() < 1e-9 * f.max(1.0)).then_some(i as usize)
    }

    /// Grid weights of θ(-x): 1 for x < 0, 1/2 on an exact origin point, 0 for x > 0.
    pub fn theta_left(&self) -> Vec<f64> {
        let origin = self.origin_index();
        (0..self.n_points)
            .map(|i| {
                if Some(i) == origin {
                    0.5
                } else if self.x(i) < 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Complementary weights θ(x) = 1 - θ(-x).
    pub fn theta_right(&self) -> Vec<f64> {
        self.theta_left().into_iter().map(|w| 1.0 - w).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x < self.x_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_origin_outside() {
        assert!(Grid1D::new(1.0, 5.0, 64).is_err());
        assert!(Grid1D::new(-5.0, 0.0, 64).is_err());
        assert!(Grid1D::new(-5.0, 5.0, 63).is_err());
    }

    #[test]
    fn spacing_and_momentum_span() {
        let g = Grid1D::new(-50.0, 50.0, 4096).unwrap();
        assert!((g.dx() - 100.0 / 4096.0).abs() < 1e-15);
        assert!((g.dp() - 2.0 * PI / 100.0).abs() < 1e-15);
        let p = g.momenta();
        assert!((p[0] + PI / g.dx()).abs() < 1e-9);
        assert!(p[4095] < PI / g.dx());
        assert_eq!(p[2048], 0.0);
    }

    #[test]
    fn theta_half_weight_at_origin() {
        let g = Grid1D::new(-50.0, 50.0, 4096).unwrap();
        let i0 = g.origin_index().unwrap();
        assert_eq!(i0, 2048);
        let th = g.theta_left();
        assert_eq!(th[i0], 0.5);
        assert_eq!(th[i0 - 1], 1.0);
        assert_eq!(th[i0 + 1], 0.0);

        let g = Grid1D::new(-50.3, 50.0, 4096).unwrap();
        assert!(g.origin_index().is_none());
        assert!(g.theta_left().iter().all(|&w| w == 0.0 || w == 1.0));
    }

    #[test]
    fn fft_order_is_a_rotation_of_sorted_order() {
        let g = Grid1D::new(-10.0, 10.0, 16).unwrap();
        let sorted = g.momenta();
        let fft = g.fft_momenta();
        for k in 0..16 {
            assert!((fft[k] - sorted[(k + 8) % 16]).abs() < 1e-12);
        }
    }
}
