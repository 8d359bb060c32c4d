//! Quadrature rules.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

/// Composite Simpson over uniformly spaced samples; an odd interval count is
/// closed with the 3/8 rule, a single interval with the trapezoid.
pub fn simpson_samples<T>(y: &[T], h: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    let n = y.len();
    if n < 2 {
        return T::default();
    }
    let intervals = n - 1;
    if intervals == 1 {
        return (y[0] + y[1]) * (0.5 * h);
    }
    let (even_end, tail) = if intervals.is_multiple_of(2) { (intervals, false) } else { (intervals - 3, true) };
    let mut acc = T::default();
    let mut i = 0;
    while i + 2 <= even_end {
        acc = acc + (y[i] + y[i + 1] * 4.0 + y[i + 2]) * (h / 3.0);
        i += 2;
    }
    if tail {
        let j = even_end;
        acc = acc + (y[j] + y[j + 1] * 3.0 + y[j + 2] * 3.0 + y[j + 3]) * (3.0 * h / 8.0);
    }
    acc
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<T>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
    {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(c + h * x) * (w * h);
        }
        acc
    }

    /// Sum of the rule over `panels` equal panels of [a, b].
    pub fn composite<T>(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> T) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
    {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = T::default();
        for k in 0..panels {
            let lo = a + k as f64 * h;
            acc = acc + self.integrate(lo, lo + h, &mut f);
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Extrapolates a(h) → a(0) from samples at h, h/r, h/r², … assuming an
/// error expansion in integer powers of h (Neville table).
pub fn richardson<T>(samples: &[T], ratio: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let mut table = samples.to_vec();
    let n = table.len();
    for level in 1..n {
        let f = ratio.powi(level as i32);
        for i in (level..n).rev() {
            table[i] = table[i] * (f / (f - 1.0)) + table[i - 1] * (-1.0 / (f - 1.0));
        }
    }
    table[n - 1]
}
