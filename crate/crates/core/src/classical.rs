//! Classical arrival with an absorbing region q < 0: exact Liouville
//! solution, Π(τ) by two routes and the coarse-grained crossing probability.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qdyn::convolve_resolution;
use crate::quad::GaussLegendre;
use crate::series::{TimeGrid, TimeSeries};

/// Tolerance on the agreement of the two Π(τ) routes.
pub const ARRIVAL_CONSISTENCY_TOL: f64 = 1e-4;

/// Axis-aligned box outside which a density is negligible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub p_lo: f64,
    pub p_hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
}

/// Initial phase-space density w₀(p, q).
pub trait PhaseSpaceDensity {
    fn density(&self, p: f64, q: f64) -> f64;
    fn mass(&self) -> f64;
    fn support(&self) -> Support;
    /// Length scale of structure in q, used to size quadrature panels.
    fn q_scale(&self) -> f64 {
        let s = self.support();
        (s.q_hi - s.q_lo) / 20.0
    }
    fn p_scale(&self) -> f64 {
        let s = self.support();
        (s.p_hi - s.p_lo) / 20.0
    }
}

/// Product Gaussian in (q, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPacketSpec {
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
    pub sigma_p: f64,
    pub mass: f64,
}

impl ClassicalPacketSpec {
    pub fn new(q0: f64, p0: f64, sigma_q: f64, sigma_p: f64) -> Result<Self> {
        let s = Self { q0, p0, sigma_q, sigma_p, mass: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        self.mass = mass;
        self.validate()?;
        Ok(self)
    }

    /// Phase-space counterpart of a quantum Gaussian: σ_p = 1/(2σ).
    pub fn from_quantum(spec: &crate::packet::GaussianPacketSpec) -> Result<Self> {
        Self::new(spec.q0, spec.p0, spec.sigma, 1.0 / (2.0 * spec.sigma))?.with_mass(spec.mass)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.q0 > 0.0) {
            problems.push(format!("q0 = {} must be positive", self.q0));
        }
        if !(self.p0 < 0.0) {
            problems.push(format!("p0 = {} must be negative", self.p0));
        }
        if !(self.sigma_q > 0.0 && self.sigma_p > 0.0) {
            problems.push("widths must be positive".to_string());
        }
        if !(self.mass > 0.0) {
            problems.push(format!("mass = {} must be positive", self.mass));
        }
        if problems.is_empty() && self.positive_momentum_weight() >= 1e-8 {
            problems.push(format!(
                "positive-momentum weight {:.2e} is not below 1e-8",
                self.positive_momentum_weight()
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(problems.join("; ")))
        }
    }

    /// Upper bound on ∫_{p>0} of the momentum marginal (Mills ratio).
    pub fn positive_momentum_weight(&self) -> f64 {
        let a = self.p0.abs() / self.sigma_p;
        (-0.5 * a * a).exp() / (a * (2.0 * PI).sqrt())
    }

    pub fn arrival_time(&self) -> f64 {
        self.mass * self.q0 / self.p0.abs()
    }

    /// Samples the density on a grid.
    pub fn sample(&self, p_grid: &[f64], q_grid: &[f64]) -> PhaseSpaceDistribution {
        PhaseSpaceDistribution::from_density(self, p_grid, q_grid, 0.0)
    }
}

impl PhaseSpaceDensity for ClassicalPacketSpec {
    fn density(&self, p: f64, q: f64) -> f64 {
        let zq = (q - self.q0) / self.sigma_q;
        let zp = (p - self.p0) / self.sigma_p;
        (-0.5 * (zq * zq + zp * zp)).exp() / (2.0 * PI * self.sigma_q * self.sigma_p)
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn support(&self) -> Support {
        let k = 9.0;
        Support {
            p_lo: self.p0 - k * self.sigma_p,
            p_hi: (self.p0 + k * self.sigma_p).min(0.0),
            q_lo: self.q0 - k * self.sigma_q,
            q_hi: self.q0 + k * self.sigma_q,
        }
    }

    fn q_scale(&self) -> f64 {
        self.sigma_q
    }

    fn p_scale(&self) -> f64 {
        self.sigma_p
    }
}

/// Density sampled on a rectangular grid; `w[ip * q_grid.len() + iq]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceDistribution {
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub w: Vec<f64>,
    pub time: f64,
    pub mass: f64,
}

impl PhaseSpaceDistribution {
    pub fn from_density<D: PhaseSpaceDensity + ?Sized>(d: &D, p_grid: &[f64], q_grid: &[f64], time: f64) -> Self {
        let mut w = Vec::with_capacity(p_grid.len() * q_grid.len());
        for &p in p_grid {
            for &q in q_grid {
                w.push(d.density(p, q));
            }
        }
        Self { p_grid: p_grid.to_vec(), q_grid: q_grid.to_vec(), w, time, mass: d.mass() }
    }

    pub fn at(&self, ip: usize, iq: usize) -> f64 {
        self.w[ip * self.q_grid.len() + iq]
    }

    /// ∬ w dp dq by the trapezoid rule on the grid.
    pub fn total_mass(&self) -> f64 {
        self.integrate(|_, _| true)
    }

    /// ∬_{q<0} w dp dq, half weight on a q = 0 node.
    pub fn mass_left(&self) -> f64 {
        let mut acc = 0.0;
        let wq = trapezoid_weights(&self.q_grid);
        let wp = trapezoid_weights(&self.p_grid);
        for (ip, wpi) in wp.iter().enumerate() {
            for (iq, wqi) in wq.iter().enumerate() {
                let q = self.q_grid[iq];
                let th = if q < 0.0 { 1.0 } else if q == 0.0 { 0.5 } else { 0.0 };
                acc += th * wpi * wqi * self.at(ip, iq);
            }
        }
        acc
    }

    fn integrate(&self, keep: impl Fn(f64, f64) -> bool) -> f64 {
        let wq = trapezoid_weights(&self.q_grid);
        let wp = trapezoid_weights(&self.p_grid);
        let mut acc = 0.0;
        for (ip, wpi) in wp.iter().enumerate() {
            for (iq, wqi) in wq.iter().enumerate() {
                if keep(self.p_grid[ip], self.q_grid[iq]) {
                    acc += wpi * wqi * self.at(ip, iq);
                }
            }
        }
        acc
    }

    pub fn min_value(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl PhaseSpaceDensity for PhaseSpaceDistribution {
    /// Bilinear interpolation, zero outside the grid.
    fn density(&self, p: f64, q: f64) -> f64 {
        let (Some((ip, fp)), Some((iq, fq))) = (locate(&self.p_grid, p), locate(&self.q_grid, q)) else {
            return 0.0;
        };
        let w00 = self.at(ip, iq);
        let w01 = self.at(ip, iq + 1);
        let w10 = self.at(ip + 1, iq);
        let w11 = self.at(ip + 1, iq + 1);
        (1.0 - fp) * ((1.0 - fq) * w00 + fq * w01) + fp * ((1.0 - fq) * w10 + fq * w11)
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn support(&self) -> Support {
        Support {
            p_lo: self.p_grid[0],
            p_hi: *self.p_grid.last().unwrap(),
            q_lo: self.q_grid[0],
            q_hi: *self.q_grid.last().unwrap(),
        }
    }

    fn q_scale(&self) -> f64 {
        2.0 * (self.q_grid[1] - self.q_grid[0]).abs()
    }

    fn p_scale(&self) -> f64 {
        2.0 * (self.p_grid[1] - self.p_grid[0]).abs()
    }
}

fn locate(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = grid.len();
    if n < 2 || x < grid[0] || x > grid[n - 1] {
        return None;
    }
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2);
    let f = (x - grid[i]) / (grid[i + 1] - grid[i]);
    Some((i, f))
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Time spent in q′ < 0 during [0, t] by the free trajectory found at
/// (p, q) at time t.
pub fn exposure_time(p: f64, q: f64, t: f64, mass: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if p == 0.0 {
        return if q < 0.0 { t } else { 0.0 };
    }
    let q_start = q - p * t / mass;
    // q(s) = q_start + p s/m crosses zero at s*.
    let s_star = -q_start * mass / p;
    if p < 0.0 {
        (t - s_star.max(0.0)).clamp(0.0, t)
    } else {
        s_star.clamp(0.0, t)
    }
}

/// w_t(p, q) = exp(−2V0·exposure)·w₀(p, q − pt/m).
pub fn evolved_density<D: PhaseSpaceDensity + ?Sized>(w0: &D, v0: f64, t: f64, p: f64, q: f64) -> f64 {
    let m = w0.mass();
    let w = w0.density(p, q - p * t / m);
    if w == 0.0 || v0 == 0.0 {
        return w;
    }
    w * (-2.0 * v0 * exposure_time(p, q, t, m)).exp()
}

/// Exact solution sampled on the grid of `w0`.
pub fn classical_evolve(w0: &PhaseSpaceDistribution, v0: f64, t: f64) -> Result<PhaseSpaceDistribution> {
    classical_evolve_density(w0, v0, t, &w0.p_grid, &w0.q_grid)
}

/// Exact solution of the absorbing Liouville equation on a chosen grid.
pub fn classical_evolve_density<D: PhaseSpaceDensity + ?Sized>(
    w0: &D,
    v0: f64,
    t: f64,
    p_grid: &[f64],
    q_grid: &[f64],
) -> Result<PhaseSpaceDistribution> {
    if t < 0.0 {
        return Err(Error::InvalidSpec(format!("t = {t} must be non-negative")));
    }
    if v0 < 0.0 {
        return Err(Error::InvalidSpec(format!("V0 = {v0} must be non-negative")));
    }
    let mut w = Vec::with_capacity(p_grid.len() * q_grid.len());
    for &p in p_grid {
        for &q in q_grid {
            w.push(evolved_density(w0, v0, t, p, q));
        }
    }
    Ok(PhaseSpaceDistribution { p_grid: p_grid.to_vec(), q_grid: q_grid.to_vec(), w, time: t, mass: w0.mass() })
}

struct Integrator {
    gl: GaussLegendre,
}

impl Integrator {
    fn new() -> Self {
        Self { gl: GaussLegendre::new(12) }
    }

    /// ∫_a^b f over panels no wider than `h`, with forced breaks.
    fn piecewise(&self, a: f64, b: f64, breaks: &[f64], h: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let mut pts = vec![a];
        pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        for w in pts.windows(2) {
            let panels = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
            acc += self.gl.composite(w[0], w[1], panels, &mut *f);
        }
        acc
    }

    /// ∫dp ∫_{q_range(p)} w_τ(p, q) dq over final-time coordinates.
    fn phase_space<D: PhaseSpaceDensity + ?Sized>(&self, w0: &D, v0: f64, tau: f64, left_only: bool) -> f64 {
        let s = w0.support();
        let m = w0.mass();
        let hq = w0.q_scale() / 2.0;
        let hp = w0.p_scale() / 2.0;
        let mut outer = |p: f64| {
            let shift = p * tau / m;
            let a = s.q_lo + shift;
            let b = if left_only { (s.q_hi + shift).min(0.0) } else { s.q_hi + shift };
            let mut inner = |q: f64| evolved_density(w0, v0, tau, p, q);
            self.piecewise(a, b, &[0.0, shift], hq, &mut inner)
        };
        self.piecewise(s.p_lo, s.p_hi, &[0.0], hp, &mut outer)
    }
}

/// N(τ) = ∬ w_τ dp dq on a time grid.
pub fn classical_survival<D: PhaseSpaceDensity + ?Sized>(w0: &D, v0: f64, times: &TimeGrid) -> Result<TimeSeries> {
    let ig = Integrator::new();
    let values = times.times().into_iter().map(|t| ig.phase_space(w0, v0, t.max(0.0), false)).collect();
    TimeSeries::from_grid(times, values)
}

/// J(t) = −∫dp (p/m) w₀(p, −pt/m).
pub fn classical_current<D: PhaseSpaceDensity + ?Sized>(w0: &D, times: &TimeGrid) -> Result<TimeSeries> {
    let ig = Integrator::new();
    let s = w0.support();
    let m = w0.mass();
    let hp = w0.p_scale() / 2.0;
    let values = times
        .times()
        .into_iter()
        .map(|t| {
            let mut f = |p: f64| -(p / m) * w0.density(p, -p * t / m);
            ig.piecewise(s.p_lo, s.p_hi, &[0.0], hp, &mut f)
        })
        .collect();
    TimeSeries::from_grid(times, values)
}

/// Classical Π(τ) by both routes.
#[derive(Debug, Clone)]
pub struct ClassicalArrival {
    /// 2V0 × mass in q < 0.
    pub absorbed_flux: TimeSeries,
    /// 2V0 ∫₀^τ e^{−2V0(τ−t)} J(t) dt.
    pub convolution: TimeSeries,
    pub max_discrepancy: f64,
}

/// Π(τ) on `times` (first sample = 0) computed two ways; ConsistencyError if
/// they differ by more than 1e−4.
pub fn classical_arrival<D: PhaseSpaceDensity + ?Sized>(w0: &D, v0: f64, times: &TimeGrid) -> Result<ClassicalArrival> {
    let ig = Integrator::new();
    let direct: Vec<f64> = times
        .times()
        .into_iter()
        .map(|t| 2.0 * v0 * ig.phase_space(w0, v0, t.max(0.0), true))
        .collect();
    let absorbed_flux = TimeSeries::from_grid(times, direct)?;
    let convolution = refined_convolution(w0, v0, times)?;
    let max_discrepancy = absorbed_flux.max_abs_difference(&convolution)?;
    if max_discrepancy > ARRIVAL_CONSISTENCY_TOL {
        return Err(Error::Consistency {
            what: "classical arrival density, absorbed flux vs convolution".into(),
            value: max_discrepancy,
            tolerance: ARRIVAL_CONSISTENCY_TOL,
        });
    }
    Ok(ClassicalArrival { absorbed_flux, convolution, max_discrepancy })
}

/// Eq. (b) evaluated with J sampled finely enough to resolve both the
/// packet's arrival spread and 1/(2V0), then read off on `times`.
fn refined_convolution<D: PhaseSpaceDensity + ?Sized>(w0: &D, v0: f64, times: &TimeGrid) -> Result<TimeSeries> {
    let s = w0.support();
    let speed = s.p_lo.abs().max(s.p_hi.abs()) / w0.mass();
    let mut h = w0.q_scale() / speed / 40.0;
    if v0 > 0.0 {
        h = h.min(1.0 / (80.0 * v0));
    }
    let sub = ((times.dt / h).ceil() as usize).max(1);
    let fine = TimeGrid::new(times.t0, times.dt / sub as f64, (times.len - 1) * sub + 1)?;
    let conv = convolve_resolution(&classical_current(w0, &fine)?, v0);
    let values = (0..times.len).map(|i| conv.values[i * sub]).collect();
    TimeSeries::from_grid(times, values)
}

/// Probability of arriving in [t1, t2]: the exact form with exponential
/// boundary terms and the coarse-grained ∫J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseProbability {
    pub exact: f64,
    pub simple: f64,
}

pub fn classical_coarse_probability<D: PhaseSpaceDensity + ?Sized>(
    w0: &D,
    v0: f64,
    t1: f64,
    t2: f64,
) -> Result<CoarseProbability> {
    if !(0.0 <= t1 && t1 <= t2) {
        return Err(Error::InvalidSpec(format!("need 0 ≤ t1 ≤ t2, got [{t1}, {t2}]")));
    }
    if t1 == t2 {
        return Ok(CoarseProbability { exact: 0.0, simple: 0.0 });
    }
    let ig = Integrator::new();
    let s = w0.support();
    let m = w0.mass();
    let hp = w0.p_scale() / 2.0;
    let current = |t: f64| {
        let mut f = |p: f64| -(p / m) * w0.density(p, -p * t / m);
        ig.piecewise(s.p_lo, s.p_hi, &[0.0], hp, &mut f)
    };
    let a = 2.0 * v0;
    // J varies on the packet's arrival spread; the kernels on 1/(2V0).
    let t_scale = (w0.q_scale() / (s.p_lo.abs().max(s.p_hi.abs()) / m)).min(if a > 0.0 { 1.0 / a } else { f64::INFINITY });
    let h = (t_scale / 2.0).max(1e-4);
    let mut first = |t: f64| ((-a * (t1 - t)).exp() - (-a * (t2 - t)).exp()) * current(t);
    let head = ig.piecewise(0.0, t1, &[], h, &mut first);
    let mut second = |t: f64| (1.0 - (-a * (t2 - t)).exp()) * current(t);
    let body = ig.piecewise(t1, t2, &[], h, &mut second);
    let mut plain = |t: f64| current(t);
    let simple = ig.piecewise(t1, t2, &[], h, &mut plain);
    Ok(CoarseProbability { exact: head + body, simple })
}
