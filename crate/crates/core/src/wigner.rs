//! Phase-space checks: the discrete Wigner transform, the Gaussian Wigner
//! function, the θ-function kernels, the decoherence integrals d_m² and
//! p₁₂, and the time-averaged current p(0, T).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::packet::GaussianPacketSpec;
use crate::quad::GaussLegendre;
use crate::qdyn::current_series;
use crate::series::{TimeGrid, TimeSeries};
use crate::spectral;
use crate::wavefunction::WaveFunction;

pub use crate::special::f_of_u;

/// Wigner function sampled on a (p, q) lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    /// Row-major in p: w[ip · len(q_grid) + iq].
    pub w: Vec<f64>,
    pub time: f64,
    /// Largest |Im W| discarded by the transform.
    pub imag_residue: f64,
}

impl WignerGrid {
    pub fn at(&self, ip: usize, iq: usize) -> f64 {
        self.w[ip * self.q_grid.len() + iq]
    }

    fn dp(&self) -> f64 {
        step(&self.p_grid)
    }

    fn dq(&self) -> f64 {
        step(&self.q_grid)
    }

    /// ∫W dp at every q of the lattice.
    pub fn position_marginal(&self) -> Vec<f64> {
        let nq = self.q_grid.len();
        let dp = self.dp();
        (0..nq)
            .map(|iq| (0..self.p_grid.len()).map(|ip| self.at(ip, iq)).sum::<f64>() * dp)
            .collect()
    }

    /// ∫W dq at every p of the lattice.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let nq = self.q_grid.len();
        let dq = self.dq();
        self.w.chunks(nq).map(|row| row.iter().sum::<f64>() * dq).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// ∬ W dp dq over the lattice.
    pub fn total(&self) -> f64 {
        self.w.iter().sum::<f64>() * self.dp() * self.dq()
    }
}

fn step(v: &[f64]) -> f64 {
    if v.len() > 1 {
        v[1] - v[0]
    } else {
        1.0
    }
}

/// Lattice selection for [`wigner_transform_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerOptions {
    /// q range; `None` keeps the region where |ψ|² exceeds `cutoff`·max.
    pub q_window: Option<(f64, f64)>,
    /// p range; `None` keeps the region where |ψ̃|² exceeds `cutoff`·max.
    pub p_window: Option<(f64, f64)>,
    /// Keep every `q_stride`-th point of the doubled position lattice.
    pub q_stride: usize,
    pub cutoff: f64,
}

impl Default for WignerOptions {
    fn default() -> Self {
        Self { q_window: None, p_window: None, q_stride: 1, cutoff: 1e-16 }
    }
}

/// Band-limited interpolation onto a lattice of half the spacing.
fn refine_twice(psi: &[Complex64]) -> Vec<Complex64> {
    let n = psi.len();
    let mut spec = psi.to_vec();
    spectral::fft(&mut spec);
    let mut wide = vec![Complex64::new(0.0, 0.0); 2 * n];
    let half = n / 2;
    wide[..half].copy_from_slice(&spec[..half]);
    wide[n + half + 1..].copy_from_slice(&spec[half + 1..]);
    wide[half] = 0.5 * spec[half];
    wide[2 * n - half] = 0.5 * spec[half];
    spectral::ifft(&mut wide);
    wide.iter_mut().for_each(|z| *z *= 2.0);
    wide
}

fn support(values: &[f64], cutoff: f64) -> (usize, usize) {
    let max = values.iter().copied().fold(0.0, f64::max);
    let lo = values.iter().position(|&v| v > cutoff * max).unwrap_or(0);
    let hi = values.iter().rposition(|&v| v > cutoff * max).unwrap_or(values.len() - 1);
    (lo, hi)
}

/// W(p,q) = (1/2π)∫dξ e^{−ipξ} ψ(q+ξ/2)ψ*(q−ξ/2) with automatic windows.
pub fn wigner_transform(psi: &WaveFunction) -> WignerGrid {
    wigner_transform_with(psi, &WignerOptions::default())
}

/// The transform is evaluated on the doubled position lattice (spacing
/// dx/2, so that ξ steps by dx) at the sorted momenta of the grid.
pub fn wigner_transform_with(psi: &WaveFunction, opts: &WignerOptions) -> WignerGrid {
    let grid = *psi.grid();
    let n = grid.len();
    let dx = grid.dx();
    let h = 0.5 * dx;
    let fine = refine_twice(&psi.position_amplitudes());
    let nf = fine.len();

    let (q_lo, q_hi) = match opts.q_window {
        Some((a, b)) => (
            ((a - grid.x_min()) / h).ceil().max(0.0) as usize,
            (((b - grid.x_min()) / h).floor() as usize).min(nf - 1),
        ),
        None => support(&fine.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(), opts.cutoff),
    };
    let momenta = grid.momenta();
    let (p_lo, p_hi) = match opts.p_window {
        Some((a, b)) => {
            let lo = momenta.iter().position(|&p| p >= a).unwrap_or(0);
            let hi = momenta.iter().rposition(|&p| p <= b).unwrap_or(n - 1);
            (lo, hi)
        }
        None => {
            let (_, dens) = psi.momentum_density();
            support(&dens, opts.cutoff)
        }
    };
    let stride = opts.q_stride.max(1);
    let q_idx: Vec<usize> = (q_lo..=q_hi).step_by(stride).collect();
    let p_grid: Vec<f64> = momenta[p_lo..=p_hi].to_vec();
    let q_grid: Vec<f64> = q_idx.iter().map(|&j| grid.x_min() + j as f64 * h).collect();
    let nq = q_grid.len();
    let mut w = vec![0.0; p_grid.len() * nq];
    let mut imag_residue = 0.0f64;
    let scale = dx / (2.0 * PI);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (iq, &j) in q_idx.iter().enumerate() {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let kmax = j.min(nf - 1 - j);
        // Separations k and k + n share e^{−ip k dx} on the momentum grid,
        // so they are folded before a length-n transform.
        for k in 0..=kmax {
            let c = fine[j + k] * fine[j - k].conj();
            buf[k % n] += c;
            if k > 0 {
                buf[(n - k % n) % n] += c.conj();
            }
        }
        spectral::fft(&mut buf);
        for (ip, m) in (p_lo..=p_hi).enumerate() {
            let v = buf[fft_index(m, n)] * scale;
            imag_residue = imag_residue.max(v.im.abs());
            w[ip * nq + iq] = v.re;
        }
    }
    WignerGrid { p_grid, q_grid, w, time: psi.time(), imag_residue }
}

/// FFT bin holding the sorted momentum index `m`.
fn fft_index(m: usize, n: usize) -> usize {
    (m + n - n / 2) % n
}

/// The Gaussian-packet Wigner function in the form
/// (1/π)exp(−(q − q₀ − p₀t/m)²/2σ² − 2σ²(p − p₀)²), which streams only the
/// centre and keeps the initial width.
pub fn gaussian_wigner(spec: &GaussianPacketSpec, t: f64, p: f64, q: f64) -> f64 {
    let s2 = spec.sigma * spec.sigma;
    let dq = q - spec.q0 - spec.p0 * t / spec.mass;
    let dp = p - spec.p0;
    (-(dq * dq) / (2.0 * s2) - 2.0 * s2 * dp * dp).exp() / PI
}

/// Exact free evolution of the packet's Wigner function, W(p, q − pt/m, 0).
pub fn gaussian_wigner_streamed(spec: &GaussianPacketSpec, t: f64, p: f64, q: f64) -> f64 {
    gaussian_wigner(spec, 0.0, p, q - p * t / spec.mass)
}

/// θ(q) with the half weight at q = 0.
fn step_weight(q: f64) -> f64 {
    if q > 0.0 {
        1.0
    } else if q == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// u(p,q) = 2q(p + mq/Δt).
pub fn kernel_argument(p: f64, q: f64, delta_t: f64, mass: f64) -> f64 {
    2.0 * q * (p + mass * q / delta_t)
}

/// (W_P, W_D) = (1/2π²)(θ(q), θ(−q)) f(u(p,q)).
pub fn theta_kernels(p: f64, q: f64, delta_t: f64, mass: f64) -> Result<(f64, f64)> {
    if !(delta_t > 0.0) {
        return Err(Error::InvalidSpec(format!("kernel needs t2 − t1 > 0, got {delta_t}")));
    }
    let f = f_of_u(kernel_argument(p, q, delta_t, mass)) / (2.0 * PI * PI);
    Ok((step_weight(q) * f, step_weight(-q) * f))
}

/// Which Gaussian Wigner function enters the phase-space integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WignerForm {
    /// Centre streamed, width frozen.
    CentreStreamed,
    /// Exact free streaming of the whole distribution.
    Streamed,
}

fn w0(spec: &GaussianPacketSpec, form: WignerForm, t: f64, p: f64, q: f64) -> f64 {
    match form {
        WignerForm::CentreStreamed => gaussian_wigner(spec, t, p, q),
        WignerForm::Streamed => gaussian_wigner_streamed(spec, t, p, q),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

/// |u| beyond which f(u) is replaced by its limit, 0 or π. The dropped
/// cos(u)/u tail integrates to O(1/u²) against a smooth weight.
const U_CAP: f64 = 2.0e3;

fn f_capped(u: f64) -> f64 {
    if u > U_CAP {
        0.0
    } else if u < -U_CAP {
        PI
    } else {
        f_of_u(u)
    }
}

/// ∫_a^b g(q) f(u(p,q)) dq by marching panels. Panels stay within a quarter
/// oscillation of f and below (1/|p|)/8 wherever |u| ≤ U_CAP, and within
/// width/8 elsewhere.
#[allow(clippy::too_many_arguments)]
fn oscillatory(
    gl: &GaussLegendre,
    a: f64,
    b: f64,
    p: f64,
    delta_t: f64,
    mass: f64,
    width: f64,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let u = |q: f64| kernel_argument(p, q, delta_t, mass);
    let slope = |q: f64| (2.0 * p + 4.0 * mass * q / delta_t).abs();
    let vertex = -p * delta_t / (2.0 * mass);
    let coarse = width / 8.0;
    let mut q = a;
    let mut sum = 0.0;
    while q < b {
        let mut h = coarse.min(b - q);
        let (ua, ub) = (u(q), u(q + h));
        let saturated = ua.abs() > U_CAP
            && ub.abs() > U_CAP
            && ua.signum() == ub.signum()
            && !(q < vertex && vertex < q + h);
        if !saturated {
            let s = slope(q).max(slope(q + h));
            h = h.min(0.5 * PI / s).min(0.125 / p.abs().max(1e-12));
        }
        let hi = if b - (q + h) < 1e-12 * width { b } else { q + h };
        sum += gl.integrate(q, hi, |x| weight(x) * f_capped(u(x)));
        q = hi;
    }
    sum
}

/// ∫dq over one half-line of g(q) f(u(p,q)) with the given Gaussian weight.
#[allow(clippy::too_many_arguments)]
fn half_line(
    gl: &GaussLegendre,
    side: Side,
    p: f64,
    delta_t: f64,
    mass: f64,
    centre: f64,
    width: f64,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let (lo, hi) = (centre - 10.0 * width, centre + 10.0 * width);
    let (a, b) = match side {
        Side::Right => (lo.max(0.0), hi.max(0.0)),
        Side::Left => (lo.min(0.0), hi.min(0.0)),
    };
    if b <= a {
        return 0.0;
    }
    oscillatory(gl, a, b, p, delta_t, mass, width, weight)
}

fn check_packet(spec: &GaussianPacketSpec, t1: f64, t2: f64) -> Result<()> {
    spec.validate()?;
    if !(t2 > t1) {
        return Err(Error::InvalidSpec(format!("need t2 > t1, got t1 = {t1}, t2 = {t2}")));
    }
    Ok(())
}

fn phase_space_integral(spec: &GaussianPacketSpec, t1: f64, t2: f64, form: WignerForm, side: Side) -> Result<f64> {
    check_packet(spec, t1, t2)?;
    let dt = t2 - t1;
    let m = spec.mass;
    let sp = 1.0 / (2.0 * spec.sigma);
    let (p_lo, p_hi) = (spec.p0 - 9.0 * sp, spec.p0 + 9.0 * sp);
    let centre = spec.q0 + spec.p0 * t1 / m;
    let width = match form {
        WignerForm::CentreStreamed => spec.sigma,
        WignerForm::Streamed => spec.width_at(t1),
    };
    let gl = GaussLegendre::new(12);
    let inner = GaussLegendre::new(8);
    let val = gl.composite(p_lo, p_hi, 24, |p| {
        half_line(&inner, side, p, dt, m, centre, width, |q| w0(spec, form, t1, p, q))
    });
    Ok(2.0 * PI * val / (2.0 * PI * PI))
}

/// d_m² = 2π∬ W_D W₀(t₁) by two-dimensional quadrature.
pub fn dm_squared_phase_space(spec: &GaussianPacketSpec, t1: f64, t2: f64, form: WignerForm) -> Result<f64> {
    phase_space_integral(spec, t1, t2, form, Side::Left)
}

/// p₁₂ = 2π∬ W_P W₀(t₁) by two-dimensional quadrature.
pub fn p12_phase_space(spec: &GaussianPacketSpec, t1: f64, t2: f64, form: WignerForm) -> Result<f64> {
    phase_space_integral(spec, t1, t2, form, Side::Right)
}

/// Largest |q₀ + p₀t₁/m|/σ accepted as a centred packet.
pub const CENTRING_TOLERANCE: f64 = 0.1;
/// Smallest |p₀|σ accepted as a broad packet.
pub const MIN_BROADNESS: f64 = 5.0;
/// Smallest E₀Δt accepted.
pub const MIN_ENERGY_TIME: f64 = 5.0;

fn check_regime(spec: &GaussianPacketSpec, t1: f64, t2: f64) -> Result<()> {
    check_packet(spec, t1, t2)?;
    let centring = (spec.q0 + spec.p0 * t1 / spec.mass).abs() / spec.sigma;
    if centring > CENTRING_TOLERANCE {
        return Err(Error::Regime(format!(
            "packet centre is {centring:.3}σ from the origin at t1 (limit {CENTRING_TOLERANCE})"
        )));
    }
    let broad = spec.p0.abs() * spec.sigma;
    if broad < MIN_BROADNESS {
        return Err(Error::Regime(format!("|p0|σ = {broad:.3} is below {MIN_BROADNESS}")));
    }
    let et = spec.energy() * (t2 - t1);
    if et < MIN_ENERGY_TIME {
        return Err(Error::Regime(format!("E0Δt = {et:.3} is below {MIN_ENERGY_TIME}")));
    }
    Ok(())
}

/// (2π³σ²)^{−1/2}∫ dq e^{−q²/2σ²} f(u(p₀,q)) over one half-line.
fn collapsed(spec: &GaussianPacketSpec, t1: f64, t2: f64, side: Side) -> f64 {
    let s = spec.sigma;
    let gl = GaussLegendre::new(8);
    let v = half_line(&gl, side, spec.p0, t2 - t1, spec.mass, 0.0, 1.2 * s, |q| (-q * q / (2.0 * s * s)).exp());
    v / (2.0 * PI.powi(3) * s * s).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmSquared {
    /// The q-integral with p set to p₀.
    pub numeric: f64,
    /// The full two-dimensional integral with the centre-streamed W₀.
    pub full: f64,
    /// (2π³)^{−1/2}/(|p₀|σ).
    pub asymptotic: f64,
}

pub fn dm_squared_asymptotic(spec: &GaussianPacketSpec, t1: f64, t2: f64) -> Result<DmSquared> {
    check_regime(spec, t1, t2)?;
    Ok(DmSquared {
        numeric: collapsed(spec, t1, t2, Side::Left),
        full: dm_squared_phase_space(spec, t1, t2, WignerForm::CentreStreamed)?,
        asymptotic: 1.0 / ((2.0 * PI.powi(3)).sqrt() * spec.p0.abs() * spec.sigma),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum P12Regime {
    /// q_z ≫ σ: the interval is long against the Zeno time.
    LongInterval,
    /// q_z ≪ σ.
    ShortInterval,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P12 {
    /// The q-integral with p set to p₀.
    pub numeric: f64,
    /// ∫₀^{q_z} part of `numeric`.
    pub first_term: f64,
    /// ∫_{q_z}^∞ part of `numeric`.
    pub second_term: f64,
    pub full: f64,
    pub q_z: f64,
    pub regime: P12Regime,
}

/// Ratio q_z/σ beyond which an interval counts as long (and below whose
/// inverse it counts as short).
pub const REGIME_RATIO: f64 = 3.0;

pub fn p12_regimes(spec: &GaussianPacketSpec, t1: f64, t2: f64) -> Result<P12> {
    check_regime(spec, t1, t2)?;
    let s = spec.sigma;
    let dt = t2 - t1;
    let q_z = spec.p0.abs() * dt / spec.mass;
    let norm = 1.0 / (2.0 * PI.powi(3) * s * s).sqrt();
    let gl = GaussLegendre::new(8);
    let g = |q: f64| (-q * q / (2.0 * s * s)).exp();
    let extent = 12.0 * s;
    let split = q_z.min(extent);
    let first = oscillatory(&gl, 0.0, split, spec.p0, dt, spec.mass, s, g) * norm;
    let second = if split < extent {
        oscillatory(&gl, split, extent, spec.p0, dt, spec.mass, s, g) * norm
    } else {
        0.0
    };
    let ratio = q_z / s;
    let regime = if ratio >= REGIME_RATIO {
        P12Regime::LongInterval
    } else if ratio <= 1.0 / REGIME_RATIO {
        P12Regime::ShortInterval
    } else {
        P12Regime::Intermediate
    };
    Ok(P12 {
        numeric: first + second,
        first_term: first,
        second_term: second,
        full: p12_phase_space(spec, t1, t2, WignerForm::CentreStreamed)?,
        q_z,
        regime,
    })
}

/// p(0,T) = ∫₀^T J dt for the freely evolving state.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityScan {
    /// p(0,T) indexed by T.
    pub integrated: TimeSeries,
    /// 1/ΔH.
    pub threshold: f64,
    /// Smallest T of the scan after which p(0,T) stays non-negative.
    pub onset: Option<f64>,
}

impl PositivityScan {
    /// min p(0,T) over T ≥ `t_min`.
    pub fn min_after(&self, t_min: f64) -> f64 {
        self.integrated
            .times()
            .iter()
            .zip(&self.integrated.values)
            .filter(|(t, _)| **t >= t_min)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Integrates J from the state's own time over the offsets of `t_grid`,
/// which must start at T = 0.
pub fn positivity_timescale(psi0: &WaveFunction, t_grid: &TimeGrid) -> Result<PositivityScan> {
    if t_grid.t0 != 0.0 {
        return Err(Error::InvalidSpec("the T grid must start at 0".into()));
    }
    let shifted = TimeGrid::new(psi0.time(), t_grid.dt, t_grid.len)?;
    let j = current_series(psi0, &shifted);
    let mut integrated = j.cumulative();
    integrated.t0 = 0.0;
    integrated.values[0] = 0.0;
    let mut onset = None;
    for (i, &v) in integrated.values.iter().enumerate().rev() {
        if v < 0.0 {
            break;
        }
        onset = Some(integrated.t(i));
    }
    Ok(PositivityScan { integrated, threshold: 1.0 / psi0.energy_spread(), onset })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_keeps_original_samples() {
        let psi: Vec<Complex64> = (0..64)
            .map(|i| {
                let x = (i as f64 - 32.0) * 0.25;
                Complex64::new((-x * x / 4.0).exp(), 0.3 * x * (-x * x / 4.0).exp())
            })
            .collect();
        let fine = refine_twice(&psi);
        for (i, z) in psi.iter().enumerate() {
            assert!((fine[2 * i] - z).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_supports_are_disjoint() {
        let (p, d) = theta_kernels(-2.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p, d);
        assert!((p - 0.5 * std::f64::consts::FRAC_PI_2 / (2.0 * PI * PI)).abs() < 1e-15);
        let (p, d) = theta_kernels(-2.0, 0.3, 1.0, 1.0).unwrap();
        assert_eq!(p * d, 0.0);
        assert!(theta_kernels(-2.0, 0.3, 0.0, 1.0).is_err());
    }
}
