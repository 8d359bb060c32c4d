//! Closed-form propagators, scattering amplitudes and the transmitted /
//! reflected / free decomposition of a state meeting the absorbing step.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{richardson, GaussLegendre};
use crate::spectral;
use crate::wavefunction::WaveFunction;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative size below which momentum components are dropped from
/// direct Fourier sums.
const AMPLITUDE_FLOOR: f64 = 1e-12;

/// (m/2πi)^{1/2} with √(1/i) = e^{−iπ/4}.
fn prefactor(mass: f64) -> Complex64 {
    Complex64::from_polar((mass / (2.0 * PI)).sqrt(), -PI / 4.0)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroTime(t))
    }
}

/// g_f(x₁,t|x₀,0) = (m/2πit)^{1/2} exp(im(x₁−x₀)²/2t).
pub fn free_propagator(x1: f64, x0: f64, t: f64, mass: f64) -> Result<Complex64> {
    check_time(t)?;
    let d = x1 - x0;
    Ok(prefactor(mass) / t.sqrt() * Complex64::from_polar(1.0, mass * d * d / (2.0 * t)))
}

/// Method-of-images propagator on the half-line x > 0.
pub fn restricted_propagator(x1: f64, x0: f64, t: f64, mass: f64) -> Result<Complex64> {
    check_time(t)?;
    if x1 <= 0.0 || x0 <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(free_propagator(x1, x0, t, mass)? - free_propagator(-x1, x0, t, mass)?)
}

/// ∂g_r/∂x at x = 0, i.e. 2∂g_f/∂x(0,t|x₀,0)θ(x₀).
pub fn restricted_derivative_at_origin(t: f64, x0: f64, mass: f64) -> Result<Complex64> {
    check_time(t)?;
    if x0 <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let g = free_propagator(0.0, x0, t, mass)?;
    Ok(2.0 * I * mass * (-x0) / t * g)
}

/// Propagator from the origin to itself along the edge of the step:
/// (m/2πi)^{1/2}(1 − e^{−V0 t})/(V0 t^{3/2}).
pub fn edge_propagator(t: f64, v0: f64, mass: f64) -> Result<Complex64> {
    check_time(t)?;
    if v0 < 0.0 {
        return Err(Error::InvalidSpec(format!("V0 = {v0} must be non-negative")));
    }
    Ok(prefactor(mass) * one_minus_exp_over(v0 * t) / t.sqrt())
}

/// (1 − e^{−x})/x with its series near zero.
fn one_minus_exp_over(x: f64) -> f64 {
    if x < 1e-6 {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

fn energy(p: f64, mass: f64) -> f64 {
    p * p / (2.0 * mass)
}

/// E^{−1/2}(E + iV0)^{1/2} = (1 + iV0/E)^{1/2}, principal branch.
fn root_ratio(p: f64, v0: f64, mass: f64) -> Result<Complex64> {
    if p == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    Ok(Complex64::new(1.0, v0 / energy(p, mass)).sqrt())
}

/// 2/(1 + E^{−1/2}(E + iV0)^{1/2}).
pub fn transmission_amplitude(p: f64, v0: f64, mass: f64) -> Result<Complex64> {
    Ok(2.0 / (1.0 + root_ratio(p, v0, mass)?))
}

/// (1 − E^{−1/2}(E + iV0)^{1/2})/(1 + E^{−1/2}(E + iV0)^{1/2}).
pub fn reflection_amplitude(p: f64, v0: f64, mass: f64) -> Result<Complex64> {
    let s = root_ratio(p, v0, mass)?;
    Ok((1.0 - s) / (1.0 + s))
}

/// 1/(E^{−1/2}(E + iV0)^{1/2}).
pub fn semiclassical_transmission(p: f64, v0: f64, mass: f64) -> Result<Complex64> {
    Ok(1.0 / root_ratio(p, v0, mass)?)
}

/// [2m(E + iV0)]^{1/2} with positive real part.
pub fn transmitted_wavenumber(p: f64, v0: f64, mass: f64) -> Complex64 {
    Complex64::new(p * p, 2.0 * mass * v0).sqrt()
}

/// Transmission and reflection multipliers on a momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringAmplitudes {
    pub p_grid: Vec<f64>,
    pub t_coeff: Vec<Complex64>,
    pub r_coeff: Vec<Complex64>,
    pub v0: f64,
}

impl ScatteringAmplitudes {
    /// At p = 0 the limits t = 0, r = −1 are used for V0 > 0.
    pub fn new(p_grid: &[f64], v0: f64, mass: f64) -> Result<Self> {
        if v0 < 0.0 {
            return Err(Error::InvalidSpec(format!("V0 = {v0} must be non-negative")));
        }
        let mut t_coeff = Vec::with_capacity(p_grid.len());
        let mut r_coeff = Vec::with_capacity(p_grid.len());
        for &p in p_grid {
            let t = if v0 == 0.0 {
                Complex64::new(1.0, 0.0)
            } else if p == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                transmission_amplitude(p, v0, mass)?
            };
            t_coeff.push(t);
            r_coeff.push(t - 1.0);
        }
        Ok(Self { p_grid: p_grid.to_vec(), t_coeff, r_coeff, v0 })
    }
}

/// Which transmission coefficient multiplies ψ̃(p) in the transmitted wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransmissionBranch {
    #[default]
    Exact,
    Semiclassical,
}

/// ψ(x,τ) = θ(−x)ψ_tr + θ(x)(ψ_ref + ψ_f); each part stored with its θ
/// factor applied (half weight at a grid point on the origin).
#[derive(Debug, Clone)]
pub struct StateDecomposition {
    pub psi_tr: WaveFunction,
    pub psi_ref: WaveFunction,
    pub psi_f: WaveFunction,
    pub branch: TransmissionBranch,
    pub reflection_weight: f64,
}

impl StateDecomposition {
    pub fn reconstruct(&self) -> Result<WaveFunction> {
        self.psi_tr.add(&self.psi_ref)?.add(&self.psi_f)
    }
}

/// Packet arrival time and Zeno time estimated from moments.
pub(crate) fn packet_timescales(psi: &WaveFunction) -> (f64, f64) {
    let p = psi.expectation_p().abs().max(f64::MIN_POSITIVE);
    let m = psi.mass();
    (m * psi.expectation_x() / p, m * psi.variance_x().sqrt() / p)
}

pub fn decompose_state(psi0: &WaveFunction, v0: f64, tau: f64) -> Result<StateDecomposition> {
    decompose_state_with(psi0, v0, tau, TransmissionBranch::Exact)
}

/// Decomposition at elapsed time τ from the stationary-scattering forms.
pub fn decompose_state_with(
    psi0: &WaveFunction,
    v0: f64,
    tau: f64,
    branch: TransmissionBranch,
) -> Result<StateDecomposition> {
    if v0 < 0.0 {
        return Err(Error::InvalidSpec(format!("V0 = {v0} must be non-negative")));
    }
    if tau < 0.0 {
        return Err(Error::InvalidSpec(format!("tau = {tau} must be non-negative")));
    }
    let positive = psi0.positive_momentum_weight();
    if positive > 1e-4 {
        return Err(Error::Regime(format!("positive-momentum weight {positive:.2e} exceeds 1e-4")));
    }
    let left = psi0.left_weight();
    if left > 1e-6 {
        return Err(Error::Regime(format!("initial weight in x < 0 is {left:.2e}")));
    }
    let grid = *psi0.grid();
    let mass = psi0.mass();
    let phi = spectral::fft_to_sorted(&psi0.fft_momentum_amplitudes());
    let momenta = grid.momenta();
    let dp = grid.dp();
    let peak = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut reflection_weight = 0.0;
    let mut tr_terms = Vec::new();
    let mut ref_terms = Vec::new();
    for (&p, &a) in momenta.iter().zip(&phi) {
        if p >= 0.0 || a.norm() <= AMPLITUDE_FLOOR * peak {
            continue;
        }
        let t = match branch {
            TransmissionBranch::Exact => transmission_amplitude(p, v0, mass)?,
            TransmissionBranch::Semiclassical => semiclassical_transmission(p, v0, mass)?,
        };
        let r = reflection_amplitude(p, v0, mass)?;
        reflection_weight += (r * a).norm_sqr() * dp;
        let phase = Complex64::from_polar(1.0, -energy(p, mass) * tau);
        tr_terms.push((transmitted_wavenumber(p, v0, mass), t * a * phase));
        ref_terms.push((p, r * a * phase));
    }
    let (t_a, t_z) = packet_timescales(psi0);
    if reflection_weight > 1e-3 && tau < t_a + 4.0 * t_z {
        return Err(Error::Regime(format!(
            "reflected weight {reflection_weight:.2e} with tau = {tau} before t_a + 4 t_z = {:.3}",
            t_a + 4.0 * t_z
        )));
    }

    let c = dp / (2.0 * PI).sqrt();
    let theta_l = grid.theta_left();
    let theta_r = grid.theta_right();
    let n = grid.len();
    let mut tr = vec![Complex64::new(0.0, 0.0); n];
    let mut rf = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let x = grid.x(i);
        if theta_l[i] > 0.0 {
            let s: Complex64 = tr_terms.iter().map(|(k, b)| b * (-I * x * k).exp()).sum();
            tr[i] = s * c * theta_l[i];
        }
        if theta_r[i] > 0.0 {
            let s: Complex64 = ref_terms.iter().map(|(p, b)| b * Complex64::from_polar(1.0, -p * x)).sum();
            rf[i] = s * c * theta_r[i];
        }
    }
    let mut free = psi0.fft_momentum_amplitudes();
    let phases = spectral::free_phases(&grid, mass, tau);
    free.iter_mut().zip(&phases).for_each(|(a, b)| *a *= b);
    let free = spectral::to_position(&grid, &free);
    let free: Vec<Complex64> = free.iter().zip(&theta_r).map(|(z, w)| z * w).collect();

    let time = psi0.time() + tau;
    Ok(StateDecomposition {
        psi_tr: WaveFunction::new(grid, tr, time, mass)?,
        psi_ref: WaveFunction::new(grid, rf, time, mass)?,
        psi_f: WaveFunction::new(grid, free, time, mass)?,
        branch,
        reflection_weight,
    })
}

/// ∂ₓψ_f(0, t) of the freely evolved state on a uniform grid of elapsed
/// times, with cubic interpolation in between.
struct OriginDerivative {
    dt: f64,
    values: Vec<Complex64>,
}

impl OriginDerivative {
    fn new(psi0: &WaveFunction, t_max: f64) -> Self {
        let (p, w) = psi0.momentum_density();
        let peak = w.iter().copied().fold(0.0, f64::max);
        let p_max = p
            .iter()
            .zip(&w)
            .filter(|(_, w)| **w > 1e-14 * peak)
            .map(|(p, _)| p.abs())
            .fold(0.0, f64::max);
        let e_max = energy(p_max, psi0.mass()).max(1.0);
        let dt = (0.04 / e_max).min(0.01);
        let len = ((t_max / dt).ceil() as usize + 4).max(4);
        let times = crate::series::TimeGrid { t0: psi0.time() - dt, dt, len };
        let values = crate::qdyn::origin_amplitudes(psi0, &times).into_iter().map(|(_, d)| d).collect();
        Self { dt, values }
    }

    /// Value at elapsed time t (grid starts at −dt).
    fn at(&self, t: f64) -> Complex64 {
        let u = t / self.dt + 1.0;
        let i = (u.floor() as isize).clamp(1, self.values.len() as isize - 3) as usize;
        let f = u - i as f64;
        let y = &self.values[i - 1..i + 3];
        let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        y[0] * w0 + y[1] * w1 + y[2] * w2 + y[3] * w3
    }
}

/// Integrates f over [a, b] with GL panels whose width follows `width(x)`.
fn adaptive(gl: &GaussLegendre, a: f64, b: f64, width: impl Fn(f64) -> f64, mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = a;
    while lo < b {
        let hi = (lo + width(lo)).min(b);
        acc += gl.integrate(lo, hi, &mut f);
        lo = hi;
    }
    acc
}

/// ∫_W^∞ w^{−α} e^{iaw} dw by its asymptotic series (aW ≫ 1).
fn oscillatory_tail(alpha: f64, a: f64, w: f64) -> Complex64 {
    let mut term = I / a * w.powf(-alpha);
    let mut acc = term;
    for k in 0..4 {
        term *= -I / a * (alpha + k as f64) / w;
        acc += term;
    }
    acc * Complex64::from_polar(1.0, a * w)
}

/// ∫_{w₀}^∞ h(w) w^{−α} e^{iaw} dw for smooth, slowly varying h.
fn fresnel_head(gl: &GaussLegendre, alpha: f64, a: f64, w0: f64, h: impl Fn(f64) -> Complex64) -> Complex64 {
    if a <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let w_end = (200.0 / a).max(2.0 * w0);
    let body = adaptive(gl, w0, w_end, |w| (0.5 * w).min(2.0 / a), |w| h(w) * w.powf(-alpha) * Complex64::from_polar(1.0, a * w));
    body + h(w_end) * oscillatory_tail(alpha, a, w_end)
}

/// Semiclassical transmitted amplitude at x < 0 by direct quadrature over
/// the last-crossing time: −(1/m)∫₀^τ ds ⟨x|e^{−iH₀s}|0⟩e^{−V0 s}⟨0|p̂e^{−iH₀(τ−s)}|ψ⟩.
pub fn pdx_transmitted(psi0: &WaveFunction, v0: f64, tau: f64, x: f64) -> Result<Complex64> {
    if !(x < 0.0) {
        return Err(Error::InvalidSpec(format!("x = {x} must be negative")));
    }
    if tau <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mass = psi0.mass();
    let d = OriginDerivative::new(psi0, tau);
    let gl = GaussLegendre::new(12);
    let a = mass * x * x / 2.0;
    let c = prefactor(mass);
    let rate = 1.0 / d.dt * 0.04 + v0 + 1.0;
    // ⟨0|p̂ φ⟩ = −i φ′(0), so the integrand is (i/m) g_f e^{−V0 s} ∂ₓψ.
    let integrand = |s: f64| I / mass * c / s.sqrt() * Complex64::from_polar((-v0 * s).exp(), a / s) * d.at(tau - s);
    let s1 = tau.min(1.0);
    let body = adaptive(&gl, s1, tau, |s| 1.0 / (a / (s * s) + rate), integrand);
    let head = fresnel_head(&gl, 1.5, a, 1.0 / s1, |w| {
        I / mass * c * (-v0 / w).exp() * d.at(tau - 1.0 / w)
    });
    Ok(body + head)
}

/// Transmitted amplitude at x < 0 from the first-and-last-crossing form,
/// (1/m²)∫ds∫dv ⟨x|e^{−iH₀s}p̂|0⟩e^{−V0 s} g(0,v|0,0) ⟨0|p̂e^{−iH₀(τ−v−s)}|ψ⟩,
/// at finite τ. Slow; a validation path for the closed forms.
pub fn pdx_transmitted_first_last(psi0: &WaveFunction, v0: f64, tau: f64, x: f64) -> Result<Complex64> {
    if !(x < 0.0) {
        return Err(Error::InvalidSpec(format!("x = {x} must be negative")));
    }
    if v0 < 0.0 {
        return Err(Error::InvalidSpec(format!("V0 = {v0} must be non-negative")));
    }
    if tau <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mass = psi0.mass();
    let d = OriginDerivative::new(psi0, tau);
    let gl = GaussLegendre::new(12);
    let c = prefactor(mass);
    let e_rate = 0.04 / d.dt + v0;

    // B(t) = ∫₀ᵗ dv g(0,v|0,0)(−i)∂ₓψ(0,t−v), with v = y² removing the v^{−1/2}.
    let b_at = |t: f64| -> Complex64 {
        if t <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let y_max = t.sqrt();
        adaptive(&gl, 0.0, y_max, |y| 1.0 / (2.0 * y * e_rate + 1.0), |y| {
            2.0 * c * one_minus_exp_over(v0 * y * y) * -I * d.at(t - y * y)
        })
    };
    let bdt = d.dt;
    let nb = (tau / bdt).ceil() as usize + 4;
    let b_vals: Vec<Complex64> = (0..nb).map(|k| b_at((k as f64 - 1.0) * bdt)).collect();
    let b = OriginDerivative { dt: bdt, values: b_vals };

    let a = mass * x * x / 2.0;
    // ⟨x|e^{−iH₀s}p̂|0⟩ = (m x/s) g_f(x,s|0,0).
    let integrand = |s: f64| x / (mass * s) * c / s.sqrt() * Complex64::from_polar((-v0 * s).exp(), a / s) * b.at(tau - s);
    let s1 = tau.min(1.0);
    let body = adaptive(&gl, s1, tau, |s| 1.0 / (a / (s * s) + e_rate + 1.0), integrand);
    let head = fresnel_head(&gl, 0.5, a, 1.0 / s1, |w| x / mass * c * (-v0 / w).exp() * b.at(tau - 1.0 / w));
    Ok(body + head)
}

/// Transmission amplitude measured from the dynamics: the time transform of
/// ψ(0,t) under the absorbing evolution, divided by that of the free evolution
/// over the same window [ψ.time, τ]. The ratio cancels the window truncation
/// common to both, leaving t(p) for components that crossed well before τ.
pub fn dynamical_transmission(
    psi0: &WaveFunction,
    pot: &crate::qdyn::StepPotentialSpec,
    cfg: &crate::qdyn::EvolutionConfig,
    tau: f64,
    momenta: &[f64],
) -> Result<Vec<Complex64>> {
    let grid = *psi0.grid();
    let origin = grid
        .origin_index()
        .ok_or_else(|| Error::InvalidSpec("the origin must be a grid node".into()))?;
    let n = crate::qdyn::step_count(tau - psi0.time(), cfg.dt)?;
    if n < 2 {
        return Err(Error::InvalidSpec("the window needs at least two steps".into()));
    }
    let stepper = crate::qdyn::StrangStepper::new(&grid, psi0.mass(), pot.v0, cfg.dt);
    let mut amps = psi0.amplitudes().to_vec();
    let mut absorbed = Vec::with_capacity(n + 1);
    absorbed.push(amps[origin]);
    for _ in 0..n {
        stepper.step(&mut amps);
        crate::wavefunction::check_spill(&amps, cfg.spill_threshold)?;
        absorbed.push(amps[origin]);
    }
    let times = crate::series::TimeGrid::new(psi0.time(), cfg.dt, n + 1)?;
    let free: Vec<Complex64> = crate::qdyn::origin_amplitudes(psi0, &times).into_iter().map(|(v, _)| v).collect();
    let mass = psi0.mass();
    let transform = |signal: &[Complex64], e: f64| -> Complex64 {
        let step = Complex64::from_polar(1.0, e * cfg.dt);
        let mut phase = Complex64::from_polar(1.0, e * psi0.time());
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, z) in signal.iter().enumerate() {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * z * phase;
            phase *= step;
        }
        acc
    };
    Ok(momenta
        .iter()
        .map(|&p| {
            let e = energy(p, mass);
            transform(&absorbed, e) / transform(&free, e)
        })
        .collect())
}

/// Relative L1 error of the transmitted momentum density, Σ ||t_dyn|²ρ − |t|²ρ| / Σ |t|²ρ over the
/// grid momenta in [p_lo, p_hi], with ρ the initial momentum density.
pub fn transmitted_density_error(
    psi0: &WaveFunction,
    pot: &crate::qdyn::StepPotentialSpec,
    cfg: &crate::qdyn::EvolutionConfig,
    tau: f64,
    p_lo: f64,
    p_hi: f64,
) -> Result<f64> {
    let (p, dens) = psi0.momentum_density();
    let idx: Vec<usize> = (0..p.len()).filter(|&i| p_lo <= p[i] && p[i] <= p_hi && p[i] != 0.0).collect();
    if idx.is_empty() {
        return Err(Error::InvalidSpec(format!("no grid momenta in [{p_lo}, {p_hi}]")));
    }
    let support: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
    let t_dyn = dynamical_transmission(psi0, pot, cfg, tau, &support)?;
    let (mut diff, mut total) = (0.0, 0.0);
    for (k, &i) in idx.iter().enumerate() {
        let closed = transmission_amplitude(p[i], pot.v0, psi0.mass())?.norm_sqr() * dens[i];
        diff += (t_dyn[k].norm_sqr() * dens[i] - closed).abs();
        total += closed;
    }
    Ok(diff / total)
}

/// (m/2λ)^{1/2} exp(i|x|(2mλ)^{1/2}), the closed form of
/// ∫₀^∞ ds (m/2πis)^{1/2} exp(i[λs + mx²/2s]) for Im λ ≥ 0.
pub fn laplace_free_closed(lambda: Complex64, x: f64, mass: f64) -> Complex64 {
    (mass / (2.0 * lambda)).sqrt() * (I * x.abs() * (2.0 * mass * lambda).sqrt()).exp()
}

/// √(2m)/((E + iV0)^{1/2} + E^{1/2}).
pub fn laplace_edge_closed(e: f64, v0: f64, mass: f64) -> Complex64 {
    (2.0 * mass).sqrt() / (Complex64::new(e, v0).sqrt() + e.sqrt())
}

const ETA_LEVELS: usize = 7;

/// ∫₀^∞ dy g(y) e^{iλy²} with λ → λ + iη, Richardson-extrapolated to η = 0.
fn damped_gaussian_laplace(lambda: Complex64, y0: f64, g: impl Fn(f64, Complex64) -> Complex64) -> Complex64 {
    let gl = GaussLegendre::new(12);
    let eta0 = 0.05 * lambda.norm().max(1e-3);
    let samples: Vec<Complex64> = (0..ETA_LEVELS)
        .map(|k| {
            let lam = lambda + I * (eta0 / 2f64.powi(k as i32));
            let decay = lam.im.max(1e-300);
            let y_end = y0 + (42.0 / decay).sqrt();
            let rate = 2.0 * lam.re.abs();
            adaptive(&gl, y0, y_end, |y| (1.5 / (rate * y + 1.0)).min(0.5), |y| g(y, lam) * (I * lam * y * y).exp())
        })
        .collect();
    richardson(&samples, 2.0)
}

/// Regularized quadrature of ∫₀^∞ ds (m/2πis)^{1/2} exp(i[λs + mx²/2s]).
pub fn laplace_free_numeric(lambda: Complex64, x: f64, mass: f64) -> Complex64 {
    let c = prefactor(mass);
    let a = mass * x * x / 2.0;
    // s = y²; for a > 0 the piece y < 1 goes through w = 1/y².
    let y0 = if a > 0.0 { 1.0 } else { 0.0 };
    let gl = GaussLegendre::new(12);
    let eta0 = 0.05 * lambda.norm().max(1e-3);
    let samples: Vec<Complex64> = (0..ETA_LEVELS)
        .map(|k| {
            let lam = lambda + I * (eta0 / 2f64.powi(k as i32));
            let decay = lam.im.max(1e-300);
            let y_end = y0 + (42.0 / decay).sqrt();
            let rate = 2.0 * lam.re.abs() + 2.0 * a;
            let tail = adaptive(&gl, y0, y_end, |y| (1.5 / (rate * y + 1.0)).min(0.5), |y| {
                2.0 * (I * (lam * y * y + a / (y * y))).exp()
            });
            let head = if a > 0.0 { fresnel_head(&gl, 1.5, a, 1.0, |w| (I * lam / w).exp()) } else { Complex64::new(0.0, 0.0) };
            c * (tail + head)
        })
        .collect();
    richardson(&samples, 2.0)
}

/// Regularized quadrature of (m/2πi)^{1/2}∫₀^∞ dv (1 − e^{−V0 v})/(V0 v^{3/2}) e^{iEv}.
pub fn laplace_edge_numeric(e: f64, v0: f64, mass: f64) -> Complex64 {
    let c = prefactor(mass);
    c * damped_gaussian_laplace(Complex64::new(e, 0.0), 0.0, |y, _| Complex64::new(2.0 * one_minus_exp_over(v0 * y * y), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_series_matches_quadrature() {
        let gl = GaussLegendre::new(16);
        let (alpha, a, w) = (1.5, 3.0, 80.0);
        let far = 4000.0;
        let body = adaptive(&gl, w, far, |_| 0.5, |x| x.powf(-alpha) * Complex64::from_polar(1.0, a * x));
        let est = oscillatory_tail(alpha, a, w) - oscillatory_tail(alpha, a, far);
        assert!((body - est).norm() < 1e-10, "{body} vs {est}");
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let dt = 0.1;
        let f = |t: f64| Complex64::new(t * t * t - 2.0 * t, 0.5 * t * t);
        let d = OriginDerivative { dt, values: (0..30).map(|k| f((k as f64 - 1.0) * dt)).collect() };
        for &t in &[0.0, 0.033, 1.27, 2.5] {
            assert!((d.at(t) - f(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_potential_limits() {
        for &p in &[-3.0, -0.5, 0.7] {
            assert_eq!(transmission_amplitude(p, 0.0, 1.0).unwrap(), Complex64::new(1.0, 0.0));
            assert_eq!(reflection_amplitude(p, 0.0, 1.0).unwrap(), Complex64::new(0.0, 0.0));
        }
        assert!(matches!(transmission_amplitude(0.0, 0.1, 1.0), Err(Error::ZeroMomentum)));
    }
}
