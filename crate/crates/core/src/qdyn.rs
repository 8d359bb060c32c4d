//! Evolution under H = H₀ − iV₀θ(−x) and the arrival-time observables.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::series::{TimeGrid, TimeSeries};
use crate::spectral;
use crate::wavefunction::{check_spill, WaveFunction, DEFAULT_SPILL_THRESHOLD};

/// Largest positive-momentum weight tolerated by the Kijowski distribution.
pub const KIJOWSKI_POSITIVE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialProfile {
    SharpStep,
}

/// Absorbing step −iV₀θ(−x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPotentialSpec {
    pub v0: f64,
    pub profile: PotentialProfile,
}

impl StepPotentialSpec {
    pub fn new(v0: f64) -> Result<Self> {
        if !(v0 >= 0.0 && v0.is_finite()) {
            return Err(Error::InvalidSpec(format!("V0 must be finite and non-negative, got {v0}")));
        }
        Ok(Self { v0, profile: PotentialProfile::SharpStep })
    }

    pub fn free() -> Self {
        Self { v0: 0.0, profile: PotentialProfile::SharpStep }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub order: Splitting,
    pub spill_threshold: f64,
}

impl EvolutionConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSpec(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { dt, order: Splitting::Strang, spill_threshold: DEFAULT_SPILL_THRESHOLD })
    }

    pub fn with_spill_threshold(mut self, threshold: f64) -> Self {
        self.spill_threshold = threshold;
        self
    }

    /// Step obeying dt·max(p²/2m, V0) ≤ 0.05 for momenta up to `p_max`.
    pub fn suggested(p_max: f64, mass: f64, v0: f64) -> Self {
        let scale = (p_max * p_max / (2.0 * mass)).max(v0).max(1e-12);
        Self { dt: 0.05 / scale, order: Splitting::Strang, spill_threshold: DEFAULT_SPILL_THRESHOLD }
    }
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { dt: 0.005, order: Splitting::Strang, spill_threshold: DEFAULT_SPILL_THRESHOLD }
    }
}

/// Number of steps of size `dt` spanning `interval`, or a StepError.
pub(crate) fn step_count(interval: f64, dt: f64) -> Result<usize> {
    if interval < 0.0 {
        return Err(Error::Step { dt, interval });
    }
    let n = (interval / dt).round();
    if (n * dt - interval).abs() > 1e-9 * interval.max(1.0) {
        return Err(Error::Step { dt, interval });
    }
    Ok(n as usize)
}

/// One Strang step: K(dt/2) A(dt) K(dt/2), with A = e^{−V0 θ(−x) dt}.
pub(crate) struct StrangStepper {
    grid: Grid1D,
    half_kick: Vec<Complex64>,
    absorb: Vec<f64>,
    pub(crate) theta_left: Vec<f64>,
}

impl StrangStepper {
    pub(crate) fn new(grid: &Grid1D, mass: f64, v0: f64, dt: f64) -> Self {
        let theta_left = grid.theta_left();
        let absorb = theta_left.iter().map(|w| (-v0 * w * dt).exp()).collect();
        Self {
            grid: *grid,
            half_kick: spectral::free_phases(grid, mass, 0.5 * dt),
            absorb,
            theta_left,
        }
    }

    /// Advances `psi` one step; `mid` sees the state between the kinetic
    /// half-step and the absorption factor.
    pub(crate) fn step_with(&self, psi: &mut [Complex64], mut mid: impl FnMut(&[Complex64])) {
        spectral::apply_in_momentum(psi, &self.half_kick);
        mid(psi);
        for (z, a) in psi.iter_mut().zip(&self.absorb) {
            *z *= *a;
        }
        spectral::apply_in_momentum(psi, &self.half_kick);
    }

    pub(crate) fn step(&self, psi: &mut [Complex64]) {
        self.step_with(psi, |_| {});
    }

    pub(crate) fn left_weight(&self, psi: &[Complex64]) -> f64 {
        psi.iter().zip(&self.theta_left).map(|(z, w)| w * z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }
}

fn check_step_inputs(psi: &WaveFunction, pot: &StepPotentialSpec, cfg: &EvolutionConfig) -> Result<()> {
    StepPotentialSpec::new(pot.v0)?;
    EvolutionConfig::new(cfg.dt)?;
    if psi.representation() != crate::wavefunction::Representation::Position {
        return Err(Error::InvalidSpec("evolution expects a position-space state".into()));
    }
    Ok(())
}

/// Strang-split evolution under the complex step potential up to `t_final`.
pub fn evolve_step(
    psi: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    t_final: f64,
) -> Result<WaveFunction> {
    check_step_inputs(psi, pot, cfg)?;
    let n = step_count(t_final - psi.time(), cfg.dt)?;
    let stepper = StrangStepper::new(psi.grid(), psi.mass(), pot.v0, cfg.dt);
    let mut amps = psi.amplitudes().to_vec();
    for _ in 0..n {
        stepper.step(&mut amps);
        check_spill(&amps, cfg.spill_threshold)?;
    }
    Ok(WaveFunction::from_parts(*psi.grid(), amps, t_final, psi.mass()))
}

/// Exact free evolution to `t_final ≥ psi.time`.
pub fn evolve_free(psi: &WaveFunction, t_final: f64) -> Result<WaveFunction> {
    if t_final < psi.time() {
        return Err(Error::InvalidSpec(format!(
            "t_final = {t_final} precedes the state time {}",
            psi.time()
        )));
    }
    propagate_free(psi, t_final, DEFAULT_SPILL_THRESHOLD)
}

/// Exact free evolution to any time, forwards or backwards.
pub fn propagate_free(psi: &WaveFunction, t_final: f64, spill_threshold: f64) -> Result<WaveFunction> {
    let elapsed = t_final - psi.time();
    let mut amps = psi.position_amplitudes();
    if elapsed != 0.0 {
        spectral::apply_in_momentum(&mut amps, &spectral::free_phases(psi.grid(), psi.mass(), elapsed));
    }
    let out = WaveFunction::from_parts(*psi.grid(), amps, t_final, psi.mass());
    out.check_spill(spill_threshold)?;
    Ok(out)
}

/// Survival N, arrival density Π and the final state of one absorbing run.
#[derive(Debug, Clone)]
pub struct AbsorbingRun {
    pub survival: TimeSeries,
    pub arrival: TimeSeries,
    pub final_state: WaveFunction,
}

/// Evolves once and records N(t) = ‖ψ_t‖² and Π(t) = 2V0⟨θ(−x)⟩ at every step.
pub fn absorbing_run(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    tau: f64,
) -> Result<AbsorbingRun> {
    check_step_inputs(psi0, pot, cfg)?;
    let n = step_count(tau - psi0.time(), cfg.dt)?;
    if n == 0 {
        return Err(Error::InvalidSpec("observable series need at least one step".into()));
    }
    let stepper = StrangStepper::new(psi0.grid(), psi0.mass(), pot.v0, cfg.dt);
    let dx = psi0.grid().dx();
    let mut amps = psi0.amplitudes().to_vec();
    let mut survival = Vec::with_capacity(n + 1);
    let mut arrival = Vec::with_capacity(n + 1);
    let record = |amps: &[Complex64], s: &mut Vec<f64>, a: &mut Vec<f64>| {
        s.push(amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx);
        a.push(2.0 * pot.v0 * stepper.left_weight(amps));
    };
    record(&amps, &mut survival, &mut arrival);
    for _ in 0..n {
        stepper.step(&mut amps);
        check_spill(&amps, cfg.spill_threshold)?;
        record(&amps, &mut survival, &mut arrival);
    }
    let t0 = psi0.time();
    Ok(AbsorbingRun {
        survival: TimeSeries::new(t0, cfg.dt, survival)?,
        arrival: TimeSeries::new(t0, cfg.dt, arrival)?,
        final_state: WaveFunction::from_parts(*psi0.grid(), amps, tau, psi0.mass()),
    })
}

/// N(t) sampled every dt.
pub fn survival_series(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    tau: f64,
) -> Result<TimeSeries> {
    Ok(absorbing_run(psi0, pot, cfg, tau)?.survival)
}

/// Π(t) = 2V0⟨ψ_t|θ(−x)|ψ_t⟩ sampled every dt.
pub fn arrival_series(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    tau: f64,
) -> Result<TimeSeries> {
    Ok(absorbing_run(psi0, pot, cfg, tau)?.arrival)
}

fn current_from(val: Complex64, der: Complex64, mass: f64) -> f64 {
    -(val.conj() * der).im / mass
}

/// J(t) = −(1/m) Im[ψ_f* ∂ₓψ_f] at x = 0 for the freely evolved state.
pub fn current_at_origin(psi0: &WaveFunction, t: f64) -> f64 {
    let (v, d) = psi0.free_value_and_derivative(0.0, t - psi0.time());
    current_from(v, d, psi0.mass())
}

/// Free amplitudes ψ_f(0,t) and ∂ₓψ_f(0,t) on a time grid.
pub fn origin_amplitudes(psi0: &WaveFunction, times: &TimeGrid) -> Vec<(Complex64, Complex64)> {
    let grid = *psi0.grid();
    let mass = psi0.mass();
    let mut z = psi0.fft_momentum_amplitudes();
    let p = grid.fft_momenta();
    let start = free_phases_vec(&p, mass, times.t0 - psi0.time());
    let step = free_phases_vec(&p, mass, times.dt);
    z.iter_mut().zip(&start).for_each(|(a, b)| *a *= b);
    let c = grid.dp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut out = Vec::with_capacity(times.len);
    for i in 0..times.len {
        if i > 0 {
            z.iter_mut().zip(&step).for_each(|(a, b)| *a *= b);
        }
        let mut val = Complex64::new(0.0, 0.0);
        let mut der = Complex64::new(0.0, 0.0);
        for (a, &pk) in z.iter().zip(&p) {
            val += a;
            der += Complex64::new(-a.im * pk, a.re * pk);
        }
        out.push((val * c, der * c));
    }
    out
}

fn free_phases_vec(p: &[f64], mass: f64, t: f64) -> Vec<Complex64> {
    p.iter().map(|&p| Complex64::from_polar(1.0, -p * p * t / (2.0 * mass))).collect()
}

/// J(t) on a time grid.
pub fn current_series(psi0: &WaveFunction, times: &TimeGrid) -> TimeSeries {
    let mass = psi0.mass();
    let values = origin_amplitudes(psi0, times)
        .into_iter()
        .map(|(v, d)| current_from(v, d, mass))
        .collect();
    TimeSeries { t0: times.t0, dt: times.dt, values }
}

/// Π_K(t) = (1/m)|∫dp |p|^{1/2} ψ̃(p) e^{−iEt}/√(2π)|².
pub fn kijowski_series(psi0: &WaveFunction, times: &TimeGrid) -> Result<TimeSeries> {
    kijowski_series_with_tolerance(psi0, times, KIJOWSKI_POSITIVE_TOLERANCE)
}

pub fn kijowski_series_with_tolerance(
    psi0: &WaveFunction,
    times: &TimeGrid,
    tolerance: f64,
) -> Result<TimeSeries> {
    let norm = psi0.norm2();
    let weight = psi0.positive_momentum_weight();
    if weight > tolerance * norm {
        return Err(Error::PositiveMomentum { weight: weight / norm, tolerance });
    }
    let grid = *psi0.grid();
    let mass = psi0.mass();
    let p = grid.fft_momenta();
    let mut z: Vec<Complex64> = psi0
        .fft_momentum_amplitudes()
        .into_iter()
        .zip(&p)
        .map(|(a, p)| a * p.abs().sqrt())
        .collect();
    let start = free_phases_vec(&p, mass, times.t0 - psi0.time());
    let step = free_phases_vec(&p, mass, times.dt);
    z.iter_mut().zip(&start).for_each(|(a, b)| *a *= b);
    let c = grid.dp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut values = Vec::with_capacity(times.len);
    for i in 0..times.len {
        if i > 0 {
            z.iter_mut().zip(&step).for_each(|(a, b)| *a *= b);
        }
        let s: Complex64 = z.iter().sum();
        values.push((s * c).norm_sqr() / mass);
    }
    TimeSeries::from_grid(times, values)
}

/// R(V0, t) = 2V0 θ(t) e^{−2V0 t}.
pub fn resolution_function(v0: f64, t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        2.0 * v0 * (-2.0 * v0 * t).exp()
    }
}

/// (R∗J)(τ) = ∫_{t0}^{τ} R(V0, τ − t) J(t) dt, exact for piecewise-linear J.
pub fn convolve_resolution(j: &TimeSeries, v0: f64) -> TimeSeries {
    let a = 2.0 * v0;
    let h = j.dt;
    let mut out = Vec::with_capacity(j.len());
    let mut acc = 0.0;
    out.push(0.0);
    if a == 0.0 {
        return TimeSeries { t0: j.t0, dt: h, values: vec![0.0; j.len()] };
    }
    let x = a * h;
    let decay = (-x).exp();
    let c0 = -(-x).exp_m1();
    // ∫₀ʰ a e^{−a(h−s)} s ds / h
    let c1 = c0 - (c0 - x * decay) / x;
    for w in j.values.windows(2) {
        acc = decay * acc + w[0] * c0 + (w[1] - w[0]) * c1;
        out.push(acc);
    }
    TimeSeries { t0: j.t0, dt: h, values: out }
}

/// R∗J on a time grid whose first sample is the lower integration limit.
pub fn convolved_current(psi0: &WaveFunction, v0: f64, times: &TimeGrid) -> TimeSeries {
    convolve_resolution(&current_series(psi0, times), v0)
}
