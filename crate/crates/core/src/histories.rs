//! Decoherent histories for crossing x = 0: the two-class analysis, the
//! fine-grained crossing class operators, decoherence functionals,
//! quasi-probabilities, backflow diagnostics and the pulsed-measurement
//! comparison.
//!
//! Class states are kept in the interaction picture: the common factor
//! e^{−iH₀(τ−t₀)} is carried as metadata in [`ClassState`] and only applied
//! by [`ClassState::materialize`].

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::qdyn::{
    absorbing_run, current_series, evolve_free, evolve_step, step_count, EvolutionConfig,
    StepPotentialSpec, StrangStepper,
};
use crate::series::TimeGrid;
use crate::spectral;
use crate::wavefunction::{check_spill, WaveFunction};

pub const DEFAULT_DECOHERENCE_THRESHOLD: f64 = 0.01;
pub const BACKFLOW_TOLERANCE: f64 = 1e-4;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const QUASI_IDENTITY_TOLERANCE: f64 = 1e-8;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-3;

/// Numerical settings shared by the histories operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoriesConfig {
    /// Edge amplitude tolerated on states cut by θ(x), which carry slowly
    /// decaying diffraction tails.
    pub spill_threshold: f64,
    /// Required ratio of the grid's p_max to the packet's momentum reach.
    pub momentum_headroom: f64,
    pub decoherence_threshold: f64,
}

impl Default for HistoriesConfig {
    fn default() -> Self {
        Self {
            spill_threshold: 3e-2,
            momentum_headroom: 8.0,
            decoherence_threshold: DEFAULT_DECOHERENCE_THRESHOLD,
        }
    }
}

impl HistoriesConfig {
    fn check_headroom(&self, psi: &WaveFunction) -> Result<()> {
        let (p, w) = psi.momentum_density();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (p, w) in p.iter().zip(&w) {
            m0 += w;
            m1 += w * p;
            m2 += w * p * p;
        }
        let mean = m1 / m0;
        let spread = (m2 / m0 - mean * mean).max(0.0).sqrt();
        let reach = mean.abs() + spread;
        let p_max = psi.grid().p_max();
        if p_max < self.momentum_headroom * reach {
            return Err(Error::InvalidSpec(format!(
                "grid p_max {p_max:.3} is below {} × packet momentum reach {reach:.3}",
                self.momentum_headroom
            )));
        }
        Ok(())
    }
}

/// Partition of [0, τ] into N crossing intervals of width Δ = τ/N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryPartition {
    pub tau: f64,
    pub n_intervals: usize,
    pub delta: f64,
}

impl HistoryPartition {
    pub fn new(tau: f64, n_intervals: usize) -> Result<Self> {
        if n_intervals == 0 {
            return Err(Error::InvalidSpec("a partition needs at least one interval".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidSpec(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { tau, n_intervals, delta: tau / n_intervals as f64 })
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.n_intervals {
            self.tau
        } else {
            k as f64 * self.delta
        }
    }

    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.n_intervals).map(|k| self.t(k)).collect()
    }

    /// c_0 … c_{N−1} followed by nc.
    pub fn labels(&self) -> Vec<ClassLabel> {
        (0..self.n_intervals)
            .map(ClassLabel::Crossing)
            .chain(std::iter::once(ClassLabel::NonCrossing))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Crossing(usize),
    NonCrossing,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Crossing(k) => write!(f, "c_{k}"),
            ClassLabel::NonCrossing => write!(f, "nc"),
        }
    }
}

/// e^{iH₀(τ−t₀)}C_α|ψ⟩ stored at the initial time t₀, with τ kept as metadata.
#[derive(Debug, Clone)]
pub struct ClassState {
    pub state: WaveFunction,
    pub tau: f64,
}

impl ClassState {
    /// Applies the free factor e^{−iH₀(τ−t₀)} and returns C_α|ψ⟩ at τ.
    pub fn materialize(&self, spill_threshold: f64) -> Result<WaveFunction> {
        crate::qdyn::propagate_free(&self.state, self.tau, spill_threshold)
    }

    pub fn norm2(&self) -> f64 {
        self.state.norm2()
    }
}

fn free_amps(grid: &Grid1D, mass: f64, amps: &mut [Complex64], t: f64) {
    if t != 0.0 {
        spectral::apply_in_momentum(amps, &spectral::free_phases(grid, mass, t));
    }
}

fn inner(a: &[Complex64], b: &[Complex64], dx: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dx
}

fn weighted_norm2(a: &[Complex64], w: &[f64], dx: f64) -> f64 {
    a.iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>() * dx
}

fn sub_amps(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn multiply(a: &mut [Complex64], w: &[f64]) {
    a.iter_mut().zip(w).for_each(|(z, w)| *z *= w);
}

/// θ(x)ψ_f(t): the free state at absolute time t cut to x ≥ 0.
fn cut_free(psi0: &WaveFunction, t: f64, theta: &[f64]) -> Vec<Complex64> {
    let mut a = psi0.position_amplitudes();
    free_amps(psi0.grid(), psi0.mass(), &mut a, t - psi0.time());
    multiply(&mut a, theta);
    a
}

/// θ(x̂(t))|ψ⟩ = e^{iH₀(t−t₀)} θ(x) e^{−iH₀(t−t₀)}|ψ⟩.
pub fn theta_heisenberg(psi0: &WaveFunction, t: f64, spill_threshold: f64) -> Result<WaveFunction> {
    let theta = psi0.grid().theta_right();
    let mut a = cut_free(psi0, t, &theta);
    check_spill(&a, spill_threshold)?;
    free_amps(psi0.grid(), psi0.mass(), &mut a, psi0.time() - t);
    check_spill(&a, spill_threshold)?;
    Ok(WaveFunction::from_parts(*psi0.grid(), a, psi0.time(), psi0.mass()))
}

fn check_initial(psi0: &WaveFunction) -> Result<()> {
    if psi0.representation() != crate::wavefunction::Representation::Position {
        return Err(Error::InvalidSpec("histories expect a position-space state".into()));
    }
    Ok(())
}

/// C_nc|ψ⟩ = e^{−iH₀τ−Vτ}|ψ⟩, the absorbing evolution up to `tau`.
pub fn class_nc(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    tau: f64,
) -> Result<WaveFunction> {
    evolve_step(psi0, pot, cfg, tau)
}

/// C_c|ψ⟩ = e^{−iH₀τ}|ψ⟩ − C_nc|ψ⟩.
pub fn class_c(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    tau: f64,
) -> Result<WaveFunction> {
    let free = evolve_free(psi0, tau)?;
    free.sub(&class_nc(psi0, pot, cfg, tau)?)
}

/// Crossing versus non-crossing over [t₀, τ].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoClassAnalysis {
    pub p_nc: f64,
    pub p_c: f64,
    /// D(c, nc) = ⟨C_nc ψ|C_c ψ⟩.
    pub d: Complex64,
    /// |D|²/(p_c p_nc).
    pub measure: f64,
    /// p_nc + p_c + 2 Re D − 1.
    pub sum_rule_residual: f64,
    /// ∫Π dt from the same absorbing run.
    pub integrated_arrival: f64,
}

pub fn two_class_analysis(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    tau: f64,
) -> Result<TwoClassAnalysis> {
    check_initial(psi0)?;
    let run = absorbing_run(psi0, pot, cfg, tau)?;
    let free = evolve_free(psi0, tau)?;
    let nc = run.final_state;
    let c = free.sub(&nc)?;
    let dx = psi0.grid().dx();
    let p_nc = nc.norm2();
    let p_c = c.norm2();
    let d = inner(nc.amplitudes(), c.amplitudes(), dx);
    let total = free.norm2();
    Ok(TwoClassAnalysis {
        p_nc,
        p_c,
        d,
        measure: pair_measure(d, p_c, p_nc),
        sum_rule_residual: p_nc + p_c + 2.0 * d.re - total,
        integrated_arrival: run.arrival.integral(),
    })
}

fn pair_measure(d: Complex64, pa: f64, pb: f64) -> f64 {
    let num = d.norm_sqr();
    let den = pa * pb;
    if num == 0.0 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

fn check_window(t_k: f64, t_k1: f64, tau: f64, t0: f64) -> Result<()> {
    if !(t0 <= t_k && t_k <= t_k1 && t_k1 <= tau) {
        return Err(Error::InvalidSpec(format!(
            "crossing window [{t_k}, {t_k1}] must satisfy {t0} ≤ t_k ≤ t_k1 ≤ τ = {tau}"
        )));
    }
    Ok(())
}

/// [θ(x̂(t_k)) − θ(x̂(t_{k+1}))]|ψ⟩, the crossing class state in the
/// regime where every timescale exceeds 1/V₀.
pub fn crossing_class_apply(
    psi0: &WaveFunction,
    t_k: f64,
    t_k1: f64,
    tau: f64,
    hcfg: &HistoriesConfig,
) -> Result<ClassState> {
    check_initial(psi0)?;
    check_window(t_k, t_k1, tau, psi0.time())?;
    hcfg.check_headroom(psi0)?;
    if t_k == t_k1 {
        return Ok(ClassState { state: WaveFunction::zeros(*psi0.grid(), psi0.time(), psi0.mass()), tau });
    }
    let a = theta_heisenberg(psi0, t_k, hcfg.spill_threshold)?;
    let b = theta_heisenberg(psi0, t_k1, hcfg.spill_threshold)?;
    Ok(ClassState { state: a.sub(&b)?, tau })
}

/// W(t) = e^{iH₀(t−t₀)} e^{−iH₀(t−t₀)−V(t−t₀)}|ψ⟩ at each requested time,
/// with the absorbing evolution taken from one split-step run.
fn interaction_states(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    times: &[f64],
    spill_threshold: f64,
) -> Result<Vec<Vec<Complex64>>> {
    let grid = *psi0.grid();
    let mass = psi0.mass();
    let stepper = StrangStepper::new(&grid, mass, pot.v0, cfg.dt);
    let mut amps = psi0.amplitudes().to_vec();
    let mut now = psi0.time();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let n = step_count(t - now, cfg.dt)?;
        for _ in 0..n {
            stepper.step(&mut amps);
            check_spill(&amps, cfg.spill_threshold)?;
        }
        now = t;
        let mut w = amps.clone();
        free_amps(&grid, mass, &mut w, psi0.time() - t);
        check_spill(&w, spill_threshold)?;
        out.push(w);
    }
    Ok(out)
}

/// ∫_{t_k}^{t_{k+1}} dt e^{−iH₀(τ−t)} V e^{−iH₀t−Vt}|ψ⟩ in the interaction
/// picture. The integrand is −dW/dt, so the integral is W(t_k) − W(t_{k+1})
/// with W evaluated along the split-step absorbing evolution.
pub fn crossing_class_exact(
    psi0: &WaveFunction,
    pot: &StepPotentialSpec,
    cfg: &EvolutionConfig,
    t_k: f64,
    t_k1: f64,
    tau: f64,
    hcfg: &HistoriesConfig,
) -> Result<ClassState> {
    check_initial(psi0)?;
    check_window(t_k, t_k1, tau, psi0.time())?;
    StepPotentialSpec::new(pot.v0)?;
    let w = interaction_states(psi0, pot, cfg, &[t_k, t_k1], hcfg.spill_threshold)?;
    let state = WaveFunction::from_parts(*psi0.grid(), sub_amps(&w[0], &w[1]), psi0.time(), psi0.mass());
    Ok(ClassState { state, tau })
}

/// How the crossing class operators are built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassMode {
    /// θ(x̂(t_k)) − θ(x̂(t_{k+1})) with C_nc ≈ θ(x̂(τ)).
    Simplified,
    /// The complex-potential class operators with C_nc = e^{−iH₀τ−Vτ}.
    Exact { potential: StepPotentialSpec, evolution: EvolutionConfig },
}

/// The matrix D(α, α′) = ⟨C_α′ψ|C_αψ⟩ over the labels of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceMatrix {
    pub labels: Vec<ClassLabel>,
    /// Row-major (N+1)×(N+1).
    pub entries: Vec<Complex64>,
}

impl DecoherenceMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.entries[a * self.size() + b]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|a| self.get(a, a).re).collect()
    }

    /// Σ_{α,α′} D(α,α′), summed pairwise.
    pub fn total(&self) -> Complex64 {
        pairwise_sum(&self.entries)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.size();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.get(a, b) - self.get(b, a).conj()).norm());
            }
        }
        worst
    }

    /// Largest |D(α,α′)|² − p(α)p(α′).
    pub fn cauchy_schwarz_excess(&self) -> f64 {
        let p = self.diagonal();
        let n = self.size();
        let mut worst = f64::NEG_INFINITY;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max(self.get(a, b).norm_sqr() - p[a] * p[b]);
            }
        }
        worst
    }
}

fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceReport {
    pub matrix: DecoherenceMatrix,
    /// |D(α,α′)|²/(p(α)p(α′)), row-major.
    pub measure: Vec<f64>,
    /// q(α) = ⟨ψ|e^{iH₀τ}C_α|ψ⟩.
    pub quasi: Vec<f64>,
    pub decoherent: Vec<bool>,
    pub threshold: f64,
    /// ‖Σ_α e^{iH₀τ}C_αψ − ψ‖.
    pub resolution_residual: f64,
    /// |Σ D − 1|.
    pub normalization_residual: f64,
}

impl DecoherenceReport {
    pub fn probabilities(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }

    /// Largest measure over distinct pairs.
    pub fn max_off_diagonal_measure(&self) -> f64 {
        let n = self.matrix.size();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    worst = worst.max(self.measure[a * n + b]);
                }
            }
        }
        worst
    }

    pub fn all_decoherent(&self) -> bool {
        self.decoherent.iter().all(|&d| d)
    }
}

/// Class states of every label of the partition, in the interaction picture.
pub fn class_states(
    psi0: &WaveFunction,
    partition: &HistoryPartition,
    mode: &ClassMode,
    hcfg: &HistoriesConfig,
) -> Result<Vec<Vec<Complex64>>> {
    check_initial(psi0)?;
    let t0 = psi0.time();
    let times: Vec<f64> = partition.boundaries().iter().map(|t| t + t0).collect();
    let w = match mode {
        ClassMode::Simplified => {
            hcfg.check_headroom(psi0)?;
            times
                .iter()
                .map(|&t| theta_heisenberg(psi0, t, hcfg.spill_threshold).map(|s| s.into_amplitudes()))
                .collect::<Result<Vec<_>>>()?
        }
        ClassMode::Exact { potential, evolution } => {
            StepPotentialSpec::new(potential.v0)?;
            interaction_states(psi0, potential, evolution, &times, hcfg.spill_threshold)?
        }
    };
    let n = partition.n_intervals;
    let mut out: Vec<Vec<Complex64>> = (0..n).map(|k| sub_amps(&w[k], &w[k + 1])).collect();
    out.push(w[n].clone());
    Ok(out)
}

/// Builds the decoherence functional for the partition and checks its
/// structural invariants.
pub fn decoherence_matrix(
    psi0: &WaveFunction,
    partition: &HistoryPartition,
    mode: &ClassMode,
    hcfg: &HistoriesConfig,
) -> Result<DecoherenceReport> {
    let states = class_states(psi0, partition, mode, hcfg)?;
    let dx = psi0.grid().dx();
    let labels = partition.labels();
    let n = labels.len();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in a..n {
            let d = inner(&states[b], &states[a], dx);
            entries[a * n + b] = d;
            entries[b * n + a] = d.conj();
        }
        entries[a * n + a] = Complex64::new(entries[a * n + a].re, 0.0);
    }
    let matrix = DecoherenceMatrix { labels, entries };

    let psi = psi0.amplitudes();
    let quasi: Vec<f64> = states.iter().map(|s| inner(psi, s, dx).re).collect();
    let mut resolved = vec![Complex64::new(0.0, 0.0); psi.len()];
    for s in &states {
        resolved.iter_mut().zip(s).for_each(|(r, z)| *r += z);
    }
    let resolution_residual = inner(&sub_amps(&resolved, psi), &sub_amps(&resolved, psi), dx).re.sqrt();
    let normalization_residual = (matrix.total() - Complex64::new(psi0.norm2(), 0.0)).norm();

    let p = matrix.diagonal();
    let mut measure = vec![0.0; n * n];
    let mut decoherent = vec![true; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let m = pair_measure(matrix.get(a, b), p[a], p[b]);
                measure[a * n + b] = m;
                decoherent[a * n + b] = m <= hcfg.decoherence_threshold;
            }
        }
    }

    let hermiticity = matrix.hermiticity_defect();
    if hermiticity > HERMITICITY_TOLERANCE {
        return Err(Error::Consistency {
            what: "decoherence matrix Hermiticity".into(),
            value: hermiticity,
            tolerance: HERMITICITY_TOLERANCE,
        });
    }
    if let Some(&low) = p.iter().find(|&&x| x < -1e-12) {
        return Err(Error::Consistency {
            what: "negative class probability".into(),
            value: low,
            tolerance: 1e-12,
        });
    }
    let cs = matrix.cauchy_schwarz_excess();
    if cs > 1e-10 {
        return Err(Error::Consistency {
            what: "Cauchy–Schwarz bound".into(),
            value: cs,
            tolerance: 1e-10,
        });
    }
    if normalization_residual > NORMALIZATION_TOLERANCE {
        return Err(Error::Consistency {
            what: "Σ D(α,α′) = 1".into(),
            value: normalization_residual,
            tolerance: NORMALIZATION_TOLERANCE,
        });
    }
    let identity = quasi_identity_defect(&matrix, &quasi);
    if identity > QUASI_IDENTITY_TOLERANCE {
        return Err(Error::Consistency {
            what: "q(α) = Σ_α′ D(α,α′)".into(),
            value: identity,
            tolerance: QUASI_IDENTITY_TOLERANCE,
        });
    }
    Ok(DecoherenceReport {
        matrix,
        measure,
        quasi,
        decoherent,
        threshold: hcfg.decoherence_threshold,
        resolution_residual,
        normalization_residual,
    })
}

/// max_α |q(α) − p(α) − Σ_{α′≠α} Re D(α,α′)|.
pub fn quasi_identity_defect(matrix: &DecoherenceMatrix, quasi: &[f64]) -> f64 {
    let n = matrix.size();
    (0..n)
        .map(|a| {
            let row: f64 = (0..n).map(|b| matrix.get(a, b).re).sum();
            (quasi[a] - row).abs()
        })
        .fold(0.0, f64::max)
}

fn current_step(psi0: &WaveFunction) -> f64 {
    let (p, w) = psi0.momentum_density();
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let mut reach = 0.0f64;
    for (p, w) in p.iter().zip(&w) {
        acc += w;
        if acc > 1e-12 * total && acc < (1.0 - 1e-12) * total {
            reach = reach.max(p.abs());
        }
    }
    let e_max = (reach * reach / (2.0 * psi0.mass())).max(1e-6);
    (0.05 / e_max).min(0.01)
}

/// ∫_{t_k}^{t_{k+1}} J(t) dt for the freely evolving state, by Simpson's rule.
pub fn quasi_probability(psi0: &WaveFunction, t_k: f64, t_k1: f64) -> f64 {
    if t_k1 <= t_k {
        return 0.0;
    }
    let h = current_step(psi0);
    let mut n = ((t_k1 - t_k) / h).ceil() as usize;
    n += n % 2;
    let n = n.max(2);
    let grid = TimeGrid::new(t_k, (t_k1 - t_k) / n as f64, n + 1).expect("valid time grid");
    current_series(psi0, &grid).integral()
}

/// ⟨ψ|θ(x̂(t_k)) − θ(x̂(t_{k+1}))|ψ⟩ = R(t_k) − R(t_{k+1}) with R(t) the
/// weight of the free state in x > 0.
pub fn quasi_probability_sandwich(psi0: &WaveFunction, t_k: f64, t_k1: f64) -> f64 {
    let theta = psi0.grid().theta_right();
    right_weight(psi0, t_k, &theta) - right_weight(psi0, t_k1, &theta)
}

fn right_weight(psi0: &WaveFunction, t: f64, theta: &[f64]) -> f64 {
    let mut a = psi0.position_amplitudes();
    free_amps(psi0.grid(), psi0.mass(), &mut a, t - psi0.time());
    weighted_norm2(&a, theta, psi0.grid().dx())
}

/// ⟨C⟩, ⟨C²⟩ and D = ⟨C⟩ − ⟨C²⟩ for C = θ(x̂(t₁)) − θ(x̂(t₂)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackflowDiagnostic {
    pub q_cross: f64,
    pub p_cross: f64,
    pub d: Complex64,
    /// q_cross < −tolerance.
    pub backflow: bool,
    /// Backflow implies |D| > p_cross.
    pub theorem_holds: bool,
}

pub fn backflow_diagnostic(
    psi0: &WaveFunction,
    t1: f64,
    t2: f64,
    hcfg: &HistoriesConfig,
) -> Result<BackflowDiagnostic> {
    check_initial(psi0)?;
    if t2 < t1 {
        return Err(Error::InvalidSpec(format!("backflow window needs t1 ≤ t2, got [{t1}, {t2}]")));
    }
    let grid = *psi0.grid();
    let theta = grid.theta_right();
    let dx = grid.dx();
    let mut a = cut_free(psi0, t1, &theta);
    free_amps(&grid, psi0.mass(), &mut a, t2 - t1);
    check_spill(&a, hcfg.spill_threshold)?;
    let b = cut_free(psi0, t2, &theta);
    let diff = sub_amps(&a, &b);
    let p_cross = inner(&diff, &diff, dx).re;
    let q_cross = quasi_probability_sandwich(psi0, t1, t2);
    let d = Complex64::new(q_cross - p_cross, 0.0);
    let backflow = q_cross < -BACKFLOW_TOLERANCE;
    Ok(BackflowDiagnostic {
        q_cross,
        p_cross,
        d,
        backflow,
        theorem_holds: !backflow || d.norm() > p_cross,
    })
}

/// d_kj = ⟨θ(−x̂_k)θ(x̂_j)⟩ and d_m² = ⟨θ(−x̂_k)θ(x̂_j)θ(−x̂_k)⟩ for t_k ≤ t_j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialProjection {
    pub d_kj: Complex64,
    pub d_m2: f64,
}

pub fn sequential_projection(
    psi0: &WaveFunction,
    t_k: f64,
    t_j: f64,
    hcfg: &HistoriesConfig,
) -> Result<SequentialProjection> {
    check_initial(psi0)?;
    if t_j < t_k {
        return Err(Error::InvalidSpec(format!("sequential projection needs t_k ≤ t_j, got {t_k}, {t_j}")));
    }
    let grid = *psi0.grid();
    let dx = grid.dx();
    let right = grid.theta_right();
    let left = grid.theta_left();
    let mut chi = cut_free(psi0, t_k, &left);
    free_amps(&grid, psi0.mass(), &mut chi, t_j - t_k);
    check_spill(&chi, hcfg.spill_threshold)?;
    let mut psi_j = psi0.position_amplitudes();
    free_amps(&grid, psi0.mass(), &mut psi_j, t_j - psi0.time());
    let d_kj = chi
        .iter()
        .zip(&psi_j)
        .zip(&right)
        .map(|((c, p), w)| c.conj() * p * *w)
        .sum::<Complex64>()
        * dx;
    Ok(SequentialProjection { d_kj, d_m2: weighted_norm2(&chi, &right, dx) })
}

/// Pulsed projections against the complex potential over the same span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsedComparison {
    /// ‖(Pe^{−iH₀ε})ⁿPψ − e^{−iH₀τ−V₀θ(−x)τ}ψ‖.
    pub discrepancy: f64,
    pub v0_epsilon: f64,
    pub v0_over_delta_h: f64,
    pub pulses: usize,
    pub pulsed_norm2: f64,
    pub potential_norm2: f64,
    /// Step used for the complex-potential evolution.
    pub dt: f64,
}

fn pulsed_amps(psi0: &WaveFunction, epsilon: f64, n: usize, spill_threshold: f64) -> Result<Vec<Complex64>> {
    let grid = *psi0.grid();
    let p = grid.theta_right();
    let kick = spectral::free_phases(&grid, psi0.mass(), epsilon);
    let mut a = psi0.position_amplitudes();
    multiply(&mut a, &p);
    for _ in 0..n {
        spectral::apply_in_momentum(&mut a, &kick);
        multiply(&mut a, &p);
        check_spill(&a, spill_threshold)?;
    }
    Ok(a)
}

/// Compares n = τ/ε sharp projections onto x ≥ 0 separated by free evolution
/// with absorbing evolution under −iV₀θ(−x) for the same total time τ.
pub fn pulsed_vs_potential(
    psi0: &WaveFunction,
    v0: f64,
    epsilon: f64,
    tau: f64,
    hcfg: &HistoriesConfig,
) -> Result<PulsedComparison> {
    check_initial(psi0)?;
    let pot = StepPotentialSpec::new(v0)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidSpec(format!("pulse spacing must be positive, got {epsilon}")));
    }
    let n = step_count(tau, epsilon)?;
    let pulsed = pulsed_amps(psi0, epsilon, n, hcfg.spill_threshold)?;
    let target = (epsilon / 4.0).min(if v0 > 0.0 { 0.05 / v0 } else { f64::INFINITY });
    let steps = (tau / target).ceil().max(1.0);
    let dt = tau / steps;
    let cfg = EvolutionConfig::new(dt)?.with_spill_threshold(hcfg.spill_threshold);
    let absorbed = evolve_step(psi0, &pot, &cfg, psi0.time() + tau)?;
    let dx = psi0.grid().dx();
    let diff = sub_amps(&pulsed, absorbed.amplitudes());
    Ok(PulsedComparison {
        discrepancy: inner(&diff, &diff, dx).re.sqrt(),
        v0_epsilon: v0 * epsilon,
        v0_over_delta_h: v0 / psi0.energy_spread(),
        pulses: n,
        pulsed_norm2: inner(&pulsed, &pulsed, dx).re,
        potential_norm2: absorbed.norm2(),
        dt,
    })
}

/// ‖(Pe^{−iH₀ε})^N Pψ‖² with ε = τ/N.
pub fn zeno_survival(psi0: &WaveFunction, tau: f64, n: usize, hcfg: &HistoriesConfig) -> Result<f64> {
    check_initial(psi0)?;
    if n == 0 {
        return Err(Error::InvalidSpec("the Zeno sequence needs at least one pulse".into()));
    }
    let a = pulsed_amps(psi0, tau / n as f64, n, hcfg.spill_threshold)?;
    Ok(inner(&a, &a, psi0.grid().dx()).re)
}
