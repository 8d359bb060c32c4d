use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Edge, Error, Result};
use crate::grid::Grid1D;
use crate::spectral;

/// Default bound on |ψ| near the grid ends.
pub const DEFAULT_SPILL_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    /// Amplitudes sampled on `Grid1D::momenta()` (ascending).
    Momentum,
}

/// Complex amplitudes on a grid at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
    time: f64,
    mass: f64,
    representation: Representation,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, amplitudes: Vec<Complex64>, time: f64, mass: f64) -> Result<Self> {
        Self::with_representation(grid, amplitudes, time, mass, Representation::Position)
    }

    pub fn with_representation(
        grid: Grid1D,
        amplitudes: Vec<Complex64>,
        time: f64,
        mass: f64,
        representation: Representation,
    ) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidSpec(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { grid, amplitudes, time, mass, representation })
    }

    pub fn zeros(grid: Grid1D, time: f64, mass: f64) -> Self {
        Self {
            grid,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.n_points()],
            time,
            mass,
            representation: Representation::Position,
        }
    }

    pub(crate) fn from_parts(grid: Grid1D, amplitudes: Vec<Complex64>, time: f64, mass: f64) -> Self {
        debug_assert_eq!(amplitudes.len(), grid.n_points());
        Self { grid, amplitudes, time, mass, representation: Representation::Position }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    fn measure(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.dp(),
        }
    }

    pub fn norm2(&self) -> f64 {
        norm2(self)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|z| *z *= c);
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("states live on different grids".into()));
        }
        if self.representation != other.representation {
            return Err(Error::GridMismatch("states are in different representations".into()));
        }
        let tol = 1e-9 * self.time.abs().max(other.time.abs()).max(1.0);
        if (self.time - other.time).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "timestamps differ: {} vs {}",
                self.time, other.time
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a = f(*a, *b);
        }
        Ok(out)
    }

    /// Pointwise multiplication by real position-space weights.
    pub fn multiplied(&self, weights: &[f64]) -> Self {
        let mut out = self.clone();
        for (z, w) in out.amplitudes.iter_mut().zip(weights) {
            *z *= *w;
        }
        out
    }

    /// L² distance ‖a − b‖.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm2().sqrt())
    }

    /// Largest |ψ| within the outer band of each grid end.
    pub fn edge_amplitudes(&self) -> (f64, f64) {
        edge_amplitudes(&self.amplitudes)
    }

    pub fn check_spill(&self, threshold: f64) -> Result<()> {
        if self.representation != Representation::Position {
            return Ok(());
        }
        check_spill(&self.amplitudes, threshold)
    }

    /// Momentum amplitudes in FFT order, whatever the current representation.
    pub(crate) fn fft_momentum_amplitudes(&self) -> Vec<Complex64> {
        match self.representation {
            Representation::Position => spectral::to_momentum(&self.grid, &self.amplitudes),
            Representation::Momentum => spectral::sorted_to_fft(&self.amplitudes),
        }
    }

    pub(crate) fn position_amplitudes(&self) -> Vec<Complex64> {
        match self.representation {
            Representation::Position => self.amplitudes.clone(),
            Representation::Momentum => {
                spectral::to_position(&self.grid, &spectral::sorted_to_fft(&self.amplitudes))
            }
        }
    }

    pub fn momentum_representation(&self) -> Self {
        momentum_representation(self)
    }

    pub fn position_representation(&self) -> Self {
        Self { amplitudes: self.position_amplitudes(), representation: Representation::Position, ..self.clone() }
    }

    pub fn expectation_x(&self) -> f64 {
        let psi = self.position_amplitudes();
        let dx = self.grid.dx();
        psi.iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * self.grid.x(i))
            .sum::<f64>()
            * dx
    }

    pub fn expectation_p(&self) -> f64 {
        let (p, w) = self.momentum_density();
        p.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>() * self.grid.dp()
    }

    /// Momentum grid (ascending) with |ψ̃(p)|².
    pub fn momentum_density(&self) -> (Vec<f64>, Vec<f64>) {
        let phi = spectral::fft_to_sorted(&self.fft_momentum_amplitudes());
        (self.grid.momenta(), phi.iter().map(|z| z.norm_sqr()).collect())
    }

    /// Position variance ⟨x²⟩ − ⟨x⟩², normalized by the state norm.
    pub fn variance_x(&self) -> f64 {
        let psi = self.position_amplitudes();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (i, z) in psi.iter().enumerate() {
            let x = self.grid.x(i);
            let w = z.norm_sqr();
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        }
        m2 / m0 - (m1 / m0).powi(2)
    }

    /// Energy spread ΔH of the free Hamiltonian, from the momentum density.
    pub fn energy_spread(&self) -> f64 {
        let (p, w) = self.momentum_density();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (p, w) in p.iter().zip(&w) {
            let e = p * p / (2.0 * self.mass);
            m0 += w;
            m1 += w * e;
            m2 += w * e * e;
        }
        (m2 / m0 - (m1 / m0).powi(2)).max(0.0).sqrt()
    }

    /// Norm² carried by positive momenta.
    pub fn positive_momentum_weight(&self) -> f64 {
        let (p, w) = self.momentum_density();
        let dp = self.grid.dp();
        p.iter().zip(&w).filter(|(p, _)| **p > 0.0).map(|(_, w)| w * dp).sum()
    }

    /// Norm² in x < 0 with the half-weight origin convention.
    pub fn left_weight(&self) -> f64 {
        let psi = self.position_amplitudes();
        psi.iter()
            .zip(self.grid.theta_left())
            .map(|(z, w)| w * z.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    /// Free-evolution amplitude and spatial derivative at `x`, `t` after `self.time`,
    /// evaluated as a continuous Fourier sum over the momentum grid.
    pub fn free_value_and_derivative(&self, x: f64, elapsed: f64) -> (Complex64, Complex64) {
        let phi = self.fft_momentum_amplitudes();
        free_point_sum(&self.grid, &phi, self.mass, x, elapsed)
    }
}

pub(crate) fn edge_amplitudes(amps: &[Complex64]) -> (f64, f64) {
    let n = amps.len();
    let band = (n / 128).max(4).min(n / 2);
    let left = amps[..band].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let right = amps[n - band..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    (left, right)
}

pub(crate) fn check_spill(amps: &[Complex64], threshold: f64) -> Result<()> {
    let (left, right) = edge_amplitudes(amps);
    if left > threshold {
        return Err(Error::Spill { edge: Edge::Left, amplitude: left, threshold });
    }
    if right > threshold {
        return Err(Error::Spill { edge: Edge::Right, amplitude: right, threshold });
    }
    Ok(())
}

pub(crate) fn free_point_sum(
    grid: &Grid1D,
    phi_fft: &[Complex64],
    mass: f64,
    x: f64,
    elapsed: f64,
) -> (Complex64, Complex64) {
    let c = grid.dp() / (2.0 * PI).sqrt();
    let mut val = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(0.0, 0.0);
    for (p, a) in grid.fft_momenta().into_iter().zip(phi_fft) {
        let z = a * Complex64::from_polar(1.0, p * x - p * p * elapsed / (2.0 * mass));
        val += z;
        der += Complex64::new(0.0, p) * z;
    }
    (val * c, der * c)
}

pub fn norm2(psi: &WaveFunction) -> f64 {
    psi.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * psi.measure()
}

/// ⟨a|b⟩ = Σ a*ᵢ bᵢ dx.
pub fn overlap(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    a.check_compatible(b)?;
    let s: Complex64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.measure())
}

/// Unitary change to the momentum basis, amplitudes ordered by ascending p.
pub fn momentum_representation(psi: &WaveFunction) -> WaveFunction {
    let phi = spectral::fft_to_sorted(&psi.fft_momentum_amplitudes());
    WaveFunction { amplitudes: phi, representation: Representation::Momentum, ..psi.clone() }
}
