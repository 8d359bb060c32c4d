use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::wavefunction::WaveFunction;

/// Edge amplitude allowed for a freshly constructed packet.
pub const PACKET_EDGE_THRESHOLD: f64 = 1e-8;

/// Gaussian packet ψ(x) = (2πσ²)^{-1/4} exp(−(x−q0)²/4σ² + i p0 x), ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacketSpec {
    pub q0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub mass: f64,
}

impl GaussianPacketSpec {
    pub fn new(q0: f64, p0: f64, sigma: f64) -> Self {
        Self { q0, p0, sigma, mass: 1.0 }
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    /// q0 = 10, p0 = −2, σ = 1, m = 1.
    pub fn standard() -> Self {
        Self::new(10.0, -2.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.q0 > 0.0) {
            problems.push(format!("q0 = {} must be positive", self.q0));
        }
        if !(self.p0 < 0.0) {
            problems.push(format!("p0 = {} must be negative", self.p0));
        }
        if !(self.sigma > 0.0) {
            problems.push(format!("sigma = {} must be positive", self.sigma));
        }
        if !(self.mass > 0.0) {
            problems.push(format!("mass = {} must be positive", self.mass));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(problems.join("; ")))
        }
    }

    /// Classical arrival time of the packet centre, m q0/|p0|.
    pub fn arrival_time(&self) -> f64 {
        self.mass * self.q0 / self.p0.abs()
    }

    /// Zeno time m σ/|p0|.
    pub fn zeno_time(&self) -> f64 {
        self.mass * self.sigma / self.p0.abs()
    }

    pub fn energy(&self) -> f64 {
        self.p0 * self.p0 / (2.0 * self.mass)
    }

    pub fn momentum_width(&self) -> f64 {
        1.0 / (2.0 * self.sigma)
    }

    /// Position width after free evolution for time t.
    pub fn width_at(&self, t: f64) -> f64 {
        (self.sigma.powi(2) + (t / (2.0 * self.mass * self.sigma)).powi(2)).sqrt()
    }

    pub fn amplitude(&self, x: f64) -> Complex64 {
        let norm = (2.0 * PI * self.sigma * self.sigma).powf(-0.25);
        let re = -(x - self.q0).powi(2) / (4.0 * self.sigma * self.sigma);
        Complex64::from_polar(norm * re.exp(), self.p0 * x)
    }
}

pub fn make_gaussian(spec: &GaussianPacketSpec, grid: &Grid1D) -> Result<WaveFunction> {
    spec.validate()?;
    if !grid.contains(spec.q0) {
        return Err(Error::InvalidSpec(format!(
            "q0 = {} lies outside the grid [{}, {})",
            spec.q0,
            grid.x_min(),
            grid.x_max()
        )));
    }
    let amps = grid.positions().into_iter().map(|x| spec.amplitude(x)).collect();
    let psi = WaveFunction::from_parts(*grid, amps, 0.0, spec.mass);
    psi.check_spill(PACKET_EDGE_THRESHOLD)?;
    Ok(psi)
}

/// One term of a packet superposition; `weight` is the intended probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionTerm {
    pub weight: f64,
    pub phase: f64,
    pub spec: GaussianPacketSpec,
}

/// Builds Σ √wⱼ e^{iφⱼ} ψⱼ and renormalizes the sum on the grid.
pub fn make_superposition(terms: &[SuperpositionTerm], grid: &Grid1D) -> Result<WaveFunction> {
    if terms.is_empty() {
        return Err(Error::InvalidSpec("superposition needs at least one term".into()));
    }
    let mass = terms[0].spec.mass;
    if terms.iter().any(|t| t.spec.mass != mass) {
        return Err(Error::InvalidSpec("superposed packets must share one mass".into()));
    }
    if terms.iter().any(|t| !(t.weight >= 0.0)) {
        return Err(Error::InvalidSpec("superposition weights must be non-negative".into()));
    }
    let mut acc = WaveFunction::zeros(*grid, 0.0, mass);
    for t in terms {
        let psi = make_gaussian(&t.spec, grid)?;
        let c = Complex64::from_polar(t.weight.sqrt(), t.phase);
        for (a, b) in acc.amplitudes_mut().iter_mut().zip(psi.amplitudes()) {
            *a += c * b;
        }
    }
    let n = acc.norm2();
    if n <= 0.0 {
        return Err(Error::InvalidSpec("superposition has zero norm".into()));
    }
    Ok(acc.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
}
