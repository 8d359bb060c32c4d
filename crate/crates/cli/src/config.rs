//! Scenario configuration: TOML text in, validated `ScenarioConfig` out.

use std::collections::BTreeSet;
use std::path::PathBuf;

use arrival_core::histories::HistoryPartition;
use arrival_core::qdyn::{EvolutionConfig, StepPotentialSpec};
use arrival_core::{make_gaussian, make_superposition, GaussianPacketSpec, Grid1D, SuperpositionTerm, WaveFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub packet: PacketConfig,
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    pub evolution: EvolutionSection,
    pub analyses: Vec<Analysis>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PacketConfig {
    Gaussian { q0: f64, p0: f64, sigma: f64, mass: f64 },
    Superposition { mass: f64, terms: Vec<TermConfig> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub weight: f64,
    #[serde(default)]
    pub phase: f64,
    pub q0: f64,
    pub p0: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default = "default_v0")]
    pub v0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_spill")]
    pub spill_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoriesMode {
    #[default]
    Simplified,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Analysis {
    /// N, Π, J and R∗J on the evolution grid.
    Arrival,
    /// The classical absorbing analogue of a single Gaussian.
    Classical {
        #[serde(default = "default_classical_dt")]
        dt: f64,
        /// Momentum spread; 1/(2σ) when absent.
        #[serde(default)]
        sigma_p: Option<f64>,
        #[serde(default)]
        window: Option<[f64; 2]>,
    },
    /// t(p) and r(p) across the packet's momentum support.
    Scattering {
        #[serde(default = "default_points")]
        points: usize,
    },
    Histories {
        #[serde(default = "default_intervals")]
        intervals: usize,
        #[serde(default)]
        mode: HistoriesMode,
    },
    Wigner { t1: f64, t2: f64 },
    Backflow { t1: f64, t2: f64 },
    Pulsed { epsilon: f64 },
}

impl Analysis {
    pub fn kind(&self) -> &'static str {
        match self {
            Analysis::Arrival => "arrival",
            Analysis::Classical { .. } => "classical",
            Analysis::Scattering { .. } => "scattering",
            Analysis::Histories { .. } => "histories",
            Analysis::Wigner { .. } => "wigner",
            Analysis::Backflow { .. } => "backflow",
            Analysis::Pulsed { .. } => "pulsed",
        }
    }
}

fn default_v0() -> f64 {
    0.2
}
fn default_x_min() -> f64 {
    -100.0
}
fn default_x_max() -> f64 {
    60.0
}
fn default_n_points() -> usize {
    4096
}
fn default_dt() -> f64 {
    0.005
}
fn default_tau() -> f64 {
    15.0
}
fn default_spill() -> f64 {
    1e-4
}
fn default_classical_dt() -> f64 {
    0.05
}
fn default_points() -> usize {
    65
}
fn default_intervals() -> usize {
    3
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { v0: default_v0() }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { x_min: default_x_min(), x_max: default_x_max(), n_points: default_n_points() }
    }
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self { dt: default_dt(), tau: default_tau(), spill_threshold: default_spill() }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPacket {
    q0: Option<f64>,
    p0: Option<f64>,
    sigma: Option<f64>,
    mass: Option<f64>,
    terms: Option<Vec<TermConfig>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    packet: RawPacket,
    #[serde(default)]
    potential: PotentialConfig,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    evolution: EvolutionSection,
    #[serde(default)]
    analyses: Vec<Analysis>,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
}

/// Parses and validates; every violated invariant is listed in the error.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut problems = Vec::new();
    let std = GaussianPacketSpec::standard();
    let mass = raw.packet.mass.unwrap_or(std.mass);
    let packet = match raw.packet.terms {
        Some(terms) => {
            if raw.packet.q0.is_some() || raw.packet.p0.is_some() || raw.packet.sigma.is_some() {
                problems.push("packet: give either q0/p0/sigma or terms, not both".to_string());
            }
            PacketConfig::Superposition { mass, terms }
        }
        None => PacketConfig::Gaussian {
            q0: raw.packet.q0.unwrap_or(std.q0),
            p0: raw.packet.p0.unwrap_or(std.p0),
            sigma: raw.packet.sigma.unwrap_or(std.sigma),
            mass,
        },
    };
    let cfg = ScenarioConfig {
        packet,
        potential: raw.potential,
        grid: raw.grid,
        evolution: raw.evolution,
        analyses: raw.analyses,
        output_dir: raw.output_dir,
    };
    problems.extend(cfg.violations());
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Validation(problems))
    }
}

impl ScenarioConfig {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.analyses.is_empty() {
            out.push("analyses: at least one analysis is required".to_string());
        }
        let mut seen = BTreeSet::new();
        for a in &self.analyses {
            if !seen.insert(a.kind()) {
                out.push(format!("analyses: `{}` appears more than once", a.kind()));
            }
        }
        match &self.packet {
            PacketConfig::Gaussian { .. } => {}
            PacketConfig::Superposition { terms, .. } => {
                if terms.is_empty() {
                    out.push("packet.terms: at least one term is required".to_string());
                }
                let total: f64 = terms.iter().map(|t| t.weight).sum();
                if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                    out.push(format!("packet.terms: weights sum to {total}, not 1"));
                }
                for a in &self.analyses {
                    if matches!(a, Analysis::Classical { .. } | Analysis::Wigner { .. }) {
                        out.push(format!("analyses: `{}` needs a single Gaussian packet", a.kind()));
                    }
                }
            }
        }
        for (i, spec) in self.packet_specs().iter().enumerate() {
            if let Err(e) = spec.validate() {
                out.push(format!("packet[{i}]: {e}"));
            }
        }
        if let Err(e) = Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.n_points) {
            out.push(format!("grid: {e}"));
        }
        if let Err(e) = StepPotentialSpec::new(self.potential.v0) {
            out.push(format!("potential: {e}"));
        }
        if let Err(e) = EvolutionConfig::new(self.evolution.dt) {
            out.push(format!("evolution: {e}"));
        }
        if !(self.evolution.tau > 0.0 && self.evolution.tau.is_finite()) {
            out.push(format!("evolution.tau: must be positive, got {}", self.evolution.tau));
        }
        if !(self.evolution.spill_threshold > 0.0) {
            out.push("evolution.spill_threshold: must be positive".to_string());
        }
        for a in &self.analyses {
            match *a {
                Analysis::Classical { dt, sigma_p, window } => {
                    if let Some(sp) = sigma_p {
                        if !(sp > 0.0) {
                            out.push(format!("classical.sigma_p: must be positive, got {sp}"));
                        }
                    }
                    if !(dt > 0.0) {
                        out.push(format!("classical.dt: must be positive, got {dt}"));
                    }
                    if let Some([t1, t2]) = window {
                        if !(0.0 <= t1 && t1 <= t2) {
                            out.push(format!("classical.window: need 0 ≤ t1 ≤ t2, got [{t1}, {t2}]"));
                        }
                    }
                }
                Analysis::Scattering { points } if points < 2 => {
                    out.push("scattering.points: need at least 2".to_string());
                }
                Analysis::Histories { intervals, .. } => {
                    if let Err(e) = HistoryPartition::new(self.evolution.tau, intervals) {
                        out.push(format!("histories: {e}"));
                    }
                }
                Analysis::Wigner { t1, t2 } | Analysis::Backflow { t1, t2 } if !(0.0 <= t1 && t1 <= t2) => {
                    out.push(format!("{}: need 0 ≤ t1 ≤ t2, got [{t1}, {t2}]", a.kind()));
                }
                Analysis::Pulsed { epsilon } if !(epsilon > 0.0) => {
                    out.push(format!("pulsed.epsilon: must be positive, got {epsilon}"));
                }
                _ => {}
            }
        }
        out
    }

    pub fn packet_specs(&self) -> Vec<GaussianPacketSpec> {
        match &self.packet {
            PacketConfig::Gaussian { q0, p0, sigma, mass } => {
                vec![GaussianPacketSpec::new(*q0, *p0, *sigma).with_mass(*mass)]
            }
            PacketConfig::Superposition { mass, terms } => terms
                .iter()
                .map(|t| GaussianPacketSpec::new(t.q0, t.p0, t.sigma).with_mass(*mass))
                .collect(),
        }
    }

    /// The packet when it is a single Gaussian.
    pub fn single_spec(&self) -> Option<GaussianPacketSpec> {
        match self.packet {
            PacketConfig::Gaussian { .. } => self.packet_specs().pop(),
            PacketConfig::Superposition { .. } => None,
        }
    }

    pub fn grid(&self) -> arrival_core::Result<Grid1D> {
        Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.n_points)
    }

    pub fn potential(&self) -> arrival_core::Result<StepPotentialSpec> {
        StepPotentialSpec::new(self.potential.v0)
    }

    pub fn evolution(&self) -> arrival_core::Result<EvolutionConfig> {
        Ok(EvolutionConfig::new(self.evolution.dt)?.with_spill_threshold(self.evolution.spill_threshold))
    }

    pub fn initial_state(&self) -> arrival_core::Result<WaveFunction> {
        let grid = self.grid()?;
        match &self.packet {
            PacketConfig::Gaussian { .. } => make_gaussian(&self.packet_specs()[0], &grid),
            PacketConfig::Superposition { terms, .. } => {
                let terms: Vec<SuperpositionTerm> = terms
                    .iter()
                    .zip(self.packet_specs())
                    .map(|(t, spec)| SuperpositionTerm { weight: t.weight, phase: t.phase, spec })
                    .collect();
                make_superposition(&terms, &grid)
            }
        }
    }
}
