//! The acceptance criteria as runnable checks. Each criterion reports every
//! measured quantity against its threshold; a failing measurement is
//! reported, never hidden.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::classical::{classical_coarse_probability, ClassicalPacketSpec};
use crate::error::Result;
use crate::grid::Grid1D;
use crate::histories::{
    backflow_diagnostic, crossing_class_apply, crossing_class_exact, decoherence_matrix, pulsed_vs_potential,
    quasi_probability, quasi_probability_sandwich, sequential_projection, two_class_analysis, zeno_survival,
    ClassMode, HistoriesConfig, HistoryPartition,
};
use crate::packet::{make_gaussian, make_superposition, GaussianPacketSpec, SuperpositionTerm};
use crate::pdx::{laplace_edge_closed, laplace_edge_numeric, reflection_amplitude, transmitted_density_error};
use crate::qdyn::{arrival_series, convolved_current, current_series, evolve_free, EvolutionConfig, StepPotentialSpec};
use crate::series::TimeGrid;
use crate::wavefunction::WaveFunction;
use crate::wigner::{dm_squared_asymptotic, dm_squared_phase_space, f_of_u, p12_regimes, positivity_timescale, WignerForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One measured quantity against its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub what: String,
    pub measured: f64,
    pub threshold: f64,
    pub bound: Bound,
}

impl Check {
    pub fn at_most(what: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { what: what.into(), measured, threshold, bound: Bound::AtMost }
    }

    pub fn at_least(what: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { what: what.into(), measured, threshold, bound: Bound::AtLeast }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.threshold,
            Bound::AtLeast => self.measured >= self.threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let mark = if self.pass() { "ok" } else { "FAIL" };
        write!(f, "{mark:>4}  {} = {:.6e} ({op} {:.3e})", self.what, self.measured, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub checks: Vec<Check>,
    /// Informational values that carry no threshold.
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl CriterionReport {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(Check::pass)
    }

    /// `PASS criterion N: name` or `FAIL ...` with the failing checks.
    pub fn summary_line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let mut line = format!("{status} criterion {}: {}", self.id, self.name);
        if let Some(e) = &self.error {
            line.push_str(&format!(" [error: {e}]"));
        }
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass())
            .map(|c| format!("{} = {:.4e}", c.what, c.measured))
            .collect();
        if !failed.is_empty() {
            line.push_str(&format!(" [{}]", failed.join("; ")));
        }
        line
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary_line())?;
        for c in &self.checks {
            writeln!(f, "      {c}")?;
        }
        for n in &self.notes {
            writeln!(f, "      note: {n}")?;
        }
        Ok(())
    }
}

type Outcome = Result<(Vec<Check>, Vec<String>)>;

fn report(id: usize, name: &'static str, run: impl FnOnce() -> Outcome) -> CriterionReport {
    match run() {
        Ok((checks, notes)) => CriterionReport { id, name, checks, notes, error: None },
        Err(e) => CriterionReport { id, name, checks: Vec::new(), notes: Vec::new(), error: Some(e.to_string()) },
    }
}

pub const NAMES: [&str; 11] = [
    "convolution law",
    "scattering closed forms",
    "edge-propagator Laplace identity",
    "classical coarse-graining",
    "two-class decoherence",
    "simplified vs exact class operators",
    "quasi-probability equals current integral",
    "backflow theorem",
    "Wigner-representation pipeline",
    "Zeno trend and pulsed equivalence",
    "integrated-current positivity",
];

pub fn run(id: usize) -> Option<CriterionReport> {
    let f: fn() -> CriterionReport = match id {
        1 => convolution_law,
        2 => scattering_closed_forms,
        3 => edge_laplace_identity,
        4 => classical_coarse_graining,
        5 => two_class_decoherence,
        6 => simplified_vs_exact,
        7 => quasi_probability_current,
        8 => backflow_theorem,
        9 => wigner_pipeline,
        10 => zeno_and_pulsed,
        11 => integrated_current_positivity,
        _ => return None,
    };
    Some(f())
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=NAMES.len()).filter_map(run).collect()
}

fn standard_on(x_min: f64, x_max: f64, n: usize) -> Result<WaveFunction> {
    make_gaussian(&GaussianPacketSpec::standard(), &Grid1D::new(x_min, x_max, n)?)
}

/// Two packets at momenta −1 and −3 whose current turns negative between
/// the arrivals.
pub fn backflow_state() -> Result<WaveFunction> {
    let g = Grid1D::new(-150.0, 150.0, 8192)?;
    let terms = [
        SuperpositionTerm { weight: 0.7, phase: 0.0, spec: GaussianPacketSpec::new(20.0, -1.0, 5.0) },
        SuperpositionTerm { weight: 0.3, phase: 0.0, spec: GaussianPacketSpec::new(60.0, -3.0, 5.0) },
    ];
    make_superposition(&terms, &g)
}

/// Window of `psi`'s crossing region with the most negative θ-sandwich.
fn most_negative_window(psi: &WaveFunction, starts: &[f64], lengths: &[f64]) -> (f64, f64, f64) {
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    for &t1 in starts {
        for &len in lengths {
            let q = quasi_probability_sandwich(psi, t1, t1 + len);
            if q < worst.0 {
                worst = (q, t1, t1 + len);
            }
        }
    }
    worst
}

pub fn convolution_law() -> CriterionReport {
    report(1, NAMES[0], || {
        let psi = standard_on(-100.0, 60.0, 4096)?;
        let v0 = 0.2;
        let pi = arrival_series(&psi, &StepPotentialSpec::new(v0)?, &EvolutionConfig::new(0.005)?, 15.0)?;
        let conv = convolved_current(&psi, v0, &pi.grid());
        let rel = pi.l1_distance(&conv)? / pi.l1_norm();
        Ok((vec![Check::at_most("‖Π − R∗J‖₁/‖Π‖₁", rel, 0.05)], vec![]))
    })
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn scattering_closed_forms() -> CriterionReport {
    report(2, NAMES[1], || {
        let spec = GaussianPacketSpec::standard();
        let psi = standard_on(-100.0, 60.0, 4096)?;
        let v0 = 0.2;
        let dp = spec.momentum_width();
        let rel = transmitted_density_error(
            &psi,
            &StepPotentialSpec::new(v0)?,
            &EvolutionConfig::new(0.005)?,
            15.0,
            spec.p0 - 2.0 * dp,
            spec.p0 + 2.0 * dp,
        )?;

        let e = spec.energy();
        let ratios = [1e-3, 1e-2, 1e-1];
        let r: Vec<f64> = ratios
            .iter()
            .map(|k| reflection_amplitude(spec.p0, k * e, spec.mass).map(|r| r.norm()))
            .collect::<Result<_>>()?;
        let slope = log_slope(&ratios, &r);
        Ok((
            vec![
                Check::at_most("transmitted density L1 error over p0 ± 2Δp", rel, 0.03),
                Check::at_most("|fitted reflection exponent − 1|", (slope - 1.0).abs(), 0.1),
            ],
            vec![format!("fitted exponent {slope:.4}")],
        ))
    })
}

pub fn edge_laplace_identity() -> CriterionReport {
    report(3, NAMES[2], || {
        let mut checks = Vec::new();
        for v0 in [0.02, 0.2] {
            let closed = laplace_edge_closed(2.0, v0, 1.0);
            let numeric = laplace_edge_numeric(2.0, v0, 1.0);
            checks.push(Check::at_most(
                format!("relative error at E = 2, V0 = {v0}"),
                (numeric - closed).norm() / closed.norm(),
                1e-4,
            ));
        }
        Ok((checks, vec![]))
    })
}

pub fn classical_coarse_graining() -> CriterionReport {
    report(4, NAMES[3], || {
        let s = ClassicalPacketSpec::new(150.0, -2.0, 5.0, 0.2)?;
        let (t1, t2) = (50.0, 100.0);
        let mut checks = Vec::new();
        let mut exact = Vec::new();
        for v0 in [0.2, 0.5, 1.0] {
            let c = classical_coarse_probability(&s, v0, t1, t2)?;
            checks.push(Check::at_most(format!("|exact − ∫J| at V0 = {v0}"), (c.exact - c.simple).abs(), 0.01));
            exact.push(c.exact);
        }
        let spread = exact.iter().cloned().fold(f64::MIN, f64::max) - exact.iter().cloned().fold(f64::MAX, f64::min);
        checks.push(Check::at_most("spread of the coarse result over V0", spread, 0.01));
        Ok((checks, vec![format!("window [{t1}, {t2}], exact {exact:?}")]))
    })
}

pub fn two_class_decoherence() -> CriterionReport {
    report(5, NAMES[4], || {
        let psi = standard_on(-100.0, 60.0, 4096)?;
        let a = two_class_analysis(&psi, &StepPotentialSpec::new(0.2)?, &EvolutionConfig::new(0.0025)?, 15.0)?;
        Ok((
            vec![
                Check::at_most("|D|²/(p_c p_nc)", a.measure, 0.05),
                Check::at_most("|p_c + p_nc + 2Re D − 1|", a.sum_rule_residual.abs(), 1e-10),
                Check::at_most("|p_nc − (1 − ∫Π)|", (a.p_nc - (1.0 - a.integrated_arrival)).abs(), 1e-6),
            ],
            vec![format!("p_c = {:.5}, p_nc = {:.5}, D = {:.5}", a.p_c, a.p_nc, a.d)],
        ))
    })
}

pub fn simplified_vs_exact() -> CriterionReport {
    report(6, NAMES[5], || {
        let g = Grid1D::new(-450.0, 300.0, 16384)?;
        let psi = make_gaussian(&GaussianPacketSpec::standard(), &g)?;
        let v0 = 0.2;
        let hc = HistoriesConfig::default();
        let cfg = EvolutionConfig::new(0.01)?.with_spill_threshold(1e-3);
        let exact = crossing_class_exact(&psi, &StepPotentialSpec::new(v0)?, &cfg, 0.0, 50.0, 100.0, &hc)?;
        let simple = crossing_class_apply(&psi, 0.0, 50.0, 100.0, &hc)?;
        let dist = exact.state.distance(&simple.state)?;

        let psi = standard_on(-100.0, 60.0, 4096)?;
        let part = HistoryPartition::new(15.0, 3)?;
        let r = decoherence_matrix(&psi, &part, &ClassMode::Simplified, &hc)?;
        Ok((
            vec![
                Check::at_most("L² distance, Δ = 50 = 10/V0", dist, 0.1),
                Check::at_most("resolution of identity residual", r.resolution_residual, 1e-3),
            ],
            vec![],
        ))
    })
}

pub fn quasi_probability_current() -> CriterionReport {
    report(7, NAMES[6], || {
        let psi = standard_on(-100.0, 60.0, 4096)?;
        let whole = quasi_probability(&psi, 0.0, 15.0);
        let mut worst: f64 = 0.0;
        for (a, b) in [(0.0, 15.0), (3.0, 5.0), (4.5, 5.5), (5.0, 9.0)] {
            worst = worst.max((quasi_probability(&psi, a, b) - quasi_probability_sandwich(&psi, a, b)).abs());
        }
        Ok((
            vec![
                Check::at_most("|q([0, 15]) − 1|", (whole - 1.0).abs(), 0.02),
                Check::at_most("max |sandwich − ∫J|", worst, 1e-4),
            ],
            vec![],
        ))
    })
}

pub fn backflow_theorem() -> CriterionReport {
    report(8, NAMES[7], || {
        let hc = HistoriesConfig::default();
        let psi = backflow_state()?;
        let starts: Vec<f64> = (0..40).map(|i| 18.5 + 0.05 * i as f64).collect();
        let (_, t1, t2) = most_negative_window(&psi, &starts, &[0.1, 0.2, 0.26, 0.3]);
        let d = backflow_diagnostic(&psi, t1, t2, &hc)?;

        let single = standard_on(-100.0, 60.0, 4096)?;
        let starts: Vec<f64> = (0..29).map(|i| 0.5 * i as f64).collect();
        let (q_min, s1, s2) = most_negative_window(&single, &starts, &[0.25, 0.5, 1.0, 2.0]);
        Ok((
            vec![
                Check::at_most("backflow state q_cross", d.q_cross, 0.0),
                Check::at_least("|D| − ⟨C²⟩ on that window", d.d.norm() - d.p_cross, f64::MIN_POSITIVE),
                Check::at_least("single Gaussian min q_cross", q_min, -1e-4),
            ],
            vec![
                format!("backflow window [{t1:.2}, {t2:.2}]: q = {:.4e}, p = {:.4e}, |D| = {:.4e}", d.q_cross, d.p_cross, d.d.norm()),
                format!("single Gaussian minimum on [{s1}, {s2}]"),
            ],
        ))
    })
}

pub fn wigner_pipeline() -> CriterionReport {
    report(9, NAMES[8], || {
        let broad = GaussianPacketSpec::new(100.0, -2.0, 10.0);
        let d = dm_squared_asymptotic(&broad, 50.0, 70.0)?;
        let p12 = p12_regimes(&broad, 50.0, 100.0)?;

        let spec = GaussianPacketSpec::standard();
        let psi = make_gaussian(&spec, &Grid1D::new(-60.0, 60.0, 8192)?)?;
        let hilbert = sequential_projection(&psi, 5.0, 7.0, &HistoriesConfig::default())?.d_m2;
        let streamed = dm_squared_phase_space(&spec, 5.0, 7.0, WignerForm::Streamed)?;
        let verbatim = dm_squared_phase_space(&spec, 5.0, 7.0, WignerForm::CentreStreamed)?;
        Ok((
            vec![
                Check::at_most("|f(0) − π/2|", (f_of_u(0.0) - FRAC_PI_2).abs(), 1e-10),
                Check::at_most("|d_m² − asymptotic|/asymptotic at |p0|σ = 20", (d.numeric - d.asymptotic).abs() / d.asymptotic, 0.25),
                Check::at_most("|p12 − 0.5| at q_z/σ = 10", (p12.numeric - 0.5).abs(), 0.05),
                Check::at_most("|d_m² phase space − Hilbert space|", (streamed - hilbert).abs(), 1e-3),
            ],
            vec![
                format!("d_m² numeric {:.6e}, asymptotic {:.6e}, ratio {:.4}", d.numeric, d.asymptotic, d.numeric / d.asymptotic),
                format!("cross-representation: Hilbert {hilbert:.6}, streamed W {streamed:.6}, centre-streamed W {verbatim:.6}"),
            ],
        ))
    })
}

pub fn zeno_and_pulsed() -> CriterionReport {
    report(10, NAMES[9], || {
        let hc = HistoriesConfig::default();
        let psi = standard_on(-100.0, 60.0, 4096)?;
        let s: Vec<f64> = [16, 64, 256].iter().map(|&n| zeno_survival(&psi, 10.0, n, &hc)).collect::<Result<_>>()?;
        let steps = s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);

        let spec = GaussianPacketSpec::new(150.0, -20.0, 25.0);
        let psi = make_gaussian(&spec, &Grid1D::new(-160.0, 480.0, 32768)?)?;
        let v0 = 20.0;
        let inside = pulsed_vs_potential(&psi, v0, 0.25, 12.5, &hc)?;
        let outside = pulsed_vs_potential(&psi, v0, 0.005, 12.5, &hc)?;
        Ok((
            vec![
                Check::at_least("smallest survival increase over N = 16, 64, 256", steps, f64::MIN_POSITIVE),
                Check::at_most("survival at N = 256", s[2], 1.0),
                Check::at_most("pulsed vs potential L², V0ε = 5", inside.discrepancy, 0.1),
                Check::at_least("discrepancy ratio V0ε = 0.1 over V0ε = 5", outside.discrepancy / inside.discrepancy, 3.0),
            ],
            vec![
                format!("survival {s:?}"),
                format!("V0/ΔH = {:.2}, discrepancies {:.4} and {:.4}", inside.v0_over_delta_h, inside.discrepancy, outside.discrepancy),
            ],
        ))
    })
}

pub fn integrated_current_positivity() -> CriterionReport {
    report(11, NAMES[10], || {
        let psi = backflow_state()?;
        let j = current_series(&psi, &TimeGrid::new(15.0, 0.005, 2001)?);
        let start = (1..j.len())
            .find(|&i| j.values[i - 1] >= 0.0 && j.values[i] < 0.0)
            .ok_or_else(|| crate::error::Error::Regime("no onset of negative current in [15, 25]".into()))?;
        let psi = evolve_free(&psi, j.t(start))?;
        let scan = positivity_timescale(&psi, &TimeGrid::new(0.0, 0.005, 2001)?)?;
        let t_min = 3.0 * scan.threshold;
        Ok((
            vec![Check::at_least("min ∫₀^T J for T ≥ 3/ΔH", scan.min_after(t_min), -1e-3)],
            vec![format!(
                "clock starts at t = {:.3}; 1/ΔH = {:.3}; overall minimum {:.3e}",
                j.t(start),
                scan.threshold,
                scan.integrated.min()
            )],
        ))
    })
}
