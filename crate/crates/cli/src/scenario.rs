//! Executes the analyses of a scenario and writes their outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use arrival_core::acceptance::{Bound, Check};
use arrival_core::classical::{classical_arrival, classical_coarse_probability, classical_survival, ClassicalPacketSpec};
use arrival_core::histories::{
    backflow_diagnostic, decoherence_matrix, pulsed_vs_potential, sequential_projection, ClassMode, HistoriesConfig,
    HistoryPartition,
};
use arrival_core::pdx::{decompose_state, laplace_edge_closed, transmitted_density_error, laplace_edge_numeric, ScatteringAmplitudes};
use arrival_core::qdyn::{absorbing_run, convolved_current, current_series};
use arrival_core::wigner::{dm_squared_phase_space, p12_phase_space, positivity_timescale, WignerForm};
use arrival_core::{Complex64, TimeGrid, TimeSeries, WaveFunction};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Analysis, HistoriesMode, ScenarioConfig};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the configured output directory.
    pub out_dir: Option<PathBuf>,
    pub threads: usize,
    /// Also compare against the independent closed-form and cross-module oracles.
    pub verify_oracles: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    /// `<=` or `>=`.
    pub bound: &'static str,
    pub pass: bool,
}

impl From<Check> for Assertion {
    fn from(c: Check) -> Self {
        let pass = c.pass();
        let bound = match c.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        Self { name: c.what, measured: c.measured, threshold: c.threshold, bound, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub kind: &'static str,
    pub error: Option<String>,
    pub summary: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub files: Vec<String>,
}

impl AnalysisReport {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.assertions.iter().all(|a| a.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub verify_oracles: bool,
    pub analyses: Vec<AnalysisReport>,
    /// Every file written besides report.json itself.
    pub manifest: Vec<ManifestEntry>,
    pub pass: bool,
}

#[derive(Default)]
struct Output {
    summary: BTreeMap<String, f64>,
    checks: Vec<Check>,
    files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn stat(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    fn series(&mut self, file: &str, quantity: &str, s: &TimeSeries) -> Result<(), CliError> {
        self.files.push((file.to_string(), series_csv(quantity, s)?));
        Ok(())
    }

    fn json(&mut self, file: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((file.to_string(), bytes));
        Ok(())
    }
}

/// `quantity,t,value` rows.
pub fn series_csv(quantity: &str, s: &TimeSeries) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "t", "value"])?;
    for (t, v) in s.times().iter().zip(&s.values) {
        w.write_record([quantity.to_string(), t.to_string(), v.to_string()])?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    psi: &'a WaveFunction,
    verify: bool,
}

fn run_analysis(ctx: &Context, analysis: &Analysis) -> Result<Output, CliError> {
    let mut out = Output::default();
    let cfg = ctx.cfg;
    let psi = ctx.psi;
    let tau = cfg.evolution.tau;
    let v0 = cfg.potential.v0;
    let hc = HistoriesConfig::default();
    match *analysis {
        Analysis::Arrival => {
            let run = absorbing_run(psi, &cfg.potential()?, &cfg.evolution()?, tau)?;
            let grid = run.survival.grid();
            let j = current_series(psi, &grid);
            let conv = convolved_current(psi, v0, &grid);
            let pi_total = run.arrival.integral();
            let n_final = run.survival.last();
            let rise = run.survival.values.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
            out.stat("survival_final", n_final);
            out.stat("integrated_arrival", pi_total);
            out.stat("integrated_current", j.integral());
            out.stat("arrival_peak_time", run.arrival.t(run.arrival.argmax().0));
            out.stat("current_peak_time", j.t(j.argmax().0));
            out.stat("current_min", j.min());
            out.checks.push(Check::at_most("|∫Π + N(τ) − 1|", (pi_total + n_final - 1.0).abs(), 1e-6));
            out.checks.push(Check::at_least("min Π", run.arrival.min(), -1e-12));
            out.checks.push(Check::at_most("largest step increase of N", rise, 1e-12));
            out.checks.push(Check::at_most(
                "‖Π − R∗J‖₁/‖Π‖₁",
                run.arrival.l1_distance(&conv)? / run.arrival.l1_norm(),
                0.03,
            ));
            if ctx.verify {
                let d = decompose_state(psi, v0, tau)?;
                let dist = d.reconstruct()?.distance(&run.final_state)?;
                out.checks.push(Check::at_most("decomposition vs split-step state, L²", dist, 0.05));
            }
            out.series("N.csv", "N", &run.survival)?;
            out.series("Pi.csv", "Pi", &run.arrival)?;
            out.series("J.csv", "J", &j)?;
            out.series("RconvJ.csv", "RconvJ", &conv)?;
        }
        Analysis::Classical { dt, sigma_p, window } => {
            let spec = cfg.single_spec().ok_or_else(|| CliError::Validation(vec!["classical needs a single Gaussian".into()]))?;
            let w0 = match sigma_p {
                Some(sp) => ClassicalPacketSpec::new(spec.q0, spec.p0, spec.sigma, sp)?.with_mass(spec.mass)?,
                None => ClassicalPacketSpec::from_quantum(&spec)?,
            };
            let times = TimeGrid::spanning(0.0, tau, dt)?;
            let n = classical_survival(&w0, v0, &times)?;
            let arr = classical_arrival(&w0, v0, &times)?;
            let pi_total = arr.absorbed_flux.integral();
            out.stat("survival_final", n.last());
            out.stat("integrated_arrival", pi_total);
            out.checks.push(Check::at_most("absorbed flux vs R∗J, max", arr.max_discrepancy, 1e-4));
            out.checks.push(Check::at_most("|∫Π + N(τ) − 1|", (pi_total + n.last() - 1.0).abs(), 1e-3));
            if let Some([t1, t2]) = window {
                let c = classical_coarse_probability(&w0, v0, t1, t2)?;
                out.stat("window_exact", c.exact);
                out.stat("window_current", c.simple);
            }
            out.series("classical_N.csv", "N", &n)?;
            out.series("classical_Pi.csv", "Pi", &arr.absorbed_flux)?;
            out.series("classical_RconvJ.csv", "RconvJ", &arr.convolution)?;
        }
        Analysis::Scattering { points } => {
            let specs = cfg.packet_specs();
            let lo = specs.iter().map(|s| s.p0 - 3.0 * s.momentum_width()).fold(f64::INFINITY, f64::min);
            let hi = specs.iter().map(|s| (s.p0 + 3.0 * s.momentum_width()).min(0.0)).fold(f64::MIN, f64::max);
            let p: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
            let amps = ScatteringAmplitudes::new(&p, v0, psi.mass())?;
            let e = psi.expectation_p().powi(2) / (2.0 * psi.mass());
            let closed = laplace_edge_closed(e, v0.max(1e-12), psi.mass());
            let numeric = laplace_edge_numeric(e, v0.max(1e-12), psi.mass());
            out.checks.push(Check::at_most(
                "edge-propagator Laplace identity, relative",
                (numeric - closed).norm() / closed.norm(),
                1e-4,
            ));
            let k = amps.p_grid.len() / 2;
            out.stat("transmission_probability_mid", amps.t_coeff[k].norm_sqr());
            out.stat("reflection_magnitude_mid", amps.r_coeff[k].norm());
            if ctx.verify {
                for (i, spec) in specs.iter().enumerate() {
                    let dp = spec.momentum_width();
                    let (a, b) = (spec.p0 - 2.0 * dp, (spec.p0 + 2.0 * dp).min(0.0));
                    let rel = transmitted_density_error(psi, &cfg.potential()?, &cfg.evolution()?, tau, a, b)?;
                    out.checks.push(Check::at_most(format!("transmitted density L1 error, packet {i}"), rel, 0.03));
                }
            }
            #[derive(Serialize)]
            struct Table {
                v0: f64,
                p: Vec<f64>,
                t: Vec<[f64; 2]>,
                r: Vec<[f64; 2]>,
            }
            out.json(
                "scattering.json",
                &Table {
                    v0,
                    p: amps.p_grid.clone(),
                    t: amps.t_coeff.iter().map(|&z| pair(z)).collect(),
                    r: amps.r_coeff.iter().map(|&z| pair(z)).collect(),
                },
            )?;
        }
        Analysis::Histories { intervals, mode } => {
            let part = HistoryPartition::new(tau, intervals)?;
            let class_mode = match mode {
                HistoriesMode::Simplified => ClassMode::Simplified,
                HistoriesMode::Exact => ClassMode::Exact { potential: cfg.potential()?, evolution: cfg.evolution()? },
            };
            let r = decoherence_matrix(psi, &part, &class_mode, &hc)?;
            let n = r.matrix.size();
            out.checks.push(Check::at_most("Hermiticity defect", r.matrix.hermiticity_defect(), 1e-12));
            out.checks.push(Check::at_most("|Σ D − 1|", r.normalization_residual, 1e-3));
            out.stat("max_off_diagonal_measure", r.max_off_diagonal_measure());
            out.stat("resolution_residual", r.resolution_residual);
            out.stat("all_decoherent", if r.all_decoherent() { 1.0 } else { 0.0 });
            for (label, p) in r.matrix.labels.iter().zip(r.probabilities()) {
                out.stat(&format!("p_{label}"), p);
            }
            #[derive(Serialize)]
            struct Matrix {
                labels: Vec<String>,
                boundaries: Vec<f64>,
                entries: Vec<Vec<[f64; 2]>>,
                measure: Vec<Vec<f64>>,
                threshold: f64,
            }
            out.json(
                "decoherence_matrix.json",
                &Matrix {
                    labels: r.matrix.labels.iter().map(|l| l.to_string()).collect(),
                    boundaries: part.boundaries(),
                    entries: (0..n).map(|a| (0..n).map(|b| pair(r.matrix.get(a, b))).collect()).collect(),
                    measure: r.measure.chunks(n).map(|row| row.to_vec()).collect(),
                    threshold: r.threshold,
                },
            )?;
        }
        Analysis::Wigner { t1, t2 } => {
            let spec = cfg.single_spec().ok_or_else(|| CliError::Validation(vec!["wigner needs a single Gaussian".into()]))?;
            let dm2 = dm_squared_phase_space(&spec, t1, t2, WignerForm::Streamed)?;
            let p12 = p12_phase_space(&spec, t1, t2, WignerForm::Streamed)?;
            out.stat("dm_squared", dm2);
            out.stat("p12", p12);
            out.checks.push(Check::at_least("d_m²", dm2, -1e-12));
            out.checks.push(Check::at_least("p12", p12, -1e-12));
            if ctx.verify {
                let h = sequential_projection(psi, t1, t2, &hc)?.d_m2;
                out.stat("dm_squared_hilbert", h);
                out.checks.push(Check::at_most("|d_m² phase space − Hilbert space|", (dm2 - h).abs(), 1e-3));
            }
        }
        Analysis::Backflow { t1, t2 } => {
            let d = backflow_diagnostic(psi, t1, t2, &hc)?;
            out.stat("q_cross", d.q_cross);
            out.stat("p_cross", d.p_cross);
            out.stat("abs_d", d.d.norm());
            out.stat("backflow", if d.backflow { 1.0 } else { 0.0 });
            out.checks.push(Check::at_least("backflow ⇒ |D| > p_cross", if d.theorem_holds { 1.0 } else { 0.0 }, 1.0));
            let scan = positivity_timescale(psi, &TimeGrid::spanning(0.0, tau, cfg.evolution.dt)?)?;
            out.stat("inverse_energy_spread", scan.threshold);
            out.stat("integrated_current_min_after_3_over_dh", scan.min_after(3.0 * scan.threshold));
            if let Some(t) = scan.onset {
                out.stat("positivity_onset", t);
            }
            out.series("intJ.csv", "intJ", &scan.integrated)?;
        }
        Analysis::Pulsed { epsilon } => {
            let r = pulsed_vs_potential(psi, v0, epsilon, tau, &hc)?;
            out.stat("discrepancy", r.discrepancy);
            out.stat("v0_epsilon", r.v0_epsilon);
            out.stat("v0_over_delta_h", r.v0_over_delta_h);
            out.stat("pulses", r.pulses as f64);
            out.stat("pulsed_norm2", r.pulsed_norm2);
            out.stat("potential_norm2", r.potential_norm2);
            out.checks.push(Check::at_most("pulsed norm²", r.pulsed_norm2, 1.0 + 1e-12));
            out.checks.push(Check::at_most("potential norm²", r.potential_norm2, 1.0 + 1e-12));
        }
    }
    Ok(out)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs every analysis, writes the outputs in configuration order, and
/// finishes with report.json. Analyses that fail are recorded and do not stop
/// the others.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let dir = opts.out_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;

    let state = cfg.initial_state();
    let n = cfg.analyses.len();
    let results: Mutex<Vec<Option<Result<Output, CliError>>>> = Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= n {
            break;
        }
        let r = match &state {
            Ok(psi) => run_analysis(&Context { cfg, psi, verify: opts.verify_oracles }, &cfg.analyses[i]),
            Err(e) => Err(CliError::Core(e.clone())),
        };
        results.lock().unwrap()[i] = Some(r);
    };
    std::thread::scope(|s| {
        for _ in 0..opts.threads.clamp(1, n.max(1)) {
            s.spawn(work);
        }
    });

    let mut analyses = Vec::with_capacity(n);
    let mut manifest = Vec::new();
    for (a, r) in cfg.analyses.iter().zip(results.into_inner().unwrap()) {
        let mut rep =
            AnalysisReport { kind: a.kind(), error: None, summary: BTreeMap::new(), assertions: Vec::new(), files: Vec::new() };
        match r.expect("every analysis runs") {
            Ok(out) => {
                rep.summary = out.summary;
                rep.assertions = out.checks.into_iter().map(Assertion::from).collect();
                for (name, bytes) in out.files {
                    manifest.push(write_file(&dir, &name, &bytes)?);
                    rep.files.push(name);
                }
            }
            Err(e) => rep.error = Some(e.to_string()),
        }
        analyses.push(rep);
    }
    let pass = analyses.iter().all(AnalysisReport::pass);
    let report = RunReport { config: cfg.clone(), verify_oracles: opts.verify_oracles, analyses, manifest, pass };
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    write_file(&dir, "report.json", &bytes)?;
    Ok(report)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<ManifestEntry, CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(ManifestEntry { file: name.to_string(), bytes: bytes.len(), sha256: hex(&Sha256::digest(bytes)) })
}
