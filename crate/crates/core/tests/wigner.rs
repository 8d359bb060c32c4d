use std::f64::consts::{FRAC_PI_2, PI};

use arrival_core::histories::{sequential_projection, HistoriesConfig};
use arrival_core::qdyn::{evolve_free, propagate_free};
use arrival_core::quad::GaussLegendre;
use arrival_core::wigner::{
    dm_squared_asymptotic, dm_squared_phase_space, f_of_u, gaussian_wigner, gaussian_wigner_streamed,
    p12_phase_space, p12_regimes, positivity_timescale, theta_kernels, wigner_transform, P12Regime,
    WignerForm, WignerGrid,
};
use arrival_core::{make_gaussian, make_superposition, GaussianPacketSpec, Grid1D, SuperpositionTerm, TimeGrid, WaveFunction};
use proptest::prelude::*;

fn grid() -> Grid1D {
    Grid1D::new(-20.0, 30.0, 1024).unwrap()
}

fn position_density(psi: &WaveFunction, q: &[f64]) -> Vec<f64> {
    // Band-limited interpolation of |ψ|² at the lattice points by the
    // continuous Fourier sum.
    q.iter().map(|&x| psi.free_value_and_derivative(x, 0.0).0.norm_sqr()).collect()
}

fn marginal_errors(psi: &WaveFunction, w: &WignerGrid) -> (f64, f64) {
    let dq = w.q_grid[1] - w.q_grid[0];
    let rho = position_density(psi, &w.q_grid);
    let pos: f64 = w.position_marginal().iter().zip(&rho).map(|(a, b)| (a - b).abs()).sum::<f64>() * dq;
    let (p, dens) = psi.momentum_density();
    let dp = psi.grid().dp();
    let lo = p.iter().position(|&x| (x - w.p_grid[0]).abs() < 1e-9).unwrap();
    let mom_marg = w.momentum_marginal();
    let mut mom = 0.0;
    for (i, d) in dens.iter().enumerate() {
        let m = if i >= lo && i - lo < mom_marg.len() { mom_marg[i - lo] } else { 0.0 };
        mom += (m - d).abs() * dp;
    }
    (pos, mom)
}

fn superposition() -> WaveFunction {
    let terms = [
        SuperpositionTerm { weight: 0.5, phase: 0.0, spec: GaussianPacketSpec::new(1.0, -2.0, 1.0) },
        SuperpositionTerm { weight: 0.5, phase: 0.7, spec: GaussianPacketSpec::new(9.0, -1.0, 1.0) },
    ];
    make_superposition(&terms, &grid()).unwrap()
}

#[test]
fn gaussian_transform_matches_closed_form() {
    let spec = GaussianPacketSpec::new(5.0, -2.0, 1.3);
    let psi = make_gaussian(&spec, &grid()).unwrap();
    let w = wigner_transform(&psi);
    let mut worst = 0.0f64;
    for (ip, &p) in w.p_grid.iter().enumerate() {
        for (iq, &q) in w.q_grid.iter().enumerate() {
            worst = worst.max((w.at(ip, iq) - gaussian_wigner(&spec, 0.0, p, q)).abs());
        }
    }
    assert!(worst < 1e-8, "{worst}");
    assert!(w.imag_residue < 1e-10);
}

#[test]
fn dispersed_packet_follows_free_streaming() {
    let spec = GaussianPacketSpec::new(10.0, -2.0, 1.0);
    let g = Grid1D::new(-30.0, 30.0, 1024).unwrap();
    let psi = evolve_free(&make_gaussian(&spec, &g).unwrap(), 4.0).unwrap();
    let w = wigner_transform(&psi);
    let (mut streamed, mut centre) = (0.0f64, 0.0f64);
    for (ip, &p) in w.p_grid.iter().enumerate() {
        for (iq, &q) in w.q_grid.iter().enumerate() {
            streamed = streamed.max((w.at(ip, iq) - gaussian_wigner_streamed(&spec, 4.0, p, q)).abs());
            centre = centre.max((w.at(ip, iq) - gaussian_wigner(&spec, 4.0, p, q)).abs());
        }
    }
    eprintln!("dispersed packet: streamed form {streamed:.2e}, centre-streamed form {centre:.2e}");
    assert!(streamed < 1e-8);
    assert!(centre > 0.1);
}

#[test]
fn marginals_of_a_gaussian() {
    let psi = make_gaussian(&GaussianPacketSpec::new(5.0, -2.0, 1.0), &grid()).unwrap();
    let (pos, mom) = marginal_errors(&psi, &wigner_transform(&psi));
    assert!(pos < 1e-6 && mom < 1e-6, "{pos} {mom}");
}

#[test]
fn superposition_has_negative_regions() {
    let psi = superposition();
    let w = wigner_transform(&psi);
    let (pos, mom) = marginal_errors(&psi, &w);
    assert!(pos < 1e-6 && mom < 1e-6, "{pos} {mom}");
    assert!(w.imag_residue < 1e-10);
    eprintln!("superposition: min W = {:.4}, max W = {:.4}", w.min_value(), w.max_value());
    assert!(w.min_value() < -0.1);
    // The negative lobe sits between the packets.
    let (mut best, mut at) = (0.0, 0.0);
    for ip in 0..w.p_grid.len() {
        for (iq, &q) in w.q_grid.iter().enumerate() {
            if w.at(ip, iq) < best {
                best = w.at(ip, iq);
                at = q;
            }
        }
    }
    assert!(at > 1.0 && at < 7.0, "{at}");
}

#[test]
fn closed_form_peak_and_normalization() {
    let spec = GaussianPacketSpec::new(10.0, -2.0, 1.5);
    let t = 3.0;
    assert!((gaussian_wigner(&spec, t, spec.p0, spec.q0 + spec.p0 * t) - 1.0 / PI).abs() < 1e-15);
    let gl = GaussLegendre::new(20);
    let total = gl.composite(spec.p0 - 4.0, spec.p0 + 4.0, 16, |p| {
        gl.composite(-20.0, 30.0, 32, |q| gaussian_wigner(&spec, t, p, q))
    });
    assert!((total - 1.0).abs() < 1e-10, "{total}");
}

fn si_by_quadrature(u: f64) -> f64 {
    let gl = GaussLegendre::new(20);
    let panels = (u.abs().ceil() as usize).max(1) * 2;
    gl.composite(0.0, u, panels, |t| if t == 0.0 { 1.0 } else { t.sin() / t })
}

#[test]
fn f_matches_independent_quadrature_and_limits() {
    assert_eq!(f_of_u(0.0), FRAC_PI_2);
    for u in [0.1, 1.0, 3.9, 4.1, 7.5, 20.0, -2.5, -11.0] {
        let oracle = FRAC_PI_2 - si_by_quadrature(u);
        assert!((f_of_u(u) - oracle).abs() < 1e-10, "u={u}");
    }
    assert!((f_of_u(-50.0) - PI).abs() <= 0.03);
    assert!(f_of_u(50.0).abs() <= 0.03);
    // Oscillation about 1/u: f(u) ≈ cos(u)/u for large u.
    assert!((f_of_u(50.0) - (50.0f64).cos() / 50.0).abs() < 1e-3);
}

#[test]
fn dm_squared_leading_order() {
    // |p0|σ = 20, E0Δt = 40, packet centred on the origin at t1.
    let spec = GaussianPacketSpec::new(100.0, -2.0, 10.0);
    let r = dm_squared_asymptotic(&spec, 50.0, 70.0).unwrap();
    eprintln!("d_m²: {r:?}, ratio {:.4}", r.numeric / r.asymptotic);
    // With u ≈ 2|p0||q| the half-line integral is ∫f(u)du/(2|p0|) = 1/(2|p0|).
    let leading = 1.0 / ((2.0 * PI.powi(3)).sqrt() * 2.0 * spec.p0.abs() * spec.sigma);
    assert!((r.numeric - leading).abs() / leading < 0.05);
    assert!((r.full - r.numeric).abs() / r.numeric < 0.05, "{r:?}");
}

#[test]
fn dm_squared_asymptotic_scaling() {
    let a = dm_squared_asymptotic(&GaussianPacketSpec::new(100.0, -2.0, 10.0), 50.0, 70.0).unwrap();
    let b = dm_squared_asymptotic(&GaussianPacketSpec::new(200.0, -2.0, 20.0), 100.0, 120.0).unwrap();
    assert!((b.asymptotic - 0.5 * a.asymptotic).abs() < 1e-15);
    assert!(b.numeric < a.numeric);
}

#[test]
fn regime_violations_are_rejected() {
    assert!(dm_squared_asymptotic(&GaussianPacketSpec::new(100.0, -2.0, 10.0), 40.0, 60.0).is_err());
    assert!(dm_squared_asymptotic(&GaussianPacketSpec::new(4.0, -2.0, 1.0), 2.0, 20.0).is_err());
    assert!(dm_squared_asymptotic(&GaussianPacketSpec::new(100.0, -2.0, 10.0), 50.0, 50.5).is_err());
}

#[test]
fn p12_regimes_and_decoherence_ratio() {
    let spec = GaussianPacketSpec::new(100.0, -2.0, 10.0);
    // q_z/σ = 10.
    let long = p12_regimes(&spec, 50.0, 100.0).unwrap();
    assert_eq!(long.regime, P12Regime::LongInterval);
    assert!((long.numeric - 0.5).abs() <= 0.05, "{long:?}");
    // q_z/σ = 0.1 needs E0Δt = 1, outside the regime.
    assert!(p12_regimes(&spec, 50.0, 50.5).is_err());
    let short_spec = GaussianPacketSpec::new(400.0, -100.0, 10.0);
    let short = p12_regimes(&short_spec, 4.0, 4.01).unwrap();
    assert_eq!(short.regime, P12Regime::ShortInterval);
    let ratio = short.q_z / short_spec.sigma;
    let first_order = ratio / (2.0 * PI).sqrt();
    eprintln!("short interval: {short:?}, q_z/σ estimate {first_order:.4}");
    assert!(short.first_term > 0.5 * first_order && short.first_term < 2.0 * first_order);
    for (s, t2) in [(GaussianPacketSpec::new(100.0, -2.0, 10.0), 55.0), (short_spec, 4.1)] {
        let t1 = s.q0 / s.p0.abs();
        let p = p12_regimes(&s, t1, t2).unwrap();
        let d = dm_squared_asymptotic(&s, t1, t2).unwrap();
        assert!(s.energy() * (t2 - t1) >= 10.0);
        assert!(p.numeric / d.numeric >= 10.0, "{} vs {}", p.numeric, d.numeric);
    }
}

#[test]
fn phase_space_integrals_match_hilbert_space() {
    let spec = GaussianPacketSpec::standard();
    let g = Grid1D::new(-60.0, 60.0, 8192).unwrap();
    let psi = make_gaussian(&spec, &g).unwrap();
    let (t1, t2) = (5.0, 7.0);
    let hilbert = sequential_projection(&psi, t1, t2, &HistoriesConfig::default()).unwrap().d_m2;
    let phase = dm_squared_phase_space(&spec, t1, t2, WignerForm::Streamed).unwrap();
    let frozen = dm_squared_phase_space(&spec, t1, t2, WignerForm::CentreStreamed).unwrap();
    eprintln!("d_m²: Hilbert {hilbert:.6}, streamed {phase:.6}, centre-streamed {frozen:.6}");
    assert!((hilbert - phase).abs() < 1e-3);

    // p12 = ‖θ(−x) e^{−iH0(t2−t1)} θ(x) ψ(t1)‖².
    let right = g.theta_right();
    let left = g.theta_left();
    let cut = evolve_free(&psi, t1).unwrap().multiplied(&right);
    let moved = propagate_free(&cut, t2, 1.0).unwrap();
    let p12_hilbert: f64 = moved.amplitudes().iter().zip(&left).map(|(z, w)| w * z.norm_sqr()).sum::<f64>() * g.dx();
    let p12_phase = p12_phase_space(&spec, t1, t2, WignerForm::Streamed).unwrap();
    eprintln!("p12: Hilbert {p12_hilbert:.6}, streamed {p12_phase:.6}");
    assert!((p12_hilbert - p12_phase).abs() < 1e-3);
}

#[test]
fn single_gaussian_has_positive_integrated_current() {
    let psi = make_gaussian(&GaussianPacketSpec::standard(), &Grid1D::new(-50.0, 50.0, 2048).unwrap()).unwrap();
    let scan = positivity_timescale(&psi, &TimeGrid::new(0.0, 0.01, 1501).unwrap()).unwrap();
    assert_eq!(scan.integrated.values[0], 0.0);
    assert!(scan.integrated.min() >= -1e-10, "{}", scan.integrated.min());
    assert!((scan.threshold - 1.0 / psi.energy_spread()).abs() < 1e-12);
}

#[test]
fn backflow_state_turns_positive_after_the_zeno_time() {
    let g = Grid1D::new(-150.0, 150.0, 8192).unwrap();
    let terms = [
        SuperpositionTerm { weight: 0.7, phase: 0.0, spec: GaussianPacketSpec::new(20.0, -1.0, 5.0) },
        SuperpositionTerm { weight: 0.3, phase: 0.0, spec: GaussianPacketSpec::new(60.0, -3.0, 5.0) },
    ];
    let psi = make_superposition(&terms, &g).unwrap();
    // Start the clock at a zero crossing of J into negative values.
    let j = arrival_core::qdyn::current_series(&psi, &TimeGrid::new(15.0, 0.005, 2001).unwrap());
    let start = (1..j.len()).find(|&i| j.values[i - 1] >= 0.0 && j.values[i] < 0.0).unwrap();
    let psi = evolve_free(&psi, j.t(start)).unwrap();
    let scan = positivity_timescale(&psi, &TimeGrid::new(0.0, 0.005, 2001).unwrap()).unwrap();
    eprintln!("threshold {:.3}, min {:.3e}, min after 3/ΔH {:.3e}", scan.threshold, scan.integrated.min(), scan.min_after(3.0 * scan.threshold));
    assert!(scan.integrated.min() < 0.0);
    assert!(scan.min_after(3.0 * scan.threshold) >= -1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn f_reflection_symmetry(u in -80.0f64..80.0) {
        prop_assert!((f_of_u(u) + f_of_u(-u) - PI).abs() < 1e-10);
    }

    #[test]
    fn kernels_have_disjoint_support(p in -5.0f64..5.0, q in -10.0f64..10.0, dt in 0.1f64..10.0) {
        let (wp, wd) = theta_kernels(p, q, dt, 1.0).unwrap();
        if q != 0.0 {
            prop_assert_eq!(wp * wd, 0.0);
        }
    }

    #[test]
    fn transform_is_real_with_exact_marginals(
        q1 in -5.0f64..5.0, q2 in 5.0f64..15.0, p1 in -3.0f64..0.0, p2 in -3.0f64..0.0, phase in 0.0f64..6.0,
    ) {
        let terms = [
            SuperpositionTerm { weight: 0.4, phase: 0.0, spec: GaussianPacketSpec::new(q1.max(0.5), p1.min(-0.2), 1.0) },
            SuperpositionTerm { weight: 0.6, phase, spec: GaussianPacketSpec::new(q2, p2.min(-0.2), 1.5) },
        ];
        let psi = make_superposition(&terms, &Grid1D::new(-20.0, 30.0, 512).unwrap()).unwrap();
        let w = wigner_transform(&psi);
        prop_assert!(w.imag_residue < 1e-10);
        let (pos, mom) = marginal_errors(&psi, &w);
        prop_assert!(pos < 1e-6 && mom < 1e-6);
    }
}
