use arrival_core::classical::{
    classical_arrival, classical_coarse_probability, classical_current, classical_evolve_density,
    classical_survival, evolved_density, exposure_time, ClassicalPacketSpec, PhaseSpaceDensity,
};
use arrival_core::quad::GaussLegendre;
use arrival_core::TimeGrid;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn spec() -> ClassicalPacketSpec {
    ClassicalPacketSpec::new(10.0, -2.0, 1.0, 0.1).unwrap()
}

#[test]
fn free_streaming_conserves_mass() {
    let times = TimeGrid::new(0.0, 2.5, 9).unwrap();
    let n = classical_survival(&spec(), 0.0, &times).unwrap();
    for v in &n.values {
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}

#[test]
fn survival_before_arrival_and_long_after() {
    let s = spec();
    let early = classical_survival(&s, 1.0, &TimeGrid::new(0.0, 0.5, 3).unwrap()).unwrap();
    assert!(early.values.iter().all(|v| (v - 1.0).abs() < 1e-6));
    let late = classical_survival(&s, 1.0, &TimeGrid::new(25.0, 5.0, 2).unwrap()).unwrap();
    assert!(late.last() < 1e-3, "{}", late.last());
}

#[test]
fn survival_is_non_increasing() {
    let n = classical_survival(&spec(), 0.3, &TimeGrid::new(0.0, 0.25, 41).unwrap()).unwrap();
    for w in n.values.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn point_mass_decays_after_arrival() {
    let s = ClassicalPacketSpec::new(10.0, -2.0, 1e-3, 1e-4).unwrap();
    let v0 = 0.4;
    let times = TimeGrid::new(6.0, 1.0, 4).unwrap();
    let n = classical_survival(&s, v0, &times).unwrap();
    for (t, v) in times.times().iter().zip(&n.values) {
        let expect = (-2.0 * v0 * (t - s.arrival_time())).exp();
        assert!((v - expect).abs() < 1e-4, "t={t}: {v} vs {expect}");
    }
}

#[test]
fn evolution_on_grid_is_non_negative_and_bounded() {
    let s = spec();
    let p: Vec<f64> = (0..81).map(|i| -2.5 + i as f64 * 0.0125).collect();
    let q: Vec<f64> = (0..161).map(|i| -10.0 + i as f64 * 0.125).collect();
    let d = classical_evolve_density(&s, 0.5, 8.0, &p, &q).unwrap();
    assert!(d.min_value() >= 0.0);
    assert!(d.total_mass() <= 1.0 + 1e-6);
}

#[test]
fn arrival_forms_agree() {
    let times = TimeGrid::new(0.0, 0.02, 751).unwrap();
    let run = classical_arrival(&spec(), 0.2, &times).unwrap();
    assert!(run.max_discrepancy <= 1e-4, "{}", run.max_discrepancy);
    assert!(run.absorbed_flux.values.iter().all(|&v| v >= -1e-12));
}

#[test]
fn zero_potential_gives_no_arrivals() {
    let times = TimeGrid::new(0.0, 0.5, 21).unwrap();
    let run = classical_arrival(&spec(), 0.0, &times).unwrap();
    assert!(run.absorbed_flux.values.iter().all(|&v| v == 0.0));
}

#[test]
fn current_integrates_to_one() {
    let times = TimeGrid::new(0.0, 0.01, 1501).unwrap();
    let j = classical_current(&spec(), &times).unwrap();
    assert!((j.integral() - 1.0).abs() < 1e-6, "{}", j.integral());
}

#[test]
fn coarse_probability_regimes() {
    let s = ClassicalPacketSpec::new(150.0, -2.0, 5.0, 0.2).unwrap();
    for v0 in [0.2, 0.5, 1.0] {
        let c = classical_coarse_probability(&s, v0, 50.0, 100.0).unwrap();
        assert!((c.exact - c.simple).abs() < 0.01, "V0={v0}: {c:?}");
    }
    let z = classical_coarse_probability(&s, 0.5, 70.0, 70.0).unwrap();
    assert_eq!((z.exact, z.simple), (0.0, 0.0));
    // A window shorter than 1/V0 loses a visible fraction at its far edge.
    let c = classical_coarse_probability(&spec(), 0.2, 4.0, 6.0).unwrap();
    assert!(c.simple - c.exact > 0.1, "{c:?}");
}

#[test]
fn coarse_exact_equals_integrated_arrival_density() {
    let s = spec();
    let v0 = 0.7;
    let times = TimeGrid::new(0.0, 0.01, 801).unwrap();
    let run = classical_arrival(&s, v0, &times).unwrap();
    let i1 = 400;
    let i2 = 600;
    let integrated = run.convolution.integral_between(i1, i2);
    let c = classical_coarse_probability(&s, v0, times.t(i1), times.t(i2)).unwrap();
    assert!((integrated - c.exact).abs() < 1e-5, "{integrated} vs {}", c.exact);
}

#[test]
fn monte_carlo_trajectories_match_exact_solution() {
    let s = spec();
    let v0 = 0.3;
    let t = 6.5;
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let nq = Normal::new(s.q0, s.sigma_q).unwrap();
    let np = Normal::new(s.p0, s.sigma_p).unwrap();
    let edges: Vec<f64> = (0..=16).map(|i| -6.0 + i as f64).collect();
    let mut sum = [0.0; 16];
    let mut sum2 = [0.0; 16];
    for _ in 0..n {
        let q0 = nq.sample(&mut rng);
        let p = np.sample(&mut rng);
        let q = q0 + p * t;
        let w = (-2.0 * v0 * exposure_time(p, q, t, 1.0)).exp();
        if q >= edges[0] && q < edges[16] {
            let b = (q - edges[0]).floor() as usize;
            sum[b] += w;
            sum2[b] += w * w;
        }
    }
    let gl = GaussLegendre::new(16);
    let sup = s.support();
    for b in 0..16 {
        let mc = sum[b] / n as f64;
        let var = (sum2[b] / n as f64 - mc * mc) / n as f64;
        let exact: f64 = gl.composite(sup.p_lo, sup.p_hi, 60, |p| {
            gl.composite(edges[b], edges[b + 1], 24, |q| evolved_density(&s, v0, t, p, q))
        });
        let tol = 3.0 * var.sqrt() + 1e-4;
        assert!((mc - exact).abs() <= tol, "bin {b}: mc {mc} exact {exact} tol {tol}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exposure_is_bounded(p in -5.0f64..5.0, q in -50.0f64..50.0, t in 0.0f64..30.0) {
        let e = exposure_time(p, q, t, 1.0);
        prop_assert!((0.0..=t).contains(&e));
        if q > 0.0 && p < 0.0 {
            prop_assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn arrival_density_is_non_negative(v0 in 0.05f64..2.0, q0 in 5.0f64..15.0) {
        let s = ClassicalPacketSpec::new(q0, -2.0, 1.0, 0.1).unwrap();
        let times = TimeGrid::new(0.0, 0.05, 201).unwrap();
        let run = classical_arrival(&s, v0, &times).unwrap();
        prop_assert!(run.convolution.min() >= -1e-12);
        prop_assert!(run.max_discrepancy <= 1e-4);
    }
}
