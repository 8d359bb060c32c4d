//! FFT plumbing shared by the propagators.
//!
//! Momentum-space arrays live in FFT order internally; the public
//! momentum representation is sorted by ascending momentum.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid1D;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized forward DFT in place.
pub(crate) fn fft(buf: &mut [Complex64]) {
    plans(buf.len()).0.process(buf);
}

/// Inverse DFT in place, including the 1/n factor.
pub(crate) fn ifft(buf: &mut [Complex64]) {
    let n = buf.len();
    plans(n).1.process(buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= s);
}

/// Factors turning a raw DFT into samples of the continuous transform
/// ψ̃(p) = (2π)^{-1/2} ∫dx e^{-ipx} ψ(x), in FFT order.
pub(crate) fn continuum_factors(grid: &Grid1D) -> Vec<Complex64> {
    let scale = grid.dx() / (2.0 * PI).sqrt();
    grid.fft_momenta()
        .into_iter()
        .map(|p| Complex64::from_polar(scale, -p * grid.x_min()))
        .collect()
}

/// Position samples to continuous momentum amplitudes (FFT order).
pub(crate) fn to_momentum(grid: &Grid1D, psi: &[Complex64]) -> Vec<Complex64> {
    let mut buf = psi.to_vec();
    fft(&mut buf);
    for (z, f) in buf.iter_mut().zip(continuum_factors(grid)) {
        *z *= f;
    }
    buf
}

/// Continuous momentum amplitudes (FFT order) back to position samples.
pub(crate) fn to_position(grid: &Grid1D, phi: &[Complex64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = phi
        .iter()
        .zip(continuum_factors(grid))
        .map(|(z, f)| z / f)
        .collect();
    ifft(&mut buf);
    buf
}

pub(crate) fn fft_to_sorted<T: Copy>(v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    out.rotate_left(v.len() / 2);
    out
}

pub(crate) fn sorted_to_fft<T: Copy>(v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    out.rotate_right(v.len() / 2);
    out
}

/// Multiplies the spectrum of `psi` by `phase(p)` in place (FFT order momenta).
pub(crate) fn apply_in_momentum(psi: &mut [Complex64], factors: &[Complex64]) {
    fft(psi);
    for (z, f) in psi.iter_mut().zip(factors) {
        *z *= f;
    }
    ifft(psi);
}

/// e^{-i p² t / 2m} in FFT order.
pub(crate) fn free_phases(grid: &Grid1D, mass: f64, t: f64) -> Vec<Complex64> {
    grid.fft_momenta()
        .into_iter()
        .map(|p| Complex64::from_polar(1.0, -p * p * t / (2.0 * mass)))
        .collect()
}
