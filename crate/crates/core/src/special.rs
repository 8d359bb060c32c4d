//! Sine integral and the kernel f(u) = π/2 − Si(u).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

const SERIES_LIMIT: f64 = 4.0;

/// Si(x) = ∫₀ˣ sin t / t dt.
pub fn sine_integral(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        si_series(ax)
    } else {
        let (f, g) = auxiliary_fg(ax);
        FRAC_PI_2 - f * ax.cos() - g * ax.sin()
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// f(u) = ∫ᵤ^∞ sin y / y dy = π/2 − Si(u).
pub fn f_of_u(u: f64) -> f64 {
    if u == 0.0 {
        return FRAC_PI_2;
    }
    let au = u.abs();
    if au > SERIES_LIMIT {
        // Avoid the cancellation in π/2 − Si for large positive u.
        let (f, g) = auxiliary_fg(au);
        let tail = f * au.cos() + g * au.sin();
        return if u > 0.0 { tail } else { std::f64::consts::PI - tail };
    }
    FRAC_PI_2 - sine_integral(u)
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0u32;
    loop {
        k += 1;
        let n = (2 * k) as f64;
        term *= -x2 / (n * (n + 1.0));
        let add = term / (n + 1.0);
        sum += add;
        if add.abs() < 1e-17 * sum.abs() || k > 60 {
            break;
        }
    }
    sum
}

/// Auxiliary functions with Si(x) = π/2 − f(x) cos x − g(x) sin x for x > 0,
/// from the continued fraction of E₁(ix) = e^{−ix}(g − i f).
pub fn auxiliary_fg(x: f64) -> (f64, f64) {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (-h.im, h.re)
}
