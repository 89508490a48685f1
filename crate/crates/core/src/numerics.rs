//! Small numerical helpers shared across modules.

use num_complex::Complex64;
use libm::erfc;

/// Pairwise (cascade) summation of complex values.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Pairwise summation of reals.
pub fn pairwise_sum_real(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum_real(a) + pairwise_sum_real(b)
        }
    }
}

/// Trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior = pairwise_sum_real(&values[1..n - 1]);
            h * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// `(erf(hi) - erf(lo)) / 2`, evaluated without cancellation in the tails.
/// Infinite endpoints are allowed.
pub fn half_erf_difference(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        0.5 * (erfc_ext(lo) - erfc_ext(hi))
    } else if hi <= 0.0 {
        0.5 * (erfc_ext(-hi) - erfc_ext(-lo))
    } else {
        1.0 - 0.5 * erfc_ext(hi) - 0.5 * erfc_ext(-lo)
    }
}

fn erfc_ext(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        2.0
    } else {
        erfc(x)
    }
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + h * i as f64).collect()
        }
    }
}

/// Logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    if n > 0 {
        v[0] = lo;
        v[n - 1] = hi;
    }
    v
}
