//! Scalar error function.
//!
//! For |x| < 3 the everywhere-positive series
//! `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (2n+1)!!`
//! is summed directly; it has no cancellation, so the absolute error stays
//! near a few ulps. For |x| >= 3 the complementary function is evaluated with
//! its Laplace continued fraction and subtracted from one; `erfc` switches
//! to the continued fraction already at 1.5.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 3.0;
/// From here on the continued fraction is accurate to a few ulps, which
/// keeps `erfc` relatively accurate where `1 - erf` would cancel.
const ERFC_FRACTION_LIMIT: f64 = 1.5;
const CF_TERMS: usize = 80;

pub const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x < SERIES_LIMIT {
        erf_series(x)
    } else {
        1.0 - erfc_continued_fraction(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < ERFC_FRACTION_LIMIT {
        1.0 - erf(x)
    } else {
        erfc_continued_fraction(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    TWO_OVER_SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfc_continued_fraction(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    let mut tail = x;
    for n in (1..=CF_TERMS).rev() {
        tail = x + (n as f64 * 0.5) / tail;
    }
    (-x * x).exp() / (PI.sqrt() * tail)
}
