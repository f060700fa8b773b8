//! Composite Simpson quadrature with grid doubling.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_INTERVALS: usize = 2048;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
const MAX_INTERVALS: usize = 1 << 21;

/// Simpson weights (including the `h/3` factor) for `intervals` equal
/// sub-intervals of `[a, b]`. `intervals` must be even.
pub fn simpson_weights(a: f64, b: f64, intervals: usize) -> Vec<f64> {
    debug_assert!(intervals >= 2 && intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    (0..=intervals)
        .map(|i| {
            let w = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

pub fn grid(a: f64, b: f64, intervals: usize) -> Vec<f64> {
    let h = (b - a) / intervals as f64;
    (0..=intervals).map(|i| a + h * i as f64).collect()
}

fn simpson_fixed<F>(f: &F, a: f64, b: f64, intervals: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + h * i as f64) * w;
    }
    acc * (h / 3.0)
}

/// Integrates a complex function over `[a, b]`, doubling the number of
/// intervals from `MIN_INTERVALS` until successive estimates agree to `tol`.
pub fn integrate_complex<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::domain(format!("bad integration range [{a}, {b}]")));
    }
    let mut n = MIN_INTERVALS;
    let mut prev = simpson_fixed(&f, a, b, n);
    while n < MAX_INTERVALS {
        n *= 2;
        let next = simpson_fixed(&f, a, b, n);
        let diff = (next - prev).norm();
        if diff < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "range [{a}, {b}], {n} intervals, last change above {tol}"
    )))
}

pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, tol).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_integral() {
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-12).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_length() {
        let w = simpson_weights(-1.0, 3.0, 64);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_range_rejected() {
        assert!(integrate(|x| x, 1.0, 1.0, 1e-8).is_err());
    }
}
