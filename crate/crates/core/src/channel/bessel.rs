//! Zero-order Bessel function of the first kind.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 12.0;

/// `J0(x)` with absolute error below `1e-9` for all finite `x`.
///
/// Power series below `|x| = 12`, Hankel asymptotic expansion above.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series(x)
    } else {
        asymptotic(x)
    }
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn asymptotic(x: f64) -> f64 {
    // t_k = Π_{j≤k} (2j−1)² / (k! (8x)^k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= odd * odd / (k as f64 * 8.0 * x);
        if term > prev || term < 1e-18 {
            break;
        }
        prev = term;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q -= sign * term;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J0(x) = (1/π) ∫_0^π cos(x sin θ) dθ`; the trapezoid rule converges
    /// geometrically for this periodic integrand.
    fn j0_quadrature(x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.5 * (1.0 + (x * PI.sin()).cos());
        for i in 1..n {
            s += (x * (i as f64 * h).sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn agrees_with_integral_representation() {
        let mut x = 0.0;
        while x < 60.0 {
            let err = (j0(x) - j0_quadrature(x)).abs();
            assert!(err < 1e-9, "x={x} err={err}");
            x += 0.37;
        }
        for x in [11.999, 12.0, 12.001, 15.5, 30.25] {
            assert!((j0(x) - j0_quadrature(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn first_zero_and_symmetry() {
        assert_eq!(j0(0.0), 1.0);
        assert!(j0(2.404_825_557_695_773).abs() < 1e-9);
        assert!(j0(2.404826).abs() < 1e-6);
        assert_eq!(j0(-3.3), j0(3.3));
    }
}
