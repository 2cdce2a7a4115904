//! Bessel functions of the first kind, orders 0 and 1, for `x >= 0`.
//!
//! Power series below [`SERIES_LIMIT`], Hankel asymptotic expansion above.

use std::f64::consts::PI;

pub const SERIES_LIMIT: f64 = 14.0;

fn series(n: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    let q = -h * h;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        // a_k(n) / x^k
        let term = a;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
        let kk = (2 * k + 1) as f64;
        a *= (mu - kk * kk) / ((k + 1) as f64 * 8.0 * x);
    }
    let chi = x - (n as f64 * 0.5 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn bessel(n: u32, x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        series(n, ax)
    } else {
        asymptotic(n, ax)
    };
    // J_n(-x) = (-1)^n J_n(x)
    if x < 0.0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel(1, x)
}

const SCAN_START: f64 = 0.1;
const SCAN_STEP: f64 = 0.1;

/// First `n` sign changes of `f` on `x > 0`, scanned with a fixed step and
/// refined by bisection to machine precision.
pub fn positive_roots<F: Fn(f64) -> f64>(f: F, n: usize) -> Vec<f64> {
    let mut roots = Vec::with_capacity(n);
    let mut a = SCAN_START;
    let mut fa = f(a);
    let mut i = 1usize;
    while roots.len() < n {
        let b = SCAN_START + i as f64 * SCAN_STEP;
        i += 1;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(if f(lo).abs() <= f(hi).abs() { lo } else { hi });
        }
        a = b;
        fa = fb;
    }
    roots
}

/// First `n` positive zeros of `J0`.
pub fn bessel_j0_zeros(n: usize) -> Vec<f64> {
    positive_roots(bessel_j0, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt, composite trapezoid
    /// (spectrally accurate for this periodic integrand).
    fn integral(n: u32, x: f64) -> f64 {
        let m = 2000;
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
    }

    #[test]
    fn matches_integral_representation() {
        let mut x = 0.0;
        while x <= 200.0 {
            assert!((bessel_j0(x) - integral(0, x)).abs() < 1e-10, "J0({x})");
            assert!((bessel_j1(x) - integral(1, x)).abs() < 1e-10, "J1({x})");
            x += 0.37;
        }
        for x in [13.999, 14.0, 14.001] {
            assert!((bessel_j0(x) - integral(0, x)).abs() < 1e-11);
            assert!((bessel_j1(x) - integral(1, x)).abs() < 1e-11);
        }
    }

    #[test]
    fn derivative_of_j0_is_minus_j1() {
        let h = 1e-5;
        let mut x = h;
        while x <= 10.0 {
            let d = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            assert!((d + bessel_j1(x)).abs() < 1e-6);
            x += 0.01;
        }
    }

    #[test]
    fn odd_symmetry() {
        assert_eq!(bessel_j1(-2.0), -bessel_j1(2.0));
        assert_eq!(bessel_j0(-2.0), bessel_j0(2.0));
    }
}
