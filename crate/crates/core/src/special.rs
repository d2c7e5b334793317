//! Integer-order Bessel, Neumann and Hankel functions of real argument, and
//! their spherical counterparts.
//!
//! `J_n` comes from Miller's downward recurrence normalised by
//! `J_0 + 2 sum J_2k = 1`. `Y_0` and `Y_1` come from Neumann's expansion in
//! even-order `J`s for moderate arguments and from the Hankel asymptotic
//! expansion above [`asymptotic_threshold`]; higher `Y_n` follow by the
//! (stable) upward recurrence. The spherical `j_l` uses Miller's algorithm
//! normalised against `sin x / x`.

use crate::scalar::{cx, Cx, Real};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Argument above which the Hankel asymptotic expansion is used for the
/// order 0/1 seeds. Chosen so that the smallest term of the expansion sits
/// well below machine epsilon for both `f32` and `f64`.
pub fn asymptotic_threshold<T: Real>() -> T {
    T::lit(25.0)
}

fn decimal_digits<T: Real>() -> f64 {
    -T::epsilon().to_f64_lossy().log10()
}

fn miller_start(nmax: usize, x: f64, digits: f64) -> usize {
    let n0 = (nmax as f64).max(x.ceil());
    let m = n0 + 2.0 * digits + (4.0 * digits * n0.max(1.0)).sqrt();
    let m = m.ceil() as usize + 2;
    m + (m & 1)
}

/// `J_0(x), ..., J_nmax(x)` for `x >= 0`.
pub fn bessel_j_seq<T: Real>(nmax: usize, x: T) -> Vec<T> {
    let mut out = vec![T::zero(); nmax + 1];
    if x == T::zero() {
        out[0] = T::one();
        return out;
    }
    let xa = x.abs();
    let xf = xa.to_f64_lossy();
    if xa >= asymptotic_threshold::<T>() && (nmax as f64) + 5.0 < xf {
        // Upward recurrence is stable while n < x.
        let (j0, _) = hankel_asymptotic(0, xa);
        let (j1, _) = hankel_asymptotic(1, xa);
        out[0] = j0;
        if nmax >= 1 {
            out[1] = j1;
        }
        for n in 1..nmax {
            out[n + 1] = T::from_usize_lossy(2 * n) / xa * out[n] - out[n - 1];
        }
    } else {
        out = miller_j(nmax, xa, miller_start(nmax, xf, decimal_digits::<T>()));
    }
    if x < T::zero() {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Miller's algorithm; returns orders `0..=nmax` normalised by the
/// Neumann sum rule. `start` must be even and `> nmax`.
fn miller_j<T: Real>(nmax: usize, x: T, start: usize) -> Vec<T> {
    let big = T::max_value().sqrt().sqrt();
    let mut seq = vec![T::zero(); start + 2];
    seq[start + 1] = T::zero();
    seq[start] = T::min_positive_value().sqrt().sqrt();
    let two_over_x = T::lit(2.0) / x;
    for n in (1..=start).rev() {
        let next = T::from_usize_lossy(n) * two_over_x * seq[n] - seq[n + 1];
        seq[n - 1] = next;
        if next.abs() > big {
            let s = T::one() / big;
            for v in seq[n - 1..].iter_mut() {
                *v = *v * s;
            }
        }
    }
    let mut sum = seq[0];
    let mut k = 2;
    while k <= start {
        sum = sum + T::lit(2.0) * seq[k];
        k += 2;
    }
    let scale = T::one() / sum;
    seq.truncate(nmax + 1);
    for v in seq.iter_mut() {
        *v = *v * scale;
    }
    seq
}

/// Hankel's large-argument expansion; returns `(J_nu(x), Y_nu(x))`.
fn hankel_asymptotic<T: Real>(nu: usize, x: T) -> (T, T) {
    let mu = T::lit(4.0 * (nu * nu) as f64);
    let eight_x = T::lit(8.0) * x;
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut prev_abs = T::infinity();
    for k in 1..200usize {
        let odd = T::from_usize_lossy(2 * k - 1);
        term = term * (mu - odd * odd) / (T::from_usize_lossy(k) * eight_x);
        let a = term.abs();
        if a > prev_abs {
            break;
        }
        prev_abs = a;
        // a_k enters P (even k) or Q (odd k) with alternating signs.
        match k % 4 {
            0 => p = p + term,
            1 => q = q + term,
            2 => p = p - term,
            _ => q = q - term,
        }
        if a < T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    let chi = x - (T::from_usize_lossy(nu) * T::lit(0.5) + T::lit(0.25)) * T::PI();
    let amp = (T::lit(2.0) / (T::PI() * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// `Y_0(x)` and `Y_1(x)` for `x > 0`.
fn neumann_seeds<T: Real>(x: T) -> (T, T) {
    if x >= asymptotic_threshold::<T>() {
        let (_, y0) = hankel_asymptotic(0, x);
        let (_, y1) = hankel_asymptotic(1, x);
        return (y0, y1);
    }
    let xf = x.to_f64_lossy();
    let start = miller_start(1, xf, decimal_digits::<T>());
    let j = miller_j(start, x, start);
    let two_pi = T::lit(2.0) / T::PI();
    let log_term = (x * T::lit(0.5)).ln() + T::lit(EULER_GAMMA);
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut k = 1;
    while 2 * k < start {
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        let kk = T::from_usize_lossy(k);
        s0 = s0 + sign * j[2 * k] / kk;
        s1 = s1 + sign * (j[2 * k - 1] - j[2 * k + 1]) / kk;
        k += 1;
    }
    let y0 = two_pi * (log_term * j[0] - T::lit(2.0) * s0);
    let y1 = two_pi * (log_term * j[1] - j[0] / x + s1);
    (y0, y1)
}

/// `Y_0(x), ..., Y_nmax(x)` for `x > 0`.
pub fn bessel_y_seq<T: Real>(nmax: usize, x: T) -> Vec<T> {
    assert!(x > T::zero(), "Y_n requires a positive argument");
    let (y0, y1) = neumann_seeds(x);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(y0);
    if nmax >= 1 {
        out.push(y1);
    }
    for n in 1..nmax {
        let next = T::from_usize_lossy(2 * n) / x * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

pub fn bessel_j<T: Real>(n: usize, x: T) -> T {
    bessel_j_seq(n, x)[n]
}

pub fn bessel_y<T: Real>(n: usize, x: T) -> T {
    bessel_y_seq(n, x)[n]
}

/// `dJ_n/dx`.
pub fn bessel_j_prime<T: Real>(n: usize, x: T) -> T {
    let j = bessel_j_seq(n + 1, x);
    if n == 0 {
        -j[1]
    } else {
        (j[n - 1] - j[n + 1]) * T::lit(0.5)
    }
}

/// Hankel function of the first kind, `H_n^(1)(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1<T: Real>(n: usize, x: T) -> Cx<T> {
    let j = bessel_j_seq(n, x);
    let y = bessel_y_seq(n, x);
    cx(j[n], y[n])
}

/// `H_0^(1)(x)` and `H_1^(1)(x)` in one pass.
pub fn hankel1_01<T: Real>(x: T) -> (Cx<T>, Cx<T>) {
    let j = bessel_j_seq(1, x);
    let (y0, y1) = neumann_seeds(x);
    (cx(j[0], y0), cx(j[1], y1))
}

/// Spherical Bessel `j_0(x), ..., j_lmax(x)` for `x >= 0`.
pub fn sph_bessel_j_seq<T: Real>(lmax: usize, x: T) -> Vec<T> {
    let mut out = vec![T::zero(); lmax + 1];
    if x == T::zero() {
        out[0] = T::one();
        return out;
    }
    let xf = x.to_f64_lossy();
    let start = miller_start(lmax, xf, decimal_digits::<T>());
    let big = T::max_value().sqrt().sqrt();
    let mut seq = vec![T::zero(); start + 2];
    seq[start] = T::min_positive_value().sqrt().sqrt();
    for l in (1..=start).rev() {
        let next = T::from_usize_lossy(2 * l + 1) / x * seq[l] - seq[l + 1];
        seq[l - 1] = next;
        if next.abs() > big {
            let s = T::one() / big;
            for v in seq[l - 1..].iter_mut() {
                *v = *v * s;
            }
        }
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    // Normalise against whichever closed form is better conditioned here.
    let scale = if j0.abs() >= j1.abs() { j0 / seq[0] } else { j1 / seq[1] };
    for (o, v) in out.iter_mut().zip(seq) {
        *o = v * scale;
    }
    out
}

/// Spherical Neumann `y_0(x), ..., y_lmax(x)` for `x > 0`.
pub fn sph_bessel_y_seq<T: Real>(lmax: usize, x: T) -> Vec<T> {
    assert!(x > T::zero(), "y_l requires a positive argument");
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(-c / x);
    if lmax >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for l in 1..lmax {
        let next = T::from_usize_lossy(2 * l + 1) / x * out[l] - out[l - 1];
        out.push(next);
    }
    out
}

pub fn sph_bessel_j<T: Real>(l: usize, x: T) -> T {
    sph_bessel_j_seq(l, x)[l]
}

/// `dj_l/dx`, using `j_l' = j_{l-1} - (l+1)/x j_l` (and `j_0' = -j_1`).
pub fn sph_bessel_j_prime<T: Real>(l: usize, x: T) -> T {
    let j = sph_bessel_j_seq(l + 1, x);
    if l == 0 {
        -j[1]
    } else if x == T::zero() {
        if l == 1 {
            T::one() / T::lit(3.0)
        } else {
            T::zero()
        }
    } else {
        j[l - 1] - T::from_usize_lossy(l + 1) / x * j[l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_zero_is_a_root() {
        let z = 2.404_825_557_695_773_f64;
        assert!(bessel_j(0, z).abs() < 1e-15);
    }

    #[test]
    fn wronskian_holds_across_crossover() {
        for &x in &[0.3_f64, 4.0, 19.0, 24.99, 25.01, 60.0] {
            let j = bessel_j_seq(6, x);
            let y = bessel_y_seq(6, x);
            for n in 0..6 {
                let w = j[n + 1] * y[n] - j[n] * y[n + 1];
                let expect = 2.0 / (std::f64::consts::PI * x);
                assert!((w - expect).abs() < 1e-13 * expect.max(1.0), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn negative_argument_parity() {
        let a = bessel_j_seq(3, 1.7_f64);
        let b = bessel_j_seq(3, -1.7_f64);
        assert_eq!(a[0], b[0]);
        assert_eq!(a[3], -b[3]);
    }

    #[test]
    fn spherical_small_order_closed_forms() {
        // the closed form cancels catastrophically for small x
        for &x in &[0.5_f64, 3.0, 17.0] {
            let j = sph_bessel_j_seq(2, x);
            let (s, c) = x.sin_cos();
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            assert!((j[2] - j2).abs() < 1e-12 * j2.abs().max(1e-3), "x={x}");
        }
    }

    #[test]
    fn spherical_small_argument_series() {
        let x = 0.01_f64;
        let j = sph_bessel_j_seq(2, x);
        let series = x * x / 15.0 * (1.0 - x * x / 14.0 + x.powi(4) / 504.0);
        assert!((j[2] - series).abs() < 1e-13 * series, "{} vs {}", j[2], series);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let x = 3.3_f64;
        let h = 1e-5;
        for n in 0..4 {
            let fd = (bessel_j(n, x + h) - bessel_j(n, x - h)) / (2.0 * h);
            assert!((bessel_j_prime(n, x) - fd).abs() < 1e-9);
            let fd = (sph_bessel_j(n, x + h) - sph_bessel_j(n, x - h)) / (2.0 * h);
            assert!((sph_bessel_j_prime(n, x) - fd).abs() < 1e-9);
        }
    }

    #[test]
    fn single_precision_is_usable() {
        let v = bessel_j(1, 2.0_f32);
        assert!((v - 0.576_724_8).abs() < 1e-6);
        let y = bessel_y(0, 30.0_f32);
        assert!((y - (-0.117_295_1)).abs() < 1e-5);
    }
}
