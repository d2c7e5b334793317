//! Fundamental solutions of the Laplace and Helmholtz operators.
//!
//! Sign convention: `-ΔΦ = δ` and `(Δ + k²)Φ_k = -δ`, so in 3D
//! `Φ = 1/(4π r)`, `Φ_k = e^{ikr}/(4π r)` and in 2D
//! `Φ = ln(1/r)/(2π)`, `Φ_k = (i/4) H_0^(1)(kr)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cx, czero, expi, Cx, Real};
use crate::special::hankel1_01;

/// Which fundamental solution to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real"))]
pub enum KernelKind<T> {
    Laplace,
    Helmholtz { k: T },
}

/// Value and first two `x`-derivatives of `Φ(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval<T> {
    pub dim: usize,
    pub value: Cx<T>,
    pub gradient: [Cx<T>; 3],
    pub hessian: [[Cx<T>; 3]; 3],
    pub r: T,
}

/// Radial profile `(f, f', f'')` of the Laplace kernel at distance `r`.
#[inline]
pub fn laplace_profile<T: Real>(dim: usize, r: T) -> (T, T, T) {
    if dim == 3 {
        let c = T::one() / (T::lit(4.0) * T::PI());
        (c / r, -c / (r * r), T::lit(2.0) * c / (r * r * r))
    } else {
        let c = T::one() / (T::lit(2.0) * T::PI());
        (-c * r.ln(), -c / r, c / (r * r))
    }
}

/// Radial profile `(f, f', f'')` of the Helmholtz kernel at distance `r`.
#[inline]
pub fn helmholtz_profile<T: Real>(dim: usize, k: T, r: T) -> (Cx<T>, Cx<T>, Cx<T>) {
    if dim == 3 {
        let c = T::one() / (T::lit(4.0) * T::PI());
        let e = expi(k * r) * c;
        let kr = k * r;
        let f = e / r;
        let fp = e * cx(-T::one(), kr) / (r * r);
        let fpp = e * cx(T::lit(2.0) - kr * kr, -T::lit(2.0) * kr) / (r * r * r);
        (f, fp, fpp)
    } else {
        let kr = k * r;
        let (h0, h1) = hankel1_01(kr);
        let i4 = cx(T::zero(), T::lit(0.25));
        let f = i4 * h0;
        let fp = -i4 * h1 * k;
        // H_1' (z) = H_0(z) - H_1(z)/z
        let fpp = -i4 * (h0 - h1 / kr) * (k * k);
        (f, fp, fpp)
    }
}

/// Value of the Helmholtz kernel only; cheaper than [`helmholtz_profile`] in 2D.
#[inline]
pub fn helmholtz_value<T: Real>(dim: usize, k: T, r: T) -> Cx<T> {
    if dim == 3 {
        expi(k * r) / (T::lit(4.0) * T::PI() * r)
    } else {
        let (h0, _) = hankel1_01(k * r);
        cx(T::zero(), T::lit(0.25)) * h0
    }
}

fn assemble<T: Real>(dim: usize, x: &[T], y: &[T], r: T, f: Cx<T>, fp: Cx<T>, fpp: Cx<T>) -> KernelEval<T> {
    let mut rhat = [T::zero(); 3];
    for k in 0..dim {
        rhat[k] = (x[k] - y[k]) / r;
    }
    let mut gradient = [czero(); 3];
    let mut hessian = [[czero(); 3]; 3];
    let fpr = fp / r;
    for i in 0..dim {
        gradient[i] = fp * rhat[i];
        for j in 0..dim {
            let rr = rhat[i] * rhat[j];
            let delta = if i == j { T::one() } else { T::zero() };
            hessian[i][j] = fpp * rr + fpr * (delta - rr);
        }
    }
    KernelEval {
        dim,
        value: f,
        gradient,
        hessian,
        r,
    }
}

fn check_points<T: Real>(x: &[T], y: &[T], dim: usize) -> Result<T> {
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidInput(format!("unsupported dimension {dim}")));
    }
    for p in [x, y] {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    let r = crate::scalar::dist(x, y);
    if !(r > T::zero()) {
        return Err(Error::SingularEvaluation);
    }
    Ok(r)
}

/// Laplace fundamental solution and its analytic derivatives in `x`.
pub fn laplace_kernel<T: Real>(x: &[T], y: &[T], dim: usize) -> Result<KernelEval<T>> {
    let r = check_points(x, y, dim)?;
    let (f, fp, fpp) = laplace_profile(dim, r);
    Ok(assemble(
        dim,
        x,
        y,
        r,
        cx(f, T::zero()),
        cx(fp, T::zero()),
        cx(fpp, T::zero()),
    ))
}

/// Helmholtz fundamental solution and its analytic derivatives in `x`.
pub fn helmholtz_kernel<T: Real>(x: &[T], y: &[T], k: T, dim: usize) -> Result<KernelEval<T>> {
    if !(k > T::zero()) {
        return Err(Error::NonPositiveWavenumber(k.to_f64_lossy()));
    }
    let r = check_points(x, y, dim)?;
    let (f, fp, fpp) = helmholtz_profile(dim, k, r);
    Ok(assemble(dim, x, y, r, f, fp, fpp))
}

pub fn kernel<T: Real>(kind: KernelKind<T>, x: &[T], y: &[T], dim: usize) -> Result<KernelEval<T>> {
    match kind {
        KernelKind::Laplace => laplace_kernel(x, y, dim),
        KernelKind::Helmholtz { k } => helmholtz_kernel(x, y, k, dim),
    }
}

/// Result of [`kernel_bounds_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Smallest `C` with `|∂_j Φ| <= C / r^{m-1}` over the samples.
    pub gradient_constant: f64,
    /// Smallest `C` with `|∂_i ∂_j Φ| <= C / r^m` over the samples.
    pub hessian_constant: f64,
    pub gradient_pass: bool,
    pub hessian_pass: bool,
    pub samples: usize,
}

/// Fits the constants of the derivative bounds over `(x, y)` pairs with
/// `0 < |x - y| < 1` and compares them with `c_max`.
pub fn kernel_bounds_check<T: Real>(
    kind: KernelKind<T>,
    dim: usize,
    samples: &[(Vec<T>, Vec<T>)],
    c_max: f64,
) -> Result<BoundsReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut gc = 0.0f64;
    let mut hc = 0.0f64;
    for (x, y) in samples {
        let e = kernel(kind, x, y, dim)?;
        if e.r >= T::one() {
            return Err(Error::InvalidInput("bounds check needs |x-y| < 1".into()));
        }
        let r = e.r.to_f64_lossy();
        for i in 0..dim {
            gc = gc.max(e.gradient[i].norm().to_f64_lossy() * r.powi(dim as i32 - 1));
            for j in 0..dim {
                hc = hc.max(e.hessian[i][j].norm().to_f64_lossy() * r.powi(dim as i32));
            }
        }
    }
    Ok(BoundsReport {
        gradient_constant: gc,
        hessian_constant: hc,
        gradient_pass: gc.is_finite() && gc <= c_max,
        hessian_pass: hc.is_finite() && hc <= c_max,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplace_values() {
        let v = laplace_kernel::<f64>(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], 3)
            .unwrap()
            .value;
        assert!((v.re - 0.079_577_471_545_947_67).abs() < 1e-15 && v.im == 0.0);
        let v = laplace_kernel::<f64>(&[0.0, 1.0], &[0.0, 0.0], 2).unwrap().value;
        assert_eq!(v.re, 0.0);
        let e1 = (-1.0f64).exp();
        let v = laplace_kernel::<f64>(&[e1, 0.0], &[0.0, 0.0], 2).unwrap().value;
        assert!((v.re - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_rejected() {
        assert_eq!(
            laplace_kernel::<f64>(&[0.5, 0.5], &[0.5, 0.5], 2).unwrap_err(),
            Error::SingularEvaluation
        );
        assert!(matches!(
            helmholtz_kernel::<f64>(&[0.5, 0.5], &[0.0, 0.5], 0.0, 2),
            Err(Error::NonPositiveWavenumber(_))
        ));
    }

    #[test]
    fn helmholtz_3d_unit_distance() {
        for &k in &[0.3, 2.0, 17.0] {
            let v = helmholtz_kernel::<f64>(&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], k, 3)
                .unwrap()
                .value;
            let e = Cx::new(k.cos(), k.sin()) / (4.0 * PI);
            assert!((v - e).norm() < 1e-15);
        }
    }

    #[test]
    fn helmholtz_3d_low_frequency_limit() {
        let h = helmholtz_kernel::<f64>(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], 1e-6, 3)
            .unwrap()
            .value;
        let l = laplace_kernel::<f64>(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], 3)
            .unwrap()
            .value;
        // Re e^{ik} - 1 = O(k^2); the imaginary part is the O(k) term sin(k)/(4π)
        assert!((h.re - l.re).abs() / l.norm() <= 1e-8);
        assert!((h - l).norm() / l.norm() <= 1.01e-6);
    }

    #[test]
    fn bounds_single_pair() {
        let rep = kernel_bounds_check(KernelKind::Laplace, 3, &[(vec![0.5, 0.0, 0.0], vec![0.0; 3])], 1.0).unwrap();
        assert!(rep.gradient_pass && rep.hessian_pass);
        assert!(kernel_bounds_check::<f64>(KernelKind::Laplace, 3, &[], 1.0).is_err());
    }

    #[test]
    fn hessian_is_symmetric() {
        let e = helmholtz_kernel::<f64>(&[0.3, -0.2, 0.9], &[0.0, 0.1, 0.0], 3.0, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((e.hessian[i][j] - e.hessian[j][i]).norm() <= 1e-12 * e.hessian[i][j].norm().max(1e-300));
            }
        }
    }
}
