//! Transmission eigenvalues of a disk/ball with constant index by
//! separation of variables.
//!
//! For angular order `ℓ` the interior field `J_ℓ(k√n r)` and the free field
//! `J_ℓ(kr)` share Cauchy data on `r = R` exactly when
//!
//! ```text
//! d_ℓ(k) = J_ℓ(k√n R) k J_ℓ'(kR) - J_ℓ(kR) k√n J_ℓ'(k√n R) = 0
//! ```
//!
//! (spherical `j_ℓ` in 3D). Roots are bracketed on a scan and bisected.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{bessel_j_seq, sph_bessel_j_seq};
use crate::waves::{FourierDensity, IncidentWave};

/// Smallest accepted `|n - 1|`.
pub const MIN_CONTRAST: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct RadialMedium<T> {
    pub dim: usize,
    pub radius: T,
    pub n: T,
}

impl<T: Real> RadialMedium<T> {
    pub fn new(dim: usize, radius: T, n: T) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInput(format!("unsupported dimension {dim}")));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidShape(format!("radius must be positive, got {radius}")));
        }
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidMedium(format!("index must be positive, got {n}")));
        }
        if (n - T::one()).abs() < T::lit(MIN_CONTRAST) {
            return Err(Error::InvalidMedium(format!("|n - 1| below {MIN_CONTRAST}")));
        }
        Ok(RadialMedium { dim, radius, n })
    }

    /// Largest scan step that cannot hold two roots of one order.
    pub fn max_step(&self) -> T {
        T::PI() / (T::lit(4.0) * self.radius * self.n.sqrt().max(T::one()))
    }
}

/// `(value, derivative)` of `J_ℓ` (2D) or `j_ℓ` (3D).
fn radial_function<T: Real>(dim: usize, l: usize, x: T) -> (T, T) {
    if dim == 3 {
        let s = sph_bessel_j_seq(l + 1, x);
        let d = if l == 0 {
            -s[1]
        } else if x == T::zero() {
            if l == 1 {
                T::one() / T::lit(3.0)
            } else {
                T::zero()
            }
        } else {
            s[l - 1] - T::from_usize_lossy(l + 1) / x * s[l]
        };
        (s[l], d)
    } else {
        let s = bessel_j_seq(l + 1, x);
        // J_ℓ' = (J_{ℓ-1} - J_{ℓ+1}) / 2, J_0' = -J_1
        let d = if l == 0 {
            -s[1]
        } else {
            (s[l - 1] - s[l + 1]) * T::lit(0.5)
        };
        (s[l], d)
    }
}

/// Determinant and its scale `k (|J(a) J'(b)| + √n |J(b) J'(a)|)` without
/// validating the contrast.
pub fn te_determinant_raw<T: Real>(dim: usize, radius: T, n: T, l: usize, k: T) -> (T, T) {
    let sn = n.sqrt();
    let (ja, dja) = radial_function(dim, l, k * sn * radius);
    let (jb, djb) = radial_function(dim, l, k * radius);
    let d = ja * k * djb - jb * k * sn * dja;
    let scale = k * ((ja * djb).abs() + sn * (jb * dja).abs());
    (d, scale)
}

/// `d_ℓ(k)`.
pub fn te_determinant<T: Real>(medium: &RadialMedium<T>, l: usize, k: T) -> Result<T> {
    if !(k > T::zero()) {
        return Err(Error::NonPositiveWavenumber(k.to_f64_lossy()));
    }
    Ok(te_determinant_raw(medium.dim, medium.radius, medium.n, l, k).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct TeRoot<T> {
    pub order: usize,
    pub k: T,
    /// `|d_ℓ(k)|` at the polished root.
    pub residual: T,
    /// Local scale of the determinant used to judge the residual.
    pub scale: T,
    pub bracket: [T; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct TransmissionSpectrum<T> {
    pub medium: RadialMedium<T>,
    pub k_min: T,
    pub k_max: T,
    pub step: T,
    pub max_order: usize,
    /// Sorted by `k`, then order.
    pub roots: Vec<TeRoot<T>>,
}

impl<T: Real> TransmissionSpectrum<T> {
    pub fn roots_of_order(&self, l: usize) -> Vec<TeRoot<T>> {
        self.roots.iter().filter(|r| r.order == l).cloned().collect()
    }

    /// CSV rows `order, k, residual`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "order,k,residual")?;
        for r in &self.roots {
            writeln!(out, "{},{},{:e}", r.order, r.k, r.residual.to_f64_lossy())?;
        }
        Ok(())
    }
}

fn bisect<T: Real>(m: &RadialMedium<T>, l: usize, mut a: T, mut b: T) -> TeRoot<T> {
    let bracket = [a, b];
    let f = |k: T| te_determinant_raw(m.dim, m.radius, m.n, l, k).0;
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = (a + b) * T::lit(0.5);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            a = mid;
            b = mid;
            break;
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let k = if f(a).abs() <= f(b).abs() { a } else { b };
    let (d, scale) = te_determinant_raw(m.dim, m.radius, m.n, l, k);
    TeRoot {
        order: l,
        k,
        residual: d.abs(),
        scale,
        bracket,
    }
}

/// Scans `[k_min, k_max]` with the given step for sign changes of each
/// `d_ℓ`, `ℓ <= max_order`, and polishes every bracket by bisection.
pub fn te_spectrum<T: Real>(
    medium: &RadialMedium<T>,
    max_order: usize,
    k_min: T,
    k_max: T,
    step: T,
) -> Result<TransmissionSpectrum<T>> {
    if !(k_min > T::zero()) || !(k_max > k_min) {
        return Err(Error::InvalidInput(format!(
            "empty wavenumber range [{k_min}, {k_max}]"
        )));
    }
    if !(step > T::zero()) || step > medium.max_step() {
        return Err(Error::InvalidInput(format!(
            "scan step {step} exceeds the bound {}",
            medium.max_step()
        )));
    }
    let count = ((k_max - k_min) / step).ceil().to_f64_lossy() as usize;
    let ks: Vec<T> = (0..=count)
        .map(|i| (k_min + step * T::from_usize_lossy(i)).min(k_max))
        .collect();
    let mut roots = Vec::new();
    for l in 0..=max_order {
        let vals: Vec<T> = ks
            .iter()
            .map(|&k| te_determinant_raw(medium.dim, medium.radius, medium.n, l, k).0)
            .collect();
        for i in 0..ks.len() - 1 {
            let (a, b) = (vals[i], vals[i + 1]);
            if a == T::zero() {
                let (_, scale) = te_determinant_raw(medium.dim, medium.radius, medium.n, l, ks[i]);
                roots.push(TeRoot {
                    order: l,
                    k: ks[i],
                    residual: T::zero(),
                    scale,
                    bracket: [ks[i], ks[i]],
                });
            } else if (a < T::zero()) != (b < T::zero()) && b != T::zero() {
                roots.push(bisect(medium, l, ks[i], ks[i + 1]));
            }
        }
    }
    roots.sort_by(|a, b| a.k.partial_cmp(&b.k).expect("finite roots").then(a.order.cmp(&b.order)));
    Ok(TransmissionSpectrum {
        medium: *medium,
        k_min,
        k_max,
        step,
        max_order,
        roots,
    })
}

/// Herglotz wave with density `e^{iℓθ}`, whose field is
/// `i^ℓ J_ℓ(kr) e^{iℓθ}`: the free part of the order-`ℓ` eigenpair.
pub fn eigen_incident<T: Real>(medium: &RadialMedium<T>, l: usize, k_root: T) -> Result<IncidentWave<T>> {
    if medium.dim != 2 {
        return Err(Error::InvalidInput("eigen densities are two-dimensional".into()));
    }
    let (d, scale) = te_determinant_raw(medium.dim, medium.radius, medium.n, l, k_root);
    if !(k_root > T::zero()) || d.abs() > T::lit(1e-6) * scale {
        return Err(Error::InvalidInput(format!(
            "k = {k_root} is not a root of the order-{l} determinant (|d| = {})",
            d.abs()
        )));
    }
    IncidentWave::herglotz(k_root, FourierDensity::harmonic(l as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contrast_floor_enforced() {
        assert!(RadialMedium::new(2, 1.0f64, 1.0 + 1e-8).is_err());
        assert!(RadialMedium::new(2, 1.0f64, 4.0).is_ok());
        assert!(RadialMedium::new(2, 0.0f64, 4.0).is_err());
    }

    #[test]
    fn determinant_degenerates_at_unit_index() {
        for k in [1.0, 2.0, 3.5, 5.0] {
            let (d, scale) = te_determinant_raw(2, 1.0f64, 1.0 + 1e-8, 0, k);
            assert!(d.abs() <= 1e-6 * scale.max(1e-300), "k={k}: {d}");
        }
    }

    #[test]
    fn determinant_is_real_and_rejects_bad_k() {
        let m = RadialMedium::new(3, 1.0f64, 2.0).unwrap();
        assert!(te_determinant(&m, 1, 2.0).unwrap().is_finite());
        assert!(te_determinant(&m, 1, 0.0).is_err());
    }

    #[test]
    fn three_dimensional_derivative_matches_difference() {
        for l in 0..4 {
            for x in [0.3f64, 2.0, 7.5] {
                let (_, d) = radial_function(3, l, x);
                let fd = (radial_function(3, l, x + 1e-6).0 - radial_function(3, l, x - 1e-6).0) / 2e-6;
                assert!((d - fd).abs() < 1e-8, "l={l} x={x}");
            }
        }
    }
}
