//! Incident fields: plane waves, point sources and Herglotz waves
//! `v(x) = (1/2π) ∮_{S¹} e^{ik x·d} φ(d) ds(d)` with densities given by finite
//! Fourier series `φ(θ) = Σ c_n e^{inθ}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::helmholtz_value;
use crate::scalar::{cx, czero, dist, expi, norm, Cx, Real};

/// Density on the unit circle as Fourier coefficients for orders
/// `min_order, min_order + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct FourierDensity<T> {
    pub min_order: i64,
    pub coeffs: Vec<Cx<T>>,
}

impl<T: Real> FourierDensity<T> {
    pub fn constant(c: Cx<T>) -> Self {
        FourierDensity {
            min_order: 0,
            coeffs: vec![c],
        }
    }

    /// The single harmonic `e^{iℓθ}`.
    pub fn harmonic(order: i64) -> Self {
        FourierDensity {
            min_order: order,
            coeffs: vec![cx(T::one(), T::zero())],
        }
    }

    pub fn orders(&self) -> impl Iterator<Item = (i64, Cx<T>)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, c)| (self.min_order + k as i64, *c))
    }

    pub fn max_abs_order(&self) -> u64 {
        self.orders().map(|(n, _)| n.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn eval(&self, theta: T) -> Cx<T> {
        self.orders()
            .fold(czero(), |acc, (n, c)| acc + c * expi(theta * T::lit(n as f64)))
    }

    pub fn derivative(&self, theta: T) -> Cx<T> {
        self.orders().fold(czero(), |acc, (n, c)| {
            let nf = T::lit(n as f64);
            acc + c * expi(theta * nf) * cx(T::zero(), nf)
        })
    }

    /// `Σ (1 + |n|) |c_n|`, an upper bound for `‖φ‖_∞ + ‖φ'‖_∞`.
    pub fn c1_norm(&self) -> T {
        self.orders()
            .map(|(n, c)| (T::one() + T::lit(n.unsigned_abs() as f64)) * c.norm())
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::InvalidInput("Herglotz density has no coefficients".into()));
        }
        if self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite Herglotz coefficient".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real"))]
pub enum WaveKind<T> {
    /// `e^{ik x·d}` with `|d| = 1`.
    Plane { direction: Vec<T> },
    /// `Φ_k(x, z)`.
    PointSource { source: Vec<T> },
    /// Two-dimensional Herglotz wave.
    Herglotz { density: FourierDensity<T> },
}

/// An incident field with wavenumber `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct IncidentWave<T> {
    pub k: T,
    #[serde(flatten)]
    pub kind: WaveKind<T>,
}

impl<T: Real> IncidentWave<T> {
    pub fn plane(k: T, direction: Vec<T>) -> Result<Self> {
        let w = IncidentWave {
            k,
            kind: WaveKind::Plane { direction },
        };
        w.validate()?;
        Ok(w)
    }

    pub fn point_source(k: T, source: Vec<T>) -> Result<Self> {
        let w = IncidentWave {
            k,
            kind: WaveKind::PointSource { source },
        };
        w.validate()?;
        Ok(w)
    }

    pub fn herglotz(k: T, density: FourierDensity<T>) -> Result<Self> {
        let w = IncidentWave {
            k,
            kind: WaveKind::Herglotz { density },
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > T::zero()) || !self.k.is_finite() {
            return Err(Error::NonPositiveWavenumber(self.k.to_f64_lossy()));
        }
        match &self.kind {
            WaveKind::Plane { direction } => {
                if direction.len() != 2 && direction.len() != 3 {
                    return Err(Error::InvalidInput("plane wave direction must be 2D or 3D".into()));
                }
                if (norm(direction) - T::one()).abs() > T::lit(1e-9) {
                    return Err(Error::InvalidInput("plane wave direction must be a unit vector".into()));
                }
            }
            WaveKind::PointSource { source } => {
                if source.len() != 2 && source.len() != 3 {
                    return Err(Error::InvalidInput("point source must be 2D or 3D".into()));
                }
            }
            WaveKind::Herglotz { density } => density.validate()?,
        }
        Ok(())
    }

    /// Spatial dimension (Herglotz waves are two-dimensional).
    pub fn dim(&self) -> usize {
        match &self.kind {
            WaveKind::Plane { direction } => direction.len(),
            WaveKind::PointSource { source } => source.len(),
            WaveKind::Herglotz { .. } => 2,
        }
    }
}

/// Trapezoid nodes for a Herglotz integral at radius `r`.
pub fn herglotz_nodes<T: Real>(k: T, r: T, density: &FourierDensity<T>) -> usize {
    let base = (T::lit(8.0) * k * r).ceil().to_f64_lossy().max(0.0) as usize;
    base.max(64) + 2 * density.max_abs_order() as usize
}

/// Herglotz wave at `x` by the trapezoid rule on `n` nodes.
pub fn herglotz_value<T: Real>(k: T, density: &FourierDensity<T>, x: &[T], n: usize) -> Cx<T> {
    let w = T::lit(2.0) * T::PI() / T::from_usize_lossy(n);
    let mut acc = czero();
    for q in 0..n {
        let th = w * T::from_usize_lossy(q);
        let phase = k * (x[0] * th.cos() + x[1] * th.sin());
        acc = acc + expi(phase) * density.eval(th);
    }
    acc / T::from_usize_lossy(n)
}

/// Evaluates the incident field at each point.
pub fn eval_incident<T: Real>(wave: &IncidentWave<T>, points: &[Vec<T>]) -> Result<Vec<Cx<T>>> {
    wave.validate()?;
    let dim = wave.dim();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    let k = wave.k;
    match &wave.kind {
        WaveKind::Plane { direction } => Ok(points
            .iter()
            .map(|x| expi(k * crate::scalar::dot(x, direction)))
            .collect()),
        WaveKind::PointSource { source } => points
            .iter()
            .map(|x| {
                let r = dist(x, source);
                if !(r > T::zero()) {
                    Err(Error::SingularEvaluation)
                } else {
                    Ok(helmholtz_value(dim, k, r))
                }
            })
            .collect(),
        WaveKind::Herglotz { density } => {
            // tabulate φ once at the largest node count needed
            let rmax = points.iter().map(|x| norm(x)).fold(T::zero(), T::max);
            let n = herglotz_nodes(k, rmax, density);
            let w = T::lit(2.0) * T::PI() / T::from_usize_lossy(n);
            let table: Vec<(T, T, Cx<T>)> = (0..n)
                .map(|q| {
                    let th = w * T::from_usize_lossy(q);
                    (th.cos(), th.sin(), density.eval(th) / T::from_usize_lossy(n))
                })
                .collect();
            use rayon::prelude::*;
            Ok(points
                .par_iter()
                .map(|x| {
                    table
                        .iter()
                        .fold(czero(), |acc, &(c, s, f)| acc + expi(k * (x[0] * c + x[1] * s)) * f)
                })
                .collect())
        }
    }
}

/// `max |Δ_h v + k² v|` over the points, with the central second difference
/// of step `h` on each axis.
pub fn verify_helmholtz<T: Real>(wave: &IncidentWave<T>, points: &[Vec<T>], h: T) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let dim = wave.dim();
    let mut worst = T::zero();
    for x in points {
        let mut stencil = vec![x.clone()];
        for a in 0..dim {
            for s in [T::one(), -T::one()] {
                let mut y = x.clone();
                y[a] = y[a] + s * h;
                stencil.push(y);
            }
        }
        let v = eval_incident(wave, &stencil)?;
        let mut lap = czero::<T>();
        for a in 0..dim {
            lap = lap + (v[1 + 2 * a] + v[2 + 2 * a] - v[0] * T::lit(2.0)) / (h * h);
        }
        worst = worst.max((lap + v[0] * (wave.k * wave.k)).norm());
    }
    Ok(worst)
}

/// Direct Herglotz value, its stationary-phase approximation and the
/// remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct StationaryPhaseResult<T> {
    pub direct: Cx<T>,
    pub approx: Cx<T>,
    pub residual: T,
}

/// Compares the Herglotz wave at `z` with
/// `(2π k|z|)^{-1/2} [e^{-iπ/4} φ(θ_z) e^{ik|z|} + e^{iπ/4} φ(θ_z + π) e^{-ik|z|}]`.
pub fn stationary_phase_farfield<T: Real>(
    density: &FourierDensity<T>,
    k: T,
    z: &[T],
) -> Result<StationaryPhaseResult<T>> {
    density.validate()?;
    if !(k > T::zero()) {
        return Err(Error::NonPositiveWavenumber(k.to_f64_lossy()));
    }
    if z.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: z.len(),
        });
    }
    let r = norm(z);
    if !(r > T::zero()) {
        return Err(Error::InvalidInput("stationary phase needs z != 0".into()));
    }
    let n = herglotz_nodes(k, r, density);
    let direct = herglotz_value(k, density, z, n);
    let th = z[1].atan2(z[0]);
    let quarter = T::PI() / T::lit(4.0);
    let amp = T::one() / (T::lit(2.0) * T::PI() * k * r).sqrt();
    let approx = (expi(-quarter) * density.eval(th) * expi(k * r)
        + expi(quarter) * density.eval(th + T::PI()) * expi(-k * r))
        * amp;
    Ok(StationaryPhaseResult {
        direct,
        approx,
        residual: (direct - approx).norm(),
    })
}

/// `|φ(θ_z) e^{2ik|z|} + i φ(θ_z + π)|` at each point; vanishing residuals
/// are necessary for the Herglotz wave to decay along each ray.
pub fn nonscattering_pair_residual<T: Real>(density: &FourierDensity<T>, k: T, points: &[Vec<T>]) -> Result<Vec<T>> {
    density.validate()?;
    points
        .iter()
        .map(|z| {
            if z.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: z.len(),
                });
            }
            let r = norm(z);
            let th = z[1].atan2(z[0]);
            let v = density.eval(th) * expi(T::lit(2.0) * k * r) + cx(T::zero(), T::one()) * density.eval(th + T::PI());
            Ok(v.norm())
        })
        .collect()
}
