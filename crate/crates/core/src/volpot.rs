//! Weighted Newtonian potentials `w_ψ(x) = ∫_D ψ(y) Φ(x,y) dy` and their
//! first and second derivatives.
//!
//! Volume integrals use the midpoint rule on the medium grid. The cell that
//! contains the evaluation point is replaced by the exact integral of `Φ`
//! over the disk/ball of equal measure centred at the point; for the
//! gradient (and the difference-weighted Hessian integrand) that
//! contribution vanishes by symmetry.
//!
//! Second derivatives use the divergence-theorem split
//!
//! ```text
//! ∂²w/∂x_i∂x_j(x) = ∫_D [ψ(y) - ψ*(x)] ∂²Φ/∂x_i∂x_j(x,y) dy
//!                  - ψ*(x) ∮_∂D ∂Φ/∂x_j(x,y) ν_i(y) ds_y
//! ```
//!
//! with `ψ*` the analytic extension carried by the density.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rasterize, BoundarySample, Grid, MediumField, Shape};
use crate::kernels::{laplace_profile, KernelKind};
use crate::scalar::{cx, czero, dist, norm, Cx, Real};
use crate::special::hankel1;

/// Analytic density `x -> ψ(x)`.
pub type DensityFn<T> = Arc<dyn Fn(&[T]) -> Cx<T> + Send + Sync>;

/// Density sampled on a medium grid, zero outside the mask of `D`.
#[derive(Clone)]
pub struct DensityField<T: Real> {
    pub grid: Grid<T>,
    pub shape: Shape<T>,
    pub values: Vec<Cx<T>>,
    pub mask: Vec<bool>,
    /// Analytic expression used as the Hölder extension `ψ*`.
    analytic: Option<DensityFn<T>>,
    /// Hölder exponent recorded for diagnostics.
    pub holder_alpha: T,
    sup_norm: T,
}

impl<T: Real> fmt::Debug for DensityField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityField")
            .field("grid", &self.grid)
            .field("shape", &self.shape)
            .field("sup_norm", &self.sup_norm)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl<T: Real> DensityField<T> {
    /// Samples `f` at the inside cell centres of `medium` and keeps `f` as
    /// the extension `ψ*`.
    pub fn from_fn(medium: &MediumField<T>, f: DensityFn<T>) -> Result<Self> {
        let dim = medium.grid.dim();
        let mut values = vec![czero(); medium.grid.len()];
        for (lin, v) in values.iter_mut().enumerate() {
            if medium.inside[lin] {
                let c = medium.grid.center(lin);
                *v = f(&c[..dim]);
            }
        }
        Self::build(medium, values, Some(f))
    }

    pub fn constant(medium: &MediumField<T>, value: Cx<T>) -> Result<Self> {
        Self::from_fn(medium, Arc::new(move |_: &[T]| value))
    }

    /// Grid values without an analytic extension.
    pub fn from_values(medium: &MediumField<T>, values: Vec<Cx<T>>) -> Result<Self> {
        if values.len() != medium.grid.len() {
            return Err(Error::InvalidInput(format!(
                "density has {} values for a grid of {} cells",
                values.len(),
                medium.grid.len()
            )));
        }
        let mut values = values;
        for (v, &m) in values.iter_mut().zip(&medium.inside) {
            if !m {
                *v = czero();
            }
        }
        Self::build(medium, values, None)
    }

    fn build(medium: &MediumField<T>, values: Vec<Cx<T>>, analytic: Option<DensityFn<T>>) -> Result<Self> {
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("density has non-finite values".into()));
        }
        let sup_norm = values.iter().fold(T::zero(), |m, v| m.max(v.norm()));
        Ok(DensityField {
            grid: medium.grid.clone(),
            shape: medium.shape.clone(),
            values,
            mask: medium.inside.clone(),
            analytic,
            holder_alpha: T::one(),
            sup_norm,
        })
    }

    pub fn with_holder_alpha(mut self, alpha: T) -> Self {
        self.holder_alpha = alpha;
        self
    }

    pub fn sup_norm(&self) -> T {
        self.sup_norm
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn analytic(&self) -> Option<&DensityFn<T>> {
        self.analytic.as_ref()
    }

    /// `ψ*(x)`: the analytic extension, or the value of the containing cell.
    pub fn extension_at(&self, x: &[T]) -> Result<Cx<T>> {
        if let Some(f) = &self.analytic {
            return Ok(f(x));
        }
        match self.grid.locate(x) {
            Some(lin) if self.mask[lin] => Ok(self.values[lin]),
            _ => Err(Error::InvalidInput(
                "density without analytic extension evaluated outside its support".into(),
            )),
        }
    }

    /// True when every inside value equals the extension at every point,
    /// i.e. the density is a constant and the difference integrand vanishes.
    fn is_constant(&self) -> bool {
        let mut it = self.values.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| *v);
        let first = match it.next() {
            Some(v) => v,
            None => return true,
        };
        if !it.all(|v| v == first) {
            return false;
        }
        match &self.analytic {
            None => true,
            Some(f) => {
                // probe the extension at a few points around the shape
                let (lo, hi) = self.shape.bounding_box();
                let dim = self.dim();
                (0..7).all(|s| {
                    let t = T::lit(s as f64 / 6.0 * 1.7 - 0.35);
                    let p: Vec<T> = (0..dim).map(|k| lo[k] + (hi[k] - lo[k]) * t).collect();
                    f(&p) == first
                })
            }
        }
    }

    /// Resamples the analytic density on a finer grid covering the shape.
    fn refined(&self, h: T, max_cells: usize) -> Result<Self> {
        let f = self
            .analytic
            .clone()
            .ok_or_else(|| Error::InvalidInput("grid refinement needs an analytic density".into()))?;
        let grid = Grid::covering(&self.shape, h, max_cells)?;
        let medium = rasterize(&self.shape, &crate::geometry::Contrast::constant(T::lit(2.0)), &grid)?;
        Ok(Self::from_fn(&medium, f)?.with_holder_alpha(self.holder_alpha))
    }

    fn support(&self) -> Vec<([T; 3], Cx<T>)> {
        (0..self.grid.len())
            .filter(|&l| self.mask[l])
            .map(|l| (self.grid.center(l), self.values[l]))
            .collect()
    }
}

/// Radius of the disk (2D) or ball (3D) with the measure of one cell.
pub fn equal_measure_radius<T: Real>(dim: usize, h: T) -> T {
    if dim == 3 {
        h * (T::lit(3.0) / (T::lit(4.0) * T::PI())).cbrt()
    } else {
        h / T::PI().sqrt()
    }
}

/// `∫_{|y - x| < ρ} Φ(x, y) dy` in closed form (series for small `kρ`,
/// where the closed form cancels catastrophically).
pub fn self_cell_integral<T: Real>(kind: KernelKind<T>, dim: usize, rho: T) -> Cx<T> {
    match (kind, dim) {
        (KernelKind::Laplace, 3) => cx(rho * rho * T::lit(0.5), T::zero()),
        (KernelKind::Laplace, _) => cx(
            rho * rho * T::lit(0.25) * (T::one() - T::lit(2.0) * rho.ln()),
            T::zero(),
        ),
        (KernelKind::Helmholtz { k }, 3) => {
            let z = k * rho;
            if z < T::one() {
                // Σ (ikρ)^n ρ² / (n! (n+2))
                let mut term = cx(rho * rho, T::zero());
                let mut acc = czero::<T>();
                for n in 0..40 {
                    acc = acc + term / T::from_usize_lossy(n + 2);
                    term = term * cx(T::zero(), z) / T::from_usize_lossy(n + 1);
                }
                return acc;
            }
            let k2 = k * k;
            let e = cx(z.cos(), z.sin());
            e * cx(T::one() / k2, -rho / k) - cx(T::one() / k2, T::zero())
        }
        (KernelKind::Helmholtz { k }, _) => {
            let z = k * rho;
            let j1 = crate::special::bessel_j(1, z);
            if z < T::lit(2.0) {
                // the singular part of Y_1 cancels the -1/k² exactly
                let half = z * T::lit(0.5);
                let mut digamma_sum = -T::lit(2.0) * T::lit(0.577_215_664_901_532_9) + T::one();
                let mut term = half;
                let mut series = T::zero();
                for j in 0..30usize {
                    series = series + digamma_sum * term;
                    let jf = T::from_usize_lossy(j);
                    term = -term * half * half / ((jf + T::one()) * (jf + T::lit(2.0)));
                    digamma_sum = digamma_sum + T::one() / (jf + T::one()) + T::one() / (jf + T::lit(2.0));
                }
                let re = -(rho / k) * half.ln() * j1 + rho / (T::lit(2.0) * k) * series;
                return cx(re, T::PI() * rho / (T::lit(2.0) * k) * j1);
            }
            let h1 = hankel1(1, z);
            cx(T::zero(), T::PI() * rho / (T::lit(2.0) * k)) * h1 - cx(T::one() / (k * k), T::zero())
        }
    }
}

fn kernel_value<T: Real>(kind: KernelKind<T>, dim: usize, r: T) -> Cx<T> {
    match kind {
        KernelKind::Laplace => cx(laplace_profile(dim, r).0, T::zero()),
        KernelKind::Helmholtz { k } => crate::kernels::helmholtz_value(dim, k, r),
    }
}

fn check_points<T: Real>(dim: usize, points: &[Vec<T>]) -> Result<()> {
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite evaluation point".into()));
        }
    }
    Ok(())
}

/// `w_ψ` at each point (Laplace kernel).
pub fn volume_potential<T: Real>(psi: &DensityField<T>, points: &[Vec<T>]) -> Result<Vec<Cx<T>>> {
    potential_with_kernel(psi, KernelKind::Laplace, points)
}

/// `∫_D ψ(y) Φ(x,y) dy` for either kernel.
pub fn potential_with_kernel<T: Real>(
    psi: &DensityField<T>,
    kind: KernelKind<T>,
    points: &[Vec<T>],
) -> Result<Vec<Cx<T>>> {
    let dim = psi.dim();
    check_points(dim, points)?;
    let support = psi.support();
    let h = psi.grid.spacing();
    let wcell = psi.grid.cell_measure();
    let self_int = self_cell_integral(kind, dim, equal_measure_radius(dim, h));
    Ok(points
        .par_iter()
        .map(|x| {
            let own = psi.grid.locate(x);
            let own_center = own.map(|l| psi.grid.center(l));
            let mut acc = czero::<T>();
            for (y, v) in &support {
                if Some(*y) == own_center {
                    acc = acc + *v * self_int;
                    continue;
                }
                let r = dist(&x[..dim], &y[..dim]);
                acc = acc + *v * kernel_value(kind, dim, r) * wcell;
            }
            acc
        })
        .collect())
}

/// `∇w_ψ` at each point, by the first-derivative integral.
pub fn volpot_gradient<T: Real>(psi: &DensityField<T>, points: &[Vec<T>]) -> Result<Vec<Vec<Cx<T>>>> {
    let dim = psi.dim();
    check_points(dim, points)?;
    let support = psi.support();
    let wcell = psi.grid.cell_measure();
    Ok(points
        .par_iter()
        .map(|x| {
            let own_center = psi.grid.locate(x).map(|l| psi.grid.center(l));
            let mut acc = vec![czero::<T>(); dim];
            for (y, v) in &support {
                if Some(*y) == own_center {
                    continue;
                }
                let r = dist(&x[..dim], &y[..dim]);
                let fp = laplace_profile(dim, r).1;
                let s = *v * (fp / r * wcell);
                for k in 0..dim {
                    acc[k] = acc[k] + s * (x[k] - y[k]);
                }
            }
            acc
        })
        .collect())
}

/// `∇w_ψ` through the split
/// `∫_D [ψ(y) - ψ*(x)] ∇_xΦ dy - ψ*(x) ∮_∂D Φ(x,y) ν(y) ds`,
/// usable arbitrarily close to `∂D` (but not on it): the volume integrand
/// is bounded and the boundary integral is resolved adaptively.
pub fn volpot_gradient_split<T: Real>(psi: &DensityField<T>, points: &[Vec<T>]) -> Result<Vec<Vec<Cx<T>>>> {
    let dim = psi.dim();
    check_points(dim, points)?;
    let support = psi.support();
    let skip = psi.is_constant();
    let wcell = psi.grid.cell_measure();
    points
        .par_iter()
        .map(|x| {
            let d = psi.shape.distance_to_boundary(x)?;
            if !(d > T::zero()) {
                return Err(Error::TooCloseToBoundary {
                    distance: 0.0,
                    required: f64::MIN_POSITIVE,
                });
            }
            let psi_x = psi.extension_at(x)?;
            let mut acc = vec![czero::<T>(); dim];
            if !skip {
                let own_center = psi.grid.locate(x).map(|l| psi.grid.center(l));
                for (y, v) in &support {
                    if Some(*y) == own_center {
                        continue;
                    }
                    let r = dist(&x[..dim], &y[..dim]);
                    let s = (*v - psi_x) * (laplace_profile(dim, r).1 / r * wcell);
                    for k in 0..dim {
                        acc[k] = acc[k] + s * (x[k] - y[k]);
                    }
                }
            }
            let nodes = psi.shape.boundary_sample(boundary_nodes_for(&psi.shape, d))?;
            let mut bt = [T::zero(); 3];
            for b in &nodes {
                let r = dist(&x[..dim], &b.point);
                let f = laplace_profile(dim, r).0 * b.weight;
                for k in 0..dim {
                    bt[k] = bt[k] + f * b.normal[k];
                }
            }
            for k in 0..dim {
                acc[k] = acc[k] - psi_x * bt[k];
            }
            Ok(acc)
        })
        .collect()
}

/// A symmetric `m x m` complex matrix stored row-major.
pub type Hessian<T> = Vec<Vec<Cx<T>>>;

/// Number of boundary nodes that keeps the near-singular boundary
/// integral resolved at distance `d`.
fn boundary_nodes_for<T: Real>(shape: &Shape<T>, d: T) -> usize {
    let per = shape.boundary_measure().to_f64_lossy();
    let d = d.to_f64_lossy().max(1e-9);
    let n = (16.0 * per / d).ceil() as usize;
    n.clamp(512, 4_000_000)
}

fn boundary_term<T: Real>(dim: usize, x: &[T], nodes: &[BoundarySample<T>]) -> [[T; 3]; 3] {
    // ∮ ∂Φ/∂x_j(x,y) ν_i(y) ds, symmetrised in (i, j).
    let mut acc = [[T::zero(); 3]; 3];
    for b in nodes {
        if b.weight == T::zero() {
            continue;
        }
        let r = dist(&x[..dim], &b.point);
        let fp = laplace_profile(dim, r).1 / r * b.weight;
        for i in 0..dim {
            for j in 0..dim {
                acc[i][j] = acc[i][j] + fp * (x[j] - b.point[j]) * b.normal[i];
            }
        }
    }
    let mut sym = [[T::zero(); 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            sym[i][j] = (acc[i][j] + acc[j][i]) * T::lit(0.5);
        }
    }
    sym
}

/// Hessian by the divergence-theorem split, valid inside and outside `D`
/// away from the boundary.
fn hessian_split<T: Real>(
    psi: &DensityField<T>,
    support: &[([T; 3], Cx<T>)],
    skip_volume: bool,
    x: &[T],
    nodes: &[BoundarySample<T>],
) -> Result<Hessian<T>> {
    let dim = psi.dim();
    let psi_x = psi.extension_at(x)?;
    let wcell = psi.grid.cell_measure();
    let mut out = vec![vec![czero::<T>(); dim]; dim];
    if !skip_volume {
        let own_center = psi.grid.locate(x).map(|l| psi.grid.center(l));
        for (y, v) in support {
            if Some(*y) == own_center {
                continue;
            }
            let diff = *v - psi_x;
            if diff == czero() {
                continue;
            }
            let r = dist(&x[..dim], &y[..dim]);
            let (_, fp, fpp) = laplace_profile(dim, r);
            for i in 0..dim {
                let ri = (x[i] - y[i]) / r;
                for j in 0..dim {
                    let rj = (x[j] - y[j]) / r;
                    let delta = if i == j { T::one() } else { T::zero() };
                    let d2 = fpp * ri * rj + fp / r * (delta - ri * rj);
                    out[i][j] = out[i][j] + diff * (d2 * wcell);
                }
            }
        }
    }
    let bt = boundary_term(dim, x, nodes);
    for i in 0..dim {
        for j in 0..dim {
            out[i][j] = out[i][j] - psi_x * bt[i][j];
        }
    }
    Ok(out)
}

fn hessian_direct<T: Real>(psi: &DensityField<T>, support: &[([T; 3], Cx<T>)], x: &[T]) -> Hessian<T> {
    let dim = psi.dim();
    let wcell = psi.grid.cell_measure();
    let mut out = vec![vec![czero::<T>(); dim]; dim];
    for (y, v) in support {
        let r = dist(&x[..dim], &y[..dim]);
        let (_, fp, fpp) = laplace_profile(dim, r);
        for i in 0..dim {
            let ri = (x[i] - y[i]) / r;
            for j in 0..dim {
                let rj = (x[j] - y[j]) / r;
                let delta = if i == j { T::one() } else { T::zero() };
                out[i][j] = out[i][j] + *v * ((fpp * ri * rj + fp / r * (delta - ri * rj)) * wcell);
            }
        }
    }
    out
}

/// Second derivatives of `w_ψ` at points at least `2h` from `∂D`: the
/// divergence-theorem split inside `D`, the directly differentiated
/// integral outside.
pub fn volpot_hessian_interior<T: Real>(psi: &DensityField<T>, points: &[Vec<T>]) -> Result<Vec<Hessian<T>>> {
    let dim = psi.dim();
    check_points(dim, points)?;
    let h = psi.grid.spacing();
    let support = psi.support();
    let skip = psi.is_constant();
    points
        .par_iter()
        .map(|x| {
            let d = psi.shape.distance_to_boundary(x)?;
            if d < T::lit(2.0) * h {
                return Err(Error::TooCloseToBoundary {
                    distance: d.to_f64_lossy(),
                    required: (T::lit(2.0) * h).to_f64_lossy(),
                });
            }
            if psi.shape.contains(x)? {
                let nodes = psi.shape.boundary_sample(boundary_nodes_for(&psi.shape, d))?;
                hessian_split(psi, &support, skip, x, &nodes)
            } else {
                Ok(hessian_direct(psi, &support, x))
            }
        })
        .collect()
}

/// Symmetric jumps of the second derivatives across a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpProbeReport {
    pub boundary_point: Vec<f64>,
    pub direction: Vec<f64>,
    /// Offsets `η`, strictly decreasing.
    pub offsets: Vec<f64>,
    /// `jumps[k][i][j] = ∂_ij w(x₀ + η_k e) - ∂_ij w(x₀ - η_k e)` as `[re, im]`.
    pub jumps: Vec<Vec<Vec<[f64; 2]>>>,
    /// Grid spacing used for each offset.
    pub spacings: Vec<f64>,
    /// `max_{k,i,j} |jumps[k][i][j]|`
    pub fitted_sup: f64,
    /// Largest jump magnitude over the coarser half of the offsets.
    pub fitted_constant: f64,
    pub diverging: bool,
}

impl JumpProbeReport {
    pub fn jump(&self, k: usize, i: usize, j: usize) -> Cx<f64> {
        let [re, im] = self.jumps[k][i][j];
        Cx::new(re, im)
    }

    /// Max over `(i, j)` of `|Δ_ij(η_k)|`.
    pub fn magnitude(&self, k: usize) -> f64 {
        self.jumps[k]
            .iter()
            .flatten()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }
}

/// Growth factor above which a probe is flagged as diverging.
pub const DIVERGENCE_FACTOR: f64 = 3.0;

/// Splits magnitudes ordered by decreasing offset into a fitted constant
/// (coarser half) and a divergence flag (finer half exceeding it by
/// [`DIVERGENCE_FACTOR`]).
pub fn growth_flag(magnitudes: &[f64]) -> (f64, bool) {
    let n = magnitudes.len();
    if n == 0 {
        return (0.0, false);
    }
    let half = n.div_ceil(2);
    let coarse = magnitudes[..half].iter().cloned().fold(0.0, f64::max);
    let fine = magnitudes[half..].iter().cloned().fold(0.0, f64::max);
    let tiny = 1e-12 * (1.0 + coarse);
    (coarse, fine > DIVERGENCE_FACTOR * coarse.max(tiny) && fine > tiny)
}

/// Options for [`symmetric_jump_probe`].
#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    /// Cap on grid cells when refining for small offsets.
    pub max_cells: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            max_cells: crate::geometry::DEFAULT_MAX_CELLS,
        }
    }
}

/// Evaluates the symmetric jumps `∂_ij w(x₀+ηe) - ∂_ij w(x₀-ηe)` for each
/// offset, refining the grid so that `η >= 4h` whenever the difference
/// integrand is not identically zero.
pub fn symmetric_jump_probe<T: Real>(
    psi: &DensityField<T>,
    x0: &[T],
    direction: &[T],
    offsets: &[T],
    opts: ProbeOptions,
) -> Result<JumpProbeReport> {
    let dim = psi.dim();
    check_points(dim, &[x0.to_vec(), direction.to_vec()])?;
    if offsets.is_empty() {
        return Err(Error::EmptySamples);
    }
    if offsets.iter().any(|&e| !(e > T::zero())) || offsets.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput(
            "offsets must be positive and strictly decreasing".into(),
        ));
    }
    let dn = norm(direction);
    if !(dn > T::zero()) {
        return Err(Error::InvalidInput("zero probe direction".into()));
    }
    let e: Vec<T> = direction.iter().map(|&c| c / dn).collect();
    let diam = psi.shape.diameter();
    if psi.shape.distance_to_boundary(x0)? > T::lit(1e-9) * diam {
        return Err(Error::InvalidInput("probe point is not on the boundary".into()));
    }
    for &eta in offsets {
        for s in [T::one(), -T::one()] {
            let p: Vec<T> = (0..dim).map(|k| x0[k] + s * eta * e[k]).collect();
            if !psi.grid.contains_point(&p) {
                return Err(Error::ProbeOutsideGrid(eta.to_f64_lossy()));
            }
        }
    }

    let skip_volume = psi.is_constant();
    let mut jumps = Vec::with_capacity(offsets.len());
    let mut spacings = Vec::with_capacity(offsets.len());
    let mut current: Option<DensityField<T>> = None;
    for &eta in offsets {
        let needed_h = eta / T::lit(4.0);
        let field = if skip_volume || psi.grid.spacing() <= needed_h {
            psi
        } else {
            let stale = current.as_ref().map(|f| f.grid.spacing() > needed_h).unwrap_or(true);
            if stale {
                current = Some(psi.refined(needed_h, opts.max_cells)?);
            }
            current.as_ref().expect("refined density")
        };
        spacings.push(field.grid.spacing().to_f64_lossy());
        let support = if skip_volume { Vec::new() } else { field.support() };
        let nodes = psi.shape.boundary_sample(boundary_nodes_for(&psi.shape, eta))?;
        let plus: Vec<T> = (0..dim).map(|k| x0[k] + eta * e[k]).collect();
        let minus: Vec<T> = (0..dim).map(|k| x0[k] - eta * e[k]).collect();
        let hp = hessian_split(field, &support, skip_volume, &plus, &nodes)?;
        let hm = hessian_split(field, &support, skip_volume, &minus, &nodes)?;
        let mut jm = vec![vec![[0.0f64; 2]; dim]; dim];
        for i in 0..dim {
            for j in i..dim {
                let d = ((hp[i][j] - hm[i][j]) + (hp[j][i] - hm[j][i])) * T::lit(0.5);
                let v = [d.re.to_f64_lossy(), d.im.to_f64_lossy()];
                jm[i][j] = v;
                jm[j][i] = v;
            }
        }
        jumps.push(jm);
    }
    let mut report = JumpProbeReport {
        boundary_point: x0.iter().map(|v| v.to_f64_lossy()).collect(),
        direction: e.iter().map(|v| v.to_f64_lossy()).collect(),
        offsets: offsets.iter().map(|v| v.to_f64_lossy()).collect(),
        jumps,
        spacings,
        fitted_sup: 0.0,
        fitted_constant: 0.0,
        diverging: false,
    };
    let mags: Vec<f64> = (0..offsets.len()).map(|k| report.magnitude(k)).collect();
    report.fitted_sup = mags.iter().cloned().fold(0.0, f64::max);
    let (c, div) = growth_flag(&mags);
    report.fitted_constant = c;
    report.diverging = div;
    Ok(report)
}

/// `(lhs, rhs, lhs - rhs)` of the lower bound
/// `[1 + a²b²/(1+a²)]² - [2ab/(1+a²)]² >= 4/(b²+4)`.
pub fn appendix_inequality_check<T: Real>(a: T, b: T) -> (T, T, T) {
    let one = T::one();
    let a2 = a * a;
    let first = one + a2 * b * b / (one + a2);
    let second = T::lit(2.0) * a * b / (one + a2);
    let lhs = first * first - second * second;
    let rhs = T::lit(4.0) / (b * b + T::lit(4.0));
    (lhs, rhs, lhs - rhs)
}

/// Piecewise-linear Lipschitz graph `x_m = f(y)` over `[-ρ, ρ]` (the 2D case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSamples {
    /// Abscissae, strictly increasing.
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    /// Declared Lipschitz constant `K`.
    pub lipschitz: f64,
}

impl GraphSamples {
    pub fn from_fn(rho: f64, count: usize, lipschitz: f64, f: impl Fn(f64) -> f64) -> Self {
        let mut y: Vec<f64> = (0..count)
            .map(|i| -rho + 2.0 * rho * i as f64 / (count - 1) as f64)
            .collect();
        if !y.contains(&0.0) {
            y.push(0.0);
            y.sort_by(|a, b| a.partial_cmp(b).expect("finite abscissa"));
        }
        let fv = y.iter().map(|&t| f(t)).collect();
        GraphSamples { y, f: fv, lipschitz }
    }

    fn validate(&self) -> Result<()> {
        if self.y.len() < 2 || self.y.len() != self.f.len() {
            return Err(Error::InvalidInput("graph needs at least two matching samples".into()));
        }
        for w in self.y.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput("graph abscissae must increase".into()));
            }
        }
        for k in 0..self.y.len() - 1 {
            let slope = ((self.f[k + 1] - self.f[k]) / (self.y[k + 1] - self.y[k])).abs();
            if slope > self.lipschitz * (1.0 + 1e-12) {
                return Err(Error::NotLipschitz {
                    slope,
                    declared: self.lipschitz,
                });
            }
        }
        if self.eval(0.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("graph must pass through the origin".into()));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.y[0].abs().min(*self.y.last().expect("non-empty"))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = match self.y.binary_search_by(|v| v.partial_cmp(&t).expect("finite")) {
            Ok(k) => return self.f[k],
            Err(k) => k,
        };
        let k = k.clamp(1, self.y.len() - 1);
        let (y0, y1) = (self.y[k - 1], self.y[k]);
        let s = (t - y0) / (y1 - y0);
        self.f[k - 1] + s * (self.f[k] - self.f[k - 1])
    }
}

/// Integrand of the tangential jump integral at abscissa `y`.
pub fn tangential_jump_integrand(y: f64, fy: f64, eta: f64) -> f64 {
    (y / (y * y + (fy - eta).powi(2)) - y / (y * y + (fy + eta).powi(2))).abs()
}

/// Integrand of the normal jump integral at abscissa `y`.
pub fn normal_jump_integrand(y: f64, fy: f64, eta: f64) -> f64 {
    ((fy - eta) / (y * y + (fy - eta).powi(2)) - (fy + eta) / (y * y + (fy + eta).powi(2))).abs()
}

/// Per-offset values of the two jump integrals and the comparison
/// integral `∫_{|u|<ρ/η} (u²+1)^{-1} du`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpIntegralReport {
    pub offsets: Vec<f64>,
    pub tangential: Vec<f64>,
    pub normal: Vec<f64>,
    pub comparison: Vec<f64>,
    pub sup_tangential: f64,
    pub sup_normal: f64,
    pub growing: bool,
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Composite 8-point Gauss-Legendre over `[a, b]` with pieces no longer
/// than `max_len`.
pub(crate) fn gauss_composite(a: f64, b: f64, max_len: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let pieces = ((b - a) / max_len).ceil().max(1.0) as usize;
    let step = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        let lo = a + step * p as f64;
        let mid = lo + 0.5 * step;
        for (x, w) in GAUSS8 {
            s += w * f(mid + 0.5 * step * x);
        }
    }
    s * 0.5 * step
}

/// Evaluates the two jump integrals over the graph for each offset.
pub fn jump_integral_bound_check(graph: &GraphSamples, offsets: &[f64]) -> Result<JumpIntegralReport> {
    graph.validate()?;
    if offsets.is_empty() {
        return Err(Error::EmptySamples);
    }
    if offsets.iter().any(|&e| !(e > 0.0)) || offsets.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput(
            "offsets must be positive and strictly decreasing".into(),
        ));
    }
    let rho = graph.rho();
    let mut out = JumpIntegralReport {
        offsets: offsets.to_vec(),
        tangential: vec![],
        normal: vec![],
        comparison: vec![],
        sup_tangential: 0.0,
        sup_normal: 0.0,
        growing: false,
    };
    for &eta in offsets {
        // Breakpoints: graph kinks plus a geometric cluster around 0 at scale η.
        let mut bp: Vec<f64> = graph.y.iter().cloned().filter(|t| t.abs() <= rho).collect();
        bp.push(-rho);
        bp.push(rho);
        let mut s = eta / 16.0;
        while s < rho {
            bp.push(s);
            bp.push(-s);
            s *= 2.0;
        }
        bp.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        bp.dedup();
        let mut ti = 0.0;
        let mut ni = 0.0;
        for w in bp.windows(2) {
            let (a, b) = (w[0], w[1]);
            let max_len = (0.25 * a.abs().min(b.abs()).max(eta)).max(1e-300);
            ti += gauss_composite(a, b, max_len, &|t| tangential_jump_integrand(t, graph.eval(t), eta));
            ni += gauss_composite(a, b, max_len, &|t| normal_jump_integrand(t, graph.eval(t), eta));
        }
        out.tangential.push(ti);
        out.normal.push(ni);
        out.comparison.push(2.0 * (rho / eta).atan());
    }
    out.sup_tangential = out.tangential.iter().cloned().fold(0.0, f64::max);
    out.sup_normal = out.normal.iter().cloned().fold(0.0, f64::max);
    let mags: Vec<f64> = out.tangential.iter().zip(&out.normal).map(|(a, b)| a.max(*b)).collect();
    out.growing = growth_flag(&mags).1;
    Ok(out)
}
