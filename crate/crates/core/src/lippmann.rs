//! Forward scattering by a penetrable medium through the Lippmann-Schwinger
//! equation
//!
//! ```text
//! u(x) = -∫_D Φ_k(x,y) k²(1 - n(y)) (v(y) + u(y)) dy
//! ```
//!
//! solved for the total field `w = v + u` on the cells where `n != 1`:
//! `w + G M w = v` with `M = k²(1 - n)` and `G` the FFT convolution with
//! `Φ_k`. Far fields are normalised by `u(x) = e^{ikr} r^{-(m-1)/2} u^∞(x̂) + ...`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::Convolver;
use crate::error::{Error, Result};
use crate::geometry::{Grid, MediumField};
use crate::kernels::{helmholtz_value, KernelKind};
use crate::krylov::{gmres, GmresOptions};
use crate::scalar::{cx, czero, dist, dot, expi, Cx, Real};
use crate::volpot::{equal_measure_radius, self_cell_integral, DensityField};
use crate::waves::{eval_incident, IncidentWave};

/// Minimum grid cells per interior wavelength accepted by the solver.
pub const MIN_CELLS_PER_WAVELENGTH: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    pub gmres: GmresOptions<T>,
    pub min_cells_per_wavelength: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            gmres: GmresOptions::default(),
            min_cells_per_wavelength: T::lit(MIN_CELLS_PER_WAVELENGTH),
        }
    }
}

impl<T: Real> SolverOptions<T> {
    pub fn with_tol(mut self, tol: T) -> Self {
        self.gmres.tol = tol;
        self
    }
}

/// The far-field constant `c_m` with `u^∞ = c_m ∫ e^{-ik x̂·y} (...) dy`
/// for the radiating part of `Φ_k`.
pub fn farfield_constant<T: Real>(dim: usize, k: T) -> Cx<T> {
    if dim == 3 {
        cx(T::one() / (T::lit(4.0) * T::PI()), T::zero())
    } else {
        expi(T::PI() / T::lit(4.0)) / (T::lit(8.0) * T::PI() * k).sqrt()
    }
}

/// The discretised operator for one medium and wavenumber, reusable for any
/// number of incident fields.
pub struct ScatteringOperator<T: Real> {
    medium: MediumField<T>,
    k: T,
    /// Grid indices with `n != 1`.
    support: Vec<usize>,
    /// `k²(1 - n)` on the support.
    weight: Vec<T>,
    conv: Option<Convolver<T>>,
    opts: SolverOptions<T>,
}

impl<T: Real> ScatteringOperator<T> {
    pub fn new(medium: &MediumField<T>, k: T, opts: SolverOptions<T>) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::NonPositiveWavenumber(k.to_f64_lossy()));
        }
        let h = medium.grid.spacing();
        let nmax = medium.max_index();
        let cpw = T::lit(2.0) * T::PI() / (k * nmax.sqrt() * h);
        if cpw < opts.min_cells_per_wavelength {
            return Err(Error::UnderResolved {
                cells_per_wavelength: cpw.to_f64_lossy(),
                required: opts.min_cells_per_wavelength.to_f64_lossy(),
            });
        }
        let support: Vec<usize> = (0..medium.grid.len()).filter(|&l| medium.q[l] != T::one()).collect();
        let weight = support.iter().map(|&l| k * k * (T::one() - medium.q[l])).collect();
        let conv = if support.is_empty() {
            None
        } else {
            Some(Convolver::new(&medium.grid, KernelKind::Helmholtz { k }))
        };
        Ok(ScatteringOperator {
            medium: medium.clone(),
            k,
            support,
            weight,
            conv,
            opts,
        })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn medium(&self) -> &MediumField<T> {
        &self.medium
    }

    /// `G (M w)` on the full grid for `w` given on the support.
    fn potential_of(&self, w: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.medium.grid.len();
        let mut dens = vec![czero::<T>(); n];
        for ((&l, &m), &wi) in self.support.iter().zip(&self.weight).zip(w) {
            dens[l] = wi * m;
        }
        match &self.conv {
            Some(c) => c.apply(&dens),
            None => dens,
        }
    }

    /// `w + P G M w` on the support.
    pub fn apply(&self, w: &[Cx<T>]) -> Vec<Cx<T>> {
        let g = self.potential_of(w);
        self.support.iter().zip(w).map(|(&l, &wi)| wi + g[l]).collect()
    }

    /// Solves for an incident field; the field is evaluated on the grid.
    pub fn solve(&self, incident: &IncidentWave<T>) -> Result<ScatterSolution<T>> {
        if incident.k != self.k {
            return Err(Error::InvalidInput(format!(
                "incident wavenumber {} differs from operator wavenumber {}",
                incident.k, self.k
            )));
        }
        let grid = &self.medium.grid;
        let dim = grid.dim();
        let points: Vec<Vec<T>> = (0..grid.len()).map(|l| grid.center(l)[..dim].to_vec()).collect();
        let v = eval_incident(incident, &points)?;
        self.solve_field(incident.clone(), v)
    }

    /// Solves with the incident field already sampled on the grid.
    pub fn solve_field(&self, incident: IncidentWave<T>, v: Vec<Cx<T>>) -> Result<ScatterSolution<T>> {
        let n = self.medium.grid.len();
        if v.len() != n {
            return Err(Error::InvalidInput("incident samples do not match the grid".into()));
        }
        if self.support.is_empty() {
            return Ok(ScatterSolution {
                medium: self.medium.clone(),
                incident,
                k: self.k,
                contrast_weight: vec![],
                support: vec![],
                scattered: vec![czero(); n],
                total: v.clone(),
                incident_field: v,
                iterations: 0,
                residual: 0.0,
                history: vec![],
            });
        }
        let rhs: Vec<Cx<T>> = self.support.iter().map(|&l| v[l]).collect();
        let out = gmres(|w| self.apply(w), &rhs, None, self.opts.gmres)?;
        let g = self.potential_of(&out.x);
        let scattered: Vec<Cx<T>> = g.iter().map(|z| -*z).collect();
        let total: Vec<Cx<T>> = scattered.iter().zip(&v).map(|(a, b)| *a + *b).collect();
        Ok(ScatterSolution {
            medium: self.medium.clone(),
            incident,
            k: self.k,
            contrast_weight: self.weight.clone(),
            support: self.support.clone(),
            scattered,
            total,
            incident_field: v,
            iterations: out.iterations,
            residual: out.residual.to_f64_lossy(),
            history: out.history.iter().map(|h| h.to_f64_lossy()).collect(),
        })
    }
}

/// Scattered and total fields on the medium grid with solver diagnostics.
#[derive(Debug, Clone)]
pub struct ScatterSolution<T: Real> {
    pub medium: MediumField<T>,
    pub incident: IncidentWave<T>,
    pub k: T,
    /// Grid indices where `n != 1`.
    pub support: Vec<usize>,
    /// `k²(1 - n)` on the support.
    pub contrast_weight: Vec<T>,
    pub scattered: Vec<Cx<T>>,
    pub total: Vec<Cx<T>>,
    pub incident_field: Vec<Cx<T>>,
    pub iterations: usize,
    /// Relative residual of the integral equation at exit.
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Solves the scattering problem for `incident` (whose `k` is used).
pub fn solve_scattering<T: Real>(
    medium: &MediumField<T>,
    incident: &IncidentWave<T>,
    opts: SolverOptions<T>,
) -> Result<ScatterSolution<T>> {
    ScatteringOperator::new(medium, incident.k, opts)?.solve(incident)
}

/// Observation directions with quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct Directions<T> {
    pub dim: usize,
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> Directions<T> {
    /// Equispaced on the circle or a Fibonacci set on the sphere, equal weights.
    pub fn uniform(dim: usize, count: usize) -> Result<Self> {
        let min = if dim == 3 { 50 } else { 16 };
        if count < min {
            return Err(Error::InvalidInput(format!("need at least {min} directions in {dim}D")));
        }
        let nf = T::from_usize_lossy(count);
        let points: Vec<Vec<T>> = if dim == 2 {
            (0..count)
                .map(|j| {
                    let t = T::lit(2.0) * T::PI() * T::from_usize_lossy(j) / nf;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        } else if dim == 3 {
            let golden = T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt());
            (0..count)
                .map(|j| {
                    let z = T::one() - (T::lit(2.0) * T::from_usize_lossy(j) + T::one()) / nf;
                    let r = (T::one() - z * z).max(T::zero()).sqrt();
                    let t = golden * T::from_usize_lossy(j);
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        } else {
            return Err(Error::InvalidInput(format!("unsupported dimension {dim}")));
        };
        let total = if dim == 2 {
            T::lit(2.0) * T::PI()
        } else {
            T::lit(4.0) * T::PI()
        };
        Ok(Directions {
            dim,
            weights: vec![total / nf; count],
            points,
        })
    }

    /// A direction count that resolves far fields of sources of radius `r`.
    pub fn resolving(dim: usize, k: T, r: T) -> Result<Self> {
        let band = (T::lit(2.0) * k * r).ceil().to_f64_lossy() as usize;
        let count = if dim == 2 {
            (band + 16).max(64)
        } else {
            ((band + 8) * (band + 8)).max(100)
        };
        Self::uniform(dim, count)
    }
}

/// Complex far-field values at the given directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct FarFieldPattern<T> {
    pub k: T,
    pub directions: Directions<T>,
    pub values: Vec<Cx<T>>,
}

impl<T: Real> FarFieldPattern<T> {
    pub fn dim(&self) -> usize {
        self.directions.dim
    }

    /// `(∫ |u^∞|²)^{1/2}` with the direction weights.
    pub fn l2_norm(&self) -> T {
        self.values
            .iter()
            .zip(&self.directions.weights)
            .map(|(v, w)| v.norm_sqr() * *w)
            .sum::<T>()
            .sqrt()
    }

    /// CSV rows `angle, re, im` (2D) or `x, y, z, re, im` (3D).
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        if self.dim() == 2 {
            writeln!(out, "angle,re,im")?;
            for (d, v) in self.directions.points.iter().zip(&self.values) {
                writeln!(out, "{},{},{}", d[1].atan2(d[0]), v.re, v.im)?;
            }
        } else {
            writeln!(out, "x,y,z,re,im")?;
            for (d, v) in self.directions.points.iter().zip(&self.values) {
                writeln!(out, "{},{},{},{},{}", d[0], d[1], d[2], v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// `-c_m Σ_j e^{-ik x̂·y_j} s_j h^m` for a source `s` on grid cells.
fn farfield_of_source<T: Real>(
    grid: &Grid<T>,
    k: T,
    cells: &[usize],
    source: &[Cx<T>],
    directions: &Directions<T>,
) -> Vec<Cx<T>> {
    let dim = grid.dim();
    let c = farfield_constant(dim, k) * grid.cell_measure();
    let centres: Vec<[T; 3]> = cells.iter().map(|&l| grid.center(l)).collect();
    directions
        .points
        .par_iter()
        .map(|d| {
            let acc = centres
                .iter()
                .zip(source)
                .fold(czero::<T>(), |acc, (y, s)| acc + expi(-k * dot(d, &y[..dim])) * *s);
            -(acc * c)
        })
        .collect()
}

impl<T: Real> ScatterSolution<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.medium.grid
    }

    /// `k²(1 - n) (v + u)` on the support.
    pub fn contrast_source(&self) -> Vec<Cx<T>> {
        self.support
            .iter()
            .zip(&self.contrast_weight)
            .map(|(&l, &m)| self.total[l] * m)
            .collect()
    }

    pub fn far_field(&self, directions: &Directions<T>) -> Result<FarFieldPattern<T>> {
        if directions.dim != self.grid().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.grid().dim(),
                got: directions.dim,
            });
        }
        let src = self.contrast_source();
        Ok(FarFieldPattern {
            k: self.k,
            directions: directions.clone(),
            values: farfield_of_source(self.grid(), self.k, &self.support, &src, directions),
        })
    }

    /// Far field on a direction set resolving the medium.
    pub fn default_far_field(&self) -> Result<FarFieldPattern<T>> {
        let dirs = Directions::resolving(self.grid().dim(), self.k, support_radius(self.grid(), &self.support))?;
        self.far_field(&dirs)
    }

    /// `‖v‖_{L²(D)}` over the inside cells.
    pub fn incident_norm(&self) -> T {
        let s: T = self
            .medium
            .inside
            .iter()
            .zip(&self.incident_field)
            .filter(|(m, _)| **m)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        (s * self.grid().cell_measure()).sqrt()
    }

    /// Scattered field at arbitrary points by the representation integral.
    pub fn scattered_at(&self, points: &[Vec<T>]) -> Result<Vec<Cx<T>>> {
        let grid = self.grid();
        let dim = grid.dim();
        let src = self.contrast_source();
        let hm = grid.cell_measure();
        let self_int = self_cell_integral(
            KernelKind::Helmholtz { k: self.k },
            dim,
            equal_measure_radius(dim, grid.spacing()),
        );
        let centres: Vec<[T; 3]> = self.support.iter().map(|&l| grid.center(l)).collect();
        points
            .par_iter()
            .map(|x| {
                if x.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: x.len(),
                    });
                }
                let own = grid.locate(x).map(|l| grid.center(l));
                let mut acc = czero::<T>();
                for (y, s) in centres.iter().zip(&src) {
                    if Some(*y) == own {
                        acc = acc + *s * self_int;
                    } else {
                        acc = acc + *s * helmholtz_value(dim, self.k, dist(x, &y[..dim])) * hm;
                    }
                }
                Ok(-acc)
            })
            .collect()
    }

    /// Multilinear interpolation of the grid scattered field.
    pub fn interpolate_scattered(&self, x: &[T]) -> Result<Cx<T>> {
        interpolate(self.grid(), &self.scattered, x)
    }

    /// `max |Δ_h w + k² n w|` for the total field `w` over inside cells at
    /// least `min_dist` from `∂D`, with the 5-/7-point Laplacian of step `h`.
    pub fn pde_residual(&self, min_dist: T) -> Result<T> {
        let grid = self.grid();
        let dim = grid.dim();
        let h = grid.spacing();
        let counts = grid.counts();
        let k2 = self.k * self.k;
        let mut worst = T::zero();
        for lin in 0..grid.len() {
            if !self.medium.inside[lin] {
                continue;
            }
            let c = grid.center(lin);
            if self.medium.shape.distance_to_boundary(&c[..dim])? < min_dist {
                continue;
            }
            let idx = grid.unravel(lin);
            if (0..dim).any(|a| idx[a] == 0 || idx[a] + 1 >= counts[a]) {
                continue;
            }
            let w = self.total[lin];
            let mut lap = -w * T::lit(2.0 * dim as f64);
            for a in 0..dim {
                let mut p = idx;
                p[a] += 1;
                lap = lap + self.total[grid.index(p)];
                p[a] -= 2;
                lap = lap + self.total[grid.index(p)];
            }
            let r = lap / (h * h) + w * (k2 * self.medium.q[lin]);
            worst = worst.max(r.norm());
        }
        Ok(worst)
    }

    /// Writes the scattered field in the binary layout of [`write_field_binary`].
    pub fn write_scattered_binary(&self, out: impl Write) -> std::io::Result<()> {
        write_field_binary(self.grid(), &self.scattered, out)
    }
}

fn support_radius<T: Real>(grid: &Grid<T>, cells: &[usize]) -> T {
    let dim = grid.dim();
    cells
        .iter()
        .map(|&l| crate::scalar::norm(&grid.center(l)[..dim]))
        .fold(T::zero(), T::max)
        + grid.spacing()
}

/// Multilinear interpolation of cell-centred values.
pub fn interpolate<T: Real>(grid: &Grid<T>, values: &[Cx<T>], x: &[T]) -> Result<Cx<T>> {
    let dim = grid.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    let h = grid.spacing();
    let mut base = [0usize; 3];
    let mut frac = [T::zero(); 3];
    for a in 0..dim {
        let s = (x[a] - grid.origin()[a]) / h - T::lit(0.5);
        let n = grid.counts()[a];
        if !(s >= T::zero()) || s > T::from_usize_lossy(n - 1) {
            return Err(Error::InvalidInput(
                "interpolation point outside the cell-centre box".into(),
            ));
        }
        let i = s.floor().to_f64_lossy() as usize;
        let i = i.min(n.saturating_sub(2));
        base[a] = i;
        frac[a] = s - T::from_usize_lossy(i);
    }
    let mut acc = czero::<T>();
    for corner in 0..(1usize << dim) {
        let mut idx = base;
        let mut w = T::one();
        for a in 0..dim {
            if corner >> a & 1 == 1 {
                idx[a] += 1;
                w = w * frac[a];
            } else {
                w = w * (T::one() - frac[a]);
            }
        }
        acc = acc + values[grid.index(idx)] * w;
    }
    Ok(acc)
}

/// `ρ(k; v) = ‖u^∞‖₂ / ‖v‖_{L²(D)}`.
pub fn nonscattering_residual<T: Real>(
    medium: &MediumField<T>,
    incident: &IncidentWave<T>,
    opts: SolverOptions<T>,
) -> Result<T> {
    if medium.is_homogeneous() {
        return Ok(T::zero());
    }
    let sol = solve_scattering(medium, incident, opts)?;
    scattering_strength(&sol)
}

/// `ρ` for an existing solution.
pub fn scattering_strength<T: Real>(sol: &ScatterSolution<T>) -> Result<T> {
    let vn = sol.incident_norm();
    if !(vn > T::zero()) {
        return Err(Error::InvalidInput("incident field vanishes on D".into()));
    }
    Ok(sol.default_far_field()?.l2_norm() / vn)
}

/// First-order (Born) scattered field `-G (M v)` on the grid.
pub fn born_approximation<T: Real>(medium: &MediumField<T>, incident: &IncidentWave<T>) -> Result<Vec<Cx<T>>> {
    let op = ScatteringOperator::new(medium, incident.k, SolverOptions::default())?;
    let grid = &medium.grid;
    let dim = grid.dim();
    let pts: Vec<Vec<T>> = op.support.iter().map(|&l| grid.center(l)[..dim].to_vec()).collect();
    let v = eval_incident(incident, &pts)?;
    Ok(op.potential_of(&v).into_iter().map(|z| -z).collect())
}

/// Optical-theorem consistency for plane-wave incidence with real `n`:
/// the ratio of `‖u^∞‖²` to `-sqrt(8π/k) Re(e^{iπ/4} u^∞(d))` (2D) or
/// `(4π/k) Im u^∞(d)` (3D). Equal to 1 for an exact solution.
pub fn optical_theorem_ratio<T: Real>(sol: &ScatterSolution<T>) -> Result<T> {
    let d = match &sol.incident.kind {
        crate::waves::WaveKind::Plane { direction } => direction.clone(),
        _ => return Err(Error::InvalidInput("optical theorem needs a plane wave".into())),
    };
    let ff = sol.default_far_field()?;
    let dirs = Directions {
        dim: d.len(),
        points: vec![d],
        weights: vec![T::one()],
    };
    let forward = sol.far_field(&dirs)?.values[0];
    let k = sol.k;
    let rhs = if dirs.dim == 2 {
        -(T::lit(8.0) * T::PI() / k).sqrt() * (expi(T::PI() / T::lit(4.0)) * forward).re
    } else {
        T::lit(4.0) * T::PI() / k * forward.im
    };
    let n2 = ff.l2_norm();
    Ok(n2 * n2 / rhs)
}

/// Field radiated by a source: `Δu + k²u = f`, `u = -Φ_k * f`.
#[derive(Debug, Clone)]
pub struct SourceSolution<T: Real> {
    pub grid: Grid<T>,
    pub k: T,
    pub field: Vec<Cx<T>>,
    pub far_field: FarFieldPattern<T>,
}

/// Solves the free-space source problem with one convolution.
pub fn solve_source_problem<T: Real>(f: &DensityField<T>, k: T) -> Result<SourceSolution<T>> {
    if !(k > T::zero()) {
        return Err(Error::NonPositiveWavenumber(k.to_f64_lossy()));
    }
    let grid = f.grid.clone();
    let conv = Convolver::new(&grid, KernelKind::Helmholtz { k });
    let field: Vec<Cx<T>> = conv.apply(&f.values).into_iter().map(|z| -z).collect();
    let cells: Vec<usize> = (0..grid.len()).filter(|&l| f.mask[l]).collect();
    let src: Vec<Cx<T>> = cells.iter().map(|&l| f.values[l]).collect();
    let dirs = Directions::resolving(grid.dim(), k, support_radius(&grid, &cells))?;
    let values = farfield_of_source(&grid, k, &cells, &src, &dirs);
    Ok(SourceSolution {
        grid,
        k,
        field,
        far_field: FarFieldPattern {
            k,
            directions: dirs,
            values,
        },
    })
}

/// Magic bytes of the binary field layout.
pub const FIELD_MAGIC: &[u8; 4] = b"HSCF";

/// Binary layout, little endian: magic `HSCF`, `u32` version (1), `u32`
/// dimension, three `u64` cell counts, `f64` spacing, three `f64` origin
/// coordinates (lower corner), then `re, im` pairs as `f32`, axis 0 fastest.
pub fn write_field_binary<T: Real>(grid: &Grid<T>, values: &[Cx<T>], mut out: impl Write) -> std::io::Result<()> {
    out.write_all(FIELD_MAGIC)?;
    out.write_all(&1u32.to_le_bytes())?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for a in 0..3 {
        let n = if a < grid.dim() { grid.counts()[a] } else { 1 };
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    out.write_all(&grid.spacing().to_f64_lossy().to_le_bytes())?;
    for a in 0..3 {
        let o = if a < grid.dim() {
            grid.origin()[a].to_f64_lossy()
        } else {
            0.0
        };
        out.write_all(&o.to_le_bytes())?;
    }
    for v in values {
        out.write_all(&(v.re.to_f64_lossy() as f32).to_le_bytes())?;
        out.write_all(&(v.im.to_f64_lossy() as f32).to_le_bytes())?;
    }
    Ok(())
}

/// CSV rows `x, y[, z], re, im` at the cell centres.
pub fn write_field_csv<T: Real>(grid: &Grid<T>, values: &[Cx<T>], mut out: impl Write) -> std::io::Result<()> {
    let dim = grid.dim();
    writeln!(out, "{},re,im", ["x", "y", "z"][..dim].join(","))?;
    for (lin, v) in values.iter().enumerate() {
        let c = grid.center(lin);
        let coords: Vec<String> = c[..dim].iter().map(|t| t.to_string()).collect();
        writeln!(out, "{},{},{}", coords.join(","), v.re, v.im)?;
    }
    Ok(())
}
