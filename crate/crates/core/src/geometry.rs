//! Shapes of the inhomogeneity, uniform grids and rasterised media.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist, norm, Real};

/// Boundary points closer than this to the query resolve as "outside".
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Default lower bound for the refractive index inside the medium.
pub const DEFAULT_N0: f64 = 1e-3;

/// Parametric description of the inhomogeneity `D`.
///
/// JSON form: `{"type": "disk", "center": [0,0], "radius": 1}` and so on,
/// see `docs/schemas.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real"))]
pub enum Shape<T> {
    Disk {
        center: [T; 2],
        radius: T,
    },
    Ellipse {
        center: [T; 2],
        semi_axes: [T; 2],
        /// Counter-clockwise rotation of the first semi-axis, in radians.
        #[serde(default)]
        rotation: T,
    },
    /// Simple polygon, vertices in counter-clockwise order.
    Polygon {
        vertices: Vec<[T; 2]>,
    },
    Ball {
        center: [T; 3],
        radius: T,
    },
}

/// One boundary quadrature node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample<T> {
    pub point: Vec<T>,
    /// Outward unit normal. At a flagged corner this is the normalised
    /// bisector, useful for labelling only.
    pub normal: Vec<T>,
    /// Arc-length (surface) quadrature weight. Zero at corners.
    pub weight: T,
    pub corner: bool,
}

fn cross2<T: Real>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect<T: Real>(p1: [T; 2], p2: [T; 2], q1: [T; 2], q2: [T; 2]) -> bool {
    let d1 = cross2(q1, q2, p1);
    let d2 = cross2(q1, q2, p2);
    let d3 = cross2(p1, p2, q1);
    let d4 = cross2(p1, p2, q2);
    ((d1 > T::zero()) != (d2 > T::zero())) && ((d3 > T::zero()) != (d4 > T::zero()))
        || d1 == T::zero() && on_segment(q1, q2, p1)
        || d2 == T::zero() && on_segment(q1, q2, p2)
        || d3 == T::zero() && on_segment(p1, p2, q1)
        || d4 == T::zero() && on_segment(p1, p2, q2)
}

fn on_segment<T: Real>(a: [T; 2], b: [T; 2], p: [T; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn point_segment_distance<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).max(T::zero()).min(T::one());
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

impl<T: Real> Shape<T> {
    pub fn disk(center: [T; 2], radius: T) -> Result<Self> {
        let s = Shape::Disk { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn ellipse(center: [T; 2], semi_axes: [T; 2], rotation: T) -> Result<Self> {
        let s = Shape::Ellipse {
            center,
            semi_axes,
            rotation,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn polygon(vertices: Vec<[T; 2]>) -> Result<Self> {
        let s = Shape::Polygon { vertices };
        s.validate()?;
        Ok(s)
    }

    pub fn ball(center: [T; 3], radius: T) -> Result<Self> {
        let s = Shape::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    /// The unit square `[0,1]^2`.
    pub fn unit_square() -> Self {
        let (o, l) = (T::zero(), T::one());
        Shape::Polygon {
            vertices: vec![[o, o], [l, o], [l, l], [o, l]],
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Shape::Ball { .. } => 3,
            _ => 2,
        }
    }

    /// Checks the type invariants (positive radii, simple CCW polygon).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidShape(m.to_string()));
        match self {
            Shape::Disk { center, radius } => {
                if !(*radius > T::zero()) || !radius.is_finite() {
                    return bad("disk radius must be positive");
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return bad("non-finite center");
                }
            }
            Shape::Ball { center, radius } => {
                if !(*radius > T::zero()) || !radius.is_finite() {
                    return bad("ball radius must be positive");
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return bad("non-finite center");
                }
            }
            Shape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                if semi_axes.iter().any(|a| !(*a > T::zero()) || !a.is_finite()) {
                    return bad("ellipse semi-axes must be positive");
                }
                if center.iter().any(|c| !c.is_finite()) || !rotation.is_finite() {
                    return bad("non-finite ellipse parameters");
                }
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return bad("polygon needs at least 3 vertices");
                }
                if vertices.iter().flatten().any(|c| !c.is_finite()) {
                    return bad("non-finite polygon vertex");
                }
                let area = self.signed_polygon_area();
                let scale = self.diameter();
                if area.abs() <= T::lit(1e-12) * scale * scale {
                    return bad("polygon vertices are collinear");
                }
                if area < T::zero() {
                    return bad("polygon must be counter-clockwise");
                }
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    if a == b {
                        return bad("repeated polygon vertex");
                    }
                    for j in i + 1..n {
                        // skip edges sharing a vertex
                        if j == i + 1 || (i == 0 && j == n - 1) {
                            continue;
                        }
                        let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                        if segments_intersect(a, b, c, d) {
                            return bad("polygon is self-intersecting");
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn signed_polygon_area(&self) -> T {
        match self {
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut s = T::zero();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    s = s + a[0] * b[1] - b[0] * a[1];
                }
                s * T::lit(0.5)
            }
            _ => T::zero(),
        }
    }

    /// Reference point: center for round shapes, vertex centroid for polygons.
    pub fn center(&self) -> Vec<T> {
        match self {
            Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => center.to_vec(),
            Shape::Ball { center, .. } => center.to_vec(),
            Shape::Polygon { vertices } => {
                let n = T::from_usize_lossy(vertices.len());
                let sx = vertices.iter().map(|v| v[0]).sum::<T>() / n;
                let sy = vertices.iter().map(|v| v[1]).sum::<T>() / n;
                vec![sx, sy]
            }
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self {
            Shape::Disk { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            Shape::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            Shape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let (s, c) = rotation.sin_cos();
                let (a, b) = (semi_axes[0], semi_axes[1]);
                let ex = (a * a * c * c + b * b * s * s).sqrt();
                let ey = (a * a * s * s + b * b * c * c).sqrt();
                (
                    vec![center[0] - ex, center[1] - ey],
                    vec![center[0] + ex, center[1] + ey],
                )
            }
            Shape::Polygon { vertices } => {
                let mut lo = vec![T::infinity(); 2];
                let mut hi = vec![T::neg_infinity(); 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> T {
        match self {
            Shape::Disk { radius, .. } | Shape::Ball { radius, .. } => *radius * T::lit(2.0),
            Shape::Ellipse { semi_axes, .. } => semi_axes[0].max(semi_axes[1]) * T::lit(2.0),
            Shape::Polygon { vertices } => {
                let mut d = T::zero();
                for a in vertices {
                    for b in vertices {
                        d = d.max(dist(a, b));
                    }
                }
                d
            }
        }
    }

    /// Exact area (2D) or volume (3D).
    pub fn measure(&self) -> T {
        match self {
            Shape::Disk { radius, .. } => T::PI() * *radius * *radius,
            Shape::Ball { radius, .. } => T::lit(4.0 / 3.0) * T::PI() * radius.powi(3),
            Shape::Ellipse { semi_axes, .. } => T::PI() * semi_axes[0] * semi_axes[1],
            Shape::Polygon { .. } => self.signed_polygon_area(),
        }
    }

    /// Perimeter (2D) or surface area (3D).
    pub fn boundary_measure(&self) -> T {
        match self {
            Shape::Disk { radius, .. } => T::lit(2.0) * T::PI() * *radius,
            Shape::Ball { radius, .. } => T::lit(4.0) * T::PI() * *radius * *radius,
            Shape::Ellipse { semi_axes, .. } => {
                // Ramanujan's second approximation; only used for sizing samples.
                let (a, b) = (semi_axes[0], semi_axes[1]);
                let h = ((a - b) / (a + b)).powi(2);
                T::PI()
                    * (a + b)
                    * (T::one() + T::lit(3.0) * h / (T::lit(10.0) + (T::lit(4.0) - T::lit(3.0) * h).sqrt()))
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| dist(&vertices[i], &vertices[(i + 1) % n])).sum()
            }
        }
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Ellipse point expressed in the ellipse's own frame.
    fn ellipse_local(center: &[T; 2], rotation: T, x: &[T]) -> [T; 2] {
        let (s, c) = rotation.sin_cos();
        let dx = x[0] - center[0];
        let dy = x[1] - center[1];
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// Distance from `x` to the boundary `∂D` (unsigned).
    pub fn distance_to_boundary(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        Ok(match self {
            Shape::Disk { center, radius } => (dist(x, center) - *radius).abs(),
            Shape::Ball { center, radius } => (dist(x, center) - *radius).abs(),
            Shape::Polygon { vertices } => {
                let p = [x[0], x[1]];
                let n = vertices.len();
                (0..n)
                    .map(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                    .fold(T::infinity(), T::min)
            }
            Shape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let [u, v] = Self::ellipse_local(center, *rotation, x);
                let (a, b) = (semi_axes[0], semi_axes[1]);
                let d2 = |t: T| {
                    let (s, c) = t.sin_cos();
                    (a * c - u).powi(2) + (b * s - v).powi(2)
                };
                let m = 256;
                let step = T::lit(2.0) * T::PI() / T::from_usize_lossy(m);
                let mut best_t = T::zero();
                let mut best = d2(T::zero());
                for i in 1..m {
                    let t = step * T::from_usize_lossy(i);
                    let d = d2(t);
                    if d < best {
                        best = d;
                        best_t = t;
                    }
                }
                // Newton on the derivative of the squared distance.
                let mut t = best_t;
                for _ in 0..30 {
                    let (s, c) = t.sin_cos();
                    let g = (a * c - u) * (-a * s) + (b * s - v) * (b * c);
                    let gp = a * a * s * s - (a * c - u) * a * c + b * b * c * c - (b * s - v) * b * s;
                    if gp.abs() <= T::min_positive_value() {
                        break;
                    }
                    let dt = g / gp;
                    let dt = dt.max(-step).min(step);
                    t = t - dt;
                    if dt.abs() < T::epsilon() {
                        break;
                    }
                }
                d2(t).min(best).sqrt()
            }
        })
    }

    /// True iff `x` lies in the open set `D`. Points within
    /// [`BOUNDARY_TOL`] of the boundary are reported as outside.
    pub fn contains(&self, x: &[T]) -> Result<bool> {
        self.check_dim(x)?;
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite query point".into()));
        }
        let tol = T::lit(BOUNDARY_TOL);
        Ok(match self {
            Shape::Disk { center, radius } => dist(x, center) < *radius - tol,
            Shape::Ball { center, radius } => dist(x, center) < *radius - tol,
            Shape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let [u, v] = Self::ellipse_local(center, *rotation, x);
                let f = (u / semi_axes[0]).powi(2) + (v / semi_axes[1]).powi(2);
                if f >= T::one() {
                    false
                } else if T::one() - f < T::lit(1e-6) {
                    self.distance_to_boundary(x)? > tol
                } else {
                    true
                }
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                let mut j = n - 1;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[j]);
                    if (a[1] > x[1]) != (b[1] > x[1]) {
                        let xc = (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0];
                        if x[0] < xc {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside && self.distance_to_boundary(x)? > tol
            }
        })
    }

    /// Samples `count` points of `∂D` with outward normals and quadrature
    /// weights. Polygon vertices are always included (flagged, zero weight);
    /// edge samples sit at the midpoints of equal sub-segments.
    pub fn boundary_sample(&self, count: usize) -> Result<Vec<BoundarySample<T>>> {
        if count < 4 {
            return Err(Error::InvalidInput(format!(
                "boundary sample count must be at least 4, got {count}"
            )));
        }
        let two_pi = T::lit(2.0) * T::PI();
        let nf = T::from_usize_lossy(count);
        Ok(match self {
            Shape::Disk { center, radius } => (0..count)
                .map(|i| {
                    let t = two_pi * T::from_usize_lossy(i) / nf;
                    let (s, c) = t.sin_cos();
                    BoundarySample {
                        point: vec![center[0] + *radius * c, center[1] + *radius * s],
                        normal: vec![c, s],
                        weight: two_pi * *radius / nf,
                        corner: false,
                    }
                })
                .collect(),
            Shape::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let (rs, rc) = rotation.sin_cos();
                let (a, b) = (semi_axes[0], semi_axes[1]);
                (0..count)
                    .map(|i| {
                        let t = two_pi * T::from_usize_lossy(i) / nf;
                        let (s, c) = t.sin_cos();
                        let (lx, ly) = (a * c, b * s);
                        let (nx, ny) = (b * c, a * s);
                        let nn = (nx * nx + ny * ny).sqrt();
                        let speed = (a * a * s * s + b * b * c * c).sqrt();
                        BoundarySample {
                            point: vec![center[0] + rc * lx - rs * ly, center[1] + rs * lx + rc * ly],
                            normal: vec![(rc * nx - rs * ny) / nn, (rs * nx + rc * ny) / nn],
                            weight: speed * two_pi / nf,
                            corner: false,
                        }
                    })
                    .collect()
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let per = self.boundary_measure();
                let lens: Vec<T> = (0..n).map(|i| dist(&vertices[i], &vertices[(i + 1) % n])).collect();
                let budget = count.saturating_sub(n).max(n);
                let mut out = Vec::with_capacity(budget + n);
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let prev = vertices[(i + n - 1) % n];
                    let en = edge_normal(a, b);
                    let pn = edge_normal(prev, a);
                    let bis = [en[0] + pn[0], en[1] + pn[1]];
                    let bn = norm(&bis);
                    out.push(BoundarySample {
                        point: a.to_vec(),
                        normal: vec![bis[0] / bn, bis[1] / bn],
                        weight: T::zero(),
                        corner: true,
                    });
                    let share = (lens[i] / per * T::from_usize_lossy(budget)).round();
                    let m = share.to_f64_lossy().max(1.0) as usize;
                    let mf = T::from_usize_lossy(m);
                    for k in 0..m {
                        let t = (T::from_usize_lossy(k) + T::lit(0.5)) / mf;
                        out.push(BoundarySample {
                            point: vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                            normal: en.to_vec(),
                            weight: lens[i] / mf,
                            corner: false,
                        });
                    }
                }
                out
            }
            Shape::Ball { center, radius } => {
                // Fibonacci lattice, equal-area weights.
                let golden = T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt());
                let w = T::lit(4.0) * T::PI() * *radius * *radius / nf;
                (0..count)
                    .map(|i| {
                        let z = T::one() - T::lit(2.0) * (T::from_usize_lossy(i) + T::lit(0.5)) / nf;
                        let r = (T::one() - z * z).sqrt();
                        let (s, c) = (golden * T::from_usize_lossy(i)).sin_cos();
                        let nrm = vec![r * c, r * s, z];
                        BoundarySample {
                            point: (0..3).map(|k| center[k] + *radius * nrm[k]).collect(),
                            normal: nrm,
                            weight: w,
                            corner: false,
                        }
                    })
                    .collect()
            }
        })
    }
}

/// Outward normal of the edge `a -> b` of a counter-clockwise polygon.
fn edge_normal<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    let t = [b[0] - a[0], b[1] - a[1]];
    let l = (t[0] * t[0] + t[1] * t[1]).sqrt();
    [t[1] / l, -t[0] / l]
}

/// Uniform cell-centred grid with isotropic spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct Grid<T> {
    dim: usize,
    /// Lower corner of the grid box.
    origin: [T; 3],
    h: T,
    /// Cells per axis; unused axes hold 1.
    counts: [usize; 3],
}

/// Default cap on the number of cells of any single grid.
pub const DEFAULT_MAX_CELLS: usize = 1 << 24;

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, origin: &[T], h: T, counts: &[usize], max_cells: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) || origin.len() != dim || counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} with origin/count lengths {}/{}",
                origin.len(),
                counts.len()
            )));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidGrid("cell counts must be positive".into()));
        }
        let total: usize = counts.iter().product();
        if total > max_cells {
            return Err(Error::BudgetExceeded {
                needed: total,
                cap: max_cells,
            });
        }
        let mut o = [T::zero(); 3];
        let mut c = [1usize; 3];
        o[..dim].copy_from_slice(origin);
        c[..dim].copy_from_slice(counts);
        Ok(Grid {
            dim,
            origin: o,
            h,
            counts: c,
        })
    }

    /// Smallest grid of spacing `h`, centred on the shape's bounding box,
    /// that leaves a margin of at least `2h` on every side.
    pub fn covering(shape: &Shape<T>, h: T, max_cells: usize) -> Result<Self> {
        Self::covering_with_margin(shape, h, T::lit(2.0) * h, max_cells)
    }

    pub fn covering_with_margin(shape: &Shape<T>, h: T, margin: T, max_cells: usize) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        let margin = margin.max(T::lit(2.0) * h);
        let (lo, hi) = shape.bounding_box();
        let dim = shape.dimension();
        let mut origin = vec![T::zero(); dim];
        let mut counts = vec![0usize; dim];
        for k in 0..dim {
            let ext = hi[k] - lo[k] + T::lit(2.0) * margin;
            let n = (ext / h * (T::one() - T::lit(1e-12))).ceil().to_f64_lossy() as usize + 1;
            let mid = (hi[k] + lo[k]) * T::lit(0.5);
            counts[k] = n;
            origin[k] = mid - T::from_usize_lossy(n) * h * T::lit(0.5);
        }
        Self::new(dim, &origin, h, &counts, max_cells)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn origin(&self) -> &[T] {
        &self.origin[..self.dim]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^m`
    pub fn cell_measure(&self) -> T {
        self.h.powi(self.dim as i32)
    }

    /// Linear index, first axis fastest.
    #[inline]
    pub fn index(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.counts[0] * (idx[1] + self.counts[1] * idx[2])
    }

    #[inline]
    pub fn unravel(&self, lin: usize) -> [usize; 3] {
        let i0 = lin % self.counts[0];
        let r = lin / self.counts[0];
        [i0, r % self.counts[1], r / self.counts[1]]
    }

    /// Cell centre of a linear index (unused coordinates are zero).
    #[inline]
    pub fn center(&self, lin: usize) -> [T; 3] {
        let idx = self.unravel(lin);
        let mut c = [T::zero(); 3];
        for (k, ck) in c.iter_mut().enumerate().take(self.dim) {
            *ck = self.origin[k] + (T::from_usize_lossy(idx[k]) + T::lit(0.5)) * self.h;
        }
        c
    }

    /// The cell whose closure contains `x`, if any.
    pub fn locate(&self, x: &[T]) -> Option<usize> {
        let mut idx = [0usize; 3];
        for k in 0..self.dim {
            let f = ((x[k] - self.origin[k]) / self.h).floor();
            if f < T::zero() {
                return None;
            }
            let i = f.to_f64_lossy() as usize;
            if i >= self.counts[k] {
                return None;
            }
            idx[k] = i;
        }
        Some(self.index(idx))
    }

    /// Whether `x` is inside the grid box.
    pub fn contains_point(&self, x: &[T]) -> bool {
        (0..self.dim).all(|k| {
            let lo = self.origin[k];
            let hi = lo + T::from_usize_lossy(self.counts[k]) * self.h;
            x[k] >= lo && x[k] <= hi
        })
    }

    /// Minimum distance between the shape's bounding box and the grid box.
    pub fn margin_around(&self, shape: &Shape<T>) -> T {
        let (lo, hi) = shape.bounding_box();
        let mut m = T::infinity();
        for k in 0..self.dim {
            let glo = self.origin[k];
            let ghi = glo + T::from_usize_lossy(self.counts[k]) * self.h;
            m = m.min(lo[k] - glo).min(ghi - hi[k]);
        }
        m
    }
}

/// Refractive index inside `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real"))]
pub enum Contrast<T> {
    Constant {
        n: T,
    },
    /// `n(r) = sum_k coeffs[k] r^k`, `r` measured from the shape centre.
    Radial {
        coeffs: Vec<T>,
    },
}

impl<T: Real> Contrast<T> {
    pub fn constant(n: T) -> Self {
        Contrast::Constant { n }
    }

    pub fn eval(&self, x: &[T], center: &[T]) -> T {
        match self {
            Contrast::Constant { n } => *n,
            Contrast::Radial { coeffs } => {
                let r = dist(x, center);
                coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * r + c)
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            Contrast::Constant { n } => *n == T::one(),
            Contrast::Radial { coeffs } => {
                coeffs.first() == Some(&T::one()) && coeffs[1..].iter().all(|c| *c == T::zero())
            }
        }
    }
}

/// The coefficient `q` sampled at cell centres: `n(x)` inside `D`, 1 outside.
#[derive(Debug, Clone)]
pub struct MediumField<T> {
    pub grid: Grid<T>,
    pub shape: Shape<T>,
    pub contrast: Contrast<T>,
    pub q: Vec<T>,
    pub inside: Vec<bool>,
    inside_count: usize,
}

impl<T: Real> MediumField<T> {
    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    /// `h^m` times the number of inside cells.
    pub fn measure_estimate(&self) -> T {
        self.grid.cell_measure() * T::from_usize_lossy(self.inside_count)
    }

    /// Largest `|q|` over the grid.
    pub fn max_index(&self) -> T {
        self.q.iter().fold(T::one(), |m, &v| m.max(v.abs()))
    }

    /// Whether every cell has `q = 1`.
    pub fn is_homogeneous(&self) -> bool {
        self.q.iter().all(|&v| v == T::one())
    }
}

/// Samples `q` at the cell centres of `grid`.
pub fn rasterize<T: Real>(shape: &Shape<T>, contrast: &Contrast<T>, grid: &Grid<T>) -> Result<MediumField<T>> {
    rasterize_with_floor(shape, contrast, grid, T::lit(DEFAULT_N0))
}

pub fn rasterize_with_floor<T: Real>(
    shape: &Shape<T>,
    contrast: &Contrast<T>,
    grid: &Grid<T>,
    n0: T,
) -> Result<MediumField<T>> {
    shape.validate()?;
    if grid.dim() != shape.dimension() {
        return Err(Error::DimensionMismatch {
            expected: shape.dimension(),
            got: grid.dim(),
        });
    }
    let margin = grid.margin_around(shape);
    if margin < T::lit(2.0) * grid.spacing() * (T::one() - T::lit(1e-9)) {
        return Err(Error::GridTooSmall(format!(
            "margin {} is below 2h = {}",
            margin,
            T::lit(2.0) * grid.spacing()
        )));
    }
    let center = shape.center();
    let dim = grid.dim();
    let mut q = vec![T::one(); grid.len()];
    let mut inside = vec![false; grid.len()];
    let mut count = 0;
    for lin in 0..grid.len() {
        let c = grid.center(lin);
        if shape.contains(&c[..dim])? {
            let n = contrast.eval(&c[..dim], &center);
            if !(n >= n0) || !n.is_finite() {
                return Err(Error::InvalidMedium(format!(
                    "refractive index {n} below floor {n0} at a cell centre"
                )));
            }
            q[lin] = n;
            inside[lin] = true;
            count += 1;
        }
    }
    Ok(MediumField {
        grid: grid.clone(),
        shape: shape.clone(),
        contrast: contrast.clone(),
        q,
        inside,
        inside_count: count,
    })
}

/// Like [`rasterize`], but cells cut by `∂D` get the cell average of `q`
/// from `subsamples^m` midpoint samples, so the discrete contrast carries
/// the right volume near the interface. The `inside` mask stays centre-based.
pub fn rasterize_averaged<T: Real>(
    shape: &Shape<T>,
    contrast: &Contrast<T>,
    grid: &Grid<T>,
    subsamples: usize,
) -> Result<MediumField<T>> {
    if subsamples == 0 {
        return Err(Error::InvalidInput("subsamples must be positive".into()));
    }
    let mut field = rasterize(shape, contrast, grid)?;
    let dim = grid.dim();
    let h = grid.spacing();
    let center = shape.center();
    let reach = h * T::lit(0.5) * T::from_usize_lossy(dim).sqrt() * T::lit(1.0001);
    let s = subsamples;
    let total = s.pow(dim as u32);
    let inv = T::one() / T::from_usize_lossy(total);
    let n0 = T::lit(DEFAULT_N0);
    for lin in 0..grid.len() {
        let c = grid.center(lin);
        if shape.distance_to_boundary(&c[..dim])? > reach {
            continue;
        }
        let mut acc = T::zero();
        let mut p = [T::zero(); 3];
        for sub in 0..total {
            let mut rest = sub;
            for a in 0..dim {
                let i = rest % s;
                rest /= s;
                let t = (T::from_usize_lossy(i) + T::lit(0.5)) / T::from_usize_lossy(s) - T::lit(0.5);
                p[a] = c[a] + t * h;
            }
            if shape.contains(&p[..dim])? {
                acc = acc + contrast.eval(&p[..dim], &center) - T::one();
            }
        }
        let q = T::one() + acc * inv;
        if !(q >= n0) || !q.is_finite() {
            return Err(Error::InvalidMedium(format!("averaged index {q} below floor {n0}")));
        }
        field.q[lin] = q;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_examples() {
        let d = Shape::<f64>::disk([0.0, 0.0], 1.0).unwrap();
        assert!(d.contains(&[0.0, 0.0]).unwrap());
        assert!(!d.contains(&[2.0, 0.0]).unwrap());
        assert!(!d.contains(&[1.0, 0.0]).unwrap());
        let sq = Shape::<f64>::unit_square();
        assert!(sq.contains(&[0.5, 0.5]).unwrap());
        assert!(!sq.contains(&[0.0, 0.5]).unwrap());
        assert!(!sq.contains(&[0.5, 1.0 - 1e-13]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let d = Shape::<f64>::disk([0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            d.contains(&[0.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(Shape::<f64>::disk([0.0, 0.0], 0.0).is_err());
        assert!(Shape::<f64>::ellipse([0.0, 0.0], [1.0, -1.0], 0.0).is_err());
        // clockwise
        assert!(Shape::<f64>::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
        // collinear
        assert!(Shape::<f64>::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        // bow-tie
        assert!(Shape::<f64>::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn disk_sample_of_four() {
        let d = Shape::<f64>::disk([0.0, 0.0], 1.0).unwrap();
        let s = d.boundary_sample(4).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (b, e) in s.iter().zip(expect) {
            assert!((b.point[0] - e[0]).abs() < 1e-15 && (b.point[1] - e[1]).abs() < 1e-15);
            assert_eq!(b.point, b.normal);
        }
    }

    #[test]
    fn square_sample_flags_corners() {
        let s = Shape::<f64>::unit_square().boundary_sample(8).unwrap();
        let corners: Vec<_> = s.iter().filter(|b| b.corner).collect();
        assert_eq!(corners.len(), 4);
        for c in &corners {
            assert_eq!(c.weight, 0.0);
            assert!((norm(&c.normal) - 1.0).abs() < 1e-15);
        }
        let perim: f64 = s.iter().map(|b| b.weight).sum();
        assert!((perim - 4.0).abs() < 1e-14);
    }

    #[test]
    fn ellipse_axis_normal() {
        let e = Shape::<f64>::ellipse([0.0, 0.0], [2.0, 1.0], 0.0).unwrap();
        let s = e.boundary_sample(16).unwrap();
        assert!((s[0].point[0] - 2.0).abs() < 1e-15);
        assert!((s[0].normal[0] - 1.0).abs() < 1e-15 && s[0].normal[1].abs() < 1e-15);
    }

    #[test]
    fn ellipse_distance() {
        let e = Shape::<f64>::ellipse([0.0, 0.0], [2.0, 1.0], 0.3).unwrap();
        for b in e.boundary_sample(40).unwrap() {
            let p = [b.point[0] + 0.05 * b.normal[0], b.point[1] + 0.05 * b.normal[1]];
            assert!((e.distance_to_boundary(&p).unwrap() - 0.05).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_contrast_rasterizes_to_one() {
        let s = Shape::<f64>::ellipse([0.1, 0.0], [1.0, 0.6], 0.4).unwrap();
        let g = Grid::<f64>::covering(&s, 0.05, DEFAULT_MAX_CELLS).unwrap();
        let m = rasterize(&s, &Contrast::constant(1.0), &g).unwrap();
        assert!(m.q.iter().all(|&v| v == 1.0));
        assert!(m.inside_count() > 0);
    }

    #[test]
    fn grid_too_small_is_reported() {
        let s = Shape::<f64>::disk([0.0, 0.0], 1.0).unwrap();
        let g = Grid::<f64>::new(2, &[-1.0, -1.0], 0.1, &[20, 20], DEFAULT_MAX_CELLS).unwrap();
        assert!(matches!(
            rasterize(&s, &Contrast::constant(2.0), &g),
            Err(Error::GridTooSmall(_))
        ));
    }

    #[test]
    fn cell_budget() {
        let s = Shape::<f64>::disk([0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            Grid::<f64>::covering(&s, 1e-3, 10_000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn shape_json_round_trip() {
        let s = Shape::<f64>::polygon(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.5]]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"type\":\"polygon\""));
        let back: Shape<f64> = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
        let e: Shape<f64> = serde_json::from_str(r#"{"type":"ellipse","center":[0,0],"semi_axes":[2,1]}"#).unwrap();
        assert_eq!(e.measure(), 2.0 * std::f64::consts::PI);
    }
}
