//! Discrete convolution with a radially symmetric kernel on a uniform grid,
//! done by FFT on a zero-padded torus of at least twice the grid extent.
//!
//! The kernel is sampled at lattice offsets `o h` (`K(o) = h^m Φ(|o| h)`),
//! truncated at the grid diameter, with the origin entry replaced by the
//! integral over the equal-measure disk/ball. Since `K(-o) = K(o)` the
//! discrete operator is symmetric.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::geometry::Grid;
use crate::kernels::KernelKind;
use crate::scalar::{cx, czero, Cx, Real};
use crate::volpot::{equal_measure_radius, self_cell_integral};

/// Smallest `n >= target` of the form `2^a 3^b 5^c`.
pub fn next_smooth(target: usize) -> usize {
    let mut n = target.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// In-place multi-dimensional FFT with axis 0 fastest.
pub struct FftNd<T: Real> {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
}

impl<T: Real> FftNd<T> {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            dims: dims.to_vec(),
            forward: dims.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalised transform; `inverse` uses `e^{+i}`.
    pub fn process(&self, data: &mut [Cx<T>], inverse: bool) {
        assert_eq!(data.len(), self.len());
        let plans = if inverse { &self.inverse } else { &self.forward };
        let mut stride = 1;
        for (axis, &n) in self.dims.iter().enumerate() {
            let plan = &plans[axis];
            if axis == 0 {
                data.par_chunks_mut(n).for_each_init(
                    || vec![czero::<T>(); plan.get_inplace_scratch_len()],
                    |scratch, line| plan.process_with_scratch(line, scratch),
                );
            } else {
                let block = stride * n;
                data.par_chunks_mut(block).for_each(|blk| {
                    // gather the `stride` interleaved lines of this block
                    let mut lines = vec![czero::<T>(); block];
                    for t in 0..n {
                        for j in 0..stride {
                            lines[j * n + t] = blk[t * stride + j];
                        }
                    }
                    let mut scratch = vec![czero::<T>(); plan.get_inplace_scratch_len()];
                    for line in lines.chunks_mut(n) {
                        plan.process_with_scratch(line, &mut scratch);
                    }
                    for t in 0..n {
                        for j in 0..stride {
                            blk[t * stride + j] = lines[j * n + t];
                        }
                    }
                });
            }
            stride *= n;
        }
    }
}

/// Precomputed Fourier symbol of a kernel on the padded torus of a grid.
pub struct Convolver<T: Real> {
    dim: usize,
    counts: [usize; 3],
    torus: [usize; 3],
    fft: FftNd<T>,
    symbol: Vec<Cx<T>>,
}

impl<T: Real> Convolver<T> {
    pub fn new(grid: &Grid<T>, kind: KernelKind<T>) -> Self {
        let dim = grid.dim();
        let mut counts = [1usize; 3];
        let mut torus = [1usize; 3];
        for a in 0..dim {
            counts[a] = grid.counts()[a];
            torus[a] = next_smooth(2 * counts[a]);
        }
        let h = grid.spacing();
        let hm = grid.cell_measure();
        let diam2: T = (0..dim)
            .map(|a| {
                let l = h * T::from_usize_lossy(counts[a]);
                l * l
            })
            .sum();
        let cutoff = diam2.sqrt();
        let origin_value = self_cell_integral(kind, dim, equal_measure_radius(dim, h));

        // tabulate over |o| in the first orthant, then mirror
        let half: Vec<usize> = (0..3).map(|a| torus[a] / 2 + 1).collect();
        let hlen = half[0] * half[1] * half[2];
        let table: Vec<Cx<T>> = (0..hlen)
            .into_par_iter()
            .map(|lin| {
                let o = [lin % half[0], (lin / half[0]) % half[1], lin / (half[0] * half[1])];
                if o == [0, 0, 0] {
                    return origin_value;
                }
                let r2: T = (0..dim)
                    .map(|a| {
                        let t = h * T::from_usize_lossy(o[a]);
                        t * t
                    })
                    .sum();
                let r = r2.sqrt();
                if r > cutoff {
                    return czero();
                }
                let v = match kind {
                    KernelKind::Laplace => cx(crate::kernels::laplace_profile(dim, r).0, T::zero()),
                    KernelKind::Helmholtz { k } => crate::kernels::helmholtz_value(dim, k, r),
                };
                v * hm
            })
            .collect();

        let total = torus[0] * torus[1] * torus[2];
        let scale = T::one() / T::from_usize_lossy(total);
        let fold = |p: usize, m: usize| if p <= m / 2 { p } else { m - p };
        let mut symbol: Vec<Cx<T>> = (0..total)
            .into_par_iter()
            .map(|lin| {
                let p0 = lin % torus[0];
                let p1 = (lin / torus[0]) % torus[1];
                let p2 = lin / (torus[0] * torus[1]);
                let o = [fold(p0, torus[0]), fold(p1, torus[1]), fold(p2, torus[2])];
                table[o[0] + half[0] * (o[1] + half[1] * o[2])] * scale
            })
            .collect();
        let fft = FftNd::new(&torus[..dim]);
        fft.process(&mut symbol, false);
        Convolver {
            dim,
            counts,
            torus,
            fft,
            symbol,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out_i = Σ_j K(i - j) input_j` over the grid.
    pub fn apply(&self, input: &[Cx<T>]) -> Vec<Cx<T>> {
        let [n0, n1, n2] = self.counts;
        assert_eq!(input.len(), n0 * n1 * n2);
        let [t0, t1, _] = self.torus;
        let mut buf = vec![czero::<T>(); self.symbol.len()];
        for k in 0..n2 {
            for j in 0..n1 {
                let src = &input[(k * n1 + j) * n0..(k * n1 + j + 1) * n0];
                let dst = (k * t1 + j) * t0;
                buf[dst..dst + n0].copy_from_slice(src);
            }
        }
        self.fft.process(&mut buf, false);
        buf.par_iter_mut()
            .zip(self.symbol.par_iter())
            .for_each(|(b, s)| *b = *b * *s);
        self.fft.process(&mut buf, true);
        let mut out = vec![czero::<T>(); input.len()];
        for k in 0..n2 {
            for j in 0..n1 {
                let src = (k * t1 + j) * t0;
                out[(k * n1 + j) * n0..(k * n1 + j + 1) * n0].copy_from_slice(&buf[src..src + n0]);
            }
        }
        out
    }
}
