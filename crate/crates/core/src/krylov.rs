//! Restarted GMRES for matrix-free complex linear systems.

use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Real};

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions<T> {
    /// Target relative residual `‖b - Ax‖ / ‖b‖`.
    pub tol: T,
    pub restart: usize,
    pub max_iter: usize,
}

impl<T: Real> Default for GmresOptions<T> {
    fn default() -> Self {
        GmresOptions {
            tol: T::lit(1e-8),
            restart: 150,
            max_iter: 3000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome<T> {
    pub x: Vec<Cx<T>>,
    pub iterations: usize,
    /// True relative residual at exit.
    pub residual: T,
    /// Estimated relative residual after each iteration.
    pub history: Vec<T>,
}

fn norm2<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

fn dotc<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    // conj(a) · b
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Solves `A x = b` starting from `x0` (zero when `None`).
pub fn gmres<T: Real>(
    apply: impl Fn(&[Cx<T>]) -> Vec<Cx<T>>,
    b: &[Cx<T>],
    x0: Option<Vec<Cx<T>>>,
    opts: GmresOptions<T>,
) -> Result<GmresOutcome<T>> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.unwrap_or_else(|| vec![czero(); n]);
    if bnorm == T::zero() {
        return Ok(GmresOutcome {
            x: vec![czero(); n],
            iterations: 0,
            residual: T::zero(),
            history: vec![],
        });
    }
    let m = opts.restart.max(1);
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<Cx<T>> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(GmresOutcome {
                x,
                iterations,
                residual: rel,
                history,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                final_residual: rel.to_f64_lossy(),
                history: history.iter().map(|h: &T| h.to_f64_lossy()).collect(),
            });
        }
        let mut basis: Vec<Vec<Cx<T>>> = vec![r.iter().map(|v| *v / beta).collect()];
        let mut hess: Vec<Vec<Cx<T>>> = Vec::new();
        let mut cs: Vec<(T, Cx<T>)> = Vec::new();
        let mut g = vec![czero::<T>(); m + 1];
        g[0] = Cx::new(beta, T::zero());
        let mut steps = 0;
        for j in 0..m {
            let mut w = apply(&basis[j]);
            let mut col = vec![czero::<T>(); j + 2];
            for (i, vi) in basis.iter().enumerate() {
                let hij = dotc(vi, &w);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk = *wk - hij * vk;
                }
            }
            let wn = norm2(&w);
            col[j + 1] = Cx::new(wn, T::zero());
            for (i, &(c, s)) in cs.iter().enumerate() {
                let a = col[i];
                let bb = col[i + 1];
                col[i] = a * c + s * bb;
                col[i + 1] = -s.conj() * a + bb * c;
            }
            let a = col[j];
            let bb = col[j + 1];
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == T::zero() {
                (T::one(), czero())
            } else if a.norm() == T::zero() {
                (T::zero(), Cx::new(T::one(), T::zero()) * (bb.conj() / bb.norm()))
            } else {
                let c = a.norm() / den;
                let s = (a / a.norm()) * bb.conj() / den;
                (c, s)
            };
            col[j] = a * c + s * bb;
            col[j + 1] = czero();
            g[j + 1] = -s.conj() * g[j];
            g[j] = g[j] * c;
            cs.push((c, s));
            hess.push(col);
            steps = j + 1;
            iterations += 1;
            let est = g[j + 1].norm() / bnorm;
            history.push(est);
            if est <= opts.tol || iterations >= opts.max_iter || wn == T::zero() {
                break;
            }
            basis.push(w.iter().map(|v| *v / wn).collect());
        }
        // back substitution on the triangular factor
        let mut y = vec![czero::<T>(); steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s = s - hess[k][i] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[k]) {
                *xi = *xi + *yk * vi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(a: &[Vec<Cx<f64>>]) -> impl Fn(&[Cx<f64>]) -> Vec<Cx<f64>> + '_ {
        move |x| {
            a.iter()
                .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
                .collect()
        }
    }

    #[test]
    fn solves_small_nonsymmetric_system() {
        let n = 30;
        let a: Vec<Vec<Cx<f64>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = if i == j { 4.0 } else { 0.0 };
                        Cx::new(
                            d + ((i * 7 + j * 3) % 5) as f64 * 0.1,
                            ((i + 2 * j) % 3) as f64 * 0.2 - 0.2,
                        )
                    })
                    .collect()
            })
            .collect();
        let b: Vec<Cx<f64>> = (0..n).map(|i| Cx::new(i as f64, 1.0)).collect();
        for restart in [5, 40] {
            let out = gmres(
                dense(&a),
                &b,
                None,
                GmresOptions {
                    tol: 1e-12,
                    restart,
                    max_iter: 500,
                },
            )
            .unwrap();
            let ax = dense(&a)(&out.x);
            let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= 1e-10 * norm2(&b), "restart {restart}: {res}");
            assert!(out.residual <= 1e-12);
        }
    }

    #[test]
    fn identity_takes_one_step_and_zero_rhs_none() {
        let id = |x: &[Cx<f64>]| x.to_vec();
        let b = vec![Cx::new(1.0, 2.0); 4];
        let out = gmres(id, &b, None, GmresOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        let out = gmres(id, &[Cx::new(0.0, 0.0); 4], None, GmresOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn reports_history_on_failure() {
        // a rotation needs two steps; cap at one
        let rot = |x: &[Cx<f64>]| vec![-x[1], x[0]];
        let err = gmres(
            rot,
            &[Cx::new(1.0, 0.0), Cx::new(0.0, 0.0)],
            None,
            GmresOptions {
                tol: 1e-12,
                restart: 1,
                max_iter: 1,
            },
        )
        .unwrap_err();
        match err {
            Error::NotConverged { history, .. } => assert_eq!(history.len(), 1),
            e => panic!("{e:?}"),
        }
    }
}
