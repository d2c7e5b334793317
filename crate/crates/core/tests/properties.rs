use std::f64::consts::PI;

use helmscat::geometry::*;
use helmscat::kernels::{helmholtz_kernel, kernel, laplace_kernel, KernelKind};
use helmscat::radial::te_determinant_raw;
use helmscat::volpot::{appendix_inequality_check, symmetric_jump_probe, DensityField, ProbeOptions};
use helmscat::waves::{eval_incident, herglotz_nodes, herglotz_value, FourierDensity, IncidentWave};
use helmscat::Cx;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coeffs(max_order: usize) -> impl Strategy<Value = Vec<Cx<f64>>> {
    prop::collection::vec(
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Cx::new(a, b)),
        1..=2 * max_order + 1,
    )
}

fn density(c: Vec<Cx<f64>>) -> FourierDensity<f64> {
    let min_order = -((c.len() / 2) as i64);
    FourierDensity { min_order, coeffs: c }
}

fn rotate(p: [f64; 2], a: f64) -> [f64; 2] {
    let (s, c) = a.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_normals_point_outward(
        a in 0.3..2.0f64, b in 0.3..2.0f64, rot in 0.0..PI, cx in -1.0..1.0f64, cy in -1.0..1.0f64,
    ) {
        let shapes = [
            Shape::ellipse([cx, cy], [a, b], rot).unwrap(),
            Shape::disk([cx, cy], a).unwrap(),
            Shape::polygon(vec![[cx, cy], [cx + a, cy], [cx + a + 0.3, cy + b], [cx - 0.2, cy + 0.8 * b]]).unwrap(),
        ];
        for s in &shapes {
            let eps = 1e-4 * s.diameter();
            for bs in s.boundary_sample(40).unwrap().iter().filter(|b| !b.corner) {
                let inside: Vec<f64> = bs.point.iter().zip(&bs.normal).map(|(p, n)| p - eps * n).collect();
                let outside: Vec<f64> = bs.point.iter().zip(&bs.normal).map(|(p, n)| p + eps * n).collect();
                prop_assert!(s.contains(&inside).unwrap());
                prop_assert!(!s.contains(&outside).unwrap());
            }
        }
    }

    #[test]
    fn contains_is_rotation_invariant(
        a in 0.3..2.0f64, b in 0.3..2.0f64, rot in 0.0..PI, turn in 0.0..2.0 * PI,
        cx in -1.0..1.0f64, cy in -1.0..1.0f64, px in -3.0..3.0f64, py in -3.0..3.0f64,
    ) {
        let c2 = rotate([cx, cy], turn);
        let q = rotate([px, py], turn);
        let e1 = Shape::ellipse([cx, cy], [a, b], rot).unwrap();
        let e2 = Shape::ellipse(c2, [a, b], rot + turn).unwrap();
        let d1 = Shape::disk([cx, cy], a).unwrap();
        let d2 = Shape::disk(c2, a).unwrap();
        // skip points within rounding distance of the boundary
        if e1.distance_to_boundary(&[px, py]).unwrap() > 1e-9 {
            prop_assert_eq!(e1.contains(&[px, py]).unwrap(), e2.contains(&q).unwrap());
        }
        if d1.distance_to_boundary(&[px, py]).unwrap() > 1e-9 {
            prop_assert_eq!(d1.contains(&[px, py]).unwrap(), d2.contains(&q).unwrap());
        }
    }

    #[test]
    fn kernel_gradient_matches_central_difference(
        r in 0.1..10.0f64, th in 0.0..2.0 * PI, k in 0.5..5.0f64, three in any::<bool>(),
    ) {
        let dim = if three { 3 } else { 2 };
        let x: Vec<f64> = if three { vec![r * th.cos() * 0.6, r * th.sin() * 0.6, r * 0.8] } else { vec![r * th.cos(), r * th.sin()] };
        let y = vec![0.0; dim];
        let step = 1e-5 * r;
        for kind in [KernelKind::Laplace, KernelKind::Helmholtz { k }] {
            let e = kernel(kind, &x, &y, dim).unwrap();
            let gnorm: f64 = e.gradient[..dim].iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
            for a in 0..dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += step;
                xm[a] -= step;
                let fd = (kernel(kind, &xp, &y, dim).unwrap().value - kernel(kind, &xm, &y, dim).unwrap().value) / (2.0 * step);
                prop_assert!((fd - e.gradient[a]).norm() <= 1e-6 * gnorm, "{kind:?} axis {a}: {fd} vs {}", e.gradient[a]);
            }
        }
    }

    #[test]
    fn kernels_solve_their_equations_away_from_source(
        r in 0.5..5.0f64, th in 0.0..2.0 * PI, k in 0.5..4.0f64,
    ) {
        let x = [r * th.cos(), r * th.sin()];
        let y = [0.0, 0.0];
        let s = 1e-3;
        let lap = |f: &dyn Fn(&[f64]) -> Cx<f64>| {
            (f(&[x[0] + s, x[1]]) + f(&[x[0] - s, x[1]]) + f(&[x[0], x[1] + s]) + f(&[x[0], x[1] - s]) - f(&x) * 4.0) / (s * s)
        };
        let hv = |p: &[f64]| helmholtz_kernel(p, &y, k, 2).unwrap().value;
        let lv = |p: &[f64]| laplace_kernel(p, &y, 2).unwrap().value;
        let scale_h = k.powi(4) * s * s * 10.0 / r.sqrt() + 1e-6;
        prop_assert!((lap(&hv) + hv(&x) * (k * k)).norm() <= scale_h);
        prop_assert!(lap(&lv).norm() <= 1e-6 / (r * r));
    }

    #[test]
    fn appendix_gap_is_nonnegative(a in -10.0..10.0f64, b in -10.0..10.0f64) {
        let (_, _, gap) = appendix_inequality_check(a, b);
        prop_assert!(gap >= -1e-12);
    }

    #[test]
    fn herglotz_is_linear(c1 in coeffs(3), c2 in coeffs(3), ar in -2.0..2.0f64, ai in -2.0..2.0f64, br in -2.0..2.0f64, bi in -2.0..2.0f64,
                          px in -1.5..1.5f64, py in -1.5..1.5f64, k in 0.5..20.0f64) {
        let (a, b) = (Cx::new(ar, ai), Cx::new(br, bi));
        let d1 = density(c1);
        let d2 = density(c2);
        // combine on a common order range
        let lo = d1.min_order.min(d2.min_order);
        let hi = (d1.min_order + d1.coeffs.len() as i64).max(d2.min_order + d2.coeffs.len() as i64);
        let pick = |d: &FourierDensity<f64>, o: i64| {
            let i = o - d.min_order;
            if i >= 0 && (i as usize) < d.coeffs.len() { d.coeffs[i as usize] } else { Cx::new(0.0, 0.0) }
        };
        let combo = FourierDensity { min_order: lo, coeffs: (lo..hi).map(|o| a * pick(&d1, o) + b * pick(&d2, o)).collect() };
        let x = vec![px, py];
        let v = |d: FourierDensity<f64>| eval_incident(&IncidentWave::herglotz(k, d).unwrap(), std::slice::from_ref(&x)).unwrap()[0];
        let lhs = v(combo);
        let rhs = a * v(d1) + b * v(d2);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()) * 10.0);
    }

    #[test]
    fn herglotz_quadrature_converges_spectrally(c in coeffs(4), k in 1.0..40.0f64, r in 0.05..2.0f64, th in 0.0..2.0 * PI) {
        let d = density(c);
        let x = [r * th.cos(), r * th.sin()];
        let n = herglotz_nodes(k, r, &d);
        prop_assert!(n as f64 >= 8.0 * k * r);
        let a = herglotz_value(k, &d, &x, n);
        let b = herglotz_value(k, &d, &x, 2 * n);
        let size: f64 = d.coeffs.iter().map(|z| z.norm()).sum();
        prop_assert!((a - b).norm() <= 1e-10 * size.max(1.0));
    }

    #[test]
    fn determinant_scaling_is_exact(l in 0usize..5, k in 0.2..10.0f64, n in 1.1..9.0f64, r in 0.3..3.0f64, three in any::<bool>()) {
        let dim = if three { 3 } else { 2 };
        let (a, sa) = te_determinant_raw(dim, r, n, l, k);
        let (b, _) = te_determinant_raw(dim, 2.0 * r, n, l, k / 2.0);
        prop_assert!(a.is_finite());
        prop_assert!((a - 2.0 * b).abs() <= 1e-10 * sa.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jump_probe_is_exactly_symmetric(angle in 0.0..2.0 * PI, tilt in -0.5..0.5f64) {
        let shape = Shape::disk([0.0, 0.0], 1.0).unwrap();
        let g = Grid::covering(&shape, 0.05, DEFAULT_MAX_CELLS).unwrap();
        let m = rasterize(&shape, &Contrast::constant(2.0), &g).unwrap();
        let psi = DensityField::constant(&m, Cx::new(1.0, 0.0)).unwrap();
        let x0 = [angle.cos(), angle.sin()];
        let dir = rotate(x0, tilt);
        let rep = symmetric_jump_probe(&psi, &x0, &dir, &[0.1, 0.05], ProbeOptions::default()).unwrap();
        for k in 0..2 {
            prop_assert_eq!(rep.jump(k, 0, 1), rep.jump(k, 1, 0));
        }
    }
}

#[test]
fn kernel_symmetry_on_many_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let dim = if rng.gen_bool(0.5) { 2 } else { 3 };
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let k = rng.gen_range(0.1..20.0);
        for kind in [KernelKind::Laplace, KernelKind::Helmholtz { k }] {
            let a = kernel(kind, &x, &y, dim).unwrap().value;
            let b = kernel(kind, &y, &x, dim).unwrap().value;
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }
}

#[test]
fn rasterized_area_converges() {
    let shapes: [Shape<f64>; 2] = [
        Shape::disk([0.1, -0.2], 1.0).unwrap(),
        Shape::ellipse([0.0, 0.0], [1.2, 0.6], 0.4).unwrap(),
    ];
    for s in &shapes {
        let exact = s.measure();
        let mut errs = Vec::new();
        for h in [0.04, 0.02, 0.01] {
            let g = Grid::covering(s, h, DEFAULT_MAX_CELLS).unwrap();
            let m = rasterize(s, &Contrast::constant(2.0), &g).unwrap();
            errs.push((m.measure_estimate() - exact).abs());
            let avg = rasterize_averaged(s, &Contrast::constant(2.0), &g, 8).unwrap();
            let vol: f64 = avg.q.iter().map(|q| q - 1.0).sum::<f64>() * h * h;
            assert!(
                (vol - exact).abs() <= 2.0 * h * h,
                "averaged volume at h={h}: {vol} vs {exact}"
            );
        }
        // O(h): the error at h is bounded by a fixed multiple of h
        let c: Vec<f64> = errs.iter().zip([0.04, 0.02, 0.01]).map(|(e, h)| e / h).collect();
        assert!(c.iter().all(|&v| v <= c[0].max(0.5) * 2.0), "{c:?}");
    }
}
