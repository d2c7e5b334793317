use helmscat::geometry::{rasterize_averaged, Contrast, Grid, Shape, DEFAULT_MAX_CELLS};
use helmscat::lippmann::{nonscattering_residual, SolverOptions};
use helmscat::radial::*;
use helmscat::special::bessel_j;
use helmscat::waves::{eval_incident, WaveKind};
use helmscat::Cx;

/// First order-0 root for R = 1, n = 4, frozen from a bisection run.
const FIRST_ROOT_N4: f64 = 3.384194839540;

fn disk4() -> RadialMedium<f64> {
    RadialMedium::new(2, 1.0, 4.0).unwrap()
}

// power series, independent of the library recurrences
fn j_series(order: u32, x: f64) -> f64 {
    let mut term = (x / 2.0).powi(order as i32) / (1..=order).map(f64::from).product::<f64>();
    let mut sum = term;
    for m in 1..80 {
        term *= -(x * x / 4.0) / (m as f64 * (m + order) as f64);
        sum += term;
    }
    sum
}

#[test]
fn first_root_matches_independent_bisection() {
    // J0' = -J1, √n = 2
    let d = |k: f64| 2.0 * k * j_series(0, k) * j_series(1, 2.0 * k) - k * j_series(0, 2.0 * k) * j_series(1, k);
    let (mut a, mut b) = (3.0, 3.6);
    assert!(d(a) * d(b) < 0.0);
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if d(a) * d(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let m = disk4();
    let s = te_spectrum(&m, 0, 0.5, 4.0, m.max_step()).unwrap();
    assert_eq!(s.roots.len(), 1);
    assert!((s.roots[0].k - a).abs() < 1e-8);
    assert!((s.roots[0].k - FIRST_ROOT_N4).abs() < 1e-8);
}

#[test]
fn spectrum_invariants() {
    let m = disk4();
    let s = te_spectrum(&m, 3, 0.5, 12.0, m.max_step()).unwrap();
    assert!(!s.roots.is_empty());
    for w in s.roots.windows(2) {
        assert!(w[0].k <= w[1].k);
    }
    for r in &s.roots {
        assert!(r.residual <= 1e-10 * r.scale, "{r:?}");
        let da = te_determinant(&m, r.order, r.bracket[0]).unwrap();
        let db = te_determinant(&m, r.order, r.bracket[1]).unwrap();
        assert!(da * db < 0.0);
        assert!(r.bracket[0] <= r.k && r.k <= r.bracket[1]);
    }
}

#[test]
fn root_count_grows_with_range() {
    let m = disk4();
    let mut last = 0;
    for kmax in [2.0, 4.0, 6.0, 8.0, 10.0, 12.0] {
        let c = te_spectrum(&m, 3, 0.5, kmax, m.max_step()).unwrap().roots.len();
        assert!(c >= last);
        last = c;
    }
    assert!(last > 5);
}

#[test]
fn narrow_range_without_root_is_empty() {
    let m = disk4();
    let s = te_spectrum(&m, 0, 3.5, 3.6, 0.05).unwrap();
    assert!(s.roots.is_empty());
    assert!(te_spectrum(&m, 0, 3.6, 3.5, 0.05).is_err());
    assert!(te_spectrum(&m, 0, 1.0, 5.0, 1.0).is_err());
}

#[test]
fn scaling_law() {
    let small = disk4();
    let big = RadialMedium::new(2, 2.0, 4.0).unwrap();
    for l in 0..3 {
        for k in [0.7, 2.3, 4.1] {
            let a = te_determinant(&small, l, k).unwrap();
            let b = te_determinant(&big, l, k / 2.0).unwrap();
            assert!((a - 2.0 * b).abs() <= 1e-12 * a.abs().max(1e-3));
        }
    }
    let s1 = te_spectrum(&small, 2, 1.0, 10.0, small.max_step()).unwrap();
    let s2 = te_spectrum(&big, 2, 0.5, 5.0, big.max_step()).unwrap();
    assert_eq!(s1.roots.len(), s2.roots.len());
    for (a, b) in s1.roots.iter().zip(&s2.roots) {
        assert_eq!(a.order, b.order);
        assert!((a.k / 2.0 - b.k).abs() < 1e-8);
    }
}

#[test]
fn three_dimensional_roots_are_sign_changes() {
    let m = RadialMedium::new(3, 1.0, 4.0).unwrap();
    let s = te_spectrum(&m, 2, 0.5, 10.0, m.max_step()).unwrap();
    assert!(!s.roots.is_empty());
    for r in &s.roots {
        assert!(r.residual <= 1e-10 * r.scale);
    }
}

#[test]
fn eigen_incident_is_bessel_mode() {
    let m = disk4();
    let s = te_spectrum(&m, 1, 0.5, 7.0, m.max_step()).unwrap();
    let r0 = s.roots_of_order(0)[0];
    let w0 = eigen_incident(&m, 0, r0.k).unwrap();
    match &w0.kind {
        WaveKind::Herglotz { density } => {
            assert!((density.eval(0.4) - Cx::new(1.0, 0.0)).norm() < 1e-15);
        }
        _ => panic!("not a Herglotz wave"),
    }
    let v = eval_incident(&w0, &[vec![0.3, 0.4]]).unwrap()[0];
    assert!((v - Cx::new(bessel_j(0, 0.5 * r0.k), 0.0)).norm() < 1e-12);

    let r1 = s.roots_of_order(1)[0];
    let w1 = eigen_incident(&m, 1, r1.k).unwrap();
    let x = 0.6;
    let v = eval_incident(&w1, &[vec![x, 0.0], vec![0.0, 0.0]]).unwrap();
    let want = Cx::new(0.0, bessel_j(1, r1.k * x));
    assert!((v[0] - want).norm() < 1e-12);
    assert!(v[1].norm() < 1e-14);

    assert!(eigen_incident(&m, 1, r0.k).is_err());
    assert!(eigen_incident(&m, 0, r0.k + 0.1).is_err());
}

#[test]
fn spectrum_exports() {
    let m = disk4();
    let s = te_spectrum(&m, 1, 0.5, 7.0, m.max_step()).unwrap();
    let mut csv = Vec::new();
    s.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), s.roots.len() + 1);
    assert!(text.starts_with("order,k,residual"));
    let back: TransmissionSpectrum<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn first_root_does_not_scatter() {
    let m = disk4();
    let k = FIRST_ROOT_N4;
    let shape = Shape::disk([0.0, 0.0], 1.0).unwrap();
    let g = Grid::covering(&shape, 0.01, DEFAULT_MAX_CELLS).unwrap();
    let med = rasterize_averaged(&shape, &Contrast::constant(4.0), &g, 8).unwrap();
    let at = |k: f64| {
        let w = helmscat::waves::IncidentWave::herglotz(k, helmscat::waves::FourierDensity::harmonic(0)).unwrap();
        nonscattering_residual(&med, &w, SolverOptions::default()).unwrap()
    };
    let root = at(k);
    assert!(eigen_incident(&m, 0, k).is_ok());
    assert!(root <= 1e-2, "{root}");
    assert!(10.0 * root <= at(k - 0.2).min(at(k + 0.2)));
}
