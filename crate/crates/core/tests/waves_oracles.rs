use helmscat::special::bessel_j;
use helmscat::waves::*;
use helmscat::Cx;
use std::f64::consts::PI;

#[test]
fn constant_density_is_j0() {
    let w = IncidentWave::herglotz(7.0f64, FourierDensity::constant(Cx::new(1.0, 0.0))).unwrap();
    for r in [0.1, 0.9, 1.7] {
        let x = vec![r * 0.6, -r * 0.8];
        let v = eval_incident(&w, &[x]).unwrap()[0];
        let want = bessel_j(0, 7.0 * r);
        assert!((v.re - want).abs() <= 1e-8 * want.abs().max(1e-3) && v.im.abs() < 1e-12);
    }
}

#[test]
fn origin_value_is_mean_density() {
    let d = FourierDensity {
        min_order: -2,
        coeffs: vec![Cx::new(0.3, 1.0), Cx::new(0.0, 0.0), Cx::new(0.7, -0.2)],
    };
    let w = IncidentWave::herglotz(3.0, d).unwrap();
    let v = eval_incident(&w, &[vec![0.0, 0.0]]).unwrap()[0];
    assert!((v - Cx::new(0.7, -0.2)).norm() < 1e-14);
}

#[test]
fn harmonic_density_is_bessel_mode() {
    // (1/2π)∮ e^{iℓθ} e^{ikr cos(θ-α)} dθ = i^ℓ J_ℓ(kr) e^{iℓα}
    let l = 3;
    let w = IncidentWave::herglotz(4.0, FourierDensity::harmonic(l)).unwrap();
    let (r, a) = (0.8f64, 0.7f64);
    let v = eval_incident(&w, &[vec![r * a.cos(), r * a.sin()]]).unwrap()[0];
    let want = Cx::new(0.0, 1.0).powi(l as i32) * bessel_j(l as usize, 3.2) * Cx::from_polar(1.0, l as f64 * a);
    assert!((v - want).norm() < 1e-12);
}

#[test]
fn helmholtz_residuals_within_truncation_bound() {
    let k = 5.0f64;
    let h = 1e-3;
    let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 * i as f64, 0.3 - 0.05 * i as f64]).collect();
    let bound = k.powi(4) * h * h / 12.0 * 2.0;
    let p = IncidentWave::plane(k, vec![0.6, 0.8]).unwrap();
    assert!(verify_helmholtz(&p, &pts, h).unwrap() <= bound.max(1e-3));
    let hg = IncidentWave::herglotz(k, FourierDensity::constant(Cx::new(1.0, 0.0))).unwrap();
    assert!(verify_helmholtz(&hg, &pts, h).unwrap() <= 1e-3);
    let src = IncidentWave::point_source(k, vec![3.0, 3.0]).unwrap();
    assert!(verify_helmholtz(&src, &pts, h).unwrap() <= 1e-3);
}

#[test]
fn stationary_phase_remainder_decays() {
    let d = FourierDensity::constant(Cx::new(1.0, 0.0));
    let mut last = f64::INFINITY;
    for k in [10.0f64, 20.0, 40.0, 80.0] {
        // the next term oscillates like sin(k|z| - π/4)/(8k|z|): take the
        // envelope over one period in |z|
        let mut env = 0.0f64;
        for j in 0..32 {
            let r = 1.0 + 2.0 * PI / k * j as f64 / 32.0;
            let res = stationary_phase_farfield(&d, k, &[r, 0.0]).unwrap();
            env = env.max(res.residual);
            let asym = (2.0 / (PI * k * r)).sqrt() * (k * r - PI / 4.0).cos();
            assert!((res.approx.re - asym).abs() < 1e-12 && res.approx.im.abs() < 1e-12);
            assert!((res.direct.re - bessel_j(0, k * r)).abs() < 1e-10);
        }
        let scaled = env * k.sqrt();
        assert!(scaled < last, "k={k}: {scaled} !< {last}");
        last = scaled;
    }
}

#[test]
fn stationary_phase_reflection() {
    let d = FourierDensity {
        min_order: 0,
        coeffs: vec![Cx::new(1.0, 0.0), Cx::new(0.2, 0.4)],
    };
    let z = [0.6f64, 0.9];
    let a = stationary_phase_farfield(&d, 12.0, &z).unwrap();
    let b = stationary_phase_farfield(&d, 12.0, &[-z[0], -z[1]]).unwrap();
    // exchanging θ_z and θ_z+π swaps the two terms
    let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
    let th = z[1].atan2(z[0]);
    let amp = 1.0 / (2.0 * PI * 12.0 * r).sqrt();
    let e = |t: f64| Cx::from_polar(1.0, t);
    let swapped = (e(-PI / 4.0) * d.eval(th + PI) * e(12.0 * r) + e(PI / 4.0) * d.eval(th) * e(-12.0 * r)) * amp;
    assert!((b.approx - swapped).norm() < 1e-14);
    assert!(a.residual.is_finite());
    assert!(stationary_phase_farfield(&d, 12.0, &[0.0, 0.0]).is_err());
}

#[test]
fn pair_residual_examples() {
    let d = FourierDensity::constant(Cx::new(1.0, 0.0));
    let r = nonscattering_pair_residual(&d, 1.0, &[vec![PI / 4.0, 0.0], vec![0.0, 3.0 * PI / 4.0]]).unwrap();
    assert!((r[0] - 2.0).abs() < 1e-14);
    assert!(r[1] < 1e-14);
    let d = FourierDensity::harmonic(1);
    for j in 0..12 {
        let t = 2.0 * PI * j as f64 / 12.0;
        let z = vec![t.cos(), t.sin()];
        let got = nonscattering_pair_residual(&d, 2.5, &[z]).unwrap()[0];
        let want = (Cx::from_polar(1.0, t) * Cx::from_polar(1.0, 5.0)
            + Cx::new(0.0, 1.0) * Cx::from_polar(1.0, t + PI))
        .norm();
        assert!((got - want).abs() < 1e-12);
    }
}
