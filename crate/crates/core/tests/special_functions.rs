//! Bessel-family values against a frozen 40-digit reference table
//! (`tests/data/bessel_reference.csv`, generated with mpmath).

use helmscat::special::{bessel_j_seq, bessel_y_seq, hankel1, sph_bessel_j_seq, sph_bessel_y_seq};

struct Row {
    n: usize,
    x: f64,
    j: f64,
    y: f64,
    sj: f64,
    sy: f64,
}

fn table() -> Vec<Row> {
    let text = include_str!("data/bessel_reference.csv");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Row {
                n: f[0].parse().unwrap(),
                x: f[1].parse().unwrap(),
                j: f[2].parse().unwrap(),
                y: f[3].parse().unwrap(),
                sj: f[4].parse().unwrap(),
                sy: f[5].parse().unwrap(),
            }
        })
        .collect()
}

/// Relative error measured against the oscillation envelope in the
/// oscillatory regime (pointwise relative error is meaningless at zeros).
fn scaled_err(got: f64, want: f64, envelope: f64) -> f64 {
    (got - want).abs() / want.abs().max(envelope)
}

#[test]
fn cylindrical_against_reference() {
    let mut worst = 0.0f64;
    for r in table() {
        let env = if r.x > r.n as f64 {
            (2.0 / (std::f64::consts::PI * r.x)).sqrt()
        } else {
            0.0
        };
        let j = bessel_j_seq(r.n, r.x)[r.n];
        let y = bessel_y_seq(r.n, r.x)[r.n];
        let ej = scaled_err(j, r.j, env);
        let ey = scaled_err(y, r.y, env);
        assert!(ej <= 1e-10, "J_{}({}) = {j}, want {} (err {ej:e})", r.n, r.x, r.j);
        assert!(ey <= 1e-10, "Y_{}({}) = {y}, want {} (err {ey:e})", r.n, r.x, r.y);
        let h = hankel1(r.n, r.x);
        assert_eq!(h.re, j);
        assert_eq!(h.im, y);
        worst = worst.max(ej).max(ey);
    }
    eprintln!("worst scaled error (cylindrical): {worst:e}");
}

#[test]
fn spherical_against_reference() {
    for r in table() {
        let env = if r.x > r.n as f64 { 1.0 / r.x } else { 0.0 };
        let sj = sph_bessel_j_seq(r.n, r.x)[r.n];
        let sy = sph_bessel_y_seq(r.n, r.x)[r.n];
        let ej = scaled_err(sj, r.sj, env);
        let ey = scaled_err(sy, r.sy, env);
        assert!(ej <= 1e-10, "j_{}({}) = {sj}, want {} (err {ej:e})", r.n, r.x, r.sj);
        assert!(ey <= 1e-10, "y_{}({}) = {sy}, want {} (err {ey:e})", r.n, r.x, r.sy);
    }
}

#[test]
fn crossover_is_seamless() {
    // values on either side of the asymptotic switch agree with a smooth interpolant
    let t = helmscat::special::asymptotic_threshold::<f64>();
    let eps = 1e-9;
    for n in 0..5 {
        let a = bessel_y_seq(n, t - eps)[n];
        let b = bessel_y_seq(n, t + eps)[n];
        assert!((a - b).abs() < 1e-8, "n={n}");
    }
}
