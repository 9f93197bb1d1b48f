use mathieu_hill::discriminant::{self, CriticalFamily, Window};
use mathieu_hill::{floquet, spectrality, Potential};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[test]
fn free_discriminant_is_two_cos_sqrt() {
    let p = Potential::real(0.0, 0.0);
    for l in [C64::new(3.0, 0.0), C64::new(50.0, 4.0), C64::new(-2.0, 1.0)] {
        let d = discriminant::discriminant_all(&p, l).unwrap();
        let s = l.sqrt();
        assert!((d.f - 2.0 * s.cos()).norm() < 1e-11 * (1.0 + d.f.norm()));
        assert!((d.df + s.sin() / s).norm() < 1e-10 * (1.0 + d.df.norm()));
    }
}

#[test]
fn wronskian_is_one() {
    let p = Potential::new(C64::new(1.0, 2.0), C64::new(-0.5, 0.5)).unwrap();
    for l in [C64::new(10.0, 0.0), C64::new(400.0, -30.0)] {
        let fd = discriminant::fundamental_solutions(&p, l).unwrap();
        assert!((fd.wronskian() - 1.0).norm() < 1e-10);
    }
}

#[test]
fn roots_match_the_matrix_engine() {
    let p = Potential::real(1.0, 2.0);
    let w = Window::new((-50.0, 1500.0), (-50.0, 50.0)).unwrap();
    let t = 1.3;
    let roots = discriminant::eigenvalues_at(&p, t, &w).unwrap();
    let matrix = floquet::eigenvalues(&p, t, 48).unwrap();
    assert!(roots.len() >= 10);
    for r in &roots {
        let f = discriminant::discriminant(&p, r.lambda).unwrap();
        assert!((f - 2.0 * t.cos()).norm() < 1e-8);
        let nearest = matrix.iter().map(|z| (z - r.lambda).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-8 * (1.0 + r.lambda.norm()));
    }
}

#[test]
fn zero_product_has_free_two_periodic_points() {
    // ab = 0: F(λ) = 2cos√λ, so every (πn)² is a critical point with F = ±2
    let p = Potential::real(0.0, 1.0);
    let w = Window::real(1.0, 300.0).unwrap();
    let cps = discriminant::find_critical_points(&p, &w).unwrap();
    for n in 1..=5 {
        let target = (PI * n as f64).powi(2);
        let cp = cps.iter().find(|c| (c.lambda_star - target).norm() < 1e-6 * target).expect("missing critical point");
        assert!(cp.is_two_periodic);
        let family = if n % 2 == 0 { CriticalFamily::Periodic } else { CriticalFamily::Antiperiodic };
        assert_eq!(cp.family, family);
    }
}

#[test]
fn projection_norm_oracles_agree() {
    let p = Potential::real(1.0, 2.0);
    let m = 48;
    for (n, t) in [(1, 0.8), (-2, 2.0), (3, 0.4)] {
        let (lambda, d) = spectrality::dn_eigenvector(&p, n, t, m).unwrap();
        let d = d.unwrap();
        let w = discriminant::dn_via_wronskian(&p, n, t, lambda).unwrap();
        assert!((w - d).abs() < 1e-6, "n={n} t={t}: {w} vs {d}");
    }
}

#[test]
fn window_validation() {
    assert!(Window::new((2.0, 1.0), (0.0, 1.0)).is_err());
    assert!(Window::real(0.0, f64::NAN).is_err());
    let p = Potential::real(1.0, 1.0);
    assert!(discriminant::discriminant(&p, C64::new(2e8, 0.0)).is_err());
}

#[test]
fn t_of_inverts_two_cos() {
    for t in [1e-7, 0.3, 2.0, PI - 1e-7] {
        let back = discriminant::t_of(C64::new(2.0 * f64::cos(t), 0.0));
        assert!((back.re - t).abs() < 1e-9 * (1.0 + t), "{t} {back}");
    }
}
