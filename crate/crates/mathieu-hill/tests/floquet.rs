use mathieu_hill::floquet::{self, free_value};
use mathieu_hill::{Family, Potential};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn pot(a: C64, b: C64) -> Potential {
    Potential::new(a, b).unwrap()
}

/// Greedy matching distance between two spectra, relative to 1 + |λ|.
fn spectral_distance(x: &[C64], y: &[C64], cap: f64) -> f64 {
    x.iter()
        .filter(|z| z.norm() <= cap)
        .map(|z| y.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min) / (1.0 + z.norm()))
        .fold(0.0, f64::max)
}

#[test]
fn free_bands_are_parabolas() {
    let p = Potential::real(0.0, 0.0);
    let bands: Vec<i64> = (-4..=4).collect();
    let ts = floquet::uniform_grid(16);
    let set = floquet::track_curves(&p, &ts, &bands, 32).unwrap();
    for &n in &bands {
        for (i, &t) in ts.iter().enumerate() {
            assert!((set.value(n, i) - free_value(n, t.abs())).norm() < 1e-9, "n={n} t={t}");
        }
    }
}

#[test]
fn curves_are_even_in_t() {
    let p = pot(C64::new(1.0, 0.3), C64::new(2.0, -0.5));
    let m = floquet::truncation_size(&p, 5).unwrap();
    for t in [0.2, 1.1, 2.9] {
        for n in -5..=5 {
            let l = floquet::band_value(&p, n, t, m).unwrap();
            let r = floquet::band_value(&p, n, -t, m).unwrap();
            assert!((l - r).norm() <= 1e-9 * (1.0 + l.norm()));
        }
    }
}

#[test]
fn residuals_and_truncation_stability() {
    let p = Potential::real(1.0, 2.0);
    let m = floquet::truncation_size(&p, 6).unwrap();
    let op = floquet::assemble(&p, 0.7, m).unwrap();
    let a = floquet::eig(&op).unwrap();
    let scale = op.tri().inf_norm();
    let worst = a.residuals.iter().cloned().fold(0.0, f64::max);
    assert!(worst <= 1e-10 * scale, "{worst:e} vs {scale:e}");
    let cap = (2.0 * PI * 6.0 + PI).powi(2);
    let b = floquet::eigenvalues(&p, 0.7, m + 20).unwrap();
    assert!(spectral_distance(&a.lambdas, &b, cap) < 1e-9);
}

#[test]
fn adjoint_spectrum_is_conjugate() {
    let p = pot(C64::new(0.5, 1.0), C64::new(-1.0, 0.25));
    let m = 40;
    let sol = floquet::eig(&floquet::assemble(&p, 0.4, m).unwrap()).unwrap();
    let adj = floquet::adjoint_solution(&p, 0.4, m).unwrap();
    let conj: Vec<C64> = sol.lambdas.iter().map(|z| z.conj()).collect();
    assert!(spectral_distance(&conj, &adj.lambdas, 1e4) < 1e-10);
}

#[test]
fn bloch_function_solves_the_equation() {
    let p = Potential::real(1.0, 2.0);
    let (psi, _) = floquet::bloch_function(&p, 0.9, 3, Family::Periodic, 48).unwrap();
    // −Ψ'' + qΨ − λΨ by central differences at a few points
    let h = 1e-4;
    for x in [0.1, 0.45, 0.8] {
        let d2 = (psi.eval(x + h) - psi.eval(x) * 2.0 + psi.eval(x - h)) / (h * h);
        let r = -d2 + p.eval(x) * psi.eval(x) - psi.lambda * psi.eval(x);
        assert!(r.norm() < 1e-3 * psi.lambda.norm(), "{}", r.norm());
    }
    // quasi-periodicity Ψ(x+1) = e^{it}Ψ(x)
    let z = psi.eval(1.3) - C64::from_polar(1.0, 0.9) * psi.eval(0.3);
    assert!(z.norm() < 1e-12);
}

#[test]
fn dominant_coefficient_far_from_the_pair_point() {
    let p = Potential::real(1.0, 1.0);
    let (psi, _) = floquet::bloch_function(&p, PI / 2.0, 6, Family::Periodic, 48).unwrap();
    assert!(psi.u.norm() > 1.0 - 1e-4);
    assert!(psi.tail_norm < 1e-2);
}

#[test]
fn rejects_bad_input() {
    let p = Potential::real(1.0, 1.0);
    assert!(floquet::assemble(&p, f64::NAN, 10).is_err());
    assert!(Potential::new(C64::new(f64::INFINITY, 0.0), C64::new(1.0, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_depends_only_on_product(ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0,
                                        theta in -PI..PI, t in -3.0f64..3.0) {
        let a = C64::new(ar, ai);
        let b = C64::new(br, bi);
        let rot = C64::from_polar(1.0, theta);
        let m = 36;
        let x = floquet::eigenvalues(&pot(a, b), t, m).unwrap();
        let y = floquet::eigenvalues(&pot(a * rot, b / rot), t, m).unwrap();
        prop_assert!(spectral_distance(&x, &y, 2000.0) < 1e-9);
    }

    #[test]
    fn translation_keeps_the_spectrum(c in 0.0f64..1.0, t in -3.0f64..3.0) {
        let p = pot(C64::new(1.0, 0.5), C64::new(0.3, -1.0));
        let x = floquet::eigenvalues(&p, t, 36).unwrap();
        let y = floquet::eigenvalues(&p.translated(c), t, 36).unwrap();
        prop_assert!(spectral_distance(&x, &y, 2000.0) < 1e-9);
    }
}
