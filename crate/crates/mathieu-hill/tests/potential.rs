use mathieu_hill::potential::{
    alpha_input_of, alpha_of, asymptotic_constants, check_diophantine, ln_factorial, parse_complex, AlphaInput,
};
use mathieu_hill::{LogComplex64, Potential, Rational, TriState};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Brute force: some q in 1..=limit with mult(q)·α an odd integer.
fn brute_fails(r: Rational, mult: impl Fn(u64) -> u64, limit: u64) -> bool {
    let (m, qd) = (r.m.unsigned_abs(), r.q as u64);
    (1..=limit).any(|q| {
        let k = mult(q) * m;
        k % qd == 0 && (k / qd) % 2 == 1
    })
}

fn verdict(fails: bool) -> TriState {
    if fails {
        TriState::Fails
    } else {
        TriState::Holds
    }
}

proptest! {
    #[test]
    fn diophantine_matches_brute_force(m in -100i64..=100, q in 1i64..=50) {
        let r = Rational::new(m, q).unwrap();
        let v = check_diophantine(AlphaInput::Exact(r), 1000).unwrap();
        prop_assert_eq!(v.condition8, verdict(brute_fails(r, |q| q, 400)));
        prop_assert_eq!(v.condition100, verdict(brute_fails(r, |q| 2 * q, 400)));
        prop_assert_eq!(v.condition104, verdict(brute_fails(r, |q| 2 * q + 1, 400)));
        if let Some((wq, p)) = v.witness {
            prop_assert_eq!(wq as i64 * r.m.abs(), (2 * p - 1) * r.q);
        }
    }

    #[test]
    fn log_complex_round_trip(re in -1e3f64..1e3, im in -1e3f64..1e3) {
        prop_assume!(re.hypot(im) > 1e-12);
        let z = C64::new(re, im);
        let back = LogComplex64::from_complex(z).to_complex();
        prop_assert!((back - z).norm() <= 1e-13 * z.norm());
    }

    #[test]
    fn log_complex_product_and_quotient(a in -5.0f64..5.0, pa in -4.0f64..4.0, b in -5.0f64..5.0, pb in -4.0f64..4.0) {
        let (x, y) = (LogComplex64::new(a, pa), LogComplex64::new(b, pb));
        let (zx, zy) = (x.to_complex(), y.to_complex());
        prop_assert!((x.mul(&y).to_complex() - zx * zy).norm() <= 1e-12 * (zx * zy).norm());
        prop_assert!((x.div(&y).to_complex() - zx / zy).norm() <= 1e-12 * (zx / zy).norm());
        prop_assert!(x.mul(&y).phase.abs() <= PI);
    }

    #[test]
    fn beta_ratio_recurrence(br in -3.0f64..3.0, bi in -3.0f64..3.0, n in 1u32..40) {
        prop_assume!(br.hypot(bi) > 1e-3);
        let b = C64::new(br, bi);
        let p = Potential::new(C64::new(1.0, 0.0), b).unwrap();
        let (c0, c1) = (asymptotic_constants(&p, n), asymptotic_constants(&p, n + 1));
        let ratio = c1.beta_n.div(&c0.beta_n);
        let k = (2 * n) as f64 * (2 * n + 1) as f64;
        let expect = LogComplex64::from_complex(b * b).div(&LogComplex64::new(4.0 * (2.0 * PI).ln() + 2.0 * k.ln(), 0.0));
        prop_assert!((ratio.log_magnitude - expect.log_magnitude).abs() <= 1e-10 * (1.0 + expect.log_magnitude.abs()));
        let dphase = mathieu_hill::potential::wrap_phase(ratio.phase - expect.phase);
        prop_assert!(dphase.abs() <= 1e-10);
    }

    #[test]
    fn parse_complex_round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let s = format!("{re}{}{}i", if im < 0.0 { "-" } else { "+" }, im.abs());
        prop_assert_eq!(parse_complex(&s).unwrap(), C64::new(re, im));
    }
}

#[test]
fn constants_of_unit_product() {
    let p = Potential::real(1.0, 1.0);
    let c = asymptotic_constants(&p, 1);
    // β_1 = b²/((2π)²·1!²)
    assert!((c.beta_n.to_complex() - C64::new(1.0 / (4.0 * PI * PI), 0.0)).norm() < 1e-15);
    // β̃_1 = b³/((2π)²·2!)²
    assert!((c.tilde_beta_n.to_complex() - C64::new(1.0 / (64.0 * PI.powi(4)), 0.0)).norm() < 1e-15);
    let c0 = asymptotic_constants(&p, 0);
    assert!(c0.beta_n.is_zero());
    assert!((c0.tilde_beta_n.to_complex() - C64::new(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn large_index_constants_stay_finite() {
    let p = Potential::real(2.0, 3.0);
    let c = asymptotic_constants(&p, 500);
    assert!(c.beta_n.log_magnitude.is_finite() && c.beta_n.log_magnitude < -1e4);
    assert!(c.beta_n.to_complex().norm() == 0.0);
}

#[test]
fn alpha_of_products() {
    assert_eq!(alpha_of(&Potential::real(1.0, 1.0)).unwrap(), 0.0);
    assert_eq!(alpha_of(&Potential::real(1.0, -1.0)).unwrap(), 1.0);
    let i = Potential::new(C64::new(1.0, 0.0), C64::new(0.0, -2.0)).unwrap();
    assert!((alpha_of(&i).unwrap() + 0.5).abs() < 1e-15);
    assert!(alpha_of(&Potential::real(0.0, 1.0)).is_err());
    assert_eq!(alpha_input_of(&Potential::real(1.0, -1.0)).unwrap(), AlphaInput::Exact(Rational::new(1, 1).unwrap()));
}

#[test]
fn float_alpha_is_undecided() {
    let v = check_diophantine(AlphaInput::Float(2f64.sqrt() - 1.0), 10_000).unwrap();
    assert_eq!(v.condition8, TriState::UndecidedFloat);
    let d = v.float_diagnostic.unwrap();
    assert!(d.min_distance > 0.0 && !d.decay_profile.is_empty());
    assert!(check_diophantine(AlphaInput::Float(0.3), 0).is_err());
    assert!(check_diophantine(AlphaInput::Float(f64::NAN), 10).is_err());
}

#[test]
fn ln_factorial_small() {
    assert_eq!(ln_factorial(0), 0.0);
    assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-12);
}

#[test]
fn scalar_generic_single_precision() {
    let p = mathieu_hill::Potential32::real(1.0, 2.0);
    let c = asymptotic_constants(&p, 3);
    let d = asymptotic_constants(&Potential::real(1.0, 2.0), 3);
    assert!((c.beta_n.log_magnitude as f64 - d.beta_n.log_magnitude).abs() < 1e-4);
}

#[test]
fn bad_literals_rejected() {
    for s in ["", "1+", "abc", "1+2j"] {
        assert!(parse_complex(s).is_err(), "{s}");
    }
    assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
    assert_eq!(parse_complex("1e-3+2i").unwrap(), C64::new(1e-3, 2.0));
    assert!("3/0".parse::<Rational>().is_err());
    assert_eq!("-4/6".parse::<Rational>().unwrap(), Rational::new(-2, 3).unwrap());
}
