use mathieu_hill::asymptotics::{self, SeriesKind};
use mathieu_hill::potential::asymptotic_constants;
use mathieu_hill::{floquet, Family, Potential};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[test]
fn pair_formula_tracks_the_engine() {
    let p = Potential::real(1.0, 2.0);
    let m = floquet::truncation_size(&p, 8).unwrap();
    let ts = [1e-3, 0.05, 0.3];
    for family in [Family::Periodic, Family::Antiperiodic] {
        let ts: Vec<f64> = match family {
            Family::Periodic => ts.to_vec(),
            Family::Antiperiodic => ts.iter().map(|t| PI - t).collect(),
        };
        for row in asymptotics::compare_with_engine(&p, 6, &ts, family, m).unwrap() {
            assert!(row.rel_err < 1e-8, "{family:?} t={} rel_err={:e}", row.t, row.rel_err);
        }
    }
}

#[test]
fn error_shrinks_with_n() {
    let p = Potential::new(C64::new(1.0, 1.0), C64::new(2.0, -1.0)).unwrap();
    let m = floquet::truncation_size(&p, 9).unwrap();
    let err = |n: i64| {
        asymptotics::compare_with_engine(&p, n, &[0.02], Family::Periodic, m).unwrap().iter().map(|r| r.abs_err).fold(0.0, f64::max)
    };
    assert!(err(8) <= err(2).max(1e-10));
}

#[test]
fn characteristic_product_matches_constants() {
    let p = Potential::real(1.0, 2.0);
    for n in [4, 8] {
        let lambda = C64::new((2.0 * PI * n as f64).powi(2), 0.0);
        let d = asymptotics::D_of(&p, n, lambda, 1e-4, Family::Periodic).unwrap();
        assert!(d.product_defect.abs() < 10.0 / (n * n) as f64, "n={n} defect={}", d.product_defect);
        let c = asymptotic_constants(&p, n as u32);
        let beta = c.beta_n.to_complex();
        assert!((d.b.to_complex() - beta).norm() <= 0.5 * beta.norm());
    }
}

#[test]
fn series_terms_vanish_below_leading_order() {
    let p = Potential::real(1.0, 1.0);
    let n = 3;
    let lambda = C64::new((2.0 * PI * n as f64).powi(2) + 0.1, 0.05);
    let (_, b) = asymptotics::walk_terms(&p, n, lambda, 0.01, SeriesKind::new(Family::Periodic, false), 9).unwrap();
    let lead = asymptotics::leading_order(n, Family::Periodic);
    assert!(b[..lead - 1].iter().all(|z| z.norm() == 0.0));
    assert!(b[lead - 1].norm() > 0.0);
    let exact = asymptotics::b_series_leading(&p, n, lambda, 0.01, SeriesKind::new(Family::Periodic, false)).unwrap();
    assert!((exact.value - b[lead - 1]).norm() < 1e-12 * b[lead - 1].norm());
}

#[test]
fn pole_proximity_is_reported() {
    let p = Potential::real(1.0, 1.0);
    let lambda = C64::new((2.0 * PI * 2.0 + 0.1).powi(2), 0.0);
    let r = asymptotics::a_series(&p, 3, lambda, 0.1, SeriesKind::new(Family::Periodic, false), 5);
    assert!(matches!(r, Err(mathieu_hill::Error::PoleProximity { .. })));
}

#[test]
fn degeneracy_predictions() {
    // βα > 0 for ab = 1: −βα points away from the real axis, no real degeneracy
    let none = asymptotics::predict_double(&Potential::real(1.0, 1.0), 2, Family::Periodic).unwrap();
    assert!(none.t_pred.is_none());
    let p = Potential::real(1.0, -1.0);
    let some = asymptotics::predict_double(&p, 1, Family::Antiperiodic).unwrap();
    let t = some.t_pred.unwrap();
    let c = asymptotic_constants(&p, 1);
    let expect = c.product(Family::Antiperiodic).neg().to_complex().re.sqrt() / (6.0 * PI);
    assert!((t - expect).abs() < 1e-12 * expect);
    assert_eq!(some.sensitivity.len(), 3);
    assert!(asymptotics::predict_double(&p, 0, Family::Periodic).is_err());
}

#[test]
fn branch_index_is_validated() {
    let p = Potential::real(1.0, 1.0);
    assert!(asymptotics::asymptotic_lambda(&p, 3, 0.1, 3, Family::Periodic).is_err());
}
