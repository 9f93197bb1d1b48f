use mathieu_hill::discriminant::{CriticalFamily, Window};
use mathieu_hill::spectrality::{self, ExpansionForm, Method};
use mathieu_hill::{floquet, Potential, TriState};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[test]
fn rank_labels_interleave() {
    let ranks: Vec<usize> = [0, -1, 1, -2, 2, -3].iter().map(|&n| spectrality::rank_of(n)).collect();
    assert_eq!(ranks, vec![0, 1, 2, 3, 4, 5]);
}

#[test]
fn self_adjoint_projection_is_one() {
    let p = Potential::new(C64::new(1.0, 0.5), C64::new(1.0, -0.5)).unwrap();
    let grid = floquet::uniform_grid(32);
    let prof = spectrality::dn_profile(&p, 2, &grid).unwrap();
    for s in prof.by_method(Method::Eigenvector) {
        assert!((s.abs_d - 1.0).abs() < 1e-12);
    }
    assert!((prof.sup_inverse - 1.0).abs() < 1e-12);
}

#[test]
fn profile_is_even_and_methods_agree() {
    let p = Potential::real(1.0, 2.0);
    let grid: Vec<f64> = [0.3, 1.0, 2.5].iter().flat_map(|&t| [t, -t]).collect();
    let prof = spectrality::dn_profile_with(&p, 1, &grid, 48, 1).unwrap();
    let e: Vec<f64> = prof.by_method(Method::Eigenvector).map(|s| s.abs_d).collect();
    for pair in e.chunks(2) {
        assert!((pair[0] - pair[1]).abs() < 1e-12);
    }
    for (_, a, b) in prof.paired() {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn self_adjoint_integral_is_interval_length() {
    let p = Potential::new(C64::new(1.0, 0.5), C64::new(1.0, -0.5)).unwrap();
    let rep = spectrality::integral_inverse_dn(&p, 1, (0.2, 2.8), 1e-6).unwrap();
    assert!((rep.value - 2.6).abs() < 1e-6, "{}", rep.value);
    assert!(!rep.divergence_flag);
}

#[test]
fn zero_product_singularity_at_first_antiperiodic_point() {
    let p = Potential::real(0.0, 1.0);
    let rep = spectrality::detect_singularities(&p, &Window::real(1.0, 60.0).unwrap()).unwrap();
    let e = rep.ess.iter().find(|e| (e.lambda - PI * PI).norm() < 1e-6).expect("λ = π² entry");
    assert_eq!(e.family, CriticalFamily::Antiperiodic);
    assert_eq!((e.algebraic_multiplicity, e.geometric_multiplicity), (2, 1));
    assert!(e.is_ess);
}

#[test]
fn expansion_forms() {
    assert_eq!(ExpansionForm::of(&Potential::real(0.0, 0.0)), ExpansionForm::Elegant);
    assert_eq!(ExpansionForm::of(&Potential::real(0.5, 0.5)), ExpansionForm::Elegant);
    assert_eq!(ExpansionForm::of(&Potential::real(2.0, 3.0)), ExpansionForm::AsymptoticallyElegant);
    assert_eq!(ExpansionForm::of(&Potential::real(0.0, 5.0)), ExpansionForm::Gasymov);
}

#[test]
fn free_operator_classification() {
    let rep = spectrality::classify_operator(&Potential::real(0.0, 0.0), None).unwrap();
    assert!(rep.self_adjoint);
    assert_eq!(rep.expansion_form, ExpansionForm::Elegant);
    assert_eq!(rep.ess_at_infinity, TriState::Fails);
}

#[test]
fn regions_are_nested() {
    let p = Potential::real(1.0, 2.0);
    let r = spectrality::region_decomposition(&p, 3).unwrap();
    assert!(r.i1.lo == 0.0 && r.i1.hi <= r.i2.hi && r.i2.hi <= r.i3.hi);
    assert!(r.i4.lo == r.i3.lo && r.i4.hi <= r.i3.hi);
    assert!(spectrality::region_decomposition(&p, 1).is_err());
    assert!(spectrality::region_decomposition(&Potential::real(0.0, 0.0), 3).is_err());
    let deep = spectrality::region_decomposition(&p, 60).unwrap();
    assert!(!deep.notices.is_empty());
}
