mod common;

use proptest::prelude::*;
use ribbonlim::quadratic_forms::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn alphas_keep_the_pencil_nonnegative(c in common::spd(), ms in prop::collection::vec(common::voigt(3.0), 1000)) {
        let a = alpha_constants(&c).unwrap();
        for m in ms {
            let q = quad(&c, m);
            let d = det_form(m);
            prop_assert!(q + a.plus * d >= -1e-9 * m.dot(&m));
            prop_assert!(q - a.minus * d >= -1e-9 * m.dot(&m));
        }
    }

    #[test]
    fn alphas_are_maximal(c in common::spd()) {
        let a = alpha_constants(&c).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let lmin = nalgebra::SymmetricEigen::new(pencil(&c, sign, a.get(sign) + 0.01)).eigenvalues.min();
            prop_assert!(lmin < 0.0);
        }
    }

    #[test]
    fn kernel_directions_have_the_expected_sign(c in common::spd()) {
        let a = alpha_constants(&c).unwrap();
        if let Ok(k) = kernel_direction(&c, &a, Sign::Plus) {
            prop_assert!(det_form(k) < 0.0);
        }
        if let Ok(k) = kernel_direction(&c, &a, Sign::Minus) {
            prop_assert!(det_form(k) > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn orthotropic_closed_form_matches_bisection((k11, k12, k22, k33) in common::orthotropic()) {
        let closed = orthotropic_alphas(k11, k12, k22, k33).unwrap();
        let c = Rigidity::orthotropic(k11, k12, k22, k33).unwrap();
        let bisected = alpha_constants(&c).unwrap();
        prop_assert!((closed.plus - bisected.plus).abs() <= 1e-9);
        prop_assert!((closed.minus - bisected.minus).abs() <= 1e-9);
    }
}

#[test]
fn isotropic_constants() {
    let a = alpha_constants(&Rigidity::isotropic(1.0, 1.0).unwrap()).unwrap();
    assert!((a.plus - 2.0).abs() <= 1e-9);
    assert!((a.minus - 6.0).abs() <= 1e-9);
    let a = alpha_constants(&Rigidity::sadowsky()).unwrap();
    assert!((a.plus - 2.0).abs() <= 1e-9 && (a.minus - 2.0).abs() <= 1e-9);
}

#[test]
fn general_anisotropy_is_supported() {
    // coupling between bending and twist entries
    let c = Rigidity::from_voigt_entries([2.0, 0.4, 0.3, 1.5, -0.2, 0.6]).unwrap();
    let a = alpha_constants(&c).unwrap();
    for sign in [Sign::Plus, Sign::Minus] {
        let lmin = nalgebra::SymmetricEigen::new(pencil(&c, sign, a.get(sign))).eigenvalues.min();
        assert!(lmin.abs() < 1e-9);
    }
}
