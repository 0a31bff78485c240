#![allow(dead_code)]

use nalgebra::Matrix3;
use proptest::prelude::*;
use ribbonlim::quadratic_forms::{Rigidity, Voigt3};

/// Random SPD rigidity `AᵀA + δI`.
pub fn spd() -> impl Strategy<Value = Rigidity> {
    (prop::array::uniform9(-2.0..2.0f64), 0.05..1.0f64).prop_map(|(a, delta)| {
        let a = Matrix3::from_row_slice(&a);
        Rigidity::from_matrix(a.transpose() * a + Matrix3::identity() * delta).unwrap()
    })
}

pub fn voigt(scale: f64) -> impl Strategy<Value = Voigt3> {
    prop::array::uniform3(-scale..scale).prop_map(|v| Voigt3::new(v[0], v[1], v[2]))
}

/// Orthotropic parameters with `K12² < K11 K22` and `K33 > 0`.
pub fn orthotropic() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.2..3.0f64, 0.2..3.0f64, -0.95..0.95f64, 0.05..2.0f64)
        .prop_map(|(k11, k22, r, k33)| (k11, r * (k11 * k22).sqrt(), k22, k33))
}

/// Orthotropic parameters with `4 K33 ≥ 2(√(K11 K22) − K12)`.
pub fn orthotropic_stiff_shear() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (orthotropic(), 1.0..2.0f64).prop_map(|((k11, k12, k22, _), f)| {
        let k33 = f * 0.5 * ((k11 * k22).sqrt() - k12);
        (k11, k12, k22, k33)
    })
}

pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let d = (n - 1) as f64;
    (0..n).map(|i| (lo * (d - i as f64) + hi * i as f64) / d).collect()
}

pub fn random_spd(rng: &mut impl rand::Rng) -> Rigidity {
    let a = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
    let delta = rng.gen_range(0.05..1.0);
    Rigidity::from_matrix(a.transpose() * a + Matrix3::identity() * delta).unwrap()
}
